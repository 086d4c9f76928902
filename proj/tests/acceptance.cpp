// Runs every acceptance criterion at full size and prints one PASS/FAIL line
// per criterion followed by its individual checks.

#include "mfm/verify.hpp"

#include <cstdlib>
#include <cstring>
#include <iostream>

int main(int argc, char** argv) {
  mfm::verify::VerifyOptions options;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--quick") == 0) options.quick = true;
  int failed = 0;
  for (int id : mfm::verify::suite_criteria("all")) {
    const auto result = mfm::verify::run_criterion(id, options);
    std::cout << mfm::verify::format(result) << std::flush;
    failed += !result.passed();
  }
  std::cout << (failed ? "FAIL" : "PASS") << ": " << 9 - failed << " of 9 criteria passed\n";
  return failed ? EXIT_FAILURE : EXIT_SUCCESS;
}
