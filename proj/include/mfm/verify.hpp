// Acceptance checks shared by the command-line `verify` subcommand and the
// acceptance test binary. Each criterion reports gating checks and
// informational lines.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mfm::verify {

struct Check {
  std::string label;
  bool passed = true;
  bool gating = true;  // informational lines never fail a criterion
  std::string detail;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  std::vector<Check> checks;
  double seconds = 0.0;

  bool passed() const;
};

struct VerifyOptions {
  bool quick = false;  // reduced volumes and replica counts
  std::uint64_t seed = 20261016;
};

CriterionResult gibbs_oracle(const VerifyOptions& options);           // 1
CriterionResult covariance_consistency(const VerifyOptions& options); // 2
CriterionResult degenerate_support(const VerifyOptions& options);     // 3
CriterionResult gaussian_region_weights(const VerifyOptions& options);// 4
CriterionResult product_kernels(const VerifyOptions& options);        // 5
CriterionResult gibbs_ratio_limit(const VerifyOptions& options);      // 6
CriterionResult degenerate_metastate(const VerifyOptions& options);   // 7
CriterionResult clt_independence(const VerifyOptions& options);       // 8
CriterionResult property_suite(const VerifyOptions& options);         // 9

CriterionResult run_criterion(int id, const VerifyOptions& options);

// Suite names: gibbs, covariance, degenerate, theorem1, theorem2, theorem3,
// clt, properties, all. Throws ConfigError for anything else.
std::vector<int> suite_criteria(const std::string& suite);

// "PASS [n] name (t s)" followed by indented check lines.
std::string format(const CriterionResult& result);

}  // namespace mfm::verify
