// JSON and CSV serialization for chains, models, covariances and estimates.
#pragma once

#include "mfm/gibbs.hpp"
#include "mfm/markov.hpp"
#include "mfm/meanfield.hpp"
#include "mfm/metastate.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace mfm::io {

using Json = nlohmann::ordered_json;

// {"states": ["1","2","3"], "rows": [[...], ...]}
markov::TransitionMatrix chain_from_json(const Json& j);
Json chain_to_json(const markov::TransitionMatrix& m);

// "degenerate:p", "iid:uniform", "iid:r1,r2,...", "doubly:a,b,c,d",
// "matrix:r11,r12,...;r21,...", or a path to a chain JSON file. Throws
// ConfigError on anything else.
markov::TransitionMatrix resolve_chain(const std::string& spec);

// {"energy": "potts-quadratic", "beta": .., "field": .., "q": ..}
// {"energy": "free", "alpha": [[...], ...]}
// {"energy": "quadratic", "coupling": [[...]], "alpha": [[...], ...]}
meanfield::ModelSpec model_from_json(const Json& j);

Json vector_to_json(const Vector& v);
Json matrix_to_json(const Matrix& m);
Json weights_to_json(const metastate::WeightEstimate& w);
Json estimate_to_json(const metastate::MetastateEstimate& e);

// Whitespace-separated 1-based symbols, '#' starts a comment.
gibbs::DisorderString read_disorder(const std::filesystem::path& path, int alphabet_size);

// Decimal text (17 significant digits) that round-trips the double.
std::string format_double(double x);

// RFC 4180 CSV with a leading "# seed=<seed>" comment line and a header row.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::uint64_t seed, const std::vector<std::string>& header);

  CsvWriter& cell(double x);
  CsvWriter& cell(long long x);
  CsvWriter& cell(int x) { return cell(static_cast<long long>(x)); }
  CsvWriter& cell(const std::string& s);
  void end_row();

 private:
  void separator();

  std::ofstream out_;
  std::size_t columns_;
  std::size_t filled_ = 0;
};

void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

}  // namespace mfm::io
