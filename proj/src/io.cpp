#include "mfm/io.hpp"

#include <cstdio>
#include <sstream>

namespace mfm::io {

namespace {

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "cannot parse number '" + item + "'");
    }
  }
  return out;
}

std::vector<SimplexVector> kernels_from_json(const Json& j) {
  std::vector<SimplexVector> alpha;
  for (const auto& row : j) alpha.emplace_back(Eigen::Map<const Vector>(row.get<std::vector<double>>().data(),
                                                                         static_cast<Eigen::Index>(row.size())));
  return alpha;
}

}  // namespace

markov::TransitionMatrix chain_from_json(const Json& j) {
  try {
    const auto rows = j.at("rows").get<std::vector<std::vector<double>>>();
    const int q = static_cast<int>(rows.size());
    Matrix m(q, q);
    for (int i = 0; i < q; ++i) {
      if (static_cast<int>(rows[i].size()) != q) throw Error(ErrorCode::ConfigError, "chain rows must form a square matrix");
      for (int k = 0; k < q; ++k) m(i, k) = rows[i][k];
    }
    std::vector<std::string> states;
    if (j.contains("states")) states = j.at("states").get<std::vector<std::string>>();
    return markov::TransitionMatrix(std::move(m), std::move(states));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("malformed chain JSON: ") + e.what());
  }
}

Json chain_to_json(const markov::TransitionMatrix& m) {
  Json j;
  j["states"] = m.labels();
  j["rows"] = matrix_to_json(m.matrix());
  return j;
}

markov::TransitionMatrix resolve_chain(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "degenerate") {
    const auto v = parse_numbers(args);
    if (v.size() != 1) throw Error(ErrorCode::ConfigError, "degenerate preset takes one parameter p");
    return markov::TransitionMatrix::degenerate(v[0]);
  }
  if (kind == "iid") {
    if (args == "uniform") return markov::TransitionMatrix::iid(SimplexVector::uniform(3));
    const auto v = parse_numbers(args);
    return markov::TransitionMatrix::iid(SimplexVector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()))));
  }
  if (kind == "doubly") {
    const auto v = parse_numbers(args);
    if (v.size() != 4) throw Error(ErrorCode::ConfigError, "doubly preset takes four parameters a,b,c,d");
    return markov::TransitionMatrix::doubly(v[0], v[1], v[2], v[3]);
  }
  if (kind == "matrix") {
    std::vector<std::vector<double>> rows;
    std::stringstream ss(args);
    std::string row;
    while (std::getline(ss, row, ';')) rows.push_back(parse_numbers(row));
    const int q = static_cast<int>(rows.size());
    Matrix m(q, q);
    for (int i = 0; i < q; ++i) {
      if (static_cast<int>(rows[i].size()) != q) throw Error(ErrorCode::ConfigError, "matrix rows must form a square matrix");
      for (int k = 0; k < q; ++k) m(i, k) = rows[i][k];
    }
    return markov::TransitionMatrix(std::move(m));
  }
  if (std::filesystem::is_regular_file(spec)) return chain_from_json(read_json(spec));
  throw Error(ErrorCode::ConfigError, "unknown chain '" + spec + "' (expected a preset or a JSON file)");
}

meanfield::ModelSpec model_from_json(const Json& j) {
  try {
    const std::string energy = j.at("energy").get<std::string>();
    if (energy == "potts-quadratic" || energy == "potts")
      return meanfield::ModelSpec::potts(j.at("beta").get<double>(), j.value("field", 0.0), j.value("q", 3));
    if (energy == "free") return meanfield::ModelSpec::free(kernels_from_json(j.at("alpha")));
    if (energy == "quadratic") {
      const auto rows = j.at("coupling").get<std::vector<std::vector<double>>>();
      Matrix c(rows.size(), rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k = 0; k < rows.size(); ++k) c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i].at(k);
      return meanfield::ModelSpec::quadratic(c, kernels_from_json(j.at("alpha")));
    }
    throw Error(ErrorCode::ConfigError, "unknown energy '" + energy + "'");
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("malformed model JSON: ") + e.what());
  }
}

Json vector_to_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) rows.push_back(vector_to_json(m.row(i).transpose()));
  return rows;
}

Json weights_to_json(const metastate::WeightEstimate& w) {
  Json j;
  j["weights"] = vector_to_json(w.weights);
  j["stderr"] = vector_to_json(w.stderrs);
  j["undecided"] = w.undecided;
  j["undecided_stderr"] = w.undecided_stderr;
  j["samples"] = w.samples;
  return j;
}

Json estimate_to_json(const metastate::MetastateEstimate& e) {
  Json j;
  Json atoms = Json::array();
  for (const auto& a : e.atoms) {
    Json aj;
    aj["coefficients"] = vector_to_json(a.coefficients);
    aj["weight"] = a.weight;
    aj["stderr"] = a.stderr;
    atoms.push_back(aj);
  }
  j["atoms"] = atoms;
  j["undecided"] = e.undecided;
  j["provenance"] = metastate::to_string(e.provenance);
  j["replicas"] = e.replicas;
  j["degenerate"] = e.degenerate;
  return j;
}

gibbs::DisorderString read_disorder(const std::filesystem::path& path, int alphabet_size) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read " + path.string());
  std::vector<int> symbols;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::stringstream ss(line);
    std::string token;
    while (ss >> token) {
      int v = 0;
      try {
        std::size_t used = 0;
        v = std::stoi(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw Error(ErrorCode::ConfigError, path.string() + ":" + std::to_string(line_no) + ": bad symbol '" + token + "'");
      }
      if (v < 1 || v > alphabet_size)
        throw Error(ErrorCode::ConfigError, path.string() + ":" + std::to_string(line_no) + ": symbol out of range");
      symbols.push_back(v - 1);
    }
  }
  if (symbols.empty()) throw Error(ErrorCode::ConfigError, path.string() + ": no symbols");
  return gibbs::DisorderString(std::move(symbols), alphabet_size);
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::uint64_t seed, const std::vector<std::string>& header)
    : out_(path), columns_(header.size()) {
  if (!out_) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
  out_ << "# seed=" << seed << "\r\n";
  for (const auto& h : header) cell(h);
  end_row();
}

void CsvWriter::separator() {
  if (filled_ > 0) out_ << ',';
  ++filled_;
}

CsvWriter& CsvWriter::cell(double x) {
  separator();
  out_ << format_double(x);
  return *this;
}

CsvWriter& CsvWriter::cell(long long x) {
  separator();
  out_ << x;
  return *this;
}

CsvWriter& CsvWriter::cell(const std::string& s) {
  separator();
  if (s.find_first_of(",\"\r\n") == std::string::npos) {
    out_ << s;
    return *this;
  }
  out_ << '"';
  for (char c : s) {
    if (c == '"') out_ << '"';
    out_ << c;
  }
  out_ << '"';
  return *this;
}

void CsvWriter::end_row() {
  if (filled_ != columns_) throw Error(ErrorCode::InvalidArgument, "CSV row has the wrong number of cells");
  out_ << "\r\n";
  filled_ = 0;
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
}

}  // namespace mfm::io
