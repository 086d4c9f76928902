// mfm: command-line driver for the mean-field metastate library.

#include "mfm/core.hpp"
#include "mfm/gibbs.hpp"
#include "mfm/io.hpp"
#include "mfm/markov.hpp"
#include "mfm/meanfield.hpp"
#include "mfm/metastate.hpp"
#include "mfm/parallel.hpp"
#include "mfm/potts.hpp"
#include "mfm/random.hpp"
#include "mfm/verify.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#ifndef MFM_VERSION
#define MFM_VERSION "unknown"
#endif

namespace {

using mfm::Error;
using mfm::ErrorCode;
using mfm::SimplexVector;
using mfm::TangentVector;
using mfm::Vector;
using mfm::io::CsvWriter;
using mfm::io::Json;
namespace fs = std::filesystem;

// JSON configuration: top-level keys are global options, objects keyed by a
// subcommand name hold that subcommand's options. A "chain" value may be an
// inline {"rows": [[...]]} object.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    Json root;
    try {
      root = Json::parse(input);
    } catch (const Json::exception& e) {
      throw CLI::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw CLI::ConfigError("config must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    flatten(root, {}, items);
    return items;
  }

 private:
  static std::string scalar(const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

  static std::string inline_chain(const Json& v) {
    std::string s = "matrix:";
    const auto& rows = v.at("rows");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i) s += ';';
      for (std::size_t k = 0; k < rows[i].size(); ++k) s += (k ? "," : "") + rows[i][k].dump();
    }
    return s;
  }

  static void flatten(const Json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (key == "chain" && value.is_object() && value.contains("rows")) {
        item.inputs.push_back(inline_chain(value));
      } else if (value.is_object()) {
        auto nested = parents;
        nested.push_back(key);
        flatten(value, nested, items);
        continue;
      } else if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

struct Globals {
  std::string out = "mfm-out";
  unsigned threads = 0;
};

// Output directory, manifest and human-readable summary of one run.
class Run {
 public:
  Run(const Globals& g, std::string subcommand, Json config) : dir_(g.out) {
    fs::create_directories(dir_);
    manifest_["program"] = "mfm";
    manifest_["version"] = MFM_VERSION;
    manifest_["subcommand"] = std::move(subcommand);
    config["threads"] = g.threads;
    manifest_["config"] = std::move(config);
  }

  fs::path path(const std::string& name) const { return dir_ / name; }
  std::ostringstream& summary() { return summary_; }

  void finish() {
    mfm::io::write_json(path("manifest.json"), manifest_);
    std::ofstream(path("summary.txt")) << summary_.str();
    std::cout << summary_.str() << "outputs written to " << dir_.string() << '\n';
  }

 private:
  fs::path dir_;
  Json manifest_;
  std::ostringstream summary_;
};

std::string fmt(double x) { return mfm::io::format_double(x); }

std::string vec_text(const Vector& v) {
  std::ostringstream s;
  s << '(';
  for (int i = 0; i < v.size(); ++i) s << (i ? ", " : "") << v[i];
  s << ')';
  return s.str();
}

std::vector<std::string> numbered(const std::string& prefix, int count) {
  std::vector<std::string> out;
  for (int i = 1; i <= count; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

struct PottsOptions {
  double beta = 3.0;
  double field = 0.0;
  int q = 3;
  bool coexistence = false;

  void add(CLI::App* app, bool with_coexistence) {
    app->add_option("--beta", beta, "Inverse temperature")->capture_default_str();
    app->add_option("--field", field, "Random-field strength B")->capture_default_str();
    app->add_option("--q", q, "Number of Potts states")->capture_default_str()->check(CLI::Range(2, 10));
    if (with_coexistence)
      app->add_flag("--coexistence", coexistence, "Replace --field by the coexistence field at --beta");
  }

  mfm::potts::PottsParams resolve() const {
    mfm::potts::PottsParams p{beta, field, q};
    if (coexistence) p.field = mfm::potts::coexistence(beta, q, 0.0, 4.0).field;
    p.validate();
    return p;
  }

  Json to_json(const mfm::potts::PottsParams& resolved) const {
    Json j;
    j["beta"] = beta;
    j["field"] = resolved.field;
    j["q"] = q;
    j["coexistence"] = coexistence;
    return j;
  }
};

mfm::markov::ChainStart parse_start(const std::string& s, int q) {
  if (s == "stationary") return mfm::markov::ChainStart::stationary();
  try {
    const int b = std::stoi(s);
    if (b >= 1 && b <= q && std::to_string(b) == s) return mfm::markov::ChainStart::fixed(b - 1);
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::ConfigError, "start must be a state 1.." + std::to_string(q) + " or 'stationary'");
}

// ---------------------------------------------------------------------------

struct ChainCommand {
  std::string chain;
  long long n = 0;
  std::string method = "fundamental";
  double tol = 1e-13;

  void add(CLI::App* app) {
    app->add_option("--chain,--preset", chain, "Preset (degenerate:p, iid:uniform, doubly:a,b,c,d), matrix:... or JSON file")
        ->required();
    app->add_option("--n", n, "Also report the finite-volume covariance at this n (0 skips)")->capture_default_str();
    app->add_option("--method", method, "Limit covariance method")
        ->check(CLI::IsMember({"fundamental", "series"}))
        ->capture_default_str();
    app->add_option("--tol", tol, "Series truncation tolerance")->capture_default_str();
  }

  void run(const Globals& g) const {
    Json cfg;
    cfg["chain"] = chain;
    cfg["n"] = n;
    cfg["method"] = method;
    cfg["tol"] = tol;
    Run out(g, "chain", cfg);
    const auto m = mfm::io::resolve_chain(chain);
    const auto cert = mfm::markov::validate_chain(m);
    const auto pi = mfm::markov::stationary(m);
    const auto pi_check = mfm::markov::stationary_power_iteration(m);
    const auto spectral = mfm::markov::spectral_info(m);
    const auto sigma = mfm::markov::covariance_limit(
        m, pi, method == "series" ? mfm::markov::CovarianceMethod::Series : mfm::markov::CovarianceMethod::FundamentalMatrix,
        tol);
    const auto rank = mfm::markov::tangent_rank(sigma);

    Json j = mfm::io::chain_to_json(m);
    j["ergodicity_power"] = cert.power;
    j["stationary"] = mfm::io::vector_to_json(pi.vec());
    j["stationary_power_iteration"] = mfm::io::vector_to_json(pi_check.vec());
    j["spectral"] = {{"mu", spectral.mu}, {"multiplicity", spectral.multiplicity}};
    j["covariance_limit"] = mfm::io::matrix_to_json(sigma.sigma);
    Json nulls = Json::array();
    for (const auto& v : rank.null_directions) nulls.push_back(mfm::io::vector_to_json(v));
    j["tangent_rank"] = {{"rank", rank.rank},
                         {"eigenvalues", mfm::io::vector_to_json(rank.eigenvalues)},
                         {"null_directions", nulls}};
    std::optional<mfm::markov::CovarianceMatrix> finite;
    if (n > 0) {
      finite = mfm::markov::covariance_finite(m, pi, n);
      j["covariance_finite"] = {{"n", n}, {"sigma", mfm::io::matrix_to_json(finite->sigma)}};
    }
    mfm::io::write_json(out.path("chain.json"), j);

    CsvWriter csv(out.path("covariance.csv"), 0, {"kind", "n", "i", "j", "sigma"});
    auto rows = [&](const mfm::markov::CovarianceMatrix& c, const std::string& kind) {
      for (int i = 0; i < c.size(); ++i)
        for (int k = 0; k < c.size(); ++k)
          csv.cell(kind).cell(c.volume).cell(m.labels()[i]).cell(m.labels()[k]).cell(c.sigma(i, k)).end_row();
    };
    rows(sigma, "limit");
    if (finite) rows(*finite, "finite");

    auto& s = out.summary();
    s << "chain " << chain << ": ergodic, M^" << cert.power << " > 0\n";
    s << "stationary law " << vec_text(pi.vec()) << '\n';
    s << "second eigenvalue modulus " << spectral.mu << " (multiplicity " << spectral.multiplicity << ")\n";
    s << "limit covariance (" << method << "):\n" << sigma.sigma << '\n';
    s << "rank on the tangent space " << rank.rank << '\n';
    for (const auto& v : rank.null_directions) s << "  null direction " << vec_text(v) << '\n';
    out.finish();
  }
};

struct MinimizeCommand {
  PottsOptions potts;
  std::string model_file;
  std::string chain = "iid:uniform";
  int grid = 11;
  double global_tol = 1e-9;

  void add(CLI::App* app) {
    potts.add(app, true);
    app->add_option("--model", model_file, "Model JSON file (overrides the Potts options)");
    app->add_option("--chain", chain, "Disorder chain; its stationary law weights the types")->capture_default_str();
    app->add_option("--grid", grid, "Grid points per simplex edge")->capture_default_str()->check(CLI::Range(2, 200));
    app->add_option("--global-tol", global_tol, "Free-energy gap for the global flag")->capture_default_str();
  }

  void run(const Globals& g) const {
    std::optional<mfm::meanfield::ModelSpec> model;
    Json cfg;
    if (!model_file.empty()) {
      const Json mj = mfm::io::read_json(model_file);
      model = mfm::io::model_from_json(mj);
      cfg["model"] = mj;
    } else {
      const auto params = potts.resolve();
      model = mfm::potts::potts_model(params);
      cfg["model"] = potts.to_json(params);
      cfg["model"]["energy"] = "potts-quadratic";
    }
    cfg["chain"] = chain;
    cfg["grid"] = grid;
    cfg["global_tol"] = global_tol;
    Run out(g, "minimize", cfg);

    const auto m = mfm::io::resolve_chain(chain);
    if (m.size() != model->disorder_size())
      throw Error(ErrorCode::ConfigError, "chain size does not match the number of field symbols");
    mfm::markov::validate_chain(m);
    const auto pi = mfm::markov::stationary(m);
    mfm::meanfield::SearchOptions so;
    so.grid_resolution = grid;
    so.global_tol = global_tol;
    const auto result = mfm::meanfield::find_minimizers(*model, pi, so);
    const auto cond = mfm::meanfield::check_condition2(result.records);

    const int q = model->spin_size();
    const int qp = model->disorder_size();
    Json records = Json::array();
    CsvWriter csv(out.path("minimizers.csv"), 0,
                  concat(concat({"index", "global", "boundary", "value", "hessian_min"}, numbered("total_", q)),
                         numbered("stability_", qp)));
    for (std::size_t i = 0; i < result.records.size(); ++i) {
      const auto& r = result.records[i];
      Json rj;
      rj["index"] = i + 1;
      rj["global"] = r.global;
      rj["boundary"] = r.boundary;
      rj["value"] = r.value;
      rj["total"] = mfm::io::vector_to_json(r.total.vec());
      Json prof = Json::array();
      for (const auto& c : r.profile.components()) prof.push_back(mfm::io::vector_to_json(c.vec()));
      rj["profile"] = prof;
      if (r.hessian) rj["hessian"] = {{"min_eigenvalue", r.hessian->min_eigenvalue}, {"positive_definite", r.hessian->positive_definite}};
      if (r.stability) rj["stability"] = mfm::io::vector_to_json(r.stability->vec());
      records.push_back(rj);

      csv.cell(static_cast<long long>(i + 1)).cell(r.global ? 1 : 0).cell(r.boundary ? 1 : 0).cell(r.value);
      csv.cell(r.hessian ? fmt(r.hessian->min_eigenvalue) : std::string());
      for (int a = 0; a < q; ++a) csv.cell(r.total[a]);
      for (int b = 0; b < qp; ++b) csv.cell(r.stability ? fmt((*r.stability)[b]) : std::string());
      csv.end_row();
    }
    Json j;
    j["stationary"] = mfm::io::vector_to_json(pi.vec());
    j["minimizers"] = records;
    j["starts"] = result.starts;
    j["dropped"] = result.dropped;
    j["saddles"] = result.saddles;
    j["distinct_stability_vectors"] = {{"satisfied", cond.satisfied},
                                       {"min_distance", std::isfinite(cond.min_distance) ? Json(cond.min_distance) : Json()}};
    mfm::io::write_json(out.path("minimizers.json"), j);

    auto& s = out.summary();
    s << "model " << model->name() << ", " << result.records.size() << " local minimizers from " << result.starts
      << " starts (" << result.saddles << " saddles rejected, " << result.dropped << " not converged)\n";
    for (std::size_t i = 0; i < result.records.size(); ++i) {
      const auto& r = result.records[i];
      s << "  " << (r.global ? "global " : "local  ") << "value " << r.value << " total " << vec_text(r.total.vec());
      if (r.stability) s << " B " << vec_text(r.stability->vec());
      s << '\n';
    }
    s << "stability vectors of global minimizers " << (cond.satisfied ? "are" : "are NOT") << " pairwise distinct\n";
    out.finish();
  }
};

struct PottsCommand {
  PottsOptions potts;
  double step = 1e-4;
  bool transition = false;
  double scan_lo = 0.0;
  double scan_hi = 1.0;
  int scan_steps = 0;

  void add(CLI::App* app) {
    potts.add(app, true);
    app->add_option("--step", step, "Root scan step")->capture_default_str();
    app->add_flag("--transition", transition, "Also report the zero-field transition temperature");
    app->add_option("--scan-lo", scan_lo, "Phase curve: lowest field")->capture_default_str();
    app->add_option("--scan-hi", scan_hi, "Phase curve: highest field")->capture_default_str();
    app->add_option("--scan-steps", scan_steps, "Phase curve: number of field intervals (0 skips)")->capture_default_str();
  }

  void run(const Globals& g) const {
    const auto params = potts.resolve();
    Json cfg = potts.to_json(params);
    cfg["step"] = step;
    cfg["transition"] = transition;
    cfg["scan"] = {{"lo", scan_lo}, {"hi", scan_hi}, {"steps", scan_steps}};
    Run out(g, "potts", cfg);
    auto& s = out.summary();

    const auto roots = mfm::potts::solve_order_parameters(params, step);
    Json j;
    j["params"] = {{"beta", params.beta}, {"field", params.field}, {"q", params.q}};
    Json rj = Json::array();
    CsvWriter csv(out.path("roots.csv"), 0, {"u", "residual", "stable", "free_energy"});
    s << "beta " << params.beta << ", B " << params.field << ", q " << params.q << '\n';
    for (const auto& r : roots) {
      const double f = mfm::potts::potts_free_energy_u(params, r.u);
      rj.push_back({{"u", r.u}, {"residual", r.residual}, {"stable", r.stable}, {"free_energy", f}});
      csv.cell(r.u).cell(r.residual).cell(r.stable ? 1 : 0).cell(f).end_row();
      s << "  root u = " << r.u << (r.stable ? " (stable)" : " (unstable)") << ", free energy " << f << '\n';
    }
    j["roots"] = rj;
    try {
      const auto ord = mfm::potts::ordered_branch(params);
      Json oj = {{"u", ord.u}, {"free_energy", ord.value}, {"global", ord.global}};
      if (params.q == 3) {
        oj["p1"] = mfm::potts::p1(params, ord.u);
        oj["p"] = mfm::potts::p_of(params, ord.u);
      }
      Json stab = Json::array();
      for (int k = 0; k < params.q; ++k)
        stab.push_back(mfm::io::vector_to_json(mfm::potts::stability_vector_closed(params, ord.u, k).vec()));
      oj["stability"] = stab;
      j["ordered"] = oj;
      s << "ordered branch u* = " << ord.u << (ord.global ? " (global)" : " (metastable)");
      if (params.q == 3) s << ", p1 = " << mfm::potts::p1(params, ord.u) << ", p = " << mfm::potts::p_of(params, ord.u);
      s << '\n';
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoOrderedPhase) throw;
      j["ordered"] = nullptr;
      s << "no ordered phase\n";
    }
    if (transition) {
      const double bt = mfm::potts::transition_beta(params.q, 0.5, 20.0);
      j["transition_beta"] = bt;
      s << "zero-field transition at beta = " << bt << '\n';
    }
    if (scan_steps > 0) {
      CsvWriter phase(out.path("phase.csv"), 0, {"field", "u_ordered", "gap", "p"});
      for (int i = 0; i <= scan_steps; ++i) {
        mfm::potts::PottsParams p = params;
        p.field = scan_lo + (scan_hi - scan_lo) * i / scan_steps;
        double u = 0.0;
        double gap = 0.0;
        try {
          const auto ord = mfm::potts::ordered_branch(p);
          u = ord.u;
          gap = ord.value - mfm::potts::potts_free_energy_u(p, 0.0);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::NoOrderedPhase) throw;
        }
        phase.cell(p.field).cell(u).cell(gap).cell(p.q == 3 ? fmt(mfm::potts::p_of(p, u)) : std::string()).end_row();
      }
      s << "phase curve over " << scan_steps + 1 << " fields written to phase.csv\n";
    }
    mfm::io::write_json(out.path("potts.json"), j);
    out.finish();
  }
};

struct GibbsCommand {
  PottsOptions potts;
  std::string disorder;
  std::string chain = "degenerate:0.5";
  std::string start = "stationary";
  int n = 60;
  std::uint64_t seed = 1;
  double epsilon = 0.0;

  void add(CLI::App* app) {
    potts.add(app, true);
    app->add_option("--disorder", disorder, "Disorder file: 1-based symbols separated by whitespace");
    app->add_option("--chain", chain, "Chain used to draw the disorder when no file is given")->capture_default_str();
    app->add_option("--start", start, "Start state 1..q or 'stationary'")->capture_default_str();
    app->add_option("--n", n, "Volume when drawing the disorder")->capture_default_str()->check(CLI::Range(1, 400));
    app->add_option("--seed", seed, "Seed for the disorder path")->capture_default_str();
    app->add_option("--epsilon", epsilon, "Neighborhood radius (0 picks the default)")->capture_default_str();
  }

  void run(const Globals& g) const {
    const auto params = potts.resolve();
    Json cfg;
    cfg["model"] = potts.to_json(params);
    if (!disorder.empty()) {
      cfg["disorder"] = disorder;
    } else {
      cfg["chain"] = chain;
      cfg["start"] = start;
      cfg["n"] = n;
      cfg["seed"] = seed;
    }
    cfg["epsilon"] = epsilon;
    Run out(g, "gibbs", cfg);
    const auto model = mfm::potts::potts_model(params);

    std::optional<mfm::gibbs::DisorderString> eta;
    if (!disorder.empty()) {
      eta = mfm::io::read_disorder(disorder, params.q);
    } else {
      const auto m = mfm::io::resolve_chain(chain);
      if (m.size() != params.q) throw Error(ErrorCode::ConfigError, "chain size must equal q");
      mfm::markov::validate_chain(m);
      eta.emplace(mfm::markov::sample_path(m, parse_start(start, m.size()), n, seed).states, params.q);
    }
    const auto dist = mfm::gibbs::count_distribution(model, *eta);
    const int q = params.q;
    CsvWriter csv(out.path("counts.csv"), disorder.empty() ? seed : 0, concat(numbered("K", q), {"probability"}));
    dist.for_each([&](const std::vector<int>& k, double lp) {
      for (int a = 0; a < q; ++a) csv.cell(k[a]);
      csv.cell(std::exp(lp)).end_row();
    });

    Json j;
    j["n"] = eta->length();
    j["type_counts"] = eta->counts();
    j["log_partition"] = dist.log_partition();
    auto& s = out.summary();
    s << "n = " << eta->length() << ", type counts " << Json(eta->counts()).dump() << ", log Z = " << dist.log_partition()
      << '\n';
    try {
      const auto ord = mfm::potts::ordered_branch(params);
      std::vector<SimplexVector> centers;
      for (int k = 0; k < q; ++k) centers.push_back(mfm::potts::ordered_total(params, ord.u, k));
      const double radius = epsilon > 0.0 ? epsilon : mfm::gibbs::default_radius(centers);
      Json masses = Json::array();
      for (int k = 0; k < q; ++k) {
        const double mass = mfm::gibbs::neighborhood_mass(dist, {centers[k], radius});
        masses.push_back(mass);
        s << "mass near ordered state " << k + 1 << ": " << mass << '\n';
      }
      j["radius"] = radius;
      j["ordered_u"] = ord.u;
      j["neighborhood_masses"] = masses;
      try {
        const double r = mfm::gibbs::gibbs_ratio(dist, centers[0], centers[1], radius);
        j["ratio_1_2"] = r;
        s << "mass ratio state 1 / state 2: " << r << '\n';
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ZeroMass) throw;
        j["ratio_1_2"] = nullptr;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoOrderedPhase) throw;
    }
    mfm::io::write_json(out.path("gibbs.json"), j);
    out.finish();
  }
};

struct WeightsCommand {
  PottsOptions potts;
  std::string chain = "iid:uniform";
  long long samples = 1'000'000;
  double margin = 0.0;
  std::uint64_t seed = 1;
  int heatmap = 0;

  void add(CLI::App* app) {
    potts.add(app, true);
    app->add_option("--chain", chain, "Disorder chain")->capture_default_str();
    app->add_option("--samples", samples, "Gaussian samples")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--margin", margin, "Classification margin")->capture_default_str();
    app->add_option("--seed", seed, "Seed")->capture_default_str();
    app->add_option("--heatmap", heatmap, "Grid size of the region map in tangent coordinates (0 skips)")
        ->capture_default_str();
  }

  void run(const Globals& g) const {
    const auto params = potts.resolve();
    Json cfg;
    cfg["model"] = potts.to_json(params);
    cfg["chain"] = chain;
    cfg["samples"] = samples;
    cfg["margin"] = margin;
    cfg["seed"] = seed;
    cfg["heatmap"] = heatmap;
    Run out(g, "weights", cfg);

    const auto m = mfm::io::resolve_chain(chain);
    if (m.size() != params.q) throw Error(ErrorCode::ConfigError, "chain size must equal q");
    mfm::markov::validate_chain(m);
    const auto pi = mfm::markov::stationary(m);
    const auto sigma = mfm::markov::covariance_limit(m, pi);
    const auto model = mfm::potts::potts_model(params);
    const auto search = mfm::meanfield::find_minimizers(model, pi);
    std::vector<TangentVector> stability;
    std::vector<SimplexVector> totals;
    for (const auto& r : search.records)
      if (r.global && r.stability) {
        stability.push_back(*r.stability);
        totals.push_back(r.total);
      }
    if (stability.empty()) throw Error(ErrorCode::EmptyResult, "no interior global minimizer");
    const auto w = mfm::metastate::gaussian_weights(sigma, stability, samples, margin, seed);

    Json j;
    j["stationary"] = mfm::io::vector_to_json(pi.vec());
    j["covariance_limit"] = mfm::io::matrix_to_json(sigma.sigma);
    Json mins = Json::array();
    for (std::size_t k = 0; k < totals.size(); ++k)
      mins.push_back({{"total", mfm::io::vector_to_json(totals[k].vec())},
                      {"stability", mfm::io::vector_to_json(stability[k].vec())}});
    j["minimizers"] = mins;
    j["gaussian"] = mfm::io::weights_to_json(w);
    mfm::io::write_json(out.path("weights.json"), j);

    const int q = params.q;
    CsvWriter csv(out.path("weights.csv"), seed, concat({"region", "weight", "stderr"}, numbered("total_", q)));
    auto& s = out.summary();
    s << totals.size() << " global minimizers; Gaussian region weights from " << samples << " samples:\n";
    for (std::size_t k = 0; k < totals.size(); ++k) {
      csv.cell(static_cast<long long>(k + 1)).cell(w.weights[k]).cell(w.stderrs[k]);
      for (int a = 0; a < q; ++a) csv.cell(totals[k][a]);
      csv.end_row();
      s << "  " << w.weights[k] << " +- " << w.stderrs[k] << "  total " << vec_text(totals[k].vec()) << '\n';
    }
    csv.cell(std::string("undecided")).cell(w.undecided).cell(w.undecided_stderr);
    for (int a = 0; a < q; ++a) csv.cell(std::string());
    csv.end_row();
    s << "  undecided " << w.undecided << '\n';

    if (heatmap > 0) {
      const mfm::Matrix basis = mfm::tangent_basis(q);
      const mfm::Matrix reduced = basis.transpose() * sigma.sigma * basis;
      const double spread = 3.0 * std::sqrt(std::max(reduced.diagonal().maxCoeff(), 1e-300));
      mfm::Matrix pinv = reduced.completeOrthogonalDecomposition().pseudoInverse();
      CsvWriter map(out.path("region_map.csv"), seed, {"t1", "t2", "log_density", "region"});
      for (int a = 0; a < heatmap; ++a)
        for (int b = 0; b < heatmap; ++b) {
          Vector t = Vector::Zero(basis.cols());
          t[0] = -spread + 2.0 * spread * (a + 0.5) / heatmap;
          if (t.size() > 1) t[1] = -spread + 2.0 * spread * (b + 0.5) / heatmap;
          const Vector x = basis * t;
          const int region = mfm::metastate::classify(x, stability, margin);
          map.cell(t[0]).cell(t.size() > 1 ? t[1] : 0.0).cell(-0.5 * t.dot(pinv * t)).cell(region + 1).end_row();
        }
      s << "region map (" << heatmap << "x" << heatmap << ") written to region_map.csv\n";
    }
    out.finish();
  }
};

struct SimulateCommand {
  std::string model = "potts";
  PottsOptions potts;
  std::string chain = "degenerate:0.5";
  std::string start = "3";
  int n = 10000;
  int replicas = 20000;
  double epsilon = 0.0;
  std::string estimator = "structural";
  std::uint64_t seed = 1;
  double margin_c = 0.1;
  double merge_tol = 0.02;

  void add(CLI::App* app) {
    app->add_option("--model", model, "Model family")->check(CLI::IsMember({"potts"}))->capture_default_str();
    potts.add(app, true);
    app->add_option("--chain", chain, "Degenerate chain (degenerate:p or an equivalent matrix)")->capture_default_str();
    app->add_option("--start", start, "Start state 1..3 or 'stationary' (mixes the starts)")->capture_default_str();
    app->add_option("--n", n, "Volume")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--replicas", replicas, "Replica paths per start")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--epsilon", epsilon, "Neighborhood radius for the direct estimator (0 picks the default)")
        ->capture_default_str();
    app->add_option("--estimator", estimator, "Per-path mixture rule")
        ->check(CLI::IsMember({"structural", "direct"}))
        ->capture_default_str();
    app->add_option("--seed", seed, "Seed")->capture_default_str();
    app->add_option("--margin-c", margin_c, "Margin constant c in c max|B| n^(-1/4)")->capture_default_str();
    app->add_option("--merge-tol", merge_tol, "Atom merging tolerance")->capture_default_str();
  }

  void run(const Globals& g) const {
    const auto params = potts.resolve();
    Json cfg;
    cfg["model"] = potts.to_json(params);
    cfg["model"]["energy"] = model;
    cfg["chain"] = chain;
    cfg["start"] = start;
    cfg["n"] = n;
    cfg["replicas"] = replicas;
    cfg["epsilon"] = epsilon;
    cfg["estimator"] = estimator;
    cfg["seed"] = seed;
    cfg["margin_c"] = margin_c;
    cfg["merge_tol"] = merge_tol;
    Run out(g, "simulate", cfg);

    if (params.q != 3) throw Error(ErrorCode::ConfigError, "simulate needs q = 3");
    const auto m = mfm::io::resolve_chain(chain);
    if (m.size() != 3) throw Error(ErrorCode::ConfigError, "simulate needs a 3-state chain");
    const double p = m(1, 0);
    if ((m.matrix() - mfm::markov::TransitionMatrix::degenerate(p).matrix()).cwiseAbs().maxCoeff() > 1e-12)
      throw Error(ErrorCode::ConfigError, "simulate needs the degenerate chain [0 1 0; p 0 1-p; 1-p 0 p]");
    mfm::markov::validate_chain(m);
    const auto chain_start = parse_start(start, 3);

    mfm::metastate::KappaOptions ko;
    ko.n = n;
    ko.replicas = replicas;
    ko.radius = epsilon;
    ko.seed = seed;
    ko.estimator = estimator == "direct" ? mfm::metastate::Estimator::Direct : mfm::metastate::Estimator::Structural;
    ko.margin_c = margin_c;
    ko.merge_tol = merge_tol;

    auto& s = out.summary();
    Json j;
    std::optional<mfm::metastate::DegenerateSetup> setup;
    try {
      setup = mfm::metastate::degenerate_setup(params, p);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoOrderedPhase) throw;
    }
    std::vector<int> starts;
    if (chain_start.state) starts.push_back(*chain_start.state);
    else starts = {0, 1, 2};

    CsvWriter csv(out.path("replicas.csv"), seed,
                  {"start", "replica", "last_state", "n1", "n2", "n3", "imbalance", "three_like", "ratio", "c1", "c2", "c3"});
    std::vector<mfm::metastate::MetastateEstimate> per_start;
    for (int st : starts) {
      if (!setup) {
        per_start.push_back(mfm::metastate::degenerate_potts_kappa(params, p, mfm::markov::ChainStart::fixed(st), ko));
        continue;
      }
      const auto reps = mfm::metastate::degenerate_kappa_replicas(*setup, mfm::markov::ChainStart::fixed(st), ko);
      std::vector<Vector> coeffs;
      for (std::size_t r = 0; r < reps.size(); ++r) {
        const auto& rep = reps[r];
        coeffs.push_back(rep.coefficients);
        csv.cell(st + 1).cell(static_cast<long long>(r)).cell(rep.last_state + 1);
        for (int c : rep.counts) csv.cell(c);
        csv.cell(rep.imbalance).cell(rep.three_like ? 1 : 0).cell(rep.ratio);
        for (int a = 0; a < 3; ++a) csv.cell(rep.coefficients[a]);
        csv.end_row();
      }
      per_start.push_back(mfm::metastate::aggregate_atoms(
          coeffs, merge_tol,
          ko.estimator == mfm::metastate::Estimator::Direct ? mfm::metastate::Provenance::Direct
                                                            : mfm::metastate::Provenance::Structural));
    }
    const auto estimate = chain_start.state ? per_start.front()
                                            : mfm::metastate::combine_kappa(per_start, mfm::markov::stationary(m), merge_tol);
    j["estimate"] = mfm::io::estimate_to_json(estimate);
    if (setup) {
      j["ordered_u"] = setup->u;
      j["p"] = setup->p;
      j["radius"] = epsilon > 0.0 ? epsilon : setup->default_radius;
      j["limit_of_imbalance_rule"] = mfm::io::estimate_to_json(mfm::metastate::degenerate_kappa_limit(params, chain_start));
      if (!chain_start.state) j["four_atom_reference"] = mfm::io::estimate_to_json(mfm::metastate::theorem3_reference(params));
    }
    mfm::io::write_json(out.path("kappa.json"), j);

    s << "estimator " << estimator << ", start " << start << ", n = " << n << ", " << replicas << " replicas per start\n";
    if (setup) s << "ordered u* = " << setup->u << ", p = " << setup->p << '\n';
    else s << "no ordered phase: a single minimizer\n";
    for (const auto& a : estimate.atoms)
      s << "  weight " << a.weight << " +- " << a.stderr << "  coefficients " << vec_text(a.coefficients) << '\n';
    s << "  undecided " << estimate.undecided << '\n';
    out.finish();
  }
};

struct VerifyCommand {
  std::string suite = "all";
  bool quick = false;
  std::uint64_t seed = mfm::verify::VerifyOptions{}.seed;

  void add(CLI::App* app) {
    app->add_option("--suite", suite,
                    "gibbs, covariance, degenerate, theorem1, theorem2, theorem3, clt, properties or all")
        ->capture_default_str();
    app->add_flag("--quick", quick, "Reduced volumes and replica counts");
    app->add_option("--seed", seed, "Seed")->capture_default_str();
  }

  int run(const Globals& g) const {
    const auto ids = mfm::verify::suite_criteria(suite);
    Json cfg;
    cfg["suite"] = suite;
    cfg["quick"] = quick;
    cfg["seed"] = seed;
    Run out(g, "verify", cfg);
    mfm::verify::VerifyOptions vo;
    vo.quick = quick;
    vo.seed = seed;
    Json results = Json::array();
    bool all = true;
    for (int id : ids) {
      const auto r = mfm::verify::run_criterion(id, vo);
      std::cout << mfm::verify::format(r) << std::flush;
      out.summary() << (r.passed() ? "PASS" : "FAIL") << " [" << r.id << "] " << r.name << '\n';
      all = all && r.passed();
      Json checks = Json::array();
      for (const auto& c : r.checks)
        checks.push_back({{"label", c.label}, {"gating", c.gating}, {"passed", c.passed}, {"detail", c.detail}});
      results.push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed()}, {"checks", checks}});
    }
    mfm::io::write_json(out.path("verify.json"), {{"passed", all}, {"criteria", results}});
    out.finish();
    return all ? 0 : 1;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for metastates of mean-field spin models with Markov-chain random fields", "mfm"};
  app.set_version_flag("--version", MFM_VERSION);
  app.require_subcommand(1);
  app.allow_config_extras(false);
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON configuration file; command-line flags take precedence");

  Globals globals;
  app.add_option("--out", globals.out, "Output directory")->capture_default_str();
  app.add_option("--threads", globals.threads, "Worker threads (0 uses every core)")->capture_default_str();

  ChainCommand chain;
  MinimizeCommand minimize;
  PottsCommand potts;
  GibbsCommand gibbs;
  WeightsCommand weights;
  SimulateCommand simulate;
  VerifyCommand verify;
  auto* chain_app = app.add_subcommand("chain", "Stationary law, ergodicity and occupation-time covariance of a chain");
  auto* minimize_app = app.add_subcommand("minimize", "Local and global minimizers of the type free energy");
  auto* potts_app = app.add_subcommand("potts", "Mean-field equation, ordered branch and coexistence for Potts");
  auto* gibbs_app = app.add_subcommand("gibbs", "Exact finite-volume law of the spin counts for one disorder string");
  auto* weights_app = app.add_subcommand("weights", "Gaussian stability-region weights");
  auto* simulate_app = app.add_subcommand("simulate", "Metastate of the degenerate chain from replica paths");
  auto* verify_app = app.add_subcommand("verify", "Run acceptance checks");
  chain.add(chain_app);
  minimize.add(minimize_app);
  potts.add(potts_app);
  gibbs.add(gibbs_app);
  weights.add(weights_app);
  simulate.add(simulate_app);
  verify.add(verify_app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    mfm::set_worker_count(globals.threads);
    if (chain_app->parsed()) chain.run(globals);
    else if (minimize_app->parsed()) minimize.run(globals);
    else if (potts_app->parsed()) potts.run(globals);
    else if (gibbs_app->parsed()) gibbs.run(globals);
    else if (weights_app->parsed()) weights.run(globals);
    else if (simulate_app->parsed()) simulate.run(globals);
    else if (verify_app->parsed()) return verify.run(globals);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::ConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
