#include "mfm/verify.hpp"

#include "mfm/gibbs.hpp"
#include "mfm/markov.hpp"
#include "mfm/meanfield.hpp"
#include "mfm/metastate.hpp"
#include "mfm/oracle.hpp"
#include "mfm/parallel.hpp"
#include "mfm/potts.hpp"
#include "mfm/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>

namespace mfm::verify {

namespace {

__attribute__((format(printf, 1, 2))) std::string strf(const char* fmt, ...) {
  char buf[1024];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return buf;
}

std::string vec_str(const Vector& v, int digits = 4) {
  std::string s = "(";
  for (int i = 0; i < v.size(); ++i) s += (i ? ", " : "") + strf("%.*f", digits, v[i]);
  return s + ")";
}

class Recorder {
 public:
  Recorder(int id, std::string name) : start_(std::chrono::steady_clock::now()) {
    result_.id = id;
    result_.name = std::move(name);
  }

  bool gate(std::string label, bool ok, std::string detail) {
    result_.checks.push_back(Check{std::move(label), ok, true, std::move(detail)});
    return ok;
  }
  void info(std::string label, std::string detail) {
    result_.checks.push_back(Check{std::move(label), true, false, std::move(detail)});
  }
  CriterionResult finish() {
    result_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    return result_;
  }

 private:
  CriterionResult result_;
  std::chrono::steady_clock::time_point start_;
};

CriterionResult guarded(int id, const char* name, const std::function<void(Recorder&)>& body) {
  Recorder rec(id, name);
  try {
    body(rec);
  } catch (const std::exception& e) {
    rec.gate("completed without error", false, e.what());
  }
  return rec.finish();
}

std::uint64_t criterion_seed(const VerifyOptions& o, int id) { return derive_seed(o.seed, static_cast<std::uint64_t>(id)); }

// Rows drawn from the flat Dirichlet law.
markov::TransitionMatrix random_chain(Engine& rng, int q = 3) {
  Matrix m(q, q);
  for (int i = 0; i < q; ++i) {
    for (int k = 0; k < q; ++k) m(i, k) = -std::log1p(-uniform01(rng));
    m.row(i) /= m.row(i).sum();
  }
  return markov::TransitionMatrix(m);
}

double max_abs(const Matrix& a) { return a.cwiseAbs().maxCoeff(); }

Vector permute(const Vector& x, const std::vector<int>& perm) {
  Vector y(x.size());
  for (int i = 0; i < x.size(); ++i) y[perm[i]] = x[i];
  return y;
}

potts::PottsParams coexistence_params() {
  const auto c = potts::coexistence(3.0, 3, 0.0, 1.0);
  return potts::PottsParams{3.0, c.field, 3};
}

// Global minimizers of the i.i.d.-uniform Potts problem, ordered states
// 0..2 by the argmax of their totals followed by the symmetric state.
struct PottsMinimizers {
  std::vector<TangentVector> stability;
  std::vector<SimplexVector> totals;
  int globals = 0;
  bool symmetric_found = false;
};

PottsMinimizers potts_minimizers(const potts::PottsParams& params) {
  const auto model = potts::potts_model(params);
  const auto search = meanfield::find_minimizers(model, SimplexVector::uniform(3));
  PottsMinimizers out;
  out.stability.resize(4);
  out.totals.resize(4);
  for (const auto& r : search.records) {
    if (!r.global) continue;
    ++out.globals;
    if (!r.stability) throw Error(ErrorCode::BoundaryPoint, "global minimizer without a stability vector");
    const Vector& t = r.total.vec();
    int slot = 3;
    if (t.maxCoeff() - t.minCoeff() > 1e-6) t.maxCoeff(&slot);
    else out.symmetric_found = true;
    out.stability[slot] = *r.stability;
    out.totals[slot] = r.total;
  }
  return out;
}

// Weight of atoms whose coefficients lie within tol of c in sup norm.
double weight_near(const metastate::MetastateEstimate& e, const Vector& c, double tol) {
  double w = 0.0;
  for (const auto& a : e.atoms)
    if ((a.coefficients - c).cwiseAbs().maxCoeff() <= tol) w += a.weight;
  return w;
}

std::string atoms_str(const metastate::MetastateEstimate& e) {
  std::string s;
  for (const auto& a : e.atoms) s += (s.empty() ? "" : "; ") + strf("%.4f@", a.weight) + vec_str(a.coefficients, 3);
  return s;
}

// --- 1 ---------------------------------------------------------------------

void run_gibbs_oracle(Recorder& rec, const VerifyOptions& o) {
  const int cases = o.quick ? 10 : 25;
  const int max_n = o.quick ? 7 : 9;
  Engine rng(criterion_seed(o, 1));
  double worst_tv = 0.0;
  double worst_logz = 0.0;
  std::string worst_case;
  for (int c = 0; c < cases; ++c) {
    const double beta = 5.0 * uniform01(rng);
    const double field = uniform01(rng);
    const int n = 2 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_n - 1));
    std::vector<int> symbols(n);
    for (int& s : symbols) s = static_cast<int>(rng() % 3);
    const auto model = meanfield::ModelSpec::potts(beta, field, 3);
    const gibbs::DisorderString eta(symbols, 3);
    const auto dist = gibbs::count_distribution(model, eta);
    const auto law = oracle::enumerate_counts(model, eta);
    const double tv = oracle::total_variation(dist, law);
    worst_logz = std::max(worst_logz, std::abs(dist.log_partition() - law.log_partition));
    if (tv >= worst_tv) {
      worst_tv = tv;
      worst_case = strf("beta=%.3f B=%.3f n=%d", beta, field, n);
    }
  }
  rec.gate("recursion vs 3^n enumeration", worst_tv <= 1e-12,
           strf("%d cases, n <= %d, max TV %.2e at %s (tol 1e-12)", cases, max_n, worst_tv, worst_case.c_str()));
  rec.info("log partition agreement", strf("max |delta log Z| = %.2e", worst_logz));
}

// --- 2 ---------------------------------------------------------------------

void run_covariance(Recorder& rec, const VerifyOptions& o) {
  const int chains = o.quick ? 5 : 20;
  const int replicas = o.quick ? 10000 : 100000;
  const int n = 1000;
  const std::uint64_t seed = criterion_seed(o, 2);
  Engine rng(seed);
  double worst_methods = 0.0;
  double worst_finite = 0.0;
  double worst_z = 0.0;
  int beyond = 0;
  int entries = 0;
  for (int c = 0; c < chains; ++c) {
    const auto m = random_chain(rng);
    markov::validate_chain(m);
    const auto pi = markov::stationary(m);
    const auto series = markov::covariance_limit(m, pi, markov::CovarianceMethod::Series);
    const auto fund = markov::covariance_limit(m, pi, markov::CovarianceMethod::FundamentalMatrix);
    worst_methods = std::max(worst_methods, max_abs(series.sigma - fund.sigma));
    worst_finite = std::max(worst_finite, max_abs(markov::covariance_finite(m, pi, 100000).sigma - fund.sigma));

    const auto target = markov::covariance_finite(m, pi, n).sigma;
    const markov::PathSampler sampler(m);
    std::vector<std::array<double, 3>> x(replicas);
    const std::uint64_t stream = derive_seed(seed, 100 + c);
    parallel_for(static_cast<std::size_t>(replicas), [&](std::size_t r) {
      std::vector<int> counts;
      int last = 0;
      sampler.sample_counts(markov::ChainStart::stationary(), n, derive_seed(stream, r), counts, last);
      const auto occ = markov::occupation_from_counts(counts, pi);
      for (int i = 0; i < 3; ++i) x[r][i] = occ.fluctuation[i];
    });
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        double s = 0.0;
        double s2 = 0.0;
        for (const auto& v : x) {
          const double p = v[i] * v[j];
          s += p;
          s2 += p * p;
        }
        const double mean = s / replicas;
        const double se = std::sqrt((s2 / replicas - mean * mean) / replicas);
        const double z = (mean - target(i, j)) / se;
        worst_z = std::max(worst_z, std::abs(z));
        beyond += std::abs(z) > 3.0;
        ++entries;
      }
  }
  rec.gate("series vs fundamental matrix", worst_methods <= 1e-9,
           strf("%d chains, max entry difference %.2e (tol 1e-9)", chains, worst_methods));
  rec.gate("finite n = 1e5 vs limit", worst_finite <= 1e-3, strf("max entry difference %.2e (tol 1e-3)", worst_finite));
  rec.gate("Monte Carlo covariance within 3 standard errors", beyond == 0,
           strf("%d replicas of n = %d, %d distinct entries, max |z| = %.2f, %d beyond 3", replicas, n, entries,
                worst_z, beyond));
}

// --- 3 ---------------------------------------------------------------------

void run_degenerate_support(Recorder& rec, const VerifyOptions& o) {
  const int paths = o.quick ? 10000 : 100000;
  const auto m = markov::TransitionMatrix::degenerate(0.5);
  const markov::PathSampler sampler(m);
  const std::uint64_t seed = criterion_seed(o, 3);
  std::vector<int> imbalance(paths);
  std::vector<int> last(paths);
  parallel_for(static_cast<std::size_t>(paths), [&](std::size_t r) {
    const std::uint64_t s = derive_seed(seed, r);
    const int n = 1 + static_cast<int>(s % 2000);
    std::vector<int> counts;
    sampler.sample_counts(markov::ChainStart::fixed(2), n, s, counts, last[r]);
    imbalance[r] = counts[0] - counts[1];
  });
  int outside = 0;
  int ones = 0;
  int mismatched = 0;
  for (int r = 0; r < paths; ++r) {
    outside += imbalance[r] != 0 && imbalance[r] != 1;
    ones += imbalance[r] == 1;
    mismatched += (imbalance[r] == 1) != (last[r] == 0);
  }
  rec.gate("imbalance in {0, 1} from state 3", outside == 0,
           strf("%d paths with n uniform in 1..2000, %d outside {0, 1}", paths, outside));
  rec.info("imbalance 1 exactly when the path ends in state 1",
           strf("%d paths with imbalance 1, %d mismatches", ones, mismatched));

  const auto pi = markov::stationary(m);
  const auto rank = markov::tangent_rank(markov::covariance_limit(m, pi));
  const Vector e = Vector{{1.0, -1.0, 0.0}} / std::sqrt(2.0);
  double dist = std::numeric_limits<double>::infinity();
  if (rank.null_directions.size() == 1)
    dist = std::min((rank.null_directions[0] - e).norm(), (rank.null_directions[0] + e).norm());
  rec.gate("tangent rank of the limit covariance", rank.rank == 1, strf("rank %d (expected 1)", rank.rank));
  rec.gate("null direction (1,-1,0)/sqrt 2", dist <= 1e-8, strf("distance %.2e (tol 1e-8)", dist));
}

// --- 4 ---------------------------------------------------------------------

void run_region_weights(Recorder& rec, const VerifyOptions& o) {
  const long long samples = o.quick ? 100000 : 1000000;
  const int n = o.quick ? 2000 : 10000;
  const int replicas = o.quick ? 2000 : 10000;
  const std::uint64_t seed = criterion_seed(o, 4);
  const auto params = coexistence_params();
  rec.info("coexistence point", strf("beta = 3, B* = %.12f", params.field));

  const auto mins = potts_minimizers(params);
  rec.gate("four global minimizers", mins.globals == 4 && mins.symmetric_found,
           strf("%d global minimizers, symmetric state %s", mins.globals, mins.symmetric_found ? "found" : "missing"));
  const double zero_norm = mins.stability[3].size() ? mins.stability[3].norm() : 1.0;
  rec.gate("symmetric state has vanishing stability vector", zero_norm <= 1e-9, strf("|B| = %.2e (tol 1e-9)", zero_norm));

  const auto iid = markov::TransitionMatrix::iid(SimplexVector::uniform(3));
  const auto sigma = markov::covariance_limit(iid, markov::stationary(iid));
  const auto w = metastate::gaussian_weights(sigma, mins.stability, samples, 0.0, derive_seed(seed, 1));
  double dev = 0.0;
  for (int j = 0; j < 3; ++j) dev = std::max(dev, std::abs(w.weights[j] - 1.0 / 3.0));
  rec.gate("i.i.d. Gaussian weights equal thirds", dev <= 0.01,
           strf("%lld samples, weights %s, max deviation %.4f (tol 0.01)", samples, vec_str(w.weights).c_str(), dev));
  rec.gate("symmetric state weight is zero", w.weights[3] == 0.0, strf("weight %.3g", w.weights[3]));

  const auto schedule = metastate::MarginSchedule::for_stability(mins.stability);
  const double margin = schedule.at(n);
  const auto emp = metastate::empirical_region_weights(iid, mins.stability, n, replicas, schedule, derive_seed(seed, 2));
  const auto ref = metastate::gaussian_weights(sigma, mins.stability, samples, margin, derive_seed(seed, 3));
  double gap = std::abs(emp.undecided - ref.undecided);
  for (int j = 0; j < 4; ++j) gap = std::max(gap, std::abs(emp.weights[j] - ref.weights[j]));
  rec.gate("empirical vs Gaussian weights", gap <= 0.02,
           strf("n = %d, %d replicas, margin %.4f: empirical %s undecided %.4f, Gaussian %s undecided %.4f, max gap "
                "%.4f (tol 0.02)",
                n, replicas, margin, vec_str(emp.weights).c_str(), emp.undecided, vec_str(ref.weights).c_str(),
                ref.undecided, gap));

  auto pairwise = [](const Vector& v) {
    double d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) d = std::min(d, std::abs(v[i] - v[j]));
    return d;
  };
  const auto doubly = markov::TransitionMatrix::doubly(0.4, 0.3, 0.2, 0.5);
  const auto sigma_d = markov::covariance_limit(doubly, markov::stationary(doubly));
  const auto wd = metastate::gaussian_weights(sigma_d, mins.stability, samples, 0.0, derive_seed(seed, 4));
  const double dd = pairwise(wd.weights);
  rec.gate("doubly:0.4,0.3,0.2,0.5 weights differ pairwise", dd > 0.01,
           strf("weights %s, smallest pairwise gap %.4f (needs > 0.01)", vec_str(wd.weights).c_str(), dd));
  const auto empd =
      metastate::empirical_region_weights(doubly, mins.stability, n, replicas, schedule, derive_seed(seed, 5));
  const auto refd = metastate::gaussian_weights(sigma_d, mins.stability, samples, margin, derive_seed(seed, 6));
  double gapd = 0.0;
  for (int j = 0; j < 4; ++j) gapd = std::max(gapd, std::abs(empd.weights[j] - refd.weights[j]));
  rec.info("doubly:0.4,0.3,0.2,0.5 empirical vs Gaussian",
           strf("empirical %s, Gaussian %s, max gap %.4f", vec_str(empd.weights).c_str(), vec_str(refd.weights).c_str(),
                gapd));

  const auto generic = markov::TransitionMatrix::doubly(0.5, 0.3, 0.1, 0.6);
  const auto sigma_g = markov::covariance_limit(generic, markov::stationary(generic));
  const auto wg = metastate::gaussian_weights(sigma_g, mins.stability, samples, 0.0, derive_seed(seed, 7));
  rec.info("doubly:0.5,0.3,0.1,0.6 weights",
           strf("%s, smallest pairwise gap %.4f", vec_str(wg.weights).c_str(), pairwise(wg.weights)));
}

// --- 5 ---------------------------------------------------------------------

// Largest |conditional last-site marginal - gamma kernel| over paths ending in
// each symbol and over the three ordered centers.
double kernel_gap(const potts::PottsParams& params, int n, int per_symbol, std::uint64_t seed, std::string& where) {
  const auto setup = metastate::degenerate_setup(params, 0.5);
  const auto model = potts::potts_model(params);
  const auto chain = markov::TransitionMatrix::degenerate(0.5);
  double worst = 0.0;
  std::uint64_t k = 0;
  for (int b = 0; b < 3; ++b) {
    for (int found = 0; found < per_symbol; ++k) {
      const auto path = markov::sample_path(chain, markov::ChainStart::stationary(), n, derive_seed(seed, k));
      if (path.states.back() != b) continue;
      ++found;
      std::vector<int> rest(3, 0);
      for (int i = 0; i + 1 < n; ++i) ++rest[path.states[i]];
      const auto prior = gibbs::log_count_prior(model, rest);
      for (int j = 0; j < 3; ++j) {
        const gibbs::NeighborhoodSpec spec{setup.totals[j], setup.default_radius};
        const auto m = gibbs::site_marginals_conditional(model, prior, b, spec);
        const auto g = meanfield::gamma_kernel(model, b, setup.totals[j]);
        const double d = (m.vec() - g.vec()).cwiseAbs().maxCoeff();
        if (d >= worst) {
          worst = d;
          where = strf("field symbol %d, state %d", b + 1, j + 1);
        }
      }
    }
  }
  return worst;
}

void run_product_kernels(Recorder& rec, const VerifyOptions& o) {
  const int n = 240;
  const int per_symbol = o.quick ? 1 : 2;
  const std::uint64_t seed = criterion_seed(o, 5);
  std::string where;
  const potts::PottsParams params{5.0, 1.0, 3};
  const double gap = kernel_gap(params, n, per_symbol, derive_seed(seed, 1), where);
  rec.gate("finite-volume last-site marginals vs gamma kernels", gap <= 0.01,
           strf("beta = 5, B = 1, n = %d, %d paths per final symbol, max gap %.4f at %s (tol 0.01)", n, per_symbol, gap,
                where.c_str()));
  const double gap_c = kernel_gap(coexistence_params(), n, per_symbol, derive_seed(seed, 2), where);
  rec.info("same check at the beta = 3 coexistence point", strf("max gap %.4f at %s", gap_c, where.c_str()));
}

// --- 6 ---------------------------------------------------------------------

void run_ratio_limit(Recorder& rec, const VerifyOptions& o) {
  const std::vector<int> volumes{60, 120, 240};
  const int replicas = o.quick ? 150 : 400;
  const std::uint64_t seed = criterion_seed(o, 6);
  const auto params = coexistence_params();
  const auto setup = metastate::degenerate_setup(params, 0.5);
  const double target = potts::p1(params, setup.u);
  rec.info("reference", strf("u* = %.10f, p1 = %.10f", setup.u, target));

  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<metastate::KappaReplica> last_run;
  for (int n : volumes) {
    metastate::KappaOptions ko;
    ko.n = n;
    ko.replicas = replicas;
    ko.seed = derive_seed(seed, static_cast<std::uint64_t>(n));
    ko.estimator = metastate::Estimator::Direct;
    auto reps = metastate::degenerate_kappa_replicas(setup, markov::ChainStart::fixed(2), ko);
    double sum = 0.0;
    int used = 0;
    for (const auto& r : reps)
      if (r.last_state == 0 && !r.three_like) {
        sum += r.ratio;
        ++used;
      }
    if (used == 0) throw Error(ErrorCode::EmptyResult, strf("no qualifying paths at n = %d", n));
    xs.push_back(1.0 / n);
    ys.push_back(sum / used);
    rec.info(strf("mean ratio at n = %d", n),
             strf("%.6f over %d paths (relative error %.4f)", sum / used, used, (sum / used - target) / target));
    if (n == volumes.back()) last_run = std::move(reps);
  }
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  const double rel = std::abs(intercept - target) / target;
  rec.gate("extrapolated ratio vs p1", rel <= 0.05,
           strf("fit a + b/n: a = %.6f, b = %.3f, relative error %.4f (tol 0.05)", intercept, slope, rel));
  const double p1_zero = potts::p1(params, 0.0);
  rec.gate("p1 at u = 0", p1_zero == 1.0, strf("p1 = %.17g", p1_zero));

  gibbs::PriorCache cache(potts::potts_model(params));
  for (double eps : {0.05, 0.1, 0.2}) {
    double sum = 0.0;
    int used = 0;
    int zero = 0;
    for (const auto& r : last_run) {
      if (r.last_state != 0 || r.three_like) continue;
      try {
        sum += gibbs::gibbs_ratio(*cache.distribution(r.counts), setup.totals[0], setup.totals[1], eps);
        ++used;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ZeroMass) throw;
        ++zero;
      }
    }
    rec.info(strf("radius %.2f at n = 240", eps),
             used ? strf("mean ratio %.6f over %d paths, %d with empty neighborhood", sum / used, used, zero)
                  : strf("every neighborhood empty (%d paths)", zero));
  }
}

// --- 7 ---------------------------------------------------------------------

void run_degenerate_metastate(Recorder& rec, const VerifyOptions& o) {
  const int n = o.quick ? 2000 : 10000;
  const int replicas = o.quick ? 2000 : 20000;
  const int direct_replicas = o.quick ? 300 : 2000;
  const std::uint64_t seed = criterion_seed(o, 7);
  const auto params = coexistence_params();
  const auto chain = markov::TransitionMatrix::degenerate(0.5);
  const auto pi = markov::stationary(chain);
  const auto setup = metastate::degenerate_setup(params, 0.5);
  const double p = setup.p;

  std::vector<metastate::MetastateEstimate> per_start;
  for (int s = 0; s < 3; ++s) {
    metastate::KappaOptions ko;
    ko.n = n;
    ko.replicas = replicas;
    ko.seed = derive_seed(seed, 1);
    per_start.push_back(metastate::degenerate_potts_kappa(params, 0.5, markov::ChainStart::fixed(s), ko));
    rec.info(strf("start %d atoms", s + 1), atoms_str(per_start.back()));
  }
  const auto combined = metastate::combine_kappa(per_start, pi);
  const auto reference = metastate::theorem3_reference(params);
  rec.info("combined atoms", atoms_str(combined));
  for (const auto& a : reference.atoms) {
    const double w = weight_near(combined, a.coefficients, 0.02);
    rec.gate(strf("weight of atom %s", vec_str(a.coefficients, 3).c_str()), std::abs(w - a.weight) <= 0.02,
             strf("estimated %.4f, expected %.4f (tol 0.02)", w, a.weight));
  }
  const auto limit = metastate::degenerate_kappa_limit(params, markov::ChainStart::stationary());
  std::string lim;
  for (const auto& a : limit.atoms)
    lim += strf("%s %.4f vs %.4f; ", vec_str(a.coefficients, 3).c_str(), weight_near(combined, a.coefficients, 0.02),
                a.weight);
  rec.info("combined vs limit of the imbalance rule", lim);
  std::string k13;
  for (const auto& a : per_start[0].atoms)
    k13 += strf("%s %.4f vs %.4f; ", vec_str(a.coefficients, 3).c_str(), a.weight,
                weight_near(per_start[2], a.coefficients, 0.02));
  rec.info("start 1 vs start 3 atoms", k13);

  auto direct_mean = [&](int start, int sign, int& used) {
    metastate::KappaOptions ko;
    ko.n = 240;
    ko.replicas = direct_replicas;
    ko.seed = derive_seed(seed, 2);
    ko.estimator = metastate::Estimator::Direct;
    const auto reps = metastate::degenerate_kappa_replicas(setup, markov::ChainStart::fixed(start), ko);
    double sum = 0.0;
    used = 0;
    for (const auto& r : reps)
      if (!r.three_like && r.imbalance * sign > 0) {
        sum += r.coefficients[0];
        ++used;
      }
    if (used == 0) throw Error(ErrorCode::EmptyResult, "no biased paths in the direct run");
    return sum / used;
  };
  int used3 = 0;
  int used2 = 0;
  const double c3 = direct_mean(2, 1, used3);
  const double c2 = direct_mean(1, -1, used2);
  rec.gate("start 3 biased coefficient vs p", std::abs(c3 - p) <= 0.03,
           strf("direct n = 240: %.4f over %d paths, p = %.4f (tol 0.03)", c3, used3, p));
  rec.gate("start 2 reversed coefficient vs 1 - p", std::abs(c2 - (1.0 - p)) <= 0.03,
           strf("direct n = 240: %.4f over %d paths, 1 - p = %.4f (tol 0.03)", c2, used2, 1.0 - p));
  rec.gate("asymmetry |p - 1/2| > 0.01", std::abs(p - 0.5) > 0.01, strf("p = %.6f", p));
}

// --- 8 ---------------------------------------------------------------------

void run_clt(Recorder& rec, const VerifyOptions& o) {
  const int n = o.quick ? 2000 : 10000;
  const int replicas = o.quick ? 2000 : 10000;
  const std::uint64_t seed = criterion_seed(o, 8);
  const TangentVector l1(Vector{{1.0, 1.0, -2.0}} / std::sqrt(6.0));
  const TangentVector l2(Vector{{1.0, -1.0, 0.0}} / std::sqrt(2.0));
  struct Preset {
    const char* name;
    markov::TransitionMatrix m;
    bool degenerate;
  };
  const std::vector<Preset> presets{
      {"iid:uniform", markov::TransitionMatrix::iid(SimplexVector::uniform(3)), false},
      {"doubly:0.4,0.3,0.2,0.5", markov::TransitionMatrix::doubly(0.4, 0.3, 0.2, 0.5), false},
      {"degenerate:0.5", markov::TransitionMatrix::degenerate(0.5), true},
  };
  std::uint64_t k = 0;
  for (const auto& pr : presets) {
    for (int which = 0; which < 2; ++which) {
      const auto& lambda = which == 0 ? l1 : l2;
      const auto r = metastate::clt_joint_independence(pr.m, lambda, n, replicas, derive_seed(seed, k++));
      const std::string label = strf("%s, lambda = %s", pr.name, which == 0 ? "(1,1,-2)/sqrt 6" : "(1,-1,0)/sqrt 2");
      const std::string detail = strf("limit variance %.5f, pooled variance %.5f, max |z| %.2f (threshold 4)",
                                      r.limit_variance, r.pooled_variance, r.max_abs_z);
      if (pr.degenerate && which == 1) rec.info(label, detail);
      else rec.gate(label, r.passed, detail);
    }
  }
}

// --- 9 ---------------------------------------------------------------------

void properties_markov(Recorder& rec, const VerifyOptions& o, Engine& rng) {
  const int chains = o.quick ? 5 : 20;
  double row = 0.0;
  double sym = 0.0;
  double psd = 0.0;
  double methods = 0.0;
  double drift = 0.0;
  const Matrix basis = tangent_basis(3);
  for (int c = 0; c < chains; ++c) {
    const auto m = random_chain(rng);
    const auto pi = markov::stationary(m);
    const auto limit = markov::covariance_limit(m, pi);
    std::vector<double> scaled;
    for (long long n : {100LL, 1000LL, 10000LL}) {
      const auto f = markov::covariance_finite(m, pi, n);
      row = std::max(row, f.sigma.rowwise().sum().cwiseAbs().maxCoeff());
      sym = std::max(sym, max_abs(f.sigma - f.sigma.transpose()));
      const Matrix red = basis.transpose() * f.sigma * basis;
      psd = std::min(psd, Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (red + red.transpose())).eigenvalues().minCoeff());
      scaled.push_back(static_cast<double>(n) * max_abs(f.sigma - limit.sigma));
    }
    if (scaled[1] > 1e-9) drift = std::max(drift, std::abs(scaled[2] - scaled[1]) / scaled[1]);
    const double tol = 1e-13;
    const auto s = markov::covariance_limit(m, pi, markov::CovarianceMethod::Series, tol);
    methods = std::max(methods, max_abs(s.sigma - limit.sigma));
  }
  rec.gate("covariance rows sum to zero", row <= 1e-9, strf("max |row sum| %.2e", row));
  rec.gate("covariance symmetric", sym <= 1e-10, strf("max asymmetry %.2e", sym));
  rec.gate("covariance PSD on the tangent space", psd >= -1e-9, strf("min eigenvalue %.2e", psd));
  rec.gate("finite-n covariance converges at rate 1/n", drift <= 0.1,
           strf("n |Sigma_n - Sigma| changes by at most %.2f%% between n = 1e3 and 1e4", 100 * drift));
  rec.gate("series vs fundamental within 10 tol", methods <= 1e-12, strf("max difference %.2e (tol 1e-12)", methods));

  const auto m = random_chain(rng);
  const std::vector<int> perm{2, 0, 1};
  const auto mp = m.permuted(perm);
  const auto pi = markov::stationary(m);
  const auto pip = markov::stationary(mp);
  const auto sig = markov::covariance_limit(m, pi).sigma;
  const auto sigp = markov::covariance_limit(mp, pip).sigma;
  double perr = (permute(pi.vec(), perm) - pip.vec()).cwiseAbs().maxCoeff();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) perr = std::max(perr, std::abs(sig(i, j) - sigp(perm[i], perm[j])));
  rec.gate("state permutation equivariance", perr <= 1e-12, strf("max deviation %.2e", perr));

  const auto a = markov::sample_path(m, markov::ChainStart::stationary(), 500, 99);
  const auto b = markov::sample_path(m, markov::ChainStart::stationary(), 500, 99);
  rec.gate("sample_path is a pure function of its inputs", a.states == b.states, "two draws with seed 99 compared");
  const auto deg = markov::TransitionMatrix::degenerate(0.5);
  const auto dp = markov::sample_path(deg, markov::ChainStart::fixed(0), 5000, 7);
  bool ok = true;
  for (int i = 0; i + 1 < dp.length(); ++i) ok = ok && deg(dp.states[i], dp.states[i + 1]) > 0.0;
  rec.gate("paths only use allowed transitions", ok, "degenerate chain, 5000 steps");
}

void properties_meanfield(Recorder& rec, const VerifyOptions& o, Engine& rng) {
  const SimplexVector uniform = SimplexVector::uniform(3);
  double norm = 0.0;
  for (int t = 0; t < 200; ++t) {
    const auto model = meanfield::ModelSpec::potts(5.0 * uniform01(rng), uniform01(rng), 3);
    Vector w(3);
    for (int i = 0; i < 3; ++i) w[i] = -std::log1p(-uniform01(rng));
    const auto nu = SimplexVector::normalized(w);
    for (int b = 0; b < 3; ++b) norm = std::max(norm, std::abs(meanfield::gamma_kernel(model, b, nu).vec().sum() - 1.0));
  }
  rec.gate("gamma kernels normalize", norm <= 1e-12, strf("max |sum - 1| %.2e", norm));

  double rise = 0.0;
  for (int t = 0; t < 20; ++t) {
    const auto model = meanfield::ModelSpec::potts(5.0 * uniform01(rng), uniform01(rng), 3);
    Vector w(3);
    for (int i = 0; i < 3; ++i) w[i] = -std::log1p(-uniform01(rng));
    auto nu = SimplexVector::normalized(w);
    double prev = meanfield::free_energy(model, uniform, meanfield::lift(model, nu));
    for (int k = 0; k < 200; ++k) {
      nu = meanfield::self_consistent_map(model, uniform, nu);
      const double cur = meanfield::free_energy(model, uniform, meanfield::lift(model, nu));
      rise = std::max(rise, cur - prev);
      prev = cur;
    }
  }
  rec.gate("free energy decreases along the fixed-point map", rise <= 1e-12, strf("largest increase %.2e", rise));

  const int cases = o.quick ? 5 : 20;
  double stab = 0.0;
  double fixed = 0.0;
  double value = 0.0;
  double grid_violation = 0.0;
  int records = 0;
  for (int t = 0; t < cases; ++t) {
    const auto model = meanfield::ModelSpec::potts(5.0 * uniform01(rng), uniform01(rng), 3);
    const auto search = meanfield::find_minimizers(model, uniform);
    double grid_min = std::numeric_limits<double>::infinity();
    for (const auto& g : meanfield::simplex_grid(3, 11)) {
      grid_min = std::min(grid_min, meanfield::free_energy(model, uniform, meanfield::lift(model, g)));
      grid_min = std::min(grid_min, meanfield::free_energy(model, uniform, meanfield::TypeProfile({g, g, g})));
    }
    for (const auto& r : search.records) {
      fixed = std::max(fixed, (meanfield::self_consistent_map(model, uniform, r.total).vec() - r.total.vec())
                                  .cwiseAbs()
                                  .maxCoeff());
      value = std::max(value, std::abs(r.value - meanfield::free_energy(model, uniform, r.profile)));
      if (r.global) grid_violation = std::max(grid_violation, r.value - grid_min);
      if (r.boundary || !r.stability) continue;
      ++records;
      const auto num = meanfield::stability_vector_numeric(model, uniform, r.profile);
      stab = std::max(stab, (r.stability->vec() - num.vec()).cwiseAbs().maxCoeff());
    }
  }
  rec.gate("minimizers are fixed points", fixed <= 1e-9, strf("max residual %.2e", fixed));
  rec.gate("minimizer values match the free energy", value <= 1e-12, strf("max deviation %.2e", value));
  rec.gate("analytic vs numeric stability vectors", stab <= 1e-6,
           strf("%d minimizers at %d random (beta, B), max deviation %.2e", records, cases, stab));
  rec.gate("global minimizers lie below every grid point", grid_violation <= 1e-9,
           strf("max excess %.2e", std::max(0.0, grid_violation)));

  const auto params = coexistence_params();
  const auto model = potts::potts_model(params);
  const auto search = meanfield::find_minimizers(model, uniform);
  const std::vector<int> perm{1, 2, 0};
  double equi = 0.0;
  for (const auto& r : search.records) {
    const Vector target = permute(r.total.vec(), perm);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : search.records) {
      if ((s.total.vec() - target).cwiseAbs().maxCoeff() > 1e-6) continue;
      double d = 0.0;
      if (r.stability && s.stability) d = (permute(r.stability->vec(), perm) - s.stability->vec()).cwiseAbs().maxCoeff();
      best = std::min(best, d);
    }
    equi = std::max(equi, best);
  }
  rec.gate("label permutation equivariance", equi <= 1e-6,
           strf("%zu minimizers at coexistence, max deviation %.2e", search.records.size(), equi));
}

void properties_potts(Recorder& rec, const VerifyOptions& o, Engine& rng) {
  const int cases = o.quick ? 5 : 20;
  const SimplexVector uniform = SimplexVector::uniform(3);
  double deriv = 0.0;
  double resid = 0.0;
  double closed = 0.0;
  double consistency = 0.0;
  int roots = 0;
  std::vector<potts::PottsParams> cases_list{coexistence_params()};
  for (int t = 0; t < cases; ++t) cases_list.push_back(potts::PottsParams{5.0 * uniform01(rng), uniform01(rng), 3});
  for (const auto& params : cases_list) {
    const auto model = potts::potts_model(params);
    auto f = [&](double u) { return potts::potts_free_energy_u(params, u); };
    for (const auto& root : potts::solve_order_parameters(params)) {
      ++roots;
      const double u = root.u;
      const double h = 1e-5;
      const double d = u < h ? (-3.0 * f(u) + 4.0 * f(u + h) - f(u + 2 * h)) / (2 * h) : (f(u + h) - f(u - h)) / (2 * h);
      deriv = std::max(deriv, std::abs(d));
      resid = std::max(resid, std::abs(root.residual));
      for (int j = 0; j < 3; ++j) {
        const auto general = meanfield::stability_vector(model, uniform, potts::lifted_profile(params, u, j));
        closed = std::max(closed, (general.vec() - potts::stability_vector_closed(params, u, j).vec()).cwiseAbs().maxCoeff());
      }
      const auto nu = potts::ordered_total(params, u, 0);
      Vector total = Vector::Zero(3);
      for (int b = 0; b < 3; ++b) total += meanfield::gamma_kernel(model, b, nu).vec() / 3.0;
      consistency = std::max(consistency, (total - nu.vec()).cwiseAbs().maxCoeff());
    }
  }
  rec.gate("roots are critical points of the free energy in u", deriv <= 1e-6,
           strf("%d roots, max |derivative| %.2e", roots, deriv));
  rec.gate("root residuals", resid <= 1e-10, strf("max |residual| %.2e", resid));
  rec.gate("closed-form vs general stability vectors", closed <= 1e-8, strf("max deviation %.2e", closed));
  rec.gate("gamma-kernel consistency of ordered totals", consistency <= 1e-9, strf("max deviation %.2e", consistency));

  double drop = 0.0;
  for (const auto& params : cases_list) {
    double prev = potts::p_of(params, 0.0);
    for (int i = 1; i <= 1000; ++i) {
      const double cur = potts::p_of(params, i / 1000.0);
      drop = std::max(drop, prev - cur);
      prev = cur;
    }
  }
  rec.gate("p is nondecreasing in u", drop <= 1e-12, strf("largest decrease %.2e", std::max(0.0, drop)));
}

void properties_gibbs(Recorder& rec, Engine& rng) {
  const auto params = coexistence_params();
  const auto model = potts::potts_model(params);
  const int n = 30;
  std::vector<int> symbols(n);
  for (int& s : symbols) s = static_cast<int>(rng() % 3);
  std::vector<int> shuffled = symbols;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto d1 = gibbs::count_distribution(model, gibbs::DisorderString(symbols, 3));
  const auto d2 = gibbs::count_distribution(model, gibbs::DisorderString(shuffled, 3));
  rec.gate("law depends only on type counts", d1.table().values() == d2.table().values() &&
                                                  d1.log_partition() == d2.log_partition(),
           "shuffled disorder string, bitwise comparison");

  const std::vector<int> perm{1, 2, 0};
  std::vector<int> relabeled(n);
  for (int i = 0; i < n; ++i) relabeled[i] = perm[symbols[i]];
  const auto d3 = gibbs::count_distribution(model, gibbs::DisorderString(relabeled, 3));
  double joint = std::abs(d1.log_partition() - d3.log_partition());
  d1.for_each([&](const std::vector<int>& k, double) {
    std::vector<int> kp(3);
    for (int a = 0; a < 3; ++a) kp[perm[a]] = k[a];
    joint = std::max(joint, std::abs(d1.probability(k) - d3.probability(kp)));
  });
  rec.gate("joint spin and field relabeling symmetry", joint <= 1e-13, strf("max deviation %.2e", joint));

  const auto center = potts::ordered_total(params, potts::ordered_branch(params).u, 0);
  double prev = 0.0;
  double dip = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double mass = gibbs::neighborhood_mass(d1, gibbs::NeighborhoodSpec{center, 0.02 * i});
    dip = std::max(dip, prev - mass);
    prev = mass;
  }
  rec.gate("neighborhood mass nondecreasing in radius", dip <= 1e-14, strf("largest decrease %.2e", std::max(0.0, dip)));

  const auto setup = metastate::degenerate_setup(params, 0.5);
  const gibbs::NeighborhoodSpec near2{setup.totals[1], setup.default_radius};
  double identity = 0.0;
  double zratio = 0.0;
  for (int t = 0; t < 3; ++t) {
    const int half = 10 + 5 * t;
    std::vector<int> rest;
    for (int i = 0; i < half; ++i) rest.push_back(0), rest.push_back(1);
    for (int i = 0; i < 8 + 3 * t; ++i) rest.push_back(2);
    std::shuffle(rest.begin(), rest.end(), rng);
    auto ends_in = [&](int b) {
      std::vector<int> s = rest;
      s.push_back(b);
      return gibbs::count_distribution(model, gibbs::DisorderString(s, 3));
    };
    const auto with1 = ends_in(0);
    const auto with2 = ends_in(1);
    zratio = std::max(zratio, std::abs(with1.log_partition() - with2.log_partition()));
    const double lhs = std::exp(gibbs::log_neighborhood_mass(with1, near2) + with1.log_partition() -
                                gibbs::log_neighborhood_mass(with2, near2) - with2.log_partition());
    std::vector<int> rest_counts(3, 0);
    for (int s : rest) ++rest_counts[s];
    const auto m = gibbs::site_marginals_conditional(model, gibbs::log_count_prior(model, rest_counts), 1, near2);
    const double e = m[0] * std::exp(params.field) + m[1] * std::exp(-params.field) + m[2];
    identity = std::max(identity, std::abs(lhs - e) / std::max(1.0, e));
    identity = std::max(identity, std::abs(gibbs::gibbs_ratio(with2, setup.totals[0], setup.totals[1], setup.default_radius) - e) /
                                      std::max(1.0, e));
  }
  rec.gate("partition functions agree for swapped final symbol", zratio <= 1e-12, strf("max |delta log Z| %.2e", zratio));
  rec.gate("mass ratio equals the conditional field expectation", identity <= 1e-10,
           strf("3 balanced strings, max relative deviation %.2e", identity));
}

void properties_metastate(Recorder& rec, const VerifyOptions& o, Engine& rng) {
  const long long samples = o.quick ? 100000 : 1000000;
  const std::uint64_t seed = rng();
  const auto params = coexistence_params();
  const auto setup = metastate::degenerate_setup(params, 0.5);
  const std::vector<TangentVector> ordered(setup.stability.begin(), setup.stability.begin() + 3);
  const auto iid = markov::TransitionMatrix::iid(SimplexVector::uniform(3));
  const auto sigma = markov::covariance_limit(iid, markov::stationary(iid));

  const auto w0 = metastate::gaussian_weights(sigma, ordered, samples, 0.0, derive_seed(seed, 1));
  const auto w1 = metastate::gaussian_weights(sigma, ordered, samples, 1e-6, derive_seed(seed, 2));
  rec.gate("weights and undecided mass sum to one", std::abs(w0.weights.sum() + w0.undecided - 1.0) <= 1e-12,
           strf("deviation %.2e", std::abs(w0.weights.sum() + w0.undecided - 1.0)));
  rec.gate("undecided mass at margin 1e-6", w1.undecided <= 0.01, strf("%.2e (tol 0.01)", w1.undecided));
  rec.gate("ties at margin 0", w0.undecided <= 1e-4, strf("%.2e (tol 1e-4)", w0.undecided));

  int flips = 0;
  for (int t = 0; t < 1000; ++t) {
    Vector x(3);
    for (int i = 0; i < 3; ++i) x[i] = uniform01(rng) - 0.5;
    const double scale = std::exp(8.0 * (uniform01(rng) - 0.5));
    flips += metastate::classify(x, ordered, 0.0) != metastate::classify(scale * x, ordered, 0.0);
  }
  rec.gate("classification is invariant under positive scaling", flips == 0, strf("%d changes in 1000 trials", flips));

  const auto doubly = markov::TransitionMatrix::doubly(0.4, 0.3, 0.2, 0.5);
  const auto sig_d = markov::covariance_limit(doubly, markov::stationary(doubly));
  const metastate::GaussianSampler sampler(sig_d);
  Engine grng(derive_seed(seed, 3));
  Matrix s1 = Matrix::Zero(3, 3);
  Matrix s2 = Matrix::Zero(3, 3);
  double off = 0.0;
  for (long long k = 0; k < samples; ++k) {
    const Vector g = sampler.sample(grng);
    off = std::max(off, std::abs(g.sum()));
    const Matrix p = g * g.transpose();
    s1 += p;
    s2 += p.cwiseProduct(p);
  }
  double zmax = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      const double mean = s1(i, j) / samples;
      const double se = std::sqrt((s2(i, j) / samples - mean * mean) / samples);
      zmax = std::max(zmax, std::abs(mean - sig_d.sigma(i, j)) / se);
    }
  rec.gate("Gaussian samples lie in the tangent space", off <= 1e-10, strf("max |sum| %.2e", off));
  rec.gate("Gaussian sample covariance within 3 standard errors", zmax <= 3.0,
           strf("%lld draws, max |z| %.2f", samples, zmax));

  const int replicas = o.quick ? 300 : 2000;
  metastate::KappaOptions ko;
  ko.n = 240;
  ko.replicas = replicas;
  ko.seed = derive_seed(seed, 4);
  const auto structural = metastate::degenerate_potts_kappa(params, 0.5, markov::ChainStart::fixed(2), ko);
  ko.estimator = metastate::Estimator::Direct;
  const auto direct = metastate::degenerate_potts_kappa(params, 0.5, markov::ChainStart::fixed(2), ko);
  double gap = 0.0;
  for (const auto& a : structural.atoms) gap = std::max(gap, std::abs(a.weight - weight_near(direct, a.coefficients, 0.05)));
  rec.gate("structural vs direct estimator weights", gap <= 0.05,
           strf("n = 240, %d replicas: structural %s; direct %s; max gap %.4f (tol 0.05)", replicas,
                atoms_str(structural).c_str(), atoms_str(direct).c_str(), gap));

  std::vector<metastate::MetastateEstimate> per_start;
  for (int s = 0; s < 3; ++s) per_start.push_back(metastate::degenerate_kappa_limit(params, markov::ChainStart::fixed(s)));
  const SimplexVector pi = SimplexVector::uniform(3);
  const auto a = metastate::combine_kappa(per_start, pi);
  for (auto& e : per_start) std::reverse(e.atoms.begin(), e.atoms.end());
  std::reverse(per_start.begin() + 1, per_start.end());
  std::swap(per_start[1], per_start[2]);
  const auto b = metastate::combine_kappa(per_start, pi);
  bool same = a.atoms.size() == b.atoms.size();
  for (std::size_t i = 0; same && i < a.atoms.size(); ++i)
    same = std::abs(a.atoms[i].weight - b.atoms[i].weight) <= 1e-12 &&
           (a.atoms[i].coefficients - b.atoms[i].coefficients).cwiseAbs().maxCoeff() <= 1e-12;
  rec.gate("combined mass is one", std::abs(a.total_mass() - 1.0) <= 1e-12, strf("total %.15f", a.total_mass()));
  rec.gate("combination ignores atom order", same, atoms_str(a));

  rec.gate("biased atom is not label symmetric", std::abs(setup.p - 0.5) > 0.01,
           strf("p = %.6f, relabeled coefficient %.6f", setup.p, 1.0 - setup.p));
}

void run_properties(Recorder& rec, const VerifyOptions& o) {
  Engine rng(criterion_seed(o, 9));
  properties_markov(rec, o, rng);
  properties_meanfield(rec, o, rng);
  properties_potts(rec, o, rng);
  properties_gibbs(rec, rng);
  properties_metastate(rec, o, rng);
}

}  // namespace

bool CriterionResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed || !c.gating; });
}

CriterionResult gibbs_oracle(const VerifyOptions& o) {
  return guarded(1, "gibbs oracle equivalence", [&](Recorder& r) { run_gibbs_oracle(r, o); });
}
CriterionResult covariance_consistency(const VerifyOptions& o) {
  return guarded(2, "covariance consistency", [&](Recorder& r) { run_covariance(r, o); });
}
CriterionResult degenerate_support(const VerifyOptions& o) {
  return guarded(3, "degenerate support", [&](Recorder& r) { run_degenerate_support(r, o); });
}
CriterionResult gaussian_region_weights(const VerifyOptions& o) {
  return guarded(4, "gaussian region weights", [&](Recorder& r) { run_region_weights(r, o); });
}
CriterionResult product_kernels(const VerifyOptions& o) {
  return guarded(5, "product kernels at finite volume", [&](Recorder& r) { run_product_kernels(r, o); });
}
CriterionResult gibbs_ratio_limit(const VerifyOptions& o) {
  return guarded(6, "gibbs ratio limit", [&](Recorder& r) { run_ratio_limit(r, o); });
}
CriterionResult degenerate_metastate(const VerifyOptions& o) {
  return guarded(7, "degenerate-chain metastate weights", [&](Recorder& r) { run_degenerate_metastate(r, o); });
}
CriterionResult clt_independence(const VerifyOptions& o) {
  return guarded(8, "joint clt independence", [&](Recorder& r) { run_clt(r, o); });
}
CriterionResult property_suite(const VerifyOptions& o) {
  return guarded(9, "property suite", [&](Recorder& r) { run_properties(r, o); });
}

CriterionResult run_criterion(int id, const VerifyOptions& options) {
  switch (id) {
    case 1: return gibbs_oracle(options);
    case 2: return covariance_consistency(options);
    case 3: return degenerate_support(options);
    case 4: return gaussian_region_weights(options);
    case 5: return product_kernels(options);
    case 6: return gibbs_ratio_limit(options);
    case 7: return degenerate_metastate(options);
    case 8: return clt_independence(options);
    case 9: return property_suite(options);
  }
  throw Error(ErrorCode::ConfigError, strf("no criterion %d", id));
}

std::vector<int> suite_criteria(const std::string& suite) {
  if (suite == "gibbs") return {1};
  if (suite == "covariance") return {2};
  if (suite == "degenerate") return {3};
  if (suite == "theorem1" || suite == "weights") return {4};
  if (suite == "theorem2" || suite == "kernels") return {5};
  if (suite == "theorem3" || suite == "kappa") return {6, 7};
  if (suite == "clt") return {8};
  if (suite == "properties") return {9};
  if (suite == "all") return {1, 2, 3, 4, 5, 6, 7, 8, 9};
  throw Error(ErrorCode::ConfigError, "unknown suite '" + suite + "'");
}

std::string format(const CriterionResult& result) {
  std::ostringstream out;
  out << (result.passed() ? "PASS" : "FAIL") << " [" << result.id << "] " << result.name
      << strf(" (%.1f s)", result.seconds) << '\n';
  for (const auto& c : result.checks)
    out << "    " << (!c.gating ? "info" : c.passed ? "pass" : "FAIL") << "  " << c.label << ": " << c.detail << '\n';
  return out.str();
}

}  // namespace mfm::verify
