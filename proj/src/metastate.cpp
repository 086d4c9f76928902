#include "mfm/metastate.hpp"

#include "mfm/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>

namespace mfm::metastate {

namespace {

constexpr long long kGaussianBlock = 4096;

Vector pure(int q, int j) {
  Vector v = Vector::Zero(q);
  v[j] = 1.0;
  return v;
}

Vector mixture(double first, int q = 3) {
  Vector v = Vector::Zero(q);
  v[0] = first;
  v[1] = 1.0 - first;
  return v;
}

WeightEstimate finish_counts(const std::vector<long long>& counts, long long undecided, long long total) {
  WeightEstimate out;
  const int k = static_cast<int>(counts.size());
  out.samples = total;
  out.weights.resize(k);
  out.stderrs.resize(k);
  const double nd = static_cast<double>(total);
  for (int j = 0; j < k; ++j) {
    const double w = counts[j] / nd;
    out.weights[j] = w;
    out.stderrs[j] = std::sqrt(w * (1.0 - w) / nd);
  }
  out.undecided = static_cast<double>(undecided) / nd;
  out.undecided_stderr = std::sqrt(out.undecided * (1.0 - out.undecided) / nd);
  return out;
}

// Single-linkage clusters of weighted coefficient vectors at sup distance tol.
struct WeightedPoint {
  Vector coefficients;
  double weight;
  double variance;
};

std::vector<MetastateAtom> cluster(const std::vector<WeightedPoint>& points, double tol) {
  const std::size_t m = points.size();
  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if ((points[i].coefficients - points[j].coefficients).cwiseAbs().maxCoeff() <= tol) parent[find(i)] = find(j);

  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < m; ++i) groups[find(i)].push_back(i);
  std::vector<MetastateAtom> atoms;
  for (const auto& [root, members] : groups) {
    MetastateAtom atom;
    atom.coefficients = Vector::Zero(points[members.front()].coefficients.size());
    double var = 0.0;
    for (std::size_t i : members) {
      atom.weight += points[i].weight;
      atom.coefficients += points[i].weight * points[i].coefficients;
      var += points[i].variance;
    }
    if (atom.weight > 0.0) atom.coefficients /= atom.weight;
    atom.coefficients /= atom.coefficients.sum();
    atom.stderr = std::sqrt(var);
    atoms.push_back(std::move(atom));
  }
  std::sort(atoms.begin(), atoms.end(), [](const MetastateAtom& a, const MetastateAtom& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    const Vector& x = a.coefficients;
    const Vector& y = b.coefficients;
    return std::lexicographical_compare(x.data(), x.data() + x.size(), y.data(), y.data() + y.size());
  });
  return atoms;
}

int start_code(const markov::ChainStart& start) { return start.state ? *start.state : -1; }

}  // namespace

GaussianSampler::GaussianSampler(const markov::CovarianceMatrix& sigma, double drop_rel) {
  const int q = sigma.size();
  if (q < 2) {
    factor_ = Matrix::Zero(q, 0);
    return;
  }
  const Matrix basis = tangent_basis(q);
  Matrix reduced = basis.transpose() * sigma.sigma * basis;
  reduced = 0.5 * (reduced + reduced.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(reduced);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::EigenFailure, "covariance eigendecomposition failed");
  const double trace = std::max(0.0, reduced.trace());
  const double floor = drop_rel * trace;
  std::vector<int> keep;
  for (int k = 0; k < es.eigenvalues().size(); ++k) {
    const double lam = es.eigenvalues()[k];
    if (lam < -kPsdSlack * std::max(1.0, trace)) throw Error(ErrorCode::InvalidArgument, "covariance is not positive semidefinite");
    if (lam > floor && lam > 0.0) keep.push_back(k);
  }
  factor_.resize(q, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c)
    factor_.col(static_cast<Eigen::Index>(c)) =
        basis * es.eigenvectors().col(keep[c]) * std::sqrt(es.eigenvalues()[keep[c]]);
}

Vector GaussianSampler::sample(Engine& rng) const {
  std::normal_distribution<double> normal;
  Vector z(rank());
  for (int i = 0; i < rank(); ++i) z[i] = normal(rng);
  return factor_ * z;
}

int classify(const Vector& x, const std::vector<TangentVector>& stability, double margin) {
  if (stability.empty()) return kUndecided;
  int best = 0;
  double top = -std::numeric_limits<double>::infinity();
  double second = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < static_cast<int>(stability.size()); ++j) {
    const double s = x.dot(stability[j].vec());
    if (s > top) {
      second = top;
      top = s;
      best = j;
    } else if (s > second) {
      second = s;
    }
  }
  return top - second > margin ? best : kUndecided;
}

WeightEstimate gaussian_weights(const markov::CovarianceMatrix& sigma, const std::vector<TangentVector>& stability,
                                long long samples, double margin, std::uint64_t seed) {
  if (samples <= 0) throw Error(ErrorCode::InvalidArgument, "sample count must be positive");
  for (const auto& b : stability)
    if (b.size() != sigma.size()) throw Error(ErrorCode::InvalidArgument, "stability vector size mismatch");
  const GaussianSampler sampler(sigma);
  const int k = static_cast<int>(stability.size());
  const long long blocks = (samples + kGaussianBlock - 1) / kGaussianBlock;
  std::vector<std::vector<long long>> counts(blocks, std::vector<long long>(k + 1, 0));
  parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t blk) {
    Engine rng(derive_seed(seed, blk));
    const long long begin = static_cast<long long>(blk) * kGaussianBlock;
    const long long end = std::min(samples, begin + kGaussianBlock);
    auto& c = counts[blk];
    for (long long s = begin; s < end; ++s) {
      const int j = classify(sampler.sample(rng), stability, margin);
      ++c[j == kUndecided ? k : j];
    }
  });
  std::vector<long long> total(k, 0);
  long long undecided = 0;
  for (const auto& c : counts) {
    for (int j = 0; j < k; ++j) total[j] += c[j];
    undecided += c[k];
  }
  if (undecided == samples) throw Error(ErrorCode::DegenerateAll, "every Gaussian sample is undecided");
  return finish_counts(total, undecided, samples);
}

double MarginSchedule::at(long long n) const {
  if (std::isinf(c)) return c;
  return c * scale * std::pow(static_cast<double>(n), exponent);
}

MarginSchedule MarginSchedule::for_stability(const std::vector<TangentVector>& stability, double c) {
  double scale = 0.0;
  for (const auto& b : stability) scale = std::max(scale, b.norm());
  return MarginSchedule{c, scale, -0.25};
}

WeightEstimate empirical_region_weights(const markov::TransitionMatrix& m,
                                        const std::vector<TangentVector>& stability, int n, int replicas,
                                        const MarginSchedule& schedule, std::uint64_t seed) {
  if (replicas <= 0 || n <= 0) throw Error(ErrorCode::InvalidArgument, "replicas and n must be positive");
  const markov::PathSampler sampler(m);
  const double margin = schedule.at(n);
  const int k = static_cast<int>(stability.size());
  std::vector<int> verdict(replicas);
  parallel_for(static_cast<std::size_t>(replicas), [&](std::size_t r) {
    std::vector<int> counts;
    int last = 0;
    sampler.sample_counts(markov::ChainStart::stationary(), n, derive_seed(seed, r), counts, last);
    const auto occ = markov::occupation_from_counts(counts, sampler.pi());
    verdict[r] = classify(occ.fluctuation.vec(), stability, margin);
  });
  std::vector<long long> total(k, 0);
  long long undecided = 0;
  for (int v : verdict) {
    if (v == kUndecided) ++undecided;
    else ++total[v];
  }
  return finish_counts(total, undecided, replicas);
}

PureStateKernels pure_state_kernels(const meanfield::ModelSpec& model, int state, const SimplexVector& total,
                                    const std::vector<int>& window) {
  PureStateKernels out;
  out.state = state;
  for (int symbol : window) out.kernels.push_back(meanfield::gamma_kernel(model, symbol, total));
  return out;
}

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::Structural: return "structural";
    case Provenance::Direct: return "direct";
    case Provenance::Reference: return "reference";
    case Provenance::Empirical: return "empirical";
  }
  return "unknown";
}

double MetastateEstimate::total_mass() const {
  double s = undecided;
  for (const auto& a : atoms) s += a.weight;
  return s;
}

MetastateEstimate aggregate_atoms(const std::vector<Vector>& coefficients, double tol, Provenance provenance) {
  MetastateEstimate out;
  out.provenance = provenance;
  out.replicas = static_cast<long long>(coefficients.size());
  if (coefficients.empty()) return out;
  auto less = [](const Vector& x, const Vector& y) {
    return std::lexicographical_compare(x.data(), x.data() + x.size(), y.data(), y.data() + y.size());
  };
  std::map<Vector, long long, decltype(less)> distinct(less);
  for (const auto& c : coefficients) ++distinct[c];
  const double nd = static_cast<double>(coefficients.size());
  std::vector<WeightedPoint> points;
  for (const auto& [c, count] : distinct) points.push_back(WeightedPoint{c, count / nd, 0.0});
  out.atoms = cluster(points, tol);
  for (auto& a : out.atoms) a.stderr = std::sqrt(a.weight * (1.0 - a.weight) / nd);
  return out;
}

DegenerateSetup degenerate_setup(const potts::PottsParams& params, double chain_p) {
  params.validate();
  if (params.q != 3) throw Error(ErrorCode::InvalidArgument, "the degenerate-chain metastate needs q = 3");
  DegenerateSetup s;
  s.params = params;
  s.chain_p = chain_p;
  const potts::OrderedState ordered = potts::ordered_branch(params);
  s.u = ordered.u;
  s.p = potts::p_of(params, s.u);
  for (int j = 0; j < 3; ++j) {
    s.stability.push_back(potts::stability_vector_closed(params, s.u, j));
    s.totals.push_back(potts::ordered_total(params, s.u, j));
  }
  const auto roots = potts::solve_order_parameters(params);
  const bool zero_stable = !roots.empty() && roots.front().u == 0.0 && roots.front().stable;
  if (zero_stable && potts::potts_free_energy_u(params, 0.0) <= ordered.value + 1e-9) {
    s.stability.push_back(TangentVector(Vector::Zero(3)));
    s.totals.push_back(SimplexVector::uniform(3));
  }
  s.default_radius = gibbs::default_radius(s.totals);
  return s;
}

std::vector<KappaReplica> degenerate_kappa_replicas(const DegenerateSetup& setup, const markov::ChainStart& start,
                                                    const KappaOptions& options) {
  if (options.n <= 0 || options.replicas <= 0) throw Error(ErrorCode::InvalidArgument, "n and replicas must be positive");
  const auto chain = markov::TransitionMatrix::degenerate(setup.chain_p);
  const markov::PathSampler sampler(chain);
  const double margin = MarginSchedule::for_stability(setup.stability, options.margin_c).at(options.n);
  const double radius = options.radius > 0.0 ? options.radius : setup.default_radius;
  const std::uint64_t stream = derive_seed(options.seed, static_cast<std::uint64_t>(start_code(start) + 1));
  std::unique_ptr<gibbs::PriorCache> cache;
  if (options.estimator == Estimator::Direct)
    cache = std::make_unique<gibbs::PriorCache>(potts::potts_model(setup.params));

  std::vector<KappaReplica> out(options.replicas);
  parallel_for(static_cast<std::size_t>(options.replicas), [&](std::size_t r) {
    KappaReplica rep;
    sampler.sample_counts(start, options.n, derive_seed(stream, r), rep.counts, rep.last_state);
    const std::vector<int>& counts = rep.counts;
    const auto occ = markov::occupation_from_counts(counts, sampler.pi());
    rep.imbalance = counts[0] - counts[1];
    rep.three_like = classify(occ.fluctuation.vec(), setup.stability, margin) == 2;
    if (rep.three_like) {
      rep.coefficients = pure(3, 2);
    } else if (options.estimator == Estimator::Structural) {
      if (rep.imbalance > 0) rep.coefficients = mixture(setup.p);
      else if (rep.imbalance < 0) rep.coefficients = mixture(1.0 - setup.p);
      else rep.coefficients = mixture(0.5);
    } else {
      const auto dist = cache->distribution(counts);
      rep.ratio = gibbs::gibbs_ratio(*dist, setup.totals[0], setup.totals[1], radius);
      rep.coefficients = mixture(rep.ratio / (1.0 + rep.ratio));
    }
    out[r] = std::move(rep);
  });
  return out;
}

MetastateEstimate degenerate_potts_kappa(const potts::PottsParams& params, double chain_p,
                                         const markov::ChainStart& start, const KappaOptions& options) {
  DegenerateSetup setup;
  try {
    setup = degenerate_setup(params, chain_p);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoOrderedPhase) throw;
    MetastateEstimate single;
    single.atoms.push_back(MetastateAtom{Vector::Constant(3, 1.0 / 3.0), 1.0, 0.0});
    single.provenance = options.estimator == Estimator::Direct ? Provenance::Direct : Provenance::Structural;
    single.degenerate = true;
    return single;
  }
  const auto replicas = degenerate_kappa_replicas(setup, start, options);
  std::vector<Vector> coefficients;
  coefficients.reserve(replicas.size());
  for (const auto& r : replicas) coefficients.push_back(r.coefficients);
  return aggregate_atoms(coefficients, options.merge_tol,
                         options.estimator == Estimator::Direct ? Provenance::Direct : Provenance::Structural);
}

MetastateEstimate combine_kappa(const std::vector<MetastateEstimate>& per_start, const SimplexVector& pi, double tol) {
  if (static_cast<int>(per_start.size()) != pi.size())
    throw Error(ErrorCode::InvalidArgument, "need one estimate per start state");
  MetastateEstimate out;
  std::vector<WeightedPoint> points;
  for (int i = 0; i < pi.size(); ++i) {
    const auto& est = per_start[i];
    if (i == 0) out.provenance = est.provenance;
    out.undecided += pi[i] * est.undecided;
    out.replicas += est.replicas;
    out.degenerate = out.degenerate || est.degenerate;
    for (const auto& a : est.atoms)
      points.push_back(WeightedPoint{a.coefficients, pi[i] * a.weight, pi[i] * pi[i] * a.stderr * a.stderr});
  }
  out.atoms = cluster(points, tol);
  return out;
}

MetastateEstimate theorem3_reference(const potts::PottsParams& params) {
  const double u = potts::ordered_branch(params).u;
  const double p = potts::p_of(params, u);
  MetastateEstimate out;
  out.provenance = Provenance::Reference;
  out.atoms = {
      MetastateAtom{pure(3, 2), 1.0 / 2.0, 0.0},
      MetastateAtom{mixture(0.5), 1.0 / 3.0, 0.0},
      MetastateAtom{mixture(p), 1.0 / 9.0, 0.0},
      MetastateAtom{mixture(1.0 - p), 1.0 / 18.0, 0.0},
  };
  return out;
}

MetastateEstimate degenerate_kappa_limit(const potts::PottsParams& params, const markov::ChainStart& start) {
  const double u = potts::ordered_branch(params).u;
  const double p = potts::p_of(params, u);
  auto for_start = [&](int s) {
    MetastateEstimate e;
    e.provenance = Provenance::Reference;
    if (s == 1) {
      e.atoms = {MetastateAtom{pure(3, 2), 0.5, 0.0}, MetastateAtom{mixture(1.0 - p), 1.0 / 3.0, 0.0},
                 MetastateAtom{mixture(0.5), 1.0 / 6.0, 0.0}};
    } else {
      e.atoms = {MetastateAtom{pure(3, 2), 0.5, 0.0}, MetastateAtom{mixture(0.5), 1.0 / 3.0, 0.0},
                 MetastateAtom{mixture(p), 1.0 / 6.0, 0.0}};
    }
    return e;
  };
  if (start.state) {
    if (*start.state < 0 || *start.state > 2) throw Error(ErrorCode::InvalidArgument, "start state out of range");
    return for_start(*start.state);
  }
  return combine_kappa({for_start(0), for_start(1), for_start(2)}, SimplexVector::uniform(3), 1e-9);
}

CltReport clt_joint_independence(const markov::TransitionMatrix& m, const TangentVector& lambda, int n,
                                 int replicas, std::uint64_t seed, double threshold) {
  if (replicas <= 1 || n <= 0) throw Error(ErrorCode::InvalidArgument, "need n > 0 and at least two replicas");
  const markov::PathSampler sampler(m);
  const int q = m.size();
  if (lambda.size() != q) throw Error(ErrorCode::InvalidArgument, "projection vector size mismatch");
  std::vector<int> last(replicas);
  std::vector<double> proj(replicas);
  parallel_for(static_cast<std::size_t>(replicas), [&](std::size_t r) {
    std::vector<int> counts;
    sampler.sample_counts(markov::ChainStart::stationary(), n, derive_seed(seed, r), counts, last[r]);
    proj[r] = lambda.vec().dot(markov::occupation_from_counts(counts, sampler.pi()).fluctuation.vec());
  });

  CltReport rep;
  rep.threshold = threshold;
  rep.limit_variance = markov::covariance_limit(m, sampler.pi()).quadratic_form(lambda.vec());
  const double nd = static_cast<double>(replicas);
  double sum = 0.0;
  double sum2 = 0.0;
  for (double x : proj) {
    sum += x;
    sum2 += x * x;
  }
  rep.pooled_mean = sum / nd;
  rep.pooled_variance = sum2 / nd - rep.pooled_mean * rep.pooled_mean;

  rep.per_state.resize(q);
  for (int b = 0; b < q; ++b) {
    FinalStateSummary& s = rep.per_state[b];
    std::vector<double> xs;
    for (int r = 0; r < replicas; ++r)
      if (last[r] == b) xs.push_back(proj[r]);
    s.count = static_cast<long long>(xs.size());
    s.frequency = s.count / nd;
    const double pib = sampler.pi()[b];
    const double freq_se = std::sqrt(pib * (1.0 - pib) / nd);
    s.frequency_z = freq_se > 0.0 ? (s.frequency - pib) / freq_se : 0.0;
    if (s.count < 2) continue;
    const double cd = static_cast<double>(s.count);
    s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / cd;
    double m2 = 0.0;
    double m4 = 0.0;
    for (double x : xs) {
      const double d = x - s.mean;
      m2 += d * d;
      m4 += d * d * d * d;
    }
    m2 /= cd;
    m4 /= cd;
    s.variance = m2;
    const double mean_var = rep.limit_variance > 0.0 ? rep.limit_variance : m2;
    s.mean_z = mean_var > 0.0 ? s.mean / std::sqrt(mean_var / cd) : 0.0;
    const double var_se = std::sqrt(std::max(0.0, m4 - m2 * m2) / cd);
    s.variance_z = var_se > 0.0 ? (m2 - rep.limit_variance) / var_se : 0.0;
  }
  rep.max_abs_z = 0.0;
  for (const auto& s : rep.per_state)
    rep.max_abs_z = std::max({rep.max_abs_z, std::abs(s.frequency_z), std::abs(s.mean_z), std::abs(s.variance_z)});
  rep.passed = rep.max_abs_z <= threshold;
  return rep;
}

}  // namespace mfm::metastate
