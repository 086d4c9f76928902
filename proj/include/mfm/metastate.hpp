// Metastate assembly: stability-region classification, Gaussian region
// weights, pure-state kernels, the degenerate-chain Potts metastate and the
// joint CLT diagnostic.
#pragma once

#include "mfm/core.hpp"
#include "mfm/gibbs.hpp"
#include "mfm/markov.hpp"
#include "mfm/meanfield.hpp"
#include "mfm/potts.hpp"
#include "mfm/random.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mfm::metastate {

inline constexpr int kUndecided = -1;

// Draws G ~ N(0, Sigma) restricted to the tangent space. Eigendirections with
// eigenvalue below drop_rel * trace are discarded.
class GaussianSampler {
 public:
  explicit GaussianSampler(const markov::CovarianceMatrix& sigma, double drop_rel = 1e-12);

  int dimension() const { return static_cast<int>(factor_.rows()); }
  int rank() const { return static_cast<int>(factor_.cols()); }
  // Sigma restricted to its retained range equals factor * factor^T.
  const Matrix& factor() const { return factor_; }
  Vector sample(Engine& rng) const;

 private:
  Matrix factor_;
};

// j if <x, B_j> exceeds every other <x, B_k> by more than margin, else
// kUndecided.
int classify(const Vector& x, const std::vector<TangentVector>& stability, double margin);

struct WeightEstimate {
  Vector weights;
  Vector stderrs;
  double undecided = 0.0;
  double undecided_stderr = 0.0;
  long long samples = 0;
};

// Monte Carlo estimate of P(G in R_j). Samples are drawn in fixed-size blocks
// with derived seeds, so the result does not depend on the worker count.
// Throws DegenerateAll if every sample is undecided.
WeightEstimate gaussian_weights(const markov::CovarianceMatrix& sigma, const std::vector<TangentVector>& stability,
                                long long samples, double margin, std::uint64_t seed);

// margin(n) = c * scale * n^exponent; scale is typically max_j |B_j|.
struct MarginSchedule {
  double c = 0.1;
  double scale = 1.0;
  double exponent = -0.25;

  double at(long long n) const;
  static MarginSchedule constant(double margin) { return MarginSchedule{margin, 1.0, 0.0}; }
  static MarginSchedule for_stability(const std::vector<TangentVector>& stability, double c = 0.1);
};

// Fraction of replica paths (started in equilibrium) whose fluctuation
// sqrt(n)(pi_hat - pi) classifies to each region at margin_schedule(n).
WeightEstimate empirical_region_weights(const markov::TransitionMatrix& m,
                                        const std::vector<TangentVector>& stability, int n, int replicas,
                                        const MarginSchedule& schedule, std::uint64_t seed);

struct PureStateKernels {
  int state = 0;
  std::vector<SimplexVector> kernels;  // gamma[eta(i)](. | total_j) per window site
};

PureStateKernels pure_state_kernels(const meanfield::ModelSpec& model, int state, const SimplexVector& total,
                                    const std::vector<int>& window);

enum class Provenance { Structural, Direct, Reference, Empirical };
const char* to_string(Provenance p);

struct MetastateAtom {
  Vector coefficients;  // mixture weights over pure states, sum 1
  double weight = 0.0;
  double stderr = 0.0;
};

struct MetastateEstimate {
  std::vector<MetastateAtom> atoms;
  double undecided = 0.0;
  Provenance provenance = Provenance::Structural;
  long long replicas = 0;
  bool degenerate = false;  // a single minimizer: nothing to choose between

  double total_mass() const;
};

// Single-linkage groups of coefficient vectors at sup distance tol, so the
// result does not depend on input order. Weights are sample fractions with
// binomial standard errors; coefficients are group means.
MetastateEstimate aggregate_atoms(const std::vector<Vector>& coefficients, double tol, Provenance provenance);

enum class Estimator { Structural, Direct };

struct KappaOptions {
  int n = 10000;
  int replicas = 20000;
  double radius = 0.0;  // neighborhood radius for the direct estimator; 0 picks the default
  std::uint64_t seed = 1;
  Estimator estimator = Estimator::Structural;
  double margin_c = 0.1;
  double merge_tol = 0.02;
};

// One replica path of the degenerate chain.
struct KappaReplica {
  std::vector<int> counts;  // per disorder symbol
  int last_state = 0;
  int imbalance = 0;        // n pi_hat(1) - n pi_hat(2)
  bool three_like = false;
  double ratio = 1.0;       // mass near state 1 over mass near state 2 (direct estimator)
  Vector coefficients;      // over ordered states 1, 2, 3
};

struct DegenerateSetup {
  potts::PottsParams params;
  double chain_p = 0.5;
  double u = 0.0;                               // ordered root used
  double p = 0.5;                               // potts::p_of at u
  std::vector<TangentVector> stability;         // ordered states 1..3, then u = 0 if global
  std::vector<SimplexVector> totals;            // matching minimizer totals
  double default_radius = 0.0;
};

// Throws NoOrderedPhase when only u = 0 solves the mean-field equation.
DegenerateSetup degenerate_setup(const potts::PottsParams& params, double chain_p);

std::vector<KappaReplica> degenerate_kappa_replicas(const DegenerateSetup& setup, const markov::ChainStart& start,
                                                    const KappaOptions& options);

// Per path: 3-like paths give the pure state 3. Otherwise the structural
// estimator reads the imbalance l = n pi_hat(1) - n pi_hat(2): l > 0 gives
// (p, 1-p), l = 0 gives (1/2, 1/2), l < 0 gives (1-p, p); the direct
// estimator uses (r/(1+r), 1/(1+r)) with the exact Gibbs ratio r.
MetastateEstimate degenerate_potts_kappa(const potts::PottsParams& params, double chain_p,
                                         const markov::ChainStart& start, const KappaOptions& options);

// sum_i pi(i) kappa_i, merging atoms within tol.
MetastateEstimate combine_kappa(const std::vector<MetastateEstimate>& per_start, const SimplexVector& pi,
                                double tol = 0.02);

// Four atoms: 1/2 on state 3, 1/3 on (1/2, 1/2), 1/9 on (p, 1-p), 1/18 on
// (1-p, p). Throws NoOrderedPhase.
MetastateEstimate theorem3_reference(const potts::PottsParams& params);

// Limit weights implied by the imbalance rule for the degenerate chain (its
// stationary law is uniform and eta(n) is asymptotically independent of the
// fluctuation): start 1 or 3 gives 1/2 pure, 1/3 even, 1/6 (p, 1-p); start 2
// gives 1/2 pure, 1/6 even, 1/3 (1-p, p).
MetastateEstimate degenerate_kappa_limit(const potts::PottsParams& params, const markov::ChainStart& start);

struct FinalStateSummary {
  long long count = 0;
  double frequency = 0.0;
  double frequency_z = 0.0;
  double mean = 0.0;
  double mean_z = 0.0;
  double variance = 0.0;
  double variance_z = 0.0;
};

struct CltReport {
  double limit_variance = 0.0;  // lambda^T Sigma_M lambda
  double pooled_mean = 0.0;
  double pooled_variance = 0.0;
  std::vector<FinalStateSummary> per_state;
  double max_abs_z = 0.0;
  double threshold = 4.0;
  bool passed = false;
};

// Pairs (eta(n), <lambda, sqrt(n)(pi_hat - pi)>) over equilibrium-started
// replicas; compares per-final-state moments with N(0, lambda^T Sigma_M lambda)
// and final-state frequencies with pi.
CltReport clt_joint_independence(const markov::TransitionMatrix& m, const TangentVector& lambda, int n,
                                 int replicas, std::uint64_t seed, double threshold = 4.0);

}  // namespace mfm::metastate
