// Finite-state ergodic Markov chains: validation, stationary law, path
// sampling, occupation statistics and occupation-time covariances.
#pragma once

#include "mfm/core.hpp"
#include "mfm/random.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mfm::markov {

// Row-stochastic matrix on a finite alphabet of disorder symbols. States are
// 0-based internally; labels are what gets printed.
class TransitionMatrix {
 public:
  // Throws NotStochastic if a row does not sum to 1 (1e-12) or an entry is
  // outside [0, 1].
  explicit TransitionMatrix(Matrix entries, std::vector<std::string> labels = {});

  // The chain with a deterministic transition 1 -> 2:
  //   [0 1 0; p 0 1-p; 1-p 0 p]
  static TransitionMatrix degenerate(double p);
  // Every row equal to rho (i.i.d. disorder).
  static TransitionMatrix iid(const SimplexVector& rho);
  // 3x3 doubly stochastic family parametrized by its upper-left 2x2 block.
  static TransitionMatrix doubly(double a, double b, double c, double d);
  // ((1-a, a), (b, 1-b)).
  static TransitionMatrix two_state(double a, double b);

  int size() const { return static_cast<int>(m_.rows()); }
  double operator()(int from, int to) const { return m_(from, to); }
  const Matrix& matrix() const { return m_; }
  const std::vector<std::string>& labels() const { return labels_; }

  // Relabels states: result(s(i), s(j)) = M(i, j).
  TransitionMatrix permuted(const std::vector<int>& perm) const;

 private:
  Matrix m_;
  std::vector<std::string> labels_;
};

struct ErgodicityCertificate {
  int power;  // smallest r with M^r entrywise positive
};

// Checks positivity of M^r for r up to the Wielandt bound (q-1)^2 + 1 with
// boolean reachability. Throws NotErgodic.
ErgodicityCertificate validate_chain(const TransitionMatrix& m);

// Solves pi^T M = pi^T with the normalization row appended. Throws
// SolverFailure if the residual exceeds 1e-12.
SimplexVector stationary(const TransitionMatrix& m);

// Cross-check: power iteration on a row vector started uniform.
SimplexVector stationary_power_iteration(const TransitionMatrix& m, int max_iter = 100000);

struct ChainStart {
  std::optional<int> state;  // empty means draw eta(1) from the stationary law

  static ChainStart fixed(int b) { return ChainStart{b}; }
  static ChainStart stationary() { return ChainStart{}; }
  bool is_stationary() const { return !state.has_value(); }
};

struct ChainPath {
  std::vector<int> states;
  std::uint64_t seed = 0;
  ChainStart start;

  int length() const { return static_cast<int>(states.size()); }
};

// Precomputed row cumulative sums and stationary law for repeated sampling.
class PathSampler {
 public:
  explicit PathSampler(const TransitionMatrix& m);

  ChainPath sample(const ChainStart& start, int n, std::uint64_t seed) const;
  // Only the per-symbol counts and the final state; no path storage.
  void sample_counts(const ChainStart& start, int n, std::uint64_t seed,
                     std::vector<int>& counts, int& last_state) const;

  const SimplexVector& pi() const { return pi_; }
  int size() const { return q_; }

 private:
  int draw(const std::vector<double>& cumulative, double u) const;
  int first_state(const ChainStart& start, Engine& rng) const;

  int q_;
  std::vector<std::vector<double>> cumulative_;
  std::vector<double> pi_cumulative_;
  SimplexVector pi_;
};

// Identical (m, start, n, seed) always reproduce the identical path.
ChainPath sample_path(const TransitionMatrix& m, const ChainStart& start, int n, std::uint64_t seed);

struct OccupationStats {
  std::vector<int> counts;    // |Lambda_n(b)|
  SimplexVector frequencies;  // counts / n
  TangentVector fluctuation;  // sqrt(n) (frequencies - pi)
};

OccupationStats occupation(const ChainPath& path, const SimplexVector& pi);
OccupationStats occupation_from_counts(const std::vector<int>& counts, const SimplexVector& pi);

enum class CovarianceKind { Finite, Limit };

struct CovarianceMatrix {
  Matrix sigma;
  CovarianceKind kind = CovarianceKind::Limit;
  long long volume = 0;  // set for finite-n covariances

  int size() const { return static_cast<int>(sigma.rows()); }
  double quadratic_form(const Vector& x) const { return x.dot(sigma * x); }
};

// n * Cov_pi(pi_hat_n(i), pi_hat_n(j)) for the chain started in equilibrium.
CovarianceMatrix covariance_finite(const TransitionMatrix& m, const SimplexVector& pi, long long n);

enum class CovarianceMethod { Series, FundamentalMatrix };

// Limit n -> infinity of covariance_finite. Series truncation stops once the
// estimated tail C mu^(R+1) / (1 - mu) drops below tol; throws
// NonConvergence after max_terms.
CovarianceMatrix covariance_limit(const TransitionMatrix& m, const SimplexVector& pi,
                                  CovarianceMethod method = CovarianceMethod::FundamentalMatrix,
                                  double tol = 1e-13, long long max_terms = 10'000'000);

struct TangentRank {
  int rank = 0;
  Vector eigenvalues;                  // restricted to the tangent space, ascending
  std::vector<Vector> null_directions; // orthonormal, sum-zero
};

TangentRank tangent_rank(const CovarianceMatrix& sigma, double tol = 1e-10);

struct SpectralInfo {
  double mu = 0.0;  // second-largest eigenvalue modulus
  int multiplicity = 1;
};

SpectralInfo spectral_info(const TransitionMatrix& m);

// Cross-check for mu: ||(M - 1 pi^T)^r||^(1/r) at the given r.
double power_decay_rate(const TransitionMatrix& m, const SimplexVector& pi, int r);

}  // namespace mfm::markov
