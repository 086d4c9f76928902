// Finite-type mean-field free energy: evaluation, gamma kernels, minimizer
// search, Hessian checks and stability vectors.
#pragma once

#include "mfm/core.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mfm::meanfield {

// One spin distribution per disorder symbol.
class TypeProfile {
 public:
  TypeProfile() = default;
  explicit TypeProfile(std::vector<SimplexVector> components);

  int size() const { return static_cast<int>(parts_.size()); }
  const SimplexVector& operator[](int b) const { return parts_[b]; }
  const std::vector<SimplexVector>& components() const { return parts_; }

  // sum_b weights(b) * nu_hat(b)
  SimplexVector total(const SimplexVector& weights) const;

 private:
  std::vector<SimplexVector> parts_;
};

// Energy F on the spin simplex with its gradient, plus the a-priori kernels
// alpha[b]. F and dF must accept any vector of the right length (finite
// differences step slightly off the simplex).
class ModelSpec {
 public:
  using Energy = std::function<double(const Vector&)>;
  using Gradient = std::function<Vector(const Vector&)>;

  // Throws InvalidArgument if a kernel is not strictly positive, sizes
  // disagree, or dF deviates from finite differences of F by more than 1e-6
  // at 100 random simplex points.
  ModelSpec(std::string name, int spin_size, Energy energy, Gradient gradient,
            std::vector<SimplexVector> alpha);

  // F(nu) = -beta/2 |nu|^2, alpha[b](a) = e^{B 1[a=b]} / (e^B + q - 1).
  static ModelSpec potts(double beta, double field, int q);
  // F = 0.
  static ModelSpec free(std::vector<SimplexVector> alpha);
  // F(nu) = -1/2 nu^T J nu with J symmetric.
  static ModelSpec quadratic(const Matrix& coupling, std::vector<SimplexVector> alpha);

  const std::string& name() const { return name_; }
  int spin_size() const { return q_; }
  int disorder_size() const { return static_cast<int>(alpha_.size()); }
  double energy(const Vector& nu) const { return energy_(nu); }
  Vector gradient(const Vector& nu) const { return gradient_(nu); }
  const SimplexVector& alpha(int b) const { return alpha_[b]; }
  const std::vector<SimplexVector>& kernels() const { return alpha_; }

 private:
  std::string name_;
  int q_;
  Energy energy_;
  Gradient gradient_;
  std::vector<SimplexVector> alpha_;
};

// Largest deviation between dF and central differences of F along tangent
// directions, over `points` random simplex points.
double gradient_check(const ModelSpec& model, int points, std::uint64_t seed);

// sum_a p(a) log(p(a)/q(a)); throws SupportViolation if p charges a null atom of q.
double rel_entropy(const SimplexVector& p, const SimplexVector& q);

// F(sum_b pi(b) nu_hat(b)) + sum_b pi(b) rel_entropy(nu_hat(b), alpha[b]).
double free_energy(const ModelSpec& model, const SimplexVector& pi, const TypeProfile& nu_hat);

// F(nu) - <nu, dF(nu)> - sum_b pi(b) log sum_a e^{-dF(nu)(a)} alpha[b](a).
// Equals free_energy on the lifted profile whenever nu is a fixed point.
double critical_free_energy(const ModelSpec& model, const SimplexVector& pi, const SimplexVector& nu);

// gamma[b](a | nu) proportional to e^{-dF(nu)(a)} alpha[b](a).
SimplexVector gamma_kernel(const ModelSpec& model, int b, const SimplexVector& nu);

// sum_b pi(b) gamma[b](. | nu).
SimplexVector self_consistent_map(const ModelSpec& model, const SimplexVector& pi, const SimplexVector& nu);

// Profile b -> gamma[b](. | nu).
TypeProfile lift(const ModelSpec& model, const SimplexVector& nu);

struct FixedPointResult {
  SimplexVector total;
  int iterations = 0;
  bool damped = false;
};

// Iterates self_consistent_map until the sup-norm step is below tol. Switches
// to 0.5 damping when the step stops shrinking. Throws NonConvergence.
FixedPointResult iterate_fixed_point(const ModelSpec& model, const SimplexVector& pi, SimplexVector start,
                                     double tol = 1e-14, int max_iter = 200000);

struct HessianReport {
  double min_eigenvalue = 0.0;
  bool positive_definite = false;
};

// Central-difference Hessian of the free energy in tangent coordinates of the
// product of simplices, Richardson-refined from steps h and h/2. Throws
// BoundaryPoint if an entry of nu_hat is below 1e-8.
HessianReport hessian_pd(const ModelSpec& model, const SimplexVector& pi, const TypeProfile& nu_hat,
                         double tol = 1e-7, double h = 1e-4);

struct MinimizerRecord {
  TypeProfile profile;
  SimplexVector total;
  double value = 0.0;
  bool global = false;
  bool boundary = false;                 // some entry < 1e-8; no Hessian or stability
  std::optional<HessianReport> hessian;
  std::optional<TangentVector> stability;
};

struct SearchOptions {
  int grid_resolution = 11;  // points per simplex edge
  double global_tol = 1e-9;  // free-energy gap for the global flag
  double fixed_point_tol = 1e-14;
  int max_iter = 200000;
  double dedup_tol = 1e-6;   // sup-norm on totals
};

struct SearchResult {
  std::vector<MinimizerRecord> records;  // sorted by value, then lexicographic total
  int starts = 0;
  int dropped = 0;   // starts that failed to converge
  int saddles = 0;   // converged critical points rejected by the Hessian test
};

// Multistart fixed-point search from the simplex grid on totals. Throws
// EmptyResult if no start converges.
SearchResult find_minimizers(const ModelSpec& model, const SimplexVector& pi, const SearchOptions& options = {});

// Negative gradient of pi_hat -> free_energy(pi_hat, nu_hat) at pi, projected
// to the tangent space:
//   B(b) = -[<dF(nu), nu_hat(b)> + rel_entropy(nu_hat(b), alpha[b])] - mean.
TangentVector stability_vector(const ModelSpec& model, const SimplexVector& pi, const TypeProfile& nu_hat);
TangentVector stability_vector(const ModelSpec& model, const SimplexVector& pi, const MinimizerRecord& record);

// Same quantity from central differences of the free energy in pi_hat.
TangentVector stability_vector_numeric(const ModelSpec& model, const SimplexVector& pi, const TypeProfile& nu_hat,
                                       double h = 1e-5);

struct Condition2Report {
  bool satisfied = true;
  double min_distance = std::numeric_limits<double>::infinity();
};

// True iff stability vectors of the global minimizers are pairwise more than
// 1e-8 apart.
Condition2Report check_condition2(const std::vector<MinimizerRecord>& records);

// Simplex grid with `resolution` points per edge.
std::vector<SimplexVector> simplex_grid(int size, int resolution);

}  // namespace mfm::meanfield
