// Shared numeric vocabulary: vectors on finite alphabets, probability and
// tangent vectors, error codes.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kSimplexTol = 1e-12;
inline constexpr double kSymmetryTol = 1e-10;
inline constexpr double kPsdSlack = 1e-9;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

enum class ErrorCode {
  NotStochastic,
  NotErgodic,
  SolverFailure,
  NonConvergence,
  EigenFailure,
  SupportViolation,
  EmptyResult,
  BoundaryPoint,
  NoBracket,
  VolumeTooLarge,
  ZeroMass,
  NoOrderedPhase,
  DegenerateAll,
  InvalidArgument,
  ConfigError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// A probability vector on a finite alphabet. Construction validates
// nonnegativity and normalization to kSimplexTol.
class SimplexVector {
 public:
  SimplexVector() = default;
  explicit SimplexVector(Vector coords);
  SimplexVector(std::initializer_list<double> coords);

  static SimplexVector uniform(int size);
  // Divides by the sum; entries must be nonnegative with positive sum.
  static SimplexVector normalized(Vector weights);

  int size() const { return static_cast<int>(v_.size()); }
  double operator[](int i) const { return v_[i]; }
  const Vector& vec() const { return v_; }
  bool strictly_positive() const { return size() > 0 && v_.minCoeff() > 0.0; }

 private:
  Vector v_;
};

// A vector whose coordinates sum to zero (a direction inside a simplex).
class TangentVector {
 public:
  TangentVector() = default;
  explicit TangentVector(Vector coords);
  // Subtracts the mean so the result lies in the tangent space.
  static TangentVector project(const Vector& coords);

  int size() const { return static_cast<int>(v_.size()); }
  double operator[](int i) const { return v_[i]; }
  const Vector& vec() const { return v_; }
  double dot(const TangentVector& other) const { return v_.dot(other.v_); }
  double norm() const { return v_.norm(); }

 private:
  Vector v_;
};

// Orthonormal basis (columns) of the sum-zero hyperplane in R^size.
Matrix tangent_basis(int size);

// log(sum(exp(x))) with -inf entries allowed; returns -inf for an empty or
// all -inf input.
double log_sum_exp(std::span<const double> xs);

// Softmax of logits, computed with the max shifted out.
Vector softmax(const Vector& logits);

}  // namespace mfm
