#include "mfm/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mfm {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotStochastic: return "NotStochastic";
    case ErrorCode::NotErgodic: return "NotErgodic";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::EigenFailure: return "EigenFailure";
    case ErrorCode::SupportViolation: return "SupportViolation";
    case ErrorCode::EmptyResult: return "EmptyResult";
    case ErrorCode::BoundaryPoint: return "BoundaryPoint";
    case ErrorCode::NoBracket: return "NoBracket";
    case ErrorCode::VolumeTooLarge: return "VolumeTooLarge";
    case ErrorCode::ZeroMass: return "ZeroMass";
    case ErrorCode::NoOrderedPhase: return "NoOrderedPhase";
    case ErrorCode::DegenerateAll: return "DegenerateAll";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

SimplexVector::SimplexVector(Vector coords) : v_(std::move(coords)) {
  if (v_.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty probability vector");
  for (int i = 0; i < v_.size(); ++i) {
    if (!std::isfinite(v_[i]) || v_[i] < 0.0) {
      std::ostringstream os;
      os << "coordinate " << i << " = " << v_[i] << " is not a probability";
      throw Error(ErrorCode::InvalidArgument, os.str());
    }
  }
  const double total = v_.sum();
  if (std::abs(total - 1.0) > kSimplexTol) {
    std::ostringstream os;
    os.precision(17);
    os << "probability vector sums to " << total;
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
}

SimplexVector::SimplexVector(std::initializer_list<double> coords)
    : SimplexVector(Vector(Eigen::Map<const Vector>(coords.begin(), static_cast<Eigen::Index>(coords.size())))) {}

SimplexVector SimplexVector::uniform(int size) {
  if (size <= 0) throw Error(ErrorCode::InvalidArgument, "uniform vector needs positive size");
  return SimplexVector(Vector::Constant(size, 1.0 / size));
}

SimplexVector SimplexVector::normalized(Vector weights) {
  if (weights.size() == 0 || weights.minCoeff() < 0.0 || !(weights.sum() > 0.0))
    throw Error(ErrorCode::InvalidArgument, "cannot normalize weights");
  weights /= weights.sum();
  return SimplexVector(std::move(weights));
}

TangentVector::TangentVector(Vector coords) : v_(std::move(coords)) {
  const double scale = std::max(1.0, v_.cwiseAbs().maxCoeff());
  if (std::abs(v_.sum()) > kSimplexTol * scale * std::max<Eigen::Index>(1, v_.size()))
    throw Error(ErrorCode::InvalidArgument, "tangent vector coordinates do not sum to zero");
}

TangentVector TangentVector::project(const Vector& coords) {
  Vector v = coords.array() - coords.mean();
  return TangentVector(std::move(v));
}

Matrix tangent_basis(int size) {
  // Helmert columns: e_1 - e_2, e_1 + e_2 - 2 e_3, ..., normalized.
  Matrix basis = Matrix::Zero(size, std::max(0, size - 1));
  for (int k = 1; k < size; ++k) {
    const double norm = std::sqrt(static_cast<double>(k) * (k + 1));
    for (int i = 0; i < k; ++i) basis(i, k - 1) = 1.0 / norm;
    basis(k, k - 1) = -static_cast<double>(k) / norm;
  }
  return basis;
}

double log_sum_exp(std::span<const double> xs) {
  double hi = kNegInf;
  for (double x : xs) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

Vector softmax(const Vector& logits) {
  const double hi = logits.maxCoeff();
  Vector w = (logits.array() - hi).exp();
  return w / w.sum();
}

}  // namespace mfm
