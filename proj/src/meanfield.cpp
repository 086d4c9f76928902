#include "mfm/meanfield.hpp"

#include "mfm/parallel.hpp"
#include "mfm/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mfm::meanfield {

namespace {

constexpr double kBoundaryTol = 1e-8;

double rel_entropy_raw(const Vector& p, const Vector& q) {
  double acc = 0.0;
  for (int a = 0; a < p.size(); ++a) {
    if (p[a] == 0.0) continue;
    if (q[a] <= 0.0) throw Error(ErrorCode::SupportViolation, "p charges a null atom of the reference measure");
    acc += p[a] * std::log(p[a] / q[a]);
  }
  return acc;
}

// Free energy on raw coordinates so finite differences can step freely.
double free_energy_raw(const ModelSpec& model, const Vector& pi, const std::vector<Vector>& parts) {
  Vector total = Vector::Zero(model.spin_size());
  double entropy = 0.0;
  for (int b = 0; b < model.disorder_size(); ++b) {
    total += pi[b] * parts[b];
    if (pi[b] != 0.0) entropy += pi[b] * rel_entropy_raw(parts[b], model.alpha(b).vec());
  }
  return model.energy(total) + entropy;
}

void require_disorder(const ModelSpec& model, const SimplexVector& pi) {
  if (pi.size() != model.disorder_size())
    throw Error(ErrorCode::InvalidArgument, "disorder weights do not match the model's disorder alphabet");
}

void require_profile(const ModelSpec& model, const TypeProfile& nu_hat) {
  if (nu_hat.size() != model.disorder_size())
    throw Error(ErrorCode::InvalidArgument, "profile does not match the model's disorder alphabet");
  for (const auto& part : nu_hat.components())
    if (part.size() != model.spin_size()) throw Error(ErrorCode::InvalidArgument, "profile component has wrong size");
}

double min_entry(const TypeProfile& nu_hat) {
  double lo = 1.0;
  for (const auto& part : nu_hat.components()) lo = std::min(lo, part.vec().minCoeff());
  return lo;
}

}  // namespace

TypeProfile::TypeProfile(std::vector<SimplexVector> components) : parts_(std::move(components)) {
  for (const auto& part : parts_)
    if (part.size() != parts_.front().size())
      throw Error(ErrorCode::InvalidArgument, "profile components have different sizes");
}

SimplexVector TypeProfile::total(const SimplexVector& weights) const {
  if (weights.size() != size()) throw Error(ErrorCode::InvalidArgument, "weights do not match profile size");
  Vector acc = Vector::Zero(parts_.front().size());
  for (int b = 0; b < size(); ++b) acc += weights[b] * parts_[b].vec();
  return SimplexVector::normalized(std::move(acc));
}

ModelSpec::ModelSpec(std::string name, int spin_size, Energy energy, Gradient gradient,
                     std::vector<SimplexVector> alpha)
    : name_(std::move(name)), q_(spin_size), energy_(std::move(energy)), gradient_(std::move(gradient)),
      alpha_(std::move(alpha)) {
  if (q_ < 1) throw Error(ErrorCode::InvalidArgument, "spin alphabet must be nonempty");
  if (alpha_.empty()) throw Error(ErrorCode::InvalidArgument, "disorder alphabet must be nonempty");
  for (const auto& a : alpha_) {
    if (a.size() != q_) throw Error(ErrorCode::InvalidArgument, "a-priori kernel has wrong size");
    if (!a.strictly_positive()) throw Error(ErrorCode::InvalidArgument, "a-priori kernels must be strictly positive");
  }
  const double dev = gradient_check(*this, 100, 0x5eedULL);
  if (!(dev <= 1e-6)) {
    std::ostringstream os;
    os << "gradient disagrees with finite differences of the energy (deviation " << dev << ")";
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
}

ModelSpec ModelSpec::potts(double beta, double field, int q) {
  if (!std::isfinite(beta) || !std::isfinite(field)) throw Error(ErrorCode::InvalidArgument, "Potts parameters must be finite");
  if (q < 2) throw Error(ErrorCode::InvalidArgument, "Potts model needs q >= 2");
  std::vector<SimplexVector> alpha;
  // e^{B 1[a=b]} / (e^B + q - 1), written so large B does not overflow.
  const double hi = 1.0 / (1.0 + (q - 1) * std::exp(-field));
  const double lo = std::exp(-field) * hi;
  for (int b = 0; b < q; ++b) {
    Vector v = Vector::Constant(q, lo);
    v[b] = hi;
    alpha.push_back(SimplexVector::normalized(std::move(v)));
  }
  std::ostringstream name;
  name.precision(17);
  name << "potts(beta=" << beta << ",field=" << field << ",q=" << q << ")";
  return ModelSpec(
      name.str(), q, [beta](const Vector& nu) { return -0.5 * beta * nu.squaredNorm(); },
      [beta](const Vector& nu) { return Vector(-beta * nu); }, std::move(alpha));
}

ModelSpec ModelSpec::free(std::vector<SimplexVector> alpha) {
  if (alpha.empty()) throw Error(ErrorCode::InvalidArgument, "disorder alphabet must be nonempty");
  const int q = alpha.front().size();
  return ModelSpec(
      "free", q, [](const Vector&) { return 0.0; }, [q](const Vector&) { return Vector(Vector::Zero(q)); },
      std::move(alpha));
}

ModelSpec ModelSpec::quadratic(const Matrix& coupling, std::vector<SimplexVector> alpha) {
  if (coupling.rows() != coupling.cols()) throw Error(ErrorCode::InvalidArgument, "coupling must be square");
  if ((coupling - coupling.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol)
    throw Error(ErrorCode::InvalidArgument, "coupling must be symmetric");
  const Matrix j = 0.5 * (coupling + coupling.transpose());
  return ModelSpec(
      "quadratic", static_cast<int>(j.rows()), [j](const Vector& nu) { return -0.5 * nu.dot(j * nu); },
      [j](const Vector& nu) { return Vector(-(j * nu)); }, std::move(alpha));
}

double gradient_check(const ModelSpec& model, int points, std::uint64_t seed) {
  const int q = model.spin_size();
  if (q < 2) return 0.0;
  const Matrix basis = tangent_basis(q);
  Engine rng(seed);
  const double h = 1e-5;
  double worst = 0.0;
  for (int k = 0; k < points; ++k) {
    Vector x(q);
    for (int a = 0; a < q; ++a) x[a] = -std::log(1.0 - uniform01(rng));
    x /= x.sum();
    const Vector grad = model.gradient(x);
    if (grad.size() != q) throw Error(ErrorCode::InvalidArgument, "gradient has wrong size");
    for (int c = 0; c < basis.cols(); ++c) {
      const Vector dir = basis.col(c);
      const double fd = (model.energy(x + h * dir) - model.energy(x - h * dir)) / (2.0 * h);
      const double exact = grad.dot(dir);
      worst = std::max(worst, std::abs(fd - exact) / std::max(1.0, std::abs(exact)));
    }
  }
  return worst;
}

double rel_entropy(const SimplexVector& p, const SimplexVector& q) {
  if (p.size() != q.size()) throw Error(ErrorCode::InvalidArgument, "relative entropy of vectors with different sizes");
  return std::max(0.0, rel_entropy_raw(p.vec(), q.vec()));
}

double free_energy(const ModelSpec& model, const SimplexVector& pi, const TypeProfile& nu_hat) {
  require_disorder(model, pi);
  require_profile(model, nu_hat);
  std::vector<Vector> parts;
  for (const auto& part : nu_hat.components()) parts.push_back(part.vec());
  return free_energy_raw(model, pi.vec(), parts);
}

double critical_free_energy(const ModelSpec& model, const SimplexVector& pi, const SimplexVector& nu) {
  require_disorder(model, pi);
  const Vector grad = model.gradient(nu.vec());
  double value = model.energy(nu.vec()) - nu.vec().dot(grad);
  std::vector<double> logits(model.spin_size());
  for (int b = 0; b < model.disorder_size(); ++b) {
    if (pi[b] == 0.0) continue;
    for (int a = 0; a < model.spin_size(); ++a) logits[a] = -grad[a] + std::log(model.alpha(b)[a]);
    value -= pi[b] * log_sum_exp(logits);
  }
  return value;
}

SimplexVector gamma_kernel(const ModelSpec& model, int b, const SimplexVector& nu) {
  if (b < 0 || b >= model.disorder_size()) throw Error(ErrorCode::InvalidArgument, "disorder symbol out of range");
  if (nu.size() != model.spin_size()) throw Error(ErrorCode::InvalidArgument, "spin distribution has wrong size");
  const Vector grad = model.gradient(nu.vec());
  const Vector logits = -grad + model.alpha(b).vec().array().log().matrix();
  return SimplexVector::normalized(softmax(logits));
}

SimplexVector self_consistent_map(const ModelSpec& model, const SimplexVector& pi, const SimplexVector& nu) {
  require_disorder(model, pi);
  const Vector grad = model.gradient(nu.vec());
  Vector acc = Vector::Zero(model.spin_size());
  for (int b = 0; b < model.disorder_size(); ++b) {
    if (pi[b] == 0.0) continue;
    const Vector logits = -grad + model.alpha(b).vec().array().log().matrix();
    acc += pi[b] * softmax(logits);
  }
  return SimplexVector::normalized(std::move(acc));
}

TypeProfile lift(const ModelSpec& model, const SimplexVector& nu) {
  std::vector<SimplexVector> parts;
  for (int b = 0; b < model.disorder_size(); ++b) parts.push_back(gamma_kernel(model, b, nu));
  return TypeProfile(std::move(parts));
}

FixedPointResult iterate_fixed_point(const ModelSpec& model, const SimplexVector& pi, SimplexVector start,
                                     double tol, int max_iter) {
  FixedPointResult out{std::move(start), 0, false};
  double previous = std::numeric_limits<double>::infinity();
  int growing = 0;
  for (int it = 1; it <= max_iter; ++it) {
    SimplexVector next = self_consistent_map(model, pi, out.total);
    const double step = (next.vec() - out.total.vec()).cwiseAbs().maxCoeff();
    if (out.damped) next = SimplexVector::normalized(0.5 * (next.vec() + out.total.vec()));
    out.total = std::move(next);
    out.iterations = it;
    if (step <= tol) return out;
    growing = step > previous ? growing + 1 : 0;
    if (growing >= 2) out.damped = true;
    previous = step;
  }
  throw Error(ErrorCode::NonConvergence, "fixed-point iteration did not converge");
}

HessianReport hessian_pd(const ModelSpec& model, const SimplexVector& pi, const TypeProfile& nu_hat, double tol,
                         double h) {
  require_disorder(model, pi);
  require_profile(model, nu_hat);
  const double lo = min_entry(nu_hat);
  if (lo < kBoundaryTol) throw Error(ErrorCode::BoundaryPoint, "profile is too close to a simplex face");
  h = std::min(h, lo / 8.0);

  const int q = model.spin_size();
  const int blocks = model.disorder_size();
  const Matrix basis = tangent_basis(q);
  const int dim = blocks * (q - 1);
  if (dim == 0) return HessianReport{0.0, false};

  std::vector<Vector> base;
  for (const auto& part : nu_hat.components()) base.push_back(part.vec());
  auto direction = [&](int k) { return std::pair<int, Vector>{k / (q - 1), basis.col(k % (q - 1))}; };
  auto eval = [&](int i, double si, int j, double sj) {
    std::vector<Vector> parts = base;
    const auto [bi, di] = direction(i);
    const auto [bj, dj] = direction(j);
    parts[bi] += si * di;
    parts[bj] += sj * dj;
    return free_energy_raw(model, pi.vec(), parts);
  };
  auto hessian_at = [&](double step) {
    Matrix hm(dim, dim);
    const double f0 = free_energy_raw(model, pi.vec(), base);
    for (int i = 0; i < dim; ++i) {
      hm(i, i) = (eval(i, step, i, 0.0) - 2.0 * f0 + eval(i, -step, i, 0.0)) / (step * step);
      for (int j = i + 1; j < dim; ++j) {
        const double v = (eval(i, step, j, step) - eval(i, step, j, -step) - eval(i, -step, j, step) +
                          eval(i, -step, j, -step)) /
                         (4.0 * step * step);
        hm(i, j) = v;
        hm(j, i) = v;
      }
    }
    return hm;
  };
  const Matrix coarse = hessian_at(h);
  const Matrix fine = hessian_at(0.5 * h);
  const Matrix refined = (4.0 * fine - coarse) / 3.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(refined, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::EigenFailure, "Hessian eigendecomposition failed");
  const double min_eig = es.eigenvalues().minCoeff();
  return HessianReport{min_eig, min_eig > tol};
}

std::vector<SimplexVector> simplex_grid(int size, int resolution) {
  if (size < 1 || resolution < 2) throw Error(ErrorCode::InvalidArgument, "grid needs size >= 1 and resolution >= 2");
  const int steps = resolution - 1;
  std::vector<SimplexVector> out;
  std::vector<int> counts(size, 0);
  // Compositions of `steps` into `size` nonnegative parts, lexicographic.
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == size - 1) {
      counts[pos] = left;
      Vector v(size);
      for (int i = 0; i < size; ++i) v[i] = static_cast<double>(counts[i]) / steps;
      out.push_back(SimplexVector::normalized(std::move(v)));
      return;
    }
    for (int c = left; c >= 0; --c) {
      counts[pos] = c;
      rec(pos + 1, left - c);
    }
  };
  rec(0, steps);
  return out;
}

SearchResult find_minimizers(const ModelSpec& model, const SimplexVector& pi, const SearchOptions& options) {
  require_disorder(model, pi);
  const std::vector<SimplexVector> grid = simplex_grid(model.spin_size(), options.grid_resolution);
  std::vector<std::optional<SimplexVector>> converged(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    try {
      converged[i] = iterate_fixed_point(model, pi, grid[i], options.fixed_point_tol, options.max_iter).total;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonConvergence) throw;
    }
  });

  SearchResult result;
  result.starts = static_cast<int>(grid.size());
  std::vector<SimplexVector> unique;
  for (const auto& c : converged) {
    if (!c) {
      ++result.dropped;
      continue;
    }
    const bool seen = std::any_of(unique.begin(), unique.end(), [&](const SimplexVector& u) {
      return (u.vec() - c->vec()).cwiseAbs().maxCoeff() <= options.dedup_tol;
    });
    if (!seen) unique.push_back(*c);
  }
  if (unique.empty()) throw Error(ErrorCode::EmptyResult, "no start converged");

  for (const auto& total : unique) {
    MinimizerRecord rec;
    rec.profile = lift(model, total);
    rec.total = rec.profile.total(pi);
    rec.value = free_energy(model, pi, rec.profile);
    rec.boundary = min_entry(rec.profile) < kBoundaryTol;
    if (!rec.boundary) {
      rec.hessian = hessian_pd(model, pi, rec.profile);
      if (rec.hessian->min_eigenvalue < -1e-7) {
        ++result.saddles;
        continue;
      }
      rec.stability = stability_vector(model, pi, rec.profile);
    }
    result.records.push_back(std::move(rec));
  }

  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : result.records) best = std::min(best, r.value);
  for (auto& r : result.records) r.global = r.value <= best + options.global_tol;

  std::sort(result.records.begin(), result.records.end(), [](const MinimizerRecord& a, const MinimizerRecord& b) {
    const long long ka = std::llround(a.value * 1e9);
    const long long kb = std::llround(b.value * 1e9);
    if (ka != kb) return ka < kb;
    const Vector& x = a.total.vec();
    const Vector& y = b.total.vec();
    return std::lexicographical_compare(x.data(), x.data() + x.size(), y.data(), y.data() + y.size());
  });
  return result;
}

TangentVector stability_vector(const ModelSpec& model, const SimplexVector& pi, const TypeProfile& nu_hat) {
  require_disorder(model, pi);
  require_profile(model, nu_hat);
  const SimplexVector total = nu_hat.total(pi);
  const Vector grad = model.gradient(total.vec());
  Vector raw(model.disorder_size());
  for (int b = 0; b < model.disorder_size(); ++b)
    raw[b] = -(grad.dot(nu_hat[b].vec()) + rel_entropy(nu_hat[b], model.alpha(b)));
  return TangentVector::project(raw);
}

TangentVector stability_vector(const ModelSpec& model, const SimplexVector& pi, const MinimizerRecord& record) {
  return stability_vector(model, pi, record.profile);
}

TangentVector stability_vector_numeric(const ModelSpec& model, const SimplexVector& pi, const TypeProfile& nu_hat,
                                       double h) {
  require_disorder(model, pi);
  require_profile(model, nu_hat);
  const int qd = model.disorder_size();
  std::vector<Vector> parts;
  for (const auto& part : nu_hat.components()) parts.push_back(part.vec());
  const Matrix basis = tangent_basis(qd);
  Vector grad(basis.cols());
  for (int k = 0; k < basis.cols(); ++k) {
    const Vector dir = basis.col(k);
    grad[k] = (free_energy_raw(model, pi.vec() + h * dir, parts) - free_energy_raw(model, pi.vec() - h * dir, parts)) /
              (2.0 * h);
  }
  return TangentVector::project(-(basis * grad));
}

Condition2Report check_condition2(const std::vector<MinimizerRecord>& records) {
  Condition2Report out;
  std::vector<const TangentVector*> vs;
  for (const auto& r : records)
    if (r.global && r.stability) vs.push_back(&*r.stability);
  for (std::size_t i = 0; i < vs.size(); ++i)
    for (std::size_t j = i + 1; j < vs.size(); ++j)
      out.min_distance = std::min(out.min_distance, (vs[i]->vec() - vs[j]->vec()).norm());
  out.satisfied = out.min_distance > 1e-8;
  return out;
}

}  // namespace mfm::meanfield
