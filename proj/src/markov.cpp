#include "mfm/markov.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mfm::markov {

namespace {

Matrix equilibrium_projector(const SimplexVector& pi) {
  const int q = pi.size();
  return Vector::Ones(q) * pi.vec().transpose();
}

double inf_norm(const Matrix& a) { return a.cwiseAbs().rowwise().sum().maxCoeff(); }

void require_size(const TransitionMatrix& m, const SimplexVector& pi) {
  if (pi.size() != m.size())
    throw Error(ErrorCode::InvalidArgument, "stationary vector and chain have different sizes");
}

}  // namespace

TransitionMatrix::TransitionMatrix(Matrix entries, std::vector<std::string> labels)
    : m_(std::move(entries)), labels_(std::move(labels)) {
  if (m_.rows() == 0 || m_.rows() != m_.cols())
    throw Error(ErrorCode::NotStochastic, "transition matrix must be square and nonempty");
  for (int i = 0; i < m_.rows(); ++i) {
    for (int j = 0; j < m_.cols(); ++j) {
      const double x = m_(i, j);
      if (!std::isfinite(x) || x < 0.0 || x > 1.0) {
        std::ostringstream os;
        os << "entry (" << i + 1 << "," << j + 1 << ") = " << x << " is not a probability";
        throw Error(ErrorCode::NotStochastic, os.str());
      }
    }
    const double row = m_.row(i).sum();
    if (std::abs(row - 1.0) > kSimplexTol) {
      std::ostringstream os;
      os.precision(17);
      os << "row " << i + 1 << " sums to " << row;
      throw Error(ErrorCode::NotStochastic, os.str());
    }
  }
  if (labels_.empty()) {
    for (int i = 0; i < m_.rows(); ++i) labels_.push_back(std::to_string(i + 1));
  } else if (static_cast<int>(labels_.size()) != m_.rows()) {
    throw Error(ErrorCode::InvalidArgument, "state label count does not match matrix size");
  }
}

TransitionMatrix TransitionMatrix::degenerate(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidArgument, "degenerate chain needs p in (0,1)");
  Matrix m(3, 3);
  m << 0.0, 1.0, 0.0,
       p, 0.0, 1.0 - p,
       1.0 - p, 0.0, p;
  return TransitionMatrix(std::move(m));
}

TransitionMatrix TransitionMatrix::iid(const SimplexVector& rho) {
  const int q = rho.size();
  Matrix m(q, q);
  for (int i = 0; i < q; ++i) m.row(i) = rho.vec().transpose();
  return TransitionMatrix(std::move(m));
}

TransitionMatrix TransitionMatrix::doubly(double a, double b, double c, double d) {
  Matrix m(3, 3);
  m << a, b, 1.0 - a - b,
       c, d, 1.0 - c - d,
       1.0 - a - c, 1.0 - b - d, -1.0 + a + b + c + d;
  return TransitionMatrix(std::move(m));
}

TransitionMatrix TransitionMatrix::two_state(double a, double b) {
  Matrix m(2, 2);
  m << 1.0 - a, a,
       b, 1.0 - b;
  return TransitionMatrix(std::move(m));
}

TransitionMatrix TransitionMatrix::permuted(const std::vector<int>& perm) const {
  const int q = size();
  if (static_cast<int>(perm.size()) != q) throw Error(ErrorCode::InvalidArgument, "permutation size mismatch");
  Matrix out(q, q);
  std::vector<std::string> labels(q);
  for (int i = 0; i < q; ++i) {
    labels[perm[i]] = labels_[i];
    for (int j = 0; j < q; ++j) out(perm[i], perm[j]) = m_(i, j);
  }
  return TransitionMatrix(std::move(out), std::move(labels));
}

ErgodicityCertificate validate_chain(const TransitionMatrix& m) {
  const int q = m.size();
  using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;
  BoolMatrix step(q, q);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j) step(i, j) = m(i, j) > 0.0;

  const int bound = (q - 1) * (q - 1) + 1;
  BoolMatrix reach = step;
  for (int r = 1; r <= bound; ++r) {
    if (reach.all()) return ErgodicityCertificate{r};
    BoolMatrix next = BoolMatrix::Constant(q, q, false);
    for (int i = 0; i < q; ++i)
      for (int k = 0; k < q; ++k)
        if (reach(i, k))
          for (int j = 0; j < q; ++j) next(i, j) = next(i, j) || step(k, j);
    reach = std::move(next);
  }
  std::ostringstream os;
  os << "no power M^r with r <= " << bound << " is entrywise positive";
  throw Error(ErrorCode::NotErgodic, os.str());
}

SimplexVector stationary(const TransitionMatrix& m) {
  const int q = m.size();
  Matrix system(q + 1, q);
  system.topRows(q) = m.matrix().transpose() - Matrix::Identity(q, q);
  system.row(q).setOnes();
  Vector rhs = Vector::Zero(q + 1);
  rhs[q] = 1.0;

  Eigen::ColPivHouseholderQR<Matrix> qr(system);
  if (qr.rank() < q) throw Error(ErrorCode::SolverFailure, "stationary system is singular");
  Vector pi = qr.solve(rhs);
  // Rounding can leave entries of order -1e-17 for tiny stationary masses.
  for (int i = 0; i < q; ++i) {
    if (pi[i] < 0.0) {
      if (pi[i] < -1e-12) throw Error(ErrorCode::SolverFailure, "stationary solution has a negative entry");
      pi[i] = 0.0;
    }
  }
  pi /= pi.sum();
  const double residual = (pi.transpose() * m.matrix() - pi.transpose()).cwiseAbs().maxCoeff();
  if (residual > kSimplexTol) {
    std::ostringstream os;
    os << "stationary residual " << residual << " exceeds tolerance";
    throw Error(ErrorCode::SolverFailure, os.str());
  }
  return SimplexVector(std::move(pi));
}

SimplexVector stationary_power_iteration(const TransitionMatrix& m, int max_iter) {
  const int q = m.size();
  Eigen::RowVectorXd v = Eigen::RowVectorXd::Constant(q, 1.0 / q);
  for (int it = 0; it < max_iter; ++it) {
    Eigen::RowVectorXd next = v * m.matrix();
    next /= next.sum();
    const double change = (next - v).cwiseAbs().maxCoeff();
    v = next;
    if (change < 1e-16) break;
  }
  return SimplexVector::normalized(v.transpose());
}

PathSampler::PathSampler(const TransitionMatrix& m) : q_(m.size()), pi_(stationary(m)) {
  validate_chain(m);
  auto cumulate = [this](const Vector& probs) {
    std::vector<double> cum(q_);
    double acc = 0.0;
    int last_positive = 0;
    for (int j = 0; j < q_; ++j) {
      acc += probs[j];
      cum[j] = acc;
      if (probs[j] > 0.0) last_positive = j;
    }
    for (int j = last_positive; j < q_; ++j) cum[j] = 1.0;
    return cum;
  };
  cumulative_.reserve(q_);
  for (int i = 0; i < q_; ++i) cumulative_.push_back(cumulate(m.matrix().row(i).transpose()));
  pi_cumulative_ = cumulate(pi_.vec());
}

int PathSampler::draw(const std::vector<double>& cumulative, double u) const {
  int j = 0;
  while (u >= cumulative[j]) ++j;
  return j;
}

int PathSampler::first_state(const ChainStart& start, Engine& rng) const {
  if (start.state) {
    if (*start.state < 0 || *start.state >= q_) throw Error(ErrorCode::InvalidArgument, "start state out of range");
    return *start.state;
  }
  return draw(pi_cumulative_, uniform01(rng));
}

ChainPath PathSampler::sample(const ChainStart& start, int n, std::uint64_t seed) const {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "path length must be positive");
  Engine rng(seed);
  ChainPath path;
  path.seed = seed;
  path.start = start;
  path.states.resize(n);
  int s = first_state(start, rng);
  path.states[0] = s;
  for (int i = 1; i < n; ++i) {
    s = draw(cumulative_[s], uniform01(rng));
    path.states[i] = s;
  }
  return path;
}

void PathSampler::sample_counts(const ChainStart& start, int n, std::uint64_t seed,
                                std::vector<int>& counts, int& last_state) const {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "path length must be positive");
  Engine rng(seed);
  counts.assign(q_, 0);
  int s = first_state(start, rng);
  ++counts[s];
  for (int i = 1; i < n; ++i) {
    s = draw(cumulative_[s], uniform01(rng));
    ++counts[s];
  }
  last_state = s;
}

ChainPath sample_path(const TransitionMatrix& m, const ChainStart& start, int n, std::uint64_t seed) {
  return PathSampler(m).sample(start, n, seed);
}

OccupationStats occupation_from_counts(const std::vector<int>& counts, const SimplexVector& pi) {
  const int q = pi.size();
  if (static_cast<int>(counts.size()) != q) throw Error(ErrorCode::InvalidArgument, "count vector size mismatch");
  long long n = 0;
  for (int c : counts) n += c;
  if (n <= 0) throw Error(ErrorCode::InvalidArgument, "empty path");
  Vector freq(q);
  for (int b = 0; b < q; ++b) freq[b] = static_cast<double>(counts[b]) / static_cast<double>(n);
  Vector fluct = std::sqrt(static_cast<double>(n)) * (freq - pi.vec());
  return OccupationStats{counts, SimplexVector(std::move(freq)), TangentVector(std::move(fluct))};
}

OccupationStats occupation(const ChainPath& path, const SimplexVector& pi) {
  std::vector<int> counts(pi.size(), 0);
  for (int s : path.states) {
    if (s < 0 || s >= pi.size()) throw Error(ErrorCode::InvalidArgument, "path symbol out of range");
    ++counts[s];
  }
  return occupation_from_counts(counts, pi);
}

CovarianceMatrix covariance_finite(const TransitionMatrix& m, const SimplexVector& pi, long long n) {
  require_size(m, pi);
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "volume must be positive");
  const int q = m.size();
  const Matrix deviation = m.matrix() - equilibrium_projector(pi);

  // weighted(i, j) = sum_{r=1}^{n-1} (n - r) [M^r(i,j) - pi(j)], using
  // (M - 1 pi^T)^r = M^r - 1 pi^T.
  Matrix weighted = Matrix::Zero(q, q);
  Matrix power = deviation;
  for (long long r = 1; r < n; ++r) {
    if (power.cwiseAbs().maxCoeff() < 1e-300) break;
    weighted += static_cast<double>(n - r) * power;
    power = power * deviation;
  }

  const double nd = static_cast<double>(n);
  const Vector& p = pi.vec();
  Matrix sigma(q, q);
  for (int i = 0; i < q; ++i) {
    for (int j = 0; j < q; ++j) {
      sigma(i, j) = (i == j ? p[i] : 0.0) - p[i] * p[j] + (p[i] / nd) * weighted(i, j) +
                    (p[j] / nd) * weighted(j, i);
    }
  }
  return CovarianceMatrix{std::move(sigma), CovarianceKind::Finite, n};
}

namespace {

Matrix assemble_limit(const SimplexVector& pi, const Matrix& fundamental) {
  const int q = pi.size();
  const Vector& p = pi.vec();
  Matrix sigma(q, q);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j)
      sigma(i, j) = p[i] * fundamental(i, j) + p[j] * fundamental(j, i) - (i == j ? p[i] : 0.0) - p[i] * p[j];
  return sigma;
}

}  // namespace

CovarianceMatrix covariance_limit(const TransitionMatrix& m, const SimplexVector& pi, CovarianceMethod method,
                                  double tol, long long max_terms) {
  require_size(m, pi);
  const int q = m.size();
  const Matrix projector = equilibrium_projector(pi);

  if (method == CovarianceMethod::FundamentalMatrix) {
    const Matrix system = Matrix::Identity(q, q) - m.matrix() + projector;
    Eigen::FullPivLU<Matrix> lu(system);
    if (!lu.isInvertible()) throw Error(ErrorCode::SolverFailure, "I - M + 1 pi^T is singular");
    return CovarianceMatrix{assemble_limit(pi, lu.inverse()), CovarianceKind::Limit, 0};
  }

  // Z = I + sum_{r>=1} (M - 1 pi^T)^r.
  const SpectralInfo spec = spectral_info(m);
  const double mu = spec.mu;
  const Matrix deviation = m.matrix() - projector;
  Matrix series = Matrix::Identity(q, q);
  Matrix power = deviation;
  double log_c = kNegInf;
  const double log_tol = std::log(tol);
  for (long long r = 1;; ++r) {
    if (r > max_terms) throw Error(ErrorCode::NonConvergence, "covariance series exceeded its term cap");
    series += power;
    const double norm = inf_norm(power);
    if (norm == 0.0) break;
    if (mu < 1e-14) {
      if (norm <= tol) break;
    } else {
      const double log_mu = std::log(mu);
      log_c = std::max(log_c, std::log(norm) - static_cast<double>(r) * log_mu);
      if (log_c + static_cast<double>(r + 1) * log_mu - std::log1p(-mu) <= log_tol) break;
    }
    power = power * deviation;
  }
  return CovarianceMatrix{assemble_limit(pi, series), CovarianceKind::Limit, 0};
}

TangentRank tangent_rank(const CovarianceMatrix& sigma, double tol) {
  const int q = sigma.size();
  TangentRank out;
  if (q < 2) {
    out.eigenvalues = Vector(0);
    return out;
  }
  const Matrix basis = tangent_basis(q);
  Matrix reduced = basis.transpose() * sigma.sigma * basis;
  reduced = 0.5 * (reduced + reduced.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(reduced);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::EigenFailure, "tangent eigendecomposition failed");
  out.eigenvalues = es.eigenvalues();
  for (int k = 0; k < out.eigenvalues.size(); ++k) {
    if (out.eigenvalues[k] > tol) {
      ++out.rank;
      continue;
    }
    Vector dir = basis * es.eigenvectors().col(k);
    dir.normalize();
    for (int i = 0; i < q; ++i) {
      if (std::abs(dir[i]) > 1e-12) {
        if (dir[i] < 0.0) dir = -dir;
        break;
      }
    }
    out.null_directions.push_back(std::move(dir));
  }
  return out;
}

SpectralInfo spectral_info(const TransitionMatrix& m) {
  const int q = m.size();
  if (q == 1) return SpectralInfo{0.0, 1};
  Eigen::EigenSolver<Matrix> es(m.matrix(), false);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::EigenFailure, "eigenvalue computation failed");
  std::vector<std::complex<double>> values(es.eigenvalues().data(), es.eigenvalues().data() + q);
  // Drop the Perron root (the eigenvalue closest to 1).
  auto perron = std::min_element(values.begin(), values.end(), [](auto a, auto b) {
    return std::abs(a - 1.0) < std::abs(b - 1.0);
  });
  values.erase(perron);
  std::vector<double> moduli;
  for (const auto& v : values) moduli.push_back(std::abs(v));
  const double mu = *std::max_element(moduli.begin(), moduli.end());
  int multiplicity = 0;
  for (double r : moduli)
    if (std::abs(r - mu) <= 1e-6 * std::max(1.0, mu)) ++multiplicity;
  return SpectralInfo{std::min(mu, 1.0), multiplicity};
}

double power_decay_rate(const TransitionMatrix& m, const SimplexVector& pi, int r) {
  require_size(m, pi);
  const Matrix deviation = m.matrix() - equilibrium_projector(pi);
  Matrix power = Matrix::Identity(m.size(), m.size());
  for (int k = 0; k < r; ++k) power = power * deviation;
  const double norm = power.operatorNorm();
  return norm <= 0.0 ? 0.0 : std::pow(norm, 1.0 / r);
}

}  // namespace mfm::markov
