#include "doctest.h"

#include "mfm/markov.hpp"

#include <cmath>
#include <random>

using namespace mfm;
using namespace mfm::markov;

namespace {

// Smallest r with M^r entrywise positive, by explicit powers.
int first_positive_power(const Matrix& m, int max_r) {
  Matrix p = m;
  for (int r = 1; r <= max_r; ++r) {
    if (p.minCoeff() > 0.0) return r;
    p = p * m;
  }
  return -1;
}

TransitionMatrix random_chain(std::mt19937_64& rng) {
  std::gamma_distribution<double> g(1.0, 1.0);
  Matrix m(3, 3);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m(i, j) = g(rng) + 0.05;
    m.row(i) /= m.row(i).sum();
  }
  return TransitionMatrix(m);
}

// Independent closed form for the doubly stochastic family, parametrized by
// the upper-left block ((a, b), (c, d)). Every entry uses the denominator
// -1 + a + bc + d - ad.
Matrix doubly_closed_form(double a, double b, double c, double d) {
  const double den = 27.0 * (-1.0 + a + b * c + d - a * d);
  Matrix s(3, 3);
  s(0, 0) = 2.0 / 9.0 + 2.0 * (1.0 + b * (2.0 - 6.0 * c) + 2.0 * c - 2.0 * d + a * (-5.0 + 6.0 * d)) / den;
  s(0, 1) = -1.0 / 9.0 - (b * (5.0 - 6.0 * c) + 5.0 * c - 2.0 * (1.0 + d) + a * (-2.0 + 6.0 * d)) / den;
  s(0, 2) = -1.0 / 9.0 - (4.0 - 8.0 * a - b - c - 6.0 * b * c - 2.0 * d + 6.0 * a * d) / den;
  s(1, 0) = s(0, 1);
  s(1, 1) = 2.0 / 9.0 + 2.0 * (1.0 + b * (2.0 - 6.0 * c) + 2.0 * c - 5.0 * d + a * (-2.0 + 6.0 * d)) / den;
  s(1, 2) = -1.0 / 9.0 - (4.0 - 2.0 * a - b - c - 6.0 * b * c - 8.0 * d + 6.0 * a * d) / den;
  s(2, 0) = s(0, 2);
  s(2, 1) = s(1, 2);
  s(2, 2) = 2.0 / 9.0 - 2.0 * (-4.0 + b + c + 6.0 * b * c + a * (5.0 - 6.0 * d) + 5.0 * d) / den;
  return s;
}

}  // namespace

TEST_CASE("validate_chain rejects reducible and non-stochastic matrices") {
  CHECK_THROWS_AS(validate_chain(TransitionMatrix(Matrix::Identity(3, 3))), Error);
  try {
    validate_chain(TransitionMatrix(Matrix::Identity(3, 3)));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotErgodic);
  }
  Matrix bad = Matrix::Constant(3, 3, 0.3);
  try {
    TransitionMatrix{bad};
    FAIL("expected NotStochastic");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotStochastic);
  }
}

TEST_CASE("validate_chain certificate is the first positive power") {
  const auto deg = TransitionMatrix::degenerate(0.5);
  const auto cert = validate_chain(deg);
  CHECK(cert.power == first_positive_power(deg.matrix(), 10));
  CHECK(cert.power == 3);
  CHECK(validate_chain(TransitionMatrix::iid(SimplexVector::uniform(3))).power == 1);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto m = random_chain(rng);
    CHECK(validate_chain(m).power == first_positive_power(m.matrix(), 10));
  }
}

TEST_CASE("stationary law of the presets") {
  for (double p : {0.1, 0.5, 0.9}) {
    const auto pi = stationary(TransitionMatrix::degenerate(p));
    for (int i = 0; i < 3; ++i) CHECK(pi[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  const SimplexVector rho{0.2, 0.5, 0.3};
  const auto pi = stationary(TransitionMatrix::iid(rho));
  for (int i = 0; i < 3; ++i) CHECK(std::abs(pi[i] - rho[i]) < 1e-12);
  const double a = 0.3, b = 0.1;
  const auto two = stationary(TransitionMatrix::two_state(a, b));
  CHECK(std::abs(two[0] - b / (a + b)) < 1e-12);
  CHECK(std::abs(two[1] - a / (a + b)) < 1e-12);
}

TEST_CASE("stationary agrees with power iteration and solves the balance equation") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    const auto m = random_chain(rng);
    const auto pi = stationary(m);
    const Vector res = m.matrix().transpose() * pi.vec() - pi.vec();
    CHECK(res.cwiseAbs().maxCoeff() <= 1e-12);
    const auto pw = stationary_power_iteration(m);
    CHECK((pw.vec() - pi.vec()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("degenerate chain started at 1 always moves to 2") {
  const auto m = TransitionMatrix::degenerate(0.5);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto path = sample_path(m, ChainStart::fixed(0), 5, seed);
    REQUIRE(path.length() == 5);
    CHECK(path.states[0] == 0);
    CHECK(path.states[1] == 1);
  }
}

TEST_CASE("single-site path is the start state") {
  const auto m = TransitionMatrix::degenerate(0.3);
  for (int b = 0; b < 3; ++b) {
    const auto path = sample_path(m, ChainStart::fixed(b), 1, 9);
    REQUIRE(path.length() == 1);
    CHECK(path.states[0] == b);
  }
}

TEST_CASE("paths are reproducible from the seed") {
  const auto m = TransitionMatrix::doubly(0.4, 0.3, 0.2, 0.5);
  const auto a = sample_path(m, ChainStart::stationary(), 500, 77);
  const auto b = sample_path(m, ChainStart::stationary(), 500, 77);
  const auto c = sample_path(m, ChainStart::stationary(), 500, 78);
  CHECK(a.states == b.states);
  CHECK(a.states != c.states);
}

TEST_CASE("one-step transition frequencies match the matrix within 3 sigma") {
  std::mt19937_64 rng(3);
  const auto m = random_chain(rng);
  const int n = 100000;
  const auto path = sample_path(m, ChainStart::stationary(), n + 1, 2024);
  Matrix counts = Matrix::Zero(3, 3);
  for (int i = 0; i < n; ++i) counts(path.states[i], path.states[i + 1]) += 1.0;
  for (int i = 0; i < 3; ++i) {
    const double row = counts.row(i).sum();
    REQUIRE(row > 0);
    for (int j = 0; j < 3; ++j) {
      const double p = m(i, j);
      const double se = std::sqrt(p * (1.0 - p) / row);
      CHECK(std::abs(counts(i, j) / row - p) <= 3.0 * se);
    }
  }
}

TEST_CASE("occupation of an equidistributed path") {
  ChainPath path;
  path.states = {0, 1, 2};
  const auto occ = occupation(path, SimplexVector::uniform(3));
  CHECK(occ.counts == std::vector<int>{1, 1, 1});
  for (int i = 0; i < 3; ++i) {
    CHECK(occ.frequencies[i] == doctest::Approx(1.0 / 3.0));
    CHECK(std::abs(occ.fluctuation[i]) < 1e-15);
  }
}

TEST_CASE("degenerate chain started at 3 has imbalance 0 or 1") {
  const auto m = TransitionMatrix::degenerate(0.5);
  PathSampler sampler(m);
  std::vector<int> counts;
  int last = 0;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const int n = 50 + static_cast<int>(seed % 97);
    sampler.sample_counts(ChainStart::fixed(2), n, seed, counts, last);
    const int l = counts[0] - counts[1];
    CHECK((l == 0 || l == 1));
  }
}

TEST_CASE("fluctuation coordinates sum to zero") {
  std::mt19937_64 rng(8);
  const auto m = random_chain(rng);
  const auto pi = stationary(m);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto occ = occupation(sample_path(m, ChainStart::stationary(), 37, seed), pi);
    CHECK(std::abs(occ.fluctuation.vec().sum()) < 1e-12);
  }
}

TEST_CASE("finite covariance reduces to the multinomial covariance") {
  const SimplexVector rho{0.2, 0.5, 0.3};
  const Matrix base = Matrix(rho.vec().asDiagonal()) - rho.vec() * rho.vec().transpose();
  std::mt19937_64 rng(4);
  const auto m = random_chain(rng);
  const auto pi = stationary(m);
  const Matrix base_m = Matrix(pi.vec().asDiagonal()) - pi.vec() * pi.vec().transpose();
  CHECK((covariance_finite(m, pi, 1).sigma - base_m).cwiseAbs().maxCoeff() < 1e-15);
  const auto iid = TransitionMatrix::iid(rho);
  for (long long n : {1LL, 7LL, 500LL})
    CHECK((covariance_finite(iid, rho, n).sigma - base).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("finite covariance of the degenerate chain matches Monte Carlo") {
  const auto m = TransitionMatrix::degenerate(0.5);
  const auto pi = stationary(m);
  const int n = 200, replicas = 100000;
  const Matrix sigma = covariance_finite(m, pi, n).sigma;
  PathSampler sampler(m);
  std::vector<Vector> xs;
  xs.reserve(replicas);
  std::vector<int> counts;
  int last = 0;
  Vector mean = Vector::Zero(3);
  for (int r = 0; r < replicas; ++r) {
    sampler.sample_counts(ChainStart::stationary(), n, derive_seed(31, r), counts, last);
    xs.push_back(occupation_from_counts(counts, pi).fluctuation.vec());
    mean += xs.back();
  }
  mean /= replicas;
  // Entrywise sample covariance against the known mean 0, with the standard
  // error of each product estimated from the same samples.
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0, s2 = 0.0;
      for (const auto& x : xs) {
        const double v = x[i] * x[j];
        s += v;
        s2 += v * v;
      }
      const double avg = s / replicas;
      const double se = std::sqrt((s2 / replicas - avg * avg) / replicas);
      CHECK(std::abs(avg - sigma(i, j)) <= 3.0 * se);
    }
}

TEST_CASE("limit covariance of an i.i.d. chain") {
  const SimplexVector rho{0.1, 0.6, 0.3};
  const auto m = TransitionMatrix::iid(rho);
  const Matrix base = Matrix(rho.vec().asDiagonal()) - rho.vec() * rho.vec().transpose();
  for (auto method : {CovarianceMethod::Series, CovarianceMethod::FundamentalMatrix})
    CHECK((covariance_limit(m, rho, method).sigma - base).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("limit covariance of the doubly stochastic preset") {
  const auto m = TransitionMatrix::doubly(0.4, 0.3, 0.2, 0.5);
  const auto pi = stationary(m);
  const Matrix fund = covariance_limit(m, pi, CovarianceMethod::FundamentalMatrix).sigma;
  const Matrix series = covariance_limit(m, pi, CovarianceMethod::Series).sigma;
  CHECK((fund - series).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((covariance_finite(m, pi, 100000).sigma - fund).cwiseAbs().maxCoeff() < 1e-3);
  CHECK((doubly_closed_form(0.4, 0.3, 0.2, 0.5) - fund).cwiseAbs().maxCoeff() < 1e-12);
  Matrix frozen(3, 3);
  frozen << 22.0 / 81.0, -59.0 / 324.0, -29.0 / 324.0,
            -59.0 / 324.0, 59.0 / 162.0, -59.0 / 324.0,
            -29.0 / 324.0, -59.0 / 324.0, 22.0 / 81.0;
  CHECK((frozen - fund).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("doubly stochastic closed form agrees with the fundamental matrix") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int tested = 0;
  while (tested < 30) {
    const double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    if (a + b > 0.95 || c + d > 0.95 || a + c > 0.95 || b + d > 0.95 || a + b + c + d < 1.05) continue;
    const auto m = TransitionMatrix::doubly(a, b, c, d);
    const auto pi = stationary(m);
    const Matrix fund = covariance_limit(m, pi).sigma;
    CHECK((doubly_closed_form(a, b, c, d) - fund).cwiseAbs().maxCoeff() < 1e-10);
    ++tested;
  }
}

TEST_CASE("the other denominator variant does not reproduce the covariance") {
  // Second-row entries written with -1 + a + b + c + d - ad instead.
  const double a = 0.4, b = 0.3, c = 0.2, d = 0.5;
  const double alt = 27.0 * (-1.0 + a + b + c + d - a * d);
  const double s10 = -1.0 / 9.0 - (b * (5.0 - 6.0 * c) + 5.0 * c - 2.0 * (1.0 + d) + a * (-2.0 + 6.0 * d)) / alt;
  const double s11 = 2.0 / 9.0 + 2.0 * (1.0 + b * (2.0 - 6.0 * c) + 2.0 * c - 5.0 * d + a * (-2.0 + 6.0 * d)) / alt;
  const auto m = TransitionMatrix::doubly(a, b, c, d);
  const Matrix fund = covariance_limit(m, stationary(m)).sigma;
  CHECK(std::abs(s10 - fund(1, 0)) > 1e-2);
  CHECK(std::abs(s11 - fund(1, 1)) > 1e-2);
  CHECK(std::abs(s10 + s11 + fund(1, 2)) > 1e-2);
}

TEST_CASE("series and fundamental-matrix methods agree on random chains") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 20; ++t) {
    const auto m = random_chain(rng);
    const auto pi = stationary(m);
    const double tol = 1e-13;
    const Matrix a = covariance_limit(m, pi, CovarianceMethod::Series, tol).sigma;
    const Matrix b = covariance_limit(m, pi, CovarianceMethod::FundamentalMatrix, tol).sigma;
    CHECK((a - b).cwiseAbs().maxCoeff() <= 10 * tol + 1e-15);
  }
}

TEST_CASE("degenerate covariance vanishes along (1,-1,0)") {
  for (double p : {0.2, 0.5, 0.8}) {
    const auto m = TransitionMatrix::degenerate(p);
    const auto sigma = covariance_limit(m, stationary(m));
    CHECK(std::abs(sigma.quadratic_form(Vector::Map(std::vector<double>{1, -1, 0}.data(), 3))) < 1e-10);
  }
  const auto sigma = covariance_limit(TransitionMatrix::degenerate(0.5), SimplexVector::uniform(3)).sigma;
  Matrix frozen(3, 3);
  frozen << 2, 2, -4, 2, 2, -4, -4, -4, 8;
  CHECK((sigma - frozen / 27.0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("tangent rank") {
  const auto iid = TransitionMatrix::iid(SimplexVector::uniform(3));
  CHECK(tangent_rank(covariance_limit(iid, SimplexVector::uniform(3))).rank == 2);

  const auto deg = TransitionMatrix::degenerate(0.5);
  const auto tr = tangent_rank(covariance_limit(deg, stationary(deg)));
  CHECK(tr.rank == 1);
  REQUIRE(tr.null_directions.size() == 1);
  const Vector& v = tr.null_directions[0];
  const double s = v[0] > 0 ? 1.0 : -1.0;
  CHECK(std::abs(s * v[0] - 1 / std::sqrt(2.0)) < 1e-8);
  CHECK(std::abs(s * v[1] + 1 / std::sqrt(2.0)) < 1e-8);
  CHECK(std::abs(v[2]) < 1e-8);

  CovarianceMatrix zero;
  zero.sigma = Matrix::Zero(3, 3);
  const auto tz = tangent_rank(zero);
  CHECK(tz.rank == 0);
  CHECK(tz.null_directions.size() == 2);
}

TEST_CASE("second eigenvalue modulus") {
  CHECK(spectral_info(TransitionMatrix::iid(SimplexVector{0.2, 0.3, 0.5})).mu < 1e-12);
  for (auto [a, b] : {std::pair{0.3, 0.1}, std::pair{0.9, 0.8}, std::pair{0.5, 0.5}})
    CHECK(std::abs(spectral_info(TransitionMatrix::two_state(a, b)).mu - std::abs(1 - a - b)) < 1e-12);

  const auto deg = TransitionMatrix::degenerate(0.5);
  const auto info = spectral_info(deg);
  CHECK(info.mu < 1.0);
  const double rate = power_decay_rate(deg, stationary(deg), 400);
  CHECK(std::abs(rate - info.mu) < 0.02);
}

TEST_CASE("relabeling a chain permutes its stationary law and covariance") {
  std::mt19937_64 rng(17);
  const auto m = random_chain(rng);
  const std::vector<int> perm{2, 0, 1};
  const auto mp = m.permuted(perm);
  const auto pi = stationary(m);
  const auto pip = stationary(mp);
  const Matrix s = covariance_limit(m, pi).sigma;
  const Matrix sp = covariance_limit(mp, pip).sigma;
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(pip[perm[i]] - pi[i]) < 1e-12);
    for (int j = 0; j < 3; ++j) CHECK(std::abs(sp(perm[i], perm[j]) - s(i, j)) < 1e-12);
  }
}
