#include "doctest.h"

#include "mfm/meanfield.hpp"
#include "mfm/potts.hpp"
#include "potts_oracle.hpp"

#include <cmath>
#include <random>

using namespace mfm;
using namespace mfm::meanfield;

namespace {

SimplexVector random_simplex(std::mt19937_64& rng, int size) {
  std::gamma_distribution<double> g(1.0, 1.0);
  Vector v(size);
  for (int i = 0; i < size; ++i) v[i] = g(rng) + 1e-3;
  return SimplexVector::normalized(v);
}

std::vector<SimplexVector> random_kernels(std::mt19937_64& rng) {
  return {random_simplex(rng, 3), random_simplex(rng, 3), random_simplex(rng, 3)};
}

const SimplexVector kUniform = SimplexVector::uniform(3);

}  // namespace

TEST_CASE("relative entropy closed forms") {
  const SimplexVector p{0.2, 0.3, 0.5};
  CHECK(rel_entropy(p, p) == doctest::Approx(0.0));
  CHECK(rel_entropy(SimplexVector{1.0, 0.0}, SimplexVector{0.5, 0.5}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  try {
    rel_entropy(SimplexVector{0.5, 0.5}, SimplexVector{1.0, 0.0});
    FAIL("expected SupportViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SupportViolation);
  }
}

TEST_CASE("relative entropy is nonnegative and vanishes only on the diagonal") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const auto p = random_simplex(rng, 4), q = random_simplex(rng, 4);
    const double d = rel_entropy(p, q);
    CHECK(d >= 0.0);
    CHECK(d > 1e-12);
    CHECK(std::abs(rel_entropy(p, p)) <= 1e-12);
  }
}

TEST_CASE("free energy of the a-priori profile without interaction is zero") {
  std::mt19937_64 rng(3);
  const auto alpha = random_kernels(rng);
  const auto model = ModelSpec::free(alpha);
  CHECK(std::abs(free_energy(model, random_simplex(rng, 3), TypeProfile(alpha))) < 1e-15);
  const auto potts0 = ModelSpec::potts(0.0, 0.0, 3);
  CHECK(std::abs(free_energy(potts0, kUniform, TypeProfile({kUniform, kUniform, kUniform}))) < 1e-15);
}

TEST_CASE("Potts free energy at solved roots matches the closed form in u") {
  for (auto [beta, field] : {std::pair{4.0, 0.2}, std::pair{3.0, 0.76228317004279234}, std::pair{10.0, 0.1}}) {
    const potts::PottsParams params{beta, field, 3};
    const auto model = potts::potts_model(params);
    for (const auto& root : potts::solve_order_parameters(params)) {
      for (int j = 0; j < 3; ++j) {
        const double value = free_energy(model, kUniform, potts::lifted_profile(params, root.u, j));
        // The closed form is shifted so that u = 0 gives 0.
        CHECK(std::abs(value + beta / 6.0 - oracle::free_energy_u(beta, field, 3, root.u)) < 1e-10);
      }
    }
  }
}

TEST_CASE("gamma kernels") {
  std::mt19937_64 rng(4);
  const auto alpha = random_kernels(rng);
  const auto free = ModelSpec::free(alpha);
  for (int b = 0; b < 3; ++b)
    CHECK((gamma_kernel(free, b, random_simplex(rng, 3)).vec() - alpha[b].vec()).cwiseAbs().maxCoeff() < 1e-15);

  const auto sym = ModelSpec::potts(2.0, 0.0, 3);
  for (int b = 0; b < 3; ++b)
    CHECK((gamma_kernel(sym, b, kUniform).vec() - kUniform.vec()).cwiseAbs().maxCoeff() < 1e-15);

  const double beta = 4.0, field = 0.2, u = 0.92977174028642473;
  const potts::PottsParams params{beta, field, 3};
  const auto nu = potts::ordered_total(params, u, 1);
  const double expected = std::exp(beta * u + field) / (std::exp(beta * u + field) + 2.0);
  CHECK(std::abs(gamma_kernel(potts::potts_model(params), 1, nu)[1] - expected) < 1e-12);
}

TEST_CASE("self-consistent map") {
  std::mt19937_64 rng(5);
  const auto alpha = random_kernels(rng);
  const auto pi = random_simplex(rng, 3);
  Vector mix = Vector::Zero(3);
  for (int b = 0; b < 3; ++b) mix += pi[b] * alpha[b].vec();
  const auto free = ModelSpec::free(alpha);
  for (int t = 0; t < 5; ++t)
    CHECK((self_consistent_map(free, pi, random_simplex(rng, 3)).vec() - mix).cwiseAbs().maxCoeff() < 1e-15);

  const potts::PottsParams params{4.0, 0.2, 3};
  const auto model = potts::potts_model(params);
  for (const auto& root : potts::solve_order_parameters(params))
    for (int j = 0; j < 3; ++j) {
      const auto nu = potts::ordered_total(params, root.u, j);
      CHECK((self_consistent_map(model, kUniform, nu).vec() - nu.vec()).cwiseAbs().maxCoeff() < 1e-9);
    }

  const auto hot = ModelSpec::potts(0.0, 0.7, 3);
  const auto once = self_consistent_map(hot, kUniform, random_simplex(rng, 3));
  CHECK((self_consistent_map(hot, kUniform, once).vec() - once.vec()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(iterate_fixed_point(hot, kUniform, random_simplex(rng, 3)).iterations <= 2);
}

TEST_CASE("minimizer search: high temperature has a single symmetric minimizer") {
  const potts::PottsParams params{1.0, 0.1, 3};
  // Closed-form scan: the only local minimum in u is at 0.
  for (double u = 1e-3; u <= 1.0; u += 1e-3)
    REQUIRE(oracle::free_energy_u(1.0, 0.1, 3, u) > 0.0);
  const auto result = find_minimizers(potts::potts_model(params), kUniform);
  REQUIRE(result.records.size() == 1);
  CHECK(result.records[0].global);
  CHECK((result.records[0].total.vec() - kUniform.vec()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("minimizer search: four global minimizers at coexistence") {
  const auto point = potts::coexistence(3.0, 3, 0.0, 4.0);
  const potts::PottsParams params{3.0, point.field, 3};
  const auto result = find_minimizers(potts::potts_model(params), kUniform);
  std::vector<MinimizerRecord> global;
  for (const auto& r : result.records)
    if (r.global) global.push_back(r);
  REQUIRE(global.size() == 4);
  int symmetric = 0;
  std::vector<int> ordered(3, 0);
  for (const auto& r : global) {
    const Vector t = r.total.vec();
    if ((t - kUniform.vec()).cwiseAbs().maxCoeff() < 1e-8) {
      ++symmetric;
      continue;
    }
    int j = 0;
    t.maxCoeff(&j);
    CHECK((t - potts::ordered_total(params, point.u, j).vec()).cwiseAbs().maxCoeff() < 1e-8);
    ++ordered[j];
  }
  CHECK(symmetric == 1);
  CHECK(ordered == std::vector<int>{1, 1, 1});
}

TEST_CASE("minimizer search without interaction returns the a-priori kernels") {
  std::mt19937_64 rng(6);
  const auto alpha = random_kernels(rng);
  const auto pi = random_simplex(rng, 3);
  const auto result = find_minimizers(ModelSpec::free(alpha), pi);
  REQUIRE(result.records.size() == 1);
  for (int b = 0; b < 3; ++b)
    CHECK((result.records[0].profile[b].vec() - alpha[b].vec()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("Hessian is positive definite at strict minimizers") {
  std::mt19937_64 rng(7);
  const auto alpha = random_kernels(rng);
  CHECK(hessian_pd(ModelSpec::free(alpha), random_simplex(rng, 3), TypeProfile(alpha)).positive_definite);

  const auto point = potts::coexistence(3.0, 3, 0.0, 4.0);
  const potts::PottsParams params{3.0, point.field, 3};
  const auto report = hessian_pd(potts::potts_model(params), kUniform, potts::lifted_profile(params, point.u, 0));
  CHECK(report.positive_definite);
  CHECK(report.min_eigenvalue > 0.01);
}

TEST_CASE("Hessian degenerates at the spinodal") {
  const double field = 0.1;
  // Oracle spinodal: smallest beta at which the closed-form residual has a
  // nonzero root, located by grid scan and bisection.
  auto has_ordered_root = [&](double beta) {
    for (double u = 0.02; u <= 1.0; u += 1e-5)
      if (oracle::residual(beta, field, 3, u) <= 0.0) return true;
    return false;
  };
  double lo = 2.0, hi = 4.0;
  REQUIRE(!has_ordered_root(lo));
  REQUIRE(has_ordered_root(hi));
  for (int i = 0; i < 40; ++i) {
    const double mid = 0.5 * (lo + hi);
    (has_ordered_root(mid) ? hi : lo) = mid;
  }
  std::vector<double> eig;
  for (double delta : {0.3, 0.03, 0.003}) {
    const potts::PottsParams params{hi + delta, field, 3};
    const double u = potts::ordered_branch(params).u;
    eig.push_back(hessian_pd(potts::potts_model(params), kUniform, potts::lifted_profile(params, u, 0)).min_eigenvalue);
  }
  CHECK(eig[0] > eig[1]);
  CHECK(eig[1] > eig[2]);
  CHECK(eig[2] > 0.0);
  CHECK(eig[2] < 0.2 * eig[0]);
}

TEST_CASE("Hessian rejects boundary profiles") {
  const auto model = ModelSpec::free({kUniform, kUniform, kUniform});
  const TypeProfile edge({SimplexVector{1.0, 0.0, 0.0}, kUniform, kUniform});
  try {
    hessian_pd(model, kUniform, edge);
    FAIL("expected BoundaryPoint");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BoundaryPoint);
  }
}

TEST_CASE("stability vectors") {
  const potts::PottsParams params{4.0, 0.2, 3};
  const auto model = potts::potts_model(params);
  const auto zero = stability_vector(model, kUniform, potts::lifted_profile(params, 0.0, 0));
  CHECK(zero.vec().cwiseAbs().maxCoeff() < 1e-9);

  const double u = 0.92977174028642473;
  const double l = std::log((std::exp(4.0 * u + 0.2) + 2.0) / (std::exp(4.0 * u) + std::exp(0.2) + 1.0));
  for (int j = 0; j < 3; ++j) {
    const auto profile = potts::lifted_profile(params, u, j);
    const auto b = stability_vector(model, kUniform, profile);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(b[i] - (i == j ? 2.0 * l / 3.0 : -l / 3.0)) < 1e-10);
    CHECK((stability_vector_numeric(model, kUniform, profile).vec() - b.vec()).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("stability vectors follow a relabeling of states") {
  const potts::PottsParams params{4.0, 0.2, 3};
  const auto model = potts::potts_model(params);
  const double u = potts::ordered_branch(params).u;
  const auto b0 = stability_vector(model, kUniform, potts::lifted_profile(params, u, 0));
  const auto b2 = stability_vector(model, kUniform, potts::lifted_profile(params, u, 2));
  CHECK(std::abs(b0[0] - b2[2]) < 1e-12);
  CHECK(std::abs(b0[2] - b2[0]) < 1e-12);
  CHECK(std::abs(b0[1] - b2[1]) < 1e-12);
}

TEST_CASE("stability vector matches finite differences for a general quadratic model") {
  std::mt19937_64 rng(8);
  Matrix j(3, 3);
  j << 2.0, 0.5, -0.3, 0.5, 1.5, 0.2, -0.3, 0.2, 2.5;
  const auto model = ModelSpec::quadratic(j, random_kernels(rng));
  const auto pi = random_simplex(rng, 3);
  for (const auto& r : find_minimizers(model, pi).records) {
    if (r.boundary) continue;
    const auto b = stability_vector(model, pi, r);
    CHECK((stability_vector_numeric(model, pi, r.profile).vec() - b.vec()).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(std::abs(b.vec().sum()) < 1e-12);
  }
}

TEST_CASE("distinct stability vectors") {
  const auto point = potts::coexistence(3.0, 3, 0.0, 4.0);
  const potts::PottsParams params{3.0, point.field, 3};
  const auto result = find_minimizers(potts::potts_model(params), kUniform);
  const auto report = check_condition2(result.records);
  CHECK(report.satisfied);
  CHECK(report.min_distance > 0.1);

  std::vector<MinimizerRecord> one{result.records.front()};
  CHECK(check_condition2(one).satisfied);
  one.push_back(result.records.front());
  CHECK_FALSE(check_condition2(one).satisfied);
}

TEST_CASE("model construction rejects an inconsistent gradient") {
  const auto energy = [](const Vector& nu) { return -0.5 * nu.squaredNorm(); };
  const auto wrong = [](const Vector& nu) { return Vector(nu); };
  try {
    ModelSpec("bad", 3, energy, wrong, {kUniform});
    FAIL("expected InvalidArgument");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidArgument);
  }
  CHECK(gradient_check(ModelSpec::potts(2.0, 0.3, 3), 100, 1) < 1e-6);
}

TEST_CASE("simplex grid") {
  const auto grid = simplex_grid(3, 11);
  CHECK(grid.size() == 66);
  for (const auto& p : grid) CHECK(std::abs(p.vec().sum() - 1.0) < 1e-12);
}
