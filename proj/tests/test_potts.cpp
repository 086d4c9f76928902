#include "doctest.h"

#include "mfm/meanfield.hpp"
#include "mfm/potts.hpp"
#include "potts_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace mfm;
using namespace mfm::potts;

namespace {

// Roots of the closed-form residual located by sign changes on a uniform
// grid, then bisected.
std::vector<double> scan_roots(double beta, double field, int q, double step) {
  std::vector<double> roots{0.0};
  const int steps = static_cast<int>(std::lround(1.0 / step));
  double prev = oracle::residual(beta, field, q, step);
  for (int i = 2; i <= steps; ++i) {
    const double u = i * step;
    const double r = oracle::residual(beta, field, q, u);
    if ((prev < 0) != (r < 0)) {
      double lo = u - step, hi = u;
      for (int k = 0; k < 60; ++k) {
        const double mid = 0.5 * (lo + hi);
        ((oracle::residual(beta, field, q, mid) < 0) == (prev < 0) ? lo : hi) = mid;
      }
      roots.push_back(0.5 * (lo + hi));
    }
    prev = r;
  }
  return roots;
}

double deepest_gap(double beta, double field) {
  double best = 0.0;
  for (double u : scan_roots(beta, field, 3, 1e-4)) best = std::min(best, oracle::free_energy_u(beta, field, 3, u));
  return best;
}

// Central difference of the closed-form free energy in u.
double dphi(const PottsParams& p, double u, double h = 1e-6) {
  return (potts_free_energy_u(p, u + h) - potts_free_energy_u(p, u - h)) / (2 * h);
}

}  // namespace

TEST_CASE("residual special cases") {
  for (double beta : {0.0, 1.0, 5.0})
    for (int q : {2, 3, 5}) CHECK(mfe_residual(PottsParams{beta, 0.0, q}, 0.0) == 0.0);
  for (double u : {0.0, 0.25, 0.5, 1.0}) CHECK(std::abs(mfe_residual(PottsParams{0.0, 0.0, 3}, u) - u) < 1e-15);
  const auto roots = solve_order_parameters(PottsParams{0.0, 0.0, 3});
  REQUIRE(roots.size() == 1);
  CHECK(roots[0].u == 0.0);
}

TEST_CASE("residual agrees with the closed form") {
  for (double beta : {0.5, 3.0, 8.0})
    for (double field : {0.0, 0.3, 1.2})
      for (double u = 0.0; u <= 1.0; u += 0.05)
        CHECK(std::abs(mfe_residual(PottsParams{beta, field, 3}, u) - oracle::residual(beta, field, 3, u)) < 1e-13);
}

TEST_CASE("roots at beta 4, field 0.2 match a fine grid scan") {
  const auto expected = scan_roots(4.0, 0.2, 3, 1e-6);
  const auto roots = solve_order_parameters(PottsParams{4.0, 0.2, 3});
  REQUIRE(roots.size() == expected.size());
  for (std::size_t i = 0; i < roots.size(); ++i) {
    CHECK(std::abs(roots[i].u - expected[i]) < 1e-10);
    CHECK(std::abs(roots[i].residual) <= 1e-10);
  }
  CHECK(roots.back().stable);
  CHECK(std::abs(roots.back().u - 0.92977174028642473) < 1e-11);
}

TEST_CASE("strong coupling has a root near 1") {
  const auto roots = solve_order_parameters(PottsParams{10.0, 0.1, 3});
  const auto expected = scan_roots(10.0, 0.1, 3, 1e-5);
  REQUIRE(roots.size() == expected.size());
  CHECK(roots.back().u > 0.999);
  CHECK(std::abs(roots.back().u - 0.99986317126564694) < 1e-11);
}

TEST_CASE("root count changes across the spinodal") {
  std::size_t most = 0;
  for (double beta = 1.0; beta <= 6.0; beta += 0.1) {
    const auto roots = solve_order_parameters(PottsParams{beta, 0.1, 3});
    CHECK(roots.size() == scan_roots(beta, 0.1, 3, 1e-5).size());
    most = std::max(most, roots.size());
  }
  CHECK(solve_order_parameters(PottsParams{1.0, 0.1, 3}).size() == 1);
  CHECK(most == 3);
  // Past beta = q the symmetric point is unstable and the middle root leaves [0, 1].
  CHECK(solve_order_parameters(PottsParams{6.0, 0.1, 3}).size() == 2);
}

TEST_CASE("free energy in u") {
  for (double field : {0.0, 0.5, 2.0}) CHECK(potts_free_energy_u(PottsParams{3.0, field, 3}, 0.0) == 0.0);
  for (double beta : {1.0, 3.0, 6.0})
    for (double field : {0.0, 0.4})
      for (double u = 0.0; u <= 1.0; u += 0.05)
        CHECK(std::abs(potts_free_energy_u(PottsParams{beta, field, 3}, u) - oracle::free_energy_u(beta, field, 3, u)) <
              1e-12);
}

TEST_CASE("free energy is stationary at every root") {
  for (double beta : {2.0, 3.0, 4.0, 6.0, 10.0})
    for (double field : {0.0, 0.1, 0.76228317004279234}) {
      const PottsParams p{beta, field, 3};
      for (const auto& root : solve_order_parameters(p)) {
        if (root.u == 0.0) continue;
        CHECK(std::abs(dphi(p, root.u)) < 1e-6);
      }
    }
}

TEST_CASE("free energy in u is the profile free energy up to a constant") {
  const auto pi = SimplexVector::uniform(3);
  int values = 0;
  for (double beta : {2.9, 3.0, 3.5, 4.0, 6.0, 10.0})
    for (double field : {0.0, 0.05, 0.3}) {
      const PottsParams p{beta, field, 3};
      const auto model = potts_model(p);
      for (const auto& root : solve_order_parameters(p)) {
        const double d = meanfield::free_energy(model, pi, lifted_profile(p, root.u, 0)) - potts_free_energy_u(p, root.u);
        CHECK(std::abs(d + beta / 6.0) < 1e-10);
        ++values;
      }
    }
  CHECK(values >= 20);
}

TEST_CASE("coexistence field at beta 3") {
  // Oracle: bisection on the closed-form depth gap with roots from a grid scan.
  double lo = 0.0, hi = 4.0;
  for (int i = 0; i < 50; ++i) {
    const double mid = 0.5 * (lo + hi);
    (deepest_gap(3.0, mid) < 0.0 ? lo : hi) = mid;
  }
  const auto point = coexistence(3.0, 3, 0.0, 4.0);
  CHECK(std::abs(point.field - 0.5 * (lo + hi)) < 1e-8);
  CHECK(std::abs(point.field - 0.76228317004279234) < 1e-10);
  CHECK(std::abs(point.u - 0.52332653899006543) < 1e-9);
  CHECK(std::abs(mfe_residual(PottsParams{3.0, point.field, 3}, point.u)) <= 1e-10);
  CHECK(std::abs(point.gap) <= 1e-12);
}

TEST_CASE("zero-field transition temperature") {
  // Mean-field q-state Potts: beta_c = 2 (q - 1) / (q - 2) log(q - 1).
  CHECK(std::abs(transition_beta(3, 2.0, 4.0) - 4.0 * std::log(2.0)) < 1e-9);
  CHECK(std::abs(transition_beta(4, 2.0, 4.0) - 3.0 * std::log(3.0)) < 1e-9);
  const auto point = coexistence(4.0 * std::log(2.0) + 1e-9, 3, 0.0, 1.0);
  CHECK(point.field < 1e-4);
}

TEST_CASE("coexistence field increases with beta") {
  double prev = coexistence(2.9, 3, 0.0, 4.0).field;
  for (double beta : {3.0, 3.5, 4.0, 5.0}) {
    const double f = coexistence(beta, 3, 0.0, 4.0).field;
    CHECK(f > prev);
    prev = f;
  }
  CHECK(std::abs(coexistence(3.5, 3, 0.0, 4.0).field - 1.3098238531601964) < 1e-9);
  CHECK(std::abs(coexistence(4.0, 3, 0.0, 4.0).field - 1.6907226432304014) < 1e-9);
}

TEST_CASE("coexistence needs a sign change") {
  try {
    coexistence(3.0, 3, 2.0, 3.0);
    FAIL("expected NoBracket");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoBracket);
  }
}

TEST_CASE("closed-form stability vectors") {
  const PottsParams p{4.0, 0.2, 3};
  for (int j = 0; j < 3; ++j) CHECK(stability_vector_closed(p, 0.0, j).vec().cwiseAbs().maxCoeff() < 1e-15);
  const double u = 0.92977174028642473;
  const auto b0 = stability_vector_closed(p, u, 0);
  const auto b1 = stability_vector_closed(p, u, 1);
  CHECK(std::abs(b0.vec().sum()) < 1e-15);
  CHECK(b0[0] == b1[1]);
  CHECK(b0[1] == b1[0]);
  CHECK(b0[2] == b1[2]);
  const auto model = potts_model(p);
  for (int j = 0; j < 3; ++j) {
    const auto numeric = meanfield::stability_vector(model, SimplexVector::uniform(3), lifted_profile(p, u, j));
    CHECK((numeric.vec() - stability_vector_closed(p, u, j).vec()).cwiseAbs().maxCoeff() < 1e-8);
  }
  const PottsParams c{3.0, 0.76228317004279234, 3};
  CHECK(std::abs(stability_vector_closed(c, 0.52332653899006543, 0)[0] - 0.29104190768297383) < 1e-10);
}

TEST_CASE("biased mixture weight") {
  const PottsParams p{3.0, 0.76228317004279234, 3};
  CHECK(p1(p, 0.0) == 1.0);
  CHECK(p_of(p, 0.0) == 0.5);
  const double u = 0.52332653899006543;
  CHECK(std::abs(p1(p, u) - oracle::p1(3.0, p.field, u)) < 1e-13);
  CHECK(std::abs(p1(p, u) - 1.5473795100702712) < 1e-10);
  CHECK(std::abs(p_of(p, u) - 0.60743972539356161) < 1e-10);
  CHECK(std::abs(p_of(p, u) / (1 - p_of(p, u)) - p1(p, u)) < 1e-12);
  for (double beta : {3.0, 5.0, 8.0})
    for (double field : {0.05, 0.5, 1.0}) {
      const PottsParams q{beta, field, 3};
      for (const auto& r : solve_order_parameters(q))
        if (r.u > 0) CHECK(p_of(q, r.u) > 0.5);
    }
}

TEST_CASE("biased mixture weight inequality on a grid") {
  // x + y <= 1 + xy for x = e^B > 1 and y = e^{beta u} >= 1, equivalently p1 >= 1.
  for (int i = 1; i <= 100; ++i)
    for (int k = 0; k < 100; ++k) {
      const double x = std::exp(0.05 * i), y = std::exp(0.1 * k);
      CHECK(x + y <= 1.0 + x * y);
      const PottsParams p{1.0, 0.05 * i, 3};
      CHECK(p1(p, 0.1 * k) >= 1.0);
    }
}
