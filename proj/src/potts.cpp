#include "mfm/potts.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace mfm::potts {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log D1 - log c and log D2 - log c, where c = e^B + q - 1,
// D1 = e^{bu} + e^B + q - 2 and D2 = e^{bu+B} + q - 1. Both vanish at u = 0.
struct LogRatios {
  double a1;
  double a2;
};

LogRatios log_ratios(const PottsParams& p, double u) {
  const double x = p.beta * u;
  const double eb = std::exp(-p.field);
  const double inv_c = eb / (1.0 + (p.q - 1) * eb);
  const double share = 1.0 / (1.0 + (p.q - 1) * eb);  // e^B / c
  const double grow = std::expm1(x);
  return LogRatios{std::log1p(grow * inv_c), std::log1p(grow * share)};
}

struct Bracket {
  double lo;
  double hi;
};

// Bisection on the sign of g; +inf counts as positive.
double bisect_sign(const std::function<double(double)>& g, Bracket b, double tol, const char* what) {
  double glo = g(b.lo);
  const double ghi = g(b.hi);
  if (std::abs(glo) <= tol) return b.lo;
  if (std::abs(ghi) <= tol) return b.hi;
  if ((glo > 0.0) == (ghi > 0.0)) throw Error(ErrorCode::NoBracket, std::string(what) + ": gap keeps its sign on the window");
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (b.lo + b.hi);
    const double gm = g(mid);
    if (std::isfinite(gm) && std::abs(gm) <= tol) return mid;
    if ((gm > 0.0) == (glo > 0.0)) {
      b.lo = mid;
      glo = gm;
    } else {
      b.hi = mid;
    }
    if (b.hi - b.lo <= 1e-16 * std::max(1.0, std::abs(mid))) break;
  }
  throw Error(ErrorCode::NonConvergence, std::string(what) + ": bisection stalled before reaching the tolerance");
}

// Free energy of the deepest stable ordered root minus that of u = 0;
// +inf when no ordered root exists.
double ordered_gap(const PottsParams& p, double* u_out = nullptr) {
  double best = kInf;
  double best_u = 0.0;
  for (const auto& r : solve_order_parameters(p)) {
    if (r.u <= 1e-9 || !r.stable) continue;
    const double f = potts_free_energy_u(p, r.u);
    if (f < best) {
      best = f;
      best_u = r.u;
    }
  }
  if (u_out) *u_out = best_u;
  return best - potts_free_energy_u(p, 0.0);
}

}  // namespace

void PottsParams::validate() const {
  if (q < 2) throw Error(ErrorCode::InvalidArgument, "Potts model needs q >= 2");
  if (!std::isfinite(beta) || !std::isfinite(field)) throw Error(ErrorCode::InvalidArgument, "beta and B must be finite");
}

double mfe_residual(const PottsParams& p, double u) {
  const double x = p.beta * u;
  // Both terms share the denominator D1 D2; scaling by e^{-2x-B} keeps the
  // numerator e^B expm1(2x) + (q-2) expm1(x) finite for large x.
  const double num = -std::expm1(-2.0 * x) - (p.q - 2) * std::exp(-x - p.field) * std::expm1(-x);
  const double den = (1.0 + std::exp(p.field - x) + (p.q - 2) * std::exp(-x)) * (1.0 + (p.q - 1) * std::exp(-x - p.field));
  return u - num / den;
}

std::vector<OrderParameter> solve_order_parameters(const PottsParams& params, double step) {
  params.validate();
  if (!(step > 0.0 && step <= 0.5)) throw Error(ErrorCode::InvalidArgument, "scan step must lie in (0, 0.5]");
  std::vector<double> roots;
  const int count = static_cast<int>(std::ceil(1.0 / step));
  double prev_u = 0.0;
  double prev_r = mfe_residual(params, 0.0);
  if (prev_r == 0.0) roots.push_back(0.0);
  for (int k = 1; k <= count; ++k) {
    const double u = std::min(1.0, k * step);
    const double r = mfe_residual(params, u);
    if (r == 0.0) {
      roots.push_back(u);
    } else if (prev_r != 0.0 && (r > 0.0) != (prev_r > 0.0)) {
      double lo = prev_u;
      double hi = u;
      const bool rising = r > 0.0;
      while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        const double rm = mfe_residual(params, mid);
        if (rm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((rm > 0.0) == rising) hi = mid;
        else lo = mid;
      }
      roots.push_back(0.5 * (lo + hi));
    }
    prev_u = u;
    prev_r = r;
  }

  std::vector<OrderParameter> out;
  const double delta = step / 10.0;
  for (double u : roots) {
    if (!out.empty() && u - out.back().u < 1e-9) continue;
    OrderParameter op;
    op.u = u;
    op.residual = mfe_residual(params, u);
    const bool right_up = mfe_residual(params, std::min(1.0, u + delta)) > 0.0;
    const bool left_down = u <= 0.0 || mfe_residual(params, std::max(0.0, u - delta)) < 0.0;
    op.stable = right_up && left_down;
    out.push_back(op);
  }
  return out;
}

double potts_free_energy_u(const PottsParams& p, double u) {
  const LogRatios lr = log_ratios(p, u);
  const double q = p.q;
  return -lr.a1 + p.beta * (q - 1.0) * u * u / (2.0 * q) + p.beta * u / q - (lr.a2 - lr.a1) / q;
}

SimplexVector ordered_total(const PottsParams& params, double u, int j) {
  params.validate();
  if (j < 0 || j >= params.q) throw Error(ErrorCode::InvalidArgument, "state index out of range");
  Vector v = Vector::Constant(params.q, (1.0 - u) / params.q);
  v[j] += u;
  return SimplexVector::normalized(std::move(v));
}

meanfield::ModelSpec potts_model(const PottsParams& params) {
  params.validate();
  return meanfield::ModelSpec::potts(params.beta, params.field, params.q);
}

meanfield::TypeProfile lifted_profile(const PottsParams& params, double u, int j) {
  return meanfield::lift(potts_model(params), ordered_total(params, u, j));
}

OrderedState ordered_branch(const PottsParams& params, double tol) {
  const auto roots = solve_order_parameters(params);
  double deepest = kInf;
  for (const auto& r : roots)
    if (r.stable) deepest = std::min(deepest, potts_free_energy_u(params, r.u));
  for (auto it = roots.rbegin(); it != roots.rend(); ++it) {
    if (it->u <= 1e-9 || !it->stable) continue;
    OrderedState s;
    s.u = it->u;
    s.value = potts_free_energy_u(params, it->u);
    s.global = s.value <= deepest + tol;
    return s;
  }
  throw Error(ErrorCode::NoOrderedPhase, "only u = 0 solves the mean-field equation");
}

CoexistencePoint coexistence(double beta, int q, double field_lo, double field_hi, double tol) {
  PottsParams p{beta, field_lo, q};
  p.validate();
  auto gap = [&](double field) { return ordered_gap(PottsParams{beta, field, q}); };
  const double field = bisect_sign(gap, Bracket{field_lo, field_hi}, tol, "coexistence");
  CoexistencePoint out;
  out.field = field;
  out.gap = ordered_gap(PottsParams{beta, field, q}, &out.u);
  return out;
}

double transition_beta(int q, double beta_lo, double beta_hi, double tol) {
  auto gap = [&](double beta) { return ordered_gap(PottsParams{beta, 0.0, q}); };
  return bisect_sign(gap, Bracket{beta_lo, beta_hi}, tol, "transition");
}

TangentVector stability_vector_closed(const PottsParams& params, double u, int j) {
  params.validate();
  if (j < 0 || j >= params.q) throw Error(ErrorCode::InvalidArgument, "state index out of range");
  const LogRatios lr = log_ratios(params, u);
  const double l = lr.a2 - lr.a1;
  const double q = params.q;
  Vector v = Vector::Constant(params.q, -l / q);
  v[j] = (q - 1.0) / q * l;
  return TangentVector(std::move(v));
}

double p1(const PottsParams& params, double u) {
  params.validate();
  if (params.q != 3) throw Error(ErrorCode::InvalidArgument, "p1 is defined for q = 3");
  const double x = std::exp(params.field);
  const double y = std::exp(params.beta * u);
  return 1.0 + std::expm1(params.field) * std::expm1(params.beta * u) / (x + y + 1.0);
}

double p_of(const PottsParams& params, double u) {
  const double r = p1(params, u);
  if (!std::isfinite(r)) return 1.0;
  return r / (1.0 + r);
}

}  // namespace mfm::potts
