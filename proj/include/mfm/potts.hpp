// Closed-form q-state Potts specialization with a random field of strength B
// that couples each spin to its own disorder symbol.
#pragma once

#include "mfm/core.hpp"
#include "mfm/meanfield.hpp"

#include <vector>

namespace mfm::potts {

struct PottsParams {
  double beta = 0.0;
  double field = 0.0;  // B
  int q = 3;

  // Throws InvalidArgument unless q >= 2 and beta, B are finite.
  void validate() const;
};

struct OrderParameter {
  double u = 0.0;
  double residual = 0.0;
  bool stable = false;  // local minimum of the free energy in u
};

// u - [e^{bu}/(e^{bu} + e^B + q - 2) - 1/(e^{bu+B} + q - 1)], with the bracket
// rewritten so that it vanishes exactly at u = 0.
double mfe_residual(const PottsParams& params, double u);

// All roots in [0, 1]: sign-change scan with the given step, then bisection
// to 1e-12. Sorted ascending. u = 0 is always among them.
std::vector<OrderParameter> solve_order_parameters(const PottsParams& params, double step = 1e-4);

// Free energy of the symmetric-broken profile as a function of u; zero at u = 0.
double potts_free_energy_u(const PottsParams& params, double u);

// Total measure of ordered state j: (1 - u)/q everywhere plus u on spin j.
SimplexVector ordered_total(const PottsParams& params, double u, int j);

meanfield::ModelSpec potts_model(const PottsParams& params);

// gamma-kernel profile of ordered state j at order parameter u.
meanfield::TypeProfile lifted_profile(const PottsParams& params, double u, int j);

struct OrderedState {
  double u = 0.0;
  double value = 0.0;        // potts_free_energy_u at u
  bool global = false;       // not above the u = 0 branch (within tol)
};

// Largest stable root u > 0. Throws NoOrderedPhase if none exists.
OrderedState ordered_branch(const PottsParams& params, double tol = 1e-9);

struct CoexistencePoint {
  double field = 0.0;   // B*
  double u = 0.0;       // u* > 0
  double gap = 0.0;     // free energy of u* minus that of u = 0
};

// Bisection on B over [field_lo, field_hi] for equal depth of the deepest
// ordered root and u = 0. Throws NoBracket if the gap keeps its sign.
CoexistencePoint coexistence(double beta, int q, double field_lo, double field_hi, double tol = 1e-12);

// Zero-field transition: bisection on beta for equal depth.
double transition_beta(int q, double beta_lo, double beta_hi, double tol = 1e-12);

// Coordinate j is (q-1)/q L, the others -L/q, with
// L = log[(e^{bu+B} + q - 1)/(e^{bu} + e^B + q - 2)].
TangentVector stability_vector_closed(const PottsParams& params, double u, int j);

// p1 = (2 + e^{bu+B})/(e^B + e^{bu} + 1) for q = 3, evaluated as
// 1 + (x-1)(y-1)/(x+y+1) so that u = 0 gives exactly 1.
double p1(const PottsParams& params, double u);
// p = p1 / (1 + p1).
double p_of(const PottsParams& params, double u);

}  // namespace mfm::potts
