#pragma once

#include "pcelqr/basis.hpp"
#include "pcelqr/linalg.hpp"

namespace pcelqr {

/// Finite-dimensional approximation of the optimal stationary pair,
/// keeping the mean and the most recent p disturbance blocks on a joint
/// basis with L = 1 + p(L_w - 1) slots.
struct StationaryApprox {
  int p = 0;
  JointBasis basis;
  Matrix x_coeffs;  // n_x x L; column for (time j, function n) is A_cl^j E w^n
  Matrix u_coeffs;  // n_u x L
  Vector mean_x;
  Vector mean_u;
  double bound_closed_form = 0.0;  // +inf when A_cl is defective
  double bound_lyapunov = 0.0;
  double w2_bound = 0.0;           // the sharper of the two valid bounds
};

/// Minimum cost of the stationary optimization problem,
/// ||W||^2_{E'PE} + ||E[W]||^2_{S_delta}.
double stationary_cost(const StationaryGains& gains, const PceSource& dist);

/// Smallest window length from the closed-form expression
/// ceil((ln delta + c) / ln rho), clamped at 0. Throws NumericalError when
/// the closed loop is defective (the Lyapunov route remains available).
int required_dim_closed_form(const StationaryGains& gains, const PceSource& dist,
                             double delta);

/// Smallest p with  sqrt(1+||K||_2^2) * (E(W-E[W]))-quadratic-form of M(p)
/// <= delta, where M(p) solves A_cl' M A_cl - M + (A_cl^p)'A_cl^p = 0.
/// Solved once at p = 0, then advanced by M(p+1) = A_cl' M(p) A_cl.
int required_dim_lyapunov(const StationaryGains& gains, const PceSource& dist,
                          double delta);

/// Truncation bounds without the search: closed-form geometric-series value
/// (+inf if defective) and the Lyapunov-equation value for a given p.
double truncation_bound_closed_form(const StationaryGains& gains,
                                    const PceSource& dist, int p);
double truncation_bound_lyapunov(const StationaryGains& gains,
                                 const PceSource& dist, int p);

StationaryApprox build_truncated_stationary(const StationaryGains& gains,
                                            const PceSource& dist, int p);

/// Samples the truncated pair (X 'rows' then U rows, count columns).
/// Sample i uses stream i of `seed`.
Matrix sample_truncated_stationary(const StationaryApprox& approx,
                                   const PceSource& dist, int count,
                                   std::uint64_t seed);

}  // namespace pcelqr
