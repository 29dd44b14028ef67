#pragma once

#include <vector>

#include "pcelqr/basis.hpp"
#include "pcelqr/linalg.hpp"

namespace pcelqr {

/// Moments and tail generator of the limiting stationary state-input pair.
/// mean_x solves mean_x = A_cl mean_x + F_cl E[W]; cov_x solves the
/// discrete Lyapunov equation with forcing E Sigma[W] E'.
struct StationaryPairRep {
  StationaryGains gains;
  Vector mean_x;
  Vector mean_u;
  Matrix cov_x;
  Matrix cov_u;
  std::vector<Matrix> tail_gen;  // T_j = A_cl^j E, j = 0..p_max
};

/// Rate certificate of Lemma-style exponential convergence:
/// ||(X_k,U_k) - (Xbar_k,Ubar_k)|| <= beta * rate^k.
struct ConvergenceCertificate {
  double beta = 0.0;
  double rate = 0.0;
};

/// Stationary feedback u = K x + F E[W].
StationaryGains infinite_gains(const LtiSystem& sys, const CostSpec& cost);

/// Builds the stationary pair representation. p_max < 0 selects the
/// default tail length (smallest p whose Lyapunov truncation bound is
/// below 1e-8).
StationaryPairRep stationary_pair(const LtiSystem& sys, const CostSpec& cost,
                                  const PceSource& dist, int p_max = -1);

/// Distributional fixed-point defect at the moment level: mean residual
/// plus covariance residual (Frobenius).
double stationarity_residual(const StationaryPairRep& rep, const PceSource& dist);

/// beta = sqrt(1 + ||K||_2^2) * ||V||_2 ||V^-1||_2 * x0_offset_norm,
/// rate = rho(A_cl). Throws NumericalError for a defective closed loop.
ConvergenceCertificate convergence_certificate(const LtiSystem& sys, const CostSpec& cost,
                                               double x0_offset_norm);

}  // namespace pcelqr
