#pragma once

#include <iosfwd>
#include <vector>

#include "pcelqr/basis.hpp"
#include "pcelqr/linalg.hpp"

namespace pcelqr {

/// Optimal solution of the finite-horizon problem in PCE coefficients.
/// x_coeffs[k] is n_x x L (k = 0..N), u_coeffs[k] is n_u x L (k = 0..N-1);
/// column j holds the coefficient of basis slot j. block_costs[j] is the
/// per-slot minimum J_N(x_ini^j, u^{j,*}); the total cost is the
/// norm-weighted sum of the block costs.
struct FiniteSolution {
  StochasticScenario scenario;
  JointBasis basis;
  RiccatiLadder ladder;
  std::vector<Matrix> x_coeffs;
  std::vector<Matrix> u_coeffs;
  Vector block_costs;
  double total_cost = 0.0;

  PceRandomVector state_at(int k) const;
  PceRandomVector input_at(int k) const;
};

/// Solves the decoupled per-slot problems by forward simulation under the
/// ladder gains: u_k = K_{N-k} x_k for every slot, plus F_{N-k} E[W] on the
/// constant slot only.
FiniteSolution solve_finite(const StochasticScenario& scenario);

/// Transition product over the optimal closed loop,
/// Abar(k1,k2) = (A + B K_{N-k2}) ... (A + B K_{N-k1}) for k1 <= k2,
/// identity otherwise.
Matrix abar_product(const LtiSystem& sys, const RiccatiLadder& ladder, int k1, int k2);

/// Closed-form coefficient of `slot` at time k, independent of the stored
/// trajectories (used as an oracle against the forward simulation).
Vector closed_form_state_coeff(const FiniteSolution& sol, int slot, int k);

/// Error of dropping all disturbance blocks older than the last p steps.
/// delta_coeffs[k] is n_x x L with non-zeros only on the dropped slots;
/// delta_norms[k] is the L2 norm of the truncated-away random variable.
struct TruncationReport {
  int p = 0;
  std::vector<Matrix> delta_coeffs;
  Vector delta_norms;
};

/// Evaluates the analytic truncation-error coefficients
/// Abar(j+1,k-1) E w^n for disturbance times j <= k-p-1.
TruncationReport truncation_error(const FiniteSolution& sol, int p);

/// Minimum cost split into its closed-form parts.
struct CostDecomposition {
  Vector per_slot_weighted;  // block_costs[j] * ||phi^j||^2
  double constant_part = 0.0;
  double ini_part = 0.0;   // tr(P_N Sigma[X_ini])
  double dist_part = 0.0;  // sum_j tr(P_j E Sigma[W] E')
  double total = 0.0;
};

CostDecomposition min_cost_decomposition(const FiniteSolution& sol);

/// Trajectory table with columns
/// k,slot,paper_index_j,component,x_coeff,u_coeff (17 significant digits).
void write_trajectory_csv(std::ostream& os, const FiniteSolution& sol);

}  // namespace pcelqr
