#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "pcelqr/finite_horizon.hpp"
#include "pcelqr/infinite_horizon.hpp"

namespace pcelqr {

/// Closed-loop sample paths and their per-step summaries. X[k] and U[k]
/// are count x n matrices (row = sample path). Summaries use pairwise
/// summation so they are reproducible to the last bit for a fixed order.
struct SimulationBatch {
  int count = 0;
  std::uint64_t seed = 0;
  int steps = 0;  // number of input steps; states run 0..steps
  std::vector<Matrix> X;
  std::vector<Matrix> U;
  std::vector<Vector> mean_x;  // per k
  std::vector<Matrix> cov_x;   // per k
  Vector costs;                // realized cost per path
  double avg_cost = 0.0;
  double cost_stderr = 0.0;
};

/// Simulates x+ = A x + B u + E w under the finite-horizon gain schedule
/// u_k = K_{N-k} x_k + F_{N-k} E[W].
SimulationBatch simulate_closed_loop(const StochasticScenario& scenario,
                                     const RiccatiLadder& ladder, int count,
                                     std::uint64_t seed);

/// Same plant under the stationary feedback u = K x + F E[W] for a chosen
/// number of steps (terminal cost not added).
SimulationBatch simulate_closed_loop_stationary(const StochasticScenario& scenario,
                                                const StationaryGains& gains,
                                                int steps, int count,
                                                std::uint64_t seed);

/// Coupled optimal/stationary rollout sharing the disturbance stream.
struct CoupledBatch {
  int count = 0;
  int steps = 0;
  Vector gap_l2;            // per k: empirical L2 of (X_k - Xbar_k, U_k - Ubar_k)
  Vector max_coupling_defect;  // per k: max over paths of ||d_{k+1} - A_cl d_k||_inf
  double x0_offset_norm = 0.0; // analytic ||X_0 - Xbar_0|| from moments
};

/// Runs 'count' coupled paths: the optimal trajectory starts at a sampled
/// X_ini, the stationary one at a p_ref-term tail sample of the stationary
/// state; both see the same W_k draws.
CoupledBatch simulate_coupled_stationary(const StochasticScenario& scenario,
                                         const StationaryPairRep& rep, int p_ref,
                                         int steps, int count, std::uint64_t seed);

/// Exact order-2 Wasserstein distance between two equal-size empirical
/// scalar measures: root mean square of sorted-sample differences.
double empirical_w2_1d(std::span<const double> a, std::span<const double> b);

/// Equal-width histogram normalized to total mass 1. A degenerate range
/// collapses to a single unit-mass bin.
struct Histogram {
  Vector edges;  // bins+1 (single bin for degenerate input)
  Vector mass;
};

Histogram emit_histogram(std::span<const double> samples, int bins);

/// Path dump with columns sample_id,k,x_1..x_nx,u_1..u_nu
/// (17 significant digits; byte-identical across runs for fixed inputs).
void write_paths_csv(std::ostream& os, const SimulationBatch& batch);

}  // namespace pcelqr
