#include <doctest.h>

#include <cmath>

#include "pcelqr/finite_horizon.hpp"
#include "qp_oracle.hpp"
#include "test_helpers.hpp"

using namespace pcelqr;
using namespace pcelqr::testing;

namespace {

/// Norm-weighted stage cost of the coefficient matrix pair at one step.
double stage_cost(const FiniteSolution& sol, int k) {
  const Matrix& x = sol.x_coeffs[k];
  const Matrix& u = sol.u_coeffs[k];
  double acc = 0.0;
  for (int s = 0; s < sol.basis.L; ++s) {
    acc += (x.col(s).dot(sol.scenario.cost.Q * x.col(s)) +
            u.col(s).dot(sol.scenario.cost.R * u.col(s))) *
           sol.basis.norms[s];
  }
  return acc;
}

double terminal_cost(const FiniteSolution& sol) {
  const Matrix& x = sol.x_coeffs[sol.scenario.N];
  double acc = 0.0;
  for (int s = 0; s < sol.basis.L; ++s) {
    acc += x.col(s).dot(sol.scenario.cost.Q_N * x.col(s)) * sol.basis.norms[s];
  }
  return acc;
}

/// Cost of one slot's trajectory re-simulated under a modified input.
double slot_cost_with_input(const FiniteSolution& sol, int slot,
                            const std::vector<Vector>& u) {
  const StochasticScenario& sc = sol.scenario;
  const SlotInfo& info = sol.basis.slots[slot];
  Vector x = sol.x_coeffs[0].col(slot);
  double cost = 0.0;
  for (int k = 0; k < sc.N; ++k) {
    cost += x.dot(sc.cost.Q * x) + u[k].dot(sc.cost.R * u[k]);
    x = sc.sys.A * x + sc.sys.B * u[k];
    if (info.kind == SlotKind::Constant) {
      x += sc.sys.E * sc.mean_w();
    } else if (info.kind == SlotKind::Disturbance && info.time == k) {
      x += sc.sys.E * sc.dist.coeffs.col(info.source_column);
    }
  }
  return cost + x.dot(sc.cost.Q_N * x);
}

StochasticScenario deterministic_scenario() {
  Matrix A(2, 2), B(2, 1), E(2, 1);
  A << 0.8, 0.3, 0.0, 0.9;
  B << 0.0, 1.0;
  E << 1.0, 0.5;
  Matrix x0(2, 1);
  x0 << 1.0, -2.0;
  Matrix w0 = Matrix::Zero(1, 1);
  return StochasticScenario::create(
      LtiSystem::create(A, B, E),
      CostSpec::create(Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                       Matrix::Identity(1, 1)),
      PceSource::create({GermSpec::uniform_legendre(1)}, x0),
      PceSource::create({GermSpec::uniform_legendre(1)}, w0), 12, "deterministic");
}

}  // namespace

TEST_SUITE_BEGIN("finite_horizon");

TEST_CASE("deterministic scenario collapses to the classic LQR value") {
  const auto sol = solve_finite(deterministic_scenario());
  CHECK(sol.basis.L == 1);
  const Vector x0 = sol.scenario.ini.coeffs.col(0);
  CHECK(sol.total_cost ==
        doctest::Approx(x0.dot(sol.ladder.P[sol.scenario.N] * x0)).epsilon(1e-12));
}

TEST_CASE("one-step scalar optimum matches the single-step minimizer") {
  Matrix A(1, 1), B(1, 1), E(1, 1), x0(1, 2), w(1, 2);
  A << 0.7;
  B << 1.3;
  E << 0.9;
  x0 << 1.1, 0.4;
  w << 0.25, 0.15;
  const auto scenario = StochasticScenario::create(
      LtiSystem::create(A, B, E),
      CostSpec::create(Matrix::Identity(1, 1), 2.0 * Matrix::Identity(1, 1),
                       0.5 * Matrix::Identity(1, 1)),
      PceSource::create({GermSpec::gaussian_hermite(2)}, x0),
      PceSource::create({GermSpec::uniform_legendre(2)}, w), 1, "one-step");
  const auto sol = solve_finite(scenario);

  const double qn = 2.0, r = 0.5, a = A(0, 0), b = B(0, 0), e = E(0, 0);
  const double gain = -1.0 / (r + b * qn * b) * b * qn;
  // Constant slot: w coefficient is E[W]; initial-condition slot: no forcing.
  CHECK(sol.u_coeffs[0](0, 0) == doctest::Approx(gain * (a * 1.1 + e * 0.25)).epsilon(1e-12));
  CHECK(sol.u_coeffs[0](0, 1) == doctest::Approx(gain * (a * 0.4)).epsilon(1e-12));
  // Disturbance slot: u_0 is pinned to zero by causality.
  CHECK(sol.u_coeffs[0](0, 2) == 0.0);
  CHECK(sol.x_coeffs[1].col(2)(0) == doctest::Approx(e * 0.15));
}

TEST_CASE("coefficient dynamics hold exactly and causality zeroes early slots") {
  const auto sol = solve_finite(cstr_scenario(20));
  const StochasticScenario& sc = sol.scenario;
  for (int k = 0; k < sc.N; ++k) {
    Matrix w_inject = Matrix::Zero(sc.sys.n_w(), sol.basis.L);
    w_inject.col(0) = sc.mean_w();
    for (int n = 1; n < sol.basis.L_w; ++n) {
      w_inject.col(sol.basis.dist_slot(k, n)) = sc.dist.coeffs.col(n);
    }
    const Matrix residual = sol.x_coeffs[k + 1] - (sc.sys.A * sol.x_coeffs[k] +
                                                   sc.sys.B * sol.u_coeffs[k] +
                                                   sc.sys.E * w_inject);
    CHECK(residual.cwiseAbs().maxCoeff() <= 1e-12);
  }
  for (int s = 0; s < sol.basis.L; ++s) {
    const int start = sol.basis.first_active_step(s);
    for (int k = 0; k < start; ++k) {
      CHECK(sol.x_coeffs[k].col(s).cwiseAbs().maxCoeff() == 0.0);
      CHECK(sol.u_coeffs[k].col(s).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("closed form matches the forward simulation everywhere") {
  const auto sol = solve_finite(cstr_scenario(16));
  for (int s = 0; s < sol.basis.L; ++s) {
    for (int k = 0; k <= sol.scenario.N; ++k) {
      const Vector closed = closed_form_state_coeff(sol, s, k);
      CHECK((closed - sol.x_coeffs[k].col(s)).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
  CHECK_THROWS_AS(closed_form_state_coeff(sol, sol.basis.L, 0), DimensionError);
  CHECK_THROWS_AS(closed_form_state_coeff(sol, 0, sol.scenario.N + 1), DimensionError);
}

TEST_CASE("closed-form corner cases: empty product and disturbance entry value") {
  const auto sol = solve_finite(cstr_scenario(10));
  // k = 0: the empty transition product leaves the initial coefficient.
  CHECK(matrices_close(closed_form_state_coeff(sol, 1, 0), sol.scenario.ini.coeffs.col(1),
                       0.0));
  // A disturbance slot enters with value E w^0 at k = j + 1.
  const Vector Ew = sol.scenario.sys.E * sol.scenario.dist.coeffs.col(1);
  for (int j : {0, 4, 9}) {
    const int slot = sol.basis.dist_slot(j, 1);
    CHECK(matrices_close(closed_form_state_coeff(sol, slot, j + 1), Ew, 1e-14));
  }
}

TEST_CASE("shift identities hold in time and across slots") {
  const auto sol = solve_finite(cstr_scenario(18));
  const int N = sol.scenario.N;
  Rng rng(314);
  for (int trial = 0; trial < 100; ++trial) {
    const int j = static_cast<int>(uniform01(rng) * N);
    const int k = 1 + static_cast<int>(uniform01(rng) * (N - 1));
    if (j >= k) continue;
    const int slot = sol.basis.dist_slot(j, 1);

    // Fixed slot, shifted time: x_{k+t} = Abar(k, k+t-1) x_k.
    const int t_max = N - k;
    const int t = static_cast<int>(uniform01(rng) * (t_max + 1));
    const Matrix prop = abar_product(sol.scenario.sys, sol.ladder, k, k + t - 1);
    CHECK((sol.x_coeffs[k + t].col(slot) - prop * sol.x_coeffs[k].col(slot))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);

    // Fixed time, shifted slot: x_k^{j-s} = Abar(j-s+1, j) x_k^{j}.
    const int shift = static_cast<int>(uniform01(rng) * (j + 1));
    const int slot_lo = sol.basis.dist_slot(j - shift, 1);
    const Matrix prop2 = abar_product(sol.scenario.sys, sol.ladder, j - shift + 1, j);
    CHECK((sol.x_coeffs[k].col(slot_lo) - prop2 * sol.x_coeffs[k].col(slot))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
  }
}

TEST_CASE("per-slot costs weighted by basis norms add up to the closed-form total") {
  const auto sol = solve_finite(cstr_scenario(24));
  const double weighted = sol.block_costs.dot(sol.basis.norms);
  CHECK(weighted == doctest::Approx(sol.total_cost).epsilon(1e-10));

  // Accumulating the stage cost along the trajectory is an independent route.
  double acc = terminal_cost(sol);
  for (int k = 0; k < sol.scenario.N; ++k) acc += stage_cost(sol, k);
  CHECK(acc == doctest::Approx(sol.total_cost).epsilon(1e-9));

  const auto decomp = min_cost_decomposition(sol);
  CHECK(decomp.total == doctest::Approx(sol.total_cost).epsilon(1e-12));
  CHECK(decomp.per_slot_weighted.sum() == doctest::Approx(sol.total_cost).epsilon(1e-10));
}

TEST_CASE("cost decomposition reduces to the affine LQR value without uncertainty") {
  // Deterministic initial state and disturbance with non-zero mean c.
  Matrix A(2, 2), B(2, 1), E(2, 1), x0(2, 1), w0(1, 1);
  A << 0.9, 0.2, -0.1, 0.7;
  B << 1.0, 0.3;
  E << 0.5, 1.0;
  x0 << 2.0, -1.0;
  w0 << 0.4;
  const auto scenario = StochasticScenario::create(
      LtiSystem::create(A, B, E),
      CostSpec::create(Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                       Matrix::Identity(1, 1)),
      PceSource::create({GermSpec::uniform_legendre(1)}, x0),
      PceSource::create({GermSpec::uniform_legendre(1)}, w0), 15, "affine");
  const auto sol = solve_finite(scenario);
  const auto d = min_cost_decomposition(sol);
  CHECK(d.ini_part == 0.0);
  CHECK(d.dist_part == 0.0);
  const int N = scenario.N;
  const Vector x = x0.col(0);
  const Vector c = w0.col(0);
  const double affine = x.dot(sol.ladder.P[N] * x) + 2.0 * c.dot(sol.ladder.G[N].transpose() * x) +
                        c.dot(sol.ladder.S[N] * c);
  CHECK(sol.total_cost == doctest::Approx(affine).epsilon(1e-12));
}

TEST_CASE("cost decomposition drops mean terms for centered uncertainty") {
  Matrix x0(2, 2), w0(1, 2);
  x0 << 0.0, 0.3, 0.0, -0.2;  // E[X_ini] = 0
  w0 << 0.0, 0.25;            // E[W] = 0
  const auto base = cstr_scenario(10);
  const auto scenario = StochasticScenario::create(
      base.sys, base.cost, PceSource::create({GermSpec::gaussian_hermite(2)}, x0),
      PceSource::create({GermSpec::uniform_legendre(2)}, w0), 10, "centered");
  const auto sol = solve_finite(scenario);
  const auto d = min_cost_decomposition(sol);
  CHECK(d.constant_part == doctest::Approx(0.0));

  const Matrix cov_ini = scenario.ini.covariance();
  CHECK(d.ini_part == doctest::Approx((sol.ladder.P[10] * cov_ini).trace()).epsilon(1e-12));
  const Matrix EcovE = scenario.sys.E * scenario.cov_w() * scenario.sys.E.transpose();
  double dist = 0.0;
  for (int j = 0; j < 10; ++j) dist += (sol.ladder.P[j] * EcovE).trace();
  CHECK(d.dist_part == doctest::Approx(dist).epsilon(1e-12));
}

TEST_CASE("feasible single-input perturbations never lower a block cost") {
  const auto sol = solve_finite(cstr_scenario(12));
  Rng rng(555);
  for (int trial = 0; trial < 60; ++trial) {
    const int slot = static_cast<int>(uniform01(rng) * sol.basis.L);
    const int start = sol.basis.first_active_step(slot);
    if (start >= sol.scenario.N) continue;
    const int k = start + static_cast<int>(uniform01(rng) * (sol.scenario.N - start));
    const int comp = static_cast<int>(uniform01(rng) * sol.scenario.sys.n_u());

    std::vector<Vector> u(sol.scenario.N);
    for (int i = 0; i < sol.scenario.N; ++i) u[i] = sol.u_coeffs[i].col(slot);
    const double base = slot_cost_with_input(sol, slot, u);
    CHECK(base == doctest::Approx(sol.block_costs[slot]).epsilon(1e-9));

    for (const double eps : {1e-4, -1e-4}) {
      u[k][comp] += eps;
      const double perturbed = slot_cost_with_input(sol, slot, u);
      u[k][comp] -= eps;
      CHECK(perturbed >= base - 1e-14);
    }
  }
}

TEST_CASE("independent stacked QP agrees with the closed form") {
  const auto sol = solve_finite(cstr_scenario(8));
  CHECK(max_deviation_from_qp(sol) <= 1e-10);
}

TEST_CASE("truncation report follows Lemma-style closed forms") {
  const auto sol = solve_finite(cstr_scenario(12));
  const int N = sol.scenario.N;

  const auto full = truncation_error(sol, N);
  for (int k = 0; k <= N; ++k) {
    CHECK(full.delta_norms[k] == 0.0);
    CHECK(full.delta_coeffs[k].cwiseAbs().maxCoeff() == 0.0);
  }

  const auto p0 = truncation_error(sol, 0);
  CHECK(p0.delta_norms[0] == 0.0);
  const Vector Ew = sol.scenario.sys.E * sol.scenario.dist.coeffs.col(1);
  const int slot0 = sol.basis.dist_slot(0, 1);
  CHECK(matrices_close(p0.delta_coeffs[1].col(slot0), Ew, 1e-14));
  CHECK(p0.delta_norms[1] ==
        doctest::Approx(Ew.norm() * std::sqrt(sol.basis.norms[slot0])).epsilon(1e-12));

  CHECK_THROWS_AS(truncation_error(sol, -1), DimensionError);
  CHECK_THROWS_AS(truncation_error(sol, N + 1), DimensionError);
}

TEST_CASE("re-solving on the truncated basis reproduces the analytic error") {
  const auto sol = solve_finite(cstr_scenario(12));
  const int N = sol.scenario.N;
  for (const int p : {2, 5}) {
    const auto report = truncation_error(sol, p);
    for (int k = 0; k <= N; ++k) {
      // The decoupled subproblems are identical on the truncated basis, so
      // the truncated solve keeps slots {constant, ini, last p disturbances}
      // and the dropped coefficients are exactly the full-solve columns.
      Matrix expected = Matrix::Zero(sol.scenario.sys.n_x(), sol.basis.L);
      for (int s = 0; s < sol.basis.L; ++s) {
        const SlotInfo& info = sol.basis.slots[s];
        if (info.kind == SlotKind::Disturbance && info.time <= k - p - 1) {
          expected.col(s) = sol.x_coeffs[k].col(s);
        }
      }
      CHECK((report.delta_coeffs[k] - expected).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("trajectory CSV is stable and carries the paper index map") {
  const auto sol = solve_finite(cstr_scenario(3));
  std::ostringstream a, b;
  write_trajectory_csv(a, sol);
  write_trajectory_csv(b, sol);
  CHECK(a.str() == b.str());
  CHECK(a.str().starts_with("k,slot,paper_index_j,component,x_coeff,u_coeff\n"));
  CHECK(a.str().find("0,0,-2,0,") != std::string::npos);
  CHECK(a.str().find("0,1,-1,0,") != std::string::npos);
}

TEST_SUITE_END();
