#include <doctest.h>

#include <cmath>

#include "pcelqr/infinite_horizon.hpp"
#include "pcelqr/stationary.hpp"
#include "test_helpers.hpp"

using namespace pcelqr;
using namespace pcelqr::testing;

namespace {

PceSource uniform_disturbance() {
  Matrix w(1, 2);
  w << 0.3, 0.3;
  return PceSource::create({GermSpec::uniform_legendre(2)}, w);
}

/// Stage cost of a pair of moments: ||E[X]||^2_Q + ||E[U]||^2_R
/// + tr(Q Sigma_X + R Sigma_U).
double moment_stage_cost(const CostSpec& cost, const Vector& mx, const Matrix& Sx,
                         const Vector& mu, const Matrix& Su) {
  return mx.dot(cost.Q * mx) + mu.dot(cost.R * mu) + (cost.Q * Sx).trace() +
         (cost.R * Su).trace();
}

}  // namespace

TEST_SUITE_BEGIN("stationary");

TEST_CASE("stationary cost vanishes for a zero disturbance") {
  const auto s = cstr_scenario();
  const auto g = stationary_gains(s.sys, s.cost);
  const auto zero = PceSource::create({GermSpec::uniform_legendre(1)}, Matrix::Zero(1, 1));
  CHECK(stationary_cost(g, zero) == doctest::Approx(0.0));
}

TEST_CASE("stationary cost equals the moment-form stage cost") {
  const auto s = cstr_scenario();
  const auto g = stationary_gains(s.sys, s.cost);
  const auto rep = stationary_pair(s.sys, s.cost, s.dist);
  const double direct = stationary_cost(g, s.dist);
  const double via_moments =
      moment_stage_cost(s.cost, rep.mean_x, rep.cov_x, rep.mean_u, rep.cov_u);
  CHECK(direct == doctest::Approx(via_moments).epsilon(1e-8));

  Rng rng(4242);
  for (int trial = 0; trial < 20; ++trial) {
    const auto rs = random_stable_system(rng, 3);
    const auto gg = stationary_gains(rs.sys, rs.cost);
    const auto dist = unit_variance_disturbance();
    const auto rrep = stationary_pair(rs.sys, rs.cost, dist);
    CHECK(stationary_cost(gg, dist) ==
          doctest::Approx(moment_stage_cost(rs.cost, rrep.mean_x, rrep.cov_x, rrep.mean_u,
                                            rrep.cov_u))
              .epsilon(1e-8));
  }
}

TEST_CASE("stationary cost matches a large monte carlo of the stationary loop") {
  const auto golden = [] {
    Matrix one(1, 1);
    one << 1.0;
    Matrix x0(1, 1);
    x0 << 0.0;
    return StochasticScenario::create(LtiSystem::create(one, one, one),
                                      CostSpec::create(one, one, one),
                                      PceSource::create({GermSpec::uniform_legendre(1)}, x0),
                                      uniform_disturbance(), 2, "golden");
  }();
  const auto g = stationary_gains(golden.sys, golden.cost);
  const double cost = stationary_cost(g, golden.dist);

  // Draw the stationary state from a deep truncation, apply the feedback,
  // and average the stage cost.
  const auto approx = build_truncated_stationary(g, golden.dist, 60);
  const int n = 1000000;
  const Matrix xu = sample_truncated_stationary(approx, golden.dist, n, 31337);
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double stage = xu(0, i) * xu(0, i) + xu(1, i) * xu(1, i);
    sum += stage;
    sum_sq += stage * stage;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum_sq / n - mean * mean) / n);
  CHECK(std::abs(mean - cost) <= 3.0 * se);
}

TEST_CASE("closed-form window lengths reproduce the published CSTR dimensions") {
  const auto s = cstr_scenario();
  const auto g = stationary_gains(s.sys, s.cost);
  CHECK(required_dim_closed_form(g, s.dist, 0.1) == 5);
  CHECK(required_dim_closed_form(g, s.dist, 0.01) == 11);
  CHECK_THROWS_AS(required_dim_closed_form(g, s.dist, 0.0), ValidationError);
}

TEST_CASE("lyapunov window lengths reproduce the published CSTR dimensions") {
  const auto s = cstr_scenario();
  const auto g = stationary_gains(s.sys, s.cost);
  CHECK(required_dim_lyapunov(g, s.dist, 0.1) == 2);
  CHECK(required_dim_lyapunov(g, s.dist, 0.01) == 4);
  // A bound looser than the full tail needs no window at all.
  CHECK(required_dim_lyapunov(g, s.dist, 1e6) == 0);
}

TEST_CASE("degenerate windows: deterministic disturbance and dead-beat closure") {
  const auto s = cstr_scenario();
  const auto g = stationary_gains(s.sys, s.cost);
  const auto zero = PceSource::create({GermSpec::uniform_legendre(1)}, Matrix::Zero(1, 1));
  CHECK(required_dim_closed_form(g, zero, 0.01) == 0);

  // A = 0 gives K = 0 and a dead-beat closed loop with rho = 0.
  Matrix A = Matrix::Zero(2, 2), B(2, 1), E(2, 1);
  B << 1, 0;
  E << 1, 1;
  const auto sys = LtiSystem::create(A, B, E);
  const auto cost = CostSpec::create(Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                                     Matrix::Identity(1, 1));
  const auto gd = stationary_gains(sys, cost);
  CHECK(gd.rho == 0.0);
  CHECK(required_dim_closed_form(gd, uniform_disturbance(), 0.01) == 0);
}

TEST_CASE("truncated stationary pair: structure, recurrence, bounds") {
  const auto s = cstr_scenario();
  const auto g = stationary_gains(s.sys, s.cost);

  const auto p0 = build_truncated_stationary(g, s.dist, 0);
  CHECK(p0.basis.L == 1);
  CHECK(p0.w2_bound == doctest::Approx(truncation_bound_lyapunov(g, s.dist, 0)));

  const auto a = build_truncated_stationary(g, s.dist, 8);
  CHECK(a.basis.L == 9);
  CHECK(matrices_close(a.x_coeffs.col(0), p0.mean_x, 1e-14));
  // Column recurrence: block j = A_cl * block(j-1).
  for (int j = 1; j < 8; ++j) {
    const int slot = a.basis.dist_slot(j, 1);
    const int prev = a.basis.dist_slot(j - 1, 1);
    CHECK(matrices_close(a.x_coeffs.col(slot), g.A_cl * a.x_coeffs.col(prev), 1e-13));
  }
  // Paired input: U = K X + F E[W] column-wise.
  CHECK(matrices_close(a.u_coeffs.col(0), g.K * a.x_coeffs.col(0) + g.F * s.mean_w(), 1e-13));
  for (int j = 0; j < 8; ++j) {
    const int slot = a.basis.dist_slot(j, 1);
    CHECK(matrices_close(a.u_coeffs.col(slot), g.K * a.x_coeffs.col(slot), 1e-13));
  }

  // p = p_bar(0.01) guarantees the Lyapunov bound by construction.
  const int pbar = required_dim_lyapunov(g, s.dist, 0.01);
  const auto at = build_truncated_stationary(g, s.dist, pbar);
  CHECK(at.bound_lyapunov <= 0.01);
}

TEST_CASE("bounds are ordered, monotone, and consistent with the window search") {
  const auto s = cstr_scenario();
  const auto g = stationary_gains(s.sys, s.cost);
  double prev_cf = std::numeric_limits<double>::infinity();
  double prev_ly = std::numeric_limits<double>::infinity();
  for (int p = 0; p <= 15; ++p) {
    const double cf = truncation_bound_closed_form(g, s.dist, p);
    const double ly = truncation_bound_lyapunov(g, s.dist, p);
    CHECK(ly <= cf);
    CHECK(cf <= prev_cf);
    CHECK(ly <= prev_ly + 1e-15);
    prev_cf = cf;
    prev_ly = ly;
  }
  for (const double delta : {0.1, 0.01, 0.001}) {
    CHECK(required_dim_lyapunov(g, s.dist, delta) <= required_dim_closed_form(g, s.dist, delta));
  }
}

TEST_CASE("moment convergence of the truncation matches the tail lyapunov solve") {
  const auto s = cstr_scenario();
  const auto g = stationary_gains(s.sys, s.cost);
  const auto rep = stationary_pair(s.sys, s.cost, s.dist);
  for (const int p : {0, 3, 7}) {
    const auto approx = build_truncated_stationary(g, s.dist, p);
    Matrix cov_trunc = Matrix::Zero(2, 2);
    for (int j = 0; j < p; ++j) {
      const int slot = approx.basis.dist_slot(j, 1);
      cov_trunc += approx.x_coeffs.col(slot) * approx.x_coeffs.col(slot).transpose() *
                   approx.basis.norms[slot];
    }
    // Tail covariance = Lyapunov solution forced by the p-step propagator.
    Matrix Ap = Matrix::Identity(2, 2);
    for (int j = 0; j < p; ++j) Ap = g.A_cl * Ap;
    const Matrix Qc = Ap * s.sys.E * s.cov_w() * s.sys.E.transpose() * Ap.transpose();
    const Matrix tail = solve_discrete_lyapunov(g.A_cl, Qc);
    CHECK(((rep.cov_x - cov_trunc) - tail).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_SUITE_END();
