#pragma once

#include <cmath>
#include <random>
#include <string>

#include "pcelqr/basis.hpp"
#include "pcelqr/linalg.hpp"
#include "pcelqr/scenario_io.hpp"

namespace pcelqr::testing {

inline bool matrices_close(const Matrix& a, const Matrix& b, double tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return (a - b).cwiseAbs().maxCoeff() <= tol;
}

/// Agreement with a value printed to `digits` significant figures. The
/// tolerance is one unit in the printed value's last digit, which accepts
/// both round-to-nearest and truncation of the underlying number.
inline bool matches_printed(double value, double printed, int digits = 3) {
  if (printed == 0.0) return std::abs(value) <= 5e-4;
  const double ulp =
      std::pow(10.0, std::floor(std::log10(std::abs(printed))) - (digits - 1));
  return std::abs(value - printed) <= ulp;
}

inline StochasticScenario cstr_scenario(int N = 30) {
  StochasticScenario s = load_scenario(std::string(PCELQR_REPO_DIR) + "/scenarios/cstr.json");
  if (N == s.N) return s;
  return StochasticScenario::create(s.sys, s.cost, s.ini, s.dist, N, s.name);
}

/// Random stable systems for property tests: rho(A) scaled into
/// [0.3, 0.95), unit-norm E, Q = I, R = I.
struct RandomSystem {
  LtiSystem sys;
  CostSpec cost;
};

inline RandomSystem random_stable_system(Rng& rng, int n_x, int n_u = 1, int n_w = 1) {
  auto draw = [&rng] { return 2.0 * uniform01(rng) - 1.0; };
  Matrix A(n_x, n_x), B(n_x, n_u), E(n_x, n_w);
  for (int r = 0; r < n_x; ++r) {
    for (int c = 0; c < n_x; ++c) A(r, c) = draw();
    for (int c = 0; c < n_u; ++c) B(r, c) = draw();
    for (int c = 0; c < n_w; ++c) E(r, c) = draw();
  }
  const double rho = spectral_radius(A);
  if (rho > 0.0) A *= (0.3 + 0.65 * uniform01(rng)) / rho;
  if (E.norm() > 0.0) E /= E.norm();

  RandomSystem out{LtiSystem::create(A, B, E),
                   CostSpec::create(Matrix::Identity(n_x, n_x), Matrix::Identity(n_x, n_x),
                                    Matrix::Identity(n_u, n_u))};
  return out;
}

/// Scalar disturbance with mean 0 and variance 1 (uniform germ).
inline PceSource unit_variance_disturbance() {
  Matrix coeffs(1, 2);
  coeffs << 0.0, std::sqrt(3.0);  // Var = 3 * ||P_1||^2 = 3 * (1/3) = 1
  return PceSource::create({GermSpec::uniform_legendre(2)}, coeffs);
}

}  // namespace pcelqr::testing
