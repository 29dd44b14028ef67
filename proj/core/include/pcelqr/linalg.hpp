#pragma once

#include <vector>

#include "pcelqr/system.hpp"

namespace pcelqr {

/// Backward value recursion for the affine LQ problem, indexed by
/// iteration count: P[0] = Q_N holds the terminal weight and P[N] the
/// value after N steps. K and F are valid for indices 1..N (entry 0 is
/// kept empty so that indices match the recursion literally); the feedback
/// applied at time step t of an N-step problem is u_t = K[N-t] x_t + F[N-t] c.
struct RiccatiLadder {
  int horizon = 0;
  std::vector<Matrix> P;  // 0..N, n_x x n_x
  std::vector<Matrix> G;  // 0..N, n_x x n_w
  std::vector<Matrix> S;  // 0..N, n_w x n_w
  std::vector<Matrix> K;  // 1..N, n_u x n_x  ([0] empty)
  std::vector<Matrix> F;  // 1..N, n_u x n_w  ([0] empty)
  std::vector<Matrix> M;  // 0..N-1, innovation R + B' P_k B
};

/// Stationary (infinite-horizon) solution of the same recursions.
struct StationaryGains {
  LtiSystem sys;
  Matrix P;        // fixed point of the Riccati recursion
  Matrix G;        // fixed point of the affine cross-term recursion
  Matrix S_delta;  // E'G + G'E - F'(R + B'PB)F
  Matrix K;        // n_u x n_x
  Matrix F;        // n_u x n_w
  Matrix A_cl;     // A + BK
  Matrix F_cl;     // BF + E
  Matrix R;        // copy of the input weight, needed by cost formulas
  double rho = 0.0;       // spectral radius of A_cl, < 1
  double eig_cond = 1.0;  // ||V|| ||V^-1|| of the eigenvector matrix; +inf if defective
  bool defective = false;
  int iterations = 0;
};

struct EigConditioning {
  double rho;   // spectral radius
  double cond;  // ||V||_2 ||V^-1||_2, >= 1
};

/// Runs the backward recursion for N steps starting from P_0 = Q_N,
/// G_0 = 0, S_0 = 0. Throws NumericalError if an innovation matrix
/// R + B'P B stops being positive definite.
RiccatiLadder riccati_ladder(const LtiSystem& sys, const CostSpec& cost, int N);

/// Iterates the Riccati recursion to its fixed point (relative Frobenius
/// change < 1e-12, at most 1e5 iterations) and derives the stationary
/// gains. Throws NumericalError when the iteration does not converge or
/// the resulting closed loop is not stable. A defective closed-loop matrix
/// is flagged (eig_cond = +inf), not thrown.
StationaryGains stationary_gains(const LtiSystem& sys, const CostSpec& cost);

/// Unique PSD solution of  A_cl S A_cl' - S + Qc = 0  for rho(A_cl) < 1,
/// via the doubling iteration S <- A S A' + S, A <- A^2.
Matrix solve_discrete_lyapunov(const Matrix& A_cl, const Matrix& Qc);

/// max |lambda_i| over all (possibly complex) eigenvalues.
double spectral_radius(const Matrix& M);

/// Spectral radius together with the eigenvector conditioning
/// ||V||_2 ||V^-1||_2. Throws NumericalError("defective ...") when the
/// eigenvector matrix is numerically singular (condition > 1e12).
EigConditioning eig_conditioning(const Matrix& M);

/// sqrt of the largest eigenvalue of M'M.
double matrix_two_norm(const Matrix& M);

}  // namespace pcelqr
