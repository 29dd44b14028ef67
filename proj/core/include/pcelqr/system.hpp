#pragma once

#include <Eigen/Dense>

#include "pcelqr/errors.hpp"

namespace pcelqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Discrete-time LTI plant  x+ = A x + B u + E w.
struct LtiSystem {
  Matrix A;  // n_x x n_x
  Matrix B;  // n_x x n_u
  Matrix E;  // n_x x n_w

  Eigen::Index n_x() const { return A.rows(); }
  Eigen::Index n_u() const { return B.cols(); }
  Eigen::Index n_w() const { return E.cols(); }

  /// Validates shape consistency. Stabilizability/detectability are checked
  /// at solve time through convergence of the Riccati iteration.
  static LtiSystem create(Matrix A, Matrix B, Matrix E);
};

/// Quadratic weights of the stage cost x'Qx + u'Ru and terminal cost x'Q_N x.
struct CostSpec {
  Matrix Q;    // n_x x n_x, symmetric PSD
  Matrix Q_N;  // n_x x n_x, symmetric PSD
  Matrix R;    // n_u x n_u, symmetric PD

  /// Validates symmetry and eigenvalue floors (PSD to -1e-10, PD to 1e-12).
  static CostSpec create(Matrix Q, Matrix Q_N, Matrix R);
};

/// Smallest eigenvalue of a symmetric matrix (symmetrized before solving).
double min_symmetric_eigenvalue(const Matrix& M);

/// True when ||M - M'||_inf <= tol * max(1, ||M||_inf).
bool is_symmetric(const Matrix& M, double tol = 1e-12);

}  // namespace pcelqr
