#include "pcelqr/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <sstream>

namespace pcelqr {

namespace {

constexpr double kRiccatiTol = 1e-12;
constexpr int kRiccatiMaxIter = 100000;
constexpr double kLyapunovTol = 1e-14;
constexpr double kDefectiveCond = 1e12;

std::string shape(const Matrix& M) {
  std::ostringstream os;
  os << M.rows() << "x" << M.cols();
  return os.str();
}

Matrix symmetrized(const Matrix& M) { return 0.5 * (M + M.transpose()); }

/// One backward step of the coupled (P, G, S, K, F) recursion.
struct RiccatiStep {
  Matrix P, G, S, K, F, M;
};

RiccatiStep riccati_step(const LtiSystem& sys, const CostSpec& cost,
                         const Matrix& P_prev, const Matrix& G_prev,
                         const Matrix& S_prev) {
  const Matrix& A = sys.A;
  const Matrix& B = sys.B;
  const Matrix& E = sys.E;

  RiccatiStep out;
  out.M = symmetrized(cost.R + B.transpose() * P_prev * B);
  Eigen::LLT<Matrix> llt(out.M);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(
        "riccati: innovation matrix R + B'PB is not positive definite "
        "(check CostSpec.R)");
  }
  out.K = -llt.solve(B.transpose() * P_prev * A);
  const Matrix PE_G = P_prev * E + G_prev;
  out.F = -llt.solve(B.transpose() * PE_G);
  out.P = symmetrized(cost.Q + A.transpose() *
                                   (P_prev - P_prev * B * llt.solve(B.transpose() * P_prev)) * A);
  out.G = (A + B * out.K).transpose() * PE_G;
  out.S = symmetrized(S_prev + E.transpose() * G_prev + G_prev.transpose() * E +
                      E.transpose() * P_prev * E - out.F.transpose() * out.M * out.F);
  return out;
}

}  // namespace

LtiSystem LtiSystem::create(Matrix A, Matrix B, Matrix E) {
  if (A.rows() == 0 || A.rows() != A.cols()) {
    throw DimensionError("LtiSystem.A must be square and non-empty, got " + shape(A));
  }
  if (B.rows() != A.rows() || B.cols() == 0) {
    throw DimensionError("LtiSystem.B must be n_x x n_u, got " + shape(B) +
                         " with n_x=" + std::to_string(A.rows()));
  }
  if (E.rows() != A.rows() || E.cols() == 0) {
    throw DimensionError("LtiSystem.E must be n_x x n_w, got " + shape(E) +
                         " with n_x=" + std::to_string(A.rows()));
  }
  return LtiSystem{std::move(A), std::move(B), std::move(E)};
}

bool is_symmetric(const Matrix& M, double tol) {
  if (M.rows() != M.cols()) return false;
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  return (M - M.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

double min_symmetric_eigenvalue(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(M), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

CostSpec CostSpec::create(Matrix Q, Matrix Q_N, Matrix R) {
  if (Q.rows() != Q.cols() || Q_N.rows() != Q.rows() || Q_N.cols() != Q.cols()) {
    throw DimensionError("CostSpec.Q and Q_N must be square and equally sized, got " +
                         shape(Q) + " and " + shape(Q_N));
  }
  if (R.rows() != R.cols() || R.rows() == 0) {
    throw DimensionError("CostSpec.R must be square and non-empty, got " + shape(R));
  }
  if (!is_symmetric(Q, 1e-10)) throw ValidationError("CostSpec.Q is not symmetric");
  if (!is_symmetric(Q_N, 1e-10)) throw ValidationError("CostSpec.Q_N is not symmetric");
  if (!is_symmetric(R, 1e-10)) throw ValidationError("CostSpec.R is not symmetric");
  if (min_symmetric_eigenvalue(Q) < -1e-10) {
    throw ValidationError("CostSpec.Q is not positive semidefinite");
  }
  if (min_symmetric_eigenvalue(Q_N) < -1e-10) {
    throw ValidationError("CostSpec.Q_N is not positive semidefinite");
  }
  if (min_symmetric_eigenvalue(R) < 1e-12) {
    throw ValidationError("CostSpec.R is not positive definite");
  }
  return CostSpec{std::move(Q), std::move(Q_N), std::move(R)};
}

RiccatiLadder riccati_ladder(const LtiSystem& sys, const CostSpec& cost, int N) {
  if (N < 1) throw ValidationError("riccati_ladder: horizon N must be >= 1");
  if (cost.Q.rows() != sys.n_x()) {
    throw DimensionError("riccati_ladder: cost is " + shape(cost.Q) + " but n_x=" +
                         std::to_string(sys.n_x()));
  }
  if (cost.R.rows() != sys.n_u()) {
    throw DimensionError("riccati_ladder: R is " + shape(cost.R) + " but n_u=" +
                         std::to_string(sys.n_u()));
  }

  RiccatiLadder ladder;
  ladder.horizon = N;
  ladder.P.reserve(N + 1);
  ladder.P.push_back(symmetrized(cost.Q_N));
  ladder.G.push_back(Matrix::Zero(sys.n_x(), sys.n_w()));
  ladder.S.push_back(Matrix::Zero(sys.n_w(), sys.n_w()));
  ladder.K.push_back(Matrix());
  ladder.F.push_back(Matrix());

  for (int k = 1; k <= N; ++k) {
    RiccatiStep step = riccati_step(sys, cost, ladder.P[k - 1], ladder.G[k - 1], ladder.S[k - 1]);
    ladder.M.push_back(std::move(step.M));
    ladder.K.push_back(std::move(step.K));
    ladder.F.push_back(std::move(step.F));
    ladder.P.push_back(std::move(step.P));
    ladder.G.push_back(std::move(step.G));
    ladder.S.push_back(std::move(step.S));
  }
  return ladder;
}

StationaryGains stationary_gains(const LtiSystem& sys, const CostSpec& cost) {
  Matrix P = symmetrized(cost.Q_N);
  Matrix G0 = Matrix::Zero(sys.n_x(), sys.n_w());
  Matrix S0 = Matrix::Zero(sys.n_w(), sys.n_w());

  int iterations = 0;
  bool converged = false;
  for (; iterations < kRiccatiMaxIter; ++iterations) {
    RiccatiStep step = riccati_step(sys, cost, P, G0, S0);
    if (!step.P.allFinite()) {
      throw NumericalError(
          "stationary_gains: Riccati iteration diverged; (A,B) is likely not stabilizable");
    }
    const double change = (step.P - P).norm();
    P = std::move(step.P);
    if (change <= kRiccatiTol * std::max(1.0, P.norm())) {
      converged = true;
      ++iterations;
      break;
    }
  }
  if (!converged) {
    throw NumericalError(
        "stationary_gains: Riccati iteration did not converge within " +
        std::to_string(kRiccatiMaxIter) +
        " iterations; check stabilizability of (A,B) and detectability of (A,Q^1/2)");
  }

  StationaryGains g;
  g.sys = sys;
  g.R = cost.R;
  g.P = P;
  g.iterations = iterations;

  const Matrix M = symmetrized(cost.R + sys.B.transpose() * P * sys.B);
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("stationary_gains: stationary innovation matrix not positive definite");
  }
  g.K = -llt.solve(sys.B.transpose() * P * sys.A);
  g.A_cl = sys.A + sys.B * g.K;

  g.rho = spectral_radius(g.A_cl);
  if (!(g.rho < 1.0)) {
    throw NumericalError("stationary_gains: closed loop is not stable (rho = " +
                         std::to_string(g.rho) + ")");
  }

  // Fixed point of G = A_cl'(PE + G).
  const Matrix I = Matrix::Identity(sys.n_x(), sys.n_x());
  g.G = (I - g.A_cl.transpose()).partialPivLu().solve(g.A_cl.transpose() * P * sys.E);
  g.F = -llt.solve(sys.B.transpose() * (P * sys.E + g.G));
  g.F_cl = sys.B * g.F + sys.E;
  g.S_delta = symmetrized(sys.E.transpose() * g.G + g.G.transpose() * sys.E -
                          g.F.transpose() * M * g.F);

  try {
    g.eig_cond = eig_conditioning(g.A_cl).cond;
    g.defective = false;
  } catch (const NumericalError&) {
    g.eig_cond = std::numeric_limits<double>::infinity();
    g.defective = true;
  }
  return g;
}

Matrix solve_discrete_lyapunov(const Matrix& A_cl, const Matrix& Qc) {
  if (A_cl.rows() != A_cl.cols()) {
    throw DimensionError("solve_discrete_lyapunov: A_cl must be square, got " + shape(A_cl));
  }
  if (Qc.rows() != A_cl.rows() || Qc.cols() != A_cl.rows()) {
    throw DimensionError("solve_discrete_lyapunov: Qc must match A_cl, got " + shape(Qc));
  }
  if (!is_symmetric(Qc, 1e-10)) {
    throw ValidationError("solve_discrete_lyapunov: Qc is not symmetric");
  }
  const double rho = spectral_radius(A_cl);
  if (!(rho < 1.0)) {
    throw NumericalError("solve_discrete_lyapunov: rho(A_cl) = " + std::to_string(rho) +
                         " >= 1, no unique PSD solution");
  }

  // Doubling: after m rounds S = sum_{j<2^m} A^j Qc A^j'.
  Matrix S = symmetrized(Qc);
  Matrix Ak = A_cl;
  for (int m = 0; m < 200; ++m) {
    Matrix S_next = symmetrized(Ak * S * Ak.transpose() + S);
    Ak = Ak * Ak;
    const double change = (S_next - S).norm();
    S = std::move(S_next);
    if (change <= kLyapunovTol * std::max(1.0, S.norm())) return S;
  }
  throw NumericalError("solve_discrete_lyapunov: doubling iteration did not converge");
}

double spectral_radius(const Matrix& M) {
  if (M.rows() != M.cols()) {
    throw DimensionError("spectral_radius: matrix must be square, got " + shape(M));
  }
  if (M.rows() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(M, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw NumericalError("spectral_radius: eigenvalue iteration failed to converge");
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

EigConditioning eig_conditioning(const Matrix& M) {
  if (M.rows() != M.cols()) {
    throw DimensionError("eig_conditioning: matrix must be square, got " + shape(M));
  }
  Eigen::EigenSolver<Matrix> es(M, /*computeEigenvectors=*/true);
  if (es.info() != Eigen::Success) {
    throw NumericalError("eig_conditioning: eigenvalue iteration failed to converge");
  }
  const double rho = es.eigenvalues().cwiseAbs().maxCoeff();

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(es.eigenvectors());
  const double smax = svd.singularValues().maxCoeff();
  const double smin = svd.singularValues().minCoeff();
  const double cond = (smin > 0.0) ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(cond <= kDefectiveCond)) {
    throw NumericalError(
        "eig_conditioning: defective matrix, eigenvector matrix numerically singular "
        "(condition > 1e12)");
  }
  return EigConditioning{rho, cond};
}

double matrix_two_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(M.transpose() * M),
                                           Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

}  // namespace pcelqr
