#include "pcelqr/infinite_horizon.hpp"

#include <cmath>

#include "pcelqr/stationary.hpp"

namespace pcelqr {

StationaryGains infinite_gains(const LtiSystem& sys, const CostSpec& cost) {
  return stationary_gains(sys, cost);
}

StationaryPairRep stationary_pair(const LtiSystem& sys, const CostSpec& cost,
                                  const PceSource& dist, int p_max) {
  if (dist.dim() != sys.n_w()) {
    throw DimensionError("stationary_pair: disturbance has " + std::to_string(dist.dim()) +
                         " rows, n_w=" + std::to_string(sys.n_w()));
  }
  StationaryPairRep rep;
  rep.gains = stationary_gains(sys, cost);

  const Matrix I = Matrix::Identity(sys.n_x(), sys.n_x());
  rep.mean_x = (I - rep.gains.A_cl).partialPivLu().solve(rep.gains.F_cl * dist.mean());
  rep.mean_u = rep.gains.K * rep.mean_x + rep.gains.F * dist.mean();
  rep.cov_x = solve_discrete_lyapunov(rep.gains.A_cl,
                                      sys.E * dist.covariance() * sys.E.transpose());
  rep.cov_u = rep.gains.K * rep.cov_x * rep.gains.K.transpose();

  if (p_max < 0) p_max = required_dim_lyapunov(rep.gains, dist, 1e-8);
  rep.tail_gen.reserve(p_max + 1);
  Matrix T = sys.E;
  for (int j = 0; j <= p_max; ++j) {
    rep.tail_gen.push_back(T);
    T = rep.gains.A_cl * T;
  }
  return rep;
}

double stationarity_residual(const StationaryPairRep& rep, const PceSource& dist) {
  const LtiSystem& sys = rep.gains.sys;
  const Vector mean_res = rep.mean_x - (sys.A * rep.mean_x + sys.B * rep.mean_u +
                                        sys.E * dist.mean());
  const Matrix cov_res = rep.gains.A_cl * rep.cov_x * rep.gains.A_cl.transpose() +
                         sys.E * dist.covariance() * sys.E.transpose() - rep.cov_x;
  return mean_res.norm() + cov_res.norm();
}

ConvergenceCertificate convergence_certificate(const LtiSystem& sys, const CostSpec& cost,
                                               double x0_offset_norm) {
  if (x0_offset_norm < 0.0) {
    throw ValidationError("convergence_certificate: x0_offset_norm must be >= 0");
  }
  const StationaryGains gains = stationary_gains(sys, cost);
  if (gains.defective) {
    throw NumericalError(
        "convergence_certificate: closed loop is defective, eigenvector conditioning "
        "unavailable");
  }
  ConvergenceCertificate cert;
  cert.rate = gains.rho;
  cert.beta = std::sqrt(1.0 + std::pow(matrix_two_norm(gains.K), 2)) * gains.eig_cond *
              x0_offset_norm;
  return cert;
}

}  // namespace pcelqr
