#include "pcelqr/stationary.hpp"

#include <cmath>
#include <limits>

namespace pcelqr {

namespace {

constexpr int kLyapunovSearchCap = 10000;

double sqrt_one_plus_gain(const StationaryGains& gains) {
  const double nk = matrix_two_norm(gains.K);
  return std::sqrt(1.0 + nk * nk);
}

void check_dist(const StationaryGains& gains, const PceSource& dist, const char* who) {
  if (dist.dim() != gains.sys.n_w()) {
    throw DimensionError(std::string(who) + ": disturbance has " + std::to_string(dist.dim()) +
                         " rows, n_w=" + std::to_string(gains.sys.n_w()));
  }
}

/// M(0) of the tail-weight family: solves A_cl' M A_cl - M + I = 0.
Matrix tail_weight_m0(const StationaryGains& gains) {
  const Eigen::Index n = gains.sys.n_x();
  return solve_discrete_lyapunov(gains.A_cl.transpose(), Matrix::Identity(n, n));
}

/// Quadratic form E[(E(W-E[W]))' M (E(W-E[W]))] = tr(E' M E Sigma[W]).
double tail_quadratic_form(const StationaryGains& gains, const PceSource& dist,
                           const Matrix& M) {
  const Matrix& E = gains.sys.E;
  return (E.transpose() * M * E * dist.covariance()).trace();
}

}  // namespace

double stationary_cost(const StationaryGains& gains, const PceSource& dist) {
  check_dist(gains, dist, "stationary_cost");
  const Matrix& E = gains.sys.E;
  const Matrix EPE = E.transpose() * gains.P * E;
  const Vector mean_w = dist.mean();
  return mean_w.dot(EPE * mean_w) + (EPE * dist.covariance()).trace() +
         mean_w.dot(gains.S_delta * mean_w);
}

double truncation_bound_closed_form(const StationaryGains& gains, const PceSource& dist,
                                    int p) {
  check_dist(gains, dist, "truncation_bound_closed_form");
  const Matrix& E = gains.sys.E;
  const double tail_power = (dist.covariance() * E.transpose() * E).trace();
  if (tail_power == 0.0) return 0.0;
  if (gains.defective) return std::numeric_limits<double>::infinity();
  return sqrt_one_plus_gain(gains) * gains.eig_cond * tail_power *
         std::pow(gains.rho, p) / (1.0 - gains.rho);
}

double truncation_bound_lyapunov(const StationaryGains& gains, const PceSource& dist, int p) {
  check_dist(gains, dist, "truncation_bound_lyapunov");
  if (p < 0) throw ValidationError("truncation_bound_lyapunov: p must be >= 0");
  Matrix M = tail_weight_m0(gains);
  for (int j = 0; j < p; ++j) M = gains.A_cl.transpose() * M * gains.A_cl;
  return sqrt_one_plus_gain(gains) * tail_quadratic_form(gains, dist, M);
}

int required_dim_closed_form(const StationaryGains& gains, const PceSource& dist,
                             double delta) {
  check_dist(gains, dist, "required_dim_closed_form");
  if (!(delta > 0.0)) throw ValidationError("required_dim_closed_form: delta must be > 0");
  const Matrix& E = gains.sys.E;
  const double tail_power = (dist.covariance() * E.transpose() * E).trace();
  if (tail_power == 0.0) return 0;  // deterministic disturbance, no stochastic tail
  if (gains.defective) {
    throw NumericalError(
        "required_dim_closed_form: closed loop is defective; use required_dim_lyapunov");
  }
  if (gains.rho == 0.0) return 0;  // dead-beat closure, tail vanishes immediately
  const double c = std::log(1.0 - gains.rho) -
                   std::log(sqrt_one_plus_gain(gains) * tail_power * gains.eig_cond);
  const double raw = (std::log(delta) + c) / std::log(gains.rho);
  return std::max(0, static_cast<int>(std::ceil(raw)));
}

int required_dim_lyapunov(const StationaryGains& gains, const PceSource& dist, double delta) {
  check_dist(gains, dist, "required_dim_lyapunov");
  if (!(delta > 0.0)) throw ValidationError("required_dim_lyapunov: delta must be > 0");
  const double scale = sqrt_one_plus_gain(gains);
  Matrix M = tail_weight_m0(gains);
  for (int p = 0; p <= kLyapunovSearchCap; ++p) {
    if (scale * tail_quadratic_form(gains, dist, M) <= delta) return p;
    M = gains.A_cl.transpose() * M * gains.A_cl;
  }
  throw NumericalError("required_dim_lyapunov: no p <= " +
                       std::to_string(kLyapunovSearchCap) + " satisfies the bound");
}

StationaryApprox build_truncated_stationary(const StationaryGains& gains,
                                            const PceSource& dist, int p) {
  check_dist(gains, dist, "build_truncated_stationary");
  if (p < 0) throw ValidationError("build_truncated_stationary: p must be >= 0");
  const LtiSystem& sys = gains.sys;
  const int L_w = static_cast<int>(dist.size());

  StationaryApprox approx;
  approx.p = p;
  if (p >= 1) {
    approx.basis = build_joint_basis(1, L_w, p);
    for (int s = 1; s < approx.basis.L; ++s) {
      approx.basis.norms[s] = dist.norm_sq(approx.basis.slots[s].source_column);
    }
  } else {
    approx.basis.N = 0;
    approx.basis.L_ini = 1;
    approx.basis.L_w = L_w;
    approx.basis.L = 1;
    approx.basis.norms = Vector::Ones(1);
    approx.basis.slots = {SlotInfo{SlotKind::Constant, 0, -1}};
  }

  const Matrix I = Matrix::Identity(sys.n_x(), sys.n_x());
  approx.mean_x = (I - gains.A_cl).partialPivLu().solve(gains.F_cl * dist.mean());
  approx.mean_u = gains.K * approx.mean_x + gains.F * dist.mean();

  approx.x_coeffs = Matrix::Zero(sys.n_x(), approx.basis.L);
  approx.u_coeffs = Matrix::Zero(sys.n_u(), approx.basis.L);
  approx.x_coeffs.col(0) = approx.mean_x;
  approx.u_coeffs.col(0) = approx.mean_u;

  Matrix AjE = sys.E;
  for (int j = 0; j < p; ++j) {
    for (int n = 1; n < L_w; ++n) {
      const int slot = approx.basis.dist_slot(j, n);
      approx.x_coeffs.col(slot) = AjE * dist.coeffs.col(n);
      approx.u_coeffs.col(slot) = gains.K * approx.x_coeffs.col(slot);
    }
    AjE = gains.A_cl * AjE;
  }

  approx.bound_closed_form = truncation_bound_closed_form(gains, dist, p);
  approx.bound_lyapunov = truncation_bound_lyapunov(gains, dist, p);
  approx.w2_bound = std::min(approx.bound_closed_form, approx.bound_lyapunov);
  return approx;
}

Matrix sample_truncated_stationary(const StationaryApprox& approx, const PceSource& dist,
                                   int count, std::uint64_t seed) {
  if (count < 1) throw ValidationError("sample_truncated_stationary: count must be >= 1");
  const Eigen::Index n_x = approx.x_coeffs.rows();
  const Eigen::Index n_u = approx.u_coeffs.rows();
  Matrix out(n_x + n_u, count);
  for (int i = 0; i < count; ++i) {
    Rng rng = stream_rng(seed, static_cast<std::uint64_t>(i));
    Vector x = approx.x_coeffs.col(0);
    Vector u = approx.u_coeffs.col(0);
    for (int j = 0; j < approx.p; ++j) {
      const Vector xi = dist.draw_germs(rng);
      for (int n = 1; n < approx.basis.L_w; ++n) {
        const auto [g, d] = dist.column_basis(n);
        const double phi = dist.germs[g].evaluate(d, xi[g]);
        const int slot = approx.basis.dist_slot(j, n);
        x += approx.x_coeffs.col(slot) * phi;
        u += approx.u_coeffs.col(slot) * phi;
      }
    }
    out.col(i).head(n_x) = x;
    out.col(i).tail(n_u) = u;
  }
  return out;
}

}  // namespace pcelqr
