#include "pcelqr/finite_horizon.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace pcelqr {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

PceRandomVector FiniteSolution::state_at(int k) const {
  return PceRandomVector{x_coeffs.at(k), basis.norms};
}

PceRandomVector FiniteSolution::input_at(int k) const {
  return PceRandomVector{u_coeffs.at(k), basis.norms};
}

FiniteSolution solve_finite(const StochasticScenario& scenario) {
  const int N = scenario.N;
  const LtiSystem& sys = scenario.sys;

  FiniteSolution sol;
  sol.scenario = scenario;
  sol.basis = scenario.joint_basis();
  sol.ladder = riccati_ladder(sys, scenario.cost, N);

  const JointBasis& basis = sol.basis;
  const Vector mean_w = scenario.mean_w();
  const int L = basis.L;

  sol.x_coeffs.assign(N + 1, Matrix::Zero(sys.n_x(), L));
  sol.u_coeffs.assign(N, Matrix::Zero(sys.n_u(), L));

  for (int s = 0; s < L; ++s) {
    const SlotInfo& info = basis.slots[s];
    Vector x = Vector::Zero(sys.n_x());
    if (info.kind == SlotKind::Constant) x = scenario.ini.coeffs.col(0);
    if (info.kind == SlotKind::InitialCondition) x = scenario.ini.coeffs.col(info.source_column);
    sol.x_coeffs[0].col(s) = x;

    for (int k = 0; k < N; ++k) {
      Vector u = sol.ladder.K[N - k] * x;
      if (info.kind == SlotKind::Constant) u += sol.ladder.F[N - k] * mean_w;
      sol.u_coeffs[k].col(s) = u;

      Vector x_next = sys.A * x + sys.B * u;
      if (info.kind == SlotKind::Constant) {
        x_next += sys.E * mean_w;
      } else if (info.kind == SlotKind::Disturbance && info.time == k) {
        x_next += sys.E * scenario.dist.coeffs.col(info.source_column);
      }
      sol.x_coeffs[k + 1].col(s) = x_next;
      x = std::move(x_next);
    }
  }

  // Per-slot minima in closed form.
  const Matrix& P_N = sol.ladder.P[N];
  const Matrix& G_N = sol.ladder.G[N];
  const Matrix& S_N = sol.ladder.S[N];
  const Vector mean_ini = scenario.ini.coeffs.col(0);
  sol.block_costs.resize(L);
  for (int s = 0; s < L; ++s) {
    const SlotInfo& info = basis.slots[s];
    switch (info.kind) {
      case SlotKind::Constant:
        sol.block_costs[s] = mean_ini.dot(P_N * mean_ini) + mean_w.dot(S_N * mean_w) +
                             2.0 * mean_w.dot(G_N.transpose() * mean_ini);
        break;
      case SlotKind::InitialCondition: {
        const Vector c = scenario.ini.coeffs.col(info.source_column);
        sol.block_costs[s] = c.dot(P_N * c);
        break;
      }
      case SlotKind::Disturbance: {
        const Vector w = scenario.dist.coeffs.col(info.source_column);
        const Vector Ew = sys.E * w;
        sol.block_costs[s] = Ew.dot(sol.ladder.P[N - info.time - 1] * Ew);
        break;
      }
    }
  }

  const Matrix cov_ini = scenario.ini.covariance();
  const Matrix E_cov_E = sys.E * scenario.cov_w() * sys.E.transpose();
  double dist_trace = 0.0;
  for (int j = 0; j < N; ++j) dist_trace += (sol.ladder.P[j] * E_cov_E).trace();
  sol.total_cost = mean_ini.dot(P_N * mean_ini) + (P_N * cov_ini).trace() +
                   2.0 * mean_w.dot(G_N.transpose() * mean_ini) + dist_trace +
                   mean_w.dot(S_N * mean_w);
  return sol;
}

Matrix abar_product(const LtiSystem& sys, const RiccatiLadder& ladder, int k1, int k2) {
  Matrix prod = Matrix::Identity(sys.n_x(), sys.n_x());
  if (k1 < 0 || k2 > ladder.horizon - 1) {
    throw DimensionError("abar_product: range [" + std::to_string(k1) + "," +
                         std::to_string(k2) + "] outside 0.." +
                         std::to_string(ladder.horizon - 1));
  }
  for (int k = k1; k <= k2; ++k) {
    prod = (sys.A + sys.B * ladder.K[ladder.horizon - k]) * prod;
  }
  return prod;
}

Vector closed_form_state_coeff(const FiniteSolution& sol, int slot, int k) {
  const JointBasis& basis = sol.basis;
  const LtiSystem& sys = sol.scenario.sys;
  const int N = sol.scenario.N;
  if (slot < 0 || slot >= basis.L) {
    throw DimensionError("closed_form_state_coeff: slot " + std::to_string(slot) +
                         " outside 0.." + std::to_string(basis.L - 1));
  }
  if (k < 0 || k > N) {
    throw DimensionError("closed_form_state_coeff: time step " + std::to_string(k) +
                         " outside 0.." + std::to_string(N));
  }

  const SlotInfo& info = basis.slots[slot];
  switch (info.kind) {
    case SlotKind::Constant: {
      Vector x = abar_product(sys, sol.ladder, 0, k - 1) * sol.scenario.ini.coeffs.col(0);
      const Vector mean_w = sol.scenario.mean_w();
      for (int i = 0; i < k; ++i) {
        const Matrix F_cl_i = sys.B * sol.ladder.F[N - i] + sys.E;
        x += abar_product(sys, sol.ladder, i + 1, k - 1) * F_cl_i * mean_w;
      }
      return x;
    }
    case SlotKind::InitialCondition:
      return abar_product(sys, sol.ladder, 0, k - 1) *
             sol.scenario.ini.coeffs.col(info.source_column);
    case SlotKind::Disturbance: {
      if (k <= info.time) return Vector::Zero(sys.n_x());
      return abar_product(sys, sol.ladder, info.time + 1, k - 1) * sys.E *
             sol.scenario.dist.coeffs.col(info.source_column);
    }
  }
  return Vector::Zero(sys.n_x());
}

TruncationReport truncation_error(const FiniteSolution& sol, int p) {
  const int N = sol.scenario.N;
  if (p < 0 || p > N) {
    throw DimensionError("truncation_error: window p must lie in 0.." + std::to_string(N));
  }
  const JointBasis& basis = sol.basis;
  const LtiSystem& sys = sol.scenario.sys;

  TruncationReport report;
  report.p = p;
  report.delta_coeffs.assign(N + 1, Matrix::Zero(sys.n_x(), basis.L));
  report.delta_norms = Vector::Zero(N + 1);

  for (int k = 0; k <= N; ++k) {
    double sq = 0.0;
    for (int j = 0; j <= k - p - 1; ++j) {
      const Matrix prop = abar_product(sys, sol.ladder, j + 1, k - 1) * sys.E;
      for (int n = 1; n < basis.L_w; ++n) {
        const int slot = basis.dist_slot(j, n);
        const Vector c = prop * sol.scenario.dist.coeffs.col(basis.slots[slot].source_column);
        report.delta_coeffs[k].col(slot) = c;
        sq += c.squaredNorm() * basis.norms[slot];
      }
    }
    report.delta_norms[k] = std::sqrt(sq);
  }
  return report;
}

CostDecomposition min_cost_decomposition(const FiniteSolution& sol) {
  const JointBasis& basis = sol.basis;
  CostDecomposition d;
  d.per_slot_weighted = sol.block_costs.cwiseProduct(basis.norms);
  for (int s = 0; s < basis.L; ++s) {
    switch (basis.slots[s].kind) {
      case SlotKind::Constant:
        d.constant_part += d.per_slot_weighted[s];
        break;
      case SlotKind::InitialCondition:
        d.ini_part += d.per_slot_weighted[s];
        break;
      case SlotKind::Disturbance:
        d.dist_part += d.per_slot_weighted[s];
        break;
    }
  }
  d.total = d.constant_part + d.ini_part + d.dist_part;
  return d;
}

void write_trajectory_csv(std::ostream& os, const FiniteSolution& sol) {
  const int N = sol.scenario.N;
  const Eigen::Index n_x = sol.scenario.sys.n_x();
  const Eigen::Index n_u = sol.scenario.sys.n_u();
  os << "k,slot,paper_index_j,component,x_coeff,u_coeff\n";
  for (int k = 0; k <= N; ++k) {
    for (int s = 0; s < sol.basis.L; ++s) {
      for (Eigen::Index c = 0; c < std::max(n_x, n_u); ++c) {
        os << k << ',' << s << ',' << sol.basis.paper_index(s) << ',' << c << ',';
        if (c < n_x) os << fmt17(sol.x_coeffs[k](c, s));
        os << ',';
        if (k < N && c < n_u) os << fmt17(sol.u_coeffs[k](c, s));
        os << '\n';
      }
    }
  }
}

}  // namespace pcelqr
