#include "pcelqr/mc_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <vector>

namespace pcelqr {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Pairwise (cascade) summation over [lo, hi); order-independent rounding
/// to well below 1e-12 relative for the batch sizes used here.
double pairwise_sum(int lo, int hi, const std::function<double(int)>& term) {
  if (hi - lo <= 8) {
    double s = 0.0;
    for (int i = lo; i < hi; ++i) s += term(i);
    return s;
  }
  const int mid = lo + (hi - lo) / 2;
  return pairwise_sum(lo, mid, term) + pairwise_sum(mid, hi, term);
}

Vector pairwise_row_mean(const Matrix& rows) {
  const int n = static_cast<int>(rows.rows());
  Vector mean(rows.cols());
  for (Eigen::Index c = 0; c < rows.cols(); ++c) {
    mean[c] = pairwise_sum(0, n, [&](int i) { return rows(i, c); }) / n;
  }
  return mean;
}

Matrix pairwise_row_covariance(const Matrix& rows, const Vector& mean) {
  const int n = static_cast<int>(rows.rows());
  Matrix cov(rows.cols(), rows.cols());
  for (Eigen::Index a = 0; a < rows.cols(); ++a) {
    for (Eigen::Index b = a; b < rows.cols(); ++b) {
      const double s = pairwise_sum(
          0, n, [&](int i) { return (rows(i, a) - mean[a]) * (rows(i, b) - mean[b]); });
      cov(a, b) = cov(b, a) = (n > 1) ? s / (n - 1) : 0.0;
    }
  }
  return cov;
}

void summarize(SimulationBatch& batch, const Matrix& Q, const Matrix& R, const Matrix* Q_N) {
  const int n = batch.count;
  batch.mean_x.clear();
  batch.cov_x.clear();
  for (const Matrix& Xk : batch.X) {
    Vector m = pairwise_row_mean(Xk);
    batch.cov_x.push_back(pairwise_row_covariance(Xk, m));
    batch.mean_x.push_back(std::move(m));
  }
  batch.costs.resize(n);
  for (int i = 0; i < n; ++i) {
    double c = 0.0;
    for (int k = 0; k < batch.steps; ++k) {
      const Vector x = batch.X[k].row(i).transpose();
      const Vector u = batch.U[k].row(i).transpose();
      c += x.dot(Q * x) + u.dot(R * u);
    }
    if (Q_N != nullptr) {
      const Vector xN = batch.X[batch.steps].row(i).transpose();
      c += xN.dot(*Q_N * xN);
    }
    batch.costs[i] = c;
  }
  batch.avg_cost = pairwise_sum(0, n, [&](int i) { return batch.costs[i]; }) / n;
  const double var =
      (n > 1)
          ? pairwise_sum(0, n, [&](int i) { return std::pow(batch.costs[i] - batch.avg_cost, 2); }) /
                (n - 1)
          : 0.0;
  batch.cost_stderr = std::sqrt(var / n);
}

}  // namespace

SimulationBatch simulate_closed_loop(const StochasticScenario& scenario,
                                     const RiccatiLadder& ladder, int count,
                                     std::uint64_t seed) {
  if (count < 1) throw ValidationError("simulate_closed_loop: count must be >= 1");
  if (ladder.horizon != scenario.N) {
    throw DimensionError("simulate_closed_loop: ladder horizon " +
                         std::to_string(ladder.horizon) + " does not match scenario N=" +
                         std::to_string(scenario.N));
  }
  const LtiSystem& sys = scenario.sys;
  const int N = scenario.N;
  const Vector mean_w = scenario.mean_w();

  SimulationBatch batch;
  batch.count = count;
  batch.seed = seed;
  batch.steps = N;
  batch.X.assign(N + 1, Matrix(count, sys.n_x()));
  batch.U.assign(N, Matrix(count, sys.n_u()));

  for (int i = 0; i < count; ++i) {
    Rng rng = stream_rng(seed, static_cast<std::uint64_t>(i));
    Vector x = scenario.ini.realize(rng);
    batch.X[0].row(i) = x.transpose();
    for (int k = 0; k < N; ++k) {
      const Vector u = ladder.K[N - k] * x + ladder.F[N - k] * mean_w;
      const Vector w = scenario.dist.realize(rng);
      batch.U[k].row(i) = u.transpose();
      x = sys.A * x + sys.B * u + sys.E * w;
      batch.X[k + 1].row(i) = x.transpose();
    }
  }
  summarize(batch, scenario.cost.Q, scenario.cost.R, &scenario.cost.Q_N);
  return batch;
}

SimulationBatch simulate_closed_loop_stationary(const StochasticScenario& scenario,
                                                const StationaryGains& gains, int steps,
                                                int count, std::uint64_t seed) {
  if (count < 1) throw ValidationError("simulate_closed_loop_stationary: count must be >= 1");
  if (steps < 1) throw ValidationError("simulate_closed_loop_stationary: steps must be >= 1");
  const LtiSystem& sys = scenario.sys;
  const Vector mean_w = scenario.mean_w();

  SimulationBatch batch;
  batch.count = count;
  batch.seed = seed;
  batch.steps = steps;
  batch.X.assign(steps + 1, Matrix(count, sys.n_x()));
  batch.U.assign(steps, Matrix(count, sys.n_u()));

  for (int i = 0; i < count; ++i) {
    Rng rng = stream_rng(seed, static_cast<std::uint64_t>(i));
    Vector x = scenario.ini.realize(rng);
    batch.X[0].row(i) = x.transpose();
    for (int k = 0; k < steps; ++k) {
      const Vector u = gains.K * x + gains.F * mean_w;
      const Vector w = scenario.dist.realize(rng);
      batch.U[k].row(i) = u.transpose();
      x = sys.A * x + sys.B * u + sys.E * w;
      batch.X[k + 1].row(i) = x.transpose();
    }
  }
  summarize(batch, scenario.cost.Q, scenario.cost.R, nullptr);
  return batch;
}

CoupledBatch simulate_coupled_stationary(const StochasticScenario& scenario,
                                         const StationaryPairRep& rep, int p_ref, int steps,
                                         int count, std::uint64_t seed) {
  if (count < 1) throw ValidationError("simulate_coupled_stationary: count must be >= 1");
  if (p_ref < 0) throw ValidationError("simulate_coupled_stationary: p_ref must be >= 0");
  const LtiSystem& sys = scenario.sys;
  const StationaryGains& gains = rep.gains;
  const Vector mean_w = scenario.mean_w();

  // Tail propagators A_cl^j E for the stationary initial state.
  std::vector<Matrix> tail(p_ref);
  Matrix AjE = sys.E;
  for (int j = 0; j < p_ref; ++j) {
    tail[j] = AjE;
    AjE = gains.A_cl * AjE;
  }

  CoupledBatch out;
  out.count = count;
  out.steps = steps;
  out.gap_l2 = Vector::Zero(steps + 1);
  out.max_coupling_defect = Vector::Zero(steps);

  Matrix gap_sq_sum = Matrix::Zero(steps + 1, 1);
  for (int i = 0; i < count; ++i) {
    Rng rng = stream_rng(seed, static_cast<std::uint64_t>(i));
    Vector x = scenario.ini.realize(rng);
    Vector xbar = rep.mean_x;
    for (int j = 0; j < p_ref; ++j) {
      xbar += tail[j] * (scenario.dist.realize(rng) - mean_w);
    }
    for (int k = 0; k <= steps; ++k) {
      const Vector du = gains.K * (x - xbar);
      gap_sq_sum(k, 0) += (x - xbar).squaredNorm() + du.squaredNorm();
      if (k == steps) break;
      const Vector w = scenario.dist.realize(rng);
      const Vector d_next_pred = gains.A_cl * (x - xbar);
      const Vector u = gains.K * x + gains.F * mean_w;
      const Vector ubar = gains.K * xbar + gains.F * mean_w;
      x = sys.A * x + sys.B * u + sys.E * w;
      xbar = sys.A * xbar + sys.B * ubar + sys.E * w;
      out.max_coupling_defect[k] = std::max(
          out.max_coupling_defect[k], (x - xbar - d_next_pred).cwiseAbs().maxCoeff());
    }
  }
  for (int k = 0; k <= steps; ++k) out.gap_l2[k] = std::sqrt(gap_sq_sum(k, 0) / count);

  // Analytic ||X_0 - Xbar_0|| from moments; the two starts are independent.
  const Vector mean_ini = scenario.ini.mean();
  Matrix cov_ref = Matrix::Zero(sys.n_x(), sys.n_x());
  const Matrix cov_w = scenario.dist.covariance();
  for (int j = 0; j < p_ref; ++j) {
    cov_ref += tail[j] * cov_w * tail[j].transpose();
  }
  const double e_sq = mean_ini.squaredNorm() + scenario.ini.covariance().trace() -
                      2.0 * mean_ini.dot(rep.mean_x) + rep.mean_x.squaredNorm() +
                      cov_ref.trace();
  out.x0_offset_norm = std::sqrt(std::max(0.0, e_sq));
  return out;
}

double empirical_w2_1d(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ValidationError("empirical_w2_1d: empty input");
  if (a.size() != b.size()) {
    throw DimensionError("empirical_w2_1d: sample arrays differ in length (" +
                         std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const int n = static_cast<int>(sa.size());
  const double mean_sq =
      pairwise_sum(0, n, [&](int i) { return std::pow(sa[i] - sb[i], 2); }) / n;
  return std::sqrt(mean_sq);
}

Histogram emit_histogram(std::span<const double> samples, int bins) {
  if (samples.empty()) throw ValidationError("emit_histogram: empty input");
  if (bins < 2) throw ValidationError("emit_histogram: bins must be >= 2");
  const auto [mn_it, mx_it] = std::minmax_element(samples.begin(), samples.end());
  const double mn = *mn_it, mx = *mx_it;

  Histogram h;
  if (mn == mx) {  // degenerate range: all mass in one bin
    h.edges = Vector(2);
    h.edges << mn, mx;
    h.mass = Vector::Ones(1);
    return h;
  }
  h.edges = Vector::LinSpaced(bins + 1, mn, mx);
  h.mass = Vector::Zero(bins);
  const double width = (mx - mn) / bins;
  for (double v : samples) {
    int idx = static_cast<int>((v - mn) / width);
    idx = std::clamp(idx, 0, bins - 1);
    h.mass[idx] += 1.0;
  }
  h.mass /= static_cast<double>(samples.size());
  return h;
}

void write_paths_csv(std::ostream& os, const SimulationBatch& batch) {
  const Eigen::Index n_x = batch.X.empty() ? 0 : batch.X[0].cols();
  const Eigen::Index n_u = batch.U.empty() ? 0 : batch.U[0].cols();
  os << "sample_id,k";
  for (Eigen::Index c = 0; c < n_x; ++c) os << ",x_" << (c + 1);
  for (Eigen::Index c = 0; c < n_u; ++c) os << ",u_" << (c + 1);
  os << '\n';
  for (int i = 0; i < batch.count; ++i) {
    for (int k = 0; k <= batch.steps; ++k) {
      os << i << ',' << k;
      for (Eigen::Index c = 0; c < n_x; ++c) os << ',' << fmt17(batch.X[k](i, c));
      for (Eigen::Index c = 0; c < n_u; ++c) {
        os << ',';
        if (k < batch.steps) os << fmt17(batch.U[k](i, c));
      }
      os << '\n';
    }
  }
}

}  // namespace pcelqr
