// Scenario-driven command line front end. Subcommands map onto the library
// modules; every run writes its outputs plus a manifest.json recording the
// inputs, seed, version, and output checksums.
#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pcelqr/finite_horizon.hpp"
#include "pcelqr/infinite_horizon.hpp"
#include "pcelqr/mc_oracle.hpp"
#include "pcelqr/scenario_io.hpp"
#include "pcelqr/stationary.hpp"
#include "pcelqr/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pcelqr;

namespace {

constexpr int kExitParse = 2;
constexpr int kExitValidation = 3;
constexpr int kExitNumerical = 4;

struct RunConfig {
  std::string scenario_path;
  std::string out_dir = "out";
  bool force = false;
  bool verbose = false;
  std::uint64_t seed = 0;
  int samples = 100000;
  int N_override = -1;
  int p_max = -1;
  std::vector<double> deltas;
  std::vector<int> p_list;
};

std::string fnv1a64_hex(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

/// Writes every output through one place so the manifest stays complete and
/// the overwrite guard is uniform.
class OutputWriter {
 public:
  OutputWriter(const RunConfig& cfg, std::string command)
      : cfg_(cfg), command_(std::move(command)) {
    fs::create_directories(cfg_.out_dir);
  }

  void write(const std::string& name, const std::string& content) {
    const fs::path path = fs::path(cfg_.out_dir) / name;
    if (fs::exists(path) && !cfg_.force) {
      throw ValidationError("output file exists, pass --force to overwrite: " + path.string());
    }
    std::ofstream out(path, std::ios::binary);
    out << content;
    checksums_[name] = fnv1a64_hex(content);
    if (cfg_.verbose) std::cout << "wrote " << path.string() << "\n";
  }

  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  void finalize() {
    json manifest;
    manifest["command"] = command_;
    manifest["version"] = kVersion;
    manifest["scenario"]["path"] = cfg_.scenario_path;
    manifest["scenario"]["fnv1a64"] = fnv1a64_hex(read_file(cfg_.scenario_path));
    manifest["seed"] = cfg_.seed;
    manifest["samples"] = cfg_.samples;
    json outs;
    for (const auto& [name, sum] : checksums_) outs[name] = sum;
    manifest["outputs"] = outs;
    const fs::path path = fs::path(cfg_.out_dir) / "manifest.json";
    if (fs::exists(path) && !cfg_.force) {
      throw ValidationError("output file exists, pass --force to overwrite: " + path.string());
    }
    std::ofstream out(path, std::ios::binary);
    out << manifest.dump(2) << "\n";
    std::cout << "outputs in " << cfg_.out_dir << " (" << checksums_.size() + 1 << " files)\n";
  }

 private:
  const RunConfig& cfg_;
  std::string command_;
  std::map<std::string, std::string> checksums_;
};

StochasticScenario load(const RunConfig& cfg) {
  StochasticScenario s = load_scenario(cfg.scenario_path);
  if (cfg.N_override > 0 && cfg.N_override != s.N) {
    s = StochasticScenario::create(s.sys, s.cost, s.ini, s.dist, cfg.N_override, s.name);
  }
  if (cfg.verbose) {
    std::cout << "scenario '" << s.name << "': n_x=" << s.sys.n_x() << " n_u=" << s.sys.n_u()
              << " n_w=" << s.sys.n_w() << " N=" << s.N << " L=" << s.joint_basis().L << "\n";
  }
  return s;
}

json gains_json(const StationaryGains& g) {
  json j;
  j["K"] = matrix_json(g.K);
  j["F"] = matrix_json(g.F);
  j["P"] = matrix_json(g.P);
  j["G"] = matrix_json(g.G);
  j["S_delta"] = matrix_json(g.S_delta);
  j["A_cl"] = matrix_json(g.A_cl);
  j["F_cl"] = matrix_json(g.F_cl);
  j["rho"] = g.rho;
  j["eig_cond"] = g.defective ? json("defective") : json(g.eig_cond);
  j["iterations"] = g.iterations;
  return j;
}

int cmd_solve_finite(const RunConfig& cfg) {
  const auto scenario = load(cfg);
  const auto sol = solve_finite(scenario);
  OutputWriter out(cfg, "solve-finite");

  std::ostringstream csv;
  write_trajectory_csv(csv, sol);
  out.write("trajectory.csv", csv.str());

  json summary;
  summary["total_cost"] = sol.total_cost;
  const auto decomp = min_cost_decomposition(sol);
  summary["cost"]["constant_part"] = decomp.constant_part;
  summary["cost"]["ini_part"] = decomp.ini_part;
  summary["cost"]["dist_part"] = decomp.dist_part;
  json blocks = json::array();
  for (int s = 0; s < sol.basis.L; ++s) {
    blocks.push_back({{"slot", s},
                      {"paper_index_j", sol.basis.paper_index(s)},
                      {"block_cost", sol.block_costs[s]},
                      {"norm_sq", sol.basis.norms[s]}});
  }
  summary["block_costs"] = blocks;
  json gains = json::array();
  for (int k = 1; k <= sol.ladder.horizon; ++k) {
    gains.push_back({{"k", k}, {"K", matrix_json(sol.ladder.K[k])}, {"F", matrix_json(sol.ladder.F[k])}});
  }
  summary["gain_sequence"] = gains;
  out.write_json("summary.json", summary);
  out.finalize();
  return 0;
}

int cmd_solve_infinite(const RunConfig& cfg) {
  const auto scenario = load(cfg);
  const auto rep = stationary_pair(scenario.sys, scenario.cost, scenario.dist, cfg.p_max);

  // Certificate for the scenario's own initial condition against a
  // stationary start drawn from a deep tail truncation.
  const int p_ref = required_dim_lyapunov(rep.gains, scenario.dist, 1e-9);
  Matrix cov_ref = Matrix::Zero(scenario.sys.n_x(), scenario.sys.n_x());
  {
    Matrix AjE = scenario.sys.E;
    const Matrix cov_w = scenario.dist.covariance();
    for (int j = 0; j < p_ref; ++j) {
      cov_ref += AjE * cov_w * AjE.transpose();
      AjE = rep.gains.A_cl * AjE;
    }
  }
  const Vector mean_ini = scenario.ini.mean();
  const double offset_sq = mean_ini.squaredNorm() + scenario.ini.covariance().trace() -
                           2.0 * mean_ini.dot(rep.mean_x) + rep.mean_x.squaredNorm() +
                           cov_ref.trace();
  json j;
  j["gains"] = gains_json(rep.gains);
  j["stationary_moments"]["mean_x"] = vector_json(rep.mean_x);
  j["stationary_moments"]["mean_u"] = vector_json(rep.mean_u);
  j["stationary_moments"]["cov_x"] = matrix_json(rep.cov_x);
  j["stationary_moments"]["cov_u"] = matrix_json(rep.cov_u);
  j["stationarity_residual"] = stationarity_residual(rep, scenario.dist);
  j["tail_generator_length"] = rep.tail_gen.size();
  if (!rep.gains.defective) {
    const auto cert = convergence_certificate(scenario.sys, scenario.cost,
                                              std::sqrt(std::max(0.0, offset_sq)));
    j["certificate"]["beta"] = cert.beta;
    j["certificate"]["rate"] = cert.rate;
    j["certificate"]["x0_offset_norm"] = std::sqrt(std::max(0.0, offset_sq));
  } else {
    j["certificate"] = "unavailable: defective closed loop";
  }

  OutputWriter out(cfg, "solve-infinite");
  out.write_json("infinite.json", j);
  out.finalize();
  return 0;
}

int cmd_stationary(const RunConfig& cfg) {
  const auto scenario = load(cfg);
  const auto gains = stationary_gains(scenario.sys, scenario.cost);
  const auto rep = stationary_pair(scenario.sys, scenario.cost, scenario.dist, cfg.p_max);

  json j;
  j["cost"] = stationary_cost(gains, scenario.dist);
  j["gains"] = gains_json(gains);
  j["moments"]["mean_x"] = vector_json(rep.mean_x);
  j["moments"]["mean_u"] = vector_json(rep.mean_u);
  j["moments"]["cov_x"] = matrix_json(rep.cov_x);
  j["moments"]["cov_u"] = matrix_json(rep.cov_u);
  j["stationarity_residual"] = stationarity_residual(rep, scenario.dist);

  json approxes = json::array();
  for (const int p : cfg.p_list) {
    const auto a = build_truncated_stationary(gains, scenario.dist, p);
    json ja;
    ja["p"] = p;
    ja["basis_size"] = a.basis.L;
    ja["mean_x"] = vector_json(a.mean_x);
    ja["mean_u"] = vector_json(a.mean_u);
    ja["x_coeffs"] = matrix_json(a.x_coeffs);
    ja["u_coeffs"] = matrix_json(a.u_coeffs);
    ja["bound_closed_form"] = a.bound_closed_form;
    ja["bound_lyapunov"] = a.bound_lyapunov;
    ja["w2_bound"] = a.w2_bound;
    approxes.push_back(ja);
  }
  j["approximations"] = approxes;

  OutputWriter out(cfg, "stationary");
  out.write_json("stationary.json", j);
  out.finalize();
  return 0;
}

int cmd_approx_dim(const RunConfig& cfg) {
  const auto scenario = load(cfg);
  const auto gains = stationary_gains(scenario.sys, scenario.cost);
  json reports = json::array();
  for (const double delta : cfg.deltas) {
    json r;
    r["delta"] = delta;
    const int p_bar = required_dim_lyapunov(gains, scenario.dist, delta);
    r["p_bar"] = p_bar;
    if (gains.defective) {
      r["p_tilde"] = "unavailable: defective closed loop";
    } else {
      r["p_tilde"] = required_dim_closed_form(gains, scenario.dist, delta);
    }
    r["bound_closed_form"] = truncation_bound_closed_form(gains, scenario.dist, p_bar);
    r["bound_lyapunov"] = truncation_bound_lyapunov(gains, scenario.dist, p_bar);
    const auto a = build_truncated_stationary(gains, scenario.dist, p_bar);
    Matrix cov = Matrix::Zero(scenario.sys.n_x(), scenario.sys.n_x());
    for (int s = 1; s < a.basis.L; ++s) {
      cov += a.x_coeffs.col(s) * a.x_coeffs.col(s).transpose() * a.basis.norms[s];
    }
    r["approx_moments"]["mean_x"] = vector_json(a.mean_x);
    r["approx_moments"]["mean_u"] = vector_json(a.mean_u);
    r["approx_moments"]["cov_x"] = matrix_json(cov);
    reports.push_back(r);
    std::cout << "delta " << delta << ": p_tilde "
              << (gains.defective ? std::string("n/a")
                                  : std::to_string(required_dim_closed_form(gains, scenario.dist, delta)))
              << ", p_bar " << p_bar << "\n";
  }
  OutputWriter out(cfg, "approx-dim");
  out.write_json("approx_dim.json", reports);
  out.finalize();
  return 0;
}

int cmd_truncation(const RunConfig& cfg) {
  const auto scenario = load(cfg);
  const auto sol = solve_finite(scenario);
  OutputWriter out(cfg, "truncation");

  std::ostringstream norms_csv;
  norms_csv << "p,k,delta_norm\n";
  std::ostringstream coeff_csv;
  coeff_csv << "p,k,slot,paper_index_j,component,delta_coeff\n";
  char buf[40];
  for (const int p : cfg.p_list) {
    const auto report = truncation_error(sol, p);
    for (int k = 0; k <= scenario.N; ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", report.delta_norms[k]);
      norms_csv << p << ',' << k << ',' << buf << '\n';
      for (int s = 0; s < sol.basis.L; ++s) {
        if (report.delta_coeffs[k].col(s).cwiseAbs().maxCoeff() == 0.0) continue;
        for (Eigen::Index c = 0; c < scenario.sys.n_x(); ++c) {
          std::snprintf(buf, sizeof(buf), "%.17g", report.delta_coeffs[k](c, s));
          coeff_csv << p << ',' << k << ',' << s << ',' << sol.basis.paper_index(s) << ','
                    << c << ',' << buf << '\n';
        }
      }
    }
  }
  out.write("truncation_norms.csv", norms_csv.str());
  out.write("truncation_coeffs.csv", coeff_csv.str());
  out.finalize();
  return 0;
}

int cmd_validate(const RunConfig& cfg) {
  const auto scenario = load(cfg);
  std::vector<std::pair<std::string, bool>> checks;
  json details = json::array();
  auto record = [&](const std::string& name, bool ok, const std::string& detail) {
    checks.emplace_back(name, ok);
    details.push_back({{"check", name}, {"pass", ok}, {"detail", detail}});
    std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
  };
  char buf[64];
  auto fmtv = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return std::string(buf);
  };

  const auto sol = solve_finite(scenario);
  const auto gains = stationary_gains(scenario.sys, scenario.cost);
  const auto rep = stationary_pair(scenario.sys, scenario.cost, scenario.dist);
  const int N = scenario.N;

  {
    double worst = 0.0;
    for (const Matrix& P : sol.ladder.P) {
      worst = std::max(worst, (P - P.transpose()).cwiseAbs().maxCoeff());
      worst = std::max(worst, std::max(0.0, -min_symmetric_eigenvalue(P)));
    }
    record("riccati_psd", worst <= 1e-10, "worst symmetry/eigenvalue defect " + fmtv(worst));
  }
  {
    const Matrix M = scenario.cost.R + scenario.sys.B.transpose() * gains.P * scenario.sys.B;
    const Matrix next =
        scenario.cost.Q +
        scenario.sys.A.transpose() *
            (gains.P - gains.P * scenario.sys.B * M.inverse() * scenario.sys.B.transpose() * gains.P) *
            scenario.sys.A;
    const double res = (next - gains.P).norm() / std::max(1.0, gains.P.norm());
    record("riccati_fixed_point", res <= 1e-10, "relative residual " + fmtv(res));
  }
  {
    const Matrix Qc = scenario.sys.E * scenario.cov_w() * scenario.sys.E.transpose();
    const double res =
        (gains.A_cl * rep.cov_x * gains.A_cl.transpose() - rep.cov_x + Qc).norm() /
        (1.0 + Qc.norm());
    record("lyapunov_residual", res <= 1e-10, "normalized residual " + fmtv(res));
  }
  {
    double worst = 0.0;
    for (int k = 0; k < N; ++k) {
      Matrix w_inject = Matrix::Zero(scenario.sys.n_w(), sol.basis.L);
      w_inject.col(0) = scenario.mean_w();
      for (int n = 1; n < sol.basis.L_w; ++n) {
        w_inject.col(sol.basis.dist_slot(k, n)) = scenario.dist.coeffs.col(n);
      }
      worst = std::max(worst, (sol.x_coeffs[k + 1] -
                               (scenario.sys.A * sol.x_coeffs[k] + scenario.sys.B * sol.u_coeffs[k] +
                                scenario.sys.E * w_inject))
                                  .cwiseAbs()
                                  .maxCoeff());
    }
    record("pce_dynamics", worst <= 1e-12, "worst dynamics residual " + fmtv(worst));
  }
  {
    double worst = 0.0;
    for (int s = 0; s < sol.basis.L; ++s) {
      for (int k = 0; k < sol.basis.first_active_step(s); ++k) {
        worst = std::max(worst, sol.x_coeffs[k].col(s).cwiseAbs().maxCoeff());
        worst = std::max(worst, sol.u_coeffs[k].col(s).cwiseAbs().maxCoeff());
      }
    }
    record("causality", worst == 0.0, "largest pre-entry coefficient " + fmtv(worst));
  }
  {
    Rng rng = stream_rng(cfg.seed, 12);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      const int j = static_cast<int>(uniform01(rng) * N);
      const int k = 1 + static_cast<int>(uniform01(rng) * (N - 1));
      if (j >= k || sol.basis.L_w < 2) continue;
      const int t = static_cast<int>(uniform01(rng) * (N - k + 1));
      const Matrix prop = abar_product(scenario.sys, sol.ladder, k, k + t - 1);
      const int slot = sol.basis.dist_slot(j, 1);
      worst = std::max(worst, (sol.x_coeffs[k + t].col(slot) - prop * sol.x_coeffs[k].col(slot))
                                  .cwiseAbs()
                                  .maxCoeff());
    }
    record("shift_identity", worst <= 1e-12, "worst shift residual " + fmtv(worst));
  }
  {
    const double weighted = sol.block_costs.dot(sol.basis.norms);
    const double rel = std::abs(weighted - sol.total_cost) / std::max(1.0, sol.total_cost);
    record("cost_separability", rel <= 1e-10, "relative block-sum gap " + fmtv(rel));
  }
  {
    const double res = stationarity_residual(rep, scenario.dist);
    record("stationarity_residual", res <= 1e-10, "residual " + fmtv(res));
  }
  {
    const auto batch = simulate_closed_loop(scenario, sol.ladder, cfg.samples, cfg.seed);
    bool ok = true;
    double worst_z = 0.0;
    for (const int k : {std::min(5, N), N / 2, N}) {
      const auto pm = pce_moments(sol.state_at(k));
      for (Eigen::Index a = 0; a < scenario.sys.n_x(); ++a) {
        const double se = std::sqrt(batch.cov_x[k](a, a) / batch.count);
        const double z = std::abs(batch.mean_x[k][a] - pm.mean[a]) / std::max(se, 1e-300);
        worst_z = std::max(worst_z, z);
        ok = ok && z <= 3.0;
      }
    }
    record("mc_moments", ok, "worst |z| " + fmtv(worst_z) + " at " + std::to_string(cfg.samples) +
                                 " paths");
    const double zc = std::abs(batch.avg_cost - sol.total_cost) /
                      std::max(batch.cost_stderr, 1e-300);
    record("mc_cost", zc <= 3.0, "cost z-score " + fmtv(zc));
  }
  {
    bool ok = true;
    double prev_cf = std::numeric_limits<double>::infinity();
    double prev_ly = std::numeric_limits<double>::infinity();
    for (int p = 0; p <= 15; ++p) {
      const double cf = truncation_bound_closed_form(gains, scenario.dist, p);
      const double ly = truncation_bound_lyapunov(gains, scenario.dist, p);
      ok = ok && ly <= cf && cf <= prev_cf && ly <= prev_ly + 1e-15;
      prev_cf = cf;
      prev_ly = ly;
    }
    if ((scenario.dist.covariance() * scenario.sys.E.transpose() * scenario.sys.E).trace() > 0.0 &&
        !gains.defective) {
      for (const double delta : {0.1, 0.01}) {
        ok = ok && required_dim_lyapunov(gains, scenario.dist, delta) <=
                       required_dim_closed_form(gains, scenario.dist, delta);
      }
    }
    record("w2_bounds", ok, "ordering and monotonicity for p = 0..15");
  }

  bool all = true;
  for (const auto& [name, ok] : checks) all = all && ok;
  std::cout << (all ? "ALL CHECKS PASSED" : "SOME CHECKS FAILED") << " (" << checks.size()
            << " checks)\n";

  OutputWriter out(cfg, "validate");
  out.write_json("validation.json", details);
  out.finalize();
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic LQ optimal control with polynomial chaos expansions"};
  app.set_version_flag("--version", std::string(kVersion));

  RunConfig cfg;
  std::string schema_path;
  auto* dump = app.add_flag("--dump-schema-example{-}", schema_path,
                            "Print (or write to the given path) a complete example scenario")
                   ->expected(0, 1);

  auto add_common = [&cfg](CLI::App* cmd, bool with_samples = false) {
    cmd->add_option("scenario", cfg.scenario_path, "Scenario JSON file")->required();
    cmd->add_option("--out", cfg.out_dir, "Output directory (created if absent)");
    cmd->add_flag("--force", cfg.force, "Overwrite existing output files");
    cmd->add_flag("--verbose", cfg.verbose, "Chatty progress output");
    cmd->add_option("--seed", cfg.seed, "Master RNG seed");
    if (with_samples) cmd->add_option("--samples", cfg.samples, "Monte Carlo sample count");
  };

  auto* sf = app.add_subcommand("solve-finite", "Solve the finite-horizon problem");
  add_common(sf);
  sf->add_option("--N", cfg.N_override, "Override the scenario horizon");

  auto* si = app.add_subcommand("solve-infinite", "Stationary gains, moments, certificate");
  add_common(si);
  si->add_option("--p-max", cfg.p_max, "Tail generator length (default: bound below 1e-8)");

  auto* st = app.add_subcommand("stationary", "Stationary cost and truncated approximations");
  add_common(st);
  st->add_option("--p", cfg.p_list, "Window lengths to materialize");

  auto* ad = app.add_subcommand("approx-dim", "Required PCE dimensions for error bounds");
  add_common(ad);
  ad->add_option("--delta", cfg.deltas, "Wasserstein error bounds")->required();

  auto* tr = app.add_subcommand("truncation", "Moving-horizon truncation errors");
  add_common(tr);
  tr->add_option("--p", cfg.p_list, "Window lengths")->required();

  auto* va = app.add_subcommand("validate", "Run the invariant checks, print PASS/FAIL table");
  add_common(va, /*with_samples=*/true);

  app.require_subcommand(0, 1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (dump->count() > 0) {
      const std::string text = example_scenario_json().dump(2) + "\n";
      if (schema_path.empty()) {
        std::cout << text;
      } else {
        std::ofstream out(schema_path, std::ios::binary);
        if (!out) throw ValidationError("cannot write schema example to " + schema_path);
        out << text;
        std::cout << "wrote " << schema_path << "\n";
      }
      return 0;
    }
    if (sf->parsed()) return cmd_solve_finite(cfg);
    if (si->parsed()) return cmd_solve_infinite(cfg);
    if (st->parsed()) return cmd_stationary(cfg);
    if (ad->parsed()) return cmd_approx_dim(cfg);
    if (tr->parsed()) return cmd_truncation(cfg);
    if (va->parsed()) return cmd_validate(cfg);
    std::cout << app.help();
    return 0;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const DimensionError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
