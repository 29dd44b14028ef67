#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pcelqr/system.hpp"

namespace pcelqr {

using Rng = std::mt19937_64;

/// Uniform draw in [0,1) from the top 53 bits of the engine.
double uniform01(Rng& rng);

/// Deterministic per-index stream: sample i of a run seeded with `seed`
/// always sees the same engine state, independent of evaluation order.
Rng stream_rng(std::uint64_t seed, std::uint64_t index);

enum class GermFamily { GaussianHermite, UniformLegendre, Custom };

/// One scalar stochastic germ with its orthogonal polynomial family.
/// phi^0 == 1 always; norms[j] = ||phi^j||^2.
struct GermSpec {
  GermFamily family = GermFamily::Custom;
  int size = 0;  // number of basis functions L
  Vector norms;
  std::function<double(int j, double xi)> evaluate;
  std::function<double(Rng&)> sample;

  /// Probabilists' Hermite polynomials of a standard normal germ,
  /// ||He_j||^2 = j!.
  static GermSpec gaussian_hermite(int L);
  /// Legendre polynomials of a uniform germ on [-1,1], ||P_j||^2 = 1/(2j+1).
  static GermSpec uniform_legendre(int L);
  static GermSpec custom(Vector norms,
                         std::function<double(int, double)> evaluate,
                         std::function<double(Rng&)> sample);
};

/// Exact finite PCE of a random vector over one or more mutually
/// independent scalar germs. Column 0 of `coeffs` is the mean; the
/// remaining columns are grouped germ by germ, each germ g contributing
/// its non-constant functions phi_g^1 .. phi_g^{L_g-1}.
struct PceSource {
  std::vector<GermSpec> germs;
  Matrix coeffs;  // dim x L with L = 1 + sum_g (L_g - 1)

  Eigen::Index dim() const { return coeffs.rows(); }
  Eigen::Index size() const { return coeffs.cols(); }

  /// Maps column c >= 1 to (germ index, degree within that germ).
  std::pair<int, int> column_basis(int c) const;
  /// ||basis function of column c||^2 (1.0 for c = 0).
  double norm_sq(int c) const;
  Vector norms() const;

  Vector mean() const { return coeffs.col(0); }
  Matrix covariance() const;

  /// Draws one germ realization per component and evaluates the expansion.
  Vector realize(Rng& rng) const;
  Vector realize_from_germs(const Vector& germ_values) const;
  Vector draw_germs(Rng& rng) const;

  static PceSource create(std::vector<GermSpec> germs, Matrix coeffs);
};

/// Coefficients of a random vector in some orthogonal basis, together with
/// the squared norms of that basis. Enough for all moment formulas.
struct PceRandomVector {
  Matrix coeffs;  // dim x L
  Vector norms;   // L

  Eigen::Index dim() const { return coeffs.rows(); }
  Eigen::Index size() const { return coeffs.cols(); }
};

struct PceMoments {
  Vector mean;
  Matrix cov;
};

/// mean = column 0, cov = sum_{j>=1} z^j z^j' ||phi^j||^2.
PceMoments pce_moments(const PceRandomVector& z);

/// sum_{j>=1} z1^j z2^j' ||phi^j||^2. Throws ValidationError when the two
/// vectors do not share a basis (size or norms differ).
Matrix pce_cross_covariance(const PceRandomVector& z1, const PceRandomVector& z2);

enum class SlotKind { Constant, InitialCondition, Disturbance };

struct SlotInfo {
  SlotKind kind = SlotKind::Constant;
  int source_column = 0;  // column in the owning source's coefficient matrix
  int time = -1;          // disturbance entry time step; -1 otherwise
};

/// Joint basis over the initial condition and one disturbance block per
/// time step, sharing a single constant function at slot 0.
///
/// Layout: slot 0 constant; slots 1..L_ini-1 the non-mean initial-condition
/// functions; slots L_ini + k(L_w-1) .. L_ini + (k+1)(L_w-1) - 1 the
/// non-mean disturbance functions entering at time step k.
struct JointBasis {
  int N = 0;
  int L_ini = 1;
  int L_w = 1;
  int L = 1;
  Vector norms;
  std::vector<SlotInfo> slots;

  int ini_slot(int i) const;          // i in 1..L_ini-1
  int dist_slot(int k, int n) const;  // k in 0..N-1, n in 1..L_w-1

  /// Reporting convention: -2 for the constant slot, -1 for
  /// initial-condition slots, the disturbance entry time for the rest.
  /// Under L_ini = L_w = 2 this is exactly slot - 2.
  int paper_index(int slot) const;

  /// First time step at which the slot's coefficients may be non-zero:
  /// 0 for constant/initial slots, k+1 for a disturbance entering at k.
  int first_active_step(int slot) const;
};

/// Structure-only basis (all norms 1). Throws ValidationError on
/// non-positive sizes.
JointBasis build_joint_basis(int L_ini, int L_w, int N);

/// Basis with norms filled in from the two sources.
JointBasis build_joint_basis(const PceSource& ini, const PceSource& dist, int N);

/// A finite-horizon stochastic LQ problem instance: plant, weights, exact
/// PCEs of the initial condition and of the (identically distributed)
/// per-step disturbance, and the horizon.
struct StochasticScenario {
  LtiSystem sys;
  CostSpec cost;
  PceSource ini;   // dim n_x
  PceSource dist;  // dim n_w, template reused at every time step
  int N = 1;
  std::string name;

  JointBasis joint_basis() const { return build_joint_basis(ini, dist, N); }
  Vector mean_w() const { return dist.mean(); }
  Matrix cov_w() const { return dist.covariance(); }

  static StochasticScenario create(LtiSystem sys, CostSpec cost, PceSource ini,
                                   PceSource dist, int N, std::string name = "");
};

/// Sampled germ paths and the corresponding realizations.
struct RealizationBatch {
  Matrix x_ini;                   // count x n_x
  std::vector<Matrix> w;          // per sample: N x n_w
  Matrix ini_germs;               // count x (#ini germ components)
  std::vector<Matrix> dist_germs; // per sample: N x (#dist germ components)
};

/// i.i.d. paths, reproducible for a fixed seed; sample i uses stream i so
/// results do not depend on evaluation order.
RealizationBatch sample_realizations(const StochasticScenario& scenario,
                                     int count, std::uint64_t seed);

}  // namespace pcelqr
