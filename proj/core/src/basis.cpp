#include "pcelqr/basis.hpp"

#include <cmath>
#include <numbers>

namespace pcelqr {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double hermite_eval(int j, double xi) {
  // Probabilists' Hermite: He_{j+1} = xi He_j - j He_{j-1}.
  double prev = 1.0;
  if (j == 0) return prev;
  double cur = xi;
  for (int d = 1; d < j; ++d) {
    const double next = xi * cur - static_cast<double>(d) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

double legendre_eval(int j, double xi) {
  // (j+1) P_{j+1} = (2j+1) xi P_j - j P_{j-1}.
  double prev = 1.0;
  if (j == 0) return prev;
  double cur = xi;
  for (int d = 1; d < j; ++d) {
    const double next =
        ((2.0 * d + 1.0) * xi * cur - static_cast<double>(d) * prev) / (d + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

}  // namespace

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Rng stream_rng(std::uint64_t seed, std::uint64_t index) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(index + 1)));
}

GermSpec GermSpec::gaussian_hermite(int L) {
  if (L < 1) throw ValidationError("GermSpec: number of basis functions must be >= 1");
  if (L > 170) throw ValidationError("GermSpec: hermite norms j! overflow for L > 170");
  Vector norms(L);
  double fact = 1.0;
  for (int j = 0; j < L; ++j) {
    if (j > 0) fact *= j;
    norms[j] = fact;  // ||He_j||^2 = j!
  }
  GermSpec g;
  g.family = GermFamily::GaussianHermite;
  g.size = L;
  g.norms = std::move(norms);
  g.evaluate = hermite_eval;
  g.sample = [](Rng& rng) {
    // Box-Muller; fixed two-draw consumption keeps streams reproducible.
    const double u1 = 1.0 - uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  };
  return g;
}

GermSpec GermSpec::uniform_legendre(int L) {
  if (L < 1) throw ValidationError("GermSpec: number of basis functions must be >= 1");
  Vector norms(L);
  for (int j = 0; j < L; ++j) norms[j] = 1.0 / (2.0 * j + 1.0);
  GermSpec g;
  g.family = GermFamily::UniformLegendre;
  g.size = L;
  g.norms = std::move(norms);
  g.evaluate = legendre_eval;
  g.sample = [](Rng& rng) { return 2.0 * uniform01(rng) - 1.0; };
  return g;
}

GermSpec GermSpec::custom(Vector norms, std::function<double(int, double)> evaluate,
                          std::function<double(Rng&)> sample) {
  if (norms.size() < 1) throw ValidationError("GermSpec: norms must be non-empty");
  if (norms[0] != 1.0) throw ValidationError("GermSpec: norms[0] must be 1 (phi^0 == 1)");
  if ((norms.array() <= 0.0).any()) throw ValidationError("GermSpec: all norms must be > 0");
  GermSpec g;
  g.family = GermFamily::Custom;
  g.size = static_cast<int>(norms.size());
  g.norms = std::move(norms);
  g.evaluate = std::move(evaluate);
  g.sample = std::move(sample);
  return g;
}

PceSource PceSource::create(std::vector<GermSpec> germs, Matrix coeffs) {
  if (germs.empty()) throw ValidationError("PceSource: at least one germ is required");
  Eigen::Index expected = 1;
  for (const GermSpec& g : germs) {
    if (g.size < 1) throw ValidationError("PceSource: germ with no basis functions");
    expected += g.size - 1;
  }
  if (coeffs.rows() < 1) throw ValidationError("PceSource: coefficient matrix has no rows");
  if (coeffs.cols() != expected) {
    throw DimensionError("PceSource: coefficient matrix has " + std::to_string(coeffs.cols()) +
                         " columns, basis has " + std::to_string(expected));
  }
  PceSource s;
  s.germs = std::move(germs);
  s.coeffs = std::move(coeffs);
  return s;
}

std::pair<int, int> PceSource::column_basis(int c) const {
  if (c == 0) return {-1, 0};
  int acc = 1;
  for (int g = 0; g < static_cast<int>(germs.size()); ++g) {
    const int width = germs[g].size - 1;
    if (c < acc + width) return {g, c - acc + 1};
    acc += width;
  }
  throw DimensionError("PceSource: column index " + std::to_string(c) + " out of range");
}

double PceSource::norm_sq(int c) const {
  if (c == 0) return 1.0;
  const auto [g, d] = column_basis(c);
  return germs[g].norms[d];
}

Vector PceSource::norms() const {
  Vector out(size());
  for (int c = 0; c < size(); ++c) out[c] = norm_sq(c);
  return out;
}

Matrix PceSource::covariance() const {
  Matrix cov = Matrix::Zero(dim(), dim());
  for (int c = 1; c < size(); ++c) {
    cov.noalias() += coeffs.col(c) * coeffs.col(c).transpose() * norm_sq(c);
  }
  return cov;
}

Vector PceSource::draw_germs(Rng& rng) const {
  Vector xi(germs.size());
  for (std::size_t g = 0; g < germs.size(); ++g) xi[g] = germs[g].sample(rng);
  return xi;
}

Vector PceSource::realize_from_germs(const Vector& germ_values) const {
  if (germ_values.size() != static_cast<Eigen::Index>(germs.size())) {
    throw DimensionError("PceSource: expected one germ value per germ component");
  }
  Vector out = coeffs.col(0);
  for (int c = 1; c < size(); ++c) {
    const auto [g, d] = column_basis(c);
    out += coeffs.col(c) * germs[g].evaluate(d, germ_values[g]);
  }
  return out;
}

Vector PceSource::realize(Rng& rng) const { return realize_from_germs(draw_germs(rng)); }

PceMoments pce_moments(const PceRandomVector& z) {
  if (z.coeffs.cols() != z.norms.size()) {
    throw DimensionError("pce_moments: coefficient columns (" + std::to_string(z.coeffs.cols()) +
                         ") do not match basis size (" + std::to_string(z.norms.size()) + ")");
  }
  PceMoments m;
  m.mean = z.coeffs.col(0);
  m.cov = Matrix::Zero(z.dim(), z.dim());
  for (Eigen::Index j = 1; j < z.size(); ++j) {
    m.cov.noalias() += z.coeffs.col(j) * z.coeffs.col(j).transpose() * z.norms[j];
  }
  return m;
}

Matrix pce_cross_covariance(const PceRandomVector& z1, const PceRandomVector& z2) {
  if (z1.size() != z2.size() || z1.norms != z2.norms) {
    throw ValidationError("pce_cross_covariance: operands do not share a basis");
  }
  Matrix cov = Matrix::Zero(z1.dim(), z2.dim());
  for (Eigen::Index j = 1; j < z1.size(); ++j) {
    cov.noalias() += z1.coeffs.col(j) * z2.coeffs.col(j).transpose() * z1.norms[j];
  }
  return cov;
}

int JointBasis::ini_slot(int i) const {
  if (i < 1 || i >= L_ini) {
    throw DimensionError("JointBasis: initial-condition index " + std::to_string(i) +
                         " outside 1.." + std::to_string(L_ini - 1));
  }
  return i;
}

int JointBasis::dist_slot(int k, int n) const {
  if (k < 0 || k >= N) {
    throw DimensionError("JointBasis: time step " + std::to_string(k) + " outside 0.." +
                         std::to_string(N - 1));
  }
  if (n < 1 || n >= L_w) {
    throw DimensionError("JointBasis: disturbance function index " + std::to_string(n) +
                         " outside 1.." + std::to_string(L_w - 1));
  }
  return L_ini + k * (L_w - 1) + (n - 1);
}

int JointBasis::paper_index(int slot) const {
  const SlotInfo& s = slots.at(slot);
  switch (s.kind) {
    case SlotKind::Constant:
      return -2;
    case SlotKind::InitialCondition:
      return -1;
    case SlotKind::Disturbance:
      return s.time;
  }
  return -2;
}

int JointBasis::first_active_step(int slot) const {
  const SlotInfo& s = slots.at(slot);
  return s.kind == SlotKind::Disturbance ? s.time + 1 : 0;
}

JointBasis build_joint_basis(int L_ini, int L_w, int N) {
  if (L_ini < 1) throw ValidationError("build_joint_basis: L_ini must be >= 1");
  if (L_w < 1) throw ValidationError("build_joint_basis: L_w must be >= 1");
  if (N < 1) throw ValidationError("build_joint_basis: N must be >= 1");

  JointBasis b;
  b.N = N;
  b.L_ini = L_ini;
  b.L_w = L_w;
  b.L = L_ini + N * (L_w - 1);
  b.norms = Vector::Ones(b.L);
  b.slots.resize(b.L);
  b.slots[0] = SlotInfo{SlotKind::Constant, 0, -1};
  for (int i = 1; i < L_ini; ++i) {
    b.slots[i] = SlotInfo{SlotKind::InitialCondition, i, -1};
  }
  for (int k = 0; k < N; ++k) {
    for (int n = 1; n < L_w; ++n) {
      b.slots[L_ini + k * (L_w - 1) + (n - 1)] = SlotInfo{SlotKind::Disturbance, n, k};
    }
  }
  return b;
}

JointBasis build_joint_basis(const PceSource& ini, const PceSource& dist, int N) {
  JointBasis b = build_joint_basis(static_cast<int>(ini.size()),
                                   static_cast<int>(dist.size()), N);
  for (int s = 0; s < b.L; ++s) {
    const SlotInfo& info = b.slots[s];
    switch (info.kind) {
      case SlotKind::Constant:
        b.norms[s] = 1.0;
        break;
      case SlotKind::InitialCondition:
        b.norms[s] = ini.norm_sq(info.source_column);
        break;
      case SlotKind::Disturbance:
        b.norms[s] = dist.norm_sq(info.source_column);
        break;
    }
  }
  return b;
}

StochasticScenario StochasticScenario::create(LtiSystem sys, CostSpec cost, PceSource ini,
                                              PceSource dist, int N, std::string name) {
  if (N < 1) throw ValidationError("StochasticScenario: horizon N must be >= 1");
  if (ini.dim() != sys.n_x()) {
    throw DimensionError("StochasticScenario: initial_condition coeffs have " +
                         std::to_string(ini.dim()) + " rows, n_x=" + std::to_string(sys.n_x()));
  }
  if (dist.dim() != sys.n_w()) {
    throw DimensionError("StochasticScenario: disturbance coeffs have " +
                         std::to_string(dist.dim()) + " rows, n_w=" + std::to_string(sys.n_w()));
  }
  if (cost.Q.rows() != sys.n_x() || cost.R.rows() != sys.n_u()) {
    throw DimensionError("StochasticScenario: cost dimensions do not match the system");
  }
  StochasticScenario s;
  s.sys = std::move(sys);
  s.cost = std::move(cost);
  s.ini = std::move(ini);
  s.dist = std::move(dist);
  s.N = N;
  s.name = std::move(name);
  return s;
}

RealizationBatch sample_realizations(const StochasticScenario& scenario, int count,
                                     std::uint64_t seed) {
  if (count < 1) throw ValidationError("sample_realizations: count must be >= 1");
  const int N = scenario.N;
  RealizationBatch batch;
  batch.x_ini.resize(count, scenario.sys.n_x());
  batch.ini_germs.resize(count, static_cast<Eigen::Index>(scenario.ini.germs.size()));
  batch.w.reserve(count);
  batch.dist_germs.reserve(count);

  for (int i = 0; i < count; ++i) {
    Rng rng = stream_rng(seed, static_cast<std::uint64_t>(i));
    const Vector xi_ini = scenario.ini.draw_germs(rng);
    batch.ini_germs.row(i) = xi_ini.transpose();
    batch.x_ini.row(i) = scenario.ini.realize_from_germs(xi_ini).transpose();

    Matrix wk(N, scenario.sys.n_w());
    Matrix germs(N, static_cast<Eigen::Index>(scenario.dist.germs.size()));
    for (int k = 0; k < N; ++k) {
      const Vector xi = scenario.dist.draw_germs(rng);
      germs.row(k) = xi.transpose();
      wk.row(k) = scenario.dist.realize_from_germs(xi).transpose();
    }
    batch.w.push_back(std::move(wk));
    batch.dist_germs.push_back(std::move(germs));
  }
  return batch;
}

}  // namespace pcelqr
