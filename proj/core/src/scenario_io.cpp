#include "pcelqr/scenario_io.hpp"

#include <fstream>

#include "pcelqr/linalg.hpp"

namespace pcelqr {

namespace {

using nlohmann::json;

Matrix matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw ValidationError("scenario: field '" + field + "' must be a non-empty array of rows");
  }
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ValidationError("scenario: field '" + field + "' has ragged rows");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) {
        throw ValidationError("scenario: field '" + field + "' contains a non-numeric entry");
      }
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

const json& require(const json& j, const std::string& field, const std::string& context) {
  auto it = j.find(field);
  if (it == j.end()) {
    throw ValidationError("scenario: missing field '" + context + field + "'");
  }
  return *it;
}

PceSource source_from_json(const json& j, const std::string& context) {
  const json& jg = require(j, "germs", context);
  if (!jg.is_array() || jg.empty()) {
    throw ValidationError("scenario: '" + context + "germs' must be a non-empty array");
  }
  std::vector<GermSpec> germs;
  for (std::size_t g = 0; g < jg.size(); ++g) {
    const std::string where = context + "germs[" + std::to_string(g) + "].";
    const std::string family = require(jg[g], "family", where).get<std::string>();
    const int functions = require(jg[g], "functions", where).get<int>();
    if (family == "gaussian-hermite") {
      germs.push_back(GermSpec::gaussian_hermite(functions));
    } else if (family == "uniform-legendre") {
      germs.push_back(GermSpec::uniform_legendre(functions));
    } else {
      throw ValidationError("scenario: '" + where +
                            "family' must be 'gaussian-hermite' or 'uniform-legendre', got '" +
                            family + "'");
    }
  }
  Matrix coeffs = matrix_from_json(require(j, "coeffs", context), context + "coeffs");
  return PceSource::create(std::move(germs), std::move(coeffs));
}

json source_to_json(const PceSource& s) {
  json out;
  out["germs"] = json::array();
  for (const GermSpec& g : s.germs) {
    json jg;
    switch (g.family) {
      case GermFamily::GaussianHermite:
        jg["family"] = "gaussian-hermite";
        break;
      case GermFamily::UniformLegendre:
        jg["family"] = "uniform-legendre";
        break;
      case GermFamily::Custom:
        throw ValidationError("scenario: custom germs cannot be serialized to JSON");
    }
    jg["functions"] = g.size;
    out["germs"].push_back(jg);
  }
  out["coeffs"] = matrix_to_json(s.coeffs);
  return out;
}

}  // namespace

StochasticScenario scenario_from_json(const nlohmann::json& j) {
  const json& jsys = require(j, "system", "");
  Matrix A = matrix_from_json(require(jsys, "A", "system."), "system.A");
  Matrix B = matrix_from_json(require(jsys, "B", "system."), "system.B");
  Matrix E = matrix_from_json(require(jsys, "E", "system."), "system.E");
  LtiSystem sys = LtiSystem::create(std::move(A), std::move(B), std::move(E));

  const json& jcost = require(j, "cost", "");
  Matrix Q = matrix_from_json(require(jcost, "Q", "cost."), "cost.Q");
  Matrix R = matrix_from_json(require(jcost, "R", "cost."), "cost.R");
  const json& jqn = require(jcost, "Q_N", "cost.");
  Matrix Q_N;
  if (jqn.is_string()) {
    if (jqn.get<std::string>() != "dare") {
      throw ValidationError("scenario: 'cost.Q_N' must be a matrix or the string \"dare\"");
    }
    // Terminal weight = stationary Riccati solution; the fixed point does
    // not depend on the PSD seed, so iterate from zero.
    const CostSpec seed = CostSpec::create(Q, Matrix::Zero(Q.rows(), Q.cols()), R);
    Q_N = stationary_gains(sys, seed).P;
  } else {
    Q_N = matrix_from_json(jqn, "cost.Q_N");
  }
  CostSpec cost = CostSpec::create(std::move(Q), std::move(Q_N), std::move(R));

  PceSource ini = source_from_json(require(j, "initial_condition", ""), "initial_condition.");
  PceSource dist = source_from_json(require(j, "disturbance", ""), "disturbance.");

  const json& jn = require(j, "horizon", "");
  if (!jn.is_number_integer() || jn.get<int>() < 1) {
    throw ValidationError("scenario: 'horizon' must be an integer >= 1");
  }
  std::string name = j.value("name", "");

  return StochasticScenario::create(std::move(sys), std::move(cost), std::move(ini),
                                    std::move(dist), jn.get<int>(), std::move(name));
}

StochasticScenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError("scenario file " + path + " is not valid JSON: " + e.what());
  }
  return scenario_from_json(j);
}

nlohmann::json scenario_to_json(const StochasticScenario& scenario) {
  json j;
  if (!scenario.name.empty()) j["name"] = scenario.name;
  j["system"]["A"] = matrix_to_json(scenario.sys.A);
  j["system"]["B"] = matrix_to_json(scenario.sys.B);
  j["system"]["E"] = matrix_to_json(scenario.sys.E);
  j["cost"]["Q"] = matrix_to_json(scenario.cost.Q);
  j["cost"]["Q_N"] = matrix_to_json(scenario.cost.Q_N);
  j["cost"]["R"] = matrix_to_json(scenario.cost.R);
  j["initial_condition"] = source_to_json(scenario.ini);
  j["disturbance"] = source_to_json(scenario.dist);
  j["horizon"] = scenario.N;
  return j;
}

nlohmann::json example_scenario_json() {
  json j;
  j["name"] = "example";
  j["system"]["A"] = json::parse("[[0.9, 0.1], [0.0, 0.8]]");
  j["system"]["B"] = json::parse("[[0.0], [1.0]]");
  j["system"]["E"] = json::parse("[[1.0], [0.5]]");
  j["cost"]["Q"] = json::parse("[[1.0, 0.0], [0.0, 1.0]]");
  j["cost"]["Q_N"] = json::parse("[[1.0, 0.0], [0.0, 1.0]]");
  j["cost"]["R"] = json::parse("[[0.5]]");
  j["initial_condition"]["germs"] = json::parse("[{\"family\": \"gaussian-hermite\", \"functions\": 2}]");
  j["initial_condition"]["coeffs"] = json::parse("[[1.0, 0.2], [0.0, 0.1]]");
  j["disturbance"]["germs"] = json::parse("[{\"family\": \"uniform-legendre\", \"functions\": 2}]");
  j["disturbance"]["coeffs"] = json::parse("[[0.1, 0.05]]");
  j["horizon"] = 10;
  return j;
}

}  // namespace pcelqr
