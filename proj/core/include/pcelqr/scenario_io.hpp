#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "pcelqr/basis.hpp"

namespace pcelqr {

/// Parses a scenario from its JSON document. Throws ParseError for
/// malformed JSON and ValidationError for schema violations; messages
/// name the offending field.
StochasticScenario scenario_from_json(const nlohmann::json& j);

/// Reads and parses a scenario file.
StochasticScenario load_scenario(const std::string& path);

/// Serializes a scenario back to JSON. A scenario emitted by
/// example_scenario_json() re-parses to an identical in-memory scenario.
nlohmann::json scenario_to_json(const StochasticScenario& scenario);

/// A complete, commented-by-name example document (the schema is described
/// field by field in docs/scenario-schema.md).
nlohmann::json example_scenario_json();

}  // namespace pcelqr
