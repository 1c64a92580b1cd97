#pragma once

#include <nlohmann/json.hpp>

#include "demcorrect/correction.hpp"
#include "demcorrect/gbdt.hpp"
#include "demcorrect/linear_stats.hpp"
#include "demcorrect/synth.hpp"
#include "demcorrect/terrain.hpp"

namespace demcorrect {

using Json = nlohmann::ordered_json;

inline constexpr int kModelFormatVersion = 1;
inline constexpr const char* kGbdtFormat = "demcorrect-gbdt";
inline constexpr const char* kLinearFormat = "demcorrect-linear";

// Versioned model documents. Readers throw FormatError on a wrong format tag,
// an unsupported version, or a malformed node graph.
Json serialize_model(const GbdtModel& model);
GbdtModel deserialize_model(const Json& doc);
Json serialize_linear_model(const LinearModel& model);
LinearModel deserialize_linear_model(const Json& doc);

Json to_json(const GbdtParams& params);
GbdtParams gbdt_params_from_json(const Json& doc, GbdtParams defaults = {});

Json to_json(const CollinearityReport& report);
Json to_json(const Metrics& metrics);
Json to_json(const EvaluationReport& report);

Json to_json(const ErrorSpec& spec);
ErrorSpec error_spec_from_json(const Json& doc);

Json to_json(const WindowSpec& w);
WindowSpec window_from_json(const Json& doc, WindowSpec defaults);
Json to_json(const TerrainConfig& cfg);
TerrainConfig terrain_config_from_json(const Json& doc);

/// Doubles that may be infinite (VIF) are written as the string "inf".
Json real_or_inf(double v);

}  // namespace demcorrect
