#pragma once

// Portable parameter documents. Floats are stored as C99 hex-float strings
// ("0x1.8p+0"), which round-trip every finite double exactly; a decimal
// rendering sits alongside for readers but is ignored on load.

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "iemppo/nn.hpp"

namespace iemppo::nn {

using json = nlohmann::json;

std::string format_hex(double x);
double parse_hex(std::string_view text);

json hex_array(const Vec& v);
Vec vec_from_hex_array(const json& arr);

json spec_to_json(const MlpSpec& spec);
MlpSpec spec_from_json(const json& doc);

json to_json(const MlpSpec& spec, const ParamSet& params, bool with_decimal = true);
Mlp mlp_from_json(const json& doc);
/// Loads params and checks them against `expected`; any mismatch is a ParseError.
ParamSet params_from_json(const json& doc, const MlpSpec& expected);

std::string save_params(const MlpSpec& spec, const ParamSet& params);
ParamSet load_params(std::string_view document, const MlpSpec& expected);

}  // namespace iemppo::nn
