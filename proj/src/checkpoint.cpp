#include "iemppo/checkpoint.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace iemppo::nn {

std::string format_hex(double x) {
  if (!std::isfinite(x)) throw NumericError("cannot serialize non-finite value");
  char buf[64];
  const bool neg = std::signbit(x);
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), std::fabs(x), std::chars_format::hex);
  if (ec != std::errc{}) throw NumericError("hex float formatting failed");
  return std::string(neg ? "-0x" : "0x") + std::string(buf, end);
}

double parse_hex(std::string_view text) {
  bool neg = false;
  if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
    neg = text.front() == '-';
    text.remove_prefix(1);
  }
  if (text.size() < 3 || text[0] != '0' || (text[1] != 'x' && text[1] != 'X')) {
    throw ParseError("expected hex float, got '" + std::string(text) + "'");
  }
  text.remove_prefix(2);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value, std::chars_format::hex);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ParseError("malformed hex float '" + std::string(text) + "'");
  }
  return neg ? -value : value;
}

json hex_array(const Vec& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(format_hex(v[i]));
  return arr;
}

Vec vec_from_hex_array(const json& arr) {
  if (!arr.is_array()) throw ParseError("expected an array of hex floats");
  Vec v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_string()) throw ParseError("array element " + std::to_string(i) + " is not a hex string");
    v[static_cast<Eigen::Index>(i)] = parse_hex(arr[i].get<std::string>());
  }
  return v;
}

json spec_to_json(const MlpSpec& spec) {
  return json{{"input_dim", spec.input_dim},
              {"hidden_dims", spec.hidden_dims},
              {"output_dim", spec.output_dim},
              {"hidden_activation", to_string(spec.hidden_activation)},
              {"output_activation", to_string(spec.output_activation)}};
}

MlpSpec spec_from_json(const json& doc) {
  try {
    MlpSpec spec;
    spec.input_dim = doc.at("input_dim").get<int>();
    spec.hidden_dims = doc.at("hidden_dims").get<std::vector<int>>();
    spec.output_dim = doc.at("output_dim").get<int>();
    spec.hidden_activation = activation_from_string(doc.at("hidden_activation").get<std::string>());
    spec.output_activation = activation_from_string(doc.at("output_activation").get<std::string>());
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad network spec: ") + e.what());
  } catch (const ShapeError& e) {
    throw ParseError(std::string("bad network spec: ") + e.what());
  }
}

json to_json(const MlpSpec& spec, const ParamSet& params, bool with_decimal) {
  params.check_shape(spec);
  json layers = json::array();
  for (const auto& layer : params.layers) {
    // Row-major flattening of w.
    Vec w_rows(layer.w.size());
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < layer.w.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.w.cols(); ++c) w_rows[k++] = layer.w(r, c);
    }
    json entry{{"w", hex_array(w_rows)}, {"b", hex_array(layer.b)}};
    if (with_decimal) {
      entry["w_decimal"] = std::vector<double>(w_rows.data(), w_rows.data() + w_rows.size());
      entry["b_decimal"] = std::vector<double>(layer.b.data(), layer.b.data() + layer.b.size());
    }
    layers.push_back(std::move(entry));
  }
  return json{{"spec", spec_to_json(spec)}, {"layers", std::move(layers)}};
}

namespace {

ParamSet read_layers(const json& doc, const MlpSpec& spec) {
  if (!doc.contains("layers") || !doc["layers"].is_array()) throw ParseError("document has no 'layers' array");
  const auto& layers = doc["layers"];
  if (static_cast<int>(layers.size()) != spec.num_layers()) {
    throw ParseError("document has " + std::to_string(layers.size()) + " layers, expected " +
                     std::to_string(spec.num_layers()));
  }
  ParamSet params = ParamSet::zeros(spec);
  for (int l = 0; l < spec.num_layers(); ++l) {
    const auto& entry = layers[l];
    if (!entry.contains("w") || !entry.contains("b")) throw ParseError("layer " + std::to_string(l) + " lacks w or b");
    const Vec w = vec_from_hex_array(entry["w"]);
    const Vec b = vec_from_hex_array(entry["b"]);
    auto& dst = params.layers[l];
    if (w.size() != dst.w.size() || b.size() != dst.b.size()) {
      throw ParseError("layer " + std::to_string(l) + " has " + std::to_string(w.size()) + "+" +
                       std::to_string(b.size()) + " values, expected " + std::to_string(dst.w.size()) + "+" +
                       std::to_string(dst.b.size()));
    }
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < dst.w.rows(); ++r) {
      for (Eigen::Index c = 0; c < dst.w.cols(); ++c) dst.w(r, c) = w[k++];
    }
    dst.b = b;
  }
  return params;
}

}  // namespace

Mlp mlp_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("spec")) throw ParseError("document has no 'spec'");
  MlpSpec spec = spec_from_json(doc["spec"]);
  ParamSet params = read_layers(doc, spec);
  return Mlp(std::move(spec), std::move(params));
}

ParamSet params_from_json(const json& doc, const MlpSpec& expected) {
  if (!doc.is_object() || !doc.contains("spec")) throw ParseError("document has no 'spec'");
  const MlpSpec stored = spec_from_json(doc["spec"]);
  if (!(stored == expected)) throw ParseError("document network shape does not match the expected spec");
  return read_layers(doc, expected);
}

std::string save_params(const MlpSpec& spec, const ParamSet& params) { return to_json(spec, params).dump(2); }

ParamSet load_params(std::string_view document, const MlpSpec& expected) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  return params_from_json(doc, expected);
}

}  // namespace iemppo::nn
