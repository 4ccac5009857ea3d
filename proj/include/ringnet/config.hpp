#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ringnet/error.hpp"
#include "ringnet/synth.hpp"
#include "ringnet/trainer.hpp"

namespace ringnet {

/// Configuration files are plain text, one `key = value` per line; `#` starts
/// a comment and blank lines are ignored. Unknown keys are errors.
using FieldRef = std::conditional_t<std::is_same_v<std::size_t, std::uint64_t>, std::variant<double*, std::size_t*>,
                                    std::variant<double*, std::size_t*, std::uint64_t*>>;
using FieldTable = std::vector<std::pair<std::string, FieldRef>>;

inline FieldTable config_fields(TrainConfig& c) {
  return {{"ring", &c.ring},
          {"slices", &c.slices},
          {"epochs", &c.epochs},
          {"steps", &c.steps},
          {"learning_rate", &c.adam.learning_rate},
          {"adam_beta1", &c.adam.beta1},
          {"adam_beta2", &c.adam.beta2},
          {"adam_epsilon", &c.adam.epsilon},
          {"lambda_sc", &c.loss.shape_consistency},
          {"lambda_proj", &c.loss.projection},
          {"lambda_beta", &c.loss.shape_reg},
          {"lambda_psi", &c.loss.expression_reg},
          {"margin", &c.loss.margin},
          {"confidence_threshold", &c.loss.confidence_threshold},
          {"encoder_confidence_threshold", &c.encoder.confidence_threshold},
          {"hidden", &c.encoder.hidden},
          {"dropout", &c.encoder.dropout},
          {"iterations", &c.encoder.iterations},
          {"output_init_scale", &c.encoder.output_init_scale},
          {"augment_shift", &c.augmentation.shift},
          {"augment_scale", &c.augmentation.scale},
          {"augment_rotation", &c.augmentation.rotation},
          {"augment_jitter", &c.augmentation.jitter},
          {"seed", &c.seed},
          {"threads", &c.threads}};
}

inline FieldTable config_fields(SynthConfig& c) {
  return {{"identities", &c.identities},
          {"images_per_identity", &c.images_per_identity},
          {"shape_sd", &c.shape_sd},
          {"expression_sd", &c.expression_sd},
          {"yaw_min", &c.yaw.lo},
          {"yaw_max", &c.yaw.hi},
          {"pitch_min", &c.pitch.lo},
          {"pitch_max", &c.pitch.hi},
          {"roll_min", &c.roll.lo},
          {"roll_max", &c.roll.hi},
          {"jaw_min", &c.jaw.lo},
          {"jaw_max", &c.jaw.hi},
          {"scale_min", &c.scale.lo},
          {"scale_max", &c.scale.hi},
          {"tx_min", &c.tx.lo},
          {"tx_max", &c.tx.hi},
          {"ty_min", &c.ty.lo},
          {"ty_max", &c.ty.hi},
          {"pixel_noise", &c.pixel_noise},
          {"drop_probability", &c.drop_probability},
          {"seed", &c.seed}};
}

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
bool parse_number(const std::string& text, T& out) {
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

inline void assign_field(const FieldRef& ref, const std::string& value, const std::string& where) {
  const bool ok = std::visit([&](auto* p) { return parse_number(value, *p); }, ref);
  if (!ok) throw ValueError(where + ": invalid value '" + value + "'");
}

}  // namespace detail

/// Applies `key = value` lines to the fields of `cfg`.
template <class Config>
void apply_config_text(Config& cfg, const std::string& text, const std::string& source) {
  FieldTable table = config_fields(cfg);
  std::istringstream in(text);
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(n);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValueError(where + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq)), value = detail::trim(line.substr(eq + 1));
    auto it = std::find_if(table.begin(), table.end(), [&](const auto& f) { return f.first == key; });
    if (it == table.end()) throw ValueError(where + ": unknown key '" + key + "'");
    detail::assign_field(it->second, value, where);
  }
}

template <class Config>
void apply_config_file(Config& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValueError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str(), path);
}

template <class Config>
std::string format_config(Config cfg) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& [key, ref] : config_fields(cfg)) {
    out << key << " = ";
    std::visit([&](auto* p) { out << *p; }, ref);
    out << "\n";
  }
  return out.str();
}

template <class Config>
nlohmann::json config_to_json(Config cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, ref] : config_fields(cfg)) std::visit([&](auto* p) { j[key] = *p; }, ref);
  return j;
}

template <class Config>
Config config_from_json(const nlohmann::json& j) {
  Config cfg;
  for (const auto& [key, ref] : config_fields(cfg)) {
    if (!j.contains(key)) throw FormatError("configuration is missing '" + key + "'");
    std::visit(
        [&](auto* p) {
          using T = std::remove_pointer_t<decltype(p)>;
          *p = j.at(key).template get<T>();
        },
        ref);
  }
  return cfg;
}

}  // namespace ringnet
