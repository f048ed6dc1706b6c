#pragma once

// JSON experiment configuration:
//
//   {
//     "model": {"n": 500, "r": 2, "mu": [0.5, 0.5], "K": [10, 15], "P": 10000,
//               "alpha": [[0.3, 0.2], [0.2, 0.3]]},
//     "sweep": {"axis": "K1", "range": [10, 35], "step": 1, "linked_rule": "K2=K1+5"},
//     "run":   {"trials": 400, "master_seed": 1, "workers": 1, "output_path": "out.csv"}
//   }
//
// Sweep axes: "K1", "alpha_ij" (e.g. "alpha_12"), "alpha_diag", "explicit"
// (with "points": [model, ...]). Values come from "values" or "range"+"step".
// Unknown keys anywhere are rejected.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <regex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hetkey/error.hpp"
#include "hetkey/model.hpp"
#include "hetkey/montecarlo.hpp"

namespace hetkey {

/// Invalid configuration; the message starts with the offending field path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct SweepConfig {
  SweepAxisSpec axis;
  std::vector<double> values;
  std::vector<ModelParams> explicit_points;

  friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

struct RunConfig {
  std::size_t trials = kDefaultTrials;
  std::uint64_t master_seed = 0;
  std::size_t workers = 1;
  std::string output_path;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct Config {
  ModelParams model;
  std::optional<SweepConfig> sweep;
  RunConfig run;

  ExperimentSpec experiment() const {
    if (!sweep) throw ConfigError("sweep", "section required for this command");
    return ExperimentSpec{model, sweep->axis, sweep->values, sweep->explicit_points, run.trials,
                          run.master_seed};
  }

  friend bool operator==(const Config&, const Config&) = default;
};

namespace config_detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& path,
                           std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ConfigError(path + "." + key, "unknown field");
  }
}

inline const json& require(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) throw ConfigError(path + "." + key, "missing required field");
  return obj.at(key);
}

inline double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

inline std::uint64_t as_unsigned(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
  throw ConfigError(path, "expected a non-negative integer");
}

inline std::vector<double> number_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline ModelParams parse_model(const json& obj, const std::string& path) {
  reject_unknown(obj, path, {"n", "r", "mu", "K", "P", "alpha"});
  const auto n = as_unsigned(require(obj, path, "n"), path + ".n");
  const auto r = as_unsigned(require(obj, path, "r"), path + ".r");
  if (r == 0) throw ConfigError(path + ".r", "must be >= 1");

  const auto mu = number_array(require(obj, path, "mu"), path + ".mu");
  if (mu.size() != r) throw ConfigError(path + ".mu", "expected " + std::to_string(r) + " entries");

  const json& kj = require(obj, path, "K");
  if (!kj.is_array() || kj.size() != r)
    throw ConfigError(path + ".K", "expected an array of " + std::to_string(r) + " integers");
  std::vector<std::uint32_t> ks;
  for (std::size_t i = 0; i < r; ++i)
    ks.push_back(static_cast<std::uint32_t>(as_unsigned(kj[i], path + ".K[" + std::to_string(i) + "]")));
  const auto pool = as_unsigned(require(obj, path, "P"), path + ".P");

  const json& aj = require(obj, path, "alpha");
  if (!aj.is_array() || aj.size() != r)
    throw ConfigError(path + ".alpha", "expected an " + std::to_string(r) + "x" + std::to_string(r) + " matrix");
  SquareMatrix alpha(r);
  for (std::size_t i = 0; i < r; ++i) {
    const auto row = number_array(aj[i], path + ".alpha[" + std::to_string(i) + "]");
    if (row.size() != r)
      throw ConfigError(path + ".alpha[" + std::to_string(i) + "]", "expected " + std::to_string(r) + " entries");
    for (std::size_t j = 0; j < r; ++j) alpha(i, j) = row[j];
  }

  ModelParams p;
  p.n = n;
  try {
    p.dist = ClassDistribution(mu);
  } catch (const InvalidParameter& e) {
    throw ConfigError(path + ".mu", e.what());
  }
  try {
    p.keys = KeyProfile(ks, static_cast<std::uint32_t>(pool));
  } catch (const InvalidParameter& e) {
    throw ConfigError(path + ".K", e.what());
  }
  try {
    p.channel = ChannelMatrix(alpha);
  } catch (const InvalidParameter& e) {
    throw ConfigError(path + ".alpha", e.what());
  }
  try {
    p.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError(path, e.what());
  }
  return p;
}

// "K2=K1+5, K3=K1+12" -> offsets {0, 5, 12}.
inline std::vector<std::uint32_t> parse_linked_rule(const std::string& rule, std::size_t r,
                                                    const std::string& path) {
  std::vector<std::optional<std::uint32_t>> offsets(r);
  offsets[0] = 0;
  static const std::regex term(R"(\s*K(\d+)\s*=\s*K1\s*(?:\+\s*(\d+))?\s*)");
  std::size_t start = 0;
  while (start <= rule.size()) {
    const std::size_t comma = rule.find(',', start);
    const std::string piece = rule.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    std::smatch match;
    if (!std::regex_match(piece, match, term))
      throw ConfigError(path, "cannot parse rule term '" + piece + "' (expected e.g. K2=K1+5)");
    const std::size_t cls = std::stoul(match[1]);
    if (cls < 2 || cls > r) throw ConfigError(path, "class index K" + std::to_string(cls) + " out of range");
    offsets[cls - 1] = match[2].matched ? static_cast<std::uint32_t>(std::stoul(match[2])) : 0u;
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < r; ++i) {
    if (!offsets[i]) throw ConfigError(path, "no rule for K" + std::to_string(i + 1));
    out.push_back(*offsets[i]);
  }
  return out;
}

inline std::string format_linked_rule(const std::vector<std::uint32_t>& offsets) {
  std::string out;
  for (std::size_t i = 1; i < offsets.size(); ++i) {
    if (!out.empty()) out += ", ";
    out += "K" + std::to_string(i + 1) + "=K1+" + std::to_string(offsets[i]);
  }
  return out;
}

inline SweepConfig parse_sweep(const json& obj, const ModelParams& model, const std::string& path) {
  reject_unknown(obj, path, {"axis", "values", "range", "step", "linked_rule", "points"});
  const json& axis_json = require(obj, path, "axis");
  if (!axis_json.is_string()) throw ConfigError(path + ".axis", "expected a string");
  const std::string axis = axis_json.get<std::string>();
  const std::size_t r = model.classes();

  SweepConfig out;
  static const std::regex alpha_entry(R"(alpha_(\d)(\d))");
  std::smatch match;
  if (axis == "K1") {
    out.axis.kind = SweepAxis::KeyRingK1;
    if (obj.contains("linked_rule")) {
      if (!obj["linked_rule"].is_string()) throw ConfigError(path + ".linked_rule", "expected a string");
      out.axis.k_offsets = r == 1 ? std::vector<std::uint32_t>{0}
                                  : parse_linked_rule(obj["linked_rule"].get<std::string>(), r,
                                                      path + ".linked_rule");
    } else {
      // Keep the base profile's gaps to K1.
      for (std::size_t i = 0; i < r; ++i)
        out.axis.k_offsets.push_back(model.keys.ring_size(i) - model.keys.ring_size(0));
    }
  } else if (std::regex_match(axis, match, alpha_entry)) {
    out.axis.kind = SweepAxis::AlphaEntry;
    out.axis.row = std::stoul(match[1]) - 1;
    out.axis.col = std::stoul(match[2]) - 1;
    if (match[1] == "0" || match[2] == "0" || out.axis.row >= r || out.axis.col >= r)
      throw ConfigError(path + ".axis", "alpha entry out of range for r=" + std::to_string(r));
  } else if (axis == "alpha_diag") {
    out.axis.kind = SweepAxis::AlphaDiagonal;
  } else if (axis == "explicit") {
    out.axis.kind = SweepAxis::Explicit;
  } else {
    throw ConfigError(path + ".axis", "unknown axis '" + axis + "' (K1, alpha_ij, alpha_diag, explicit)");
  }
  if (obj.contains("linked_rule") && out.axis.kind != SweepAxis::KeyRingK1)
    throw ConfigError(path + ".linked_rule", "only valid for axis K1");

  if (out.axis.kind == SweepAxis::Explicit) {
    if (obj.contains("values") || obj.contains("range") || obj.contains("step"))
      throw ConfigError(path, "explicit sweeps take 'points' only");
    const json& points = require(obj, path, "points");
    if (!points.is_array() || points.empty()) throw ConfigError(path + ".points", "expected a non-empty array");
    for (std::size_t i = 0; i < points.size(); ++i) {
      out.explicit_points.push_back(parse_model(points[i], path + ".points[" + std::to_string(i) + "]"));
      out.values.push_back(static_cast<double>(i));
    }
    return out;
  }
  if (obj.contains("points")) throw ConfigError(path + ".points", "only valid for axis explicit");

  if (obj.contains("values")) {
    if (obj.contains("range") || obj.contains("step"))
      throw ConfigError(path, "give either 'values' or 'range'+'step', not both");
    out.values = number_array(obj["values"], path + ".values");
  } else if (obj.contains("range")) {
    const auto range = number_array(obj["range"], path + ".range");
    if (range.size() != 2) throw ConfigError(path + ".range", "expected [start, stop]");
    const double step = as_number(require(obj, path, "step"), path + ".step");
    if (!(step > 0.0)) throw ConfigError(path + ".step", "must be positive");
    if (range[1] < range[0]) throw ConfigError(path + ".range", "stop is below start");
    const auto count = static_cast<std::size_t>(std::floor((range[1] - range[0]) / step + 1e-9)) + 1;
    for (std::size_t k = 0; k < count; ++k) {
      // Snap to 12 significant digits so 0.1-style steps print and compare cleanly.
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.12g", range[0] + static_cast<double>(k) * step);
      out.values.push_back(std::strtod(buf, nullptr));
    }
  } else {
    throw ConfigError(path + ".values", "missing (or give 'range' and 'step')");
  }
  if (out.values.empty()) throw ConfigError(path + ".values", "sweep has no values");
  return out;
}

inline RunConfig parse_run(const json& obj, const std::string& path) {
  reject_unknown(obj, path, {"trials", "master_seed", "workers", "output_path"});
  RunConfig run;
  if (obj.contains("trials")) run.trials = as_unsigned(obj["trials"], path + ".trials");
  if (run.trials == 0) throw ConfigError(path + ".trials", "must be >= 1");
  if (obj.contains("master_seed")) run.master_seed = as_unsigned(obj["master_seed"], path + ".master_seed");
  if (obj.contains("workers")) run.workers = as_unsigned(obj["workers"], path + ".workers");
  if (run.workers == 0) throw ConfigError(path + ".workers", "must be >= 1");
  if (obj.contains("output_path")) {
    if (!obj["output_path"].is_string()) throw ConfigError(path + ".output_path", "expected a string");
    run.output_path = obj["output_path"].get<std::string>();
  }
  return run;
}

inline json model_to_json(const ModelParams& p) {
  json alpha = json::array();
  for (std::size_t i = 0; i < p.classes(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < p.classes(); ++j) row.push_back(p.channel(i, j));
    alpha.push_back(row);
  }
  return json{{"n", p.n},
              {"r", p.classes()},
              {"mu", std::vector<double>(p.dist.probs().begin(), p.dist.probs().end())},
              {"K", std::vector<std::uint32_t>(p.keys.ring_sizes().begin(), p.keys.ring_sizes().end())},
              {"P", p.keys.pool_size()},
              {"alpha", alpha}};
}

}  // namespace config_detail

inline Config parse_config(const nlohmann::json& doc) {
  using namespace config_detail;
  reject_unknown(doc, "config", {"model", "sweep", "run"});
  Config cfg;
  cfg.model = parse_model(require(doc, "config", "model"), "model");
  if (doc.contains("sweep")) cfg.sweep = parse_sweep(doc["sweep"], cfg.model, "sweep");
  if (doc.contains("run")) cfg.run = parse_run(doc["run"], "run");
  if (cfg.sweep) {
    try {
      cfg.experiment().validate();
    } catch (const InvalidParameter& e) {
      throw ConfigError("sweep.values", e.what());
    }
  }
  return cfg;
}

inline Config parse_config_text(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

inline nlohmann::json to_json(const Config& cfg) {
  using namespace config_detail;
  json doc;
  doc["model"] = model_to_json(cfg.model);
  if (cfg.sweep) {
    const auto& s = *cfg.sweep;
    json sweep{{"axis", s.axis.name()}};
    if (s.axis.kind == SweepAxis::Explicit) {
      json points = json::array();
      for (const auto& p : s.explicit_points) points.push_back(model_to_json(p));
      sweep["points"] = points;
    } else {
      sweep["values"] = s.values;
    }
    if (s.axis.kind == SweepAxis::KeyRingK1 && s.axis.k_offsets.size() > 1)
      sweep["linked_rule"] = format_linked_rule(s.axis.k_offsets);
    doc["sweep"] = sweep;
  }
  json run{{"trials", cfg.run.trials}, {"master_seed", cfg.run.master_seed}, {"workers", cfg.run.workers}};
  if (!cfg.run.output_path.empty()) run["output_path"] = cfg.run.output_path;
  doc["run"] = run;
  return doc;
}

}  // namespace hetkey
