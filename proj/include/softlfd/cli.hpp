#pragma once

// Command implementations behind the `softlfd` executable. Each command
// returns a process exit code and writes human-readable progress to `out`
// and errors to `err`; argument parsing lives in tools/softlfd.cpp.

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "softlfd/demonstration.hpp"
#include "softlfd/errors.hpp"
#include "softlfd/json_io.hpp"
#include "softlfd/pipeline.hpp"
#include "softlfd/scenarios.hpp"
#include "softlfd/simulation.hpp"
#include "softlfd/transport.hpp"

namespace softlfd::cli {

namespace fs = std::filesystem;

/// Validates every numeric parameter of `config`; throws ConfigError.
inline void validate(const PipelineConfig& config) {
  auto check = [](bool ok, const char* msg) {
    if (!ok) throw ConfigError(msg);
  };
  check(config.regularization >= 0.0 && std::isfinite(config.regularization), "lambda must be finite and >= 0");
  check(config.policy.time_weight >= 0.0 && std::isfinite(config.policy.time_weight), "gamma must be finite and >= 0");
  check(config.policy.window >= 1, "window must be >= 1");
  check(config.follower.gain > 0.0 && config.follower.gain <= 1.0, "alpha must be in (0, 1]");
  check(config.follower.servo_step > 0.0 && std::isfinite(config.follower.servo_step), "servo_step must be > 0");
  check(config.follower.track_tolerance > 0.0 && std::isfinite(config.follower.track_tolerance),
        "track_tolerance must be > 0");
  check(config.max_steps >= 1, "max_steps must be >= 1");
  check(config.start_offset.allFinite(), "start_offset must be finite");
}

/// Run configuration file: a JSON object with any of lambda, gamma, window,
/// alpha, servo_step, track_tolerance, max_steps, start_offset, projection.
/// Missing keys keep their defaults; unknown keys are rejected.
inline PipelineConfig config_from_json(const json_io::json& doc, PipelineConfig config = {}) {
  using namespace json_io;
  if (!doc.is_object()) throw ConfigError("run configuration must be a JSON object");
  for (const auto& item : doc.items()) {
    const std::string& key = item.key();
    const json& v = item.value();
    try {
      if (key == "lambda") {
        config.regularization = as_number(v, key);
      } else if (key == "gamma") {
        config.policy.time_weight = as_number(v, key);
      } else if (key == "window") {
        if (!v.is_number_unsigned()) throw ConfigError("window must be a positive integer");
        config.policy.window = v.get<std::size_t>();
      } else if (key == "alpha") {
        config.follower.gain = as_number(v, key);
      } else if (key == "servo_step") {
        config.follower.servo_step = as_number(v, key);
      } else if (key == "track_tolerance") {
        config.follower.track_tolerance = as_number(v, key);
      } else if (key == "max_steps") {
        if (!v.is_number_unsigned()) throw ConfigError("max_steps must be a positive integer");
        config.max_steps = v.get<std::size_t>();
      } else if (key == "start_offset") {
        config.start_offset = as_vector<3>(v, key);
      } else if (key == "projection") {
        if (!v.is_boolean()) throw ConfigError("projection must be a boolean");
        config.projection = v.get<bool>();
      } else {
        throw ConfigError("unknown configuration key '" + key + "'");
      }
    } catch (const ParseError& e) {
      throw ConfigError(e.what());
    }
  }
  validate(config);
  return config;
}

inline PipelineConfig load_config(const fs::path& path) {
  try {
    return config_from_json(json_io::read_file(path));
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
}

/// Runs `body`, mapping library errors to exit code 1 with a typed message.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

// --- synth -----------------------------------------------------------------

struct SynthOptions {
  std::string scenario;  // builtin name or path to a scenario file
  fs::path out_dir;
  std::size_t variant = 0;
};

inline Scenario resolve_scenario(const std::string& name_or_path) {
  if (name_or_path.ends_with(".json") || fs::is_regular_file(name_or_path)) {
    return load_scenario(name_or_path);
  }
  return builtin_scenario(name_or_path);
}

/// Writes demo.json, source.json and target.json for one scenario variant.
inline int cmd_synth(const SynthOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Scenario scenario = resolve_scenario(opt.scenario);
    if (opt.variant >= scenario.variants.size()) {
      throw InvalidScenario(scenario.name + " has " + std::to_string(scenario.variants.size()) +
                            " variants; requested " + std::to_string(opt.variant));
    }
    std::error_code ec;
    fs::create_directories(opt.out_dir, ec);
    if (ec) throw IoError("cannot create '" + opt.out_dir.string() + "': " + ec.message());
    save_demonstration(synthesize_demonstration(scenario.demo), opt.out_dir / "demo.json");
    save_keypoints(scenario.source_set(), opt.out_dir / "source.json");
    save_keypoints(scenario.target_set(opt.variant), opt.out_dir / "target.json");
    out << "wrote " << scenario.name << " (variant " << scenario.variants[opt.variant].name
        << ") to " << opt.out_dir.string() << '\n';
    return 0;
  });
}

// --- transport -------------------------------------------------------------

struct TransportOptions {
  fs::path demo, source, target, out;
  std::optional<fs::path> report;  // default: <out>.report.json
  PipelineConfig config;
};

inline fs::path default_report_path(const fs::path& out) {
  fs::path p = out;
  p.replace_extension(".report.json");
  return p;
}

inline json_io::json transport_report_json(const GeneralizationResult& gen, bool projection) {
  using json_io::json;
  using json_io::to_json;
  json keypoints = json::array();
  for (std::size_t i = 0; i < gen.residuals.size(); ++i) {
    keypoints.push_back({{"shift", to_json(gen.projection.shifts[i])},
                         {"sample_index", gen.projection.indices[i]},
                         {"projected_source", to_json(gen.projection.projected_source[i])},
                         {"shifted_target", to_json(gen.projection.shifted_target[i])},
                         {"residual", gen.residuals[i]}});
  }
  return {{"projection", projection},
          {"regularization", gen.map.regularization()},
          {"keypoints", std::move(keypoints)},
          {"warnings", gen.warnings}};
}

inline int cmd_transport(const TransportOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    validate(opt.config);
    const Demonstration demo = load_demonstration(opt.demo);
    const KeypointSet source = load_keypoints(opt.source, KeypointRole::kSource);
    const KeypointSet target = load_keypoints(opt.target, KeypointRole::kTarget);
    const GeneralizationResult gen =
        generalize(demo, source, target, opt.config.regularization, opt.config.projection);
    save_demonstration(gen.transported, opt.out);
    const fs::path report = opt.report.value_or(default_report_path(opt.out));
    json_io::write_file(report, transport_report_json(gen, opt.config.projection), 2);
    for (const auto& w : gen.warnings) err << "warning: " << w << '\n';
    double worst = 0.0;
    for (double r : gen.residuals) worst = std::max(worst, r);
    out << "transported " << demo.size() << " samples with " << source.size()
        << " keypoints; max residual " << worst << " m\n";
    return 0;
  });
}

// --- execute ---------------------------------------------------------------

struct ExecuteOptions {
  fs::path demo;
  fs::path trace;  // JSON; the CSV goes next to it with a .csv extension
  PipelineConfig config;
};

inline void write_trace(const SimTrace& trace, const fs::path& json_path) {
  json_io::write_file(json_path, trace_to_json(trace));
  fs::path csv = json_path;
  csv.replace_extension(".csv");
  json_io::write_text(csv, trace_to_csv(trace));
}

inline int cmd_execute(const ExecuteOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    validate(opt.config);
    // Transported files may be stretched up to twice the recording limit.
    const Demonstration demo = load_demonstration(opt.demo, 2.0 * kDefaultJumpLimit);
    try {
      const SimTrace trace =
          run_rollout(demo, opt.config.policy, opt.config.follower, opt.config.max_steps,
                      start_state(demo, opt.config.start_offset), opt.demo.stem().string());
      write_trace(trace, opt.trace);
      out << "done: true, steps: " << trace.records.size() << ", final error: " << trace.final_error
          << " m\n";
      return 0;
    } catch (const DidNotConverge& e) {
      write_trace(e.trace(), opt.trace);
      out << "done: false, steps: " << e.trace().records.size()
          << ", final error: " << e.trace().final_error << " m\n";
      throw;
    }
  });
}

// --- report ----------------------------------------------------------------

struct SweepEntry {
  Scenario scenario;
  std::vector<std::size_t> variants;
};

/// {"scenarios": [{"name": "stacking", "variants": [0, 2]}, {"file": "x.json"}]}
/// Omitted "variants" means all of them.
inline std::vector<SweepEntry> sweep_from_json(const json_io::json& doc, const fs::path& base_dir) {
  using namespace json_io;
  if (!doc.is_object()) throw ConfigError("sweep configuration must be a JSON object");
  try {
    reject_unknown_keys(doc, {"scenarios"}, "sweep configuration");
    const json& list = require_key(doc, "scenarios", "sweep configuration");
    if (!list.is_array()) throw ConfigError("scenarios must be an array");
    std::vector<SweepEntry> entries;
    for (const auto& item : list) {
      require_object(item, "sweep entry");
      reject_unknown_keys(item, {"name", "file", "variants"}, "sweep entry");
      SweepEntry entry;
      if (item.contains("name") == item.contains("file")) {
        throw ConfigError("sweep entry needs exactly one of 'name' or 'file'");
      }
      if (item.contains("name")) {
        entry.scenario = builtin_scenario(item["name"].get<std::string>());
      } else {
        fs::path p = item["file"].get<std::string>();
        entry.scenario = load_scenario(p.is_absolute() ? p : base_dir / p);
      }
      if (item.contains("variants")) {
        for (const auto& v : item["variants"]) {
          if (!v.is_number_unsigned() || v.get<std::size_t>() >= entry.scenario.variants.size()) {
            throw ConfigError("invalid variant index for scenario '" + entry.scenario.name + "'");
          }
          entry.variants.push_back(v.get<std::size_t>());
        }
      } else {
        for (std::size_t v = 0; v < entry.scenario.variants.size(); ++v) entry.variants.push_back(v);
      }
      entries.push_back(std::move(entry));
    }
    return entries;
  } catch (const json_io::json::exception& e) {
    throw ConfigError(std::string("sweep configuration: ") + e.what());
  }
}

inline std::vector<SweepEntry> builtin_sweep() {
  std::vector<SweepEntry> entries;
  for (auto& s : builtin_scenarios()) {
    SweepEntry e{std::move(s), {}};
    for (std::size_t v = 0; v < e.scenario.variants.size(); ++v) e.variants.push_back(v);
    entries.push_back(std::move(e));
  }
  return entries;
}

inline const char* kReportHeader =
    "scenario,variant,status,keypoints,max_residual,max_shift,min_dist_transported,"
    "min_dist_original,max_rotation_error,converged,steps,final_error,warnings,error\n";

inline std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string report_row(const ScenarioReport& r, bool failed) {
  using detail::fmt_double;
  auto joined = [&](auto field) {
    std::string s;
    for (std::size_t i = 0; i < r.keypoints.size(); ++i) {
      if (i) s += ';';
      s += fmt_double(field(r.keypoints[i]));
    }
    return s;
  };
  double max_shift = 0.0;
  for (const auto& k : r.keypoints) max_shift = std::max(max_shift, k.shift.norm());
  std::string warnings;
  for (std::size_t i = 0; i < r.warnings.size(); ++i) warnings += (i ? " | " : "") + r.warnings[i];
  std::ostringstream os;
  os << r.scenario << ',' << r.variant << ',' << (failed ? "failed" : (r.warnings.empty() ? "ok" : "warning"))
     << ',' << r.keypoints.size() << ',' << fmt_double(r.max_residual) << ',' << fmt_double(max_shift)
     << ',' << joined([](const KeypointReport& k) { return k.min_distance_transported; }) << ','
     << joined([](const KeypointReport& k) { return k.min_distance_original; }) << ','
     << fmt_double(r.max_rotation_error) << ',' << (r.converged ? "true" : "false") << ',' << r.steps
     << ',' << fmt_double(r.final_error) << ',' << csv_quote(warnings) << ',' << csv_quote(r.error)
     << '\n';
  return os.str();
}

/// One CSV row per scenario variant, in sweep order.
inline std::string run_sweep(const std::vector<SweepEntry>& sweep, const PipelineConfig& config,
                             bool& any_failed) {
  std::string csv = kReportHeader;
  any_failed = false;
  for (const auto& entry : sweep) {
    for (std::size_t v : entry.variants) {
      ScenarioReport report;
      bool failed = false;
      try {
        report = evaluate_scenario(entry.scenario, v, config);
        failed = report.failed(entry.scenario.tolerances);
      } catch (const ScenarioFailure& e) {
        report = e.partial_report();
        failed = true;
      }
      any_failed = any_failed || failed;
      csv += report_row(report, failed);
    }
  }
  return csv;
}

struct ReportOptions {
  std::optional<fs::path> sweep;  // default: every builtin scenario and variant
  fs::path out;
  PipelineConfig config;
};

inline int cmd_report(const ReportOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    validate(opt.config);
    const auto sweep = opt.sweep ? sweep_from_json(json_io::read_file(*opt.sweep), opt.sweep->parent_path())
                                 : builtin_sweep();
    bool any_failed = false;
    const std::string csv = run_sweep(sweep, opt.config, any_failed);
    json_io::write_text(opt.out, csv);
    std::size_t rows = 0;
    for (const auto& e : sweep) rows += e.variants.size();
    out << "wrote " << rows << " rows to " << opt.out.string() << (any_failed ? " (failures flagged)" : "")
        << '\n';
    return any_failed ? 1 : 0;
  });
}

}  // namespace softlfd::cli
