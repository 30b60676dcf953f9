#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "softlfd/cli.hpp"

namespace {

using softlfd::PipelineConfig;

/// Optional overrides shared by the commands; applied on top of --config.
struct Tunables {
  std::optional<std::string> config;
  std::optional<double> lambda, gamma, alpha, servo_step, track_tolerance;
  std::optional<std::size_t> window, max_steps;
  std::vector<double> start_offset;
  bool no_projection = false;

  void add_to(CLI::App& app, bool transport, bool rollout) {
    app.add_option("--config", config, "Run configuration file (JSON)");
    if (transport) {
      app.add_option("--lambda", lambda, "Kernel ridge regularization")->check(CLI::NonNegativeNumber);
      app.add_flag("--no-projection", no_projection, "Fit on the raw source keypoints");
    }
    if (rollout) {
      app.add_option("--alpha", alpha, "Follower gain in (0, 1]");
      app.add_option("--gamma", gamma, "Time weight of the attractor metric")->check(CLI::NonNegativeNumber);
      app.add_option("--window", window, "Attractor search window (samples)")->check(CLI::PositiveNumber);
      app.add_option("--max-steps", max_steps, "Follower step budget")->check(CLI::PositiveNumber);
      app.add_option("--servo-step", servo_step, "Servo increment per step (rad)");
      app.add_option("--track-tolerance", track_tolerance, "Final position tolerance (m)");
      app.add_option("--start-offset", start_offset, "Follower start offset x y z (m)")->expected(3);
    }
  }

  PipelineConfig resolve() const {
    PipelineConfig c = config ? softlfd::cli::load_config(*config) : PipelineConfig{};
    if (lambda) c.regularization = *lambda;
    if (no_projection) c.projection = false;
    if (alpha) c.follower.gain = *alpha;
    if (gamma) c.policy.time_weight = *gamma;
    if (window) c.policy.window = *window;
    if (max_steps) c.max_steps = *max_steps;
    if (servo_step) c.follower.servo_step = *servo_step;
    if (track_tolerance) c.follower.track_tolerance = *track_tolerance;
    if (start_offset.size() == 3) c.start_offset = {start_offset[0], start_offset[1], start_offset[2]};
    softlfd::cli::validate(c);
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  namespace cli = softlfd::cli;
  CLI::App app{"One-shot skill transport and replay for a hybrid rigid/soft manipulator"};
  app.require_subcommand(1);

  cli::SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write demonstration and keypoint files for a scenario");
  synth_cmd->add_option("--scenario", synth.scenario, "Builtin scenario name or scenario file")->required();
  synth_cmd->add_option("--out", synth.out_dir, "Output directory")->required();
  synth_cmd->add_option("--variant", synth.variant, "Target variant index");

  cli::TransportOptions transport;
  Tunables transport_tun;
  std::string transport_report;
  auto* transport_cmd = app.add_subcommand("transport", "Generalize a demonstration to new keypoints");
  transport_cmd->add_option("--demo", transport.demo, "Demonstration file")->required();
  transport_cmd->add_option("--source", transport.source, "Source keypoint file")->required();
  transport_cmd->add_option("--target", transport.target, "Target keypoint file")->required();
  transport_cmd->add_option("--out", transport.out, "Transported demonstration file")->required();
  transport_cmd->add_option("--report", transport_report, "Report file (default <out>.report.json)");
  transport_tun.add_to(*transport_cmd, true, false);

  cli::ExecuteOptions execute;
  Tunables execute_tun;
  auto* execute_cmd = app.add_subcommand("execute", "Replay a demonstration in the kinematic simulator");
  execute_cmd->add_option("--demo", execute.demo, "Transported demonstration file")->required();
  execute_cmd->add_option("--trace", execute.trace, "Trace output (JSON; CSV written alongside)")->required();
  execute_tun.add_to(*execute_cmd, false, true);

  cli::ReportOptions report;
  Tunables report_tun;
  std::string sweep;
  auto* report_cmd = app.add_subcommand("report", "Evaluate scenario variants and write a CSV table");
  report_cmd->add_option("--sweep", sweep, "Sweep configuration (default: all builtin scenarios)");
  report_cmd->add_option("--out", report.out, "CSV output")->required();
  report_tun.add_to(*report_cmd, true, true);

  CLI11_PARSE(app, argc, argv);

  return cli::guarded(std::cerr, [&] {
    if (*synth_cmd) return cli::cmd_synth(synth, std::cout, std::cerr);
    if (*transport_cmd) {
      transport.config = transport_tun.resolve();
      if (!transport_report.empty()) transport.report = transport_report;
      return cli::cmd_transport(transport, std::cout, std::cerr);
    }
    if (*execute_cmd) {
      execute.config = execute_tun.resolve();
      return cli::cmd_execute(execute, std::cout, std::cerr);
    }
    report.config = report_tun.resolve();
    if (!sweep.empty()) report.sweep = sweep;
    return cli::cmd_report(report, std::cout, std::cerr);
  });
}
