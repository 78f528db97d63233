#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "repacc/commands.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"repacc: behavioral-specification experiment pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string workspace = ".";
  std::string config_path;
  std::string run_id, subjects, conditions, panel, fixture, report = "both", out_dir = ".";
  std::optional<std::uint64_t> seed_derangement, seed_bootstrap, seed_permutation;
  std::optional<std::size_t> cell_limit, iterations;
  bool no_resume = false;
  bool quiet = false;

  app.add_option("--workspace,-w", workspace, "Workspace root");
  app.add_option("--config,-c", config_path, "Run config JSON");
  app.add_option("--run-id", run_id, "Override the config run_id");
  app.add_option("--subjects", subjects, "Comma-separated subject ids");
  app.add_option("--conditions", conditions, "Comma-separated condition codes");
  app.add_option("--panel", panel, "Comma-separated primary judge ids");
  app.add_option("--seed-derangement", seed_derangement);
  app.add_option("--seed-bootstrap", seed_bootstrap);
  app.add_option("--seed-permutation", seed_permutation);
  app.add_flag("--quiet,-q", quiet);

  auto* pipeline = app.add_subcommand("pipeline", "Build spec artifacts for subjects");
  auto* battery = app.add_subcommand("battery", "Generate and freeze question batteries");
  auto* run = app.add_subcommand("run", "Answer batteries under each condition");
  run->add_flag("--no-resume,!--resume", no_resume, "Re-execute cells that already exist (--resume is the default)");
  run->add_option("--cell-limit", cell_limit, "Stop after this many executed cells");
  auto* judge = app.add_subcommand("judge", "Score responses with the judge panel");
  auto* stats = app.add_subcommand("stats", "Compute statistics and reports");
  stats->add_option("--fixture", fixture, "Analyze a shipped table (name or path) instead of a run");
  stats->add_option("--report", report, "Report formats")->check(CLI::IsMember({"json", "md", "both"}));
  stats->add_option("--out", out_dir, "Output directory for --fixture reports");
  stats->add_option("--iterations", iterations, "Resampling iterations for --fixture");
  auto* calibrate = app.add_subcommand("calibrate", "Run the judge calibration diagnostic");

  CLI11_PARSE(app, argc, argv);

  try {
    repacc::ReportFormats formats{report != "md", report != "json"};
    if (stats->parsed() && !fixture.empty()) {
      repacc::HeadlineOptions opts;
      if (iterations) opts.iterations = *iterations;
      if (seed_bootstrap) opts.bootstrap_seed = *seed_bootstrap;
      if (seed_permutation) opts.permutation_seed = *seed_permutation;
      const auto doc = repacc::cmd_stats_fixture(repacc::resolve_fixture(fixture), out_dir, opts, formats);
      if (!quiet) std::cout << doc.dump(2) << '\n';
      return repacc::kExitOk;
    }
    if (config_path.empty()) throw repacc::Error(repacc::Errc::InvalidArgument, "--config is required");
    auto ctx = repacc::load_context(workspace, config_path);
    if (!run_id.empty()) ctx.config.run_id = run_id;
    if (!panel.empty()) ctx.config.panel.primary = split_list(panel);
    if (seed_derangement) ctx.config.seed_derangement = *seed_derangement;
    if (seed_bootstrap) ctx.config.seed_bootstrap = *seed_bootstrap;
    if (seed_permutation) ctx.config.seed_permutation = *seed_permutation;
    if (!quiet) ctx.log = &std::cerr;

    repacc::RunRequest req;
    req.subjects = split_list(subjects);
    req.conditions = split_list(conditions);
    req.resume = !no_resume;
    req.cell_limit = cell_limit;
    const auto ids = req.subjects.empty() ? ctx.manifest().ids() : req.subjects;

    nlohmann::json out;
    int code = repacc::kExitOk;
    if (pipeline->parsed()) {
      for (const auto& id : ids) out[id] = repacc::cmd_pipeline(ctx, id);
    } else if (battery->parsed()) {
      for (const auto& id : ids) out[id] = repacc::cmd_battery(ctx, id);
    } else if (run->parsed()) {
      const auto ledger = repacc::cmd_run(ctx, req);
      out = ledger.to_json();
      for (const auto& c : ledger.cells)
        if (c.failed > 0) code = repacc::kExitProviderExhaustion;
    } else if (judge->parsed()) {
      out = repacc::cmd_judge(ctx, req);
    } else if (stats->parsed()) {
      out = repacc::cmd_stats(ctx, formats).at("provenance");
    } else if (calibrate->parsed()) {
      out = repacc::cmd_calibrate(ctx);
    }
    if (!quiet) std::cout << out.dump(2) << '\n';
    return code;
  } catch (const repacc::Error& e) {
    std::cerr << "error [" << repacc::errc_name(e.code()) << "]: " << e.what() << '\n';
    return repacc::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return repacc::kExitPrecondition;
  }
}
