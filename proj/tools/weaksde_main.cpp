// weaksde run --config <path> [--out <dir>] [--threads N]
// weaksde plot --csv <path> [--csv <path> ...] --kind <loglog_error|hist_vs_density> [--out <svg>]

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>

#include "weaksde/errors.hpp"
#include "weaksde/experiment.hpp"
#include "weaksde/plot.hpp"

namespace {

int fail(const std::string& kind, const std::string& message, const std::string& key = {}) {
  nlohmann::json line{{"status", "error"}, {"kind", kind}, {"message", message}};
  if (!key.empty()) line["key"] = key;
  std::cerr << line.dump() << std::endl;
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weak SDE schemes and Langevin samplers: experiment runner"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment config");
  std::string config_path;
  std::string out_dir;
  int threads = -1;
  run->add_option("--config", config_path, "JSON experiment config")->required();
  run->add_option("--out", out_dir, "output directory (overrides output_dir)");
  run->add_option("--threads", threads, "worker threads (overrides threads; 0 = all cores)")->check(CLI::NonNegativeNumber);
  bool no_plots = false;
  run->add_flag("--no-plots", no_plots, "skip SVG rendering");

  auto* plot = app.add_subcommand("plot", "render an SVG from experiment CSVs");
  std::vector<std::string> csvs;
  std::string kind;
  std::string svg_out;
  plot->add_option("--csv", csvs, "CSV file(s); loglog_error draws one series per file")->required();
  plot->add_option("--kind", kind, "loglog_error or hist_vs_density")->required();
  plot->add_option("--out", svg_out, "SVG path (default: first CSV with .svg)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    if (run->parsed()) {
      weaksde::RunOptions opt;
      if (!out_dir.empty()) opt.output_dir = out_dir;
      if (threads >= 0) opt.threads = threads;
      opt.plots = !no_plots;
      const auto report = weaksde::run_config_file(config_path, opt);
      nlohmann::json line{{"status", "ok"},
                          {"report", (report.output_dir / "report.json").string()},
                          {"summary", report.summary},
                          {"runtime_seconds", report.runtime_seconds}};
      std::cout << line.dump() << std::endl;
    } else {
      std::vector<std::filesystem::path> paths(csvs.begin(), csvs.end());
      std::optional<std::filesystem::path> target;
      if (!svg_out.empty()) target = svg_out;
      const auto written = weaksde::emit_plot(paths, weaksde::plot_kind_from_string(kind), target);
      std::cout << nlohmann::json{{"status", "ok"}, {"svg", written.string()}}.dump() << std::endl;
    }
  } catch (const weaksde::ConfigError& e) {
    return fail(e.kind(), e.what(), e.key);
  } catch (const weaksde::Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
