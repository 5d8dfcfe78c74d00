// hgbench: runs the hypergradient experiment protocols and renders plots.

#include "hg/bench/config.hpp"
#include "hg/bench/experiments.hpp"
#include "hg/bench/svg_plot.hpp"
#include "hg/error.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct Common {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool no_timing = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output path; overrides out_path");
  cmd->add_option("--seed", c.seed, "seed; overrides the config");
  cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--no-timing", c.no_timing, "write wall_ms = 0 for byte-comparable output");
}

hg::bench::ExperimentConfig resolve(const Common& c) {
  hg::bench::ExperimentConfig cfg =
      c.config_path.empty() ? hg::bench::parse_config(nlohmann::json::object()) : hg::bench::load_config(c.config_path);
  if (!c.out.empty()) cfg.out_path = c.out;
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Approximate hypergradients for fixed-point bilevel problems"};
  app.require_subcommand(1);

  Common common;
  auto* approx = app.add_subcommand("approx-error", "hypergradient error vs t for each method");
  auto* bilevel = app.add_subcommand("bilevel", "hypergradient descent over a step-size grid");
  auto* bounds = app.add_subcommand("bounds", "measured errors against the theoretical bounds (BR)");
  auto* eqm = app.add_subcommand("eqm", "equilibrium-model training runs");
  for (auto* cmd : {approx, bilevel, bounds, eqm}) add_common(cmd, common);

  std::string csv_path;
  std::string svg_out;
  hg::bench::PlotSpec spec;
  std::string group_by;
  std::string facet;
  auto* plot = app.add_subcommand("plot", "render a CSV as an SVG line chart");
  plot->add_option("--csv", csv_path, "input CSV")->required();
  plot->add_option("--out", svg_out, "output SVG (facets append _<value>)")->required();
  plot->add_option("--x", spec.x, "x column")->required();
  plot->add_option("--y", spec.y, "y column")->required();
  plot->add_option("--group-by", group_by, "column whose values become lines");
  plot->add_option("--facet", facet, "column whose values become separate files");
  plot->add_option("--title", spec.title, "chart title");
  plot->add_flag("--log-y", spec.log_y, "logarithmic y axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "hgbench: " << e.what() << '\n';
    return 2;
  }

  try {
    std::vector<std::string> written;
    const hg::bench::RunOptions opts{common.threads, !common.no_timing};
    if (*approx) {
      written = hg::bench::cmd_approx_error(resolve(common), opts);
    } else if (*bilevel) {
      written = hg::bench::cmd_bilevel(resolve(common), opts);
    } else if (*bounds) {
      written = hg::bench::cmd_bounds(resolve(common), opts);
    } else if (*eqm) {
      written = hg::bench::cmd_eqm(resolve(common), opts);
    } else if (*plot) {
      if (!group_by.empty()) spec.group_by = group_by;
      if (!facet.empty()) spec.facet = facet;
      written = hg::bench::emit_plot(csv_path, spec, svg_out);
    }
    for (const auto& path : written) std::cout << path << '\n';
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& ch : msg) {
      if (ch == '\n') ch = ' ';
    }
    std::cerr << "hgbench: " << msg << '\n';
    return 1;
  }
  return 0;
}
