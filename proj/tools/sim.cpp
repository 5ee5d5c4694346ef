#include "common.hpp"

using namespace r3dla;
using namespace r3dla::tools;

int main(int argc, char** argv) {
  CLI::App app{"r3dla cycle-level simulator"};
  app.require_subcommand(1);

  std::string config, out;
  auto* run = app.add_subcommand("run", "run one configuration and write a JSON report");
  run->add_option("--config,config", config, "run config (JSON)")->required();
  run->add_option("--out,-o", out, "report path (default: config 'output' field, else stdout)");

  std::vector<std::string> configs;
  bool force = false;
  auto* cmp = app.add_subcommand("compare", "run several configs and print a CSV normalized to the first");
  cmp->add_option("--configs", configs, "config files")->required()->expected(2, -1);
  cmp->add_flag("--force", force, "allow configs with different workloads");
  cmp->add_option("--out,-o", out, "CSV path (default stdout)");

  std::string param;
  std::vector<std::int64_t> values;
  auto* sweep = app.add_subcommand("sweep", "vary one numeric parameter");
  sweep->add_option("--config", config)->required();
  sweep->add_option("--param", param, "dotted config path, or fetch_buffer_capacity")->required();
  sweep->add_option("--values", values)->required()->delimiter(',');
  sweep->add_option("--out,-o", out);

  auto* ablate = app.add_subcommand("ablate", "per-feature speedup applied first and last");
  ablate->add_option("--config", config)->required();
  ablate->add_option("--out,-o", out);

  if (int rc = parse_cli(app, argc, argv); rc >= 0) return rc;

  return guarded([&] {
    if (*run) {
      auto cfg = load_config(config);
      auto r = run_experiment(cfg);
      auto path = !out.empty() ? out : cfg.output.empty() ? std::string{} : resolve(cfg, cfg.output).string();
      emit(r.report.dump(2) + "\n", path);
    } else if (*cmp) {
      std::vector<ExperimentConfig> cfgs;
      for (const auto& c : configs) cfgs.push_back(load_config(c));
      std::vector<ExperimentResult> runs;
      for (const auto& c : cfgs) runs.push_back(run_experiment(c));
      std::vector<std::string> names;
      for (const auto& c : configs) names.push_back(std::filesystem::path(c).stem().string());
      emit(compare_csv(names, runs, force), out);
    } else if (*sweep) {
      emit(sweep_csv(load_config(config), param, values), out);
    } else if (*ablate) {
      emit(ablate_csv(load_config(config)), out);
    }
  });
}
