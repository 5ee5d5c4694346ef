#include "common.hpp"

using namespace r3dla;
using namespace r3dla::tools;

int main(int argc, char** argv) {
  CLI::App app{"skeleton generator"};
  app.require_subcommand(1);

  std::string program, workload, out;
  std::vector<std::string> params;
  std::uint64_t seed = 1, train_limit = 1'000'000;
  auto* build = app.add_subcommand("build", "profile a program and emit six skeleton versions");
  auto* src = build->add_option_group("source");
  src->add_option("--program", program, "assembly file");
  src->add_option("--workload", workload, "built-in workload name");
  src->require_option(1);
  build->add_option("--param", params, "workload parameter key=value (repeatable)");
  build->add_option("--seed", seed);
  build->add_option("--train-limit", train_limit, "instructions in the training run");
  build->add_option("--out,-o", out, "skeleton JSON (default stdout)");

  if (int rc = parse_cli(app, argc, argv); rc >= 0) return rc;

  return guarded([&] {
    nlohmann::json cfg;
    if (!program.empty()) {
      cfg["workload"] = {{"program", program}};
    } else {
      cfg["workload"] = {{"kind", workload}, {"seed", seed}, {"params", nlohmann::json::object()}};
      for (const auto& kv : params) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--param", "expected key=value, got '" + kv + "'");
        try {
          cfg["workload"]["params"][kv.substr(0, eq)] = std::stoll(kv.substr(eq + 1));
        } catch (const std::logic_error&) {
          throw ConfigError("--param", "value of '" + kv.substr(0, eq) + "' is not an integer");
        }
      }
    }
    cfg["limit"] = train_limit;
    auto c = parse_config(cfg, std::filesystem::current_path());
    auto p = load_program(c);
    auto s = build_skeleton(p, c);
    emit(skeleton_to_json(s).dump(2) + "\n", out);
    for (int v = 0; v < kSkeletonVersions; ++v)
      std::cerr << "v" << v << ": " << s.version(v).count() << "/" << p.size() << " instructions\n";
  });
}
