#include <iomanip>

#include "common.hpp"
#include "r3dla/fetchq.hpp"

using namespace r3dla;
using namespace r3dla::tools;

namespace {

// Accepts {"lo": k, "p": [...]} or a bare probability array starting at 0.
Distribution read_distribution(const std::string& path) {
  auto j = read_json_file(path);
  Distribution d;
  try {
    if (j.is_array()) {
      d.p = j.get<std::vector<double>>();
    } else {
      d.lo = j.value("lo", 0);
      d.p = j.at("p").get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path, e.what());
  }
  try {
    d.check(1e-6);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
  return d;
}

nlohmann::json to_json(const Distribution& d) { return {{"lo", d.lo}, {"p", d.p}}; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fetch-buffer occupancy model"};
  app.require_subcommand(1);

  std::string demand, supply, sweep = "4:64", out;
  auto* analyze_cmd = app.add_subcommand("analyze", "steady-state occupancy and expected bubbles per capacity");
  analyze_cmd->add_option("--demand", demand)->required();
  analyze_cmd->add_option("--supply", supply)->required();
  analyze_cmd->add_option("--capacity-sweep", sweep, "lo:hi");
  analyze_cmd->add_option("--out,-o", out);

  std::string report, supply_report;
  std::size_t decode_width = 4, fetch_width = 16;
  auto* harvest = app.add_subcommand("harvest", "extract demand/supply distributions from run reports");
  harvest->add_option("--report", report, "report with the demand histogram")->required();
  harvest->add_option("--supply-report", supply_report, "report with the supply histogram (default: --report)");
  harvest->add_option("--decode-width", decode_width);
  harvest->add_option("--fetch-width", fetch_width);
  harvest->add_option("--out,-o", out);
  std::string demand_out, supply_out;
  harvest->add_option("--demand-out", demand_out, "also write the demand distribution alone");
  harvest->add_option("--supply-out", supply_out, "also write the supply distribution alone");

  if (int rc = parse_cli(app, argc, argv); rc >= 0) return rc;

  return guarded([&] {
    if (*analyze_cmd) {
      auto D = read_distribution(demand), S = read_distribution(supply);
      auto colon = sweep.find(':');
      std::size_t lo = 0, hi = 0;
      try {
        lo = std::stoul(sweep.substr(0, colon));
        hi = colon == std::string::npos ? lo : std::stoul(sweep.substr(colon + 1));
      } catch (const std::logic_error&) {
        throw ConfigError("--capacity-sweep", "expected lo:hi");
      }
      if (lo < 1 || hi < lo) throw ConfigError("--capacity-sweep", "need 1 <= lo <= hi");
      std::ostringstream os;
      os << std::setprecision(10) << "N,E_FB,Q_ss\n";
      for (auto n = lo; n <= hi; ++n) {
        auto m = analyze(D, S, n);
        os << n << "," << expected_bubbles(m.steady, D) << ",";
        for (std::size_t i = 0; i < m.steady.size(); ++i) os << (i ? ";" : "") << m.steady[i];
        os << "\n";
      }
      emit(os.str(), out);
    } else if (*harvest) {
      auto r = read_json_file(report);
      auto s = supply_report.empty() ? r : read_json_file(supply_report);
      Harvest h;
      try {
        h = harvest_distributions(r, s, decode_width, fetch_width);
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(report, std::string("not a run report: ") + e.what());
      }
      if (!demand_out.empty()) emit(to_json(h.demand).dump() + "\n", demand_out);
      if (!supply_out.empty()) emit(to_json(h.supply).dump() + "\n", supply_out);
      emit(nlohmann::json{{"demand", to_json(h.demand)}, {"supply", to_json(h.supply)}}.dump(2) + "\n", out);
    }
  });
}
