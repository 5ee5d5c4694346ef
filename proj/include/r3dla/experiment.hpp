// Experiment configuration, orchestration and CSV summaries shared by the
// command-line tools.
#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "r3dla/assembler.hpp"
#include "r3dla/profile.hpp"
#include "r3dla/report.hpp"
#include "r3dla/workload.hpp"

namespace r3dla {

inline constexpr const char* kToolVersion = "0.3.0";

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& msg)
      : std::runtime_error(path.empty() ? msg : path + ": " + msg), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct WorkloadSpec {
  std::optional<WorkloadKind> kind;
  WorkloadParams params;
  std::uint64_t seed = 1;
  std::string program_path;
};

struct ExperimentConfig {
  WorkloadSpec workload;
  EngineOptions engine;
  bool dla = false;
  std::string skeleton = "auto";
  std::uint64_t train_limit = 0;  // 0: same as limit
  std::string output;
  std::filesystem::path base_dir;
  nlohmann::json raw;
};

namespace detail {

// Walks a JSON object, rejecting keys nobody asked for.
class Fields {
 public:
  Fields(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }
  ~Fields() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(sub(it.key()), "unknown field");
  }
  bool has(const std::string& k) const { return j_.contains(k); }
  std::string sub(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  const nlohmann::json& at(const std::string& k) {
    seen_.insert(k);
    return j_.at(k);
  }

  template <class T>
  void get(const std::string& k, T& out) {
    if (!has(k)) return;
    const auto& v = at(k);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(sub(k), "expected a boolean");
        out = v.get<bool>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError(sub(k), "expected an integer");
        if (std::is_unsigned_v<T> && v.get<std::int64_t>() < 0) throw ConfigError(sub(k), "must be non-negative");
        out = v.get<T>();
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError(sub(k), "expected a number");
        out = v.get<T>();
      } else {
        if (!v.is_string()) throw ConfigError(sub(k), "expected a string");
        out = v.get<T>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(sub(k), e.what());
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void parse_level(const nlohmann::json& j, const std::string& path, LevelConfig& l) {
  Fields f(j, path);
  f.get("size_bytes", l.size_bytes);
  f.get("assoc", l.assoc);
  f.get("line_size", l.line_size);
  f.get("hit_latency", l.hit_latency);
  f.get("mshrs", l.mshrs);
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = ".") {
  ExperimentConfig c;
  c.raw = j;
  c.base_dir = base_dir;
  auto& e = c.engine;
  detail::Fields top(j, "");

  if (!top.has("workload")) throw ConfigError("workload", "missing");
  {
    detail::Fields w(top.at("workload"), "workload");
    if (w.has("program")) {
      w.get("program", c.workload.program_path);
    } else {
      if (!w.has("kind")) throw ConfigError("workload.kind", "missing (or give workload.program)");
      std::string kind;
      w.get("kind", kind);
      c.workload.kind = workload_from_name(kind);
      if (!c.workload.kind) throw ConfigError("workload.kind", "unknown workload '" + kind + "'");
      if (w.has("params")) {
        const auto& pj = w.at("params");
        if (!pj.is_object()) throw ConfigError("workload.params", "expected an object");
        auto defaults = workload_defaults(*c.workload.kind);
        for (auto it = pj.begin(); it != pj.end(); ++it) {
          auto p = "workload.params." + it.key();
          if (!defaults.count(it.key())) throw ConfigError(p, "unknown parameter");
          if (!it.value().is_number_integer()) throw ConfigError(p, "expected an integer");
          c.workload.params[it.key()] = it.value().get<std::int64_t>();
        }
      }
    }
    w.get("seed", c.workload.seed);
  }

  std::string mode = "baseline";
  top.get("mode", mode);
  if (mode == "dla")
    c.dla = true;
  else if (mode != "baseline")
    throw ConfigError("mode", "expected 'baseline' or 'dla'");

  if (top.has("core")) {
    detail::Fields f(top.at("core"), "core");
    auto& k = e.core;
    f.get("fetch_width", k.fetch_width);
    f.get("decode_width", k.decode_width);
    f.get("issue_width", k.issue_width);
    f.get("commit_width", k.commit_width);
    f.get("window", k.window);
    f.get("mispredict_penalty", k.mispredict_penalty);
    f.get("fetch_buffer", k.fetch_buffer);
    f.get("btb_entries", k.btb_entries);
    f.get("btb_miss_penalty", k.btb_miss_penalty);
    f.get("lt_scan_width", k.lt_scan_width);
    f.get("alu_latency", k.alu_latency);
    f.get("mul_latency", k.mul_latency);
    f.get("replay_penalty", k.replay_penalty);
  }
  if (top.has("cache")) {
    detail::Fields f(top.at("cache"), "cache");
    if (f.has("l1")) detail::parse_level(f.at("l1"), "cache.l1", e.cache.l1);
    if (f.has("l2")) detail::parse_level(f.at("l2"), "cache.l2", e.cache.l2);
    if (f.has("l3")) detail::parse_level(f.at("l3"), "cache.l3", e.cache.l3);
    f.get("dram_latency", e.cache.dram_latency);
  }
  bool recycle = false;
  if (top.has("features")) {
    detail::Fields f(top.at("features"), "features");
    f.get("t1", e.features.t1);
    f.get("value_reuse", e.features.value_reuse);
    f.get("fetch_buffer", e.features.fetch_buffer);
    f.get("recycle", recycle);
  }
  if (top.has("recycle")) {
    detail::Fields f(top.at("recycle"), "recycle");
    f.get("unit_instructions", e.recycle.unit_instructions);
    f.get("repeats", e.recycle.repeats);
    f.get("lct_capacity", e.recycle.lct_capacity);
    std::string m;
    f.get("mode", m);
    if (m == "static")
      e.recycle.mode = RecycleMode::static_map;
    else if (!m.empty() && m != "dynamic")
      throw ConfigError("recycle.mode", "expected 'dynamic' or 'static'");
    else
      e.recycle.mode = RecycleMode::dynamic;
    if (f.has("static_map")) {
      const auto& sm = f.at("static_map");
      if (!sm.is_object()) throw ConfigError("recycle.static_map", "expected an object");
      for (auto it = sm.begin(); it != sm.end(); ++it) {
        auto p = "recycle.static_map." + it.key();
        if (!it.value().is_number_integer()) throw ConfigError(p, "expected a version number");
        try {
          e.recycle.static_map[static_cast<std::uint32_t>(std::stoul(it.key()))] = it.value().get<int>();
        } catch (const std::logic_error&) {
          throw ConfigError(p, "key must be a loop-branch index");
        }
      }
    }
    if (e.recycle.unit_instructions == 0) throw ConfigError("recycle.unit_instructions", "must be > 0");
    if (e.recycle.repeats == 0) throw ConfigError("recycle.repeats", "must be > 0");
  }
  if (top.has("engine")) {
    detail::Fields f(top.at("engine"), "engine");
    f.get("reboot_penalty", e.reboot_penalty);
    f.get("boq_capacity", e.boq_capacity);
    f.get("fq_capacity", e.fq_capacity);
    f.get("vpt_capacity", e.vpt_capacity);
    f.get("release_prefetch_on_dequeue", e.release_prefetch_on_dequeue);
    f.get("inject_vp_error_rate", e.inject_vp_error_rate);
    f.get("ideal_fetch", e.ideal_fetch);
    f.get("ideal_backend", e.ideal_backend);
    f.get("max_cycles", e.max_cycles);
    f.get("t1_debug", e.t1_debug);
    f.get("gshare_bits", e.gshare_bits);
  }
  if (top.has("t1")) {
    detail::Fields f(top.at("t1"), "t1");
    f.get("capacity", e.t1.capacity);
    f.get("initial_degree", e.t1.initial_degree);
    f.get("burst_cap", e.t1.burst_cap);
  }
  if (top.has("sif")) {
    detail::Fields f(top.at("sif"), "sif");
    f.get("bits", e.sif_bits);
    f.get("hashes", e.sif_hashes);
    f.get("training_iterations", e.sif.training_iterations);
    f.get("slow_latency", e.sif.slow_latency);
  }
  if (!recycle) e.recycle.mode = RecycleMode::off;
  else if (e.recycle.mode == RecycleMode::off) e.recycle.mode = RecycleMode::dynamic;
  top.get("skeleton", c.skeleton);
  if (top.has("initial_version")) {
    int v = 0;
    top.get("initial_version", v);
    if (v < 0 || v >= kSkeletonVersions) throw ConfigError("initial_version", "must be 0..5");
    e.initial_version = v;
  }
  top.get("limit", e.limit);
  top.get("train_limit", c.train_limit);
  top.get("seed", e.seed);
  top.get("output", c.output);
  if (e.limit == 0) throw ConfigError("limit", "must be > 0");

  if (const char* s = std::getenv("R3DLA_SEED")) {
    try {
      auto v = std::stoull(s);
      c.workload.seed = v;
      e.seed = v;
    } catch (const std::logic_error&) {
      throw ConfigError("R3DLA_SEED", "not an integer");
    }
  }
  try {
    e.check();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError("", ex.what());
  }
  return c;
}

inline nlohmann::json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError(p.string(), "cannot open");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(p.string(), std::string("malformed JSON: ") + e.what());
  }
}

inline ExperimentConfig load_config(const std::filesystem::path& p) {
  return parse_config(read_json_file(p), p.parent_path().empty() ? "." : p.parent_path());
}

inline std::filesystem::path resolve(const ExperimentConfig& c, const std::string& p) {
  std::filesystem::path q(p);
  return q.is_absolute() ? q : c.base_dir / q;
}

inline StaticProgram load_program(const ExperimentConfig& c) {
  if (c.workload.kind) {
    try {
      return gen_workload(*c.workload.kind, c.workload.params, c.workload.seed);
    } catch (const WorkloadError& e) {
      throw ConfigError("workload.params", e.what());
    }
  }
  auto path = resolve(c, c.workload.program_path);
  std::ifstream in(path);
  if (!in) throw ConfigError("workload.program", "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_program(ss.str());
}

inline SkeletonSet build_skeleton(const StaticProgram& p, const ExperimentConfig& c) {
  if (c.skeleton != "auto") {
    auto s = skeleton_from_json(read_json_file(resolve(c, c.skeleton)));
    check_skeleton(p, s);
    return s;
  }
  EngineOptions train = c.engine;
  train.limit = c.train_limit ? c.train_limit : c.engine.limit;
  train.features = {};
  train.recycle.mode = RecycleMode::off;
  return gen_skeleton_versions(p, profile_program(p, train));
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

inline std::uint64_t config_hash(const nlohmann::json& j) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

struct ExperimentResult {
  StaticProgram program;
  RunStats stats;
  nlohmann::json report;
};

inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  ExperimentResult r{load_program(c), {}, {}};
  if (c.dla) {
    auto skel = build_skeleton(r.program, c);
    r.stats = run_dla(r.program, skel, c.engine);
  } else {
    r.stats = run_baseline(r.program, c.engine);
  }
  auto& j = r.report;
  j["tool"] = "r3dla-sim";
  j["version"] = kToolVersion;
  j["config_hash"] = hex64(config_hash(c.raw));
  j["config"] = c.raw;
  j["workload"] = {{"name", r.program.meta.name},
                   {"program_hash", hex64(program_hash(r.program))},
                   {"static_instructions", r.program.size()}};
  j["mode"] = c.dla ? "dla" : "baseline";
  j["stats"] = stats_to_json(r.stats);
  return r;
}

// Side-by-side CSV. Ratio rows are normalized to the first column.
inline std::string compare_csv(const std::vector<std::string>& names, const std::vector<ExperimentResult>& runs,
                               bool force = false) {
  if (runs.size() < 2) throw ConfigError("", "compare needs at least two configs");
  auto h0 = program_hash(runs[0].program);
  for (std::size_t i = 1; i < runs.size(); ++i)
    if (program_hash(runs[i].program) != h0 && !force)
      throw ConfigError("workload", "configs run different workloads (" + names[0] + " vs " + names[i] + "); use --force");
  std::ostringstream os;
  os << "metric";
  for (auto& n : names) os << "," << n;
  os << "\n";
  auto row = [&](const char* metric, const std::function<double(const RunStats&)>& f) {
    os << metric;
    for (auto& r : runs) os << "," << f(r.stats);
    os << "\n";
  };
  auto ratio = [&](const char* metric, const std::function<double(const RunStats&)>& f) {
    os << metric;
    double base = f(runs[0].stats);
    for (auto& r : runs) os << "," << (base != 0.0 ? f(r.stats) / base : 0.0);
    os << "\n";
  };
  auto d = [](auto v) { return static_cast<double>(v); };
  row("cycles", [&](const RunStats& s) { return d(s.cycles); });
  row("instructions", [&](const RunStats& s) { return d(s.mt_committed); });
  row("ipc", [](const RunStats& s) { return s.ipc; });
  ratio("speedup", [](const RunStats& s) { return s.ipc; });
  row("l1_mpki", [](const RunStats& s) { return per_kilo(s.l1[0].misses, s.mt_committed); });
  row("l2_mpki", [](const RunStats& s) { return per_kilo(s.l2[0].misses, s.mt_committed); });
  row("dram_traffic_lines", [&](const RunStats& s) { return d(s.dram.traffic_lines); });
  ratio("traffic_ratio", [&](const RunStats& s) { return d(s.dram.traffic_lines); });
  row("reboots_per_10k", [&](const RunStats& s) {
    return s.mt_committed ? 1e4 * d(s.reboots) / d(s.mt_committed) : 0.0;
  });
  row("fetch_bubbles", [&](const RunStats& s) { return d(s.fetch_bubbles); });
  return os.str();
}

// Sets a dotted path ("core.fetch_buffer") in a raw config.
inline void set_path(nlohmann::json& j, const std::string& path, const nlohmann::json& v) {
  nlohmann::json* cur = &j;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!cur->contains(parts[i])) (*cur)[parts[i]] = nlohmann::json::object();
    cur = &(*cur)[parts[i]];
  }
  (*cur)[parts.back()] = v;
}

inline std::string canonical_param(const std::string& p) {
  if (p == "fetch_buffer_capacity") return "core.fetch_buffer";
  if (p == "window_size") return "core.window";
  return p;
}

inline std::string sweep_csv(const ExperimentConfig& base, const std::string& param, const std::vector<std::int64_t>& values) {
  std::ostringstream os;
  os << param << ",cycles,ipc,fetch_bubbles,reboots,dram_traffic_lines\n";
  auto path = canonical_param(param);
  for (auto v : values) {
    auto raw = base.raw;
    set_path(raw, path, v);
    if (path == "core.fetch_buffer") set_path(raw, "features.fetch_buffer", true);
    auto cfg = parse_config(raw, base.base_dir);
    auto r = run_experiment(cfg);
    os << v << "," << r.stats.cycles << "," << r.stats.ipc << "," << r.stats.fetch_bubbles << "," << r.stats.reboots << ","
       << r.stats.dram.traffic_lines << "\n";
  }
  return os.str();
}

inline const std::vector<std::string>& ablation_features() {
  static const std::vector<std::string> f{"t1", "value_reuse", "fetch_buffer", "recycle"};
  return f;
}

// Speedup of each feature applied alone (first) and applied on top of all the
// others (last), relative to the run without it.
inline std::string ablate_csv(const ExperimentConfig& base) {
  if (!base.dla) throw ConfigError("mode", "ablate needs a dla config");
  const auto& feats = ablation_features();
  auto cycles_with = [&](const std::set<std::string>& on) {
    auto raw = base.raw;
    for (const auto& f : feats) set_path(raw, "features." + f, on.count(f) != 0);
    return static_cast<double>(run_experiment(parse_config(raw, base.base_dir)).stats.cycles);
  };
  std::set<std::string> all(feats.begin(), feats.end());
  double none = cycles_with({});
  double full = cycles_with(all);
  std::ostringstream os;
  os << "feature,first,last\n";
  for (const auto& f : feats) {
    auto rest = all;
    rest.erase(f);
    double first = none / cycles_with({f});
    double last = cycles_with(rest) / full;
    os << f << "," << first << "," << last << "\n";
  }
  return os.str();
}

}  // namespace r3dla
