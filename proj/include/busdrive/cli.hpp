#pragma once

// Command-line front end. Every command writes deterministic report files
// into --out; exit codes are 0 (ok), 1 (configuration error), 2 (infeasible).

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "baselines.hpp"
#include "batch.hpp"
#include "dispatch.hpp"
#include "formulations.hpp"
#include "generator.hpp"
#include "instance.hpp"
#include "mip/brute_force.hpp"
#include "mip/lp_format.hpp"
#include "network.hpp"
#include "parallel.hpp"
#include "schedule.hpp"

namespace busdrive::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitInfeasible = 2;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Infeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  std::string instance_path;
  std::string gen_spec;  // seed,lines,hours,headway
  std::optional<double> delta;
  std::optional<int> delta_k;
  std::vector<double> omega_grid{0.5, 1.0, 1.5};
  std::optional<int> ib;
  bool ib_exact = false;
  double mipgap = 0.01;
  double time_limit = 0.0;  // 0: none
  long node_limit = 100;
  std::uint64_t seed = 1;
  std::string out = "out";
  std::string form = "aggregated";
  std::string mode = "batch";      // compare: exact or batch; sweep defaults to exact
  std::string solver = "bnb";      // solve: bnb or brute
  std::string strategy = "cost";   // M1 dispatch: cost or greedy
  int draws = 100;
  std::vector<int> sizes;
  std::string param;
  std::vector<double> values;
  bool write_lp = false;
};

inline GeneratorParams parse_gen_spec(const std::string& spec) {
  std::vector<long long> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stoll(item, &used));
      if (used != item.size()) throw ConfigError("");
    } catch (const std::exception&) {
      throw ConfigError("--gen expects seed,lines,hours,headway");
    }
  }
  if (parts.size() != 4) throw ConfigError("--gen expects seed,lines,hours,headway");
  GeneratorParams p;
  p.seed = static_cast<std::uint64_t>(parts[0]);
  p.lines = static_cast<int>(parts[1]);
  p.hours = static_cast<int>(parts[2]);
  p.headway_steps = static_cast<int>(parts[3]);
  return p;
}

inline SolveOptions solve_options(const RunConfig& cfg) {
  SolveOptions s;
  if (cfg.form == "per_bus") {
    s.model.form = Formulation::PerBus;
  } else if (cfg.form != "aggregated") {
    throw ConfigError("--form must be aggregated or per_bus");
  }
  if (cfg.mipgap < 0.0) throw ConfigError("--mipgap must be non-negative");
  if (cfg.node_limit < 1) throw ConfigError("--node-limit must be positive");
  s.mipgap = cfg.mipgap;
  s.node_limit = cfg.node_limit;
  s.time_limit_s = cfg.time_limit > 0.0 ? cfg.time_limit : mip::kInf;
  return s;
}

inline BatchOptions batch_options(const RunConfig& cfg) {
  BatchOptions b;
  b.omega_grid = cfg.omega_grid;
  try {
    check_omega_grid(b.omega_grid);
  } catch (const BatchError& e) {
    throw ConfigError(e.what());
  }
  b.solve = solve_options(cfg);
  return b;
}

inline Instance load_instance(const RunConfig& cfg) {
  if (cfg.instance_path.empty() == cfg.gen_spec.empty()) throw ConfigError("exactly one of --instance or --gen is required");
  Instance inst;
  if (!cfg.gen_spec.empty()) {
    inst = generate_instance(parse_gen_spec(cfg.gen_spec));
  } else {
    std::ifstream in(cfg.instance_path);
    if (!in) throw ConfigError("cannot read " + cfg.instance_path);
    std::stringstream ss;
    ss << in.rdbuf();
    inst = parse_instance(ss.str());
  }
  if (cfg.delta) inst.delta = *cfg.delta;
  if (cfg.delta_k) inst = with_delta_k(std::move(inst), *cfg.delta_k);
  if (cfg.ib) inst.fleet.max_ib = *cfg.ib;
  if (cfg.ib_exact) inst.fleet.ib_exact = true;
  const auto problems = validate_instance(inst);
  if (!problems.empty()) throw ConfigError("invalid instance: " + problems.front());
  return inst;
}

inline std::ofstream open_out(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out);
  std::ofstream os(std::filesystem::path(cfg.out) / name);
  if (!os) throw ConfigError("cannot write " + (std::filesystem::path(cfg.out) / name).string());
  return os;
}

inline ordered_json schedule_summary(const ScheduleSet& s, const SensingProfile& p, const Network& net, const Instance& inst) {
  ordered_json j;
  j["buses"] = static_cast<int>(s.buses.size());
  j["ib_buses"] = s.ib_count();
  j["fixed_cost"] = s.fixed_cost;
  j["operational_cost"] = s.operational_cost;
  j["total_cost"] = s.total_cost();
  j["relocations"] = s.relocations;
  j["sensing_score"] = p.score;
  j["coverage_rate"] = p.coverage_rate;
  j["combined_objective"] = s.total_cost() - inst.delta * p.score;
  j["violations"] = verify_schedule(s, net, inst);
  return j;
}

inline void write_schedule_files(const RunConfig& cfg, const ScheduleSet& s, const SensingProfile& p, const Network& net,
                                 const Instance& inst) {
  auto sched = open_out(cfg, "schedule.csv");
  write_schedule_csv(sched, s, net, inst);
  auto br = open_out(cfg, "breakdown.csv");
  write_breakdown_csv(br, p, inst);
  auto hm = open_out(cfg, "heatmap.csv");
  write_heatmap_csv(hm, p, inst);
}

inline void write_json(const RunConfig& cfg, const std::string& name, const ordered_json& j) {
  auto os = open_out(cfg, name);
  os << j.dump(2) << '\n';
}

struct ExactRun {
  mip::Solution solution;
  ScheduleSet schedules;
};

// Full model by branch and bound (greedy all-normal start) or brute force.
inline ExactRun solve_full(const Instance& inst, const Network& net, const SolveOptions& opt, bool brute, bool lp_dump = false,
                           const RunConfig* cfg = nullptr) {
  const BuiltModel bm = build_full_model(net, inst, opt.model);
  if (lp_dump && cfg != nullptr) {
    auto os = open_out(*cfg, "model.lp");
    mip::write_lp(os, bm.model);
  }
  ExactRun run;
  if (brute) {
    run.solution = mip::brute_force_solve(bm.model, 1000);
  } else {
    std::vector<ScheduleSet> starts;
    if (auto g = greedy_schedules(net, inst)) starts.push_back(make_schedule_set(std::move(*g), net, inst));
    run.solution = detail::solve_with_start(bm, opt, detail::best_start(bm, net, inst, starts));
  }
  run.schedules = extract_schedules(run.solution, bm.reg, net, inst);
  return run;
}

inline int cmd_gen(const RunConfig& cfg) {
  const Instance inst = load_instance(cfg);
  auto os = open_out(cfg, "instance.json");
  os << serialize(inst);
  return kExitOk;
}

inline int cmd_solve(const RunConfig& cfg) {
  const Instance inst = load_instance(cfg);
  const Network net = build_network(inst);
  if (cfg.solver != "bnb" && cfg.solver != "brute") throw ConfigError("--solver must be bnb or brute");
  const auto run = solve_full(inst, net, solve_options(cfg), cfg.solver == "brute", cfg.write_lp, &cfg);
  ordered_json j;
  j["status"] = mip::to_string(run.solution.status);
  if (!run.solution.has_incumbent()) {
    write_json(cfg, "summary.json", j);
    throw Infeasible(std::string("full model: ") + mip::to_string(run.solution.status));
  }
  const auto profile = schedule_profile(run.schedules, net, inst);
  j["objective"] = run.solution.objective;
  j["best_bound"] = run.solution.best_bound;
  j["gap"] = run.solution.gap;
  j["nodes"] = run.solution.nodes_explored;
  j["schedule"] = schedule_summary(run.schedules, profile, net, inst);
  write_json(cfg, "summary.json", j);
  write_schedule_files(cfg, run.schedules, profile, net, inst);
  return kExitOk;
}

inline int cmd_batch(const RunConfig& cfg) {
  const Instance inst = load_instance(cfg);
  const Network net = build_network(inst);
  const auto opt = batch_options(cfg);
  BatchResult br;
  try {
    br = run_batch(inst, net, opt);
  } catch (const BatchError& e) {
    throw Infeasible(e.what());
  }
  auto j = batch_report_json(&br, nullptr);
  j["schedule"] = schedule_summary(br.schedules, br.sensing, net, inst);
  write_json(cfg, "batch.json", j);
  write_schedule_files(cfg, br.schedules, br.sensing, net, inst);
  return kExitOk;
}

inline int cmd_bounds(const RunConfig& cfg) {
  const Instance inst = load_instance(cfg);
  const Network net = build_network(inst);
  const auto opt = batch_options(cfg);
  BoundsReport bd;
  BatchResult br;
  try {
    bd = compute_bounds(inst, net, opt.solve);
    br = run_batch(inst, net, opt);
  } catch (const BatchError& e) {
    throw Infeasible(e.what());
  }
  write_json(cfg, "bounds.json", batch_report_json(&br, &bd));
  return kExitOk;
}

inline ScheduleOptions schedule_options(const RunConfig& cfg) {
  ScheduleOptions s;
  if (cfg.mode == "exact") {
    s.mode = SolveMode::Exact;
  } else if (cfg.mode != "batch") {
    throw ConfigError("--mode must be exact or batch");
  }
  s.batch = batch_options(cfg);
  return s;
}

inline int cmd_compare(const RunConfig& cfg) {
  const Instance inst = load_instance(cfg);
  const Network net = build_network(inst);
  CompareOptions co;
  co.sizes = cfg.sizes;
  co.m1.draws = cfg.draws;
  co.m1.seed = cfg.seed;
  co.m1.solve = solve_options(cfg);
  if (cfg.strategy == "greedy") {
    co.m1.strategy = DispatchStrategy::GreedyFirstAvailable;
  } else if (cfg.strategy != "cost") {
    throw ConfigError("--strategy must be cost or greedy");
  }
  if (cfg.draws < 1) throw ConfigError("--draws must be positive");
  co.scheduled = schedule_options(cfg);
  std::vector<MethodReport> rows;
  try {
    rows = compare(inst, net, co);
  } catch (const BaselineError& e) {
    throw Infeasible(e.what());
  } catch (const BatchError& e) {
    throw Infeasible(e.what());
  }
  auto csv = open_out(cfg, "compare.csv");
  write_compare_csv(csv, rows);
  ordered_json j;
  j["seed"] = cfg.seed;
  j["draws"] = cfg.draws;
  j["mode"] = cfg.mode;
  j["rows"] = compare_json(rows);
  write_json(cfg, "compare.json", j);
  return kExitOk;
}

struct SweepRow {
  double value = 0.0;
  std::string status;
  double cost = 0.0;
  double score = 0.0;
  int relocations = 0;
  double objective = 0.0;
  int buses = 0;
  int ib_buses = 0;
};

// One sweep point: the parameter applied to a copy of the instance, then an
// exact solve or a batch run (omega always uses the single batch point).
inline SweepRow sweep_point(const Instance& base, const RunConfig& cfg, double value) {
  SweepRow row;
  row.value = value;
  Instance inst = base;
  const auto as_int = [&](const char* what) {
    if (value != std::floor(value)) throw ConfigError(std::string(what) + " values must be integers");
    return static_cast<int>(value);
  };
  if (cfg.param == "delta") {
    inst.delta = value;
  } else if (cfg.param == "delta_k") {
    inst = with_delta_k(std::move(inst), as_int("delta_k"));
  } else if (cfg.param == "relocation_cost") {
    inst.costs.relocation_fixed = value;
  } else if (cfg.param == "ib_count") {
    inst.fleet.max_ib = as_int("ib_count");
  } else if (cfg.param != "omega") {
    throw ConfigError("--param must be one of delta, omega, delta_k, relocation_cost, ib_count");
  }
  const auto problems = validate_instance(inst);
  if (!problems.empty()) {
    row.status = "invalid";
    return row;
  }
  const Network net = build_network(inst);
  const auto opt = solve_options(cfg);
  ScheduleSet s;
  if (cfg.param == "omega") {
    const auto o = batch_point(net, inst, value, opt);
    if (!o.feasible) {
      row.status = "infeasible";
      return row;
    }
    s = o.schedules;
  } else if (cfg.mode == "exact") {
    const auto run = solve_full(inst, net, opt, false);
    if (!run.solution.has_incumbent()) {
      row.status = "infeasible";
      return row;
    }
    s = run.schedules;
  } else {
    try {
      s = run_batch(inst, net, batch_options(cfg)).schedules;
    } catch (const BatchError&) {
      row.status = "infeasible";
      return row;
    }
  }
  const auto p = schedule_profile(s, net, inst);
  row.status = "ok";
  row.cost = s.total_cost();
  row.score = p.score;
  row.relocations = s.relocations;
  row.objective = s.total_cost() - inst.delta * p.score;
  row.buses = static_cast<int>(s.buses.size());
  row.ib_buses = s.ib_count();
  return row;
}

inline void write_sweep_csv(std::ostream& os, const RunConfig& cfg, const std::vector<SweepRow>& rows) {
  os << "param,value,seed,status,cost,score,relocations,objective,buses,ib_buses\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%llu,%s,%.6f,%.9f,%d,%.6f,%d,%d\n", cfg.param.c_str(), r.value,
                  static_cast<unsigned long long>(cfg.seed), r.status.c_str(), r.cost, r.score, r.relocations, r.objective, r.buses,
                  r.ib_buses);
    os << buf;
  }
}

inline int cmd_sweep(const RunConfig& cfg) {
  if (cfg.values.empty()) throw ConfigError("--values must not be empty");
  if (cfg.mode != "exact" && cfg.mode != "batch") throw ConfigError("--mode must be exact or batch");
  const Instance inst = load_instance(cfg);
  const auto rows = parallel_map(cfg.values.size(), [&](std::size_t i) {
    try {
      return sweep_point(inst, cfg, cfg.values[i]);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      SweepRow r;
      r.value = cfg.values[i];
      r.status = "error";
      return r;
    }
  });
  auto os = open_out(cfg, "sweep.csv");
  write_sweep_csv(os, cfg, rows);
  return kExitOk;
}

inline void add_common(CLI::App* sub, RunConfig& cfg) {
  auto* src = sub->add_option_group("source");
  src->add_option("--instance", cfg.instance_path, "instance JSON file");
  src->add_option("--gen", cfg.gen_spec, "generate: seed,lines,hours,headway");
  sub->add_option("--delta", cfg.delta, "sensing weight in the objective");
  sub->add_option("--delta-k", cfg.delta_k, "sensing period length in time steps");
  sub->add_option("--omega-grid", cfg.omega_grid, "omega values, comma separated")->delimiter(',');
  sub->add_option("--ib", cfg.ib, "IB fleet size M");
  sub->add_flag("--ib-exact", cfg.ib_exact, "require exactly M instrumented buses");
  sub->add_option("--mipgap", cfg.mipgap, "relative MIP gap");
  sub->add_option("--time-limit", cfg.time_limit, "seconds per MIP solve (0: none; results then depend on speed)");
  sub->add_option("--node-limit", cfg.node_limit, "branch-and-bound nodes per MIP solve");
  sub->add_option("--seed", cfg.seed, "seed for stochastic steps");
  sub->add_option("--out", cfg.out, "output directory");
  sub->add_option("--form", cfg.form, "aggregated or per_bus");
}

inline int dispatch(const RunConfig& cfg) {
  if (cfg.command == "gen") return cmd_gen(cfg);
  if (cfg.command == "solve") return cmd_solve(cfg);
  if (cfg.command == "batch") return cmd_batch(cfg);
  if (cfg.command == "bounds") return cmd_bounds(cfg);
  if (cfg.command == "compare") return cmd_compare(cfg);
  if (cfg.command == "sweep") return cmd_sweep(cfg);
  throw ConfigError("unknown command " + cfg.command);
}

inline int run(int argc, const char* const* argv, std::ostream& err = std::cerr) {
  RunConfig cfg;
  CLI::App app{"busdrive: mixed-fleet bus scheduling for drive-by sensing"};
  app.require_subcommand(1);
  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {{"gen", "write a generated instance"},
                      {"solve", "solve the full model"},
                      {"batch", "run the batch scheduler over the omega grid"},
                      {"bounds", "sub-problem bounds and the batch objective"},
                      {"compare", "compare M1, M2 and M3"},
                      {"sweep", "one-parameter sensitivity sweep"}};
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    add_common(sub, cfg);
    sub->callback([&cfg, name = std::string(s.name)] { cfg.command = name; });
    if (std::string(s.name) == "solve") {
      sub->add_option("--solver", cfg.solver, "bnb or brute");
      sub->add_flag("--write-lp", cfg.write_lp, "also write the model in LP format");
    }
    if (std::string(s.name) == "compare") {
      sub->add_option("--sizes", cfg.sizes, "IB fleet sizes, comma separated")->delimiter(',');
      sub->add_option("--draws", cfg.draws, "M1 Monte Carlo draws");
      sub->add_option("--mode", cfg.mode, "M2/M3 solve: exact or batch");
      sub->add_option("--strategy", cfg.strategy, "M1 dispatch: cost or greedy");
    }
    if (std::string(s.name) == "sweep") {
      sub->add_option("--param", cfg.param, "delta, omega, delta_k, relocation_cost or ib_count")->required();
      sub->add_option("--values", cfg.values, "values, comma separated")->delimiter(',')->required();
      sub->add_option("--mode", cfg.mode, "exact (default) or batch");
    }
  }
  try {
    app.parse(argc, argv);
    if (cfg.command == "sweep" && app.get_subcommand("sweep")->count("--mode") == 0) cfg.mode = "exact";
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  try {
    return dispatch(cfg);
  } catch (const Infeasible& e) {
    err << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InstanceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace busdrive::cli
