#include "netspill/cli.hpp"

#include "netspill/csv_io.hpp"
#include "netspill/errors.hpp"
#include "netspill/estimator.hpp"
#include "netspill/log.hpp"
#include "netspill/models.hpp"
#include "netspill/report.hpp"
#include "netspill/sim.hpp"
#include "netspill/variance.hpp"
#include "netspill/version.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace netspill {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw InputError(path + ": invalid JSON (" + e.what() + ")");
  }
}

std::string absolute_path(const std::string& path) { return fs::absolute(path).lexically_normal().string(); }

int default_threads() {
  if (const char* env = std::getenv("NETSPILL_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw InputError("NETSPILL_THREADS must be a positive integer");
    return static_cast<int>(v);
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

class RunContext {
 public:
  RunContext(std::string out_dir, int threads, std::ostream& out) : out_dir_(std::move(out_dir)), threads_(threads), out_(out) {
    fs::create_directories(out_dir_);
  }

  int threads() const { return threads_; }
  std::ostream& log() { return out_; }

  void write(const std::string& name, const std::string& contents) {
    write_file_atomic((fs::path(out_dir_) / name).string(), contents);
    outputs_.push_back(name);
  }

  void write_manifest(const std::string& command, const json& config, const json& inputs, const json& seed) {
    json m;
    m["tool"] = "netspill";
    m["version"] = kVersion;
    m["command"] = command;
    m["config"] = config;
    m["config_hash"] = fnv1a_hex(config.dump());
    m["seed"] = seed;
    m["inputs"] = inputs;
    m["outputs"] = outputs_;
    write_file_atomic((fs::path(out_dir_) / "manifest.json").string(), m.dump(2) + "\n");
  }

 private:
  std::string out_dir_;
  int threads_;
  std::ostream& out_;
  std::vector<std::string> outputs_;
};

json input_record(const std::string& path) { return {{"path", path}, {"fnv1a", fnv1a_hex(read_text(path))}}; }

// ---- estimate ---------------------------------------------------------------

VarianceGrouping parse_groups(const std::string& text) {
  if (text == "components") return VarianceGrouping::Components;
  if (text == "communities") return VarianceGrouping::Communities;
  throw InputError("unknown grouping '" + text + "' (expected components or communities)");
}

void run_estimate(const json& cfg, RunContext& ctx) {
  const std::string edges_path = cfg.at("edges").get<std::string>();
  const std::string nodes_path = cfg.at("nodes").get<std::string>();
  std::vector<Allocation> allocs;
  for (double a : cfg.at("allocs").get<std::vector<double>>()) allocs.emplace_back(a);

  StudyInput input = assemble_study(read_edges(read_csv_file(edges_path)), read_nodes(read_csv_file(nodes_path)));
  Network net = std::move(input.network);
  StudyData data = std::move(input.data);
  std::vector<std::string> ids = std::move(input.ids);
  std::size_t isolates = 0;
  if (!cfg.at("keep_isolates").get<bool>()) {
    IsolateRemoval removal = remove_isolates(net, data);
    isolates = removal.removed;
    std::vector<std::string> kept_ids;
    for (NodeId old : removal.kept) kept_ids.push_back(ids[static_cast<std::size_t>(old)]);
    net = std::move(removal.network);
    data = std::move(removal.data);
    ids = std::move(kept_ids);
    ctx.log() << "removed " << isolates << " isolates; " << ids.size() << " nodes remain\n";
  }

  ModelOptions options;
  options.censoring_fit = parse_censoring_fit(cfg.at("censoring").get<std::string>());
  options.censoring_covariates = parse_censoring_covariates(cfg.at("censoring_covariates").get<std::string>());
  options.quad_nodes = cfg.at("quad_nodes").get<int>();
  options.mixed.quad_nodes = options.quad_nodes;

  NuisanceFits fits = fit_nuisance_models(net, data, options);
  NodeFactors factors;
  try {
    factors = node_factors(net, data, fits);
  } catch (const PositivityError& e) {
    const auto node = static_cast<std::size_t>(e.node());
    const std::string id = node < ids.size() ? ids[node] : std::to_string(e.node());
    throw PositivityError("positivity failure at node '" + id + "': " + e.what(), e.node());
  }
  const auto n = static_cast<std::size_t>(factors.density.size());
  const WeightReport weights =
      weight_diagnostics(std::span<const double>(factors.density.data(), n),
                         std::span<const double>(factors.survival.data(), n), data.censored,
                         cfg.at("weight_threshold").get<double>());
  if (weights.flagged_count > 0) {
    warn(std::to_string(weights.flagged_count) + " weights exceed " + format_number(weights.threshold));
  }

  const VarianceGrouping grouping = parse_groups(cfg.at("groups").get<std::string>());
  const Partition groups = grouping == VarianceGrouping::Components ? net.components() : fast_greedy_communities(net);
  const SandwichResult sw = sandwich(net, data, fits, allocs, groups);
  const TargetEstimates targets = estimate_targets(data, factors, allocs);
  const Eigen::MatrixXd cov = sw.target_covariance();
  const auto effect_list = effects(targets, &cov);

  std::ostringstream effects_csv;
  write_effects_csv(effects_csv, effect_list);
  ctx.write("effects.csv", effects_csv.str());
  std::ostringstream weights_csv;
  write_weights_csv(weights_csv, ids, weights);
  ctx.write("weights.csv", weights_csv.str());
  json summary = fit_summary_json(fits, sw, weights);
  summary["nodes"] = ids.size();
  summary["isolates_removed"] = isolates;
  ctx.write("fit_summary.json", summary.dump(2) + "\n");

  ctx.log() << effects_csv.str();
}

// ---- simulate / sweep -------------------------------------------------------

std::vector<CensoringFitKind> parse_fit_choice(const std::string& text) {
  if (text == "logistic") return {CensoringFitKind::Logistic};
  if (text == "mixed") return {CensoringFitKind::Mixed};
  if (text == "both") return {CensoringFitKind::Logistic, CensoringFitKind::Mixed};
  throw InputError("unknown censoring choice '" + text + "' (expected logistic, mixed or both)");
}

void apply_fit_choice(Scenario& s, const std::vector<CensoringFitKind>& fits) {
  std::vector<VarianceGrouping> groupings;
  for (const auto& v : s.variants) {
    if (std::find(groupings.begin(), groupings.end(), v.grouping) == groupings.end()) groupings.push_back(v.grouping);
  }
  s.variants.clear();
  for (auto fit : fits) {
    for (auto g : groupings) s.variants.push_back({fit, g});
  }
}

void print_reports(std::ostream& out, const std::vector<SimReport>& reports) {
  for (const auto& rep : reports) {
    out << rep.scenario_name << " [" << rep.variant.label() << "] " << rep.successes << "/" << rep.replicates
        << " replicates\n";
  }
  write_simreport_csv(out, reports);
}

void write_reports(RunContext& ctx, const std::vector<SimReport>& reports) {
  std::ostringstream csv;
  write_simreport_csv(csv, reports);
  ctx.write("simreport.csv", csv.str());
  ctx.write("simreport.json", simreport_json(reports).dump(2) + "\n");
  print_reports(ctx.log(), reports);
}

void run_simulate(const json& cfg, RunContext& ctx) {
  std::vector<SimReport> all;
  for (const json& sj : cfg.at("scenarios")) {
    const Scenario s = scenario_from_json(sj);
    auto reports = run_replicates(s, ctx.threads());
    for (auto& r : reports) all.push_back(std::move(r));
  }
  write_reports(ctx, all);
}

void run_sweep(const json& cfg, RunContext& ctx) {
  const Scenario base = scenario_from_json(cfg.at("base"));
  const auto sds = cfg.at("sds").get<std::vector<double>>();
  write_reports(ctx, sweep_re_sd(base, sds, ctx.threads()));
}

// ---- communities ------------------------------------------------------------

void run_communities(const json& cfg, RunContext& ctx) {
  const EdgeNetwork en = network_from_edges(read_edges(read_csv_file(cfg.at("edges").get<std::string>())));
  if (en.network.edge_count() == 0) throw InputError("the edge list has no edges");
  const Partition p = fast_greedy_communities(en.network);
  std::ostringstream csv;
  write_partition_csv(csv, en.ids, p);
  ctx.write("communities.csv", csv.str());

  std::map<std::size_t, int> histogram;
  for (std::size_t size : p.group_sizes()) ++histogram[size];
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", modularity(en.network, p));
  ctx.log() << p.group_count << " communities over " << en.network.component_count() << " components, modularity "
            << buf << "\nsize  count\n";
  for (const auto& [size, count] : histogram) ctx.log() << size << "  " << count << "\n";
}

// ---- dispatch -----------------------------------------------------------------

json inputs_for(const std::string& command, const json& cfg) {
  json inputs = json::object();
  if (command == "estimate") {
    inputs["edges"] = input_record(cfg.at("edges").get<std::string>());
    inputs["nodes"] = input_record(cfg.at("nodes").get<std::string>());
  } else if (command == "communities") {
    inputs["edges"] = input_record(cfg.at("edges").get<std::string>());
  }
  return inputs;
}

json seed_of(const std::string& command, const json& cfg) {
  if (command == "simulate") {
    json seeds = json::array();
    for (const json& s : cfg.at("scenarios")) seeds.push_back(s.at("seed"));
    return seeds.size() == 1 ? seeds[0] : seeds;
  }
  if (command == "sweep") return cfg.at("base").at("seed");
  return nullptr;
}

void execute(const std::string& command, const json& cfg, RunContext& ctx) {
  const json inputs = inputs_for(command, cfg);
  try {
    if (command == "estimate") {
      run_estimate(cfg, ctx);
    } else if (command == "simulate") {
      run_simulate(cfg, ctx);
    } else if (command == "sweep") {
      run_sweep(cfg, ctx);
    } else if (command == "communities") {
      run_communities(cfg, ctx);
    } else {
      throw InputError("unknown command '" + command + "'");
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed configuration: ") + e.what());
  }
  ctx.write_manifest(command, cfg, inputs, seed_of(command, cfg));
}

void replay(const std::string& manifest_path, std::optional<std::string> out_dir, int threads, std::ostream& out) {
  const json m = read_json_file(manifest_path);
  if (!m.is_object() || !m.contains("command") || !m.contains("config")) {
    throw InputError(manifest_path + ": not a netspill manifest");
  }
  const std::string command = m.at("command").get<std::string>();
  const json& cfg = m.at("config");
  if (m.contains("config_hash") && m.at("config_hash").get<std::string>() != fnv1a_hex(cfg.dump())) {
    throw InputError(manifest_path + ": config hash does not match the stored config");
  }
  if (m.contains("inputs")) {
    for (const auto& item : m.at("inputs").items()) {
      const std::string path = item.value().at("path").get<std::string>();
      if (fnv1a_hex(read_text(path)) != item.value().at("fnv1a").get<std::string>()) {
        throw InputError("input " + path + " changed since the manifest was written");
      }
    }
  }
  if (m.contains("version") && m.at("version").get<std::string>() != kVersion) {
    warn("manifest written by netspill " + m.at("version").get<std::string>() + ", replaying with " + kVersion);
  }
  RunContext ctx(out_dir.value_or(fs::path(manifest_path).parent_path().string()), threads, out);
  execute(command, cfg, ctx);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spillover effect estimation under network interference with censoring"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string edges, nodes, scenario_path, preset, out_dir = ".", censoring, covariates = "own", groups = "components";
  std::string manifest_path;
  std::vector<double> allocs{0.25, 0.5, 0.75};
  std::vector<double> sds{0.1, 0.2, 0.3, 0.4, 0.5};
  std::optional<int> m, replicates, threads;
  std::optional<std::uint64_t> seed;
  bool keep_isolates = false;
  double weight_threshold = 50.0;
  int quad_nodes = 21;

  auto add_alloc = [&](CLI::App* sub) {
    sub->add_option("--alloc", allocs, "Allocation probabilities")->delimiter(',');
  };
  auto add_threads = [&](CLI::App* sub) {
    sub->add_option("--threads", threads, "Worker threads (default: NETSPILL_THREADS or all cores)");
  };

  auto* est = app.add_subcommand("estimate", "Estimate effects from observed network data");
  est->add_option("--edges", edges, "Edge list CSV (src,dst)")->required();
  est->add_option("--nodes", nodes, "Node table CSV (id,A,C,Y,Z_*)")->required();
  add_alloc(est);
  est->add_option("--censoring", censoring, "Censoring model: logistic or mixed")->default_str("logistic");
  est->add_option("--censoring-covariates", covariates, "Censoring design: covariates, own or full");
  est->add_option("--groups", groups, "Variance grouping: components or communities");
  est->add_flag("--keep-isolates", keep_isolates, "Keep degree-0 nodes");
  est->add_option("--weight-threshold", weight_threshold, "Flag weights above this value");
  est->add_option("--quad-nodes", quad_nodes, "Gauss-Hermite nodes (odd, >= 11)");
  est->add_option("--out", out_dir, "Output directory");

  auto* sim = app.add_subcommand("simulate", "Run a simulation scenario");
  sim->add_option("--scenario", scenario_path, "Scenario JSON file");
  sim->add_option("--preset", preset, "paper-main, paper-sweep or paper-trip");
  sim->add_option("--m", m, "Component count for regular-network presets");
  sim->add_option("--censoring", censoring, "Censoring fits: logistic, mixed or both");
  sim->add_option("--replicates", replicates, "Replicates per scenario");
  sim->add_option("--seed", seed, "Random seed");
  add_alloc(sim);
  add_threads(sim);
  sim->add_option("--out", out_dir, "Output directory");

  auto* sweep = app.add_subcommand("sweep", "Vary the censoring random-intercept sd");
  sweep->add_option("--scenario", scenario_path, "Base scenario JSON file");
  sweep->add_option("--m", m, "Component count when no scenario is given (default 100)");
  sweep->add_option("--sds", sds, "Random-intercept sds")->delimiter(',');
  sweep->add_option("--replicates", replicates, "Replicates per sd");
  sweep->add_option("--seed", seed, "Random seed");
  add_alloc(sweep);
  add_threads(sweep);
  sweep->add_option("--out", out_dir, "Output directory");

  auto* comm = app.add_subcommand("communities", "Split a network into modularity communities");
  comm->add_option("--edges", edges, "Edge list CSV (src,dst)")->required();
  comm->add_option("--out", out_dir, "Output directory");

  auto* rep = app.add_subcommand("replay", "Re-run a command from its manifest");
  rep->add_option("--manifest", manifest_path, "manifest.json of an earlier run")->required();
  auto* rep_out = rep->add_option("--out", out_dir, "Output directory (default: the manifest's directory)");
  add_threads(rep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  const WarningSink previous = set_warning_sink([&err](const std::string& msg) { err << "warning: " << msg << "\n"; });
  struct Restore {
    WarningSink sink;
    ~Restore() { set_warning_sink(sink); }
  } restore{previous};

  try {
    const int n_threads = threads ? *threads : default_threads();
    if (n_threads < 1) throw InputError("--threads must be at least 1");

    if (rep->parsed()) {
      replay(manifest_path, rep_out->count() ? std::optional<std::string>(out_dir) : std::nullopt, n_threads, out);
      return kExitOk;
    }

    std::string command;
    json cfg;
    if (est->parsed()) {
      command = "estimate";
      cfg = {{"edges", absolute_path(edges)},
             {"nodes", absolute_path(nodes)},
             {"allocs", allocs},
             {"censoring", censoring.empty() ? "logistic" : censoring},
             {"censoring_covariates", covariates},
             {"groups", groups},
             {"keep_isolates", keep_isolates},
             {"weight_threshold", weight_threshold},
             {"quad_nodes", quad_nodes}};
      for (double a : allocs) (void)Allocation{a};
      parse_censoring_fit(cfg["censoring"].get<std::string>());
      parse_censoring_covariates(covariates);
      parse_groups(groups);
    } else if (sim->parsed() || sweep->parsed()) {
      const bool is_sweep = sweep->parsed();
      CLI::App* sub = is_sweep ? sweep : sim;
      std::vector<Scenario> scenarios;
      if (!scenario_path.empty() && !preset.empty()) throw InputError("give either --scenario or --preset, not both");
      if (!scenario_path.empty()) {
        if (m) throw InputError("--m applies to presets only; set network.m in the scenario file");
        scenarios.push_back(scenario_from_json(read_json_file(scenario_path)));
      } else if (!preset.empty()) {
        scenarios = preset_scenarios(preset, m);
      } else if (is_sweep) {
        Scenario base;
        base.name = "sweep-m" + std::to_string(m.value_or(100));
        base.network = RegularNetworkSpec{m.value_or(100), 10.0, 4};
        scenarios.push_back(base);
      } else {
        throw InputError("simulate needs --scenario or --preset");
      }
      for (auto& s : scenarios) {
        if (replicates) s.replicates = *replicates;
        if (seed) s.seed = *seed;
        if (sub->get_option("--alloc")->count()) s.allocs = allocs;
        if (!is_sweep && !censoring.empty()) apply_fit_choice(s, parse_fit_choice(censoring));
        for (double a : s.allocs) (void)Allocation{a};
        s.validate();
      }
      if (is_sweep) {
        command = "sweep";
        for (double sd : sds) {
          if (!(sd >= 0.0)) throw InputError("--sds values must be non-negative");
        }
        cfg = {{"base", to_json(scenarios.front())}, {"sds", sds}};
      } else {
        command = "simulate";
        cfg["scenarios"] = json::array();
        for (const auto& s : scenarios) cfg["scenarios"].push_back(to_json(s));
      }
    } else {
      command = "communities";
      cfg = {{"edges", absolute_path(edges)}};
    }
    RunContext ctx(out_dir, n_threads, out);
    execute(command, cfg, ctx);
    return kExitOk;
  } catch (const PositivityError& e) {
    err << "error: " << e.what() << "\n";
    return kExitPositivity;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitOther;
  }
}

}  // namespace netspill
