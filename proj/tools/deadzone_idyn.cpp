// deadzone_idyn: simulate -> prepare -> train -> sweep -> trace.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "dzid/calibration.hpp"
#include "dzid/experiment.hpp"
#include "dzid/log.hpp"

namespace fs = std::filesystem;
using namespace dzid;

namespace {

// Keys understood in --config files besides the arm and simulator ones.
const std::set<std::string> kRunKeys = {
    "alpha",        "filter.cutoff",      "prepare.seed",      "train.epochs",
    "train.learning_rate", "train.batch_size", "train.hidden", "train.seed",
    "sweep.trials", "sweep.sizes",        "sweep.seed",        "sweep.methods",
    "calibrate.target", "calibrate.coulomb_ratio"};

struct Options {
  std::string config;
  std::string out;
  std::string raw;
  std::string data;
  std::string models;
  std::string mode = "proposed";
  std::string sizes;
  std::string methods;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<int> trials;
  std::optional<int> epochs;
  std::optional<double> target;
  int jobs = 1;
  bool t_interval = false;
};

KeyValueFile load_config(const Options& o) {
  if (o.config.empty()) return {};
  const KeyValueFile kv = KeyValueFile::load(o.config);
  KeyValueFile known;
  store_link_params(LinkParams::defaults(), known);
  store_sim_config(SimConfig::defaults(), known);
  for (const auto& [key, value] : kv.values()) {
    if (!known.has(key) && !kRunKeys.count(key)) throw UsageError(o.config + ": unknown key '" + key + "'");
  }
  return kv;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  const auto number = [&](const std::string& s) -> std::size_t {
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(s, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != s.size() || v < 1) throw UsageError("bad sample size '" + s + "' in --sizes " + text);
    return static_cast<std::size_t>(v);
  };
  std::stringstream list(text);
  for (std::string part; std::getline(list, part, ',');) {
    const auto dots = part.find("..");
    if (dots == std::string::npos) {
      out.push_back(number(part));
      continue;
    }
    const auto colon = part.find(':', dots);
    const std::size_t a = number(part.substr(0, dots));
    const std::size_t b = number(part.substr(dots + 2, colon == std::string::npos ? std::string::npos
                                                                                   : colon - dots - 2));
    const std::size_t step = colon == std::string::npos ? 1 : number(part.substr(colon + 1));
    if (b < a) throw UsageError("empty range in --sizes " + text);
    for (std::size_t k = a; k <= b; k += step) out.push_back(k);
  }
  if (out.empty()) throw UsageError("--sizes is empty");
  return out;
}

std::vector<Method> parse_methods(const std::string& text) {
  std::vector<Method> out;
  std::stringstream list(text);
  for (std::string part; std::getline(list, part, ',');) out.push_back(parse_method(part));
  return out;
}

std::vector<int> parse_hidden(const std::string& text) {
  std::vector<int> out;
  std::stringstream list(text);
  for (std::string part; std::getline(list, part, ',');) {
    try {
      out.push_back(std::stoi(part));
    } catch (const std::exception&) {
      throw UsageError("bad train.hidden entry '" + part + "'");
    }
  }
  return out;
}

TrainConfig train_config(const KeyValueFile& kv, const Options& o) {
  TrainConfig tc;
  tc.epochs = static_cast<int>(kv.get_int("train.epochs", tc.epochs));
  tc.adam.learning_rate = kv.get_double("train.learning_rate", tc.adam.learning_rate);
  tc.batch_size = static_cast<int>(kv.get_int("train.batch_size", tc.batch_size));
  if (kv.has("train.hidden")) tc.hidden = parse_hidden(kv.get_string("train.hidden", ""));
  tc.seed = kv.get_u64("train.seed", tc.seed);
  if (o.epochs) tc.epochs = *o.epochs;
  if (o.seed) tc.seed = *o.seed;
  try {
    tc.validate();
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
  return tc;
}

std::string out_file(const Options& o, const char* name) {
  fs::create_directories(o.out);
  return (fs::path(o.out) / name).string();
}

int cmd_simulate(const Options& o) {
  const KeyValueFile kv = load_config(o);
  const LinkParams params = link_params_from(kv);
  SimConfig sim = sim_config_from(kv);
  if (o.seed) sim.seed = *o.seed;
  const TrajectoryLog log = simulate_trajectory(sim, params);
  write_trajectory_csv(log, out_file(o, "trajectory.csv"));
  KeyValueFile used = kv;
  store_link_params(params, used);
  store_sim_config(sim, used);
  used.save(out_file(o, "config.txt"));
  spdlog::info("simulate: {} steps written to {}", log.size(), o.out);
  return 0;
}

int cmd_calibrate(const Options& o) {
  const KeyValueFile kv = load_config(o);
  const SimConfig sim = sim_config_from(kv);
  CalibrationConfig cc;
  cc.target = kv.get_double("calibrate.target", cc.target);
  cc.coulomb_ratio = kv.get_double("calibrate.coulomb_ratio", cc.coulomb_ratio);
  if (o.target) cc.target = *o.target;
  MaskConfig mask;
  mask.alpha = o.alpha.value_or(kv.get_double("alpha", mask.alpha));
  const CalibrationResult res = calibrate_static_friction(sim, link_params_from(kv), cc, {}, mask);
  KeyValueFile used = kv;
  store_link_params(res.params, used);
  store_sim_config(sim, used);
  used.save(out_file(o, "config.txt"));
  return 0;
}

int cmd_prepare(const Options& o) {
  const KeyValueFile kv = load_config(o);
  const LinkParams params = link_params_from(kv);
  PrepareConfig pc;
  pc.mask.alpha = o.alpha.value_or(kv.get_double("alpha", pc.mask.alpha));
  pc.filters.cutoff = kv.get_double("filter.cutoff", pc.filters.cutoff);
  pc.seed = o.seed.value_or(kv.get_u64("prepare.seed", pc.seed));
  try {
    pc.mask.validate();
    pc.filters.validate();
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
  const TrajectoryLog log = read_trajectory_csv(o.raw);
  const PreparedData data = prepare_data(log, geometry_of(params), pc);
  data.save(o.out);
  write_summary(data, std::nullopt, out_file(o, "summary.txt"));
  return 0;
}

int cmd_train(const Options& o) {
  const KeyValueFile kv = load_config(o);
  if (o.mode == "ne" || o.mode == "ne_rigid") {
    const PreparedData data = PreparedData::load(o.data);
    const NeModel m = fit_baseline(data, data.pool, data.pool_mask, parse_method(o.mode));
    spdlog::info("train ({}): {} of {} rows used", o.mode, m.params().observations, data.pool.size());
    m.save(out_file(o, (o.mode + ".model").c_str()));
    return 0;
  }
  TrainConfig tc = train_config(kv, o);
  tc.mode = parse_train_mode(o.mode);
  const PreparedData data = PreparedData::load(o.data);
  const TrainResult res = train_network(data, data.pool, data.pool_mask, tc);
  spdlog::info("train ({}): {} of {} rows used; best epoch {} of {}, val MSE {:.6g}", o.mode,
               res.model.train_rows, data.pool.size(), res.model.best_epoch, tc.epochs,
               res.model.best_val_mse);
  res.model.save(out_file(o, (o.mode + ".model").c_str()));
  return 0;
}

int cmd_sweep(const Options& o) {
  const KeyValueFile kv = load_config(o);
  SweepConfig sc;
  sc.train = train_config(kv, o);
  sc.trials = static_cast<int>(kv.get_int("sweep.trials", sc.trials));
  sc.seed = kv.get_u64("sweep.seed", sc.seed);
  if (kv.has("sweep.sizes")) sc.sizes = parse_sizes(kv.get_string("sweep.sizes", ""));
  if (kv.has("sweep.methods")) sc.methods = parse_methods(kv.get_string("sweep.methods", ""));
  if (o.trials) sc.trials = *o.trials;
  if (o.seed) sc.seed = *o.seed;
  if (!o.sizes.empty()) sc.sizes = parse_sizes(o.sizes);
  if (!o.methods.empty()) sc.methods = parse_methods(o.methods);
  sc.jobs = o.jobs;
  sc.t_interval = o.t_interval;
  const PreparedData data = PreparedData::load(o.data);
  sc.validate(data.pool.size());
  const SweepReport report = run_sweep(data, sc);
  write_sweep_csv(report, out_file(o, "sweep.csv"));
  write_summary(data, report, out_file(o, "summary.txt"));
  if (report.failures > 0) {
    spdlog::error("sweep: {} runs failed", report.failures);
    return 1;
  }
  return 0;
}

int cmd_trace(const Options& o) {
  const PreparedData data = PreparedData::load(o.data);
  const fs::path dir(o.models);
  for (const char* name : {"ne.model", "conventional.model", "proposed.model"}) {
    if (!fs::exists(dir / name)) throw DataError("trace: missing model file " + (dir / name).string());
  }
  const NeModel ne = NeModel::load((dir / "ne.model").string());
  const MlpModel conv = MlpModel::load((dir / "conventional.model").string());
  const MlpModel prop = MlpModel::load((dir / "proposed.model").string());
  const TraceReport r = run_trace(data, ne, conv, prop);
  write_trace_csv(r, out_file(o, "trace.csv"));
  const TraceDeviation d = trace_deviation(r);
  spdlog::info("trace: mean |tau - tau_ne| in dead zones: proposed {:.4g}, conventional {:.4g}",
               d.proposed_all, d.conventional_all);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"Dead-zone masked inverse dynamics learning for a simulated 3-DOF arm"};
  app.require_subcommand(1);
  Options o;

  const auto add_config = [&](CLI::App* c) {
    c->add_option("--config", o.config, "key=value config file");
  };
  const auto add_out = [&](CLI::App* c) {
    c->add_option("--out", o.out, "output directory")->required();
  };
  const auto add_seed = [&](CLI::App* c) { c->add_option("--seed", o.seed, "seed override"); };
  const auto add_data = [&](CLI::App* c) {
    c->add_option("--data", o.data, "directory written by prepare")->required();
  };

  auto* simulate = app.add_subcommand("simulate", "simulate the arm and write the 500 Hz log");
  add_config(simulate);
  add_out(simulate);
  add_seed(simulate);

  auto* calibrate = app.add_subcommand("calibrate", "tune static friction to a moving fraction");
  add_config(calibrate);
  add_out(calibrate);
  calibrate->add_option("--target", o.target, "per-joint moving fraction");
  calibrate->add_option("--alpha", o.alpha, "dead-zone threshold factor");

  auto* prepare = app.add_subcommand("prepare", "filter, downsample, mask and split a log");
  add_config(prepare);
  add_out(prepare);
  add_seed(prepare);
  prepare->add_option("--raw", o.raw, "trajectory CSV from simulate")->required();
  prepare->add_option("--alpha", o.alpha, "dead-zone threshold factor");

  auto* train = app.add_subcommand("train", "train one model on the full pool");
  add_config(train);
  add_out(train);
  add_seed(train);
  add_data(train);
  train->add_option("--mode", o.mode, "proposed|conventional|ne|ne_rigid");
  train->add_option("--epochs", o.epochs, "epoch count");

  auto* sweep = app.add_subcommand("sweep", "sample-size sweep with confidence intervals");
  add_config(sweep);
  add_out(sweep);
  add_seed(sweep);
  add_data(sweep);
  sweep->add_option("--sizes", o.sizes, "a..b:step or comma list");
  sweep->add_option("--trials", o.trials, "trials per size");
  sweep->add_option("--methods", o.methods, "comma list of ne,ne_rigid,conventional,proposed");
  sweep->add_option("--jobs", o.jobs, "concurrent trials")->check(CLI::PositiveNumber);
  sweep->add_option("--epochs", o.epochs, "epoch count");
  sweep->add_flag("--t-interval", o.t_interval, "Student t multiplier for the interval");

  auto* trace = app.add_subcommand("trace", "predict the reserved segment with all three models");
  add_out(trace);
  add_data(trace);
  trace->add_option("--models", o.models, "directory holding ne/conventional/proposed .model")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*simulate) return cmd_simulate(o);
    if (*calibrate) return cmd_calibrate(o);
    if (*prepare) return cmd_prepare(o);
    if (*train) {
      if (o.mode != "ne" && o.mode != "ne_rigid") parse_train_mode(o.mode);
      return cmd_train(o);
    }
    if (*sweep) return cmd_sweep(o);
    if (*trace) return cmd_trace(o);
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 2;
}
