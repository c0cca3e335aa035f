#include "dzid/experiment.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <limits>
#include <mutex>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "dzid/csv.hpp"
#include "dzid/log.hpp"

namespace dzid {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string join(const std::string& dir, const char* name) { return (fs::path(dir) / name).string(); }

void store_stats(KeyValueFile& kv, const std::string& prefix, const MovingStats& s) {
  kv.set(prefix + ".rows", std::to_string(s.rows));
  for (int j = 0; j < kJoints; ++j) kv.set(prefix + ".moving" + std::to_string(j), format_double(s.per_joint[j]));
  kv.set(prefix + ".all_moving", format_double(s.all_moving));
  kv.set(prefix + ".all_moving_rows", std::to_string(s.all_moving_rows));
  kv.set(prefix + ".product", format_double(s.per_joint.prod()));
}

MovingStats load_stats(const KeyValueFile& kv, const std::string& prefix) {
  MovingStats s;
  s.rows = kv.get_u64(prefix + ".rows", 0);
  for (int j = 0; j < kJoints; ++j) s.per_joint[j] = kv.require_double(prefix + ".moving" + std::to_string(j));
  s.all_moving = kv.require_double(prefix + ".all_moving");
  s.all_moving_rows = kv.get_u64(prefix + ".all_moving_rows", 0);
  return s;
}

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::Ne: return "ne";
    case Method::NeRigid: return "ne_rigid";
    case Method::Conventional: return "conventional";
    case Method::Proposed: return "proposed";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  if (s == "ne") return Method::Ne;
  if (s == "ne_rigid") return Method::NeRigid;
  if (s == "conventional") return Method::Conventional;
  if (s == "proposed") return Method::Proposed;
  throw UsageError("unknown method '" + s + "' (expected ne|ne_rigid|conventional|proposed)");
}

void PreparedData::save(const std::string& dir) const {
  fs::create_directories(dir);
  write_dataset_csv(pool, join(dir, "train.csv"));
  write_dataset_csv(val, join(dir, "val.csv"));
  write_dataset_csv(test, join(dir, "test.csv"));
  write_dataset_csv(segment, join(dir, "segment.csv"));
  write_mask_csv(pool_mask, join(dir, "train_mask.csv"));
  write_mask_csv(segment_mask, join(dir, "segment_mask.csv"));
  scaler.save(join(dir, "scaler.txt"));

  KeyValueFile dz;
  dz.set("alpha", format_double(alpha));
  for (int j = 0; j < kJoints; ++j) dz.set("sigma" + std::to_string(j), format_double(sigma()[j]));
  dz.set("segment_begin", std::to_string(segment_begin));
  dz.set("rate_hz", format_double(pool.rate_hz));
  store_stats(dz, "record", record_stats);
  dz.save(join(dir, "deadzone.txt"));

  KeyValueFile geo;
  for (int j = 0; j < kJoints; ++j) geo.set("length" + std::to_string(j), format_double(geometry.lengths[j]));
  geo.set("gravity", format_double(geometry.gravity));
  geo.save(join(dir, "geometry.txt"));
}

PreparedData PreparedData::load(const std::string& dir) {
  if (!fs::is_directory(dir)) throw DataError("data directory not found: " + dir);
  PreparedData d;
  const KeyValueFile dz = KeyValueFile::load(join(dir, "deadzone.txt"));
  d.alpha = dz.require_double("alpha");
  Vec3 sigma;
  for (int j = 0; j < kJoints; ++j) sigma[j] = dz.require_double("sigma" + std::to_string(j));
  d.segment_begin = dz.get_u64("segment_begin", 0);
  d.record_stats = load_stats(dz, "record");
  const double rate = dz.get_double("rate_hz", 50.0);

  d.pool = read_dataset_csv(join(dir, "train.csv"), Provenance::Train);
  d.val = read_dataset_csv(join(dir, "val.csv"), Provenance::Validation);
  d.test = read_dataset_csv(join(dir, "test.csv"), Provenance::Test);
  d.segment = read_dataset_csv(join(dir, "segment.csv"), Provenance::Segment);
  for (Dataset* ds : {&d.pool, &d.val, &d.test, &d.segment}) ds->rate_hz = rate;
  d.pool_mask = read_mask_csv(join(dir, "train_mask.csv"), sigma);
  d.segment_mask = read_mask_csv(join(dir, "segment_mask.csv"), sigma);
  if (d.pool_mask.size() != d.pool.size() || d.segment_mask.size() != d.segment.size()) {
    throw DataError(dir + ": mask row counts do not match the datasets");
  }
  d.scaler = Scaler::load(join(dir, "scaler.txt"));

  const KeyValueFile geo = KeyValueFile::load(join(dir, "geometry.txt"));
  for (int j = 0; j < kJoints; ++j) d.geometry.lengths[j] = geo.require_double("length" + std::to_string(j));
  d.geometry.gravity = geo.require_double("gravity");
  return d;
}

PreparedData prepare_data(const TrajectoryLog& log, const Geometry& geom, const PrepareConfig& cfg) {
  cfg.mask.validate();
  const Dataset ds = build_dataset(log, cfg.filters);
  const Dataset body = ds.after_warmup();
  if (body.empty()) throw DataError("prepare: nothing left after the filter warm-up");
  const Vec3 sigma = joint_sigma(body);
  const DeadZoneMask mask = compute_mask(ds, sigma, cfg.mask);
  const Split split = split_dataset(ds, mask, cfg.seed, cfg.split);

  PreparedData d;
  d.alpha = cfg.mask.alpha;
  d.geometry = geom;
  d.record_stats = moving_stats(compute_mask(body, sigma, cfg.mask));
  d.pool = ds.subset(split.train, Provenance::Train);
  d.val = ds.subset(split.val, Provenance::Validation);
  d.test = ds.subset(split.test, Provenance::Test);
  const auto seg = split.segment_indices();
  d.segment = ds.subset(seg, Provenance::Segment);
  d.segment_begin = split.segment_begin;
  d.pool_mask = mask.subset(split.train);
  d.segment_mask = mask.subset(seg);
  d.scaler = Scaler::fit(d.pool);

  const MovingStats pool = d.pool_stats();
  spdlog::info("prepare: sigma = ({:.4g}, {:.4g}, {:.4g}) rad/s; record moving {:.3f} {:.3f} {:.3f}, all {:.3f}",
               sigma[0], sigma[1], sigma[2], d.record_stats.per_joint[0], d.record_stats.per_joint[1],
               d.record_stats.per_joint[2], d.record_stats.all_moving);
  spdlog::info("prepare: pool {} rows, {} with every joint moving ({:.1f}%)", pool.rows,
               pool.all_moving_rows, 100.0 * pool.all_moving);
  return d;
}

TrainResult train_network(const PreparedData& data, const Dataset& train, const DeadZoneMask& mask,
                          const TrainConfig& cfg) {
  return dzid::train(data.scaler.transform(train), target_matrix(train), mask.r,
                     data.scaler.transform(data.val), target_matrix(data.val), cfg);
}

NeModel fit_baseline(const PreparedData& data, const Dataset& train, const DeadZoneMask& mask,
                     Method method, double prior_scale) {
  if (method != Method::Ne && method != Method::NeRigid) {
    throw InvalidInput(std::string("fit_baseline: ") + to_string(method) + " is not a rigid-body method");
  }
  NeFitConfig cfg;
  cfg.viscous = method == Method::Ne;
  cfg.prior_scale = prior_scale;
  return ne_fit(train, mask, data.geometry, cfg);
}

Eigen::MatrixXd predict_torque(const PreparedData& data, const MlpModel& model, const Dataset& ds) {
  return predict(model, data.scaler.transform(ds));
}

std::vector<std::size_t> SweepConfig::default_sizes() {
  std::vector<std::size_t> s;
  for (std::size_t k = 300; k <= 3000; k += 300) s.push_back(k);
  return s;
}

void SweepConfig::validate(std::size_t pool_size) const {
  if (trials < 2) throw UsageError("sweep needs at least 2 trials per size");
  if (methods.empty()) throw UsageError("sweep needs at least one method");
  if (jobs < 1) throw UsageError("--jobs must be >= 1");
  for (std::size_t k : sizes.empty() ? default_sizes() : sizes) {
    if (k < 1 || k > pool_size) {
      throw UsageError("sample size " + std::to_string(k) + " outside the training pool (1.." +
                       std::to_string(pool_size) + ")");
    }
  }
  train.validate();
}

std::uint64_t trial_seed(std::uint64_t base, std::size_t size, int trial) {
  return base ^ hash_combine(mix64(size), static_cast<std::uint64_t>(trial));
}

int SweepCell::completed() const {
  int n = 0;
  for (double v : trials) n += std::isfinite(v) ? 1 : 0;
  return n;
}

const SweepCell* SweepReport::find(Method m, int joint, std::size_t size) const {
  for (const auto& c : cells) {
    if (c.method == m && c.joint == joint && c.size == size) return &c;
  }
  return nullptr;
}

Interval confidence_interval(const std::vector<double>& values, bool t_multiplier) {
  double sum = 0.0;
  int n = 0;
  for (double v : values) {
    if (std::isfinite(v)) {
      sum += v;
      ++n;
    }
  }
  Interval out;
  if (n == 0) return {kNaN, kNaN};
  out.mean = sum / n;
  if (n < 2) {
    out.half_width = kNaN;
    return out;
  }
  double ss = 0.0;
  for (double v : values) {
    if (std::isfinite(v)) ss += (v - out.mean) * (v - out.mean);
  }
  const double sd = std::sqrt(ss / (n - 1));
  double z = 1.96;
  if (t_multiplier) {
    const boost::math::students_t dist(n - 1);
    z = boost::math::quantile(boost::math::complement(dist, 0.025));
  }
  out.half_width = z * sd / std::sqrt(static_cast<double>(n));
  return out;
}

SweepReport run_sweep(const PreparedData& data, const SweepConfig& cfg) {
  cfg.validate(data.pool.size());
  const std::vector<std::size_t> sizes = cfg.sizes.empty() ? SweepConfig::default_sizes() : cfg.sizes;
  const std::size_t n_methods = cfg.methods.size();
  struct Task {
    std::size_t size;
    int trial;
  };
  std::vector<Task> tasks;
  for (std::size_t k : sizes) {
    for (int t = 0; t < cfg.trials; ++t) tasks.push_back({k, t});
  }
  // results[task][method] = per-joint test MSE, NaN on failure.
  std::vector<std::vector<Vec3>> results(tasks.size(), std::vector<Vec3>(n_methods, Vec3::Constant(kNaN)));

  const Eigen::MatrixXd y_test = target_matrix(data.test);
  const auto run_task = [&](std::size_t ti) {
    const Task& task = tasks[ti];
    const std::uint64_t seed = trial_seed(cfg.seed, task.size, task.trial);
    std::vector<std::size_t> picked;
    const Dataset sub = subsample(data.pool, task.size, seed, &picked);
    const DeadZoneMask mask = data.pool_mask.subset(picked);
    for (std::size_t mi = 0; mi < n_methods; ++mi) {
      const Method m = cfg.methods[mi];
      try {
        Eigen::MatrixXd pred;
        if (m == Method::Ne || m == Method::NeRigid) {
          pred = fit_baseline(data, sub, mask, m, cfg.prior_scale).predict(data.test);
        } else {
          TrainConfig tc = cfg.train;
          tc.seed = seed;
          tc.mode = m == Method::Proposed ? TrainMode::Proposed : TrainMode::Conventional;
          pred = predict_torque(data, train_network(data, sub, mask, tc).model, data.test);
        }
        const Eigen::VectorXd mse = column_mse(y_test, pred);
        if (!mse.allFinite()) throw NumericalError("non-finite test MSE");
        results[ti][mi] = mse;
      } catch (const std::exception& e) {
        spdlog::warn("sweep: {} at size {} trial {} failed: {}", to_string(m), task.size, task.trial,
                     e.what());
      }
    }
  };

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress;
  const auto worker = [&] {
    for (std::size_t ti; (ti = next.fetch_add(1)) < tasks.size();) {
      run_task(ti);
      const std::size_t d = ++done;
      std::lock_guard<std::mutex> lock(progress);
      spdlog::debug("sweep: {}/{} trials done", d, tasks.size());
    }
  };
  const int jobs = std::min<int>(cfg.jobs, static_cast<int>(tasks.size()));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
  }

  SweepReport report;
  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    for (int j = 0; j < kJoints; ++j) {
      for (std::size_t k : sizes) {
        SweepCell cell;
        cell.method = cfg.methods[mi];
        cell.joint = j;
        cell.size = k;
        for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
          if (tasks[ti].size == k) cell.trials.push_back(results[ti][mi][j]);
        }
        const Interval ci = confidence_interval(cell.trials, cfg.t_interval);
        cell.mean = ci.mean;
        cell.ci95 = ci.half_width;
        report.cells.push_back(std::move(cell));
      }
    }
  }
  for (const auto& per_task : results) {
    for (const Vec3& v : per_task) report.failures += v.allFinite() ? 0 : 1;
  }
  if (report.failures > 0) spdlog::warn("sweep: {} runs failed and were excluded", report.failures);
  return report;
}

TraceReport run_trace(const PreparedData& data, const NeModel& ne, const MlpModel& conventional,
                      const MlpModel& proposed) {
  if (data.segment.empty()) throw DataError("trace: reserved segment is empty");
  TraceReport r;
  r.rate_hz = data.segment.rate_hz;
  r.measured = target_matrix(data.segment);
  r.ne = ne.predict(data.segment);
  r.conventional = predict_torque(data, conventional, data.segment);
  r.proposed = predict_torque(data, proposed, data.segment);
  r.flags = Eigen::MatrixXd::Ones(r.measured.rows(), kJoints) - data.segment_mask.r;
  return r;
}

TraceDeviation trace_deviation(const TraceReport& r) {
  TraceDeviation d;
  double p_all = 0.0, c_all = 0.0;
  int n_all = 0;
  for (int j = 0; j < kJoints; ++j) {
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
      if (r.flags(i, j) < 0.5) continue;
      const double p = std::abs(r.proposed(i, j) - r.ne(i, j));
      const double c = std::abs(r.conventional(i, j) - r.ne(i, j));
      d.proposed[j] += p;
      d.conventional[j] += c;
      ++d.flagged[j];
      p_all += p;
      c_all += c;
      ++n_all;
    }
    if (d.flagged[j] > 0) {
      d.proposed[j] /= d.flagged[j];
      d.conventional[j] /= d.flagged[j];
    } else {
      d.proposed[j] = d.conventional[j] = kNaN;
    }
  }
  d.proposed_all = n_all ? p_all / n_all : kNaN;
  d.conventional_all = n_all ? c_all / n_all : kNaN;
  return d;
}

void write_sweep_csv(const SweepReport& r, const std::string& path) {
  std::size_t width = 0;
  for (const auto& c : r.cells) width = std::max(width, c.trials.size());
  std::vector<std::string> header{"method", "joint", "size", "mean_mse", "ci95", "trials"};
  for (std::size_t t = 0; t < width; ++t) header.push_back("trial" + std::to_string(t));
  CsvWriter out(path, header);
  for (const auto& c : r.cells) {
    std::string line = std::string(to_string(c.method)) + "," + std::to_string(c.joint) + "," +
                       std::to_string(c.size) + "," + format_double(c.mean) + "," +
                       format_double(c.ci95) + "," + std::to_string(c.completed());
    for (std::size_t t = 0; t < width; ++t) {
      line += ",";
      if (t < c.trials.size() && std::isfinite(c.trials[t])) line += format_double(c.trials[t]);
    }
    out.write_raw(line);
  }
  out.close();
}

SweepReport read_sweep_csv(const std::string& path) {
  const CsvText text = read_csv_text(path);
  if (text.header.size() < 6 || text.header[0] != "method") throw DataError(path + ": not a sweep report");
  const auto number = [&](const std::string& s) {
    if (s.empty()) return kNaN;
    try {
      return std::stod(s);
    } catch (const std::exception&) {
      if (s == "nan" || s == "-nan") return kNaN;
      throw DataError(path + ": bad number '" + s + "'");
    }
  };
  SweepReport r;
  for (const auto& row : text.rows) {
    if (row.size() != text.header.size()) throw DataError(path + ": ragged row");
    SweepCell c;
    c.method = parse_method(row[0]);
    c.joint = std::stoi(row[1]);
    c.size = std::stoul(row[2]);
    c.mean = number(row[3]);
    c.ci95 = number(row[4]);
    for (std::size_t i = 6; i < row.size(); ++i) c.trials.push_back(number(row[i]));
    r.failures += static_cast<int>(c.trials.size()) - c.completed();
    r.cells.push_back(std::move(c));
  }
  // Failures are counted per run, and each run fills one cell per joint.
  r.failures /= kJoints;
  return r;
}

namespace {

std::vector<std::string> trace_header() {
  std::vector<std::string> h{"t"};
  for (const char* group : {"tau", "ne", "conventional", "proposed", "flag"}) {
    for (int j = 0; j < kJoints; ++j) h.push_back(group + std::to_string(j));
  }
  return h;
}

}  // namespace

void write_trace_csv(const TraceReport& r, const std::string& path) {
  CsvWriter out(path, trace_header());
  std::vector<double> row(1 + 5 * kJoints);
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    row[0] = static_cast<double>(i) / r.rate_hz;
    const Eigen::MatrixXd* groups[5] = {&r.measured, &r.ne, &r.conventional, &r.proposed, &r.flags};
    for (int g = 0; g < 5; ++g) {
      for (int j = 0; j < kJoints; ++j) row[1 + g * kJoints + j] = (*groups[g])(i, j);
    }
    out.write_row(row);
  }
  out.close();
}

TraceReport read_trace_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  if (t.header != trace_header()) throw DataError(path + ": unexpected trace header");
  TraceReport r;
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  Eigen::MatrixXd* groups[5] = {&r.measured, &r.ne, &r.conventional, &r.proposed, &r.flags};
  for (auto* g : groups) g->resize(n, kJoints);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int g = 0; g < 5; ++g) {
      for (int j = 0; j < kJoints; ++j) (*groups[g])(i, j) = t.rows[i][1 + g * kJoints + j];
    }
  }
  if (n > 1) r.rate_hz = 1.0 / (t.rows[1][0] - t.rows[0][0]);
  return r;
}

void write_summary(const PreparedData& data, const std::optional<SweepReport>& sweep,
                   const std::string& path) {
  KeyValueFile kv;
  kv.set("alpha", format_double(data.alpha));
  for (int j = 0; j < kJoints; ++j) kv.set("sigma" + std::to_string(j), format_double(data.sigma()[j]));
  store_stats(kv, "record", data.record_stats);
  const MovingStats pool = data.pool_stats();
  store_stats(kv, "pool", pool);
  kv.set("usable.proposed", std::to_string(pool.rows));
  kv.set("usable.conventional", std::to_string(pool.all_moving_rows));
  kv.set("val.rows", std::to_string(data.val.size()));
  kv.set("test.rows", std::to_string(data.test.size()));
  kv.set("segment.rows", std::to_string(data.segment.size()));
  if (sweep) {
    kv.set("sweep.cells", std::to_string(sweep->cells.size()));
    kv.set("sweep.failures", std::to_string(sweep->failures));
  }
  kv.save(path);
}

}  // namespace dzid
