#include "dzid/dataset.hpp"

#include "dzid/csv.hpp"

namespace dzid {

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::Raw: return "raw";
    case Provenance::Train: return "train";
    case Provenance::Validation: return "val";
    case Provenance::Test: return "test";
    case Provenance::Segment: return "segment";
  }
  return "unknown";
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices, Provenance new_tag) const {
  Dataset out;
  out.rate_hz = rate_hz;
  out.tag = new_tag;
  out.samples.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= samples.size()) throw InvalidInput("subset index out of range");
    out.samples.push_back(samples[i]);
  }
  return out;
}

Dataset Dataset::after_warmup() const {
  Dataset out;
  out.rate_hz = rate_hz;
  out.tag = tag;
  if (warmup < samples.size()) {
    out.samples.assign(samples.begin() + static_cast<std::ptrdiff_t>(warmup), samples.end());
  }
  return out;
}

Eigen::MatrixXd input_matrix(const Dataset& ds) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(ds.size()), kInputs);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& s = ds.samples[i];
    const auto r = static_cast<Eigen::Index>(i);
    x.block<1, 3>(r, 0) = s.q.transpose();
    x.block<1, 3>(r, 3) = s.dq.transpose();
    x.block<1, 3>(r, 6) = s.ddq.transpose();
  }
  return x;
}

Eigen::MatrixXd target_matrix(const Dataset& ds) {
  Eigen::MatrixXd y(static_cast<Eigen::Index>(ds.size()), kJoints);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    y.row(static_cast<Eigen::Index>(i)) = ds.samples[i].tau.transpose();
  }
  return y;
}

void write_dataset_csv(const Dataset& ds, const std::string& path) {
  CsvWriter out(path, {"q0", "q1", "q2", "dq0", "dq1", "dq2", "ddq0", "ddq1", "ddq2", "tau0",
                       "tau1", "tau2"});
  std::vector<double> row(12);
  for (const auto& s : ds.samples) {
    for (int j = 0; j < kJoints; ++j) {
      row[j] = s.q[j];
      row[3 + j] = s.dq[j];
      row[6 + j] = s.ddq[j];
      row[9 + j] = s.tau[j];
    }
    out.write_row(row);
  }
  out.close();
}

Dataset read_dataset_csv(const std::string& path, Provenance tag) {
  const CsvTable table = read_csv(path);
  static const char* kNames[4] = {"q", "dq", "ddq", "tau"};
  std::array<std::array<std::size_t, kJoints>, 4> idx{};
  for (int g = 0; g < 4; ++g) {
    for (int j = 0; j < kJoints; ++j) {
      idx[g][j] = table.column_index(kNames[g] + std::to_string(j));
    }
  }
  Dataset ds;
  ds.tag = tag;
  ds.samples.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    Sample s;
    for (int j = 0; j < kJoints; ++j) {
      s.q[j] = row[idx[0][j]];
      s.dq[j] = row[idx[1][j]];
      s.ddq[j] = row[idx[2][j]];
      s.tau[j] = row[idx[3][j]];
    }
    ds.samples.push_back(s);
  }
  return ds;
}

}  // namespace dzid
