#pragma once

#include <string>
#include <vector>

#include "dzid/common.hpp"

namespace dzid {

// One 50 Hz record.
struct Sample {
  Vec3 q = Vec3::Zero();
  Vec3 dq = Vec3::Zero();
  Vec3 ddq = Vec3::Zero();
  Vec3 tau = Vec3::Zero();
};

enum class Provenance { Raw, Train, Validation, Test, Segment };

const char* to_string(Provenance p);

struct Dataset {
  std::vector<Sample> samples;
  double rate_hz = 50.0;
  Provenance tag = Provenance::Raw;
  // Leading samples still inside the filter warm-up window. They are kept so
  // the sample count equals the decimated log length, but never split out.
  std::size_t warmup = 0;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  const Sample& operator[](std::size_t i) const { return samples[i]; }

  Dataset subset(const std::vector<std::size_t>& indices, Provenance new_tag) const;
  // Copy without the warm-up rows.
  Dataset after_warmup() const;
};

inline constexpr int kInputs = 9;

// Network inputs (q, dq, ddq) as an N x 9 matrix and targets as N x 3.
Eigen::MatrixXd input_matrix(const Dataset& ds);
Eigen::MatrixXd target_matrix(const Dataset& ds);

void write_dataset_csv(const Dataset& ds, const std::string& path);
Dataset read_dataset_csv(const std::string& path, Provenance tag = Provenance::Raw);

}  // namespace dzid
