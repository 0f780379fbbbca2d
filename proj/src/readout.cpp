#include "lsm/readout.hpp"

#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>

#include "io_util.hpp"

namespace lsm {

SampleStateVector extract_state(const std::vector<SpikeRecord>& records, StateMode mode, int label) {
  if (records.empty()) throw DatasetError("extract_state: no spike records");
  Eigen::Index total = 0;
  for (const auto& r : records) total += r.counts.size();
  SampleStateVector s;
  s.label = label;
  s.features.resize(total);
  Eigen::Index offset = 0;
  for (const auto& r : records) {
    if (mode == StateMode::PerSlab) {
      if (!r.slab_counts) throw DatasetError("extract_state: per-slab mode requires gated (TEPRE) records");
      s.features.segment(offset, r.counts.size()) = *r.slab_counts;
    } else {
      s.features.segment(offset, r.counts.size()) = r.counts;
    }
    offset += r.counts.size();
  }
  return s;
}

void save_readout(std::ostream& os, const ReadoutModel<double>& model) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "lsm-readout 1\n";
  os << "classes " << model.classes() << " features " << model.features() << '\n';
  auto write_row = [&](const char* tag, const auto& row) {
    if (tag) os << tag;
    for (Eigen::Index j = 0; j < row.size(); ++j) os << (j || tag ? " " : "") << row[j];
    os << '\n';
  };
  write_row("scale", model.scale);
  write_row("bias", model.bias);
  os << "weights\n";
  for (int k = 0; k < model.classes(); ++k) write_row(nullptr, model.weights.row(k));
  if (!os) throw DatasetError("save_readout: write failed");
}

ReadoutModel<double> load_readout(std::istream& is) {
  using io::expect_token;
  expect_token(is, "lsm-readout");
  int version = 0, classes = 0, features = 0;
  is >> version;
  if (version != 1) throw ConfigError("load_readout: unsupported version");
  expect_token(is, "classes");
  is >> classes;
  expect_token(is, "features");
  is >> features;
  if (!is || classes < 2 || features < 1) throw ConfigError("load_readout: bad header");
  ReadoutModel<double> model;
  model.scale.resize(features);
  model.bias.resize(classes);
  model.weights.resize(classes, features);
  expect_token(is, "scale");
  for (int j = 0; j < features; ++j) is >> model.scale[j];
  expect_token(is, "bias");
  for (int k = 0; k < classes; ++k) is >> model.bias[k];
  expect_token(is, "weights");
  for (int k = 0; k < classes; ++k)
    for (int j = 0; j < features; ++j) is >> model.weights(k, j);
  if (!is) throw ConfigError("load_readout: truncated model");
  if (!model.weights.allFinite() || !model.bias.allFinite() || !model.scale.allFinite())
    throw ConfigError("load_readout: non-finite parameters");
  return model;
}

}  // namespace lsm
