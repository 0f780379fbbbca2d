#include "lsm/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace lsm {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<ManifestEntry> read_manifest(const fs::path& manifest) {
  std::ifstream is(manifest);
  if (!is) throw DatasetError("cannot open dataset manifest " + manifest.string());
  const fs::path root = manifest.parent_path();

  std::vector<ManifestEntry> entries;
  std::string line;
  while (std::getline(is, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    ManifestEntry e;
    std::string path;
    if (!(fields >> e.split)) continue;
    if (!(fields >> path)) throw DatasetError("manifest: missing path after split '" + e.split + "'");
    if (e.split != "train" && e.split != "test") throw DatasetError("manifest: split must be train or test");
    e.path = fs::path(path).is_relative() ? root / path : fs::path(path);
    if (!fs::exists(e.path)) throw DatasetError("manifest: missing event file " + e.path.string());
    entries.push_back(std::move(e));
  }
  return entries;
}

FrameSequence preprocess(const EventStream& stream, const PreprocessConfig& config) {
  FrameSequence frames = bin_events(stream, config.binning);
  if (config.downscale > 1) frames = downscale(frames, config.downscale);
  if (config.gabor_enabled) frames = gabor_bank(frames, config.gabor);
  return frames;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Runs fn(i) for i in [0, n) on `threads` workers; results are written by
/// index so output order never depends on scheduling.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  for (int w = 0; w < std::min(threads, n); ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t hash_states(const std::vector<SampleStateVector>& states, std::uint64_t h) {
  for (const auto& s : states) {
    h = fnv1a(&s.label, sizeof s.label, h);
    h = fnv1a(s.features.data(), sizeof(double) * static_cast<std::size_t>(s.features.size()), h);
  }
  return h;
}

json matrix_json(const Eigen::MatrixXi& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

struct SampleResult {
  SampleStateVector state;
  std::vector<double> member_spikes;
  std::vector<Eigen::VectorXd> member_counts;
  int steps = 0;
  double preprocess_s = 0;
  double simulate_s = 0;
};

}  // namespace

json run_experiment(ExperimentConfig config, const HarnessOptions& options) {
  if (options.threads) config.threads = *options.threads;
  if (options.output_dir) config.output_dir = *options.output_dir;
  if (options.seed_override) {
    config.seeds.topology = *options.seed_override;
    config.seeds.input = *options.seed_override + 1;
  }
  config.validate();
  const auto run_start = Clock::now();

  if (config.manifest.empty()) throw DatasetError("config: dataset.manifest is required");
  auto t0 = Clock::now();
  const auto entries = read_manifest(config.manifest);
  std::vector<const ManifestEntry*> train, test;
  for (const auto& e : entries) (e.split == "train" ? train : test).push_back(&e);
  if (train.empty() || test.empty()) throw DatasetError("manifest must list both train and test samples");
  const double manifest_s = seconds_since(t0);

  // Input geometry comes from the first preprocessed training sample.
  const FrameSequence probe = preprocess(read_events(train.front()->path), config.preprocess);
  const InputSpec input = config.input_spec(probe.channels, probe.height, probe.width);

  std::vector<const ManifestEntry*> all = train;
  all.insert(all.end(), test.begin(), test.end());

  json repeats = json::array();
  std::vector<double> test_acc, train_acc;
  for (int r = 0; r < config.seeds.repeats; ++r) {
    const Seed topo_seed = config.seeds.topology + static_cast<Seed>(r);
    const Seed input_seed = config.seeds.input + static_cast<Seed>(r);

    t0 = Clock::now();
    const Ensemble ensemble =
        build_ensemble(config.ensemble, config.law, input, config.neuron, {config.preprocess.input_scale}, topo_seed, input_seed);
    const double build_s = seconds_since(t0);

    t0 = Clock::now();
    std::vector<SampleResult> results(all.size());
    parallel_for(static_cast<int>(all.size()), config.threads, [&](int i) {
      auto ts = Clock::now();
      const EventStream stream = read_events(all[i]->path);
      if (!stream.label) throw DatasetError("event file has no label: " + all[i]->path.string());
      const FrameSequence frames = preprocess(stream, config.preprocess);
      if (frames.frame_size() != probe.frame_size())
        throw DatasetError("sample frame geometry differs from the first sample: " + all[i]->path.string());
      results[i].preprocess_s = seconds_since(ts);
      ts = Clock::now();
      const auto records = ensemble.run(frames);
      results[i].simulate_s = seconds_since(ts);
      results[i].state = extract_state(records, config.state_mode, static_cast<int>(*stream.label));
      results[i].steps = frames.steps();
      for (const auto& rec : records) {
        results[i].member_spikes.push_back(rec.total_spikes());
        results[i].member_counts.push_back(rec.counts);
      }
    });
    const double pipeline_s = seconds_since(t0);

    std::vector<SampleStateVector> train_states, test_states;
    double preprocess_cpu = 0, simulate_cpu = 0;
    long long total_steps = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
      (i < train.size() ? train_states : test_states).push_back(results[i].state);
      preprocess_cpu += results[i].preprocess_s;
      simulate_cpu += results[i].simulate_s;
      total_steps += results[i].steps;
    }

    // Spike-rate statistics per member over all samples.
    json spike_stats = json::array();
    const auto& members = ensemble.members();
    for (std::size_t k = 0; k < members.size(); ++k) {
      const int n = members[k].topology.size();
      double spikes = 0;
      Eigen::VectorXd per_neuron = Eigen::VectorXd::Zero(n);
      for (const auto& res : results) {
        spikes += res.member_spikes[k];
        per_neuron += res.member_counts[k];
      }
      const double silent = static_cast<double>((per_neuron.array() == 0).count()) / n;
      spike_stats.push_back({{"member", k},
                             {"neurons", n},
                             {"recurrent_edges", members[k].topology.edges.size()},
                             {"input_edges", members[k].input.edges.size()},
                             {"mean_spikes_per_sample", spikes / static_cast<double>(results.size())},
                             {"mean_rate_per_neuron_step", spikes / (static_cast<double>(n) * static_cast<double>(total_steps))},
                             {"silent_fraction", silent}});
    }

    t0 = Clock::now();
    const auto model = train_readout(train_states, config.readout);
    const double train_s = seconds_since(t0);
    t0 = Clock::now();
    const Metrics train_metrics = evaluate(model, train_states);
    const Metrics test_metrics = evaluate(model, test_states);
    const double eval_s = seconds_since(t0);

    const std::uint64_t state_hash = hash_states(test_states, hash_states(train_states, 0xcbf29ce484222325ULL));
    train_acc.push_back(train_metrics.accuracy);
    test_acc.push_back(test_metrics.accuracy);

    json rep = {{"repeat", r},
                {"seeds", {{"topology", topo_seed}, {"input", input_seed}}},
                {"train_accuracy", train_metrics.accuracy},
                {"test_accuracy", test_metrics.accuracy},
                {"confusion", matrix_json(test_metrics.confusion)},
                {"state_hash", hex(state_hash)},
                {"state_dim", train_states.front().features.size()},
                {"inter_partition_edges", ensemble.inter_edges().size()},
                {"readout", {{"epochs", model.epochs_run}, {"final_loss", model.loss_history.back()}}},
                {"spike_stats", spike_stats},
                {"timings",
                 {{"build_s", build_s},
                  {"pipeline_wall_s", pipeline_s},
                  {"preprocess_cpu_s", preprocess_cpu},
                  {"simulate_cpu_s", simulate_cpu},
                  {"train_s", train_s},
                  {"evaluate_s", eval_s}}}};

    if (options.write_artifacts) {
      fs::create_directories(config.output_dir);
      std::ofstream os(config.output_dir / ("readout_" + std::to_string(r) + ".txt"));
      save_readout(os, model);
    }
    repeats.push_back(std::move(rep));
  }

  auto mean_std = [](const std::vector<double>& v) {
    double mean = 0, var = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
    return std::pair{mean, sd};
  };
  const auto [test_mean, test_sd] = mean_std(test_acc);
  const auto [train_mean, train_sd] = mean_std(train_acc);

  json report = {
      {"config", to_json(config)},
      {"dataset",
       {{"train_samples", train.size()},
        {"test_samples", test.size()},
        {"input_shape", {probe.channels, probe.height, probe.width}},
        {"n_inputs", input.n_inputs}}},
      {"repeats", repeats},
      {"summary",
       {{"test_accuracy_mean", test_mean},
        {"test_accuracy_std", test_sd},
        {"train_accuracy_mean", train_mean},
        {"train_accuracy_std", train_sd}}},
      {"timings", {{"manifest_s", manifest_s}, {"total_wall_s", seconds_since(run_start)}}}};

  if (options.write_artifacts) {
    fs::create_directories(config.output_dir);
    std::ofstream os(config.output_dir / "report.json");
    os << report.dump(2) << '\n';
    if (!os) throw DatasetError("cannot write report to " + config.output_dir.string());
  }
  return report;
}

std::string report_fingerprint(const json& report) {
  json copy = report;
  copy.erase("timings");
  if (copy.contains("repeats"))
    for (auto& r : copy["repeats"]) r.erase("timings");
  if (copy.contains("config")) {
    copy["config"].erase("output");
    copy["config"].erase("threads");
  }
  const std::string text = copy.dump();
  return hex(fnv1a(text.data(), text.size()));
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "partitions") return SweepAxis::Partitions;
  if (name == "d_list") return SweepAxis::DList;
  if (name == "window") return SweepAxis::Window;
  throw ConfigError("sweep axis must be partitions, d_list or window");
}

namespace {

std::string axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Partitions: return "partitions";
    case SweepAxis::DList: return "d_list";
    case SweepAxis::Window: return "window";
  }
  return "?";
}

std::string value_label(const json& v) {
  if (!v.is_array()) return v.dump();
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ",") + x.dump();
  return s;
}

}  // namespace

std::vector<json> run_sweep(const ExperimentConfig& config, SweepAxis axis, const std::vector<json>& values,
                            const HarnessOptions& options) {
  if (values.empty()) throw ConfigError("sweep: empty value list");
  const fs::path base_out = options.output_dir.value_or(config.output_dir);
  std::vector<json> reports;
  for (std::size_t i = 0; i < values.size(); ++i) {
    ExperimentConfig c = config;
    try {
      switch (axis) {
        case SweepAxis::Partitions: {
          auto* t = std::get_if<TepreSpec>(&c.ensemble.variant);
          if (!t) throw ConfigError("sweep: partitions axis requires the TEPRE variant");
          t->partitions = values[i].get<int>();
          break;
        }
        case SweepAxis::DList: {
          auto* m = std::get_if<MulreSpec>(&c.ensemble.variant);
          if (!m) throw ConfigError("sweep: d_list axis requires the MuLRE variant");
          m->d_list = values[i].get<std::vector<double>>();
          break;
        }
        case SweepAxis::Window:
          c.input.window_size = values[i].get<int>();
          break;
      }
    } catch (const json::exception& ex) {
      throw ConfigError(std::string("sweep: bad axis value: ") + ex.what());
    }
    HarnessOptions o = options;
    o.output_dir = base_out / (axis_name(axis) + "_" + std::to_string(i));
    reports.push_back(run_experiment(c, o));
  }
  if (options.write_artifacts) {
    fs::create_directories(base_out);
    std::ofstream os(base_out / "sweep_summary.tsv");
    os << sweep_table(axis, values, reports);
  }
  return reports;
}

std::string sweep_table(SweepAxis axis, const std::vector<json>& values, const std::vector<json>& reports) {
  std::ostringstream os;
  os << axis_name(axis) << "\ttest_mean\ttest_std\ttrain_mean\tper_repeat_test\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& s = reports[i].at("summary");
    os << value_label(values[i]) << '\t' << s.at("test_accuracy_mean").get<double>() << '\t'
       << s.at("test_accuracy_std").get<double>() << '\t' << s.at("train_accuracy_mean").get<double>() << '\t';
    bool first = true;
    for (const auto& r : reports[i].at("repeats")) {
      os << (first ? "" : ",") << r.at("test_accuracy").get<double>();
      first = false;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace lsm
