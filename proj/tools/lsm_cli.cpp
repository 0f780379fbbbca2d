#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lsm/harness.hpp"
#include "lsm/synth.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<json> parse_sweep_values(lsm::SweepAxis axis, const std::string& text) {
  std::vector<json> values;
  if (axis == lsm::SweepAxis::DList) {
    // "0;0,5;0,4,6"
    std::stringstream groups(text);
    std::string group;
    while (std::getline(groups, group, ';')) {
      json list = json::array();
      std::stringstream items(group);
      std::string item;
      while (std::getline(items, item, ','))
        if (!item.empty()) list.push_back(std::stod(item));
      if (!list.empty()) values.push_back(std::move(list));
    }
  } else {
    std::stringstream items(text);
    std::string item;
    while (std::getline(items, item, ','))
      if (!item.empty()) values.push_back(std::stoi(item));
  }
  return values;
}

lsm::HarnessOptions harness_options(int threads, const std::string& out, const std::optional<lsm::Seed>& seed) {
  lsm::HarnessOptions o;
  if (threads > 0) o.threads = threads;
  if (!out.empty()) o.output_dir = out;
  o.seed_override = seed;
  return o;
}

void print_summary(const json& report) {
  const auto& s = report.at("summary");
  std::cout << report.at("config").at("name").get<std::string>() << ": test accuracy "
            << s.at("test_accuracy_mean").get<double>() << " +/- " << s.at("test_accuracy_std").get<double>()
            << " over " << report.at("repeats").size() << " seed(s)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Liquid state machine ensembles: simulation and benchmark harness"};
  app.require_subcommand(1);

  std::string config_path, out, axis, values_text;
  std::optional<lsm::Seed> seed_override;
  int threads = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed-override", seed_override, "Replace topology/input seeds (input = seed + 1)");
    cmd->add_option("--out", out, "Output directory");
    cmd->add_option("--threads", threads, "Worker threads for per-sample simulation");
  };

  auto* run = app.add_subcommand("run", "Run one experiment and write report.json");
  add_common(run);

  auto* sweep = app.add_subcommand("sweep", "Run one experiment per axis value");
  add_common(sweep);
  sweep->add_option("--axis", axis, "partitions | d_list | window")->required();
  sweep->add_option("--values", values_text, "Comma list; d_list groups separated by ';' (e.g. \"0;0,5;0,4,6\")")
      ->required();

  lsm::SynthParams synth_params;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a multi-phase synthetic event dataset");
  synth->add_option("--out", synth_out, "Dataset directory")->required();
  synth->add_option("--classes", synth_params.classes);
  synth->add_option("--phases", synth_params.phases);
  synth->add_option("--width", synth_params.width);
  synth->add_option("--height", synth_params.height);
  synth->add_option("--phase-frames", synth_params.phase_frames);
  synth->add_option("--frame-us", synth_params.frame_us);
  synth->add_option("--active-fraction", synth_params.active_fraction);
  synth->add_option("--rate", synth_params.rate);
  synth->add_option("--noise-rate", synth_params.noise_rate);
  synth->add_option("--train", synth_params.train_samples);
  synth->add_option("--test", synth_params.test_samples);
  synth->add_option("--signal-phase", synth_params.signal_phase, "Only this phase carries class information");
  synth->add_option("--seed", synth_params.seed);

  std::string convert_in, convert_out;
  std::uint32_t width = 0, height = 0;
  std::optional<std::uint32_t> label;
  auto* convert = app.add_subcommand("convert", "Convert between CSV t,x,y,p and binary EVS1 event files");
  convert->add_option("--in", convert_in)->required()->check(CLI::ExistingFile);
  convert->add_option("--out", convert_out)->required();
  convert->add_option("--width", width, "Sensor width (CSV input; default max x + 1)");
  convert->add_option("--height", height, "Sensor height (CSV input; default max y + 1)");
  convert->add_option("--label", label, "Class label (CSV input)");

  std::string input_shape;
  auto* topo = app.add_subcommand("topo-export", "Write every member's reservoir and input map as text");
  add_common(topo);
  topo->add_option("--input-shape", input_shape, "C,H,W of the input frames (default: probe the dataset)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto config = lsm::load_config(config_path);
      const auto report = lsm::run_experiment(config, harness_options(threads, out, seed_override));
      print_summary(report);
    } else if (sweep->parsed()) {
      const auto config = lsm::load_config(config_path);
      const auto ax = lsm::parse_sweep_axis(axis);
      const auto values = parse_sweep_values(ax, values_text);
      const auto reports = lsm::run_sweep(config, ax, values, harness_options(threads, out, seed_override));
      std::cout << lsm::sweep_table(ax, values, reports);
    } else if (synth->parsed()) {
      const auto manifest = lsm::write_synth_dataset(synth_params, synth_out);
      std::cout << "wrote " << manifest.string() << '\n';
    } else if (convert->parsed()) {
      const auto ext = fs::path(convert_in).extension();
      if (ext == ".csv") {
        std::ifstream is(convert_in);
        lsm::write_events(fs::path(convert_out), lsm::read_events_csv(is, width, height, label));
      } else {
        const auto stream = lsm::read_events(fs::path(convert_in));
        std::ofstream os(convert_out);
        lsm::write_events_csv(os, stream);
        if (!os) throw lsm::DatasetError("cannot write " + convert_out);
      }
    } else if (topo->parsed()) {
      auto config = lsm::load_config(config_path);
      if (seed_override) {
        config.seeds.topology = *seed_override;
        config.seeds.input = *seed_override + 1;
      }
      int c = 0, h = 0, w = 0;
      if (!input_shape.empty()) {
        char s1 = 0, s2 = 0;
        std::istringstream is(input_shape);
        if (!(is >> c >> s1 >> h >> s2 >> w) || s1 != ',' || s2 != ',')
          throw lsm::ConfigError("--input-shape must be C,H,W");
      } else {
        const auto entries = lsm::read_manifest(config.manifest);
        if (entries.empty()) throw lsm::DatasetError("manifest is empty; pass --input-shape");
        const auto frames = lsm::preprocess(lsm::read_events(entries.front().path), config.preprocess);
        c = frames.channels, h = frames.height, w = frames.width;
      }
      const auto spec = config.input_spec(c, h, w);
      const auto ensemble = lsm::build_ensemble(config.ensemble, config.law, spec, config.neuron,
                                                {config.preprocess.input_scale}, config.seeds.topology,
                                                config.seeds.input);
      std::ofstream file;
      if (!out.empty()) file.open(out);
      std::ostream& os = out.empty() ? std::cout : file;
      for (std::size_t k = 0; k < ensemble.members().size(); ++k) {
        os << "member " << k << '\n';
        lsm::write_topology(os, ensemble.members()[k].topology);
        lsm::write_input_map(os, ensemble.members()[k].input);
      }
      os << "inter_edges " << ensemble.inter_edges().size() << '\n';
      for (const auto& e : ensemble.inter_edges()) os << e.src << ' ' << e.dst << ' ' << e.weight << '\n';
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 2;
  }
  return 0;
}
