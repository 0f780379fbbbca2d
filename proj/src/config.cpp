#include "lsm/config.hpp"

#include <cstdlib>
#include <fstream>

namespace lsm {

using nlohmann::json;

void ExperimentConfig::validate() const {
  neuron.validate();
  law.validate();
  ensemble.member_dims();
  if (preprocess.binning.time_window == 0) throw ConfigError("config: preprocessing.time_window must be positive");
  if (preprocess.downscale < 1) throw ConfigError("config: preprocessing.downscale must be >= 1");
  if (!(preprocess.input_scale > 0)) throw ConfigError("config: preprocessing.input_scale must be positive");
  if (seeds.repeats < 1) throw ConfigError("config: seeds.repeats must be >= 1");
  if (threads < 1) throw ConfigError("config: threads must be >= 1");
  // Scheme/variant pairing does not need the input geometry.
  InputSpec probe;
  probe.scheme = input.scheme == InputKind::Standard ? InputScheme{StandardScheme{}} : InputScheme{ReceptiveFieldScheme{}};
  ensemble.validate(probe);
  if (state_mode == StateMode::PerSlab && !std::holds_alternative<TepreSpec>(ensemble.variant))
    throw ConfigError("config: per_slab state mode requires the TEPRE variant");
}

InputSpec ExperimentConfig::input_spec(int channels, int height, int width) const {
  InputSpec spec;
  spec.n_inputs = channels * height * width;
  spec.input_weight = input.weight;
  spec.density = input.density;
  if (input.scheme == InputKind::ReceptiveField)
    spec.scheme = ReceptiveFieldScheme{input.window_size, width, height, channels};
  return spec;
}

namespace {

template <typename T>
T required(const json& j, const char* key, const char* section) {
  if (!j.contains(key)) throw ConfigError(std::string("config: missing ") + section + "." + key);
  return j.at(key).get<T>();
}

template <typename T>
void optional_into(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  return j.contains(key) ? j.at(key) : empty;
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["dataset"] = {{"manifest", c.manifest.string()}};

  const auto& p = c.preprocess;
  j["preprocessing"] = {
      {"time_window", p.binning.time_window},
      {"merge_polarities", p.binning.merge_polarities},
      {"anchor", p.binning.anchor == TimeAnchor::Zero ? "zero" : "first_event"},
      {"num_frames", p.binning.num_frames},
      {"downscale", p.downscale},
      {"input_scale", p.input_scale},
      {"gabor",
       {{"enabled", p.gabor_enabled},
        {"orientations", p.gabor.orientations},
        {"wavelengths", p.gabor.wavelengths},
        {"kernel_size", p.gabor.kernel_size},
        {"sigma_per_wavelength", p.gabor.sigma_per_wavelength},
        {"aspect_ratio", p.gabor.aspect_ratio},
        {"phase", p.gabor.phase},
        {"zero_mean", p.gabor.zero_mean},
        {"merge_channels", p.gabor.merge_channels}}}};

  j["neuron"] = {{"tau_v", c.neuron.tau_v}, {"tau_u", c.neuron.tau_u}, {"theta", c.neuron.theta},
                 {"dt", c.neuron.dt},       {"w_lsm", c.neuron.w_lsm}};

  const auto& t = c.law.table.c;
  const auto& dims = c.ensemble.total_dims;
  j["reservoir"] = {{"dims", {dims.nx, dims.ny, dims.nz}},
                    {"lambda", c.law.lambda},
                    {"d", c.law.d},
                    {"c_table", {{"EE", t[0][0]}, {"EI", t[0][1]}, {"IE", t[1][0]}, {"II", t[1][1]}}}};

  j["input"] = {{"scheme", c.input.scheme == InputKind::Standard ? "standard" : "receptive_field"},
                {"weight", c.input.weight},
                {"density", c.input.density},
                {"window_size", c.input.window_size}};

  if (const auto* m = std::get_if<MulreSpec>(&c.ensemble.variant)) {
    j["ensemble"] = {{"variant", "mulre"}, {"d_list", m->d_list}};
  } else {
    const auto& tp = std::get<TepreSpec>(c.ensemble.variant);
    j["ensemble"] = {{"variant", "tepre"},
                     {"partitions", tp.partitions},
                     {"inter_density", tp.inter_density},
                     {"inter_weight", tp.inter_weight}};
  }

  j["readout"] = {{"l2", c.readout.l2},
                  {"learning_rate", c.readout.learning_rate},
                  {"max_epochs", c.readout.max_epochs},
                  {"tolerance", c.readout.tolerance},
                  {"backtracking", c.readout.backtracking},
                  {"standardize", c.readout.standardize},
                  {"state_mode", c.state_mode == StateMode::PerSlab ? "per_slab" : "full"}};

  j["seeds"] = {{"topology", c.seeds.topology}, {"input", c.seeds.input}, {"repeats", c.seeds.repeats}};
  j["output"] = {{"directory", c.output_dir.string()}};
  j["threads"] = c.threads;
  return j;
}

ExperimentConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  try {
    optional_into(j, "name", c.name);
    const auto& ds = section(j, "dataset");
    if (ds.contains("manifest")) {
      c.manifest = ds.at("manifest").get<std::string>();
      if (c.manifest.is_relative()) {
        if (const char* root = std::getenv("LSM_DATA_ROOT"); root && *root) c.manifest = std::filesystem::path(root) / c.manifest;
        else if (!base_dir.empty()) c.manifest = base_dir / c.manifest;
      }
    }

    const auto& p = section(j, "preprocessing");
    optional_into(p, "time_window", c.preprocess.binning.time_window);
    optional_into(p, "merge_polarities", c.preprocess.binning.merge_polarities);
    if (p.contains("anchor")) {
      const auto anchor = p.at("anchor").get<std::string>();
      if (anchor == "zero") c.preprocess.binning.anchor = TimeAnchor::Zero;
      else if (anchor == "first_event") c.preprocess.binning.anchor = TimeAnchor::FirstEvent;
      else throw ConfigError("config: preprocessing.anchor must be 'zero' or 'first_event'");
    }
    optional_into(p, "num_frames", c.preprocess.binning.num_frames);
    optional_into(p, "downscale", c.preprocess.downscale);
    optional_into(p, "input_scale", c.preprocess.input_scale);
    const auto& g = section(p, "gabor");
    optional_into(g, "enabled", c.preprocess.gabor_enabled);
    optional_into(g, "orientations", c.preprocess.gabor.orientations);
    optional_into(g, "wavelengths", c.preprocess.gabor.wavelengths);
    optional_into(g, "kernel_size", c.preprocess.gabor.kernel_size);
    optional_into(g, "sigma_per_wavelength", c.preprocess.gabor.sigma_per_wavelength);
    optional_into(g, "aspect_ratio", c.preprocess.gabor.aspect_ratio);
    optional_into(g, "phase", c.preprocess.gabor.phase);
    optional_into(g, "zero_mean", c.preprocess.gabor.zero_mean);
    optional_into(g, "merge_channels", c.preprocess.gabor.merge_channels);

    const auto& n = section(j, "neuron");
    optional_into(n, "tau_v", c.neuron.tau_v);
    optional_into(n, "tau_u", c.neuron.tau_u);
    optional_into(n, "theta", c.neuron.theta);
    optional_into(n, "dt", c.neuron.dt);
    optional_into(n, "w_lsm", c.neuron.w_lsm);

    const auto& r = section(j, "reservoir");
    if (r.contains("dims")) {
      const auto dims = r.at("dims").get<std::vector<int>>();
      if (dims.size() != 3) throw ConfigError("config: reservoir.dims must have three entries");
      c.ensemble.total_dims = {dims[0], dims[1], dims[2]};
    }
    optional_into(r, "lambda", c.law.lambda);
    optional_into(r, "d", c.law.d);
    const auto& ct = section(r, "c_table");
    optional_into(ct, "EE", c.law.table.c[0][0]);
    optional_into(ct, "EI", c.law.table.c[0][1]);
    optional_into(ct, "IE", c.law.table.c[1][0]);
    optional_into(ct, "II", c.law.table.c[1][1]);

    const auto& in = section(j, "input");
    if (in.contains("scheme")) {
      const auto scheme = in.at("scheme").get<std::string>();
      if (scheme == "standard") c.input.scheme = InputKind::Standard;
      else if (scheme == "receptive_field") c.input.scheme = InputKind::ReceptiveField;
      else throw ConfigError("config: input.scheme must be 'standard' or 'receptive_field'");
    }
    optional_into(in, "weight", c.input.weight);
    optional_into(in, "density", c.input.density);
    optional_into(in, "window_size", c.input.window_size);

    const auto& e = section(j, "ensemble");
    const auto variant = e.value("variant", std::string("tepre"));
    if (variant == "mulre") {
      MulreSpec m;
      optional_into(e, "d_list", m.d_list);
      c.ensemble.variant = m;
    } else if (variant == "tepre") {
      TepreSpec t;
      optional_into(e, "partitions", t.partitions);
      optional_into(e, "inter_density", t.inter_density);
      optional_into(e, "inter_weight", t.inter_weight);
      c.ensemble.variant = t;
    } else {
      throw ConfigError("config: ensemble.variant must be 'mulre' or 'tepre'");
    }

    const auto& ro = section(j, "readout");
    optional_into(ro, "l2", c.readout.l2);
    optional_into(ro, "learning_rate", c.readout.learning_rate);
    optional_into(ro, "max_epochs", c.readout.max_epochs);
    optional_into(ro, "tolerance", c.readout.tolerance);
    optional_into(ro, "backtracking", c.readout.backtracking);
    optional_into(ro, "standardize", c.readout.standardize);
    if (ro.contains("state_mode")) {
      const auto mode = ro.at("state_mode").get<std::string>();
      if (mode == "full") c.state_mode = StateMode::FullWindow;
      else if (mode == "per_slab") c.state_mode = StateMode::PerSlab;
      else throw ConfigError("config: readout.state_mode must be 'full' or 'per_slab'");
    }

    if (!j.contains("seeds")) throw ConfigError("config: seeds section is required (no implicit entropy)");
    const auto& s = j.at("seeds");
    c.seeds.topology = required<Seed>(s, "topology", "seeds");
    c.seeds.input = required<Seed>(s, "input", "seeds");
    optional_into(s, "repeats", c.seeds.repeats);

    const auto& out = section(j, "output");
    if (out.contains("directory")) c.output_dir = out.at("directory").get<std::string>();
    optional_into(j, "threads", c.threads);
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("config: ") + ex.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& ex) {
    throw ConfigError("config " + path.string() + ": " + ex.what());
  }
  return config_from_json(j, path.parent_path());
}

}  // namespace lsm
