#include "lsm/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <cmath>
#include <numeric>
#include <tuple>

#include "lsm/rng.hpp"

namespace lsm {

namespace {

struct Pattern {
  std::vector<std::pair<int, std::uint8_t>> pixels;  // (pixel index, polarity)
};

Pattern make_pattern(const SynthParams& p, Rng& rng) {
  const int n = p.width * p.height;
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  shuffle(idx.begin(), idx.end(), rng);
  const int active = std::max(1, static_cast<int>(std::lround(p.active_fraction * n)));
  Pattern pat;
  for (int i = 0; i < active; ++i) pat.pixels.emplace_back(idx[i], static_cast<std::uint8_t>(uniform_index(rng, 2)));
  std::sort(pat.pixels.begin(), pat.pixels.end());
  return pat;
}

/// pattern index shown by each class in each phase
std::vector<std::vector<int>> class_sequences(const SynthParams& p) {
  std::vector<std::vector<int>> seq;
  if (p.signal_phase < 0) {
    std::vector<int> perm(static_cast<std::size_t>(p.phases));
    std::iota(perm.begin(), perm.end(), 0);
    do {
      seq.push_back(perm);
    } while (static_cast<int>(seq.size()) < p.classes && std::next_permutation(perm.begin(), perm.end()));
    if (static_cast<int>(seq.size()) < p.classes)
      throw ConfigError("synth: more classes than orderings of the phase patterns");
  } else {
    // Shared patterns 0..phases-1; class-specific patterns follow.
    for (int c = 0; c < p.classes; ++c) {
      std::vector<int> s(static_cast<std::size_t>(p.phases));
      std::iota(s.begin(), s.end(), 0);
      s[p.signal_phase] = p.phases + c;
      seq.push_back(std::move(s));
    }
  }
  return seq;
}

std::vector<Pattern> prototypes(const SynthParams& p) {
  Rng rng(mix_seed(p.seed, 0));
  const int count = p.signal_phase < 0 ? p.phases : p.phases + p.classes;
  std::vector<Pattern> pats;
  for (int i = 0; i < count; ++i) pats.push_back(make_pattern(p, rng));
  return pats;
}

}  // namespace

void SynthParams::validate() const {
  if (classes < 2) throw ConfigError("synth: classes must be >= 2");
  if (phases < 1 || phase_frames < 1 || frame_us < 1) throw ConfigError("synth: phase geometry must be positive");
  if (width < 1 || height < 1 || width > 0xFFFF || height > 0xFFFF) throw ConfigError("synth: bad sensor size");
  if (!(active_fraction > 0 && active_fraction <= 1)) throw ConfigError("synth: active_fraction must lie in (0, 1]");
  if (!(rate >= 0 && rate <= 1) || !(noise_rate >= 0 && noise_rate <= 1))
    throw ConfigError("synth: rates are per-frame probabilities in [0, 1]");
  if (train_samples < 0 || test_samples < 0) throw ConfigError("synth: sample counts must be >= 0");
  if (signal_phase >= phases) throw ConfigError("synth: signal_phase out of range");
}

EventStream synth_sample(const SynthParams& p, bool test_split, int index) {
  p.validate();
  const auto pats = prototypes(p);
  const auto seq = class_sequences(p);
  const int label = index % p.classes;

  Rng rng(mix_seed(p.seed, (test_split ? 0x100000000ULL : 0x80000000ULL) + static_cast<std::uint64_t>(index)));
  EventStream s;
  s.width = static_cast<std::uint32_t>(p.width);
  s.height = static_cast<std::uint32_t>(p.height);
  s.label = static_cast<std::uint32_t>(label);
  const int n_pix = p.width * p.height;
  for (int phase = 0; phase < p.phases; ++phase) {
    const auto& pat = pats[seq[label][phase]];
    for (int f = 0; f < p.phase_frames; ++f) {
      const std::uint64_t t0 = static_cast<std::uint64_t>(phase * p.phase_frames + f) * p.frame_us;
      auto emit = [&](int pixel, std::uint8_t pol) {
        const auto t = t0 + uniform_index(rng, p.frame_us);
        s.events.push_back({t, static_cast<std::uint16_t>(pixel % p.width), static_cast<std::uint16_t>(pixel / p.width), pol});
      };
      for (const auto& [pixel, pol] : pat.pixels)
        if (uniform01(rng) < p.rate) emit(pixel, pol);
      if (p.noise_rate > 0)
        for (int pixel = 0; pixel < n_pix; ++pixel)
          if (uniform01(rng) < p.noise_rate) emit(pixel, static_cast<std::uint8_t>(uniform_index(rng, 2)));
    }
  }
  std::sort(s.events.begin(), s.events.end(), [](const Event& a, const Event& b) {
    return std::tie(a.t, a.y, a.x, a.p) < std::tie(b.t, b.y, b.x, b.p);
  });
  return s;
}

std::filesystem::path write_synth_dataset(const SynthParams& p, const std::filesystem::path& dir) {
  p.validate();
  namespace fs = std::filesystem;
  fs::create_directories(dir / "train");
  fs::create_directories(dir / "test");
  const auto manifest = dir / "manifest.txt";
  std::ofstream m(manifest);
  if (!m) throw DatasetError("synth: cannot write " + manifest.string());
  m << "# synthetic multi-phase dataset: classes=" << p.classes << " phases=" << p.phases
    << " phase_frames=" << p.phase_frames << " frame_us=" << p.frame_us << " seed=" << p.seed << '\n';
  for (int split = 0; split < 2; ++split) {
    const bool test = split == 1;
    const char* name = test ? "test" : "train";
    const int count = test ? p.test_samples : p.train_samples;
    for (int i = 0; i < count; ++i) {
      char file[32];
      std::snprintf(file, sizeof file, "%05d.evs", i);
      const fs::path rel = fs::path(name) / file;
      write_events(dir / rel, synth_sample(p, test, i));
      m << name << ' ' << rel.string() << '\n';
    }
  }
  return manifest;
}

}  // namespace lsm
