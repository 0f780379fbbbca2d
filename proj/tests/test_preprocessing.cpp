#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "lsm/preprocessing.hpp"
#include "lsm/rng.hpp"

using namespace lsm;

namespace {

EventStream random_stream(Rng& rng, int n, std::uint32_t w, std::uint32_t h, std::uint64_t t0 = 0) {
  EventStream s;
  s.width = w;
  s.height = h;
  s.label = 3;
  std::uint64_t t = t0;
  for (int i = 0; i < n; ++i) {
    t += uniform_index(rng, 700);
    s.events.push_back({t, static_cast<std::uint16_t>(uniform_index(rng, w)),
                        static_cast<std::uint16_t>(uniform_index(rng, h)), static_cast<std::uint8_t>(uniform_index(rng, 2))});
  }
  return s;
}

// Direct evaluation of a Gabor kernel response at the frame centre region,
// written without the library's kernel builder.
double oracle_energy(const Eigen::MatrixXd& image, double angle, double wavelength) {
  const int r = 3;
  const double sigma = 0.5 * wavelength;
  Eigen::MatrixXd k(7, 7);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j) {
      const double x = j - r, y = i - r;
      const double xr = x * std::cos(angle) + y * std::sin(angle);
      const double yr = -x * std::sin(angle) + y * std::cos(angle);
      k(i, j) = std::exp(-(xr * xr + yr * yr) / (2 * sigma * sigma)) * std::cos(2 * std::numbers::pi * xr / wavelength);
    }
  k.array() -= k.mean();
  double total = 0;
  for (int y = 0; y < image.rows(); ++y)
    for (int x = 0; x < image.cols(); ++x) {
      double acc = 0;
      for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j) {
          const int yy = y + i - r, xx = x + j - r;
          if (yy >= 0 && yy < image.rows() && xx >= 0 && xx < image.cols()) acc += k(i, j) * image(yy, xx);
        }
      total += std::max(acc, 0.0);
    }
  return total;
}

}  // namespace

TEST_CASE("single event makes a single frame with one count") {
  EventStream s{4, 3, std::nullopt, {{0, 2, 1, 1}}};
  const auto f = bin_events(s, 1000);
  CHECK(f.steps() == 1);
  CHECK(f.channels == 2);
  CHECK(f.data.sum() == 1.0);
  CHECK(f.at(0, 1, 1, 2) == 1.0);
}

TEST_CASE("window boundary falls on floor division") {
  EventStream s{2, 1, std::nullopt, {{0, 0, 0, 0}, {999, 1, 0, 0}, {1000, 0, 0, 1}}};
  const auto f = bin_events(s, 1000);
  REQUIRE(f.steps() == 2);
  CHECK(f.data.row(0).sum() == 2.0);
  CHECK(f.data.row(1).sum() == 1.0);
}

TEST_CASE("empty stream bins to an empty sequence") {
  EventStream s{4, 4, std::nullopt, {}};
  CHECK(bin_events(s, 1000).steps() == 0);
}

TEST_CASE("binning options: merged polarity, zero anchor, fixed frame count") {
  EventStream s{2, 2, 1, {{2500, 0, 0, 0}, {2600, 1, 1, 1}, {9000, 1, 0, 1}}};
  BinOptions o;
  o.time_window = 1000;
  o.merge_polarities = true;
  o.anchor = TimeAnchor::Zero;
  o.num_frames = 5;
  const auto f = bin_events(s, o);
  CHECK(f.channels == 1);
  CHECK(f.steps() == 5);
  CHECK(f.data.row(2).sum() == 2.0);
  CHECK(f.data.sum() == 2.0);  // the event at 9000 us falls past frame 4
}

TEST_CASE("property: conservation and shift covariance of binning") {
  Rng rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const auto s = random_stream(rng, 1 + static_cast<int>(uniform_index(rng, 300)), 16, 8, 100);
    const auto f = bin_events(s, 1000);
    CHECK(f.data.sum() == static_cast<double>(s.events.size()));

    BinOptions o;
    o.anchor = TimeAnchor::Zero;
    const auto base = bin_events(s, o);
    auto shifted = s;
    const int k = 1 + static_cast<int>(uniform_index(rng, 5));
    for (auto& e : shifted.events) e.t += static_cast<std::uint64_t>(k) * 1000;
    const auto moved = bin_events(shifted, o);
    REQUIRE(moved.steps() == base.steps() + k);
    CHECK(moved.data.topRows(k).sum() == 0.0);
    CHECK((moved.data.bottomRows(base.steps()) == base.data).all());

    const auto d = downscale(f, 2);
    CHECK(d.data.sum() == f.data.sum());
  }
}

TEST_CASE("downscale examples") {
  FrameSequence f;
  f.channels = 2;
  f.height = 128;
  f.width = 128;
  f.data.setZero(1, f.frame_size());
  CHECK(downscale(f, 2).data.isZero(0));
  f.at(0, 1, 77, 40) = 3;
  const auto d = downscale(f, 2);
  CHECK(d.height == 64);
  CHECK(d.width == 64);
  CHECK(d.at(0, 1, 38, 20) == 3.0);
  CHECK(d.data.sum() == 3.0);
  CHECK_THROWS_AS(downscale(f, 3), ConfigError);
}

TEST_CASE("gabor bank: 18 kernels, zero in zero out, positive homogeneity") {
  GaborSpec spec;
  CHECK(spec.bank_size() == 18);
  CHECK(gabor_kernels(spec).size() == 18);

  FrameSequence f;
  f.channels = 2;
  f.height = 16;
  f.width = 16;
  f.data.setZero(2, f.frame_size());
  const auto zero = gabor_bank(f, spec);
  CHECK(zero.channels == 18);
  CHECK(zero.data.isZero(0));

  Rng rng(1);
  for (Eigen::Index i = 0; i < f.data.size(); ++i) f.data(i) = uniform_index(rng, 3);
  const auto g1 = gabor_bank(f, spec);
  FrameSequence f3 = f;
  f3.data *= 3.0;
  const auto g3 = gabor_bank(f3, spec);
  CHECK((g3.data - 3.0 * g1.data).abs().maxCoeff() < 1e-9);

  spec.merge_channels = false;
  CHECK(gabor_bank(f, spec).channels == 36);

  spec.kernel_size = 17;
  CHECK_THROWS_AS(gabor_bank(f, spec), ConfigError);
}

TEST_CASE("vertical edge responds most on the orientation-aligned kernel") {
  const int n = 24;
  Eigen::MatrixXd image = Eigen::MatrixXd::Zero(n, n);
  image.rightCols(n / 2).setOnes();

  GaborSpec spec;
  int oracle_best = -1;
  double oracle_max = -1;
  for (std::size_t w = 0; w < spec.wavelengths.size(); ++w)
    for (int o = 0; o < spec.orientations; ++o) {
      const double e = oracle_energy(image, std::numbers::pi * o / spec.orientations, spec.wavelengths[w]);
      if (e > oracle_max) {
        oracle_max = e;
        oracle_best = static_cast<int>(w) * spec.orientations + o;
      }
    }
  // Orientation 0 varies along x, i.e. aligned with a vertical edge.
  CHECK(oracle_best % spec.orientations == 0);

  FrameSequence f;
  f.channels = 1;
  f.height = n;
  f.width = n;
  f.data.resize(1, n * n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) f.at(0, 0, y, x) = image(y, x);
  const auto g = gabor_bank(f, spec);
  int best = 0;
  double best_energy = -1;
  for (int c = 0; c < 18; ++c) {
    const double e = g.data.row(0).segment(c * n * n, n * n).sum();
    CHECK(e == doctest::Approx(oracle_energy(image, std::numbers::pi * (c % 6) / 6, spec.wavelengths[c / 6])));
    if (e > best_energy) {
      best_energy = e;
      best = c;
    }
  }
  CHECK(best == oracle_best);
}

TEST_CASE("frames drive the reservoir linearly, one column per step") {
  InputMap map{4, 3, 0, {{0, 0, 2.0}, {0, 1, -2.0}, {3, 2, 2.0}, {3, 0, -2.0}}};
  FrameSequence f;
  f.channels = 1;
  f.height = 2;
  f.width = 2;
  f.data.setZero(5, 4);
  CHECK(frames_to_spike_drive(f, map, {}).isZero(0));

  f.data(1, 0) = 1;
  f.data(3, 3) = 2;
  const auto d1 = frames_to_spike_drive(f, map, {});
  CHECK(d1.cols() == 5);
  CHECK(d1.col(1) == Eigen::Vector3d(2, -2, 0));
  CHECK(d1.col(3) == Eigen::Vector3d(-4, 0, 4));

  f.data *= 2;
  CHECK(frames_to_spike_drive(f, map, {}) == 2 * d1);
  CHECK(frames_to_spike_drive(f, map, {0.5}) == d1);
}

TEST_CASE("binary event files: layout and round trip") {
  EventStream s{34, 34, 7, {{5, 1, 2, 1}, {0x1'0000'0001ULL, 33, 0, 0}}};
  std::stringstream ss;
  write_events(ss, s);
  const std::string bytes = ss.str();
  REQUIRE(bytes.size() == 4 + 4 + 4 + 4 + 8 + 2 * (8 + 2 + 2 + 1));
  CHECK(bytes.substr(0, 4) == "EVS1");
  CHECK(static_cast<unsigned char>(bytes[4]) == 34);
  CHECK(static_cast<unsigned char>(bytes[12]) == 7);
  CHECK(static_cast<unsigned char>(bytes[16]) == 2);
  CHECK(static_cast<unsigned char>(bytes[24]) == 5);
  CHECK(static_cast<unsigned char>(bytes[36]) == 1);  // polarity of event 0
  CHECK(static_cast<unsigned char>(bytes[41]) == 1);  // bit 32 of event 1's timestamp

  const auto back = read_events(ss);
  CHECK(back.width == 34);
  CHECK(back.label == 7u);
  CHECK(back.events == s.events);

  std::stringstream bad("EVS0");
  CHECK_THROWS_AS(read_events(bad), DatasetError);
}

TEST_CASE("property: CSV -> binary -> CSV is the identity on records") {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = random_stream(rng, static_cast<int>(uniform_index(rng, 50)), 128, 128);
    std::stringstream csv;
    write_events_csv(csv, s);
    const std::string text = csv.str();
    auto parsed = read_events_csv(csv, 128, 128, s.label);
    std::stringstream bin;
    write_events(bin, parsed);
    const auto again = read_events(bin);
    std::stringstream csv2;
    write_events_csv(csv2, again);
    CHECK(csv2.str() == text);
    CHECK(again.events == s.events);
  }
  std::stringstream malformed("t,x,y,p\n1,2,3\n");
  CHECK_THROWS_AS(read_events_csv(malformed, 0, 0, std::nullopt), DatasetError);
  std::stringstream unsorted("5,0,0,0\n1,0,0,0\n");
  CHECK_THROWS_AS(read_events_csv(unsorted, 0, 0, std::nullopt), DatasetError);
}
