#include <doctest.h>

#include <cmath>
#include <map>

#include "lsm/ensemble.hpp"
#include "lsm/rng.hpp"
#include "topology_oracle.hpp"

using namespace lsm;

namespace {

FrameSequence random_frames(Seed seed, int steps, int side = 8, double rate = 0.3) {
  Rng rng(seed);
  FrameSequence f;
  f.channels = 1;
  f.height = side;
  f.width = side;
  f.data.setZero(steps, f.frame_size());
  for (Eigen::Index i = 0; i < f.data.size(); ++i) f.data(i) = uniform01(rng) < rate ? 1.0 : 0.0;
  return f;
}

InputSpec standard_input(int n_inputs, double density = 0.15) {
  InputSpec s;
  s.n_inputs = n_inputs;
  s.density = density;
  return s;
}

Member make_member(const GridDims& dims, double d, const InputSpec& input, Seed seed) {
  ConnectionLaw law;
  law.d = d;
  return {build_reservoir(dims, law, {}, seed), build_input_map(input, dims, seed + 77)};
}

bool same_records(const SpikeRecord& a, const SpikeRecord& b) {
  return a.steps == b.steps && a.counts == b.counts && a.raster == b.raster;
}

int distance_mode(const ReservoirTopology& topo) {
  std::map<long, long> hist;
  for (const auto& e : topo.edges) hist[std::lround(distance(coord_of(e.src, topo.dims), coord_of(e.dst, topo.dims)))]++;
  return static_cast<int>(std::max_element(hist.begin(), hist.end(), [](auto& a, auto& b) { return a.second < b.second; })->first);
}

}  // namespace

TEST_CASE("one-member MuLRE with d = 0 is the plain LSM run") {
  const auto frames = random_frames(1, 60);
  InputSpec rf = standard_input(64);
  rf.scheme = ReceptiveFieldScheme{3, 8, 8, 1};
  const auto m = make_member({6, 6, 4}, 0, rf, 5);
  RunOptions opt;
  opt.record_raster = true;
  const auto plain = run_lsm(frames, m, {}, {}, opt);
  const auto ens = run_mulre(frames, {m}, MulreSpec{{0.0}}, {}, {}, opt);
  REQUIRE(ens.size() == 1);
  CHECK(same_records(plain, ens[0]));
  CHECK(plain.total_spikes() > 0);
  CHECK_THROWS_AS(run_mulre(frames, {m}, MulreSpec{{0.0, 5.0}}, {}), ConfigError);
  CHECK_THROWS_AS(run_mulre(frames, {m}, MulreSpec{{5.0}}, {}), ConfigError);
}

TEST_CASE("d = 0 and d = 5 members differ in edge-length mode") {
  const GridDims dims{10, 10, 10};
  ConnectionLaw near, far;
  far.d = 5;
  const auto a = build_reservoir(dims, near, {}, 42);
  const auto b = build_reservoir(dims, far, {}, 42);
  // Expected mode from the law weighted by pair counts; pair counts grow with
  // distance, so the d = 0 mode sits at 2 rather than 1.
  auto expected_mode = [&](const ReservoirTopology& t) {
    std::map<long, double> mass;
    for (int i = 0; i < t.size(); ++i)
      for (int j = 0; j < t.size(); ++j) {
        if (i == j) continue;
        const double dist = distance(coord_of(i, dims), coord_of(j, dims));
        mass[std::lround(dist)] += oracle::law(dist, t.law.d, t.law.lambda, t.kinds[i], t.kinds[j]);
      }
    return static_cast<int>(std::max_element(mass.begin(), mass.end(), [](auto& x, auto& y) { return x.second < y.second; })->first);
  };
  CHECK(expected_mode(a) == 2);
  CHECK(expected_mode(b) == 5);
  CHECK(distance_mode(a) == expected_mode(a));
  CHECK(distance_mode(b) == expected_mode(b));
}

TEST_CASE("MuLRE: permutation equivariance and member independence") {
  const auto frames = random_frames(2, 50);
  InputSpec rf = standard_input(64);
  rf.scheme = ReceptiveFieldScheme{3, 8, 8, 1};
  const GridDims dims{6, 6, 4};
  std::vector<Member> members{make_member(dims, 0, rf, 1), make_member(dims, 4, rf, 2), make_member(dims, 6, rf, 3)};
  const auto base = run_mulre(frames, members, MulreSpec{{0, 4, 6}}, {});

  std::vector<Member> permuted{members[2], members[0], members[1]};
  const auto perm = run_mulre(frames, permuted, MulreSpec{{6, 0, 4}}, {});
  CHECK(same_records(perm[0], base[2]));
  CHECK(same_records(perm[1], base[0]));
  CHECK(same_records(perm[2], base[1]));

  for (int k = 0; k < 3; ++k) {
    auto muted = members;
    muted[k].input.edges.clear();
    const auto out = run_mulre(frames, muted, MulreSpec{{0, 4, 6}}, {});
    CHECK(out[k].total_spikes() == 0);
    for (int j = 0; j < 3; ++j)
      if (j != k) CHECK(same_records(out[j], base[j]));
  }
}

TEST_CASE("build_tepre degenerate cases and errors") {
  const auto a = build_reservoir({4, 4, 2}, {}, {}, 1);
  const auto b = build_reservoir({4, 4, 2}, {}, {}, 2);
  CHECK(build_tepre({a}, 0.5, -1, 3).empty());
  CHECK(build_tepre({a, b}, 0.0, -1, 3).empty());
  CHECK_THROWS_AS(build_tepre({a, b}, 0.1, 0.0, 3), ConfigError);
  CHECK_THROWS_AS(build_tepre({a, b}, 0.1, 1.0, 3), ConfigError);
  CHECK_THROWS_AS(build_tepre({a, b}, 1.5, -1, 3), ConfigError);

  const auto edges = build_tepre({a, b}, 1.0, -2, 3);
  CHECK(edges.size() == 16u * 32u);
  for (const auto& e : edges) {
    CHECK(a.kinds[e.src] == NeuronKind::Inhibitory);
    CHECK(e.dst >= 32);
    CHECK(e.weight == -2.0);
  }
}

TEST_CASE("3 x 1200 partitions at density 0.01: about 7200 edges per adjacent pair") {
  const double expected = 0.01 * 600 * 1200;
  const double sd = std::sqrt(600 * 1200 * 0.01 * 0.99);
  const GridDims dims{10, 10, 12};
  for (Seed s = 0; s < 5; ++s) {
    std::vector<ReservoirTopology> parts;
    for (int r = 0; r < 3; ++r) {
      Rng rng(mix_seed(s, r));
      ReservoirTopology t;
      t.dims = dims;
      t.kinds = assign_kinds(dims.size(), rng);
      parts.push_back(std::move(t));
    }
    const auto edges = build_tepre(parts, 0.01, -1, mix_seed(s, 1000));
    long first = 0, second = 0;
    for (const auto& e : edges) {
      CHECK(e.weight < 0);
      if (e.src < 1200) {
        CHECK(e.dst >= 1200);
        CHECK(e.dst < 2400);
        ++first;
      } else {
        CHECK(e.src < 2400);
        CHECK(e.dst >= 2400);
        ++second;
      }
    }
    CHECK(std::abs(first - expected) <= 3 * sd);
    CHECK(std::abs(second - expected) <= 3 * sd);
  }
}

TEST_CASE("equal-split schedule") {
  const auto s = GatingSchedule::equal_split(300, 3);
  CHECK(s.intervals == std::vector<std::pair<int, int>>{{0, 100}, {100, 200}, {200, 300}});
  for (int steps = 0; steps < 60; ++steps)
    for (int p = 1; p <= 7; ++p) {
      const auto g = GatingSchedule::equal_split(steps, p);
      g.validate(steps);
      int lo = steps, hi = 0;
      for (const auto& [a, b] : g.intervals) {
        lo = std::min(lo, b - a);
        hi = std::max(hi, b - a);
      }
      CHECK(hi - lo <= 1);
    }
  GatingSchedule gap{{{0, 100}, {101, 300}}};
  CHECK_THROWS_AS(gap.validate(300), ConfigError);
  GatingSchedule overlap{{{0, 150}, {100, 300}}};
  CHECK_THROWS_AS(overlap.validate(300), ConfigError);
  GatingSchedule short_cover{{{0, 100}, {100, 200}}};
  CHECK_THROWS_AS(short_cover.validate(300), ConfigError);
}

TEST_CASE("TEPRE gating: no drive outside the partition's interval") {
  const GridDims dims{6, 6, 2};
  const auto input = standard_input(64, 1.0 / 6);  // k = 12
  std::vector<Member> members;
  std::vector<ReservoirTopology> topos;
  for (int r = 0; r < 3; ++r) {
    members.push_back(make_member(dims, 0, input, 10 + r));
    topos.push_back(members.back().topology);
  }
  const auto inter = build_tepre(topos, 0.05, -1, 9);
  const auto frames = random_frames(4, 300);
  const auto schedule = GatingSchedule::equal_split(300, 3);

  long violations = 0, inside_nonzero = 0;
  RunOptions opt;
  opt.observe_drive = [&](int k, int t, const Eigen::Ref<const Eigen::VectorXd>& drive) {
    const bool inside = t >= 100 * k && t < 100 * (k + 1);
    if (!inside && !drive.isZero(0)) ++violations;
    if (inside && !drive.isZero(0)) ++inside_nonzero;
  };
  const auto rec = run_tepre(frames, members, inter, schedule, {}, {}, opt);
  CHECK(violations == 0);
  CHECK(inside_nonzero > 250);
  for (const auto& r : rec) {
    REQUIRE(r.slab_counts);
    CHECK((r.slab_counts->array() <= r.counts.array()).all());
  }

  GatingSchedule bad{{{0, 100}, {120, 300}, {300, 300}}};
  CHECK_THROWS_AS(run_tepre(frames, members, inter, bad, {}), ConfigError);
  CHECK_THROWS_AS(run_tepre(frames, members, inter, GatingSchedule::equal_split(300, 2), {}), ConfigError);
  auto positive = inter;
  positive.push_back({0, 100, 1.0});
  CHECK_THROWS_AS(run_tepre(frames, members, positive, schedule, {}), ConfigError);
}

TEST_CASE("TEPRE with one partition is the plain LSM run") {
  const auto m = make_member({6, 6, 4}, 0, standard_input(64), 8);
  const auto frames = random_frames(6, 80);
  RunOptions opt;
  opt.record_raster = true;
  const auto plain = run_lsm(frames, m, {}, {}, opt);
  const auto gated = run_tepre(frames, {m}, {}, GatingSchedule::equal_split(80, 1), {}, {}, opt);
  CHECK(same_records(plain, gated[0]));
  CHECK(*gated[0].slab_counts == gated[0].counts);
}

TEST_CASE("TEPRE with no inter edges equals independent gated runs") {
  const GridDims dims{6, 6, 2};
  const auto input = standard_input(64, 1.0 / 6);
  std::vector<Member> members;
  for (int r = 0; r < 3; ++r) members.push_back(make_member(dims, 0, input, 20 + r));
  const auto frames = random_frames(7, 300);
  const auto schedule = GatingSchedule::equal_split(300, 3);
  RunOptions opt;
  opt.record_raster = true;
  const auto rec = run_tepre(frames, members, {}, schedule, {}, {}, opt);
  for (int r = 0; r < 3; ++r) {
    FrameSequence slice = frames;
    for (int t = 0; t < 300; ++t)
      if (!schedule.contains(r, t)) slice.data.row(t).setZero();
    const auto alone = run_lsm(slice, members[r], {}, {}, opt);
    CHECK(same_records(alone, rec[r]));
    CHECK(alone.total_spikes() > 0);
  }
}

TEST_CASE("inter-partition inhibition changes the downstream partition only") {
  const GridDims dims{6, 6, 2};
  const auto input = standard_input(64, 1.0 / 6);
  std::vector<Member> members;
  std::vector<ReservoirTopology> topos;
  for (int r = 0; r < 2; ++r) {
    members.push_back(make_member(dims, 0, input, 30 + r));
    topos.push_back(members.back().topology);
  }
  const auto frames = random_frames(8, 200, 8, 0.5);
  const auto schedule = GatingSchedule::equal_split(200, 2);
  const auto free_run = run_tepre(frames, members, {}, schedule, {});
  const auto coupled = run_tepre(frames, members, build_tepre(topos, 0.5, -5, 1), schedule, {});
  CHECK(same_records(free_run[0], coupled[0]));
  CHECK(coupled[1].total_spikes() < free_run[1].total_spikes());
}

TEST_CASE("ensemble spec validation and seeded construction") {
  EnsembleSpec spec;
  spec.total_dims = {10, 10, 6};
  InputSpec input = standard_input(16, 0.1);  // k = 20 on 200 neurons
  CHECK(spec.member_count() == 3);
  CHECK(spec.member_dims() == GridDims{10, 10, 2});
  spec.validate(input);

  InputSpec rf = input;
  rf.scheme = ReceptiveFieldScheme{3, 4, 4, 1};
  CHECK_THROWS_AS(spec.validate(rf), ConfigError);
  EnsembleSpec mulre;
  mulre.variant = MulreSpec{{0, 5}};
  CHECK_THROWS_AS(mulre.validate(input), ConfigError);
  mulre.validate(rf);
  mulre.variant = MulreSpec{{}};
  CHECK_THROWS_AS(mulre.validate(rf), ConfigError);
  spec.total_dims = {10, 10, 5};
  CHECK_THROWS_AS(spec.validate(input), ConfigError);

  spec.total_dims = {10, 10, 6};
  const auto members = build_members(spec, {}, input, {}, 11, 12);
  REQUIRE(members.size() == 3);
  CHECK(members[1].topology.seed == mix_seed(11, 1));
  CHECK(members[2].input.seed == mix_seed(12, 2));
  const auto ens = build_ensemble(spec, {}, input, {}, {}, 11, 12);
  CHECK(ens.gated());
  CHECK(ens.total_neurons() == 600);
  CHECK(ens.inter_edges() == build_ensemble(spec, {}, input, {}, {}, 11, 12).inter_edges());
}
