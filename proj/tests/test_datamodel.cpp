#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "lrtd/dataset.hpp"
#include "lrtd/errors.hpp"
#include "lrtd/pool.hpp"
#include "lrtd/rng.hpp"
#include "lrtd/synthetic.hpp"

using namespace lrtd;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
  fs::path dir = fs::temp_directory_path() / (std::string("lrtd_test_") + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Dataset tiny_dataset(int num_videos, int frames, int dim, int phases) {
  Dataset ds;
  ds.dim = dim;
  ds.num_phases = phases;
  for (int v = 0; v < num_videos; ++v) {
    Video video;
    video.id = "vid_" + std::to_string(v);
    for (int f = 0; f < frames; ++f) {
      FrameRecord fr;
      fr.frame_index = f;
      fr.phase = (f * phases) / frames;
      fr.outlier = false;
      for (int d = 0; d < dim; ++d) {
        fr.feature.push_back(
            static_cast<double>(static_cast<float>(0.25 * v + 0.5 * f + 0.125 * d)));
      }
      video.frames.push_back(std::move(fr));
    }
    ds.videos.push_back(std::move(video));
  }
  return ds;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

bool same_dataset(const Dataset& a, const Dataset& b) {
  if (a.videos.size() != b.videos.size() || a.dim != b.dim) return false;
  for (std::size_t v = 0; v < a.videos.size(); ++v) {
    const Video& va = a.videos[v];
    const Video& vb = b.videos[v];
    if (va.id != vb.id || va.frames.size() != vb.frames.size()) return false;
    for (std::size_t f = 0; f < va.frames.size(); ++f) {
      const FrameRecord& fa = va.frames[f];
      const FrameRecord& fb = vb.frames[f];
      if (fa.frame_index != fb.frame_index || fa.phase != fb.phase || fa.outlier != fb.outlier)
        return false;
      if (fa.feature != fb.feature) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("clip windows slide with stride one") {
  Dataset ds = tiny_dataset(1, 12, 4, 3);
  auto clips = make_clips(ds.videos[0], 10);
  REQUIRE(clips.size() == 3);
  CHECK(clips[0].id.end_frame == 9);
  CHECK(clips[1].id.end_frame == 10);
  CHECK(clips[2].id.end_frame == 11);
  for (const Clip& c : clips) {
    CHECK(c.id.video_id == "vid_0");
    CHECK(c.features.rows() == 4);
    CHECK(c.features.cols() == 10);
    CHECK(c.label == ds.videos[0].frames[c.id.end_frame].phase);
    CHECK(c.label == c.frame_phases.back());
  }
  // Consecutive clips share T-1 frames: columns 1..9 of clip k = columns 0..8 of clip k+1.
  for (int t = 0; t < 9; ++t)
    for (int d = 0; d < 4; ++d) CHECK(clips[0].features.at(d, t + 1) == clips[1].features.at(d, t));
}

TEST_CASE("clip count formula holds for all short lengths") {
  const int T = 5;
  for (int F = 0; F <= 3 * T; ++F) {
    Dataset ds = tiny_dataset(1, F == 0 ? 1 : F, 2, 2);
    if (F == 0) ds.videos[0].frames.clear();
    auto clips = make_clips(ds.videos[0], T);
    CHECK(static_cast<int>(clips.size()) == std::max(0, F - T + 1));
  }
}

TEST_CASE("single and empty clip cases") {
  Dataset ds10 = tiny_dataset(1, 10, 2, 2);
  CHECK(make_clips(ds10.videos[0], 10).size() == 1);
  Dataset ds9 = tiny_dataset(1, 9, 2, 2);
  CHECK(make_clips(ds9.videos[0], 10).empty());
}

TEST_CASE("feature and annotation files round-trip exactly") {
  fs::path dir = temp_dir("roundtrip");
  Dataset ds = tiny_dataset(3, 20, 5, 4);
  ds.videos[1].frames[7].outlier = true;
  write_features((dir / "features.bin").string(), ds);
  write_annotations((dir / "annotations.tsv").string(), ds);
  Dataset back =
      load_dataset((dir / "features.bin").string(), (dir / "annotations.tsv").string(), 4);
  CHECK(same_dataset(ds, back));
  CHECK(back.num_phases == 4);
  fs::remove_all(dir);
}

TEST_CASE("loader rejects out-of-range phase") {
  fs::path dir = temp_dir("badphase");
  Dataset ds = tiny_dataset(1, 6, 2, 7);
  ds.videos[0].frames[3].phase = 9;
  write_features((dir / "f.bin").string(), ds);
  write_annotations((dir / "a.tsv").string(), ds);
  CHECK_THROWS_AS(load_dataset((dir / "f.bin").string(), (dir / "a.tsv").string(), 7), ParseError);
  fs::remove_all(dir);
}

TEST_CASE("loader rejects frame-count mismatch naming the video") {
  fs::path dir = temp_dir("mismatch");
  Dataset ds = tiny_dataset(1, 100, 2, 3);
  write_features((dir / "f.bin").string(), ds);
  ds.videos[0].frames.pop_back();
  write_annotations((dir / "a.tsv").string(), ds);
  try {
    load_dataset((dir / "f.bin").string(), (dir / "a.tsv").string(), 3);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    std::string msg = e.what();
    CHECK(msg.find("vid_0") != std::string::npos);
    CHECK(msg.find("100") != std::string::npos);
    CHECK(msg.find("99") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("loader rejects non-contiguous frame indices") {
  fs::path dir = temp_dir("gap");
  std::ofstream a(dir / "a.tsv");
  a << "video_id\tframe_index\tphase\toutlier_flag\n";
  a << "v\t0\t0\t0\n";
  a << "v\t2\t0\t0\n";
  a.close();
  Dataset ds = tiny_dataset(1, 2, 2, 3);
  ds.videos[0].id = "v";
  write_features((dir / "f.bin").string(), ds);
  CHECK_THROWS_AS(load_dataset((dir / "f.bin").string(), (dir / "a.tsv").string(), 3), ParseError);
  fs::remove_all(dir);
}

TEST_CASE("loader rejects a corrupted magic") {
  fs::path dir = temp_dir("magic");
  Dataset ds = tiny_dataset(1, 4, 2, 2);
  write_features((dir / "f.bin").string(), ds);
  write_annotations((dir / "a.tsv").string(), ds);
  std::string bytes = read_bytes(dir / "f.bin");
  bytes[0] = 'X';
  std::ofstream(dir / "f.bin", std::ios::binary) << bytes;
  CHECK_THROWS_AS(load_dataset((dir / "f.bin").string(), (dir / "a.tsv").string(), 2), ParseError);
  fs::remove_all(dir);
}

TEST_CASE("init pool draws the rounded fraction") {
  Dataset ds = tiny_dataset(2, 59, 3, 3);
  auto clips = make_clips(ds, {"vid_0", "vid_1"}, 10);
  REQUIRE(clips.size() == 100);
  PoolState pool = init_pool(clips, 0.1, 7);
  CHECK(pool.labeled.size() == 10);
  CHECK(pool.unlabeled.size() == 90);
  pool.check_invariants(100);

  PoolState again = init_pool(clips, 0.1, 7);
  CHECK(pool.labeled == again.labeled);
  PoolState other = init_pool(clips, 0.1, 8);
  CHECK(pool.labeled != other.labeled);
}

TEST_CASE("init pool rejects degenerate fractions and empty input") {
  Dataset ds = tiny_dataset(1, 20, 2, 2);
  auto clips = make_clips(ds.videos[0], 10);
  CHECK_THROWS_AS(init_pool(clips, 1.0, 0), ValidationError);
  CHECK_THROWS_AS(init_pool(clips, 0.0, 0), ValidationError);
  CHECK_THROWS_AS(init_pool({}, 0.1, 0), ValidationError);
}

TEST_CASE("pool partition survives random selection sequences") {
  Dataset ds = tiny_dataset(3, 40, 2, 3);
  auto clips = make_clips(ds, {"vid_0", "vid_1", "vid_2"}, 10);
  const std::size_t total = clips.size();
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    PoolState pool = init_pool(clips, 0.2, trial);
    while (!pool.unlabeled.empty()) {
      const std::size_t take = 1 + rng.below(std::min<std::size_t>(7, pool.unlabeled.size()));
      std::vector<std::pair<ClipId, double>> picks;
      for (const ClipId& id : pool.unlabeled) {
        if (picks.size() == take) break;
        picks.emplace_back(id, 0.0);
      }
      const std::size_t before = pool.labeled.size();
      pool.mark_labeled(picks, "test");
      pool.round += 1;
      CHECK(pool.labeled.size() == before + picks.size());
      pool.check_invariants(total);
    }
  }
}

TEST_CASE("marking a clip outside the unlabeled pool fails") {
  Dataset ds = tiny_dataset(1, 20, 2, 2);
  auto clips = make_clips(ds.videos[0], 10);
  PoolState pool = init_pool(clips, 0.5, 1);
  ClipId bogus{"nope", 3};
  CHECK_THROWS_AS(pool.mark_labeled({{bogus, 0.0}}, "test"), ValidationError);
  ClipId already = *pool.labeled.begin();
  CHECK_THROWS_AS(pool.mark_labeled({{already, 0.0}}, "test"), ValidationError);
}

TEST_CASE("synthetic generation is a pure function of the spec") {
  SyntheticSpec spec;
  spec.num_videos = 3;
  spec.frames_min = 30;
  spec.frames_max = 40;
  spec.dim = 6;
  spec.num_phases = 4;
  spec.rho = 0.5;
  spec.p_noise = 0.1;
  spec.seed = 12345;
  fs::path dir1 = temp_dir("gen1");
  fs::path dir2 = temp_dir("gen2");
  gen_synthetic_files(spec, dir1.string());
  gen_synthetic_files(spec, dir2.string());
  CHECK(read_bytes(dir1 / "features.bin") == read_bytes(dir2 / "features.bin"));
  CHECK(read_bytes(dir1 / "annotations.tsv") == read_bytes(dir2 / "annotations.tsv"));
  CHECK(read_bytes(dir1 / "spec.echo.json") == read_bytes(dir2 / "spec.echo.json"));

  Dataset loaded = load_dataset((dir1 / "features.bin").string(),
                                (dir1 / "annotations.tsv").string(), spec.num_phases);
  Dataset mem = gen_synthetic(spec);
  CHECK(same_dataset(mem, loaded));
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("zero noise probability yields no outlier flags") {
  SyntheticSpec spec;
  spec.num_videos = 2;
  spec.frames_min = 25;
  spec.frames_max = 30;
  spec.dim = 4;
  spec.num_phases = 3;
  spec.p_noise = 0.0;
  spec.seed = 5;
  Dataset ds = gen_synthetic(spec);
  for (const Video& v : ds.videos)
    for (const FrameRecord& fr : v.frames) CHECK(!fr.outlier);
}

TEST_CASE("memoryless low-noise generation is nearest-prototype separable") {
  SyntheticSpec spec;
  spec.num_videos = 4;
  spec.frames_min = 50;
  spec.frames_max = 60;
  spec.dim = 8;
  spec.num_phases = 5;
  spec.rho = 0.0;
  spec.p_noise = 0.0;
  spec.feature_noise = 0.01;
  spec.proto_scale = 3.0;
  spec.seed = 21;
  Dataset ds = gen_synthetic(spec);

  Rng prng(seed_mix(spec.seed, hash_str("prototypes")));
  std::vector<std::vector<double>> protos(spec.num_phases);
  for (int p = 0; p < spec.num_phases; ++p) {
    protos[p].resize(spec.dim);
    double norm = 0.0;
    for (double& v : protos[p]) {
      v = prng.normal();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double& v : protos[p]) v = v / norm * spec.proto_scale;
  }

  int correct = 0, total = 0;
  for (const Video& v : ds.videos) {
    for (const FrameRecord& fr : v.frames) {
      int best = -1;
      double best_d = 1e300;
      for (int p = 0; p < spec.num_phases; ++p) {
        double d2 = 0.0;
        for (int k = 0; k < spec.dim; ++k) {
          const double diff = fr.feature[k] - protos[p][k];
          d2 += diff * diff;
        }
        if (d2 < best_d) {
          best_d = d2;
          best = p;
        }
      }
      correct += best == fr.phase;
      ++total;
    }
  }
  CHECK(correct == total);
}

TEST_CASE("every phase appears and covers the full video") {
  SyntheticSpec spec;
  spec.num_videos = 5;
  spec.frames_min = 70;
  spec.frames_max = 90;
  spec.dim = 3;
  spec.num_phases = 7;
  spec.seed = 2;
  Dataset ds = gen_synthetic(spec);
  for (const Video& v : ds.videos) {
    CHECK(v.num_frames() >= 70);
    CHECK(v.num_frames() <= 90);
    std::set<int> seen;
    int prev = -1;
    for (const FrameRecord& fr : v.frames) {
      CHECK(fr.phase >= prev);  // phases only move forward
      prev = fr.phase;
      seen.insert(fr.phase);
    }
    CHECK(seen.size() == 7);  // skip_prob 0: all phases present
  }
}

TEST_CASE("spec json parsing materializes defaults and rejects unknown keys") {
  SyntheticSpec spec = parse_synthetic_spec(R"({"num_videos": 3, "seed": 9})");
  CHECK(spec.num_videos == 3);
  CHECK(spec.seed == 9);
  CHECK(spec.dim == 16);
  CHECK(spec.num_phases == 7);

  CHECK_THROWS_AS(parse_synthetic_spec(R"({"num_video": 3})"), ValidationError);
  CHECK_THROWS_AS(parse_synthetic_spec(R"({"rho": 1.5})"), ValidationError);
  CHECK_THROWS_AS(parse_synthetic_spec("not json"), ParseError);

  try {
    parse_synthetic_spec(R"({"frames_dim": 1})");
    FAIL("expected error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("frames_dim") != std::string::npos);
  }

  SyntheticSpec back = parse_synthetic_spec(synthetic_spec_to_json(spec));
  CHECK(back.num_videos == spec.num_videos);
  CHECK(back.seed == spec.seed);
}
