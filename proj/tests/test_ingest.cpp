// SPDX-License-Identifier: Apache-2.0
#include <voxtrack/mot_io.hpp>
#include <voxtrack/rle.hpp>
#include <voxtrack/rng.hpp>
#include <voxtrack/sequence.hpp>

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace voxtrack;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("voxtrack_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RleMask box_mask(int width, int height, int x1, int y1, int x2, int y2) {
  std::vector<uint8_t> bits(static_cast<std::size_t>(width) * height, 0);
  for (int v = y1; v < y2; ++v)
    for (int u = x1; u < x2; ++u) bits[static_cast<std::size_t>(v) * width + u] = 1;
  return encode_rle(bits.data(), width, height);
}

// A small hand-built sequence: 3 frames, one detection each.
void write_tiny_sequence(const fs::path& root, int depth_w = 16, int depth_h = 12) {
  SequenceManifest m;
  m.frames = 3;
  m.intrinsics.width = 16;
  m.intrinsics.height = 12;
  m.intrinsics.fx = 100;
  m.intrinsics.fy = 100;
  std::vector<DepthMap> depths;
  std::vector<std::vector<Detection>> dets(3);
  for (int f = 0; f < 3; ++f) {
    DepthMap d;
    d.width = depth_w;
    d.height = depth_h;
    d.values.assign(static_cast<std::size_t>(depth_w) * depth_h, 50.0f);
    depths.push_back(d);
    Detection det;
    det.bbox = {2, 2, 10, 10};
    det.score = 0.9f;
    det.mask = box_mask(16, 12, 2, 2, 10, 10);
    dets[static_cast<std::size_t>(f)].push_back(det);
  }
  write_sequence(m, depths, dets, root);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_SUITE_BEGIN("ingest");

TEST_CASE("well-formed directory parses with the right frame count") {
  const fs::path root = fresh_dir("tiny");
  write_tiny_sequence(root);
  const Sequence seq = Sequence::parse(root);
  CHECK(seq.frame_count() == 3);
  CHECK(seq.intrinsics().fx == 100.0f);
  const FrameRecord rec = seq.load_frame(2);
  CHECK(rec.frame_index == 2);
  CHECK(rec.detections.size() == 1);
  CHECK(rec.depth.at(5, 5) == 50.0f);
  CHECK(seq.warnings().empty());
}

TEST_CASE("depth dims disagreeing with the manifest are rejected") {
  const fs::path root = fresh_dir("dims");
  write_tiny_sequence(root);
  // Overwrite one raster with wrong dimensions.
  DepthMap bad;
  bad.width = 8;
  bad.height = 12;
  bad.values.assign(96, 1.0f);
  write_depth_file(bad, depth_file_path(root, 2));
  try {
    Sequence::parse(root);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("truncated depth payload is rejected, never silently read") {
  const fs::path root = fresh_dir("trunc");
  write_tiny_sequence(root);
  const fs::path victim = depth_file_path(root, 3);
  fs::resize_file(victim, fs::file_size(victim) - 8);
  try {
    Sequence::parse(root);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("missing files and malformed manifests carry distinct errors") {
  const fs::path root = fresh_dir("missing");
  try {
    Sequence::parse(root / "nope");
    FAIL("expected MissingFile");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingFile);
  }

  write_tiny_sequence(root);
  std::ofstream(root / "manifest") << "frames 3\nwidth 16\nheight 12\nfx 100\n";
  try {
    Sequence::parse(root);
    FAIL("expected MalformedManifest");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedManifest);
  }
  std::ofstream(root / "manifest")
      << "frames 3\nwidth 16\nheight 12\nfx 100\nfy 100\n"
      << "projection_center box\nbogus_key 1\n";
  try {
    Sequence::parse(root);
    FAIL("expected MalformedManifest");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedManifest);
  }
}

TEST_CASE("detection frames must not decrease") {
  const fs::path root = fresh_dir("order");
  write_tiny_sequence(root);
  std::string text = slurp(root / "det" / "detections.txt");
  // Swap the frame-3 record ahead of frame 1 by rewriting indices.
  std::ofstream out(root / "det" / "detections.txt", std::ios::binary);
  std::string line3 = text.substr(text.rfind("3 "));
  std::string rest = text.substr(0, text.rfind("3 "));
  out << line3 << rest;
  out.close();
  try {
    Sequence::parse(root);
    FAIL("expected NonMonotonicFrameIndex");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonMonotonicFrameIndex);
  }
}

TEST_CASE("mask pixels outside the bbox warn without rejecting") {
  const fs::path root = fresh_dir("warn");
  SequenceManifest m;
  m.frames = 1;
  m.intrinsics.width = 16;
  m.intrinsics.height = 12;
  m.intrinsics.fx = 100;
  m.intrinsics.fy = 100;
  DepthMap d;
  d.width = 16;
  d.height = 12;
  d.values.assign(192, 10.0f);
  Detection det;
  det.bbox = {2, 2, 6, 6};
  det.score = 0.5f;
  det.mask = box_mask(16, 12, 2, 2, 9, 9);  // spills past the bbox
  write_sequence(m, {d}, {{det}}, root);
  const Sequence seq = Sequence::parse(root);
  CHECK(seq.frame_count() == 1);
  REQUIRE(seq.warnings().size() == 1);
  CHECK(seq.warnings()[0].find("outside bbox") != std::string::npos);
}

TEST_CASE("invalid detections are rejected") {
  const fs::path root = fresh_dir("badbox");
  write_tiny_sequence(root);
  std::ofstream(root / "det" / "detections.txt")
      << "1 10 2 4 10 0.9 rle 16 12 1 192\n";  // x1 > x2
  try {
    Sequence::parse(root);
    FAIL("expected MalformedDetections");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedDetections);
  }
  std::ofstream(root / "det" / "detections.txt")
      << "1 2 2 10 10 1.5 rle 16 12 1 192\n";  // score out of range
  CHECK_THROWS_AS(Sequence::parse(root), Error);
  std::ofstream(root / "det" / "detections.txt")
      << "1 2 2 10 10 0.9 rle 16 12 2 100 100\n";  // bad rle sum
  try {
    Sequence::parse(root);
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
  }
  std::ofstream(root / "det" / "detections.txt")
      << "1 2 2 10 10 0.9 rle 16 12 1 192 emb 2 1 1\n";  // not unit norm
  try {
    Sequence::parse(root);
    FAIL("expected MalformedDetections");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedDetections);
  }
}

TEST_CASE("parse -> serialize -> parse is the identity on sequence bytes") {
  const fs::path root = fresh_dir("roundtrip_src");
  // Build a sequence with awkward float values and an embedding.
  SequenceManifest m;
  m.frames = 2;
  m.intrinsics.width = 20;
  m.intrinsics.height = 15;
  m.intrinsics.fx = 123.456f;
  m.intrinsics.fy = 98.7654f;
  m.intrinsics.center_mode = ProjectionCenterMode::PrincipalPoint;
  m.intrinsics.px = 10.25f;
  m.intrinsics.py = 7.125f;
  Pcg32 rng(7, 0);
  std::vector<DepthMap> depths;
  std::vector<std::vector<Detection>> dets(2);
  for (int f = 0; f < 2; ++f) {
    DepthMap d;
    d.width = 20;
    d.height = 15;
    d.values.resize(300);
    for (auto& v : d.values)
      v = rng.uniform() < 0.2 ? 0.0f : static_cast<float>(rng.uniform(0, 255));
    depths.push_back(d);
    Detection det;
    det.bbox = {static_cast<float>(rng.uniform(0, 4)), static_cast<float>(rng.uniform(0, 4)),
                static_cast<float>(rng.uniform(10, 19)), static_cast<float>(rng.uniform(10, 14))};
    det.score = static_cast<float>(rng.uniform(0.1, 1.0));
    det.mask = box_mask(20, 15, 1, 1, 9, 9);
    det.embedding = {0.6f, 0.8f};
    dets[static_cast<std::size_t>(f)].push_back(det);
  }
  write_sequence(m, depths, dets, root);

  const Sequence seq = Sequence::parse(root);
  const fs::path copy = fresh_dir("roundtrip_dst");
  std::vector<DepthMap> depths2;
  std::vector<std::vector<Detection>> dets2;
  for (int f = 1; f <= seq.frame_count(); ++f) {
    FrameRecord rec = seq.load_frame(f);
    depths2.push_back(std::move(rec.depth));
    dets2.push_back(std::move(rec.detections));
  }
  write_sequence(seq.manifest(), depths2, dets2, copy);

  for (const char* rel : {"manifest", "det/detections.txt"})
    CHECK(slurp(root / rel) == slurp(copy / rel));
  for (int f = 1; f <= 2; ++f)
    CHECK(slurp(depth_file_path(root, f)) == slurp(depth_file_path(copy, f)));
}

TEST_CASE("mot writer format") {
  const fs::path dir = fresh_dir("mot");
  SUBCASE("empty rows give an empty file") {
    write_mot_rows({}, dir / "empty.txt");
    CHECK(slurp(dir / "empty.txt").empty());
  }
  SUBCASE("single row formatting") {
    TrackOutputRow row{1, 5, 10, 20, 30, 40, 0.9};
    write_mot_rows({row}, dir / "one.txt");
    CHECK(slurp(dir / "one.txt") == "1,5,10.00,20.00,30.00,40.00,0.90,-1,-1,-1\n");
  }
  SUBCASE("written rows parse back without loss") {
    std::vector<TrackOutputRow> rows;
    Pcg32 rng(3, 0);
    for (int i = 0; i < 25; ++i) {
      TrackOutputRow r;
      r.frame = 1 + i / 5;
      r.id = 1 + i % 5;
      r.bb_left = rng.uniform(0, 600);
      r.bb_top = rng.uniform(0, 400);
      r.bb_width = rng.uniform(5, 100);
      r.bb_height = rng.uniform(5, 100);
      r.conf = rng.uniform(0, 1);
      rows.push_back(r);
    }
    write_mot_rows(rows, dir / "many.txt");
    const auto parsed = read_mot_rows(dir / "many.txt");
    REQUIRE(parsed.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(parsed[i].frame == rows[i].frame);
      CHECK(parsed[i].id == rows[i].id);
      CHECK(parsed[i].box.x1 == doctest::Approx(rows[i].bb_left).epsilon(0.01));
    }
  }
}

TEST_SUITE_END();
