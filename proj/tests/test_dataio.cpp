#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lghand/dataio.hpp"
#include "lghand/losses.hpp"
#include "lghand/synthetic.hpp"
#include "support.hpp"

using namespace lghand;
namespace fs = std::filesystem;

namespace {

std::string zeros_line(long frame) {
  std::ostringstream os;
  os << frame;
  for (int i = 0; i < 63; ++i) os << " 0";
  return os.str();
}

}  // namespace

TEST_CASE("skeleton parser accepts the documented format") {
  std::istringstream in(zeros_line(0) + "\n");
  SkeletonSequence seq = parse_fphab_skeleton(in);
  REQUIRE(seq.size() == 1);
  CHECK(seq.frame_indices[0] == 0);
  CHECK(seq.frames[0].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("skeleton parser counts frames") {
  std::ostringstream file;
  for (int f = 0; f < 100; ++f) file << zeros_line(f) << "\n";
  std::istringstream in(file.str());
  CHECK(parse_fphab_skeleton(in).size() == 100);
}

TEST_CASE("skeleton parser reports malformed lines") {
  SUBCASE("wrong column count") {
    std::istringstream in("0 1.0 2.0\n");
    CHECK_THROWS_WITH_AS(parse_fphab_skeleton(in),
                         doctest::Contains("line 1"), ParseError);
  }
  SUBCASE("non-numeric token") {
    std::string line = zeros_line(0);
    line.replace(line.find(" 0"), 2, " abc");
    std::istringstream in(line + "\n");
    CHECK_THROWS_WITH_AS(parse_fphab_skeleton(in),
                         doctest::Contains("non-numeric"), ParseError);
  }
  SUBCASE("duplicate frame index") {
    std::istringstream in(zeros_line(4) + "\n" + zeros_line(4) + "\n");
    CHECK_THROWS_WITH_AS(parse_fphab_skeleton(in),
                         doctest::Contains("duplicated"), ParseError);
  }
  SUBCASE("decreasing frame index") {
    std::istringstream in(zeros_line(4) + "\n" + zeros_line(2) + "\n");
    CHECK_THROWS_AS(parse_fphab_skeleton(in), ParseError);
  }
}

TEST_CASE("skeleton write-then-parse round-trips bit-exactly") {
  std::mt19937_64 rng(20);
  SkeletonSequence seq;
  for (int t = 0; t < 7; ++t) {
    seq.frame_indices.push_back(3 * t + 1);
    seq.frames.push_back(testsup::random_pose(rng));
  }
  std::ostringstream out;
  write_skeleton(seq, out);
  std::istringstream in(out.str());
  SkeletonSequence back = parse_fphab_skeleton(in);
  REQUIRE(back.size() == seq.size());
  for (size_t t = 0; t < seq.size(); ++t) {
    CHECK(back.frame_indices[t] == seq.frame_indices[t]);
    CHECK((back.frames[t] - seq.frames[t]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("pinhole projection matches hand-computed cases") {
  CameraModel cam;
  cam.fx = cam.fy = 1000.0;
  cam.u0 = cam.v0 = 500.0;

  SkeletonSequence seq;
  seq.frame_indices = {0};
  Coords3 pose = Coords3::Zero(21, 3);
  pose.col(2).setConstant(1000.0);
  pose(1, 0) = 100.0;  // joint 1 offset in x
  seq.frames.push_back(pose);

  Seq2 px = project_to_2d(seq, cam);
  CHECK(px[0](0, 0) == doctest::Approx(500.0));  // on-axis point
  CHECK(px[0](0, 1) == doctest::Approx(500.0));
  CHECK(px[0](1, 0) == doctest::Approx(600.0));  // 1000*100/1000 + 500

  // Doubling the depth halves the offset from the principal point.
  SkeletonSequence far = seq;
  far.frames[0].col(2).setConstant(2000.0);
  Seq2 px2 = project_to_2d(far, cam);
  CHECK(px2[0](1, 0) - 500.0 == doctest::Approx((px[0](1, 0) - 500.0) / 2.0));
}

TEST_CASE("projection rejects nonpositive depth naming the culprit") {
  CameraModel cam;
  cam.fx = cam.fy = 600.0;
  SkeletonSequence seq;
  seq.frame_indices = {7};
  Coords3 pose = Coords3::Constant(21, 3, 100.0);
  pose(5, 2) = -1.0;
  seq.frames.push_back(pose);
  CHECK_THROWS_WITH_AS(project_to_2d(seq, cam),
                       doctest::Contains("frame 7, joint 5"),
                       ValidationError);
}

TEST_CASE("camera config round-trips and validates") {
  fs::path path = fs::temp_directory_path() / "lghand_cam_test.json";
  CameraModel cam;
  cam.fx = 601.5;
  cam.fy = 598.25;
  cam.u0 = 319.5;
  cam.v0 = 239.5;
  cam.translation = Eigen::Vector3d(1.0, -2.0, 3.0);
  save_camera(cam, path.string());
  CameraModel back = load_camera(path.string());
  CHECK(back.fx == cam.fx);
  CHECK(back.fy == cam.fy);
  CHECK(back.translation == cam.translation);

  std::ofstream bad(path);
  bad << "{\"fx\": 600, \"fy\": 600, \"u0\": 0, \"v0\": 0, \"zoom\": 2}";
  bad.close();
  CHECK_THROWS_AS(load_camera(path.string()), ValidationError);
  fs::remove(path);
}

TEST_CASE("window assembly: counts, normalization, noise determinism") {
  SyntheticDataset data = generate_synthetic(1, 10, 33);
  const SkeletonSequence& seq = data.sequences[0];
  Seq2 projected = project_to_2d(seq, data.camera);

  auto windows = make_windows(projected, seq, 3, 0.0);
  CHECK(windows.size() == 8);  // 10 - 2*1

  // Window inputs are zero-mean/unit-std with stored constants.
  for (const auto& w : windows) {
    CHECK(std::abs(w.input.col(0).mean()) < 1e-12);
    CHECK(std::abs(w.input.col(1).mean()) < 1e-12);
    double var = w.input.array().square().sum() / w.input.size();
    CHECK(var == doctest::Approx(1.0));
    CHECK(w.norm_scale > 0.0);
  }
  CHECK(windows.front().center_frame_index == 1);
  CHECK(windows.front().target.rows() == 21);

  // Reprojection consistency: denormalizing the central frame's input
  // reproduces the projection of the stored target.
  const auto& w = windows[2];
  Matrix denorm = w.input * w.norm_scale;
  denorm.rowwise() += w.norm_mean.transpose();
  SkeletonSequence one;
  one.frame_indices = {0};
  one.frames = {w.target};
  Coords2 reproj = project_to_2d(one, data.camera)[0];
  CHECK((denorm.middleRows(21, 21) - reproj).cwiseAbs().maxCoeff() < 1e-9);

  // Same seed, same noise; different seed differs.
  auto noisy1 = make_windows(projected, seq, 3, 2.0, 555);
  auto noisy2 = make_windows(projected, seq, 3, 2.0, 555);
  auto noisy3 = make_windows(projected, seq, 3, 2.0, 556);
  CHECK((noisy1[0].input - noisy2[0].input).cwiseAbs().maxCoeff() == 0.0);
  CHECK((noisy1[0].input - noisy3[0].input).cwiseAbs().maxCoeff() > 0.0);

  // Exactly one window for a length-T sequence, centered mid-sequence.
  SkeletonSequence short3 = seq;
  short3.frames.resize(3);
  short3.frame_indices.resize(3);
  Seq2 short2d(projected.begin(), projected.begin() + 3);
  auto single = make_windows(short2d, short3, 3, 0.0);
  REQUIRE(single.size() == 1);
  CHECK(single[0].center_frame_index == short3.frame_indices[1]);

  // Shorter than T: empty.
  short3.frames.resize(2);
  short3.frame_indices.resize(2);
  short2d.resize(2);
  CHECK(make_windows(short2d, short3, 3, 0.0).empty());
}

TEST_CASE("window count formula holds across lengths") {
  SyntheticDataset data = generate_synthetic(1, 12, 44);
  Seq2 projected = project_to_2d(data.sequences[0], data.camera);
  for (int T : {1, 3, 5, 7, 13}) {
    long expect = std::max<long>(0, 12 - T + 1);
    CHECK(make_windows(projected, data.sequences[0], T, 0.0).size() ==
          static_cast<size_t>(expect));
  }
}

TEST_CASE("train/eval split sends sequence 3 to eval") {
  std::vector<SkeletonSequence> seqs;
  for (int n : {1, 2, 3, 4}) {
    SkeletonSequence s;
    s.action = "pour";
    s.sequence_number = n;
    seqs.push_back(s);
  }
  auto [train, eval] = split_train_eval(seqs);
  REQUIRE(eval.size() == 1);
  CHECK(eval[0].sequence_number == 3);
  CHECK(train.size() == 3);

  // Order-independence.
  std::reverse(seqs.begin(), seqs.end());
  auto [train2, eval2] = split_train_eval(seqs);
  CHECK(eval2.size() == 1);
  CHECK(train2.size() == 3);

  // Actions without a third sequence contribute nothing to eval.
  seqs.erase(std::remove_if(seqs.begin(), seqs.end(),
                            [](const auto& s) { return s.sequence_number == 3; }),
             seqs.end());
  CHECK(split_train_eval(seqs).second.empty());

  SkeletonSequence missing;
  missing.sequence_number = 0;
  CHECK_THROWS_AS(split_train_eval({missing}), ValidationError);
}

TEST_CASE("synthetic generator is deterministic with rigid bones") {
  SyntheticDataset a = generate_synthetic(3, 20, 99);
  SyntheticDataset b = generate_synthetic(3, 20, 99);
  REQUIRE(a.sequences.size() == 3);
  for (size_t s = 0; s < 3; ++s)
    for (size_t t = 0; t < 20; ++t)
      CHECK((a.sequences[s].frames[t] - b.sequences[s].frames[t])
                .cwiseAbs()
                .maxCoeff() == 0.0);

  HandTopology topo = build_topology();
  for (const auto& seq : a.sequences) {
    // Bone lengths constant across the sequence and inside 20-90 mm.
    Coords3 first = bone_vectors(seq.frames[0], topo);
    for (const auto& frame : seq.frames) {
      Coords3 bones = bone_vectors(frame, topo);
      for (int bi = 0; bi < 20; ++bi) {
        CHECK(bones.row(bi).norm() ==
              doctest::Approx(first.row(bi).norm()).epsilon(1e-9));
        CHECK(bones.row(bi).norm() >= 19.0);
        CHECK(bones.row(bi).norm() <= 91.0);
      }
    }
    // Losses vanish on self-comparison.
    CHECK(angle_loss(seq.frames, seq.frames, topo) == 0.0);
  }

  // All depths visible from the stored camera.
  for (const auto& seq : a.sequences) CHECK_NOTHROW(project_to_2d(seq, a.camera));
}

TEST_CASE("dataset loader walks Subject/Action/Sequence directories") {
  fs::path root = fs::temp_directory_path() / "lghand_dataset_test";
  fs::remove_all(root);
  SyntheticDataset data = generate_synthetic(4, 6, 5);
  for (const auto& seq : data.sequences) {
    fs::path dir = root / seq.subject / seq.action /
                   std::to_string(seq.sequence_number);
    fs::create_directories(dir);
    write_skeleton_file(seq, (dir / "skeleton.txt").string());
  }
  std::vector<SkeletonSequence> loaded = load_dataset(root.string());
  REQUIRE(loaded.size() == 4);
  CHECK(loaded[0].subject == "Subject_1");
  CHECK(loaded[0].action == "synthetic_motion");
  CHECK(loaded[0].sequence_number == 1);
  CHECK(loaded[3].sequence_number == 4);
  CHECK((loaded[1].frames[2] - data.sequences[1].frames[2])
            .cwiseAbs()
            .maxCoeff() == 0.0);

  CHECK_THROWS_AS(load_dataset((root / "nope").string()), ValidationError);
  fs::remove_all(root);
}

TEST_CASE("2d skeleton files round-trip for the predict path") {
  fs::path path = fs::temp_directory_path() / "lghand_2d_test.txt";
  Skeleton2dSequence seq;
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> dist(0.0, 640.0);
  for (int t = 0; t < 4; ++t) {
    seq.frame_indices.push_back(t);
    Coords2 f(21, 2);
    for (int i = 0; i < 21; ++i)
      for (int d = 0; d < 2; ++d) f(i, d) = dist(rng);
    seq.frames.push_back(f);
  }
  write_skeleton_2d_file(seq, path.string());
  Skeleton2dSequence back = parse_skeleton_2d_file(path.string());
  REQUIRE(back.frames.size() == 4);
  for (int t = 0; t < 4; ++t)
    CHECK((back.frames[t] - seq.frames[t]).cwiseAbs().maxCoeff() == 0.0);
  fs::remove(path);
}
