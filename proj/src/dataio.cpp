#include "lghand/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace lghand {

namespace fs = std::filesystem;

void CameraModel::validate() const {
  require(fx > 0.0 && fy > 0.0, "camera: focal lengths must be positive");
  require(std::isfinite(u0) && std::isfinite(v0),
          "camera: principal point must be finite");
  require(rotation.allFinite() && translation.allFinite(),
          "camera: extrinsics must be finite");
}

CameraModel load_camera(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("camera: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("camera: invalid JSON in " + path + ": " + e.what());
  }
  CameraModel cam;
  for (const auto& [key, _] : j.items())
    require(key == "fx" || key == "fy" || key == "u0" || key == "v0" ||
                key == "rotation" || key == "translation",
            "camera: unknown key '" + key + "' in " + path);
  for (const char* key : {"fx", "fy", "u0", "v0"})
    require(j.contains(key), std::string("camera: missing key '") + key + "'");
  cam.fx = j["fx"].get<double>();
  cam.fy = j["fy"].get<double>();
  cam.u0 = j["u0"].get<double>();
  cam.v0 = j["v0"].get<double>();
  if (j.contains("rotation")) {
    auto r = j["rotation"].get<std::vector<double>>();
    require(r.size() == 9, "camera: rotation must have 9 entries, row-major");
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) cam.rotation(i, k) = r[3 * i + k];
  }
  if (j.contains("translation")) {
    auto t = j["translation"].get<std::vector<double>>();
    require(t.size() == 3, "camera: translation must have 3 entries");
    cam.translation = Eigen::Vector3d(t[0], t[1], t[2]);
  }
  cam.validate();
  return cam;
}

void save_camera(const CameraModel& cam, const std::string& path) {
  nlohmann::json j;
  j["fx"] = cam.fx;
  j["fy"] = cam.fy;
  j["u0"] = cam.u0;
  j["v0"] = cam.v0;
  std::vector<double> r;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) r.push_back(cam.rotation(i, k));
  j["rotation"] = r;
  j["translation"] =
      std::vector<double>{cam.translation.x(), cam.translation.y(),
                          cam.translation.z()};
  std::ofstream out(path);
  if (!out) throw IoError("camera: cannot write " + path);
  out << j.dump(2) << "\n";
}

SkeletonSequence parse_fphab_skeleton(std::istream& in) {
  SkeletonSequence seq;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    std::istringstream ls(line);
    std::vector<double> tokens;
    std::string tok;
    while (ls >> tok) {
      double value = 0.0;
      const char* begin = tok.data();
      const char* end = begin + tok.size();
      auto [ptr, ec] = std::from_chars(begin, end, value);
      if (ec != std::errc() || ptr != end)
        throw ParseError("skeleton: non-numeric token '" + tok + "'", line_no);
      tokens.push_back(value);
    }
    if (tokens.size() != 1 + 3 * HandTopology::kNumJoints)
      throw ParseError("skeleton: expected 64 columns, got " +
                           std::to_string(tokens.size()),
                       line_no);
    long frame = std::lround(tokens[0]);
    if (!seq.frame_indices.empty() && frame <= seq.frame_indices.back()) {
      const char* what = frame == seq.frame_indices.back()
                             ? " duplicated"
                             : " not strictly increasing";
      throw ParseError(
          "skeleton: frame index " + std::to_string(frame) + what, line_no);
    }
    Coords3 joints(HandTopology::kNumJoints, 3);
    for (int i = 0; i < HandTopology::kNumJoints; ++i)
      for (int d = 0; d < 3; ++d) joints(i, d) = tokens[1 + 3 * i + d];
    if (!joints.allFinite())
      throw ParseError("skeleton: non-finite coordinate", line_no);
    seq.frame_indices.push_back(frame);
    seq.frames.push_back(std::move(joints));
  }
  return seq;
}

SkeletonSequence parse_fphab_skeleton_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("skeleton: cannot open " + path);
  try {
    return parse_fphab_skeleton(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

namespace {

void write_row(std::ostream& out, long frame, const double* values, int count) {
  out << frame;
  char buf[32];
  for (int i = 0; i < count; ++i) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), values[i],
                                   std::chars_format::general, 17);
    require(ec == std::errc(), "skeleton: failed to format number");
    out << ' ' << std::string_view(buf, ptr - buf);
  }
  out << '\n';
}

}  // namespace

void write_skeleton(const SkeletonSequence& seq, std::ostream& out) {
  for (size_t t = 0; t < seq.size(); ++t) {
    // Row-major joint x y z; 17 significant digits round-trips doubles.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
        row = seq.frames[t];
    write_row(out, seq.frame_indices[t], row.data(),
              static_cast<int>(row.size()));
  }
}

void write_skeleton_file(const SkeletonSequence& seq,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("skeleton: cannot write " + path);
  write_skeleton(seq, out);
}

Skeleton2dSequence parse_skeleton_2d_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("skeleton: cannot open " + path);
  Skeleton2dSequence seq;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    std::istringstream ls(line);
    std::vector<double> tokens;
    double v;
    std::string tok;
    while (ls >> tok) {
      const char* begin = tok.data();
      auto [ptr, ec] = std::from_chars(begin, begin + tok.size(), v);
      if (ec != std::errc() || ptr != begin + tok.size())
        throw ParseError(path + ": non-numeric token '" + tok + "'", line_no);
      tokens.push_back(v);
    }
    if (tokens.size() != 1 + 2 * HandTopology::kNumJoints)
      throw ParseError(path + ": expected 43 columns (frame + 21 joints x uv), got " +
                           std::to_string(tokens.size()),
                       line_no);
    long frame = std::lround(tokens[0]);
    if (!seq.frame_indices.empty() && frame <= seq.frame_indices.back())
      throw ParseError(path + ": frame index not strictly increasing", line_no);
    Coords2 joints(HandTopology::kNumJoints, 2);
    for (int i = 0; i < HandTopology::kNumJoints; ++i)
      for (int d = 0; d < 2; ++d) joints(i, d) = tokens[1 + 2 * i + d];
    seq.frame_indices.push_back(frame);
    seq.frames.push_back(std::move(joints));
  }
  return seq;
}

void write_skeleton_2d_file(const Skeleton2dSequence& seq,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("skeleton: cannot write " + path);
  for (size_t t = 0; t < seq.frames.size(); ++t) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
        row = seq.frames[t];
    write_row(out, seq.frame_indices[t], row.data(),
              static_cast<int>(row.size()));
  }
}

Seq2 project_to_2d(const SkeletonSequence& seq, const CameraModel& cam) {
  cam.validate();
  Seq2 out;
  out.reserve(seq.size());
  for (size_t t = 0; t < seq.size(); ++t) {
    const Coords3& joints = seq.frames[t];
    Coords2 px(joints.rows(), 2);
    for (int i = 0; i < joints.rows(); ++i) {
      Eigen::Vector3d p =
          cam.rotation * joints.row(i).transpose() + cam.translation;
      if (p.z() <= 0.0)
        throw ValidationError(
            "project_to_2d: nonpositive depth at frame " +
            std::to_string(seq.frame_indices[t]) + ", joint " +
            std::to_string(i));
      px(i, 0) = cam.fx * p.x() / p.z() + cam.u0;
      px(i, 1) = cam.fy * p.y() / p.z() + cam.v0;
    }
    out.push_back(std::move(px));
  }
  return out;
}

void normalize_window(Matrix& window, Eigen::Vector2d& mean, double& scale) {
  mean = window.colwise().mean().transpose();
  window.rowwise() -= mean.transpose();
  double var = window.array().square().sum() /
               static_cast<double>(window.size());
  scale = std::sqrt(var);
  if (scale < 1e-12) scale = 1.0;  // fully collapsed window
  window /= scale;
}

std::vector<WindowSample> make_windows(const Seq2& seq2d,
                                       const SkeletonSequence& seq3d, int T,
                                       double noise_std, uint64_t noise_seed) {
  require(T >= 1 && T % 2 == 1, "make_windows: T must be odd and positive");
  require(seq2d.size() == seq3d.size(),
          "make_windows: 2D and 3D sequences must have equal length");
  require(noise_std >= 0.0, "make_windows: noise_std must be nonnegative");

  std::vector<WindowSample> samples;
  const long len = static_cast<long>(seq2d.size());
  if (len < T) return samples;  // too short: empty, caller may warn

  const int n = HandTopology::kNumJoints;
  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const int half = T / 2;

  for (long center = half; center < len - half; ++center) {
    WindowSample s;
    s.input.resize(T * n, 2);
    for (int t = 0; t < T; ++t) {
      Coords2 f = seq2d[center - half + t];
      require(f.rows() == n, "make_windows: expected 21 joints per frame");
      if (noise_std > 0.0)
        for (int i = 0; i < n; ++i)
          for (int d = 0; d < 2; ++d) f(i, d) += noise_std * noise(rng);
      s.input.middleRows(t * n, n) = f;
    }
    normalize_window(s.input, s.norm_mean, s.norm_scale);
    s.target = seq3d.frames[center];
    s.action = seq3d.action;
    s.sequence_number = seq3d.sequence_number;
    s.center_frame_index = seq3d.frame_indices[center];
    samples.push_back(std::move(s));
  }
  return samples;
}

std::pair<std::vector<SkeletonSequence>, std::vector<SkeletonSequence>>
split_train_eval(const std::vector<SkeletonSequence>& sequences) {
  std::vector<SkeletonSequence> train, eval;
  for (const auto& seq : sequences) {
    require(seq.sequence_number >= 1,
            "split_train_eval: sequence '" + seq.subject + "/" + seq.action +
                "' is missing a sequence number");
    (seq.sequence_number == 3 ? eval : train).push_back(seq);
  }
  return {std::move(train), std::move(eval)};
}

std::vector<SkeletonSequence> load_dataset(const std::string& root) {
  if (!fs::is_directory(root))
    throw ValidationError("dataset: root '" + root + "' is not a directory");

  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file() && entry.path().filename() == "skeleton.txt")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw ValidationError("dataset: no skeleton.txt files under " + root);

  std::vector<SkeletonSequence> sequences;
  for (const auto& file : files) {
    // .../Subject/Action/SequenceNumber/skeleton.txt
    fs::path seq_dir = file.parent_path();
    fs::path action_dir = seq_dir.parent_path();
    fs::path subject_dir = action_dir.parent_path();
    SkeletonSequence seq = parse_fphab_skeleton_file(file.string());
    if (seq.frames.empty()) continue;
    seq.subject = subject_dir.filename().string();
    seq.action = action_dir.filename().string();
    try {
      seq.sequence_number = std::stoi(seq_dir.filename().string());
    } catch (const std::exception&) {
      throw ParseError("dataset: sequence directory '" +
                       seq_dir.filename().string() +
                       "' is not a sequence number");
    }
    sequences.push_back(std::move(seq));
  }
  return sequences;
}

}  // namespace lghand
