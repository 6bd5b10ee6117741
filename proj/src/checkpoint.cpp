#include "lghand/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

namespace lghand {

namespace {

constexpr const char* kFormat = "lghand-checkpoint";
constexpr int kVersion = 1;

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(m.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  j["data"] = std::move(data);
  return j;
}

Matrix matrix_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.contains("rows") || !j.contains("cols") || !j.contains("data"))
    throw CheckpointMismatch("checkpoint: malformed array for " + what);
  Eigen::Index rows = j["rows"].get<Eigen::Index>();
  Eigen::Index cols = j["cols"].get<Eigen::Index>();
  auto data = j["data"].get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw CheckpointMismatch("checkpoint: size mismatch for " + what);
  Matrix m(rows, cols);
  size_t idx = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[idx++];
  return m;
}

nlohmann::json topology_to_json(const HandTopology& topo) {
  nlohmann::json j;
  j["joint_names"] = topo.joint_names();
  std::vector<std::vector<int>> bones;
  for (const Bone& b : topo.bones()) bones.push_back({b.parent, b.child});
  j["bones"] = bones;
  j["pool_groups_21to6"] = topo.pool_groups_21to6();
  return j;
}

HandTopology topology_from_json(const nlohmann::json& j) {
  std::vector<Bone> bones;
  for (const auto& pair : j.at("bones"))
    bones.push_back({pair.at(0).get<int>(), pair.at(1).get<int>()});
  return HandTopology(j.at("joint_names").get<std::vector<std::string>>(),
                      std::move(bones),
                      j.at("pool_groups_21to6").get<std::vector<int>>());
}

nlohmann::json load_json_checked(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointMismatch("checkpoint: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointMismatch("checkpoint: invalid JSON in " + path + ": " +
                             e.what());
  }
  if (!j.contains("format") || j["format"] != kFormat)
    throw CheckpointMismatch("checkpoint: " + path +
                             " is not an lghand checkpoint");
  if (!j.contains("version") || j["version"].get<int>() != kVersion)
    throw CheckpointMismatch("checkpoint: unsupported version in " + path);
  return j;
}

}  // namespace

void save_checkpoint(const std::string& path, LocalToGlobalNet& net,
                     const OutputNorm& norm, int epochs_trained,
                     AdamOptimizer* optimizer) {
  const NetConfig& cfg = net.config();
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["arch"] = {{"window_frames", cfg.window_frames},
               {"input_channels", cfg.input_channels},
               {"width21", cfg.width21},
               {"width6", cfg.width6},
               {"width1", cfg.width1},
               {"nonlocal_embed", cfg.nonlocal_embed},
               {"skip_combine", cfg.skip_combine}};
  j["topology"] = topology_to_json(net.topology());
  nlohmann::json jn;
  jn["mode"] = norm.mode;
  jn["mean"] = {norm.mean.x(), norm.mean.y(), norm.mean.z()};
  jn["scale"] = norm.scale;
  if (norm.mode == "camera_uvz") {
    jn["depth_mean"] = norm.depth_mean;
    jn["depth_scale"] = norm.depth_scale;
    nlohmann::json jc;
    jc["fx"] = norm.camera.fx;
    jc["fy"] = norm.camera.fy;
    jc["u0"] = norm.camera.u0;
    jc["v0"] = norm.camera.v0;
    std::vector<double> r;
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) r.push_back(norm.camera.rotation(i, k));
    jc["rotation"] = r;
    jc["translation"] = std::vector<double>{norm.camera.translation.x(),
                                            norm.camera.translation.y(),
                                            norm.camera.translation.z()};
    jn["camera"] = std::move(jc);
  }
  j["output_norm"] = std::move(jn);
  j["epochs_trained"] = epochs_trained;

  nlohmann::json params;
  for (Param* p : net.parameters()) params[p->name] = matrix_to_json(p->value);
  j["params"] = std::move(params);

  if (optimizer) {
    nlohmann::json adam;
    adam["step_count"] = optimizer->step_count();
    nlohmann::json m1, m2;
    const auto& ps = optimizer->params();
    for (size_t i = 0; i < ps.size(); ++i) {
      m1[ps[i]->name] = matrix_to_json(optimizer->moment1()[i]);
      m2[ps[i]->name] = matrix_to_json(optimizer->moment2()[i]);
    }
    adam["moment1"] = std::move(m1);
    adam["moment2"] = std::move(m2);
    j["adam"] = std::move(adam);
  }

  std::ofstream out(path);
  if (!out) throw IoError("checkpoint: cannot write " + path);
  out << j.dump() << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  nlohmann::json j = load_json_checked(path);

  Checkpoint ck;
  try {
    const auto& arch = j.at("arch");
    NetConfig cfg;
    cfg.window_frames = arch.at("window_frames").get<int>();
    cfg.input_channels = arch.at("input_channels").get<int>();
    cfg.width21 = arch.at("width21").get<int>();
    cfg.width6 = arch.at("width6").get<int>();
    cfg.width1 = arch.at("width1").get<int>();
    cfg.nonlocal_embed = arch.at("nonlocal_embed").get<int>();
    cfg.skip_combine = arch.at("skip_combine").get<std::string>();

    HandTopology topo = topology_from_json(j.at("topology"));
    ck.net = std::make_unique<LocalToGlobalNet>(topo, cfg, 0);

    const auto& jn = j.at("output_norm");
    auto mean = jn.at("mean").get<std::vector<double>>();
    if (mean.size() != 3)
      throw CheckpointMismatch("checkpoint: output_norm.mean must have 3 entries");
    ck.norm.mean = Eigen::Vector3d(mean[0], mean[1], mean[2]);
    ck.norm.scale = jn.at("scale").get<double>();
    ck.norm.mode = jn.value("mode", "affine");
    if (ck.norm.mode == "camera_uvz") {
      ck.norm.depth_mean = jn.at("depth_mean").get<double>();
      ck.norm.depth_scale = jn.at("depth_scale").get<double>();
      const auto& jc = jn.at("camera");
      ck.norm.camera.fx = jc.at("fx").get<double>();
      ck.norm.camera.fy = jc.at("fy").get<double>();
      ck.norm.camera.u0 = jc.at("u0").get<double>();
      ck.norm.camera.v0 = jc.at("v0").get<double>();
      auto r = jc.at("rotation").get<std::vector<double>>();
      auto t = jc.at("translation").get<std::vector<double>>();
      if (r.size() != 9 || t.size() != 3)
        throw CheckpointMismatch("checkpoint: malformed camera in output_norm");
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) ck.norm.camera.rotation(i, k) = r[3 * i + k];
      ck.norm.camera.translation = Eigen::Vector3d(t[0], t[1], t[2]);
    } else if (ck.norm.mode != "affine") {
      throw CheckpointMismatch("checkpoint: unknown output_norm mode " +
                               ck.norm.mode);
    }
    ck.epochs_trained = j.at("epochs_trained").get<int>();

    const auto& params = j.at("params");
    for (Param* p : ck.net->parameters()) {
      if (!params.contains(p->name))
        throw CheckpointMismatch("checkpoint: missing parameter " + p->name);
      Matrix loaded = matrix_from_json(params.at(p->name), p->name);
      if (loaded.rows() != p->value.rows() || loaded.cols() != p->value.cols())
        throw CheckpointMismatch("checkpoint: shape mismatch for " + p->name);
      p->value = std::move(loaded);
    }
    ck.has_optimizer_state = j.contains("adam");
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointMismatch("checkpoint: malformed " + path + ": " +
                             e.what());
  } catch (const ValidationError& e) {
    throw CheckpointMismatch("checkpoint: invalid contents in " + path +
                             ": " + e.what());
  }
  return ck;
}

void restore_optimizer_state(const std::string& path, AdamOptimizer& opt) {
  nlohmann::json j = load_json_checked(path);
  if (!j.contains("adam"))
    throw CheckpointMismatch("checkpoint: no optimizer state in " + path);
  try {
    const auto& adam = j["adam"];
    opt.set_step_count(adam.at("step_count").get<long>());
    const auto& ps = opt.params();
    for (size_t i = 0; i < ps.size(); ++i) {
      opt.moment1()[i] =
          matrix_from_json(adam.at("moment1").at(ps[i]->name), ps[i]->name);
      opt.moment2()[i] =
          matrix_from_json(adam.at("moment2").at(ps[i]->name), ps[i]->name);
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointMismatch("checkpoint: malformed optimizer state: " +
                             std::string(e.what()));
  }
}

}  // namespace lghand
