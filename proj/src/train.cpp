#include "lghand/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

namespace lghand {

void TrainConfig::validate() const {
  require(epochs >= 0, "train config: epochs must be nonnegative");
  require(batch_size >= 1, "train config: batch_size must be positive");
  require(initial_lr > 0.0, "train config: initial_lr must be positive");
  require(epoch_decay > 0.0 && step_decay > 0.0,
          "train config: decay factors must be positive");
  require(step_decay_every >= 1,
          "train config: step_decay_every must be positive");
  require(noise_std >= 0.0, "train config: noise_std must be nonnegative");
  require(grad_clip_norm > 0.0,
          "train config: grad_clip_norm must be positive");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 &&
              adam_beta2 < 1.0 && adam_eps > 0.0,
          "train config: invalid optimizer constants");
  weights.validate();
  net.validate();
}

namespace {

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

const std::vector<std::string> kConfigKeys = {
    "epochs",        "batch_size",    "initial_lr",      "epoch_decay",
    "step_decay",    "step_decay_every", "loss_weights", "seed",
    "noise_std",     "grad_clip",     "grad_clip_norm",  "adam_beta1",
    "adam_beta2",    "adam_eps",      "finger_per_bone", "topology_file",
    "window_frames", "width21",       "width6",          "width1",
    "nonlocal_embed", "skip_combine"};

}  // namespace

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("train config: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("train config: invalid JSON in " + path + ": " +
                     e.what());
  }

  for (const auto& [key, _] : j.items())
    require(std::find(kConfigKeys.begin(), kConfigKeys.end(), key) !=
                kConfigKeys.end(),
            "train config: unknown key '" + key + "' in " + path);

  TrainConfig cfg;
  try {
    read_key(j, "epochs", cfg.epochs);
    read_key(j, "batch_size", cfg.batch_size);
    read_key(j, "initial_lr", cfg.initial_lr);
    read_key(j, "epoch_decay", cfg.epoch_decay);
    read_key(j, "step_decay", cfg.step_decay);
    read_key(j, "step_decay_every", cfg.step_decay_every);
    if (j.contains("loss_weights")) {
      auto w = j["loss_weights"].get<std::vector<double>>();
      require(w.size() == 4,
              "train config: loss_weights must be [pose, finger, angle, "
              "direction]");
      cfg.weights = {w[0], w[1], w[2], w[3]};
    }
    read_key(j, "seed", cfg.seed);
    read_key(j, "noise_std", cfg.noise_std);
    read_key(j, "grad_clip", cfg.grad_clip);
    read_key(j, "grad_clip_norm", cfg.grad_clip_norm);
    read_key(j, "adam_beta1", cfg.adam_beta1);
    read_key(j, "adam_beta2", cfg.adam_beta2);
    read_key(j, "adam_eps", cfg.adam_eps);
    read_key(j, "finger_per_bone", cfg.finger_per_bone);
    read_key(j, "topology_file", cfg.topology_file);
    read_key(j, "window_frames", cfg.net.window_frames);
    read_key(j, "width21", cfg.net.width21);
    read_key(j, "width6", cfg.net.width6);
    read_key(j, "width1", cfg.net.width1);
    read_key(j, "nonlocal_embed", cfg.net.nonlocal_embed);
    read_key(j, "skip_combine", cfg.net.skip_combine);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("train config: bad value in " + path + ": " + e.what());
  }

  if (const char* env_seed = std::getenv("LGHAND_SEED")) {
    try {
      cfg.seed = std::stoull(env_seed);
    } catch (const std::exception&) {
      throw ValidationError("LGHAND_SEED is not an integer: " +
                            std::string(env_seed));
    }
  }
  cfg.validate();
  return cfg;
}

void save_train_config(const TrainConfig& cfg, const std::string& path) {
  nlohmann::json j;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["initial_lr"] = cfg.initial_lr;
  j["epoch_decay"] = cfg.epoch_decay;
  j["step_decay"] = cfg.step_decay;
  j["step_decay_every"] = cfg.step_decay_every;
  j["loss_weights"] = {cfg.weights.pose, cfg.weights.finger,
                       cfg.weights.angle, cfg.weights.direction};
  j["seed"] = cfg.seed;
  j["noise_std"] = cfg.noise_std;
  j["grad_clip"] = cfg.grad_clip;
  j["grad_clip_norm"] = cfg.grad_clip_norm;
  j["adam_beta1"] = cfg.adam_beta1;
  j["adam_beta2"] = cfg.adam_beta2;
  j["adam_eps"] = cfg.adam_eps;
  j["finger_per_bone"] = cfg.finger_per_bone;
  j["topology_file"] = cfg.topology_file;
  j["window_frames"] = cfg.net.window_frames;
  j["width21"] = cfg.net.width21;
  j["width6"] = cfg.net.width6;
  j["width1"] = cfg.net.width1;
  j["nonlocal_embed"] = cfg.net.nonlocal_embed;
  j["skip_combine"] = cfg.net.skip_combine;
  std::ofstream out(path);
  if (!out) throw IoError("train config: cannot write " + path);
  out << j.dump(2) << "\n";
}

double learning_rate_at(int epoch, const TrainConfig& cfg) {
  require(epoch >= 1, "learning_rate_at: epoch is 1-based");
  return cfg.initial_lr * std::pow(cfg.epoch_decay, epoch - 1) *
         std::pow(cfg.step_decay, (epoch - 1) / cfg.step_decay_every);
}

OutputNorm compute_output_norm(const std::vector<WindowSample>& samples) {
  require(!samples.empty(), "output norm: empty sample set");
  OutputNorm norm;
  double count = 0.0;
  for (const auto& s : samples) {
    norm.mean += s.target.colwise().sum().transpose();
    count += static_cast<double>(s.target.rows());
  }
  norm.mean /= count;
  double ss = 0.0;
  for (const auto& s : samples)
    ss += (s.target.rowwise() - norm.mean.transpose()).squaredNorm();
  norm.scale = std::sqrt(ss / (count * 3.0));
  if (norm.scale < 1e-9) norm.scale = 1.0;
  return norm;
}

OutputNorm compute_output_norm_uvz(const std::vector<WindowSample>& samples,
                                   const CameraModel& camera) {
  require(!samples.empty(), "output norm: empty sample set");
  camera.validate();
  OutputNorm norm;
  norm.mode = "camera_uvz";
  norm.camera = camera;
  double sum = 0.0, count = 0.0;
  for (const auto& s : samples)
    for (int i = 0; i < s.target.rows(); ++i) {
      Eigen::Vector3d pc =
          camera.rotation * s.target.row(i).transpose() + camera.translation;
      require(pc.z() > 0.0, "output norm: target behind the camera");
      sum += pc.z();
      count += 1.0;
    }
  norm.depth_mean = sum / count;
  double ss = 0.0;
  for (const auto& s : samples)
    for (int i = 0; i < s.target.rows(); ++i) {
      Eigen::Vector3d pc =
          camera.rotation * s.target.row(i).transpose() + camera.translation;
      ss += (pc.z() - norm.depth_mean) * (pc.z() - norm.depth_mean);
    }
  norm.depth_scale = std::sqrt(ss / count);
  if (norm.depth_scale < 1e-9) norm.depth_scale = 1.0;
  return norm;
}

Coords3 denormalize_prediction(const OutputNorm& norm,
                               const WindowSample& sample,
                               const Coords3& raw) {
  if (norm.mode == "affine")
    return (raw * norm.scale).rowwise() + norm.mean.transpose();
  require(norm.mode == "camera_uvz", "output norm: unknown mode " + norm.mode);

  const CameraModel& cam = norm.camera;
  Coords3 out(raw.rows(), 3);
  Eigen::Matrix3d rot_inv = cam.rotation.transpose();
  for (int i = 0; i < raw.rows(); ++i) {
    const double u = raw(i, 0) * sample.norm_scale + sample.norm_mean.x();
    const double v = raw(i, 1) * sample.norm_scale + sample.norm_mean.y();
    const double z = raw(i, 2) * norm.depth_scale + norm.depth_mean;
    Eigen::Vector3d pc((u - cam.u0) * z / cam.fx, (v - cam.v0) * z / cam.fy,
                       z);
    out.row(i) = (rot_inv * (pc - cam.translation)).transpose();
  }
  return out;
}

Coords3 denormalize_grad(const OutputNorm& norm, const WindowSample& sample,
                         const Coords3& raw, const Coords3& grad_mm) {
  if (norm.mode == "affine") return grad_mm * norm.scale;
  require(norm.mode == "camera_uvz", "output norm: unknown mode " + norm.mode);

  const CameraModel& cam = norm.camera;
  Coords3 out(raw.rows(), 3);
  for (int i = 0; i < raw.rows(); ++i) {
    // World-space gradient back to camera space: d(world)/d(cam) = R^T.
    Eigen::Vector3d g_cam = cam.rotation * grad_mm.row(i).transpose();
    const double u = raw(i, 0) * sample.norm_scale + sample.norm_mean.x();
    const double v = raw(i, 1) * sample.norm_scale + sample.norm_mean.y();
    const double z = raw(i, 2) * norm.depth_scale + norm.depth_mean;
    // pc = ((u-u0) z / fx, (v-v0) z / fy, z).
    const double du = g_cam.x() * z / cam.fx;
    const double dv = g_cam.y() * z / cam.fy;
    const double dz = g_cam.x() * (u - cam.u0) / cam.fx +
                      g_cam.y() * (v - cam.v0) / cam.fy + g_cam.z();
    out(i, 0) = du * sample.norm_scale;
    out(i, 1) = dv * sample.norm_scale;
    out(i, 2) = dz * norm.depth_scale;
  }
  return out;
}

AdamOptimizer::AdamOptimizer(std::vector<Param*> params, double beta1,
                             double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (Param* p : params_) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void AdamOptimizer::step(double lr) {
  ++step_count_;
  const double bc1 = 1.0 - std::pow(beta1_, step_count_);
  const double bc2 = 1.0 - std::pow(beta2_, step_count_);
  for (size_t i = 0; i < params_.size(); ++i) {
    const Matrix& g = params_[i]->grad;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    Matrix m_hat = m_[i] / bc1;
    Matrix v_hat = v_[i] / bc2;
    params_[i]->value.array() -=
        lr * m_hat.array() / (v_hat.array().sqrt() + eps_);
  }
}

std::string epoch_log_header() {
  return "epoch\tlr\tloss_pose\tloss_finger\tloss_angle\tloss_direction\t"
         "loss_total";
}

std::string format_epoch_log(const EpochStats& s) {
  std::ostringstream os;
  os.precision(10);
  os << s.epoch << '\t' << s.lr << '\t' << s.pose << '\t' << s.finger << '\t'
     << s.angle << '\t' << s.direction << '\t' << s.total;
  return os.str();
}

namespace {

const char* nonfinite_term(const LossReport& r) {
  if (!std::isfinite(r.pose)) return "pose";
  if (!std::isfinite(r.finger)) return "finger_length";
  if (!std::isfinite(r.angle)) return "angle";
  if (!std::isfinite(r.direction)) return "direction";
  if (!std::isfinite(r.total)) return "total";
  return nullptr;
}

}  // namespace

TrainResult train(LocalToGlobalNet& net,
                  const std::vector<WindowSample>& samples,
                  const TrainConfig& cfg, AdamOptimizer* optimizer,
                  int start_epoch, const EpochCallback& callback,
                  const OutputNorm* fixed_norm) {
  cfg.validate();
  require(!samples.empty(), "train: empty training set");
  require(start_epoch >= 1, "train: start_epoch is 1-based");

  const HandTopology& topo = net.topology();
  const int m_sample = net.nodes21();
  const int n = HandTopology::kNumJoints;

  TrainResult result;
  result.norm = fixed_norm ? *fixed_norm : compute_output_norm(samples);

  std::unique_ptr<AdamOptimizer> own_optimizer;
  if (!optimizer) {
    own_optimizer = std::make_unique<AdamOptimizer>(
        net.parameters(), cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    optimizer = own_optimizer.get();
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<size_t> order(samples.size());
  std::iota(order.begin(), order.end(), size_t{0});

  for (int epoch = start_epoch; epoch < start_epoch + cfg.epochs; ++epoch) {
    const double lr = learning_rate_at(epoch, cfg);
    std::shuffle(order.begin(), order.end(), rng);

    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = lr;

    for (size_t batch_start = 0, batch_idx = 0; batch_start < order.size();
         batch_start += cfg.batch_size, ++batch_idx) {
      const int b_count = static_cast<int>(
          std::min<size_t>(cfg.batch_size, order.size() - batch_start));

      Matrix x(b_count * m_sample, 2);
      for (int b = 0; b < b_count; ++b)
        x.middleRows(b * m_sample, m_sample) =
            samples[order[batch_start + b]].input;

      net.zero_grad();
      Matrix y = net.forward_batch(x, b_count);

      Matrix d_out = Matrix::Zero(b_count * n, 3);
      Seq3 gt(1), pred(1), grad;
      for (int b = 0; b < b_count; ++b) {
        const WindowSample& s = samples[order[batch_start + b]];
        Coords3 raw = y.middleRows(b * n, n);
        pred[0] = denormalize_prediction(result.norm, s, raw);
        gt[0] = s.target;
        LossReport report = total_loss(gt, pred, topo, cfg.weights, &grad,
                                       cfg.finger_per_bone);
        if (const char* term = nonfinite_term(report))
          throw TrainingDiverged(
              "train: non-finite " + std::string(term) + " loss in epoch " +
              std::to_string(epoch) + ", batch " + std::to_string(batch_idx));
        stats.pose += report.pose;
        stats.finger += report.finger;
        stats.angle += report.angle;
        stats.direction += report.direction;
        stats.degenerate_bones += report.degenerate_bones;
        // Mean reduction over the batch; chain through the denormalization.
        d_out.middleRows(b * n, n) =
            denormalize_grad(result.norm, s, raw, grad[0]) /
            static_cast<double>(b_count);
      }

      net.backward_batch(d_out, b_count);

      if (cfg.grad_clip) {
        double sq = 0.0;
        for (Param* p : optimizer->params()) sq += p->grad.squaredNorm();
        double norm = std::sqrt(sq);
        if (norm > cfg.grad_clip_norm) {
          double scale = cfg.grad_clip_norm / norm;
          for (Param* p : optimizer->params()) p->grad *= scale;
        }
      }
      optimizer->step(lr);
    }

    const double inv = 1.0 / static_cast<double>(samples.size());
    stats.pose *= inv;
    stats.finger *= inv;
    stats.angle *= inv;
    stats.direction *= inv;
    stats.total = cfg.weights.pose * stats.pose +
                  cfg.weights.finger * stats.finger +
                  cfg.weights.angle * stats.angle +
                  cfg.weights.direction * stats.direction;
    result.log.push_back(stats);
    if (callback && !callback(stats)) break;
  }
  return result;
}

std::vector<Coords3> predict_samples(LocalToGlobalNet& net,
                                     const std::vector<WindowSample>& samples,
                                     const OutputNorm& norm) {
  const int m_sample = net.nodes21();
  const int n = HandTopology::kNumJoints;
  const int chunk = 256;

  std::vector<Coords3> preds;
  preds.reserve(samples.size());
  for (size_t start = 0; start < samples.size(); start += chunk) {
    const int b_count =
        static_cast<int>(std::min<size_t>(chunk, samples.size() - start));
    Matrix x(b_count * m_sample, 2);
    for (int b = 0; b < b_count; ++b)
      x.middleRows(b * m_sample, m_sample) = samples[start + b].input;
    Matrix y = net.forward_batch(x, b_count);
    for (int b = 0; b < b_count; ++b)
      preds.push_back(denormalize_prediction(norm, samples[start + b],
                                             y.middleRows(b * n, n)));
  }
  return preds;
}

}  // namespace lghand
