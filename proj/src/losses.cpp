#include "lghand/losses.hpp"

#include <cmath>

namespace lghand {

namespace {

constexpr double kCosClamp = 1.0 - 1e-7;
constexpr double kDegenerateNorm = 1e-8;
constexpr double kZeroDist = 1e-12;

void check_shapes(const Seq3& gt, const Seq3& pred, const char* op) {
  require(gt.size() == pred.size(),
          std::string(op) + ": frame count mismatch");
  for (size_t t = 0; t < gt.size(); ++t) {
    require(gt[t].rows() == pred[t].rows(),
            std::string(op) + ": joint count mismatch");
    require(gt[t].allFinite() && pred[t].allFinite(),
            std::string(op) + ": non-finite coordinates");
  }
}

void init_grad(Seq3* grad, const Seq3& like) {
  if (!grad) return;
  if (grad->size() != like.size()) grad->resize(like.size());
  for (size_t t = 0; t < like.size(); ++t)
    (*grad)[t] = Coords3::Zero(like[t].rows(), 3);
}

// Scatter a bone-vector gradient onto the two joints that define the bone.
void add_bone_grad(Seq3& grad, size_t t, const Bone& bone,
                   const Eigen::Vector3d& g) {
  grad[t].row(bone.child) += g.transpose();
  grad[t].row(bone.parent) -= g.transpose();
}

}  // namespace

void LossWeights::validate() const {
  for (double w : {pose, finger, angle, direction})
    require(std::isfinite(w) && w >= 0.0,
            "loss weights must be finite and nonnegative");
}

AngleResult angle_between(const Eigen::Vector3d& v1,
                          const Eigen::Vector3d& v2) {
  AngleGradResult r = angle_between_grad(v1, v2);
  return {r.radians, r.degenerate};
}

AngleGradResult angle_between_grad(const Eigen::Vector3d& v1,
                                   const Eigen::Vector3d& v2) {
  require(v1.allFinite() && v2.allFinite(), "angle_between: non-finite input");
  AngleGradResult out;
  const double n1 = v1.norm();
  const double n2 = v2.norm();
  if (n1 < kDegenerateNorm || n2 < kDegenerateNorm) {
    out.degenerate = true;
    return out;
  }
  const double c_raw = v1.dot(v2) / (n1 * n2);
  const double c = std::clamp(c_raw, -kCosClamp, kCosClamp);
  out.radians = std::acos(c);
  if (c_raw <= -kCosClamp || c_raw >= kCosClamp) return out;  // clamped: flat

  const double dacos = -1.0 / std::sqrt(1.0 - c * c);
  out.d_v1 = dacos * (v2 / (n1 * n2) - c * v1 / (n1 * n1));
  out.d_v2 = dacos * (v1 / (n1 * n2) - c * v2 / (n2 * n2));
  return out;
}

double pose_loss(const Seq3& gt, const Seq3& pred, Seq3* grad) {
  check_shapes(gt, pred, "pose_loss");
  init_grad(grad, pred);
  double loss = 0.0;
  for (size_t t = 0; t < gt.size(); ++t)
    for (int i = 0; i < gt[t].rows(); ++i) {
      Eigen::Vector3d diff = (pred[t].row(i) - gt[t].row(i)).transpose();
      double d = diff.norm();
      loss += d;
      if (grad && d > kZeroDist) (*grad)[t].row(i) += (diff / d).transpose();
    }
  return loss;
}

double finger_length_loss(const Seq3& gt, const Seq3& pred,
                          const HandTopology& topo, bool per_bone,
                          Seq3* grad) {
  check_shapes(gt, pred, "finger_length_loss");
  init_grad(grad, pred);
  const Seq3 u = bone_vectors(gt, topo);
  const Seq3 v = bone_vectors(pred, topo);
  const auto& bones = topo.bones();

  double loss = 0.0;
  for (size_t t = 0; t < gt.size(); ++t) {
    auto bone_term = [&](int b, double sign_outer) {
      if (!grad) return;
      double n = v[t].row(b).norm();
      if (n <= kZeroDist) return;
      Eigen::Vector3d g = sign_outer * v[t].row(b).transpose() / n;
      add_bone_grad(*grad, t, bones[b], g);
    };

    if (per_bone) {
      for (int b = 0; b < HandTopology::kNumBones; ++b) {
        double diff = v[t].row(b).norm() - u[t].row(b).norm();
        loss += std::abs(diff);
        if (diff != 0.0) bone_term(b, diff > 0 ? 1.0 : -1.0);
      }
    } else {
      for (const auto& chain : topo.finger_chains()) {
        double len_gt = 0.0, len_pred = 0.0;
        for (int b : chain) {
          len_gt += u[t].row(b).norm();
          len_pred += v[t].row(b).norm();
        }
        double diff = len_pred - len_gt;
        loss += std::abs(diff);
        if (diff != 0.0)
          for (int b : chain) bone_term(b, diff > 0 ? 1.0 : -1.0);
      }
    }
  }
  return loss;
}

double angle_loss(const Seq3& gt, const Seq3& pred, const HandTopology& topo,
                  Seq3* grad, long* degenerate_tally) {
  check_shapes(gt, pred, "angle_loss");
  init_grad(grad, pred);
  const Seq3 u = bone_vectors(gt, topo);
  const Seq3 v = bone_vectors(pred, topo);
  const auto& bones = topo.bones();

  double loss = 0.0;
  for (size_t t = 0; t < gt.size(); ++t)
    for (auto [i, j] : topo.consecutive_pairs()) {
      AngleResult a_gt = angle_between(u[t].row(i).transpose(), u[t].row(j).transpose());
      AngleGradResult a_pr = angle_between_grad(v[t].row(i).transpose(), v[t].row(j).transpose());
      if (a_gt.degenerate || a_pr.degenerate) {
        if (degenerate_tally) ++*degenerate_tally;
        continue;
      }
      double diff = a_gt.radians - a_pr.radians;
      loss += std::abs(diff);
      if (grad && diff != 0.0) {
        double s = diff > 0 ? -1.0 : 1.0;  // d|g - p|/dp
        add_bone_grad(*grad, t, bones[i], s * a_pr.d_v1);
        add_bone_grad(*grad, t, bones[j], s * a_pr.d_v2);
      }
    }
  return loss;
}

double direction_loss(const Seq3& gt, const Seq3& pred,
                      const HandTopology& topo, Seq3* grad,
                      long* degenerate_tally) {
  check_shapes(gt, pred, "direction_loss");
  init_grad(grad, pred);
  const Seq3 u = bone_vectors(gt, topo);
  const Seq3 v = bone_vectors(pred, topo);
  const auto& bones = topo.bones();

  double loss = 0.0;
  for (size_t t = 0; t < gt.size(); ++t)
    for (int b = 0; b < HandTopology::kNumBones; ++b) {
      AngleGradResult a = angle_between_grad(u[t].row(b).transpose(), v[t].row(b).transpose());
      if (a.degenerate) {
        if (degenerate_tally) ++*degenerate_tally;
        continue;
      }
      loss += a.radians;
      if (grad) add_bone_grad(*grad, t, bones[b], a.d_v2);
    }
  return loss;
}

LossReport total_loss(const Seq3& gt, const Seq3& pred,
                      const HandTopology& topo, const LossWeights& weights,
                      Seq3* grad, bool finger_per_bone) {
  weights.validate();
  LossReport report;
  init_grad(grad, pred);

  Seq3 term_grad;
  auto accumulate = [&](double weight) {
    if (!grad || weight == 0.0) return;
    for (size_t t = 0; t < grad->size(); ++t)
      (*grad)[t] += weight * term_grad[t];
  };

  Seq3* tg = grad ? &term_grad : nullptr;
  report.pose = pose_loss(gt, pred, tg);
  accumulate(weights.pose);
  report.finger = finger_length_loss(gt, pred, topo, finger_per_bone, tg);
  accumulate(weights.finger);
  report.angle = angle_loss(gt, pred, topo, tg, &report.degenerate_bones);
  accumulate(weights.angle);
  report.direction =
      direction_loss(gt, pred, topo, tg, &report.degenerate_bones);
  accumulate(weights.direction);

  report.total = weights.pose * report.pose + weights.finger * report.finger +
                 weights.angle * report.angle +
                 weights.direction * report.direction;
  return report;
}

}  // namespace lghand
