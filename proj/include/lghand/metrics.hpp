#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lghand/dataio.hpp"
#include "lghand/network.hpp"
#include "lghand/train.hpp"

namespace lghand {

/// Mean per-joint position error over K frames of 21 joints, millimeters.
double mpjpe(const Seq3& gt, const Seq3& pred);

/// Fraction of samples whose per-sample MPJPE is strictly below each
/// threshold; thresholds must be sorted ascending.
std::vector<double> pck_curve(const Seq3& gt, const Seq3& pred,
                              const std::vector<double>& thresholds);

struct ActionMetric {
  double mpjpe = 0.0;
  long samples = 0;
};

struct MetricsReport {
  double overall_mpjpe = 0.0;
  long num_samples = 0;
  std::map<std::string, ActionMetric> per_action;
  // Joint-type order: Wrist, MCP, PIP, DIP, TIP.
  std::array<double, 5> per_joint_type{};
  // Finger order follows the topology's chains (thumb..pinky canonically).
  std::array<double, 5> per_finger{};
  std::vector<std::pair<double, double>> pck;  // (threshold mm, fraction)
};

extern const std::array<const char*, 5> kJointTypeNames;
extern const std::array<const char*, 5> kFingerNames;

std::vector<double> default_pck_thresholds();  // 5..80 mm, step 5

/// Run the model over the samples and aggregate every metric.
MetricsReport evaluate(LocalToGlobalNet& net,
                       const std::vector<WindowSample>& samples,
                       const OutputNorm& norm,
                       const std::vector<double>& thresholds =
                           default_pck_thresholds());

void save_metrics(const MetricsReport& report, const std::string& path);
MetricsReport load_metrics(const std::string& path);

}  // namespace lghand
