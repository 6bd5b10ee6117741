#include "lghand/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace lghand {

const std::array<const char*, 5> kJointTypeNames = {"Wrist", "MCP", "PIP",
                                                    "DIP", "TIP"};
const std::array<const char*, 5> kFingerNames = {"Thumb", "Index", "Middle",
                                                 "Ring", "Pinky"};

double mpjpe(const Seq3& gt, const Seq3& pred) {
  require(gt.size() == pred.size(), "mpjpe: frame count mismatch");
  require(!gt.empty(), "mpjpe: empty input");
  double sum = 0.0;
  long count = 0;
  for (size_t k = 0; k < gt.size(); ++k) {
    require(gt[k].rows() == pred[k].rows(), "mpjpe: joint count mismatch");
    sum += (gt[k] - pred[k]).rowwise().norm().sum();
    count += gt[k].rows();
  }
  return sum / static_cast<double>(count);
}

std::vector<double> pck_curve(const Seq3& gt, const Seq3& pred,
                              const std::vector<double>& thresholds) {
  require(gt.size() == pred.size() && !gt.empty(),
          "pck_curve: shape mismatch or empty input");
  require(std::is_sorted(thresholds.begin(), thresholds.end()),
          "pck_curve: thresholds must be sorted ascending");

  std::vector<double> per_sample;
  per_sample.reserve(gt.size());
  for (size_t k = 0; k < gt.size(); ++k)
    per_sample.push_back((gt[k] - pred[k]).rowwise().norm().mean());

  std::vector<double> fractions;
  fractions.reserve(thresholds.size());
  for (double thr : thresholds) {
    long correct = std::count_if(per_sample.begin(), per_sample.end(),
                                 [thr](double e) { return e < thr; });
    fractions.push_back(static_cast<double>(correct) /
                        static_cast<double>(per_sample.size()));
  }
  return fractions;
}

std::vector<double> default_pck_thresholds() {
  std::vector<double> t;
  for (int mm = 5; mm <= 80; mm += 5) t.push_back(static_cast<double>(mm));
  return t;
}

MetricsReport evaluate(LocalToGlobalNet& net,
                       const std::vector<WindowSample>& samples,
                       const OutputNorm& norm,
                       const std::vector<double>& thresholds) {
  require(!samples.empty(), "evaluate: empty evaluation set");
  const HandTopology& topo = net.topology();

  std::vector<Coords3> preds = predict_samples(net, samples, norm);

  MetricsReport report;
  report.num_samples = static_cast<long>(samples.size());

  Seq3 gt_all, pred_all;
  gt_all.reserve(samples.size());
  pred_all.reserve(samples.size());
  for (size_t k = 0; k < samples.size(); ++k) {
    gt_all.push_back(samples[k].target);
    pred_all.push_back(preds[k]);
  }
  report.overall_mpjpe = mpjpe(gt_all, pred_all);

  std::map<std::string, std::pair<double, long>> action_acc;
  std::array<double, 5> type_sum{};
  std::array<long, 5> type_count{};
  std::array<double, 5> finger_sum{};
  std::array<long, 5> finger_count{};

  for (size_t k = 0; k < samples.size(); ++k) {
    Vector errs = (gt_all[k] - pred_all[k]).rowwise().norm();
    auto& [sum, count] = action_acc[samples[k].action];
    sum += errs.mean();
    ++count;
    for (int i = 0; i < HandTopology::kNumJoints; ++i) {
      int type = topo.joint_type(i);
      type_sum[type] += errs[i];
      ++type_count[type];
      int finger = topo.finger_of_joint(i);
      if (finger >= 0) {
        finger_sum[finger] += errs[i];
        ++finger_count[finger];
      }
    }
  }

  for (const auto& [action, acc] : action_acc)
    report.per_action[action] = {acc.first / acc.second, acc.second};
  for (int i = 0; i < 5; ++i) {
    report.per_joint_type[i] = type_sum[i] / type_count[i];
    report.per_finger[i] = finger_sum[i] / finger_count[i];
  }

  std::vector<double> fracs = pck_curve(gt_all, pred_all, thresholds);
  for (size_t i = 0; i < thresholds.size(); ++i)
    report.pck.emplace_back(thresholds[i], fracs[i]);
  return report;
}

void save_metrics(const MetricsReport& report, const std::string& path) {
  nlohmann::json j;
  j["overall_mpjpe_mm"] = report.overall_mpjpe;
  j["num_samples"] = report.num_samples;
  nlohmann::json actions;
  for (const auto& [name, m] : report.per_action)
    actions[name] = {{"mpjpe_mm", m.mpjpe}, {"samples", m.samples}};
  j["per_action"] = std::move(actions);
  nlohmann::json types;
  for (int i = 0; i < 5; ++i) types[kJointTypeNames[i]] = report.per_joint_type[i];
  j["per_joint_type"] = std::move(types);
  nlohmann::json fingers;
  for (int i = 0; i < 5; ++i) fingers[kFingerNames[i]] = report.per_finger[i];
  j["per_finger"] = std::move(fingers);
  std::vector<std::vector<double>> pck;
  for (auto [thr, frac] : report.pck) pck.push_back({thr, frac});
  j["pck"] = std::move(pck);

  std::ofstream out(path);
  if (!out) throw IoError("metrics: cannot write " + path);
  out << j.dump(2) << "\n";
}

MetricsReport load_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("metrics: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("metrics: invalid JSON in " + path + ": " + e.what());
  }
  MetricsReport report;
  try {
    report.overall_mpjpe = j.at("overall_mpjpe_mm").get<double>();
    report.num_samples = j.at("num_samples").get<long>();
    for (const auto& [name, m] : j.at("per_action").items())
      report.per_action[name] = {m.at("mpjpe_mm").get<double>(),
                                 m.at("samples").get<long>()};
    for (int i = 0; i < 5; ++i) {
      report.per_joint_type[i] =
          j.at("per_joint_type").at(kJointTypeNames[i]).get<double>();
      report.per_finger[i] =
          j.at("per_finger").at(kFingerNames[i]).get<double>();
    }
    for (const auto& pair : j.at("pck"))
      report.pck.emplace_back(pair.at(0).get<double>(),
                              pair.at(1).get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("metrics: malformed " + path + ": " + e.what());
  }
  return report;
}

}  // namespace lghand
