#include "lghand/ablation.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace lghand {

std::vector<GridEntry> load_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("grid: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("grid: invalid JSON in " + path + ": " + e.what());
  }
  require(j.contains("rows") && j["rows"].is_array(),
          "grid: file must contain a 'rows' array");
  for (const auto& [key, _] : j.items())
    require(key == "rows", "grid: unknown key '" + key + "'");

  std::vector<GridEntry> grid;
  for (const auto& row : j["rows"]) {
    GridEntry entry;
    for (const auto& [key, _] : row.items())
      require(key == "label" || key == "weights" || key == "frames",
              "grid: unknown row key '" + key + "'");
    if (row.contains("label")) entry.label = row["label"].get<std::string>();
    if (row.contains("weights")) {
      auto w = row["weights"].get<std::vector<double>>();
      require(w.size() == 4, "grid: weights must be [pose, finger, angle, direction]");
      entry.weights = LossWeights{w[0], w[1], w[2], w[3]};
    }
    if (row.contains("frames"))
      entry.window_frames = row["frames"].get<int>();
    require(entry.weights.has_value() || entry.window_frames.has_value(),
            "grid: row must override weights or frames");
    if (entry.label.empty()) {
      std::ostringstream label;
      if (entry.weights) {
        label << "weights(" << entry.weights->pose << ","
              << entry.weights->finger << "," << entry.weights->angle << ","
              << entry.weights->direction << ")";
      }
      if (entry.window_frames) {
        if (entry.weights) label << "+";
        label << "frames(" << *entry.window_frames << ")";
      }
      entry.label = label.str();
    }
    grid.push_back(std::move(entry));
  }
  return grid;
}

std::vector<AblationRow> ablation_run(
    const TrainConfig& base, const std::vector<GridEntry>& grid,
    const std::vector<SkeletonSequence>& train_seqs,
    const std::vector<SkeletonSequence>& eval_seqs, const CameraModel& camera,
    const HandTopology& topo) {
  base.validate();
  std::vector<AblationRow> rows;

  for (const GridEntry& entry : grid) {
    TrainConfig cfg = base;
    if (entry.weights) cfg.weights = *entry.weights;
    if (entry.window_frames) cfg.net.window_frames = *entry.window_frames;
    cfg.validate();

    auto build = [&](const std::vector<SkeletonSequence>& seqs, double noise) {
      std::vector<WindowSample> samples;
      for (const auto& seq : seqs) {
        Seq2 projected = project_to_2d(seq, camera);
        auto windows = make_windows(projected, seq, cfg.net.window_frames,
                                    noise, cfg.seed);
        samples.insert(samples.end(), windows.begin(), windows.end());
      }
      return samples;
    };
    std::vector<WindowSample> train_samples = build(train_seqs, cfg.noise_std);
    std::vector<WindowSample> eval_samples = build(eval_seqs, 0.0);
    require(!train_samples.empty(), "ablation: no training windows");
    require(!eval_samples.empty(), "ablation: no evaluation windows");

    LocalToGlobalNet net(topo, cfg.net, cfg.seed);
    OutputNorm norm = compute_output_norm_uvz(train_samples, camera);
    TrainResult result = train(net, train_samples, cfg, nullptr, 1, {}, &norm);
    MetricsReport report = evaluate(net, eval_samples, result.norm);

    rows.push_back({entry.label, cfg.weights, cfg.net.window_frames,
                    report.overall_mpjpe});
  }
  return rows;
}

std::string ablation_table_header() {
  return "label\tlambda_p\tlambda_f\tlambda_a\tlambda_d\tframes\tmpjpe_mm";
}

std::string format_ablation_row(const AblationRow& row) {
  std::ostringstream os;
  os.precision(10);
  os << row.label << '\t' << row.weights.pose << '\t' << row.weights.finger
     << '\t' << row.weights.angle << '\t' << row.weights.direction << '\t'
     << row.window_frames << '\t' << row.mpjpe;
  return os.str();
}

}  // namespace lghand
