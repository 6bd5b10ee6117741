#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lghand/dataio.hpp"
#include "lghand/metrics.hpp"
#include "lghand/train.hpp"

namespace lghand {

/// One grid row: overrides applied on top of the base config.
struct GridEntry {
  std::string label;
  std::optional<LossWeights> weights;
  std::optional<int> window_frames;
};

/// Grid file schema: {"rows": [{"label": ..., "weights": [p,f,a,d]} or
/// {"label": ..., "frames": n}, ...]}. Unknown keys rejected.
std::vector<GridEntry> load_grid(const std::string& path);

struct AblationRow {
  std::string label;
  LossWeights weights;
  int window_frames = 0;
  double mpjpe = 0.0;
};

/// Train and evaluate one model per grid entry with the shared base seed.
/// Windows are rebuilt per entry since the window length may change.
std::vector<AblationRow> ablation_run(
    const TrainConfig& base, const std::vector<GridEntry>& grid,
    const std::vector<SkeletonSequence>& train_seqs,
    const std::vector<SkeletonSequence>& eval_seqs, const CameraModel& camera,
    const HandTopology& topo);

std::string ablation_table_header();  // tab-separated
std::string format_ablation_row(const AblationRow& row);

}  // namespace lghand
