#pragma once

#include <memory>
#include <string>

#include "lghand/network.hpp"
#include "lghand/train.hpp"

namespace lghand {

/// Model container: architecture config, topology, output normalization,
/// named parameter arrays, epoch counter, and optionally the optimizer
/// moments so a run can resume exactly. Versioned JSON; see README.
struct Checkpoint {
  std::unique_ptr<LocalToGlobalNet> net;
  OutputNorm norm;
  int epochs_trained = 0;
  bool has_optimizer_state = false;
};

void save_checkpoint(const std::string& path, LocalToGlobalNet& net,
                     const OutputNorm& norm, int epochs_trained,
                     AdamOptimizer* optimizer = nullptr);

/// Rebuilds the network from the stored architecture and parameters.
/// Throws CheckpointMismatch on version, shape, or name mismatches.
Checkpoint load_checkpoint(const std::string& path);

/// Restore optimizer moments saved alongside the model; the optimizer must
/// already be bound to the loaded network's parameters.
void restore_optimizer_state(const std::string& path, AdamOptimizer& opt);

}  // namespace lghand
