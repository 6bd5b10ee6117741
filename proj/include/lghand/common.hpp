#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace lghand {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

// One frame of joint (or bone) coordinates, one row per joint.
using Coords3 = Eigen::Matrix<double, Eigen::Dynamic, 3>;
using Coords2 = Eigen::Matrix<double, Eigen::Dynamic, 2>;

// A T-frame sequence; Seq3 doubles as the T x N x 3 pose arrays the losses
// consume and the T x P x 3 bone-vector arrays they derive.
using Seq3 = std::vector<Coords3>;
using Seq2 = std::vector<Coords2>;

/// Invalid arguments, broken invariants, malformed inputs.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed text input; carries the 1-based line number when known.
struct ParseError : ValidationError {
  explicit ParseError(const std::string& msg) : ValidationError(msg) {}
  ParseError(const std::string& msg, long line)
      : ValidationError(msg + " (line " + std::to_string(line) + ")") {}
};

/// A loss term became non-finite during training.
struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Checkpoint file does not match the requested architecture.
struct CheckpointMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Filesystem failures (unwritable output directory, missing file).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

inline bool all_finite(const Seq3& seq) {
  for (const auto& f : seq)
    if (!f.allFinite()) return false;
  return true;
}

inline bool all_finite(const Seq2& seq) {
  for (const auto& f : seq)
    if (!f.allFinite()) return false;
  return true;
}

}  // namespace lghand
