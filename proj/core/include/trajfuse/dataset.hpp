#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trajfuse/common.hpp"
#include "trajfuse/matrix.hpp"

namespace trajfuse {

struct ModalityInfo {
  std::string name;
  int dim = 0;

  bool operator==(const ModalityInfo&) const = default;
};

// Dataset-wide layout descriptor, stored as manifest.json. state_dim is part
// of the manifest because trajectory records are raw float32 blocks and the
// state block cannot be sized without it.
struct DatasetManifest {
  std::string role;  // "target" or "prior"
  int action_dim = 0;
  int state_dim = 0;
  std::optional<int> language_dim;  // set => every record ends with an instruction embedding
  std::vector<ModalityInfo> modalities;
  int trajectory_count = 0;

  const ModalityInfo* find_modality(const std::string& name) const;
};

struct Trajectory {
  std::string id;
  MatrixF ee_positions;  // frames x 3, end-effector XYZ in meters
  MatrixF states;        // frames x state_dim
  MatrixF actions;       // frames x action_dim
  std::map<std::string, MatrixF> embeddings;  // modality -> frames x d_f
  std::string instruction;
  std::vector<float> instruction_embedding;  // empty when the dataset carries no language_dim

  int frames() const { return ee_positions.rows; }
};

// Immutable after load; all pipeline stages are read-only over it.
struct Dataset {
  DatasetManifest manifest;
  std::vector<Trajectory> trajectories;

  int trajectory_count() const { return static_cast<int>(trajectories.size()); }
  const Trajectory* find(const std::string& id) const;
  // Throws DataError when the id is unknown.
  const Trajectory& at(const std::string& id) const;
};

// On-disk layout: <dir>/manifest.json plus one raw float32 little-endian
// record per trajectory. Record block order: ee_positions (frames x 3),
// states (frames x state_dim), actions (frames x action_dim), one block per
// manifest modality (frames x d_f), then the instruction embedding
// (language_dim) when the manifest declares one. No padding between blocks.
Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

// Checks every invariant of an in-memory dataset against its manifest.
// Throws DataError naming the offending trajectory and field.
void validate_dataset(const Dataset& dataset);

// Element-wise mean over equal-length vectors (multi-view embedding merging).
// Throws std::invalid_argument on an empty list or ragged lengths.
std::vector<float> average_views(const std::vector<std::vector<float>>& views);

struct PairingReport {
  std::vector<ModalityInfo> common_modalities;  // in target manifest order
  bool language_available = false;  // both sides declare a language_dim
};

// Retrieval is permitted only on the reported common modalities. Throws
// DataError when action dimensions differ (weighting needs comparable actions).
PairingReport validate_pairing(const Dataset& target, const Dataset& prior);

}  // namespace trajfuse
