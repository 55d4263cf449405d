#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "trajfuse/dataset.hpp"
#include "trajfuse/retrieval.hpp"
#include "trajfuse/rng.hpp"
#include "trajfuse/weighting.hpp"

namespace trajfuse {

// One sampleable training window of h frames.
struct WindowUnit {
  std::string trajectory_id;
  int start = 0;
  bool from_target = false;
  std::string instruction;
};

struct AugmentedSet {
  std::string modality;
  int window = 10;  // h
  std::vector<WindowUnit> units;
  long long frame_total = 0;  // frames across contributing spans, not windows
};

// Union of the retrieved spans and the full target demonstrations, enumerated
// as stride-1 windows of h frames. Spans shorter than h contribute nothing;
// throws DataError when the whole set yields no window.
AugmentedSet build_augmented(const RetrievedSet& retrieved, const Dataset& target, int h);

struct SampleRecord {
  std::string modality;
  std::string trajectory_id;
  int start = 0;
  int end = 0;
  std::string source;  // "target" or "retrieved"
  std::string instruction;
};

// Two-stage importance sampler: modality ~ Categorical(w), then a window
// uniform over that modality's units. All randomness comes from the explicit
// seed; the record sequence is bit-reproducible.
class SampleStream {
 public:
  // Throws ConfigError when the modality key sets differ or a modality with
  // positive weight has no sampleable window (checked eagerly, not at draw
  // time).
  SampleStream(std::map<std::string, AugmentedSet> augmented, ModalityWeights weights,
               int batch_size, long long num_batches, uint64_t seed);

  bool done() const { return emitted_batches_ >= num_batches_; }
  std::vector<SampleRecord> next_batch();

  int batch_size() const { return batch_size_; }
  long long num_batches() const { return num_batches_; }
  uint64_t seed() const { return seed_; }
  const ModalityWeights& weights() const { return weights_; }

 private:
  std::map<std::string, AugmentedSet> augmented_;
  ModalityWeights weights_;
  std::vector<std::string> active_;      // modalities with positive weight, name order
  std::vector<double> cumulative_;       // cumulative weights over active_
  int batch_size_;
  long long num_batches_;
  long long emitted_batches_ = 0;
  uint64_t seed_;
  Rng rng_;
};

// Materializes the full sampled sequence as JSON-lines: a header recording
// seed, weights, and the config hash, then one SampleRecord per line.
void export_manifest(const std::map<std::string, AugmentedSet>& augmented,
                     const ModalityWeights& weights, int batch_size, long long num_batches,
                     uint64_t seed, const std::string& config_hash,
                     const std::filesystem::path& out_path);

}  // namespace trajfuse
