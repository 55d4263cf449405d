#include "trajfuse/sampler.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "trajfuse/common.hpp"

namespace trajfuse {

AugmentedSet build_augmented(const RetrievedSet& retrieved, const Dataset& target, int h) {
  if (h < 1) throw std::invalid_argument("build_augmented: window length h must be >= 1");

  AugmentedSet set;
  set.modality = retrieved.modality;
  set.window = h;

  auto add_span = [&](const std::string& id, int start, int end, bool from_target,
                      const std::string& instruction) {
    set.frame_total += end - start;
    for (int s = start; s + h <= end; ++s) {
      set.units.push_back({id, s, from_target, instruction});
    }
  };

  for (const MatchResult& match : retrieved.matches) {
    add_span(match.prior_trajectory_id, match.span_start, match.span_end, false,
             match.instruction);
  }
  for (const Trajectory& traj : target.trajectories) {
    add_span(traj.id, 0, traj.frames(), true, traj.instruction);
  }

  if (set.units.empty()) {
    throw DataError("augmented set '" + retrieved.modality +
                    "' yields no window of length " + std::to_string(h));
  }
  return set;
}

SampleStream::SampleStream(std::map<std::string, AugmentedSet> augmented, ModalityWeights weights,
                           int batch_size, long long num_batches, uint64_t seed)
    : augmented_(std::move(augmented)),
      weights_(std::move(weights)),
      batch_size_(batch_size),
      num_batches_(num_batches),
      seed_(seed),
      rng_(seed) {
  if (batch_size_ < 1) throw ConfigError("sample stream: batch_size must be >= 1");
  if (num_batches_ < 0) throw ConfigError("sample stream: num_batches must be >= 0");

  if (augmented_.size() != weights_.weights.size()) {
    throw ConfigError("sample stream: augmented sets and weights disagree on modality count");
  }
  double mass = 0.0;
  for (const auto& [name, w] : weights_.weights) {
    auto it = augmented_.find(name);
    if (it == augmented_.end()) {
      throw ConfigError("sample stream: weight for modality '" + name +
                        "' has no augmented set");
    }
    if (w < 0.0) throw ConfigError("sample stream: negative weight for modality '" + name + "'");
    if (w > 0.0) {
      if (it->second.units.empty()) {
        throw ConfigError("sample stream: modality '" + name +
                          "' has positive weight but no sampleable window");
      }
      active_.push_back(name);
      mass += w;
      cumulative_.push_back(mass);
    }
  }
  if (active_.empty()) throw ConfigError("sample stream: no modality has positive weight");
  // Guard the scan against rounding shortfall in the final bucket.
  cumulative_.back() = std::max(cumulative_.back(), mass);
}

std::vector<SampleRecord> SampleStream::next_batch() {
  if (done()) throw std::logic_error("sample stream exhausted");
  ++emitted_batches_;

  const double mass = cumulative_.back();
  std::vector<SampleRecord> batch;
  batch.reserve(static_cast<size_t>(batch_size_));
  for (int b = 0; b < batch_size_; ++b) {
    double u = rng_.uniform() * mass;
    size_t pick = 0;
    while (pick + 1 < cumulative_.size() && u >= cumulative_[pick]) ++pick;

    const AugmentedSet& set = augmented_.at(active_[pick]);
    const WindowUnit& unit = set.units[rng_.uniform_index(set.units.size())];
    batch.push_back({set.modality, unit.trajectory_id, unit.start, unit.start + set.window,
                     unit.from_target ? "target" : "retrieved", unit.instruction});
  }
  return batch;
}

void export_manifest(const std::map<std::string, AugmentedSet>& augmented,
                     const ModalityWeights& weights, int batch_size, long long num_batches,
                     uint64_t seed, const std::string& config_hash,
                     const std::filesystem::path& out_path) {
  SampleStream stream(augmented, weights, batch_size, num_batches, seed);

  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write sample manifest " + out_path.string());

  nlohmann::json header;
  header["header"] = true;
  header["config_hash"] = config_hash;
  header["seed"] = seed;
  header["batch_size"] = batch_size;
  header["num_batches"] = num_batches;
  header["temperature"] = weights.temperature;
  header["weights"] = weights.weights;
  out << header.dump() << "\n";

  while (!stream.done()) {
    for (const SampleRecord& rec : stream.next_batch()) {
      nlohmann::json line;
      line["modality"] = rec.modality;
      line["trajectory_id"] = rec.trajectory_id;
      line["span"] = {rec.start, rec.end};
      line["source"] = rec.source;
      line["instruction"] = rec.instruction;
      out << line.dump() << "\n";
    }
  }
  if (!out) throw DataError("write failure on sample manifest " + out_path.string());
}

}  // namespace trajfuse
