#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "trajfuse/dataset.hpp"
#include "trajfuse/retrieval.hpp"
#include "trajfuse/sampler.hpp"
#include "trajfuse/weighting.hpp"

namespace trajfuse {

struct SyntheticModality {
  std::string name;
  int dim = 32;
  // Informative modalities place every task on its own cluster center;
  // uninformative ones share a single center, so frame distances carry no
  // task signal.
  bool informative = true;
};

struct WorldConfig {
  int num_tasks = 5;
  int trajectories_per_task = 60;
  int min_frames = 60;
  int max_frames = 120;
  std::vector<SyntheticModality> modalities = {{"visual", 32, true}, {"motion", 16, true}};
  // Distance between task cluster centers in units of the per-dimension
  // intra-cluster noise std (centers sit on orthogonal directions, pairwise
  // distance = separation * sqrt(2)).
  double cluster_separation = 10.0;
  int target_demos = 5;
  int target_task = 0;
  int language_dim = 16;  // 0 disables instruction embeddings
  uint64_t seed = 0;
};

struct SyntheticWorld {
  Dataset target;
  Dataset prior;
  std::map<std::string, int> task_of;  // prior trajectory id -> task label
  int target_task = 0;
};

// Deterministic multi-task world with known cluster structure: per-task smooth
// end-effector curves with pauses injected at phase boundaries, per-frame
// embeddings drawn around task centers, and actions dominated by a per-task
// offset so fitted action models separate tasks.
SyntheticWorld generate_world(const WorldConfig& config);

// Fraction of retrieved frames whose source trajectory belongs to the target
// task (frame-weighted over matched spans).
double retrieval_precision(const RetrievedSet& retrieved, const SyntheticWorld& world);

struct EvalReport {
  std::map<std::string, double> retrieval_precision;  // per modality
  std::map<std::string, double> weights;
  std::string argmax_weight_modality;
  std::string argmax_precision_modality;
  bool weight_precision_concordant = false;
  // |empirical modality frequency - w_f| over the sampled stream.
  std::map<std::string, double> sampler_abs_deviation;
  long long sampled_records = 0;
};

EvalReport evaluate(const SyntheticWorld& world,
                    const std::map<std::string, RetrievedSet>& retrieved,
                    const ModalityWeights& weights,
                    const std::vector<SampleRecord>& sampled);

}  // namespace trajfuse
