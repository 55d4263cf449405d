#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "trajfuse/dataset.hpp"
#include "trajfuse/retrieval.hpp"

namespace trajfuse {

// Lookup-space sentinel: raw state features instead of a per-frame embedding.
// This is the only space defined for every retrieved set, including
// trajectory-level modalities such as language.
inline constexpr const char* kStateSpace = "state";

// Flattened (lookup vector, action) pairs gathered from retrieved spans.
struct ScoringFrameSet {
  MatrixF queries;  // rows x lookup dim
  MatrixF actions;  // rows x action_dim
};

ScoringFrameSet collect_scoring_frames(const RetrievedSet& retrieved, const Dataset& prior,
                                       const std::string& scoring_space);

// Lookup vectors / actions for every frame of every trajectory, dataset order.
MatrixF stack_queries(const Dataset& dataset, const std::string& scoring_space);
MatrixF stack_actions(const Dataset& dataset);

// Action model fitted on one retrieved set. Checkpoints expose intermediate
// fit states so scores can be averaged over a schedule.
class ReferenceScorer {
 public:
  virtual ~ReferenceScorer() = default;

  virtual int checkpoint_count() const = 0;

  // Log-density of `action` given the lookup vector, at the given checkpoint.
  virtual double log_likelihood(std::span<const float> query, std::span<const float> action,
                                int checkpoint) const = 0;

  // Sum of log_likelihood over all rows, one value per scheduled checkpoint.
  // The default loops over log_likelihood; implementations may batch.
  virtual std::vector<double> log_likelihood_sums(const MatrixF& queries, const MatrixF& actions,
                                                  std::span<const int> schedule) const;
};

struct KnnGaussianConfig {
  int k = 16;
  // Empty: use the retrieved set's own modality when it is a frame-level
  // modality of the prior dataset, otherwise fall back to kStateSpace.
  std::string scoring_space;
  double variance_floor = 1e-4;
  // Checkpoint analog of an epoch schedule: neighbor counts swept over a
  // list. Empty selects default_k_schedule(k).
  std::vector<int> k_schedule;
};

// Ten neighbor counts ramping up to k: max(1, round(k*i/10)) for i = 1..10.
std::vector<int> default_k_schedule(int k);

// Retain the last `retain` of `count` checkpoints (early ones are noisy).
std::vector<int> default_checkpoint_schedule(int count, int retain = 5);

// Nearest-neighbor conditional Gaussian: the k nearest retrieved lookup
// vectors vote with their actions, scored under a diagonal Gaussian with a
// floored per-dimension variance.
class KnnGaussianScorer : public ReferenceScorer {
 public:
  KnnGaussianScorer(ScoringFrameSet frames, const KnnGaussianConfig& config);

  int checkpoint_count() const override { return static_cast<int>(k_values_.size()); }
  double log_likelihood(std::span<const float> query, std::span<const float> action,
                        int checkpoint) const override;
  std::vector<double> log_likelihood_sums(const MatrixF& queries, const MatrixF& actions,
                                          std::span<const int> schedule) const override;

  const std::vector<int>& k_values() const { return k_values_; }

 private:
  std::vector<std::pair<double, int>> sorted_neighbors(std::span<const float> query,
                                                       int upto) const;
  double gaussian_loglik(const std::vector<std::pair<double, int>>& neighbors, int k,
                         std::span<const float> action) const;

  ScoringFrameSet frames_;
  std::vector<int> k_values_;
  double variance_floor_;
};

// Fits the built-in scorer on the frames inside the retrieved spans. Throws
// std::invalid_argument when the retrieved set is empty (callers map empty
// sets to a -inf score instead of fitting). `seed` is reserved for stochastic
// scorers; the kNN scorer is deterministic.
std::unique_ptr<ReferenceScorer> fit_reference(const RetrievedSet& retrieved, const Dataset& prior,
                                               const KnnGaussianConfig& config, uint64_t seed);

struct ModalityScore {
  std::string modality;
  std::vector<double> checkpoint_scores;  // retained checkpoints only
  double s_f = 0.0;                       // mean of checkpoint_scores
};

ModalityScore score_modality(const ReferenceScorer& scorer, const MatrixF& target_queries,
                             const MatrixF& target_actions, const std::string& modality,
                             std::span<const int> schedule);

struct ModalityWeights {
  std::map<std::string, double> weights;
  double temperature = 2.0;
  std::map<std::string, double> raw_scores;
};

// Numerically stable softmax over finite scores (max subtracted before
// exponentiation). -inf sentinel scores map to weight 0. Throws
// std::invalid_argument when temperature <= 0 and DataError when every score
// is -inf.
ModalityWeights softmax_weights(const std::map<std::string, double>& scores, double temperature);

// Externally computed scores from JSON: an object mapping modality to either
// a scalar score or an array of checkpoint scores (averaged into S_f). An
// optional top-level "scores" wrapper is accepted.
std::map<std::string, double> load_external_scores(
    const std::filesystem::path& path,
    std::map<std::string, std::vector<double>>* checkpoint_scores = nullptr);

}  // namespace trajfuse
