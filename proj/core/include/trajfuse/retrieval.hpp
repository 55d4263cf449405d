#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trajfuse/dataset.hpp"
#include "trajfuse/segmenter.hpp"

namespace trajfuse {

enum class Metric { kL2, kSquaredL2 };

Metric metric_from_string(const std::string& name);  // "l2" | "squared_l2"
std::string to_string(Metric metric);

struct CostMatrix {
  int rows = 0;  // target segment length
  int cols = 0;  // prior trajectory length
  std::vector<double> values;

  CostMatrix() = default;
  CostMatrix(int r, int c) : rows(r), cols(c), values(static_cast<size_t>(r) * c, 0.0) {}

  double at(int i, int j) const { return values[static_cast<size_t>(i) * cols + j]; }
  double& at(int i, int j) { return values[static_cast<size_t>(i) * cols + j]; }
};

// Pairwise frame distances between embedding rows. Throws std::invalid_argument
// on dimension mismatch or empty inputs. With normalize set, rows are L2-unit
// normalized before the distance (zero rows are left as-is).
CostMatrix cost_matrix(const MatrixF& target, const MatrixF& prior, Metric metric,
                       bool normalize = false);

// As above but restricted to target rows [row_begin, row_end).
CostMatrix cost_matrix_rows(const MatrixF& target, int row_begin, int row_end,
                            const MatrixF& prior, Metric metric, bool normalize = false);

struct DtwResult {
  double value = 0.0;
  std::vector<std::pair<int, int>> path;  // (row, col) from (0,0) to (rows-1, cols-1)
};

// Full-sequence dynamic time warping with steps (+1,0), (0,+1), (+1,+1).
DtwResult dtw(const CostMatrix& cost);

struct SdtwResult {
  double value = 0.0;
  int span_start = 0;  // inclusive column
  int span_end = 0;    // exclusive column
  std::vector<std::pair<int, int>> path;
};

// Subsequence DTW: the whole target (rows) against the best contiguous column
// span, i.e. min over spans [s,e) of dtw on that column slice. Free start and
// free end on the column axis; span ties resolve to the smallest end column,
// then the smallest start via the deterministic backtrack.
SdtwResult sdtw(const CostMatrix& cost);

struct MatchResult {
  std::string prior_trajectory_id;
  int span_start = 0;
  int span_end = 0;
  double cost = 0.0;
  std::string modality;
  std::string instruction;  // inherited from the source prior trajectory
  // Query provenance.
  std::string target_trajectory_id;
  int target_start = 0;
  int target_end = 0;
};

struct RetrievedSet {
  std::string modality;
  // Grouped by query segment in query order; cost-ascending within each group.
  std::vector<MatchResult> matches;
  long long total_frames = 0;
  bool corpus_exhausted = false;  // some query got fewer than K matches
};

struct RetrievalOptions {
  Metric metric = Metric::kL2;
  int k = 100;
  bool normalize = false;
  int threads = 1;  // 0 = all cores
};

// Runs sdtw of the segment against every prior trajectory (one best span per
// trajectory) and keeps the K lowest-cost matches, ascending, ties broken by
// (trajectory id, span start). Returns all matches when K exceeds the corpus.
std::vector<MatchResult> retrieve_topk(const Dataset& target, const Segment& segment,
                                       const Dataset& prior, const std::string& modality,
                                       const RetrievalOptions& options);

// Top-K retrieval for every query segment, pooled into one RetrievedSet.
RetrievedSet retrieve_modality(const Dataset& target, const std::vector<Segment>& segments,
                               const Dataset& prior, const std::string& modality,
                               const RetrievalOptions& options);

double cosine_similarity(std::span<const float> a, std::span<const float> b);

struct LanguageOptions {
  double threshold = 0.90;      // cosine similarity cutoff, in (-1, 1]
  long long frame_budget = 0;   // must be >= 1
};

// Whole-demonstration retrieval by instruction similarity: selects prior
// trajectories whose instruction cosine similarity against any target
// instruction exceeds the threshold (cost = 1 - best similarity), then splits
// the frame budget evenly, remainder frames going to the lowest-cost picks.
// An empty selection is returned as an empty set; downstream weighting maps
// it to weight zero.
RetrievedSet retrieve_language(const Dataset& target, const Dataset& prior,
                               const LanguageOptions& options);

}  // namespace trajfuse
