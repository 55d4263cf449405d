#include "trajfuse/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "trajfuse/parallel.hpp"

namespace trajfuse {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

MatrixF normalized_rows(const MatrixF& m) {
  MatrixF out = m;
  for (int i = 0; i < out.rows; ++i) {
    auto r = out.row(i);
    double norm_sq = 0.0;
    for (float x : r) norm_sq += double(x) * double(x);
    if (norm_sq > 0.0) {
      float inv = static_cast<float>(1.0 / std::sqrt(norm_sq));
      for (float& x : r) x *= inv;
    }
  }
  return out;
}

inline double row_distance(std::span<const float> a, std::span<const float> b, Metric metric) {
  double acc = 0.0;
  for (size_t k = 0; k < a.size(); ++k) {
    double d = double(a[k]) - double(b[k]);
    acc += d * d;
  }
  return metric == Metric::kL2 ? std::sqrt(acc) : acc;
}

}  // namespace

Metric metric_from_string(const std::string& name) {
  if (name == "l2") return Metric::kL2;
  if (name == "squared_l2") return Metric::kSquaredL2;
  throw std::invalid_argument("unknown metric '" + name + "' (expected l2 or squared_l2)");
}

std::string to_string(Metric metric) {
  return metric == Metric::kL2 ? "l2" : "squared_l2";
}

CostMatrix cost_matrix_rows(const MatrixF& target, int row_begin, int row_end,
                            const MatrixF& prior, Metric metric, bool normalize) {
  if (target.cols != prior.cols) {
    throw std::invalid_argument("cost_matrix: embedding dims differ (" +
                                std::to_string(target.cols) + " vs " + std::to_string(prior.cols) +
                                ")");
  }
  if (row_begin < 0 || row_end > target.rows || row_begin >= row_end) {
    throw std::invalid_argument("cost_matrix: bad target row range");
  }
  if (prior.rows < 1) throw std::invalid_argument("cost_matrix: empty prior");

  const MatrixF* a = &target;
  const MatrixF* b = &prior;
  MatrixF a_norm, b_norm;
  if (normalize) {
    a_norm = normalized_rows(target);
    b_norm = normalized_rows(prior);
    a = &a_norm;
    b = &b_norm;
  }

  CostMatrix cost(row_end - row_begin, prior.rows);
  for (int i = row_begin; i < row_end; ++i) {
    auto ra = a->row(i);
    double* out = &cost.at(i - row_begin, 0);
    for (int j = 0; j < b->rows; ++j) {
      out[j] = row_distance(ra, b->row(j), metric);
    }
  }
  return cost;
}

CostMatrix cost_matrix(const MatrixF& target, const MatrixF& prior, Metric metric,
                       bool normalize) {
  return cost_matrix_rows(target, 0, target.rows, prior, metric, normalize);
}

DtwResult dtw(const CostMatrix& cost) {
  const int n = cost.rows, m = cost.cols;
  if (n < 1 || m < 1) throw std::invalid_argument("dtw: empty cost matrix");

  std::vector<double> acc(static_cast<size_t>(n) * m);
  auto d = [&](int i, int j) -> double& { return acc[static_cast<size_t>(i) * m + j]; };

  d(0, 0) = cost.at(0, 0);
  for (int j = 1; j < m; ++j) d(0, j) = d(0, j - 1) + cost.at(0, j);
  for (int i = 1; i < n; ++i) {
    d(i, 0) = d(i - 1, 0) + cost.at(i, 0);
    for (int j = 1; j < m; ++j) {
      double best = std::min({d(i - 1, j - 1), d(i - 1, j), d(i, j - 1)});
      d(i, j) = cost.at(i, j) + best;
    }
  }

  // Backtrack, preferring diagonal, then vertical, then horizontal on ties.
  std::vector<std::pair<int, int>> path;
  int i = n - 1, j = m - 1;
  path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      double diag = d(i - 1, j - 1), up = d(i - 1, j), left = d(i, j - 1);
      double best = std::min({diag, up, left});
      if (diag == best) {
        --i;
        --j;
      } else if (up == best) {
        --i;
      } else {
        --j;
      }
    }
    path.emplace_back(i, j);
  }
  std::reverse(path.begin(), path.end());
  return {d(n - 1, m - 1), std::move(path)};
}

SdtwResult sdtw(const CostMatrix& cost) {
  const int n = cost.rows, m = cost.cols;
  if (n < 1 || m < 1) throw std::invalid_argument("sdtw: empty cost matrix");

  // Free start: every column may open a match, so row 0 takes the raw cost
  // (horizontal accumulation along row 0 can never improve a non-negative sum).
  std::vector<double> acc(static_cast<size_t>(n) * m);
  auto d = [&](int i, int j) -> double& { return acc[static_cast<size_t>(i) * m + j]; };

  for (int j = 0; j < m; ++j) d(0, j) = cost.at(0, j);
  for (int i = 1; i < n; ++i) {
    d(i, 0) = d(i - 1, 0) + cost.at(i, 0);
    for (int j = 1; j < m; ++j) {
      double best = std::min({d(i - 1, j - 1), d(i - 1, j), d(i, j - 1)});
      d(i, j) = cost.at(i, j) + best;
    }
  }

  // Free end: smallest value on the last row, first column on ties.
  int end_col = 0;
  double value = d(n - 1, 0);
  for (int j = 1; j < m; ++j) {
    if (d(n - 1, j) < value) {
      value = d(n - 1, j);
      end_col = j;
    }
  }

  std::vector<std::pair<int, int>> path;
  int i = n - 1, j = end_col;
  path.emplace_back(i, j);
  while (i > 0) {
    if (j == 0) {
      --i;
    } else {
      double diag = d(i - 1, j - 1), up = d(i - 1, j), left = d(i, j - 1);
      double best = std::min({diag, up, left});
      if (diag == best) {
        --i;
        --j;
      } else if (up == best) {
        --i;
      } else {
        --j;
      }
    }
    path.emplace_back(i, j);
  }
  std::reverse(path.begin(), path.end());

  SdtwResult result;
  result.value = value;
  result.span_start = path.front().second;
  result.span_end = end_col + 1;
  result.path = std::move(path);
  return result;
}

namespace {

bool match_order(const MatchResult& a, const MatchResult& b) {
  if (a.cost != b.cost) return a.cost < b.cost;
  if (a.prior_trajectory_id != b.prior_trajectory_id) {
    return a.prior_trajectory_id < b.prior_trajectory_id;
  }
  return a.span_start < b.span_start;
}

void check_modality(const Dataset& ds, const std::string& modality, const char* which) {
  if (!ds.manifest.find_modality(modality)) {
    throw std::invalid_argument("modality '" + modality + "' absent from " + which + " dataset");
  }
}

}  // namespace

std::vector<MatchResult> retrieve_topk(const Dataset& target, const Segment& segment,
                                       const Dataset& prior, const std::string& modality,
                                       const RetrievalOptions& options) {
  check_modality(target, modality, "target");
  check_modality(prior, modality, "prior");
  if (options.k < 1) throw std::invalid_argument("retrieve_topk: K must be >= 1");

  const Trajectory& query_traj = target.at(segment.trajectory_id);
  if (segment.start < 0 || segment.end > query_traj.frames() || segment.start >= segment.end) {
    throw std::invalid_argument("retrieve_topk: segment out of bounds for trajectory '" +
                                segment.trajectory_id + "'");
  }
  const MatrixF& query_emb = query_traj.embeddings.at(modality);

  std::vector<MatchResult> all(prior.trajectories.size());
  parallel_for(prior.trajectories.size(), options.threads, [&](size_t p) {
    const Trajectory& cand = prior.trajectories[p];
    CostMatrix cost = cost_matrix_rows(query_emb, segment.start, segment.end,
                                       cand.embeddings.at(modality), options.metric,
                                       options.normalize);
    SdtwResult aligned = sdtw(cost);
    MatchResult& match = all[p];
    match.prior_trajectory_id = cand.id;
    match.span_start = aligned.span_start;
    match.span_end = aligned.span_end;
    match.cost = aligned.value;
    match.modality = modality;
    match.instruction = cand.instruction;
    match.target_trajectory_id = segment.trajectory_id;
    match.target_start = segment.start;
    match.target_end = segment.end;
  });

  std::sort(all.begin(), all.end(), match_order);
  if (static_cast<int>(all.size()) > options.k) {
    all.resize(static_cast<size_t>(options.k));
  }
  return all;
}

RetrievedSet retrieve_modality(const Dataset& target, const std::vector<Segment>& segments,
                               const Dataset& prior, const std::string& modality,
                               const RetrievalOptions& options) {
  RetrievedSet set;
  set.modality = modality;
  for (const Segment& segment : segments) {
    std::vector<MatchResult> top = retrieve_topk(target, segment, prior, modality, options);
    if (static_cast<int>(top.size()) < options.k) set.corpus_exhausted = true;
    for (auto& match : top) {
      set.total_frames += match.span_end - match.span_start;
      set.matches.push_back(std::move(match));
    }
  }
  return set;
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("cosine_similarity: length mismatch");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += double(a[i]) * double(b[i]);
    na += double(a[i]) * double(a[i]);
    nb += double(b[i]) * double(b[i]);
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

RetrievedSet retrieve_language(const Dataset& target, const Dataset& prior,
                               const LanguageOptions& options) {
  if (!(options.threshold > -1.0 && options.threshold <= 1.0)) {
    throw std::invalid_argument("language threshold must lie in (-1, 1]");
  }
  if (options.frame_budget < 1) {
    throw std::invalid_argument("language frame_budget must be >= 1");
  }
  if (!target.manifest.language_dim || !prior.manifest.language_dim) {
    throw std::invalid_argument("language retrieval needs instruction embeddings on both datasets");
  }

  RetrievedSet set;
  set.modality = "language";

  std::vector<MatchResult> selected;
  for (const Trajectory& cand : prior.trajectories) {
    double best = -kInf;
    for (const Trajectory& query : target.trajectories) {
      best = std::max(best, cosine_similarity(cand.instruction_embedding,
                                              query.instruction_embedding));
    }
    if (best > options.threshold) {
      MatchResult match;
      match.prior_trajectory_id = cand.id;
      match.span_start = 0;
      match.span_end = cand.frames();
      match.cost = 1.0 - best;
      match.modality = "language";
      match.instruction = cand.instruction;
      selected.push_back(std::move(match));
    }
  }
  if (selected.empty()) return set;

  std::sort(selected.begin(), selected.end(), match_order);

  // Even split of the frame budget; remainder frames go one each to the
  // lowest-cost demonstrations. Spans shorter than their allotment stay whole.
  const long long count = static_cast<long long>(selected.size());
  const long long base = options.frame_budget / count;
  const long long remainder = options.frame_budget % count;
  for (long long i = 0; i < count; ++i) {
    long long allotted = base + (i < remainder ? 1 : 0);
    MatchResult& match = selected[static_cast<size_t>(i)];
    long long kept = std::min<long long>(allotted, match.span_end - match.span_start);
    if (kept < 1) continue;  // budget smaller than the selection count
    match.span_end = match.span_start + static_cast<int>(kept);
    set.total_frames += kept;
    set.matches.push_back(std::move(match));
  }
  return set;
}

}  // namespace trajfuse
