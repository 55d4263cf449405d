#include "trajfuse/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace trajfuse {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::span<const float> lookup_row(const Trajectory& traj, const std::string& space, int frame) {
  if (space == kStateSpace) return traj.states.row(frame);
  return traj.embeddings.at(space).row(frame);
}

int lookup_dim(const Dataset& dataset, const std::string& space) {
  if (space == kStateSpace) return dataset.manifest.state_dim;
  const ModalityInfo* mod = dataset.manifest.find_modality(space);
  if (!mod) {
    throw std::invalid_argument("scoring space '" + space + "' is not a modality of the dataset");
  }
  return mod->dim;
}

}  // namespace

ScoringFrameSet collect_scoring_frames(const RetrievedSet& retrieved, const Dataset& prior,
                                       const std::string& scoring_space) {
  long long rows = 0;
  for (const MatchResult& match : retrieved.matches) rows += match.span_end - match.span_start;
  if (rows == 0) throw std::invalid_argument("collect_scoring_frames: retrieved set is empty");

  ScoringFrameSet set;
  set.queries = MatrixF(static_cast<int>(rows), lookup_dim(prior, scoring_space));
  set.actions = MatrixF(static_cast<int>(rows), prior.manifest.action_dim);

  int row = 0;
  for (const MatchResult& match : retrieved.matches) {
    const Trajectory& traj = prior.at(match.prior_trajectory_id);
    for (int f = match.span_start; f < match.span_end; ++f, ++row) {
      auto q = lookup_row(traj, scoring_space, f);
      std::copy(q.begin(), q.end(), set.queries.row(row).begin());
      auto a = traj.actions.row(f);
      std::copy(a.begin(), a.end(), set.actions.row(row).begin());
    }
  }
  return set;
}

MatrixF stack_queries(const Dataset& dataset, const std::string& scoring_space) {
  long long rows = 0;
  for (const auto& traj : dataset.trajectories) rows += traj.frames();
  MatrixF out(static_cast<int>(rows), lookup_dim(dataset, scoring_space));
  int row = 0;
  for (const auto& traj : dataset.trajectories) {
    for (int f = 0; f < traj.frames(); ++f, ++row) {
      auto q = lookup_row(traj, scoring_space, f);
      std::copy(q.begin(), q.end(), out.row(row).begin());
    }
  }
  return out;
}

MatrixF stack_actions(const Dataset& dataset) {
  long long rows = 0;
  for (const auto& traj : dataset.trajectories) rows += traj.frames();
  MatrixF out(static_cast<int>(rows), dataset.manifest.action_dim);
  int row = 0;
  for (const auto& traj : dataset.trajectories) {
    for (int f = 0; f < traj.frames(); ++f, ++row) {
      auto a = traj.actions.row(f);
      std::copy(a.begin(), a.end(), out.row(row).begin());
    }
  }
  return out;
}

std::vector<double> ReferenceScorer::log_likelihood_sums(const MatrixF& queries,
                                                         const MatrixF& actions,
                                                         std::span<const int> schedule) const {
  std::vector<double> sums(schedule.size(), 0.0);
  for (int row = 0; row < queries.rows; ++row) {
    for (size_t s = 0; s < schedule.size(); ++s) {
      sums[s] += log_likelihood(queries.row(row), actions.row(row), schedule[s]);
    }
  }
  return sums;
}

std::vector<int> default_k_schedule(int k) {
  std::vector<int> values;
  values.reserve(10);
  for (int i = 1; i <= 10; ++i) {
    values.push_back(std::max(1, (k * i + 5) / 10));
  }
  return values;
}

std::vector<int> default_checkpoint_schedule(int count, int retain) {
  retain = std::min(retain, count);
  std::vector<int> schedule;
  for (int i = count - retain; i < count; ++i) schedule.push_back(i);
  return schedule;
}

KnnGaussianScorer::KnnGaussianScorer(ScoringFrameSet frames, const KnnGaussianConfig& config)
    : frames_(std::move(frames)),
      k_values_(config.k_schedule.empty() ? default_k_schedule(config.k) : config.k_schedule),
      variance_floor_(config.variance_floor) {
  if (frames_.queries.rows < 1) {
    throw std::invalid_argument("KnnGaussianScorer: cannot fit on an empty frame set");
  }
  if (config.k < 1) throw std::invalid_argument("KnnGaussianScorer: k must be >= 1");
  if (variance_floor_ <= 0) {
    throw std::invalid_argument("KnnGaussianScorer: variance_floor must be > 0");
  }
  for (int k : k_values_) {
    if (k < 1) throw std::invalid_argument("KnnGaussianScorer: every scheduled k must be >= 1");
  }
}

std::vector<std::pair<double, int>> KnnGaussianScorer::sorted_neighbors(
    std::span<const float> query, int upto) const {
  const int pool = frames_.queries.rows;
  std::vector<std::pair<double, int>> dist(static_cast<size_t>(pool));
  for (int i = 0; i < pool; ++i) {
    auto row = frames_.queries.row(i);
    double acc = 0.0;
    for (size_t d = 0; d < row.size(); ++d) {
      double diff = double(query[d]) - double(row[d]);
      acc += diff * diff;
    }
    dist[i] = {acc, i};
  }
  int keep = std::min(upto, pool);
  std::partial_sort(dist.begin(), dist.begin() + keep, dist.end());
  dist.resize(static_cast<size_t>(keep));
  return dist;
}

double KnnGaussianScorer::gaussian_loglik(const std::vector<std::pair<double, int>>& neighbors,
                                          int k, std::span<const float> action) const {
  const int k_eff = std::min<int>(k, static_cast<int>(neighbors.size()));
  const int dims = frames_.actions.cols;
  double ll = 0.0;
  for (int d = 0; d < dims; ++d) {
    double mean = 0.0;
    for (int i = 0; i < k_eff; ++i) mean += frames_.actions.at(neighbors[i].second, d);
    mean /= k_eff;
    double var = 0.0;
    for (int i = 0; i < k_eff; ++i) {
      double diff = frames_.actions.at(neighbors[i].second, d) - mean;
      var += diff * diff;
    }
    var = std::max(var / k_eff, variance_floor_);
    double diff = double(action[d]) - mean;
    ll += -0.5 * std::log(2.0 * std::numbers::pi * var) - diff * diff / (2.0 * var);
  }
  return ll;
}

double KnnGaussianScorer::log_likelihood(std::span<const float> query,
                                         std::span<const float> action, int checkpoint) const {
  int k = k_values_.at(static_cast<size_t>(checkpoint));
  return gaussian_loglik(sorted_neighbors(query, k), k, action);
}

std::vector<double> KnnGaussianScorer::log_likelihood_sums(const MatrixF& queries,
                                                           const MatrixF& actions,
                                                           std::span<const int> schedule) const {
  int k_max = 1;
  for (int cp : schedule) k_max = std::max(k_max, k_values_.at(static_cast<size_t>(cp)));

  std::vector<double> sums(schedule.size(), 0.0);
  for (int row = 0; row < queries.rows; ++row) {
    // One neighbor scan per query; each checkpoint reads a prefix of it.
    auto neighbors = sorted_neighbors(queries.row(row), k_max);
    for (size_t s = 0; s < schedule.size(); ++s) {
      int k = k_values_.at(static_cast<size_t>(schedule[s]));
      sums[s] += gaussian_loglik(neighbors, k, actions.row(row));
    }
  }
  return sums;
}

std::unique_ptr<ReferenceScorer> fit_reference(const RetrievedSet& retrieved, const Dataset& prior,
                                               const KnnGaussianConfig& config, uint64_t seed) {
  (void)seed;  // the kNN scorer has no stochastic state
  if (retrieved.matches.empty()) {
    throw std::invalid_argument("fit_reference: retrieved set '" + retrieved.modality +
                                "' is empty");
  }
  std::string space = config.scoring_space;
  if (space.empty()) {
    space = prior.manifest.find_modality(retrieved.modality) ? retrieved.modality : kStateSpace;
  }
  ScoringFrameSet frames = collect_scoring_frames(retrieved, prior, space);
  return std::make_unique<KnnGaussianScorer>(std::move(frames), config);
}

ModalityScore score_modality(const ReferenceScorer& scorer, const MatrixF& target_queries,
                             const MatrixF& target_actions, const std::string& modality,
                             std::span<const int> schedule) {
  if (target_queries.rows < 1) {
    throw std::invalid_argument("score_modality: target has no frames");
  }
  if (target_queries.rows != target_actions.rows) {
    throw std::invalid_argument("score_modality: query/action row mismatch");
  }
  for (int cp : schedule) {
    if (cp < 0 || cp >= scorer.checkpoint_count()) {
      throw std::invalid_argument("score_modality: checkpoint index out of range");
    }
  }
  ModalityScore score;
  score.modality = modality;
  score.checkpoint_scores = scorer.log_likelihood_sums(target_queries, target_actions, schedule);
  double acc = 0.0;
  for (double v : score.checkpoint_scores) acc += v;
  score.s_f = acc / static_cast<double>(score.checkpoint_scores.size());
  return score;
}

ModalityWeights softmax_weights(const std::map<std::string, double>& scores, double temperature) {
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("softmax temperature must be > 0");
  }
  if (scores.empty()) throw std::invalid_argument("softmax_weights: no scores given");

  double max_score = kNegInf;
  for (const auto& [name, s] : scores) {
    if (std::isnan(s)) throw std::invalid_argument("softmax_weights: NaN score for '" + name + "'");
    max_score = std::max(max_score, s);
  }
  if (max_score == kNegInf) {
    throw DataError("softmax_weights: every modality score is -inf (no usable retrieved data)");
  }

  ModalityWeights out;
  out.temperature = temperature;
  out.raw_scores = scores;
  double total = 0.0;
  for (const auto& [name, s] : scores) {
    double e = s == kNegInf ? 0.0 : std::exp((s - max_score) / temperature);
    out.weights[name] = e;
    total += e;
  }
  for (auto& [name, w] : out.weights) w /= total;
  return out;
}

std::map<std::string, double> load_external_scores(
    const std::filesystem::path& path, std::map<std::string, std::vector<double>>* checkpoint_scores) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open external score file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed JSON in " + path.string() + ": " + e.what());
  }
  if (j.contains("scores")) j = j["scores"];
  if (!j.is_object()) {
    throw DataError("external score file " + path.string() + " must hold an object of scores");
  }

  std::map<std::string, double> scores;
  for (const auto& [name, value] : j.items()) {
    if (value.is_number()) {
      scores[name] = value.get<double>();
      if (checkpoint_scores) (*checkpoint_scores)[name] = {value.get<double>()};
    } else if (value.is_array() && !value.empty()) {
      std::vector<double> cps;
      double acc = 0.0;
      for (const auto& v : value) {
        if (!v.is_number()) {
          throw DataError("external score entry '" + name + "' has a non-numeric checkpoint");
        }
        cps.push_back(v.get<double>());
        acc += cps.back();
      }
      scores[name] = acc / static_cast<double>(cps.size());
      if (checkpoint_scores) (*checkpoint_scores)[name] = std::move(cps);
    } else {
      throw DataError("external score entry '" + name + "' must be a number or non-empty array");
    }
  }
  if (scores.empty()) throw DataError("external score file " + path.string() + " is empty");
  return scores;
}

}  // namespace trajfuse
