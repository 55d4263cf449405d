#include "trajfuse/synthbench.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "trajfuse/rng.hpp"

namespace trajfuse {

namespace {

constexpr int kStateDim = 6;  // ee position + per-frame delta
constexpr int kActionDim = 2;
constexpr double kMeanStep = 0.03;  // target mean |delta| per moving frame, well above epsilon
constexpr int kPauseLength = 4;

// Smooth 3D curve: three harmonics per axis plus a linear drift.
struct TaskCurve {
  double amp[3][3];
  double phase[3][3];
  double drift[3];

  void sample(double u, double out[3]) const {
    for (int axis = 0; axis < 3; ++axis) {
      double v = drift[axis] * u;
      for (int h = 0; h < 3; ++h) {
        v += amp[axis][h] * std::sin(2.0 * std::numbers::pi * (h + 1) * u + phase[axis][h]);
      }
      out[axis] = v;
    }
  }
};

TaskCurve random_curve(Rng& rng) {
  TaskCurve c;
  for (int axis = 0; axis < 3; ++axis) {
    c.drift[axis] = rng.uniform(-1.0, 1.0);
    for (int h = 0; h < 3; ++h) {
      c.amp[axis][h] = rng.uniform(-1.0, 1.0) / (h + 1);
      c.phase[axis][h] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
  }
  return c;
}

// Orthonormal rows via Gram-Schmidt over Gaussian draws.
std::vector<std::vector<double>> orthonormal_directions(Rng& rng, int count, int dim) {
  if (dim < count) {
    throw std::invalid_argument("synthbench: modality dim " + std::to_string(dim) +
                                " must be >= num_tasks " + std::to_string(count));
  }
  std::vector<std::vector<double>> dirs;
  while (static_cast<int>(dirs.size()) < count) {
    std::vector<double> v(static_cast<size_t>(dim));
    for (double& x : v) x = rng.normal();
    for (const auto& u : dirs) {
      double dot = 0.0;
      for (int d = 0; d < dim; ++d) dot += v[d] * u[d];
      for (int d = 0; d < dim; ++d) v[d] -= dot * u[d];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-8) continue;  // degenerate draw, retry
    for (double& x : v) x /= norm;
    dirs.push_back(std::move(v));
  }
  return dirs;
}

struct WorldTables {
  std::vector<TaskCurve> curves;                             // per task
  std::vector<std::array<double, 2>> action_offsets;         // per task
  // modality -> per-task centers (uninformative: one shared center repeated)
  std::map<std::string, std::vector<std::vector<double>>> centers;
  std::vector<std::vector<double>> language_centers;         // per task, unit norm
};

Trajectory make_trajectory(const WorldConfig& config, const WorldTables& tables, int task,
                           const std::string& id, Rng& rng) {
  const int frames = config.min_frames +
                     static_cast<int>(rng.uniform_index(
                         static_cast<uint64_t>(config.max_frames - config.min_frames + 1)));

  // Progress stalls inside the two pause windows at the phase boundaries.
  std::vector<int> progress(static_cast<size_t>(frames));
  int pause1 = frames / 3;
  int pause2 = (2 * frames) / 3;
  int p = 0;
  for (int i = 0; i < frames; ++i) {
    bool paused = (i >= pause1 && i < pause1 + kPauseLength) ||
                  (i >= pause2 && i < pause2 + kPauseLength);
    if (!paused && i > 0) ++p;
    progress[static_cast<size_t>(i)] = p;
  }
  const int max_progress = std::max(1, progress.back());

  // Per-trajectory curve jitter: phase offset and amplitude scale.
  TaskCurve curve = tables.curves[static_cast<size_t>(task)];
  double amp_scale = 1.0 + 0.1 * rng.normal();
  double phase_shift = 0.05 * rng.normal();
  for (int axis = 0; axis < 3; ++axis) {
    for (int h = 0; h < 3; ++h) {
      curve.amp[axis][h] *= amp_scale;
      curve.phase[axis][h] += phase_shift;
    }
  }

  Trajectory traj;
  traj.id = id;
  traj.ee_positions = MatrixF(frames, 3);
  for (int i = 0; i < frames; ++i) {
    double u = static_cast<double>(progress[static_cast<size_t>(i)]) / max_progress;
    double pos[3];
    curve.sample(u, pos);
    for (int axis = 0; axis < 3; ++axis) {
      traj.ee_positions.at(i, axis) = static_cast<float>(pos[axis]);
    }
  }

  // Rescale so the mean moving step lands at kMeanStep; paused frames repeat
  // positions exactly, so their velocity is identically zero.
  double step_sum = 0.0;
  int moving = 0;
  for (int i = 1; i < frames; ++i) {
    double s = 0.0;
    for (int axis = 0; axis < 3; ++axis) {
      s += std::abs(double(traj.ee_positions.at(i, axis)) -
                    double(traj.ee_positions.at(i - 1, axis)));
    }
    if (s > 0.0) {
      step_sum += s;
      ++moving;
    }
  }
  if (moving > 0 && step_sum > 0.0) {
    float scale = static_cast<float>(kMeanStep * moving / step_sum);
    for (float& x : traj.ee_positions.data) x *= scale;
  }

  traj.states = MatrixF(frames, kStateDim);
  for (int i = 0; i < frames; ++i) {
    for (int axis = 0; axis < 3; ++axis) {
      float position = traj.ee_positions.at(i, axis);
      float delta = i > 0 ? position - traj.ee_positions.at(i - 1, axis) : 0.0f;
      traj.states.at(i, axis) = position;
      traj.states.at(i, 3 + axis) = delta;
    }
  }

  // Actions: per-task offset plus the normalized heading of the next motion.
  traj.actions = MatrixF(frames, kActionDim);
  const auto& offset = tables.action_offsets[static_cast<size_t>(task)];
  for (int i = 0; i < frames; ++i) {
    int next = std::min(i + 1, frames - 1);
    double dx = double(traj.ee_positions.at(next, 0)) - double(traj.ee_positions.at(i, 0));
    double dy = double(traj.ee_positions.at(next, 1)) - double(traj.ee_positions.at(i, 1));
    double norm = std::sqrt(dx * dx + dy * dy);
    double hx = norm > 0.0 ? dx / norm : 0.0;
    double hy = norm > 0.0 ? dy / norm : 0.0;
    traj.actions.at(i, 0) = static_cast<float>(offset[0] + 0.25 * hx + 0.02 * rng.normal());
    traj.actions.at(i, 1) = static_cast<float>(offset[1] + 0.25 * hy + 0.02 * rng.normal());
  }

  for (const auto& modality : config.modalities) {
    const auto& center = tables.centers.at(modality.name)[static_cast<size_t>(task)];
    MatrixF emb(frames, modality.dim);
    for (int i = 0; i < frames; ++i) {
      for (int d = 0; d < modality.dim; ++d) {
        emb.at(i, d) = static_cast<float>(center[static_cast<size_t>(d)] + rng.normal());
      }
    }
    traj.embeddings.emplace(modality.name, std::move(emb));
  }

  std::ostringstream instruction;
  instruction << "task " << task << ": trace the phase " << (task % 3) << " pattern";
  traj.instruction = instruction.str();

  if (config.language_dim > 0) {
    const auto& center = tables.language_centers[static_cast<size_t>(task)];
    std::vector<double> v(static_cast<size_t>(config.language_dim));
    double norm = 0.0;
    for (int d = 0; d < config.language_dim; ++d) {
      v[static_cast<size_t>(d)] = center[static_cast<size_t>(d)] + 0.03 * rng.normal();
      norm += v[static_cast<size_t>(d)] * v[static_cast<size_t>(d)];
    }
    norm = std::sqrt(norm);
    traj.instruction_embedding.resize(static_cast<size_t>(config.language_dim));
    for (int d = 0; d < config.language_dim; ++d) {
      traj.instruction_embedding[static_cast<size_t>(d)] =
          static_cast<float>(v[static_cast<size_t>(d)] / norm);
    }
  }
  return traj;
}

DatasetManifest make_manifest(const WorldConfig& config, const std::string& role, int count) {
  DatasetManifest m;
  m.role = role;
  m.action_dim = kActionDim;
  m.state_dim = kStateDim;
  if (config.language_dim > 0) m.language_dim = config.language_dim;
  for (const auto& modality : config.modalities) {
    m.modalities.push_back({modality.name, modality.dim});
  }
  m.trajectory_count = count;
  return m;
}

void validate_config(const WorldConfig& config) {
  if (config.num_tasks < 2) throw std::invalid_argument("synthbench: need at least 2 tasks");
  if (config.trajectories_per_task < 1) {
    throw std::invalid_argument("synthbench: trajectories_per_task must be >= 1");
  }
  if (config.min_frames < 8 || config.max_frames < config.min_frames) {
    throw std::invalid_argument("synthbench: bad frame range");
  }
  if (config.modalities.empty()) throw std::invalid_argument("synthbench: need at least one modality");
  if (config.cluster_separation < 0) {
    throw std::invalid_argument("synthbench: cluster_separation must be >= 0");
  }
  if (config.target_demos < 1) throw std::invalid_argument("synthbench: target_demos must be >= 1");
  if (config.target_task < 0 || config.target_task >= config.num_tasks) {
    throw std::invalid_argument("synthbench: target_task out of range");
  }
}

}  // namespace

SyntheticWorld generate_world(const WorldConfig& config) {
  validate_config(config);
  Rng rng(config.seed);

  WorldTables tables;
  for (int t = 0; t < config.num_tasks; ++t) {
    tables.curves.push_back(random_curve(rng));
    tables.action_offsets.push_back({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
  }
  for (const auto& modality : config.modalities) {
    std::vector<std::vector<double>> centers;
    if (modality.informative) {
      auto dirs = orthonormal_directions(rng, config.num_tasks, modality.dim);
      for (auto& dir : dirs) {
        for (double& x : dir) x *= config.cluster_separation;
        centers.push_back(std::move(dir));
      }
    } else {
      auto dirs = orthonormal_directions(rng, 1, modality.dim);
      for (double& x : dirs[0]) x *= config.cluster_separation;
      centers.assign(static_cast<size_t>(config.num_tasks), dirs[0]);
    }
    tables.centers.emplace(modality.name, std::move(centers));
  }
  if (config.language_dim > 0) {
    tables.language_centers = orthonormal_directions(rng, config.num_tasks, config.language_dim);
  }

  SyntheticWorld world;
  world.target_task = config.target_task;

  world.prior.manifest =
      make_manifest(config, "prior", config.num_tasks * config.trajectories_per_task);
  for (int t = 0; t < config.num_tasks; ++t) {
    for (int i = 0; i < config.trajectories_per_task; ++i) {
      std::ostringstream id;
      id << "prior_t" << t << "_" << i;
      world.prior.trajectories.push_back(make_trajectory(config, tables, t, id.str(), rng));
      world.task_of[id.str()] = t;
    }
  }

  world.target.manifest = make_manifest(config, "target", config.target_demos);
  for (int i = 0; i < config.target_demos; ++i) {
    std::ostringstream id;
    id << "target_" << i;
    world.target.trajectories.push_back(
        make_trajectory(config, tables, config.target_task, id.str(), rng));
  }

  validate_dataset(world.prior);
  validate_dataset(world.target);
  return world;
}

double retrieval_precision(const RetrievedSet& retrieved, const SyntheticWorld& world) {
  long long hit = 0, total = 0;
  for (const MatchResult& match : retrieved.matches) {
    long long frames = match.span_end - match.span_start;
    total += frames;
    auto it = world.task_of.find(match.prior_trajectory_id);
    if (it != world.task_of.end() && it->second == world.target_task) hit += frames;
  }
  return total > 0 ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
}

EvalReport evaluate(const SyntheticWorld& world,
                    const std::map<std::string, RetrievedSet>& retrieved,
                    const ModalityWeights& weights,
                    const std::vector<SampleRecord>& sampled) {
  EvalReport report;
  report.weights = weights.weights;

  for (const auto& [name, set] : retrieved) {
    report.retrieval_precision[name] = retrieval_precision(set, world);
  }
  for (const auto& [name, precision] : report.retrieval_precision) {
    if (report.argmax_precision_modality.empty() ||
        precision > report.retrieval_precision.at(report.argmax_precision_modality)) {
      report.argmax_precision_modality = name;
    }
  }
  for (const auto& [name, w] : weights.weights) {
    if (report.argmax_weight_modality.empty() ||
        w > weights.weights.at(report.argmax_weight_modality)) {
      report.argmax_weight_modality = name;
    }
  }
  report.weight_precision_concordant =
      !report.argmax_weight_modality.empty() &&
      report.argmax_weight_modality == report.argmax_precision_modality;

  report.sampled_records = static_cast<long long>(sampled.size());
  if (!sampled.empty()) {
    std::map<std::string, long long> counts;
    for (const SampleRecord& rec : sampled) ++counts[rec.modality];
    for (const auto& [name, w] : weights.weights) {
      double freq = static_cast<double>(counts[name]) / static_cast<double>(sampled.size());
      report.sampler_abs_deviation[name] = std::abs(freq - w);
    }
  }
  return report;
}

}  // namespace trajfuse
