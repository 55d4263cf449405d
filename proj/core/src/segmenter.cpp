#include "trajfuse/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trajfuse {

std::vector<double> velocity_profile(const MatrixF& ee_positions) {
  if (ee_positions.rows < 2) {
    throw std::invalid_argument("velocity_profile: need at least 2 positions, got " +
                                std::to_string(ee_positions.rows));
  }
  if (ee_positions.cols != 3) {
    throw std::invalid_argument("velocity_profile: positions must be 3-dimensional");
  }
  std::vector<double> v(static_cast<size_t>(ee_positions.rows) - 1);
  for (int t = 0; t + 1 < ee_positions.rows; ++t) {
    auto a = ee_positions.row(t);
    auto b = ee_positions.row(t + 1);
    v[t] = std::abs(double(b[0]) - double(a[0])) + std::abs(double(b[1]) - double(a[1])) +
           std::abs(double(b[2]) - double(a[2]));
  }
  return v;
}

int below_threshold_count(const std::vector<double>& velocity, double epsilon) {
  int count = 0;
  for (double v : velocity) {
    if (v < epsilon) ++count;
  }
  return count;
}

std::vector<int> segment_boundaries(const std::vector<double>& velocity, double epsilon,
                                    int frames) {
  std::vector<int> cuts;
  const int transitions = static_cast<int>(velocity.size());
  int t = 0;
  while (t < transitions) {
    if (velocity[t] < epsilon) {
      int run_start = t;
      while (t < transitions && velocity[t] < epsilon) ++t;
      int run_end = t - 1;
      // Only pauses with motion on both sides split the trajectory.
      if (run_start > 0 && run_end < transitions - 1) {
        cuts.push_back(run_start + 1);
      }
    } else {
      ++t;
    }
  }
  // Cuts land in (1, frames-1) by construction; keep the guard for safety.
  std::erase_if(cuts, [frames](int c) { return c <= 0 || c >= frames; });
  return cuts;
}

std::vector<int> merge_short_segments(std::vector<int> ends, int frames, int min_length) {
  std::vector<int> bounds;  // segment end indices including the final one
  bounds.reserve(ends.size() + 1);
  for (int e : ends) bounds.push_back(e);
  bounds.push_back(frames);

  auto seg_len = [&](size_t i) { return i == 0 ? bounds[0] : bounds[i] - bounds[i - 1]; };

  while (bounds.size() > 1) {
    // Shortest offending segment, leftmost on ties.
    size_t victim = bounds.size();
    int victim_len = min_length;
    for (size_t i = 0; i < bounds.size(); ++i) {
      if (seg_len(i) < victim_len) {
        victim_len = seg_len(i);
        victim = i;
      }
    }
    if (victim == bounds.size()) break;

    // Merge into the shorter adjacent neighbor, left on ties. Dropping the
    // boundary between victim and neighbor fuses them.
    bool merge_left;
    if (victim == 0) {
      merge_left = false;
    } else if (victim == bounds.size() - 1) {
      merge_left = true;
    } else {
      merge_left = seg_len(victim - 1) <= seg_len(victim + 1);
    }
    size_t cut = merge_left ? victim - 1 : victim;
    bounds.erase(bounds.begin() + static_cast<std::ptrdiff_t>(cut));
  }

  bounds.pop_back();  // drop the trailing frame count
  return bounds;
}

std::vector<Segment> segment_trajectory(const Trajectory& trajectory,
                                        const SegmenterConfig& config) {
  if (config.epsilon <= 0) throw std::invalid_argument("segmenter epsilon must be > 0");
  if (config.min_length < 1) throw std::invalid_argument("segmenter min_length must be >= 1");

  const int n = trajectory.frames();
  std::vector<int> cuts;
  if (n >= 2) {
    std::vector<double> v = velocity_profile(trajectory.ee_positions);
    cuts = segment_boundaries(v, config.epsilon, n);
    cuts = merge_short_segments(std::move(cuts), n, config.min_length);
  }

  std::vector<Segment> segments;
  int start = 0;
  for (int cut : cuts) {
    segments.push_back({trajectory.id, start, cut});
    start = cut;
  }
  segments.push_back({trajectory.id, start, n});
  return segments;
}

std::vector<Segment> segment_dataset(const Dataset& target, const SegmenterConfig& config) {
  std::vector<Segment> all;
  for (const auto& traj : target.trajectories) {
    std::vector<Segment> segs = segment_trajectory(traj, config);
    all.insert(all.end(), segs.begin(), segs.end());
  }
  return all;
}

}  // namespace trajfuse
