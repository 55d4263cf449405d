#pragma once

#include <string>
#include <vector>

#include "trajfuse/dataset.hpp"

namespace trajfuse {

// Half-open frame span within one trajectory; the unit of retrieval.
struct Segment {
  std::string trajectory_id;
  int start = 0;  // inclusive
  int end = 0;    // exclusive

  int length() const { return end - start; }
  bool operator==(const Segment&) const = default;
};

struct SegmenterConfig {
  // Summed per-axis |delta| (meters/frame) below which a transition counts as
  // paused. 5e-3 suits simulation-style data, 2e-3 real-style data.
  double epsilon = 5e-3;
  int min_length = 20;
};

// v[t] = |dx| + |dy| + |dz| between frames t and t+1; length rows-1.
// Throws std::invalid_argument when fewer than 2 positions are given.
std::vector<double> velocity_profile(const MatrixF& ee_positions);

// Number of transitions strictly below epsilon. This raw count is monotone
// non-decreasing in epsilon (run collapsing below is not).
int below_threshold_count(const std::vector<double>& velocity, double epsilon);

// Pre-merge cut indices (segment end positions, exclusive), sorted ascending.
// Each maximal run of below-epsilon velocities that separates two motion runs
// yields exactly one cut, placed at the run's first frame: a run starting at
// transition a cuts at a+1, so the first paused frame closes the preceding
// segment. Runs touching either end of the trajectory yield no cut (the pause
// attaches to its only neighboring motion segment), hence an everywhere-paused
// trajectory stays whole.
std::vector<int> segment_boundaries(const std::vector<double>& velocity, double epsilon,
                                    int frames);

// Merges segments shorter than min_length, shortest segment first (leftmost on
// ties), each absorbed into its shorter adjacent neighbor (left on ties).
// `ends` holds cut indices excluding the final frame count.
std::vector<int> merge_short_segments(std::vector<int> ends, int frames, int min_length);

std::vector<Segment> segment_trajectory(const Trajectory& trajectory, const SegmenterConfig& config);

// Segments every trajectory of the target dataset, concatenated in dataset order.
std::vector<Segment> segment_dataset(const Dataset& target, const SegmenterConfig& config);

}  // namespace trajfuse
