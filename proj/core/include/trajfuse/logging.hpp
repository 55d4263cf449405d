#pragma once

#include <chrono>
#include <string>

namespace trajfuse {

// Emits one JSON line per stage boundary to stderr: {"stage":..., "event":
// "start"|"end", "elapsed_ms":...}. Timing stays out of the artifacts so
// reruns remain byte-identical.
class StageTimer {
 public:
  explicit StageTimer(std::string stage);
  ~StageTimer();

  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

  double elapsed_ms() const;

 private:
  std::string stage_;
  std::chrono::steady_clock::time_point start_;
  bool closed_ = false;

  void close();
};

void log_event(const std::string& stage, const std::string& event, double elapsed_ms = -1.0);

}  // namespace trajfuse
