#include "trajfuse/logging.hpp"

#include <iostream>

#include <nlohmann/json.hpp>

namespace trajfuse {

void log_event(const std::string& stage, const std::string& event, double elapsed_ms) {
  nlohmann::json line;
  line["stage"] = stage;
  line["event"] = event;
  if (elapsed_ms >= 0.0) line["elapsed_ms"] = elapsed_ms;
  std::cerr << line.dump() << "\n";
}

StageTimer::StageTimer(std::string stage)
    : stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {
  log_event(stage_, "start");
}

double StageTimer::elapsed_ms() const {
  auto now = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(now - start_).count();
}

void StageTimer::close() {
  if (closed_) return;
  closed_ = true;
  log_event(stage_, "end", elapsed_ms());
}

StageTimer::~StageTimer() { close(); }

}  // namespace trajfuse
