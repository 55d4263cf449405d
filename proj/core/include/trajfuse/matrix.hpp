#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace trajfuse {

// Dense row-major float32 matrix. Rows are frames, columns are feature dims.
struct MatrixF {
  int rows = 0;
  int cols = 0;
  std::vector<float> data;

  MatrixF() = default;
  MatrixF(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), 0.0f) {}

  std::span<const float> row(int i) const {
    assert(i >= 0 && i < rows);
    return {data.data() + static_cast<size_t>(i) * cols, static_cast<size_t>(cols)};
  }
  std::span<float> row(int i) {
    assert(i >= 0 && i < rows);
    return {data.data() + static_cast<size_t>(i) * cols, static_cast<size_t>(cols)};
  }

  float at(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }
  float& at(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }

  bool empty() const { return rows == 0 || cols == 0; }

  bool operator==(const MatrixF&) const = default;
};

}  // namespace trajfuse
