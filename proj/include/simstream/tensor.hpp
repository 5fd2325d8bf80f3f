#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace simstream {

// Dense row-major matrix. Biases and intermediate activations use plain
// std::vector<T>.
template <typename T>
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<T> a;

  Mat() = default;
  Mat(int r, int c)
      : rows(r),
        cols(c),
        a(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), T(0)) {}

  T* row(int r) { return a.data() + static_cast<std::size_t>(r) * cols; }
  const T* row(int r) const {
    return a.data() + static_cast<std::size_t>(r) * cols;
  }
  T& operator()(int r, int c) {
    return a[static_cast<std::size_t>(r) * cols + c];
  }
  T operator()(int r, int c) const {
    return a[static_cast<std::size_t>(r) * cols + c];
  }
  std::size_t size() const { return a.size(); }
  void fill(T v) { std::fill(a.begin(), a.end(), v); }
};

template <typename U, typename T>
Mat<U> cast_mat(const Mat<T>& m) {
  Mat<U> out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.a.size(); ++i)
    out.a[i] = static_cast<U>(m.a[i]);
  return out;
}

// Named view over one tensor. The optimizer, the checkpoint writer and the
// gradient checker all walk parameter sets through these.
template <typename T>
struct TensorRef {
  std::string name;
  std::vector<int> shape;
  T* data = nullptr;
  std::size_t size = 0;
};

template <typename T>
bool all_finite(const T* p, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(static_cast<double>(p[i]))) return false;
  return true;
}

}  // namespace simstream
