#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace mofo {

// Dense row-major matrix. Row vectors are 1 x n.
template <typename T>
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;

  Mat() = default;
  Mat(int r, int c, T fill = T{})
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {
    if (r < 0 || c < 0) throw std::invalid_argument("negative matrix dimensions");
  }

  T& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  T operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
  T* row(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
  const T* row(int i) const { return data.data() + static_cast<std::size_t>(i) * cols; }
  std::size_t size() const { return data.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  template <typename U>
  Mat<U> cast() const {
    Mat<U> out(rows, cols);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

namespace detail {

// C += op(A) * op(B); op is optional transposition.
template <typename T>
void matmul_acc(Mat<T>& C, const Mat<T>& A, const Mat<T>& B, bool ta, bool tb) {
  const int m = ta ? A.cols : A.rows;
  const int k = ta ? A.rows : A.cols;
  const int kb = tb ? B.cols : B.rows;
  const int n = tb ? B.rows : B.cols;
  if (k != kb || C.rows != m || C.cols != n) throw std::invalid_argument("matmul shape mismatch");

  if (!ta && !tb) {
    for (int i = 0; i < m; ++i) {
      const T* a = A.row(i);
      T* c = C.row(i);
      for (int p = 0; p < k; ++p) {
        const T av = a[p];
        const T* b = B.row(p);
        for (int j = 0; j < n; ++j) c[j] += av * b[j];
      }
    }
  } else if (!ta && tb) {
    for (int i = 0; i < m; ++i) {
      const T* a = A.row(i);
      T* c = C.row(i);
      for (int j = 0; j < n; ++j) {
        const T* b = B.row(j);
        T acc = T{};
        for (int p = 0; p < k; ++p) acc += a[p] * b[p];
        c[j] += acc;
      }
    }
  } else if (ta && !tb) {
    for (int p = 0; p < k; ++p) {
      const T* a = A.row(p);
      const T* b = B.row(p);
      for (int i = 0; i < m; ++i) {
        const T av = a[i];
        T* c = C.row(i);
        for (int j = 0; j < n; ++j) c[j] += av * b[j];
      }
    }
  } else {
    for (int i = 0; i < m; ++i) {
      T* c = C.row(i);
      for (int j = 0; j < n; ++j) {
        T acc = T{};
        for (int p = 0; p < k; ++p) acc += A(p, i) * B(j, p);
        c[j] += acc;
      }
    }
  }
}

template <typename T>
Mat<T> matmul(const Mat<T>& A, const Mat<T>& B, bool ta = false, bool tb = false) {
  Mat<T> C(ta ? A.cols : A.rows, tb ? B.rows : B.cols);
  matmul_acc(C, A, B, ta, tb);
  return C;
}

}  // namespace detail
}  // namespace mofo
