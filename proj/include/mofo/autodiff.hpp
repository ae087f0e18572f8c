#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "mofo/tensor.hpp"

namespace mofo {

// Reverse-mode tape over Mat<T> values. Nodes are appended in forward
// (topological) order; backward() walks them in reverse, so gradients are
// deterministic for a fixed graph.
template <typename T>
class Tape {
 public:
  using Ref = int;

  Ref leaf(Mat<T> v) { return push(std::move(v), nullptr); }

  const Mat<T>& val(Ref r) const { return nodes_[static_cast<std::size_t>(r)].val; }
  const Mat<T>& grad(Ref r) const { return nodes_[static_cast<std::size_t>(r)].grad; }

  Ref matmul(Ref a, Ref b, bool ta = false, bool tb = false) {
    Mat<T> out = detail::matmul(val(a), val(b), ta, tb);
    return push(std::move(out), [a, b, ta, tb](Tape& t, Ref self) {
      const Mat<T>& g = t.grad_(self);
      // d(op(A)op(B)) pushed through each transposition case
      if (!ta && !tb) {
        detail::matmul_acc(t.grad_(a), g, t.nodes_[static_cast<std::size_t>(b)].val, false, true);
        detail::matmul_acc(t.grad_(b), t.nodes_[static_cast<std::size_t>(a)].val, g, true, false);
      } else if (!ta && tb) {
        detail::matmul_acc(t.grad_(a), g, t.nodes_[static_cast<std::size_t>(b)].val, false, false);
        detail::matmul_acc(t.grad_(b), g, t.nodes_[static_cast<std::size_t>(a)].val, true, false);
      } else if (ta && !tb) {
        detail::matmul_acc(t.grad_(a), t.nodes_[static_cast<std::size_t>(b)].val, g, false, true);
        detail::matmul_acc(t.grad_(b), t.nodes_[static_cast<std::size_t>(a)].val, g, false, false);
      } else {
        detail::matmul_acc(t.grad_(a), t.nodes_[static_cast<std::size_t>(b)].val, g, true, true);
        detail::matmul_acc(t.grad_(b), g, t.nodes_[static_cast<std::size_t>(a)].val, true, true);
      }
    });
  }

  Ref add(Ref a, Ref b) {
    if (!val(a).same_shape(val(b))) throw std::invalid_argument("add shape mismatch");
    Mat<T> out = val(a);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += val(b).data[i];
    return push(std::move(out), [a, b](Tape& t, Ref self) {
      const Mat<T>& g = t.grad_(self);
      for (std::size_t i = 0; i < g.size(); ++i) {
        t.grad_(a).data[i] += g.data[i];
        t.grad_(b).data[i] += g.data[i];
      }
    });
  }

  Ref add_rowvec(Ref a, Ref r) {
    const Mat<T>& A = val(a);
    const Mat<T>& R = val(r);
    if (R.rows != 1 || R.cols != A.cols) throw std::invalid_argument("add_rowvec shape mismatch");
    Mat<T> out = A;
    for (int i = 0; i < A.rows; ++i) {
      for (int j = 0; j < A.cols; ++j) out(i, j) += R(0, j);
    }
    return push(std::move(out), [a, r](Tape& t, Ref self) {
      const Mat<T>& g = t.grad_(self);
      Mat<T>& ga = t.grad_(a);
      Mat<T>& gr = t.grad_(r);
      for (int i = 0; i < g.rows; ++i) {
        for (int j = 0; j < g.cols; ++j) {
          ga(i, j) += g(i, j);
          gr(0, j) += g(i, j);
        }
      }
    });
  }

  Ref scale(Ref a, T s) {
    Mat<T> out = val(a);
    for (T& v : out.data) v *= s;
    return push(std::move(out), [a, s](Tape& t, Ref self) {
      const Mat<T>& g = t.grad_(self);
      for (std::size_t i = 0; i < g.size(); ++i) t.grad_(a).data[i] += s * g.data[i];
    });
  }

  Ref gelu(Ref a) {
    const Mat<T>& A = val(a);
    Mat<T> out(A.rows, A.cols);
    for (std::size_t i = 0; i < A.size(); ++i) {
      const T x = A.data[i];
      out.data[i] = static_cast<T>(0.5) * x * (static_cast<T>(1) + std::erf(x / std::numbers::sqrt2_v<T>));
    }
    return push(std::move(out), [a](Tape& t, Ref self) {
      const Mat<T>& g = t.grad_(self);
      const Mat<T>& A = t.nodes_[static_cast<std::size_t>(a)].val;
      Mat<T>& ga = t.grad_(a);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const T x = A.data[i];
        const T cdf = static_cast<T>(0.5) * (static_cast<T>(1) + std::erf(x / std::numbers::sqrt2_v<T>));
        const T pdf = std::exp(static_cast<T>(-0.5) * x * x) /
                      static_cast<T>(std::sqrt(2.0 * std::numbers::pi));
        ga.data[i] += g.data[i] * (cdf + x * pdf);
      }
    });
  }

  // Row-wise layernorm with learned gain/bias (both 1 x cols).
  Ref layernorm(Ref x, Ref gain, Ref bias, T eps = static_cast<T>(1e-5)) {
    const Mat<T>& X = val(x);
    const Mat<T>& G = val(gain);
    const Mat<T>& B = val(bias);
    if (G.rows != 1 || G.cols != X.cols || B.rows != 1 || B.cols != X.cols)
      throw std::invalid_argument("layernorm affine shape mismatch");
    auto xhat = std::make_shared<Mat<T>>(X.rows, X.cols);
    auto inv_std = std::make_shared<std::vector<T>>(static_cast<std::size_t>(X.rows));
    Mat<T> out(X.rows, X.cols);
    for (int i = 0; i < X.rows; ++i) {
      T mu = T{};
      for (int j = 0; j < X.cols; ++j) mu += X(i, j);
      mu /= static_cast<T>(X.cols);
      T var = T{};
      for (int j = 0; j < X.cols; ++j) {
        const T d = X(i, j) - mu;
        var += d * d;
      }
      var /= static_cast<T>(X.cols);
      const T is = static_cast<T>(1) / std::sqrt(var + eps);
      (*inv_std)[static_cast<std::size_t>(i)] = is;
      for (int j = 0; j < X.cols; ++j) {
        const T xh = (X(i, j) - mu) * is;
        (*xhat)(i, j) = xh;
        out(i, j) = xh * G(0, j) + B(0, j);
      }
    }
    return push(std::move(out), [x, gain, bias, xhat, inv_std](Tape& t, Ref self) {
      const Mat<T>& g = t.grad_(self);
      const Mat<T>& G = t.nodes_[static_cast<std::size_t>(gain)].val;
      Mat<T>& gx = t.grad_(x);
      Mat<T>& gg = t.grad_(gain);
      Mat<T>& gb = t.grad_(bias);
      const int n = g.cols;
      for (int i = 0; i < g.rows; ++i) {
        T mean_dxhat = T{}, mean_dxhat_xhat = T{};
        for (int j = 0; j < n; ++j) {
          const T dxh = g(i, j) * G(0, j);
          mean_dxhat += dxh;
          mean_dxhat_xhat += dxh * (*xhat)(i, j);
          gg(0, j) += g(i, j) * (*xhat)(i, j);
          gb(0, j) += g(i, j);
        }
        mean_dxhat /= static_cast<T>(n);
        mean_dxhat_xhat /= static_cast<T>(n);
        const T is = (*inv_std)[static_cast<std::size_t>(i)];
        for (int j = 0; j < n; ++j) {
          const T dxh = g(i, j) * G(0, j);
          gx(i, j) += is * (dxh - mean_dxhat - (*xhat)(i, j) * mean_dxhat_xhat);
        }
      }
    });
  }

  Ref softmax_rows(Ref a) {
    const Mat<T>& A = val(a);
    Mat<T> out(A.rows, A.cols);
    for (int i = 0; i < A.rows; ++i) {
      T mx = A(i, 0);
      for (int j = 1; j < A.cols; ++j) mx = std::max(mx, A(i, j));
      T sum = T{};
      for (int j = 0; j < A.cols; ++j) {
        out(i, j) = std::exp(A(i, j) - mx);
        sum += out(i, j);
      }
      for (int j = 0; j < A.cols; ++j) out(i, j) /= sum;
    }
    return push(std::move(out), [a](Tape& t, Ref self) {
      const Mat<T>& y = t.nodes_[static_cast<std::size_t>(self)].val;
      const Mat<T>& g = t.grad_(self);
      Mat<T>& ga = t.grad_(a);
      for (int i = 0; i < y.rows; ++i) {
        T dot = T{};
        for (int j = 0; j < y.cols; ++j) dot += g(i, j) * y(i, j);
        for (int j = 0; j < y.cols; ++j) ga(i, j) += y(i, j) * (g(i, j) - dot);
      }
    });
  }

  Ref slice_cols(Ref a, int c0, int c1) {
    const Mat<T>& A = val(a);
    if (!(0 <= c0 && c0 < c1 && c1 <= A.cols)) throw std::invalid_argument("bad column slice");
    Mat<T> out(A.rows, c1 - c0);
    for (int i = 0; i < A.rows; ++i) {
      for (int j = c0; j < c1; ++j) out(i, j - c0) = A(i, j);
    }
    return push(std::move(out), [a, c0](Tape& t, Ref self) {
      const Mat<T>& g = t.grad_(self);
      Mat<T>& ga = t.grad_(a);
      for (int i = 0; i < g.rows; ++i) {
        for (int j = 0; j < g.cols; ++j) ga(i, j + c0) += g(i, j);
      }
    });
  }

  Ref concat_cols(const std::vector<Ref>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat of nothing");
    int cols = 0;
    const int rows = val(parts[0]).rows;
    for (Ref p : parts) {
      if (val(p).rows != rows) throw std::invalid_argument("concat row mismatch");
      cols += val(p).cols;
    }
    Mat<T> out(rows, cols);
    int off = 0;
    for (Ref p : parts) {
      const Mat<T>& P = val(p);
      for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < P.cols; ++j) out(i, off + j) = P(i, j);
      }
      off += P.cols;
    }
    return push(std::move(out), [parts](Tape& t, Ref self) {
      const Mat<T>& g = t.grad_(self);
      int off = 0;
      for (Ref p : parts) {
        Mat<T>& gp = t.grad_(p);
        for (int i = 0; i < g.rows; ++i) {
          for (int j = 0; j < gp.cols; ++j) gp(i, j) += g(i, off + j);
        }
        off += gp.cols;
      }
    });
  }

  Ref gather_rows(Ref a, std::vector<int> idx) {
    const Mat<T>& A = val(a);
    Mat<T> out(static_cast<int>(idx.size()), A.cols);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (int j = 0; j < A.cols; ++j) out(static_cast<int>(i), j) = A(idx[i], j);
    }
    auto ix = std::make_shared<std::vector<int>>(std::move(idx));
    return push(std::move(out), [a, ix](Tape& t, Ref self) {
      const Mat<T>& g = t.grad_(self);
      Mat<T>& ga = t.grad_(a);
      for (std::size_t i = 0; i < ix->size(); ++i) {
        for (int j = 0; j < g.cols; ++j) ga((*ix)[i], j) += g(static_cast<int>(i), j);
      }
    });
  }

  // out has n_rows rows; out.row(idx[k]) = a.row(k), remaining rows zero.
  Ref scatter_rows(Ref a, std::vector<int> idx, int n_rows) {
    const Mat<T>& A = val(a);
    if (static_cast<int>(idx.size()) != A.rows) throw std::invalid_argument("scatter index count");
    Mat<T> out(n_rows, A.cols);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      for (int j = 0; j < A.cols; ++j) out(idx[k], j) = A(static_cast<int>(k), j);
    }
    auto ix = std::make_shared<std::vector<int>>(std::move(idx));
    return push(std::move(out), [a, ix](Tape& t, Ref self) {
      const Mat<T>& g = t.grad_(self);
      Mat<T>& ga = t.grad_(a);
      for (std::size_t k = 0; k < ix->size(); ++k) {
        for (int j = 0; j < g.cols; ++j) ga(static_cast<int>(k), j) += g((*ix)[k], j);
      }
    });
  }

  // Broadcast a 1 x c row into every flagged row of an n_rows x c output.
  Ref broadcast_row_where(Ref rowvec, std::vector<std::uint8_t> flags) {
    const Mat<T>& R = val(rowvec);
    if (R.rows != 1) throw std::invalid_argument("broadcast_row_where needs a row vector");
    Mat<T> out(static_cast<int>(flags.size()), R.cols);
    for (std::size_t i = 0; i < flags.size(); ++i) {
      if (!flags[i]) continue;
      for (int j = 0; j < R.cols; ++j) out(static_cast<int>(i), j) = R(0, j);
    }
    auto fl = std::make_shared<std::vector<std::uint8_t>>(std::move(flags));
    return push(std::move(out), [rowvec, fl](Tape& t, Ref self) {
      const Mat<T>& g = t.grad_(self);
      Mat<T>& gr = t.grad_(rowvec);
      for (std::size_t i = 0; i < fl->size(); ++i) {
        if (!(*fl)[i]) continue;
        for (int j = 0; j < g.cols; ++j) gr(0, j) += g(static_cast<int>(i), j);
      }
    });
  }

  Ref mean_rows(Ref a) {
    const Mat<T>& A = val(a);
    if (A.rows == 0) throw std::invalid_argument("mean of zero rows");
    Mat<T> out(1, A.cols);
    for (int i = 0; i < A.rows; ++i) {
      for (int j = 0; j < A.cols; ++j) out(0, j) += A(i, j);
    }
    for (int j = 0; j < A.cols; ++j) out(0, j) /= static_cast<T>(A.rows);
    return push(std::move(out), [a](Tape& t, Ref self) {
      const Mat<T>& g = t.grad_(self);
      Mat<T>& ga = t.grad_(a);
      const T inv = static_cast<T>(1) / static_cast<T>(ga.rows);
      for (int i = 0; i < ga.rows; ++i) {
        for (int j = 0; j < ga.cols; ++j) ga(i, j) += g(0, j) * inv;
      }
    });
  }

  // Scalar mean over all elements of (a - target)^2.
  Ref mse_vs_const(Ref a, Mat<T> target) {
    const Mat<T>& A = val(a);
    if (!A.same_shape(target)) throw std::invalid_argument("mse target shape mismatch");
    T acc = T{};
    for (std::size_t i = 0; i < A.size(); ++i) {
      const T d = A.data[i] - target.data[i];
      acc += d * d;
    }
    Mat<T> out(1, 1);
    out(0, 0) = acc / static_cast<T>(A.size());
    auto tgt = std::make_shared<Mat<T>>(std::move(target));
    return push(std::move(out), [a, tgt](Tape& t, Ref self) {
      const T g = t.grad_(self)(0, 0);
      const Mat<T>& A = t.nodes_[static_cast<std::size_t>(a)].val;
      Mat<T>& ga = t.grad_(a);
      const T s = static_cast<T>(2) * g / static_cast<T>(A.size());
      for (std::size_t i = 0; i < A.size(); ++i) ga.data[i] += s * (A.data[i] - tgt->data[i]);
    });
  }

  // -log softmax(logits)[label] with the probability clamped at 1e-12; the
  // gradient is the standard (probabilities - one_hot).
  Ref cross_entropy_logits(Ref logits, int label) {
    const Mat<T>& L = val(logits);
    if (L.rows != 1) throw std::invalid_argument("cross entropy expects one logit row");
    if (label < 0 || label >= L.cols) throw std::invalid_argument("label out of range");
    auto probs = std::make_shared<Mat<T>>(1, L.cols);
    T mx = L(0, 0);
    for (int j = 1; j < L.cols; ++j) mx = std::max(mx, L(0, j));
    T sum = T{};
    for (int j = 0; j < L.cols; ++j) {
      (*probs)(0, j) = std::exp(L(0, j) - mx);
      sum += (*probs)(0, j);
    }
    for (int j = 0; j < L.cols; ++j) (*probs)(0, j) /= sum;
    Mat<T> out(1, 1);
    out(0, 0) = -std::log(std::max((*probs)(0, label), static_cast<T>(1e-12)));
    return push(std::move(out), [logits, label, probs](Tape& t, Ref self) {
      const T g = t.grad_(self)(0, 0);
      Mat<T>& gl = t.grad_(logits);
      for (int j = 0; j < gl.cols; ++j) {
        gl(0, j) += g * ((*probs)(0, j) - (j == label ? static_cast<T>(1) : static_cast<T>(0)));
      }
    });
  }

  void backward(Ref loss) {
    if (val(loss).rows != 1 || val(loss).cols != 1)
      throw std::invalid_argument("backward needs a scalar loss");
    for (auto& n : nodes_) n.grad.fill(T{});
    nodes_[static_cast<std::size_t>(loss)].grad(0, 0) = static_cast<T>(1);
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      if (nodes_[static_cast<std::size_t>(i)].back) nodes_[static_cast<std::size_t>(i)].back(*this, i);
    }
  }

 private:
  struct Node {
    Mat<T> val;
    Mat<T> grad;
    std::function<void(Tape&, Ref)> back;
  };

  Mat<T>& grad_(Ref r) { return nodes_[static_cast<std::size_t>(r)].grad; }

  Ref push(Mat<T> v, std::function<void(Tape&, Ref)> back) {
    Node n;
    n.grad = Mat<T>(v.rows, v.cols);
    n.val = std::move(v);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<Ref>(nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
};

}  // namespace mofo
