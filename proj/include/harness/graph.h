// harness/graph.h
//
// Copyright 2026  The harness authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef HARNESS_GRAPH_H_
#define HARNESS_GRAPH_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "harness/rng.h"
#include "harness/tensor.h"

namespace harness {

// Define-by-run reverse-mode tape over dense tensors.
//
// Each op computes its value eagerly at construction and records a closure
// that scatters this node's gradient into its parents. backward() walks the
// tape once in reverse creation order, so gradient accumulation order is
// fixed and results are deterministic. Graphs are single-threaded by
// contract; independent graphs may run concurrently.
template <typename T>
class Graph {
 public:
  struct Value {
    int32_t id = -1;
    bool valid() const { return id >= 0; }
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  Value input(Tensor<T> v, bool requires_grad = false) {
    return push(std::move(v), requires_grad, nullptr);
  }

  const Tensor<T>& val(Value v) const { return nodes_[check(v)].value; }

  // Gradient of the last backward() target w.r.t. this node. Zero tensor if
  // the node did not participate.
  Tensor<T> grad(Value v) const {
    const Node& n = nodes_[check(v)];
    if (n.grad.empty()) return Tensor<T>::zeros(n.value.shape);
    return n.grad;
  }

  size_t size() const { return nodes_.size(); }

  // ---- elementwise ----

  Value add(Value a, Value b) {
    const Tensor<T>&A = val(a), &B = val(b);
    require(A.same_shape(B), "add: shape mismatch");
    Tensor<T> out = A;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += B.data[i];
    return push(std::move(out), needs(a) || needs(b), [a, b](Graph& g, int id) {
      const Tensor<T>& go = g.nodes_[id].grad;
      if (g.needs(a)) g.accum(a, go);
      if (g.needs(b)) g.accum(b, go);
    });
  }

  Value sub(Value a, Value b) {
    const Tensor<T>&A = val(a), &B = val(b);
    require(A.same_shape(B), "sub: shape mismatch");
    Tensor<T> out = A;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= B.data[i];
    return push(std::move(out), needs(a) || needs(b), [a, b](Graph& g, int id) {
      const Tensor<T>& go = g.nodes_[id].grad;
      if (g.needs(a)) g.accum(a, go);
      if (g.needs(b)) {
        Tensor<T>& gb = g.grad_buf(b);
        for (size_t i = 0; i < go.data.size(); ++i) gb.data[i] -= go.data[i];
      }
    });
  }

  Value mul(Value a, Value b) {
    const Tensor<T>&A = val(a), &B = val(b);
    require(A.same_shape(B), "mul: shape mismatch");
    Tensor<T> out = A;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= B.data[i];
    return push(std::move(out), needs(a) || needs(b), [a, b](Graph& g, int id) {
      const Tensor<T>& go = g.nodes_[id].grad;
      if (g.needs(a)) {
        const Tensor<T>& B2 = g.val(b);
        Tensor<T>& ga = g.grad_buf(a);
        for (size_t i = 0; i < go.data.size(); ++i) ga.data[i] += go.data[i] * B2.data[i];
      }
      if (g.needs(b)) {
        const Tensor<T>& A2 = g.val(a);
        Tensor<T>& gb = g.grad_buf(b);
        for (size_t i = 0; i < go.data.size(); ++i) gb.data[i] += go.data[i] * A2.data[i];
      }
    });
  }

  Value scale(Value a, T c) {
    Tensor<T> out = val(a);
    for (T& v : out.data) v *= c;
    return push(std::move(out), needs(a), [a, c](Graph& g, int id) {
      const Tensor<T>& go = g.nodes_[id].grad;
      Tensor<T>& ga = g.grad_buf(a);
      for (size_t i = 0; i < go.data.size(); ++i) ga.data[i] += go.data[i] * c;
    });
  }

  // x: (R x C), b: (C). Broadcast add over rows.
  Value add_rowvec(Value x, Value b) {
    const Tensor<T>&X = val(x), &B = val(b);
    require(X.rank() == 2 && B.rank() == 1 && X.cols() == B.shape[0],
            "add_rowvec: shape mismatch");
    Tensor<T> out = X;
    for (size_t i = 0; i < X.rows(); ++i)
      for (size_t j = 0; j < X.cols(); ++j) out.at(i, j) += B.data[j];
    return push(std::move(out), needs(x) || needs(b), [x, b](Graph& g, int id) {
      const Tensor<T>& go = g.nodes_[id].grad;
      if (g.needs(x)) g.accum(x, go);
      if (g.needs(b)) {
        Tensor<T>& gb = g.grad_buf(b);
        for (size_t i = 0; i < go.rows(); ++i)
          for (size_t j = 0; j < go.cols(); ++j) gb.data[j] += go.at(i, j);
      }
    });
  }

  // ---- linear algebra ----

  Value matmul(Value a, Value b) {
    const Tensor<T>&A = val(a), &B = val(b);
    require(A.rank() == 2 && B.rank() == 2 && A.cols() == B.rows(),
            "matmul: shape mismatch");
    Tensor<T> out({A.rows(), B.cols()});
    mm_nn(A, B, out);
    return push(std::move(out), needs(a) || needs(b), [a, b](Graph& g, int id) {
      const Tensor<T>& go = g.nodes_[id].grad;
      if (g.needs(a)) mm_nt_acc(go, g.val(b), g.grad_buf(a));   // dA += dC * B^T
      if (g.needs(b)) mm_tn_acc(g.val(a), go, g.grad_buf(b));   // dB += A^T * dC
    });
  }

  // C = A * B^T. B is (rowsB x K) with K == A.cols().
  Value matmul_nt(Value a, Value b) {
    const Tensor<T>&A = val(a), &B = val(b);
    require(A.rank() == 2 && B.rank() == 2 && A.cols() == B.cols(),
            "matmul_nt: shape mismatch");
    Tensor<T> out({A.rows(), B.rows()});
    mm_nt(A, B, out);
    return push(std::move(out), needs(a) || needs(b), [a, b](Graph& g, int id) {
      const Tensor<T>& go = g.nodes_[id].grad;
      if (g.needs(a)) mm_nn_acc(go, g.val(b), g.grad_buf(a));   // dA += dC * B
      if (g.needs(b)) mm_tn_acc(go, g.val(a), g.grad_buf(b));   // dB += dC^T * A
    });
  }

  Value transpose(Value a) {
    const Tensor<T>& A = val(a);
    require(A.rank() == 2, "transpose: rank must be 2");
    Tensor<T> out({A.cols(), A.rows()});
    for (size_t i = 0; i < A.rows(); ++i)
      for (size_t j = 0; j < A.cols(); ++j) out.at(j, i) = A.at(i, j);
    return push(std::move(out), needs(a), [a](Graph& g, int id) {
      const Tensor<T>& go = g.nodes_[id].grad;
      Tensor<T>& ga = g.grad_buf(a);
      for (size_t i = 0; i < go.rows(); ++i)
        for (size_t j = 0; j < go.cols(); ++j) ga.at(j, i) += go.at(i, j);
    });
  }

  // x: (Cin x L), w: (Cout x Cin/groups x K), b: (Cout) or invalid Value.
  // Output (Cout x Lout), Lout = (L + 2*pad - K)/stride + 1.
  Value conv1d(Value x, Value w, Value b, int stride, int pad, int groups) {
    const Tensor<T>&X = val(x), &W = val(w);
    require(X.rank() == 2 && W.rank() == 3, "conv1d: bad ranks");
    const size_t cin = X.shape[0], len = X.shape[1];
    const size_t cout = W.shape[0], cpg = W.shape[1], k = W.shape[2];
    require(groups >= 1 && cin % groups == 0 && cout % groups == 0,
            "conv1d: groups must divide channels");
    require(cpg == cin / groups, "conv1d: weight channel mismatch");
    require(stride >= 1 && pad >= 0, "conv1d: bad stride/pad");
    const int64_t lout_s =
        (static_cast<int64_t>(len) + 2 * pad - static_cast<int64_t>(k)) / stride + 1;
    require(lout_s >= 1, "conv1d: input too short");
    const size_t lout = static_cast<size_t>(lout_s);

    Tensor<T> out({cout, lout});
    const size_t cout_pg = cout / groups;
    const T* bias = nullptr;
    if (b.valid()) {
      require(val(b).rank() == 1 && val(b).shape[0] == cout, "conv1d: bad bias");
      bias = val(b).data.data();
    }
    for (size_t oc = 0; oc < cout; ++oc) {
      const size_t grp = oc / cout_pg;
      const size_t ic0 = grp * cpg;
      for (size_t t = 0; t < lout; ++t) {
        double acc = bias ? static_cast<double>(bias[oc]) : 0.0;
        const int64_t in0 = static_cast<int64_t>(t) * stride - pad;
        for (size_t ic = 0; ic < cpg; ++ic) {
          const T* xr = &X.data[(ic0 + ic) * len];
          const T* wr = &W.data[(oc * cpg + ic) * k];
          for (size_t kk = 0; kk < k; ++kk) {
            const int64_t ti = in0 + static_cast<int64_t>(kk);
            if (ti >= 0 && ti < static_cast<int64_t>(len))
              acc += static_cast<double>(xr[ti]) * static_cast<double>(wr[kk]);
          }
        }
        out.at(oc, t) = static_cast<T>(acc);
      }
    }
    bool ng = needs(x) || needs(w) || (b.valid() && needs(b));
    return push(std::move(out), ng,
                [x, w, b, stride, pad, groups](Graph& g, int id) {
      const Tensor<T>& go = g.nodes_[id].grad;
      const Tensor<T>&X = g.val(x), &W = g.val(w);
      const size_t len = X.shape[1];
      const size_t cout = W.shape[0], cpg = W.shape[1], k = W.shape[2];
      const size_t lout = go.shape[1];
      const size_t cout_pg = cout / groups;
      Tensor<T>* gx = g.needs(x) ? &g.grad_buf(x) : nullptr;
      Tensor<T>* gw = g.needs(w) ? &g.grad_buf(w) : nullptr;
      Tensor<T>* gb = (b.valid() && g.needs(b)) ? &g.grad_buf(b) : nullptr;
      for (size_t oc = 0; oc < cout; ++oc) {
        const size_t grp = oc / cout_pg;
        const size_t ic0 = grp * cpg;
        for (size_t t = 0; t < lout; ++t) {
          const T go_v = go.at(oc, t);
          if (go_v == T(0)) continue;
          if (gb) gb->data[oc] += go_v;
          const int64_t in0 = static_cast<int64_t>(t) * stride - pad;
          for (size_t ic = 0; ic < cpg; ++ic) {
            const T* xr = &X.data[(ic0 + ic) * len];
            const T* wr = &W.data[(oc * cpg + ic) * k];
            T* gxr = gx ? &gx->data[(ic0 + ic) * len] : nullptr;
            T* gwr = gw ? &gw->data[(oc * cpg + ic) * k] : nullptr;
            for (size_t kk = 0; kk < k; ++kk) {
              const int64_t ti = in0 + static_cast<int64_t>(kk);
              if (ti < 0 || ti >= static_cast<int64_t>(len)) continue;
              if (gxr) gxr[ti] += go_v * wr[kk];
              if (gwr) gwr[kk] += go_v * xr[ti];
            }
          }
        }
      }
    });
  }

  // ---- normalization ----

  // Row-wise layer norm over the last dim; gamma/beta length = cols.
  Value layer_norm(Value x, Value gamma, Value beta, T eps) {
    const Tensor<T>&X = val(x), &G = val(gamma), &B = val(beta);
    require(X.rank() == 2 && G.shape == std::vector<size_t>{X.cols()} &&
            B.shape == G.shape, "layer_norm: shape mismatch");
    const size_t R = X.rows(), C = X.cols();
    Tensor<T> out({R, C});
    auto xhat = std::make_shared<Tensor<T>>(std::vector<size_t>{R, C});
    auto inv_sigma = std::make_shared<std::vector<T>>(R);
    for (size_t i = 0; i < R; ++i) {
      double mean = 0;
      for (size_t j = 0; j < C; ++j) mean += X.at(i, j);
      mean /= C;
      double var = 0;
      for (size_t j = 0; j < C; ++j) {
        double d = X.at(i, j) - mean;
        var += d * d;
      }
      var /= C;
      const double is = 1.0 / std::sqrt(var + static_cast<double>(eps));
      (*inv_sigma)[i] = static_cast<T>(is);
      for (size_t j = 0; j < C; ++j) {
        const T xh = static_cast<T>((X.at(i, j) - mean) * is);
        xhat->at(i, j) = xh;
        out.at(i, j) = G.data[j] * xh + B.data[j];
      }
    }
    bool ng = needs(x) || needs(gamma) || needs(beta);
    return push(std::move(out), ng,
                [x, gamma, beta, xhat, inv_sigma](Graph& g, int id) {
      const Tensor<T>& go = g.nodes_[id].grad;
      const size_t R = go.rows(), C = go.cols();
      const Tensor<T>& G = g.val(gamma);
      if (g.needs(gamma)) {
        Tensor<T>& gg = g.grad_buf(gamma);
        for (size_t i = 0; i < R; ++i)
          for (size_t j = 0; j < C; ++j) gg.data[j] += go.at(i, j) * xhat->at(i, j);
      }
      if (g.needs(beta)) {
        Tensor<T>& gb = g.grad_buf(beta);
        for (size_t i = 0; i < R; ++i)
          for (size_t j = 0; j < C; ++j) gb.data[j] += go.at(i, j);
      }
      if (g.needs(x)) {
        Tensor<T>& gx = g.grad_buf(x);
        for (size_t i = 0; i < R; ++i) {
          double m1 = 0, m2 = 0;  // mean(dy*g), mean(dy*g*xhat)
          for (size_t j = 0; j < C; ++j) {
            const double dg = static_cast<double>(go.at(i, j)) * G.data[j];
            m1 += dg;
            m2 += dg * xhat->at(i, j);
          }
          m1 /= C;
          m2 /= C;
          const double is = (*inv_sigma)[i];
          for (size_t j = 0; j < C; ++j) {
            const double dg = static_cast<double>(go.at(i, j)) * G.data[j];
            gx.at(i, j) += static_cast<T>((dg - m1 - xhat->at(i, j) * m2) * is);
          }
        }
      }
    });
  }

  // x: (C x L); normalize over each group of C/groups channels jointly with
  // the time axis; per-channel affine.
  Value group_norm(Value x, Value gamma, Value beta, int groups, T eps) {
    const Tensor<T>&X = val(x), &G = val(gamma), &B = val(beta);
    require(X.rank() == 2, "group_norm: rank must be 2");
    const size_t C = X.shape[0], L = X.shape[1];
    require(groups >= 1 && C % groups == 0, "group_norm: groups must divide channels");
    require(G.shape == std::vector<size_t>{C} && B.shape == G.shape,
            "group_norm: affine shape mismatch");
    const size_t cg = C / groups;
    Tensor<T> out({C, L});
    auto xhat = std::make_shared<Tensor<T>>(std::vector<size_t>{C, L});
    auto inv_sigma = std::make_shared<std::vector<T>>(groups);
    for (int gr = 0; gr < groups; ++gr) {
      const size_t c0 = gr * cg, n = cg * L;
      double mean = 0;
      for (size_t c = c0; c < c0 + cg; ++c)
        for (size_t t = 0; t < L; ++t) mean += X.at(c, t);
      mean /= n;
      double var = 0;
      for (size_t c = c0; c < c0 + cg; ++c)
        for (size_t t = 0; t < L; ++t) {
          double d = X.at(c, t) - mean;
          var += d * d;
        }
      var /= n;
      const double is = 1.0 / std::sqrt(var + static_cast<double>(eps));
      (*inv_sigma)[gr] = static_cast<T>(is);
      for (size_t c = c0; c < c0 + cg; ++c)
        for (size_t t = 0; t < L; ++t) {
          const T xh = static_cast<T>((X.at(c, t) - mean) * is);
          xhat->at(c, t) = xh;
          out.at(c, t) = G.data[c] * xh + B.data[c];
        }
    }
    bool ng = needs(x) || needs(gamma) || needs(beta);
    return push(std::move(out), ng,
                [x, gamma, beta, groups, xhat, inv_sigma](Graph& g, int id) {
      const Tensor<T>& go = g.nodes_[id].grad;
      const size_t C = go.shape[0], L = go.shape[1];
      const size_t cg = C / groups;
      const Tensor<T>& G = g.val(gamma);
      if (g.needs(gamma)) {
        Tensor<T>& gg = g.grad_buf(gamma);
        for (size_t c = 0; c < C; ++c)
          for (size_t t = 0; t < L; ++t) gg.data[c] += go.at(c, t) * xhat->at(c, t);
      }
      if (g.needs(beta)) {
        Tensor<T>& gb = g.grad_buf(beta);
        for (size_t c = 0; c < C; ++c)
          for (size_t t = 0; t < L; ++t) gb.data[c] += go.at(c, t);
      }
      if (g.needs(x)) {
        Tensor<T>& gx = g.grad_buf(x);
        for (int gr = 0; gr < groups; ++gr) {
          const size_t c0 = gr * cg, n = cg * L;
          double m1 = 0, m2 = 0;
          for (size_t c = c0; c < c0 + cg; ++c)
            for (size_t t = 0; t < L; ++t) {
              const double dg = static_cast<double>(go.at(c, t)) * G.data[c];
              m1 += dg;
              m2 += dg * xhat->at(c, t);
            }
          m1 /= n;
          m2 /= n;
          const double is = (*inv_sigma)[gr];
          for (size_t c = c0; c < c0 + cg; ++c)
            for (size_t t = 0; t < L; ++t) {
              const double dg = static_cast<double>(go.at(c, t)) * G.data[c];
              gx.at(c, t) += static_cast<T>((dg - m1 - xhat->at(c, t) * m2) * is);
            }
        }
      }
    });
  }

  // ---- activations ----

  Value gelu(Value x) {
    const Tensor<T>& X = val(x);
    Tensor<T> out = X;
    constexpr double kInvSqrt2 = 0.7071067811865475244;
    for (T& v : out.data) {
      const double z = v;
      v = static_cast<T>(0.5 * z * (1.0 + std::erf(z * kInvSqrt2)));
    }
    return push(std::move(out), needs(x), [x](Graph& g, int id) {
      const Tensor<T>& go = g.nodes_[id].grad;
      const Tensor<T>& X2 = g.val(x);
      Tensor<T>& gx = g.grad_buf(x);
      constexpr double kInvSqrt2 = 0.7071067811865475244;
      constexpr double kInvSqrt2Pi = 0.3989422804014326779;
      for (size_t i = 0; i < go.data.size(); ++i) {
        const double z = X2.data[i];
        const double d = 0.5 * (1.0 + std::erf(z * kInvSqrt2)) +
                         z * kInvSqrt2Pi * std::exp(-0.5 * z * z);
        gx.data[i] += static_cast<T>(go.data[i] * d);
      }
    });
  }

  Value relu(Value x) {
    Tensor<T> out = val(x);
    for (T& v : out.data) v = v > T(0) ? v : T(0);
    return push(std::move(out), needs(x), [x](Graph& g, int id) {
      const Tensor<T>& go = g.nodes_[id].grad;
      const Tensor<T>& X2 = g.val(x);
      Tensor<T>& gx = g.grad_buf(x);
      for (size_t i = 0; i < go.data.size(); ++i)
        if (X2.data[i] > T(0)) gx.data[i] += go.data[i];
    });
  }

  // ---- softmax / normalization over rows ----

  Value softmax_rows(Value x) {
    const Tensor<T>& X = val(x);
    require(X.rank() == 2, "softmax_rows: rank must be 2");
    Tensor<T> out({X.rows(), X.cols()});
    for (size_t i = 0; i < X.rows(); ++i) {
      double mx = -1e300;
      for (size_t j = 0; j < X.cols(); ++j) mx = std::max(mx, static_cast<double>(X.at(i, j)));
      double sum = 0;
      for (size_t j = 0; j < X.cols(); ++j) {
        const double e = std::exp(static_cast<double>(X.at(i, j)) - mx);
        out.at(i, j) = static_cast<T>(e);
        sum += e;
      }
      const double inv = 1.0 / sum;
      for (size_t j = 0; j < X.cols(); ++j) out.at(i, j) = static_cast<T>(out.at(i, j) * inv);
    }
    auto probs = std::make_shared<Tensor<T>>(out);
    return push(std::move(out), needs(x), [x, probs](Graph& g, int id) {
      const Tensor<T>& go = g.nodes_[id].grad;
      Tensor<T>& gx = g.grad_buf(x);
      for (size_t i = 0; i < go.rows(); ++i) {
        double dot = 0;
        for (size_t j = 0; j < go.cols(); ++j)
          dot += static_cast<double>(go.at(i, j)) * probs->at(i, j);
        for (size_t j = 0; j < go.cols(); ++j)
          gx.at(i, j) += static_cast<T>(probs->at(i, j) * (static_cast<double>(go.at(i, j)) - dot));
      }
    });
  }

  // y_i = x_i / max(||x_i||, eps), per row.
  Value l2norm_rows(Value x, T eps) {
    const Tensor<T>& X = val(x);
    require(X.rank() == 2, "l2norm_rows: rank must be 2");
    const size_t R = X.rows(), C = X.cols();
    Tensor<T> out({R, C});
    auto norms = std::make_shared<std::vector<T>>(R);
    for (size_t i = 0; i < R; ++i) {
      double ss = 0;
      for (size_t j = 0; j < C; ++j) ss += static_cast<double>(X.at(i, j)) * X.at(i, j);
      double n = std::sqrt(ss);
      const bool clamped = n < static_cast<double>(eps);
      if (clamped) n = eps;
      (*norms)[i] = clamped ? T(0) : static_cast<T>(n);  // 0 marks the clamped (linear) branch
      const double inv = 1.0 / n;
      for (size_t j = 0; j < C; ++j) out.at(i, j) = static_cast<T>(X.at(i, j) * inv);
    }
    return push(std::move(out), needs(x), [x, norms, eps](Graph& g, int id) {
      const Tensor<T>& go = g.nodes_[id].grad;
      const Tensor<T>& X2 = g.val(x);
      Tensor<T>& gx = g.grad_buf(x);
      for (size_t i = 0; i < go.rows(); ++i) {
        const T n = (*norms)[i];
        if (n == T(0)) {  // clamped: y = x/eps is linear
          for (size_t j = 0; j < go.cols(); ++j)
            gx.at(i, j) += static_cast<T>(go.at(i, j) / eps);
          continue;
        }
        double dot = 0;
        for (size_t j = 0; j < go.cols(); ++j)
          dot += static_cast<double>(go.at(i, j)) * X2.at(i, j);
        const double inv = 1.0 / static_cast<double>(n);
        const double inv3 = inv * inv * inv;
        for (size_t j = 0; j < go.cols(); ++j)
          gx.at(i, j) += static_cast<T>(go.at(i, j) * inv - X2.at(i, j) * dot * inv3);
      }
    });
  }

  // ---- structural ----

  // Copy of x with rows in idx replaced by the (broadcast) vector row.
  Value replace_rows(Value x, Value row, std::vector<int32_t> idx) {
    const Tensor<T>&X = val(x), &Rv = val(row);
    require(X.rank() == 2 && Rv.rank() == 1 && Rv.shape[0] == X.cols(),
            "replace_rows: shape mismatch");
    for (int32_t t : idx)
      require(t >= 0 && static_cast<size_t>(t) < X.rows(), "replace_rows: index out of range");
    Tensor<T> out = X;
    for (int32_t t : idx)
      for (size_t j = 0; j < X.cols(); ++j) out.at(t, j) = Rv.data[j];
    auto is_replaced = std::make_shared<std::vector<uint8_t>>(X.rows(), 0);
    for (int32_t t : idx) (*is_replaced)[t] = 1;
    return push(std::move(out), needs(x) || needs(row),
                [x, row, is_replaced](Graph& g, int id) {
      const Tensor<T>& go = g.nodes_[id].grad;
      Tensor<T>* gx = g.needs(x) ? &g.grad_buf(x) : nullptr;
      Tensor<T>* gr = g.needs(row) ? &g.grad_buf(row) : nullptr;
      for (size_t i = 0; i < go.rows(); ++i) {
        if ((*is_replaced)[i]) {
          if (gr)
            for (size_t j = 0; j < go.cols(); ++j) gr->data[j] += go.at(i, j);
        } else if (gx) {
          for (size_t j = 0; j < go.cols(); ++j) gx->at(i, j) += go.at(i, j);
        }
      }
    });
  }

  Value slice_cols(Value x, size_t c0, size_t n) {
    const Tensor<T>& X = val(x);
    require(X.rank() == 2 && c0 + n <= X.cols(), "slice_cols: out of range");
    Tensor<T> out({X.rows(), n});
    for (size_t i = 0; i < X.rows(); ++i)
      for (size_t j = 0; j < n; ++j) out.at(i, j) = X.at(i, c0 + j);
    return push(std::move(out), needs(x), [x, c0](Graph& g, int id) {
      const Tensor<T>& go = g.nodes_[id].grad;
      Tensor<T>& gx = g.grad_buf(x);
      for (size_t i = 0; i < go.rows(); ++i)
        for (size_t j = 0; j < go.cols(); ++j) gx.at(i, c0 + j) += go.at(i, j);
    });
  }

  Value concat_cols(const std::vector<Value>& xs) {
    require(!xs.empty(), "concat_cols: empty list");
    const size_t R = val(xs[0]).rows();
    size_t total = 0;
    bool ng = false;
    for (Value v : xs) {
      require(val(v).rank() == 2 && val(v).rows() == R, "concat_cols: row mismatch");
      total += val(v).cols();
      ng = ng || needs(v);
    }
    Tensor<T> out({R, total});
    size_t off = 0;
    for (Value v : xs) {
      const Tensor<T>& X = val(v);
      for (size_t i = 0; i < R; ++i)
        for (size_t j = 0; j < X.cols(); ++j) out.at(i, off + j) = X.at(i, j);
      off += X.cols();
    }
    std::vector<Value> parents = xs;
    return push(std::move(out), ng, [parents](Graph& g, int id) {
      const Tensor<T>& go = g.nodes_[id].grad;
      size_t off = 0;
      for (Value v : parents) {
        const size_t c = g.val(v).cols();
        if (g.needs(v)) {
          Tensor<T>& gv = g.grad_buf(v);
          for (size_t i = 0; i < go.rows(); ++i)
            for (size_t j = 0; j < c; ++j) gv.at(i, j) += go.at(i, off + j);
        }
        off += c;
      }
    });
  }

  Value sum(Value x) {
    const Tensor<T>& X = val(x);
    double s = 0;
    for (T v : X.data) s += v;
    return push(Tensor<T>::scalar(static_cast<T>(s)), needs(x), [x](Graph& g, int id) {
      const T go = g.nodes_[id].grad.data[0];
      Tensor<T>& gx = g.grad_buf(x);
      for (T& v : gx.data) v += go;
    });
  }

  // Weighted cross-entropy over masked/unmasked frame sets.
  // loss = w_m * mean_{t in mask} CE_t + w_u * mean_{t not in mask} CE_t.
  // An empty region contributes 0. mask must be sorted, unique, in [0, T).
  Value weighted_ce(Value logits, const std::vector<int32_t>& labels,
                    const std::vector<int32_t>& mask, double w_masked,
                    double w_unmasked) {
    const Tensor<T>& L = val(logits);
    require(L.rank() == 2, "weighted_ce: logits must be 2-D");
    const size_t Tn = L.rows(), K = L.cols();
    require(Tn >= 1, "weighted_ce: empty sequence");
    require(labels.size() == Tn, "weighted_ce: label length mismatch");
    for (int32_t l : labels)
      require(l >= 0 && static_cast<size_t>(l) < K, "weighted_ce: label out of range");
    auto in_mask = std::make_shared<std::vector<uint8_t>>(Tn, 0);
    for (int32_t t : mask) {
      require(t >= 0 && static_cast<size_t>(t) < Tn, "weighted_ce: mask index out of range");
      (*in_mask)[t] = 1;
    }
    size_t n_masked = 0;
    for (uint8_t m : *in_mask) n_masked += m;
    const size_t n_unmasked = Tn - n_masked;

    auto probs = std::make_shared<Tensor<T>>(std::vector<size_t>{Tn, K});
    double loss_m = 0, loss_u = 0;
    for (size_t t = 0; t < Tn; ++t) {
      double mx = -1e300;
      for (size_t k = 0; k < K; ++k) mx = std::max(mx, static_cast<double>(L.at(t, k)));
      double sum = 0;
      for (size_t k = 0; k < K; ++k) sum += std::exp(static_cast<double>(L.at(t, k)) - mx);
      const double lse = mx + std::log(sum);
      for (size_t k = 0; k < K; ++k)
        probs->at(t, k) = static_cast<T>(std::exp(static_cast<double>(L.at(t, k)) - lse));
      const double ce = lse - static_cast<double>(L.at(t, labels[t]));
      if ((*in_mask)[t]) loss_m += ce; else loss_u += ce;
    }
    double loss = 0;
    if (n_masked > 0) loss += w_masked * loss_m / static_cast<double>(n_masked);
    if (n_unmasked > 0) loss += w_unmasked * loss_u / static_cast<double>(n_unmasked);

    auto labels_copy = std::make_shared<std::vector<int32_t>>(labels);
    return push(Tensor<T>::scalar(static_cast<T>(loss)), needs(logits),
                [logits, probs, labels_copy, in_mask, w_masked, w_unmasked,
                 n_masked, n_unmasked](Graph& g, int id) {
      const double go = g.nodes_[id].grad.data[0];
      Tensor<T>& gl = g.grad_buf(logits);
      const size_t Tn = gl.rows(), K = gl.cols();
      for (size_t t = 0; t < Tn; ++t) {
        const double coef =
            (*in_mask)[t]
                ? (n_masked ? go * w_masked / static_cast<double>(n_masked) : 0.0)
                : (n_unmasked ? go * w_unmasked / static_cast<double>(n_unmasked) : 0.0);
        if (coef == 0.0) continue;
        for (size_t k = 0; k < K; ++k) {
          double d = probs->at(t, k);
          if (static_cast<int32_t>(k) == (*labels_copy)[t]) d -= 1.0;
          gl.at(t, k) += static_cast<T>(coef * d);
        }
      }
    });
  }

  // Seeds the output gradient at `loss` (which must be scalar) and walks the
  // tape backwards once.
  void backward(Value loss, T seed_grad = T(1)) {
    Node& top = nodes_[check(loss)];
    require(top.value.numel() == 1, "backward: loss must be scalar");
    if (!top.requires_grad) return;
    grad_buf(loss).data[0] += seed_grad;
    for (int32_t id = loss.id; id >= 0; --id) {
      Node& n = nodes_[id];
      if (n.back && n.requires_grad && !n.grad.empty()) n.back(*this, id);
    }
  }

  bool needs(Value v) const { return nodes_[check(v)].requires_grad; }

  Tensor<T>& grad_buf(Value v) {
    Node& n = nodes_[check(v)];
    if (n.grad.empty()) n.grad = Tensor<T>::zeros(n.value.shape);
    return n.grad;
  }

 private:
  using BackFn = std::function<void(Graph&, int)>;

  struct Node {
    Tensor<T> value;
    Tensor<T> grad;  // empty until touched
    bool requires_grad = false;
    BackFn back;
  };

  std::vector<Node> nodes_;

  int32_t check(Value v) const {
    if (!v.valid() || static_cast<size_t>(v.id) >= nodes_.size())
      throw std::logic_error("graph: invalid value handle");
    return v.id;
  }

  Value push(Tensor<T> value, bool requires_grad, BackFn back) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.back = requires_grad ? std::move(back) : nullptr;
    nodes_.push_back(std::move(n));
    return Value{static_cast<int32_t>(nodes_.size() - 1)};
  }

  void accum(Value v, const Tensor<T>& g) {
    Tensor<T>& dst = grad_buf(v);
    for (size_t i = 0; i < g.data.size(); ++i) dst.data[i] += g.data[i];
  }

  static void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
  }

  // C = A*B
  static void mm_nn(const Tensor<T>& A, const Tensor<T>& B, Tensor<T>& C) {
    const size_t M = A.rows(), K = A.cols(), N = B.cols();
    for (size_t i = 0; i < M; ++i) {
      T* cr = &C.data[i * N];
      for (size_t k = 0; k < K; ++k) {
        const T a = A.data[i * K + k];
        if (a == T(0)) continue;
        const T* br = &B.data[k * N];
        for (size_t j = 0; j < N; ++j) cr[j] += a * br[j];
      }
    }
  }
  // C += A*B
  static void mm_nn_acc(const Tensor<T>& A, const Tensor<T>& B, Tensor<T>& C) {
    mm_nn(A, B, C);
  }
  // C = A*B^T (B: N x K)
  static void mm_nt(const Tensor<T>& A, const Tensor<T>& B, Tensor<T>& C) {
    const size_t M = A.rows(), K = A.cols(), N = B.rows();
    for (size_t i = 0; i < M; ++i) {
      const T* ar = &A.data[i * K];
      T* cr = &C.data[i * N];
      for (size_t j = 0; j < N; ++j) {
        const T* br = &B.data[j * K];
        double acc = 0;
        for (size_t k = 0; k < K; ++k) acc += static_cast<double>(ar[k]) * br[k];
        cr[j] = static_cast<T>(cr[j] + acc);
      }
    }
  }
  static void mm_nt_acc(const Tensor<T>& A, const Tensor<T>& B, Tensor<T>& C) {
    mm_nt(A, B, C);
  }
  // C += A^T*B (A: K x M, B: K x N -> C: M x N)
  static void mm_tn_acc(const Tensor<T>& A, const Tensor<T>& B, Tensor<T>& C) {
    const size_t K = A.rows(), M = A.cols(), N = B.cols();
    for (size_t k = 0; k < K; ++k) {
      const T* ar = &A.data[k * M];
      const T* br = &B.data[k * N];
      for (size_t i = 0; i < M; ++i) {
        const T a = ar[i];
        if (a == T(0)) continue;
        T* cr = &C.data[i * N];
        for (size_t j = 0; j < N; ++j) cr[j] += a * br[j];
      }
    }
  }
};

using Graph32 = Graph<float>;
using Graph64 = Graph<double>;

// Dropout mask: entries are 0 with probability p, else 1/(1-p). Multiplying
// by this tensor is the dropout op; a frozen mask keeps the graph
// differentiable for verification.
template <typename T>
Tensor<T> dropout_mask(const std::vector<size_t>& shape, double p, Rng& rng) {
  Tensor<T> m(shape);
  if (p <= 0.0) {
    std::fill(m.data.begin(), m.data.end(), T(1));
    return m;
  }
  const T keep = static_cast<T>(1.0 / (1.0 - p));
  for (auto& v : m.data) v = rng.uniform() < p ? T(0) : keep;
  return m;
}

}  // namespace harness

#endif  // HARNESS_GRAPH_H_
