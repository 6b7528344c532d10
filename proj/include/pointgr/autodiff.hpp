#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pointgr/knn.hpp"
#include "pointgr/rng.hpp"
#include "pointgr/tensor.hpp"

namespace pointgr {

/// Handle into a Graph. Plain index, cheap to copy; only meaningful together
/// with the graph that produced it.
struct Var {
    std::size_t id = static_cast<std::size_t>(-1);
    bool valid() const { return id != static_cast<std::size_t>(-1); }
};

/// Reverse-mode tape. Nodes are appended in creation order, which is already
/// a topological order, so backward() is a single reverse sweep. Gradients
/// are allocated lazily: a node without a gradient buffer was never reached.
///
/// mark()/rewind() let long-lived nodes (parameters) survive while the
/// per-step activation tail is dropped between training iterations.
template <typename T>
class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var leaf(Tensor<T> value, bool requires_grad = false) {
        return push(std::move(value), requires_grad, nullptr, "leaf");
    }

    const Tensor<T>& value(Var v) const { return node(v).value; }
    Tensor<T>& value_mut(Var v) { return node(v).value; }
    bool requires_grad(Var v) const { return node(v).requires_grad; }
    bool has_grad(Var v) const { return !node(v).grad.empty(); }

    const Tensor<T>& grad(Var v) const {
        const NodeRec& n = node(v);
        if (n.grad.empty()) throw ValidationError("grad: node was not reached by backward");
        return n.grad;
    }

    std::size_t size() const { return nodes_.size(); }
    std::size_t mark() const { return nodes_.size(); }

    /// Drop every node created at or after `m`. Handles issued before the
    /// mark stay valid.
    void rewind(std::size_t m) {
        if (m > nodes_.size()) throw ValidationError("rewind: mark beyond graph end");
        nodes_.resize(m);
    }

    void zero_grad() {
        for (NodeRec& n : nodes_) n.grad.release();
    }

    // ---- ops ----

    Var add(Var a, Var b) {
        const Tensor<T>&va = value(a), &vb = value(b);
        if (va.shape() != vb.shape()) {
            throw ShapeError("add: shape mismatch " + shape_str(va.shape()) + " vs " +
                             shape_str(vb.shape()));
        }
        Tensor<T> out(va.shape());
        const T* pa = va.data();
        const T* pb = vb.data();
        T* po = out.data();
        for (std::size_t i = 0; i < out.numel(); ++i) po[i] = pa[i] + pb[i];
        return push(std::move(out), requires_grad(a) || requires_grad(b),
                    [this, a, b](std::size_t self) {
                        const Tensor<T>& gy = nodes_[self].grad;
                        accumulate(a, gy.data(), gy.numel());
                        accumulate(b, gy.data(), gy.numel());
                    },
                    "add");
    }

    Var relu(Var x) {
        const Tensor<T>& vx = value(x);
        Tensor<T> out(vx.shape());
        const T* px = vx.data();
        T* po = out.data();
        for (std::size_t i = 0; i < out.numel(); ++i) po[i] = px[i] > T(0) ? px[i] : T(0);
        return push(std::move(out), requires_grad(x),
                    [this, x](std::size_t self) {
                        if (!requires_grad(x)) return;
                        const Tensor<T>& gy = nodes_[self].grad;
                        const T* px = value(x).data();
                        Tensor<T>& gx = ensure_grad(x);
                        T* pg = gx.data();
                        const T* pu = gy.data();
                        for (std::size_t i = 0; i < gy.numel(); ++i) {
                            if (px[i] > T(0)) pg[i] += pu[i];
                        }
                    },
                    "relu");
    }

    Var leaky_relu(Var x, T slope) {
        const Tensor<T>& vx = value(x);
        Tensor<T> out(vx.shape());
        const T* px = vx.data();
        T* po = out.data();
        for (std::size_t i = 0; i < out.numel(); ++i) {
            po[i] = px[i] > T(0) ? px[i] : slope * px[i];
        }
        return push(std::move(out), requires_grad(x),
                    [this, x, slope](std::size_t self) {
                        if (!requires_grad(x)) return;
                        const Tensor<T>& gy = nodes_[self].grad;
                        const T* px = value(x).data();
                        Tensor<T>& gx = ensure_grad(x);
                        T* pg = gx.data();
                        const T* pu = gy.data();
                        for (std::size_t i = 0; i < gy.numel(); ++i) {
                            pg[i] += px[i] > T(0) ? pu[i] : slope * pu[i];
                        }
                    },
                    "leaky_relu");
    }

    /// y = x @ w + b with x [..., in], w [in, out], b [out]. Leading axes of
    /// x are flattened into rows.
    Var linear(Var x, Var w, Var b) {
        const Tensor<T>&vx = value(x), &vw = value(w), &vb = value(b);
        if (vw.rank() != 2) throw ShapeError("linear: weight must be rank 2");
        const std::size_t in = vw.dim(0), out_c = vw.dim(1);
        if (vx.rank() < 1 || vx.dim(vx.rank() - 1) != in) {
            throw ShapeError("linear: input " + shape_str(vx.shape()) + " does not end in " +
                             std::to_string(in));
        }
        if (vb.shape() != Shape{out_c}) throw ShapeError("linear: bias must be [out]");
        const std::size_t rows = vx.numel() / in;

        Shape oshape = vx.shape();
        oshape.back() = out_c;
        Tensor<T> out(oshape);
        MatMap(out.data(), rows, out_c).noalias() =
            CMatMap(vx.data(), rows, in) * CMatMap(vw.data(), in, out_c);
        MatMap(out.data(), rows, out_c).rowwise() += CVecMap(vb.data(), out_c).transpose();

        return push(std::move(out), requires_grad(x) || requires_grad(w) || requires_grad(b),
                    [this, x, w, b, rows, in, out_c](std::size_t self) {
                        CMatMap gy(nodes_[self].grad.data(), rows, out_c);
                        if (requires_grad(x)) {
                            MatMap(ensure_grad(x).data(), rows, in).noalias() +=
                                gy * CMatMap(value(w).data(), in, out_c).transpose();
                        }
                        if (requires_grad(w)) {
                            MatMap(ensure_grad(w).data(), in, out_c).noalias() +=
                                CMatMap(value(x).data(), rows, in).transpose() * gy;
                        }
                        if (requires_grad(b)) {
                            // Summed by hand in row order: Eigen's vectorized column
                            // reduction picks its accumulation order from the output
                            // pointer's alignment, which varies run to run.
                            T* gb = ensure_grad(b).data();
                            const T* gyp = nodes_[self].grad.data();
                            for (std::size_t r = 0; r < rows; ++r) {
                                const T* row = gyp + r * out_c;
                                for (std::size_t c = 0; c < out_c; ++c) gb[c] += row[c];
                            }
                        }
                    },
                    "linear");
    }

    /// Concatenate along `axis`; all other dims must agree.
    Var concat(Var a, Var b, std::size_t axis) {
        const Tensor<T>&va = value(a), &vb = value(b);
        if (va.rank() != vb.rank() || axis >= va.rank()) {
            throw ShapeError("concat: rank mismatch or bad axis");
        }
        for (std::size_t d = 0; d < va.rank(); ++d) {
            if (d != axis && va.dim(d) != vb.dim(d)) {
                throw ShapeError("concat: shapes " + shape_str(va.shape()) + " and " +
                                 shape_str(vb.shape()) + " differ off axis " + std::to_string(axis));
            }
        }
        Shape oshape = va.shape();
        oshape[axis] = va.dim(axis) + vb.dim(axis);
        Tensor<T> out(oshape);
        const std::size_t outer = va.outer(axis);
        const std::size_t ca = va.dim(axis) * va.inner(axis);
        const std::size_t cb = vb.dim(axis) * vb.inner(axis);
        for (std::size_t o = 0; o < outer; ++o) {
            std::copy_n(va.data() + o * ca, ca, out.data() + o * (ca + cb));
            std::copy_n(vb.data() + o * cb, cb, out.data() + o * (ca + cb) + ca);
        }
        return push(std::move(out), requires_grad(a) || requires_grad(b),
                    [this, a, b, outer, ca, cb](std::size_t self) {
                        const T* gy = nodes_[self].grad.data();
                        if (requires_grad(a)) {
                            T* ga = ensure_grad(a).data();
                            for (std::size_t o = 0; o < outer; ++o) {
                                const T* src = gy + o * (ca + cb);
                                for (std::size_t i = 0; i < ca; ++i) ga[o * ca + i] += src[i];
                            }
                        }
                        if (requires_grad(b)) {
                            T* gb = ensure_grad(b).data();
                            for (std::size_t o = 0; o < outer; ++o) {
                                const T* src = gy + o * (ca + cb) + ca;
                                for (std::size_t i = 0; i < cb; ++i) gb[o * cb + i] += src[i];
                            }
                        }
                    },
                    "concat");
    }

    /// Max over one axis. Ties keep the first index, so the subgradient goes
    /// to exactly one element.
    Var max_axis(Var x, std::size_t axis) {
        const Tensor<T>& vx = value(x);
        if (vx.rank() < 2 || axis >= vx.rank()) throw ShapeError("max_axis: bad axis");
        const std::size_t outer = vx.outer(axis), len = vx.dim(axis), inner = vx.inner(axis);
        Shape oshape;
        for (std::size_t d = 0; d < vx.rank(); ++d) {
            if (d != axis) oshape.push_back(vx.dim(d));
        }
        Tensor<T> out(oshape);
        auto arg = std::make_shared<std::vector<std::int32_t>>(out.numel());
        const T* px = vx.data();
        T* po = out.data();
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t i = 0; i < inner; ++i) {
                T best = px[o * len * inner + i];
                std::int32_t bi = 0;
                for (std::size_t a = 1; a < len; ++a) {
                    T v = px[(o * len + a) * inner + i];
                    if (v > best) {
                        best = v;
                        bi = static_cast<std::int32_t>(a);
                    }
                }
                po[o * inner + i] = best;
                (*arg)[o * inner + i] = bi;
            }
        }
        return push(std::move(out), requires_grad(x),
                    [this, x, arg, outer, len, inner](std::size_t self) {
                        if (!requires_grad(x)) return;
                        const T* gy = nodes_[self].grad.data();
                        T* gx = ensure_grad(x).data();
                        for (std::size_t o = 0; o < outer; ++o) {
                            for (std::size_t i = 0; i < inner; ++i) {
                                std::size_t a = static_cast<std::size_t>((*arg)[o * inner + i]);
                                gx[(o * len + a) * inner + i] += gy[o * inner + i];
                            }
                        }
                    },
                    "max_axis");
    }

    Var mean_axis(Var x, std::size_t axis) {
        const Tensor<T>& vx = value(x);
        if (vx.rank() < 2 || axis >= vx.rank()) throw ShapeError("mean_axis: bad axis");
        const std::size_t outer = vx.outer(axis), len = vx.dim(axis), inner = vx.inner(axis);
        Shape oshape;
        for (std::size_t d = 0; d < vx.rank(); ++d) {
            if (d != axis) oshape.push_back(vx.dim(d));
        }
        Tensor<T> out(oshape);
        const T* px = vx.data();
        T* po = out.data();
        const T scale = T(1) / static_cast<T>(len);
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t i = 0; i < inner; ++i) {
                T acc = T(0);
                for (std::size_t a = 0; a < len; ++a) acc += px[(o * len + a) * inner + i];
                po[o * inner + i] = acc * scale;
            }
        }
        return push(std::move(out), requires_grad(x),
                    [this, x, outer, len, inner, scale](std::size_t self) {
                        if (!requires_grad(x)) return;
                        const T* gy = nodes_[self].grad.data();
                        T* gx = ensure_grad(x).data();
                        for (std::size_t o = 0; o < outer; ++o) {
                            for (std::size_t i = 0; i < inner; ++i) {
                                T g = gy[o * inner + i] * scale;
                                for (std::size_t a = 0; a < len; ++a) {
                                    gx[(o * len + a) * inner + i] += g;
                                }
                            }
                        }
                    },
                    "mean_axis");
    }

    /// Differentiable edge assembly over a batch. x [B, N, C] plus one
    /// neighbor graph per batch item gives [B, N, k, 2C] where slot
    /// [b, i, j] holds [x_bi, x_bi - x_bg] for the j-th neighbor g.
    Var gather_edges(Var x, const std::vector<NeighborGraph>& graphs) {
        const Tensor<T>& vx = value(x);
        if (vx.rank() != 3) throw ShapeError("gather_edges: expected [B, N, C]");
        const std::size_t b_n = vx.dim(0), n = vx.dim(1), c = vx.dim(2);
        if (graphs.size() != b_n) throw ShapeError("gather_edges: one graph per batch item");
        for (const NeighborGraph& g : graphs) {
            if (g.n != n) throw ShapeError("gather_edges: graph size mismatch");
            if (g.k != graphs[0].k) throw ShapeError("gather_edges: inconsistent k");
        }
        const std::size_t k = static_cast<std::size_t>(graphs[0].k);
        Tensor<T> out({b_n, n, k, 2 * c});
        const T* px = vx.data();
        T* po = out.data();
        for (std::size_t b = 0; b < b_n; ++b) {
            const T* xb = px + b * n * c;
            for (std::size_t i = 0; i < n; ++i) {
                const T* xi = xb + i * c;
                for (std::size_t j = 0; j < k; ++j) {
                    const T* xj = xb + static_cast<std::size_t>(graphs[b].at(i, j)) * c;
                    T* row = po + ((b * n + i) * k + j) * 2 * c;
                    for (std::size_t d = 0; d < c; ++d) {
                        row[d] = xi[d];
                        row[c + d] = xi[d] - xj[d];
                    }
                }
            }
        }
        auto saved = std::make_shared<std::vector<NeighborGraph>>(graphs);
        return push(std::move(out), requires_grad(x),
                    [this, x, saved, b_n, n, c, k](std::size_t self) {
                        if (!requires_grad(x)) return;
                        const T* gy = nodes_[self].grad.data();
                        T* gx = ensure_grad(x).data();
                        for (std::size_t b = 0; b < b_n; ++b) {
                            T* gb = gx + b * n * c;
                            for (std::size_t i = 0; i < n; ++i) {
                                for (std::size_t j = 0; j < k; ++j) {
                                    const T* row = gy + ((b * n + i) * k + j) * 2 * c;
                                    T* gi = gb + i * c;
                                    T* gj = gb + static_cast<std::size_t>((*saved)[b].at(i, j)) * c;
                                    for (std::size_t d = 0; d < c; ++d) {
                                        gi[d] += row[d] + row[c + d];
                                        gj[d] -= row[c + d];
                                    }
                                }
                            }
                        }
                    },
                    "gather_edges");
    }

    /// Repeat a per-cloud vector across points: [B, C] -> [B, n, C].
    Var broadcast_points(Var x, std::size_t n) {
        const Tensor<T>& vx = value(x);
        if (vx.rank() != 2) throw ShapeError("broadcast_points: expected [B, C]");
        const std::size_t b_n = vx.dim(0), c = vx.dim(1);
        Tensor<T> out({b_n, n, c});
        const T* px = vx.data();
        T* po = out.data();
        for (std::size_t b = 0; b < b_n; ++b) {
            for (std::size_t i = 0; i < n; ++i) {
                std::copy_n(px + b * c, c, po + (b * n + i) * c);
            }
        }
        return push(std::move(out), requires_grad(x),
                    [this, x, b_n, n, c](std::size_t self) {
                        if (!requires_grad(x)) return;
                        const T* gy = nodes_[self].grad.data();
                        T* gx = ensure_grad(x).data();
                        for (std::size_t b = 0; b < b_n; ++b) {
                            for (std::size_t i = 0; i < n; ++i) {
                                const T* src = gy + (b * n + i) * c;
                                for (std::size_t d = 0; d < c; ++d) gx[b * c + d] += src[d];
                            }
                        }
                    },
                    "broadcast_points");
    }

    /// Inverted dropout. Identity when not training or rate is zero, so eval
    /// passes build no extra node.
    Var dropout(Var x, T rate, Rng& rng, bool training) {
        if (!training || rate <= T(0)) return x;
        if (rate >= T(1)) throw ValidationError("dropout: rate must be < 1");
        const Tensor<T>& vx = value(x);
        auto mask = std::make_shared<Tensor<T>>(vx.shape());
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const T keep_scale = T(1) / (T(1) - rate);
        T* pm = mask->data();
        for (std::size_t i = 0; i < mask->numel(); ++i) {
            pm[i] = unit(rng) < static_cast<double>(rate) ? T(0) : keep_scale;
        }
        Tensor<T> out(vx.shape());
        const T* px = vx.data();
        T* po = out.data();
        for (std::size_t i = 0; i < out.numel(); ++i) po[i] = px[i] * pm[i];
        return push(std::move(out), requires_grad(x),
                    [this, x, mask](std::size_t self) {
                        if (!requires_grad(x)) return;
                        const Tensor<T>& gy = nodes_[self].grad;
                        T* gx = ensure_grad(x).data();
                        const T* pm = mask->data();
                        const T* pu = gy.data();
                        for (std::size_t i = 0; i < gy.numel(); ++i) gx[i] += pu[i] * pm[i];
                    },
                    "dropout");
    }

    /// Batch normalization over the last axis. All leading axes are pooled
    /// into the batch, variance is the biased estimate, and running stats
    /// follow running = momentum * running + (1 - momentum) * batch.
    Var batch_norm(Var x, Var gamma, Var beta, Tensor<T>& running_mean, Tensor<T>& running_var,
                   bool training, T momentum = T(0.9), T eps = T(1e-5)) {
        const Tensor<T>& vx = value(x);
        if (vx.rank() < 2) throw ShapeError("batch_norm: input rank must be >= 2");
        const std::size_t c = vx.dim(vx.rank() - 1);
        const std::size_t rows = vx.numel() / c;
        if (value(gamma).shape() != Shape{c} || value(beta).shape() != Shape{c}) {
            throw ShapeError("batch_norm: gamma/beta must be [" + std::to_string(c) + "]");
        }
        if (running_mean.shape() != Shape{c} || running_var.shape() != Shape{c}) {
            throw ShapeError("batch_norm: running stats must be [" + std::to_string(c) + "]");
        }

        auto mean = std::make_shared<std::vector<T>>(c, T(0));
        auto inv_std = std::make_shared<std::vector<T>>(c, T(0));
        const T* px = vx.data();
        if (training) {
            std::vector<T> var(c, T(0));
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t j = 0; j < c; ++j) (*mean)[j] += px[r * c + j];
            }
            for (std::size_t j = 0; j < c; ++j) (*mean)[j] /= static_cast<T>(rows);
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t j = 0; j < c; ++j) {
                    T d = px[r * c + j] - (*mean)[j];
                    var[j] += d * d;
                }
            }
            for (std::size_t j = 0; j < c; ++j) var[j] /= static_cast<T>(rows);
            for (std::size_t j = 0; j < c; ++j) {
                running_mean[j] = momentum * running_mean[j] + (T(1) - momentum) * (*mean)[j];
                running_var[j] = momentum * running_var[j] + (T(1) - momentum) * var[j];
                (*inv_std)[j] = T(1) / std::sqrt(var[j] + eps);
            }
        } else {
            for (std::size_t j = 0; j < c; ++j) {
                (*mean)[j] = running_mean[j];
                (*inv_std)[j] = T(1) / std::sqrt(running_var[j] + eps);
            }
        }

        Tensor<T> out(vx.shape());
        const T* pg = value(gamma).data();
        const T* pb = value(beta).data();
        T* po = out.data();
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < c; ++j) {
                T xhat = (px[r * c + j] - (*mean)[j]) * (*inv_std)[j];
                po[r * c + j] = pg[j] * xhat + pb[j];
            }
        }

        bool req = requires_grad(x) || requires_grad(gamma) || requires_grad(beta);
        return push(
            std::move(out), req,
            [this, x, gamma, beta, mean, inv_std, rows, c, training](std::size_t self) {
                const T* gy = nodes_[self].grad.data();
                const T* px = value(x).data();
                const T* pg = value(gamma).data();

                std::vector<T> sum_dy(c, T(0)), sum_dy_xhat(c, T(0));
                for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t j = 0; j < c; ++j) {
                        T xhat = (px[r * c + j] - (*mean)[j]) * (*inv_std)[j];
                        sum_dy[j] += gy[r * c + j];
                        sum_dy_xhat[j] += gy[r * c + j] * xhat;
                    }
                }
                if (requires_grad(beta)) {
                    T* gb = ensure_grad(beta).data();
                    for (std::size_t j = 0; j < c; ++j) gb[j] += sum_dy[j];
                }
                if (requires_grad(gamma)) {
                    T* gg = ensure_grad(gamma).data();
                    for (std::size_t j = 0; j < c; ++j) gg[j] += sum_dy_xhat[j];
                }
                if (requires_grad(x)) {
                    T* gx = ensure_grad(x).data();
                    const T inv_rows = T(1) / static_cast<T>(rows);
                    for (std::size_t r = 0; r < rows; ++r) {
                        for (std::size_t j = 0; j < c; ++j) {
                            T g = gy[r * c + j];
                            if (training) {
                                T xhat = (px[r * c + j] - (*mean)[j]) * (*inv_std)[j];
                                g -= sum_dy[j] * inv_rows + xhat * sum_dy_xhat[j] * inv_rows;
                            }
                            gx[r * c + j] += pg[j] * (*inv_std)[j] * g;
                        }
                    }
                }
            },
            "batch_norm");
    }

    /// Mean cross entropy with softmax over the last axis. Leading axes are
    /// flattened; labels has one entry per row. `smoothing` mixes the one-hot
    /// target with the uniform distribution.
    Var softmax_cross_entropy(Var logits, const std::vector<std::int32_t>& labels,
                              T smoothing = T(0)) {
        const Tensor<T>& vx = value(logits);
        if (vx.rank() < 2) throw ShapeError("softmax_cross_entropy: logits rank must be >= 2");
        const std::size_t m = vx.dim(vx.rank() - 1);
        const std::size_t rows = vx.numel() / m;
        if (labels.size() != rows) {
            throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                             " labels for " + std::to_string(rows) + " rows");
        }
        if (smoothing < T(0) || smoothing >= T(1)) {
            throw ValidationError("softmax_cross_entropy: smoothing must be in [0, 1)");
        }
        for (std::int32_t y : labels) {
            if (y < 0 || static_cast<std::size_t>(y) >= m) {
                throw ValidationError("softmax_cross_entropy: label out of range");
            }
        }

        auto probs = std::make_shared<Tensor<T>>(vx.shape());
        const T* px = vx.data();
        T* pp = probs->data();
        const T off = smoothing / static_cast<T>(m);
        const T on = T(1) - smoothing + off;
        T total = T(0);
        for (std::size_t r = 0; r < rows; ++r) {
            const T* z = px + r * m;
            T zmax = z[0];
            for (std::size_t j = 1; j < m; ++j) zmax = std::max(zmax, z[j]);
            T sum = T(0);
            for (std::size_t j = 0; j < m; ++j) sum += std::exp(z[j] - zmax);
            T lse = zmax + std::log(sum);
            for (std::size_t j = 0; j < m; ++j) pp[r * m + j] = std::exp(z[j] - lse);
            T target_dot = T(0);
            for (std::size_t j = 0; j < m; ++j) {
                T t = j == static_cast<std::size_t>(labels[r]) ? on : off;
                target_dot += t * z[j];
            }
            total += lse - target_dot;
        }
        Tensor<T> out({1});
        out[0] = total / static_cast<T>(rows);

        auto saved_labels = std::make_shared<std::vector<std::int32_t>>(labels);
        return push(std::move(out), requires_grad(logits),
                    [this, logits, probs, saved_labels, rows, m, on, off](std::size_t self) {
                        if (!requires_grad(logits)) return;
                        const T g0 = nodes_[self].grad[0] / static_cast<T>(rows);
                        T* gx = ensure_grad(logits).data();
                        const T* pp = probs->data();
                        for (std::size_t r = 0; r < rows; ++r) {
                            for (std::size_t j = 0; j < m; ++j) {
                                T t = j == static_cast<std::size_t>((*saved_labels)[r]) ? on : off;
                                gx[r * m + j] += g0 * (pp[r * m + j] - t);
                            }
                        }
                    },
                    "softmax_cross_entropy");
    }

    /// Scalar projection sum(x * w) against a fixed tensor. Handy for turning
    /// vector outputs into a scalar objective in gradient tests.
    Var weighted_sum(Var x, Tensor<T> w) {
        const Tensor<T>& vx = value(x);
        if (vx.shape() != w.shape()) throw ShapeError("weighted_sum: shape mismatch");
        auto wp = std::make_shared<Tensor<T>>(std::move(w));
        Tensor<T> out({1});
        T acc = T(0);
        const T* px = vx.data();
        const T* pw = wp->data();
        for (std::size_t i = 0; i < vx.numel(); ++i) acc += px[i] * pw[i];
        out[0] = acc;
        return push(std::move(out), requires_grad(x),
                    [this, x, wp](std::size_t self) {
                        if (!requires_grad(x)) return;
                        const T g0 = nodes_[self].grad[0];
                        T* gx = ensure_grad(x).data();
                        const T* pw = wp->data();
                        for (std::size_t i = 0; i < wp->numel(); ++i) gx[i] += g0 * pw[i];
                    },
                    "weighted_sum");
    }

    /// Reverse sweep from a scalar root. Creation order is topological order,
    /// so one pass from root down to node 0 visits consumers before
    /// producers. Non-leaf gradient buffers are released as soon as their
    /// node has propagated, which keeps the peak footprint near the widest
    /// layer instead of the whole tape.
    void backward(Var root) {
        const NodeRec& r = node(root);
        if (r.value.numel() != 1) {
            throw ValidationError("backward: root must be scalar, got " + shape_str(r.value.shape()));
        }
        ensure_grad(root).fill(T(1));
        for (std::size_t id = root.id + 1; id-- > 0;) {
            NodeRec& n = nodes_[id];
            if (n.grad.empty()) continue;
            if (n.backward) {
                n.backward(id);
                n.grad.release();
            }
        }
    }

private:
    struct NodeRec {
        Tensor<T> value;
        Tensor<T> grad;
        bool requires_grad = false;
        std::function<void(std::size_t)> backward;
    };

    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using MatMap = Eigen::Map<Mat>;
    using CMatMap = Eigen::Map<const Mat>;
    using VecMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;
    using CVecMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;

    const NodeRec& node(Var v) const {
        if (!v.valid() || v.id >= nodes_.size()) throw ValidationError("invalid graph handle");
        return nodes_[v.id];
    }
    NodeRec& node(Var v) {
        if (!v.valid() || v.id >= nodes_.size()) throw ValidationError("invalid graph handle");
        return nodes_[v.id];
    }

    Tensor<T>& ensure_grad(Var v) {
        NodeRec& n = node(v);
        if (n.grad.empty()) n.grad = Tensor<T>(n.value.shape());
        return n.grad;
    }

    void accumulate(Var v, const T* g, std::size_t count) {
        if (!requires_grad(v)) return;
        T* dst = ensure_grad(v).data();
        for (std::size_t i = 0; i < count; ++i) dst[i] += g[i];
    }

    Var push(Tensor<T> value, bool needs_grad, std::function<void(std::size_t)> backward,
             const char* op) {
        if (!value.all_finite()) {
            throw NumericError(std::string(op) + ": produced a non-finite value");
        }
        NodeRec n;
        n.value = std::move(value);
        n.requires_grad = needs_grad;
        if (needs_grad) n.backward = std::move(backward);
        nodes_.push_back(std::move(n));
        return Var{nodes_.size() - 1};
    }

    std::vector<NodeRec> nodes_;
};

} // namespace pointgr
