#ifndef DUMB_DIFFCORE_TAPE_HPP
#define DUMB_DIFFCORE_TAPE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dumb/diffcore/tensor.hpp"

namespace dumb {

/// Handle to a node recorded on a Tape.
struct Var {
    std::size_t id = 0;
};

/// Geometry of a 2-D convolution over N x H x W x C inputs with
/// KH x KW x Cin x Cout weights.
struct ConvGeometry {
    std::size_t batch, height, width, in_channels;
    std::size_t kernel_h, kernel_w, out_channels;
    std::size_t stride, padding;
    std::size_t out_h, out_w;

    std::size_t rows() const { return batch * out_h * out_w; }
    std::size_t cols() const { return kernel_h * kernel_w * in_channels; }
};

namespace detail {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

template <typename T>
void im2col(const T* input, const ConvGeometry& g, T* col) {
    const std::size_t cols = g.cols();
    const std::size_t run = g.kernel_w * g.in_channels;
    const auto h = static_cast<std::ptrdiff_t>(g.height), w = static_cast<std::ptrdiff_t>(g.width);
    for (std::size_t n = 0; n < g.batch; ++n) {
        const T* image = input + n * g.height * g.width * g.in_channels;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
            for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                T* row = col + ((n * g.out_h + oy) * g.out_w + ox) * cols;
                const auto x0 = static_cast<std::ptrdiff_t>(ox * g.stride) - static_cast<std::ptrdiff_t>(g.padding);
                const bool full_row = x0 >= 0 && x0 + static_cast<std::ptrdiff_t>(g.kernel_w) <= w;
                for (std::size_t ky = 0; ky < g.kernel_h; ++ky, row += run) {
                    const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                    static_cast<std::ptrdiff_t>(g.padding);
                    if (iy < 0 || iy >= h) {
                        for (std::size_t c = 0; c < run; ++c) row[c] = T{0};
                        continue;
                    }
                    const T* src = image + static_cast<std::size_t>(iy) * g.width * g.in_channels;
                    if (full_row) {
                        const T* s = src + static_cast<std::size_t>(x0) * g.in_channels;
                        for (std::size_t c = 0; c < run; ++c) row[c] = s[c];
                        continue;
                    }
                    for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
                        const auto ix = x0 + static_cast<std::ptrdiff_t>(kx);
                        T* dst = row + kx * g.in_channels;
                        if (ix < 0 || ix >= w) {
                            for (std::size_t ch = 0; ch < g.in_channels; ++ch) dst[ch] = T{0};
                        } else {
                            const T* s = src + static_cast<std::size_t>(ix) * g.in_channels;
                            for (std::size_t ch = 0; ch < g.in_channels; ++ch) dst[ch] = s[ch];
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const T* col, const ConvGeometry& g, T* input_grad) {
    const std::size_t cols = g.cols();
    const std::size_t run = g.kernel_w * g.in_channels;
    const auto h = static_cast<std::ptrdiff_t>(g.height), w = static_cast<std::ptrdiff_t>(g.width);
    for (std::size_t n = 0; n < g.batch; ++n) {
        T* image = input_grad + n * g.height * g.width * g.in_channels;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
            for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                const T* row = col + ((n * g.out_h + oy) * g.out_w + ox) * cols;
                const auto x0 = static_cast<std::ptrdiff_t>(ox * g.stride) - static_cast<std::ptrdiff_t>(g.padding);
                const bool full_row = x0 >= 0 && x0 + static_cast<std::ptrdiff_t>(g.kernel_w) <= w;
                for (std::size_t ky = 0; ky < g.kernel_h; ++ky, row += run) {
                    const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                    static_cast<std::ptrdiff_t>(g.padding);
                    if (iy < 0 || iy >= h) continue;
                    T* dst = image + static_cast<std::size_t>(iy) * g.width * g.in_channels;
                    if (full_row) {
                        T* d = dst + static_cast<std::size_t>(x0) * g.in_channels;
                        for (std::size_t c = 0; c < run; ++c) d[c] += row[c];
                        continue;
                    }
                    for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
                        const auto ix = x0 + static_cast<std::ptrdiff_t>(kx);
                        if (ix < 0 || ix >= w) continue;
                        T* d = dst + static_cast<std::size_t>(ix) * g.in_channels;
                        for (std::size_t ch = 0; ch < g.in_channels; ++ch) d[ch] += row[kx * g.in_channels + ch];
                    }
                }
            }
        }
    }
}

} // namespace detail

/// Reverse-mode trace of one forward pass. Nodes are appended in execution
/// order, so every node's inputs precede it and the trace is acyclic.
/// A tape is confined to one thread.
template <typename T>
class Tape {
public:
    Var input(Tensor<T> value) {
        const bool rg = value.requires_grad;
        return push(std::move(value), rg, nullptr);
    }

    Var constant(Tensor<T> value) {
        value.requires_grad = false;
        return push(std::move(value), false, nullptr);
    }

    const Tensor<T>& value(Var v) const { return nodes_.at(v.id).value; }

    /// Gradient accumulated by the last backward(); zeros if the node was not reached.
    Tensor<T> grad(Var v) const {
        const Node& node = nodes_.at(v.id);
        if (node.grad.empty()) return Tensor<T>(node.value.shape);
        return Tensor<T>(node.value.shape, node.grad);
    }

    std::size_t size() const { return nodes_.size(); }

    // ---- forward operations -------------------------------------------------

    /// x: N x D, weight: D x O, bias: O.
    Var dense(Var x, Var weight, Var bias) {
        const auto& xs = value(x).shape;
        const auto& ws = value(weight).shape;
        const auto& bs = value(bias).shape;
        if (xs.size() != 2 || ws.size() != 2 || bs.size() != 1 || xs[1] != ws[0] || bs[0] != ws[1]) {
            throw Error("shape-error", "dense " + shape_string(xs) + " * " + shape_string(ws) + " + " +
                                           shape_string(bs));
        }
        const std::size_t n = xs[0], d = xs[1], o = ws[1];
        Tensor<T> out({n, o});
        {
            detail::ConstMatMap<T> X(value(x).ptr(), n, d);
            detail::ConstMatMap<T> W(value(weight).ptr(), d, o);
            detail::MatMap<T> Y(out.ptr(), n, o);
            Y.noalias() = X * W;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < o; ++j) Y(i, j) += value(bias)[j];
        }
        return push(std::move(out), any_rg({x, weight, bias}), [x, weight, bias, n, d, o](Tape& t, std::size_t self) {
            detail::ConstMatMap<T> G(t.nodes_[self].grad.data(), n, o);
            if (t.rg(x)) {
                detail::ConstMatMap<T> W(t.value(weight).ptr(), d, o);
                detail::MatMap<T> GX(t.grad_buffer(x), n, d);
                GX.noalias() += G * W.transpose();
            }
            if (t.rg(weight)) {
                detail::ConstMatMap<T> X(t.value(x).ptr(), n, d);
                detail::MatMap<T> GW(t.grad_buffer(weight), d, o);
                GW.noalias() += X.transpose() * G;
            }
            if (t.rg(bias)) {
                T* gb = t.grad_buffer(bias);
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < o; ++j) gb[j] += G(i, j);
            }
        });
    }

    /// x: N x H x W x Cin, weight: KH x KW x Cin x Cout, bias: Cout.
    Var conv2d(Var x, Var weight, Var bias, std::size_t stride = 1, std::size_t padding = 0) {
        const auto& xs = value(x).shape;
        const auto& ws = value(weight).shape;
        const auto& bs = value(bias).shape;
        if (xs.size() != 4 || ws.size() != 4 || bs.size() != 1 || xs[3] != ws[2] || bs[0] != ws[3] ||
            stride == 0 || xs[1] + 2 * padding < ws[0] || xs[2] + 2 * padding < ws[1]) {
            throw Error("shape-error", "conv2d " + shape_string(xs) + " with kernel " + shape_string(ws) +
                                           " bias " + shape_string(bs));
        }
        ConvGeometry g{xs[0], xs[1], xs[2], xs[3], ws[0], ws[1], ws[3], stride, padding, 0, 0};
        g.out_h = (g.height + 2 * padding - g.kernel_h) / stride + 1;
        g.out_w = (g.width + 2 * padding - g.kernel_w) / stride + 1;

        auto col = std::make_shared<std::vector<T>>(g.rows() * g.cols());
        detail::im2col(value(x).ptr(), g, col->data());
        Tensor<T> out({g.batch, g.out_h, g.out_w, g.out_channels});
        {
            detail::ConstMatMap<T> C(col->data(), g.rows(), g.cols());
            detail::ConstMatMap<T> W(value(weight).ptr(), g.cols(), g.out_channels);
            detail::MatMap<T> Y(out.ptr(), g.rows(), g.out_channels);
            Y.noalias() = C * W;
            const T* b = value(bias).ptr();
            for (std::size_t r = 0; r < g.rows(); ++r)
                for (std::size_t j = 0; j < g.out_channels; ++j) Y(r, j) += b[j];
        }
        return push(std::move(out), any_rg({x, weight, bias}), [x, weight, bias, g, col](Tape& t, std::size_t self) {
            detail::ConstMatMap<T> G(t.nodes_[self].grad.data(), g.rows(), g.out_channels);
            if (t.rg(weight)) {
                detail::ConstMatMap<T> C(col->data(), g.rows(), g.cols());
                detail::MatMap<T> GW(t.grad_buffer(weight), g.cols(), g.out_channels);
                GW.noalias() += C.transpose() * G;
            }
            if (t.rg(bias)) {
                T* gb = t.grad_buffer(bias);
                for (std::size_t r = 0; r < g.rows(); ++r)
                    for (std::size_t j = 0; j < g.out_channels; ++j) gb[j] += G(r, j);
            }
            if (t.rg(x)) {
                detail::ConstMatMap<T> W(t.value(weight).ptr(), g.cols(), g.out_channels);
                std::vector<T> dcol(g.rows() * g.cols());
                detail::MatMap<T> DC(dcol.data(), g.rows(), g.cols());
                DC.noalias() = G * W.transpose();
                detail::col2im_add(dcol.data(), g, t.grad_buffer(x));
            }
        });
    }

    Var relu(Var x) {
        Tensor<T> out = value(x);
        out.requires_grad = false;
        for (T& v : out.data) v = v > T{0} ? v : T{0};
        return push(std::move(out), rg(x), [x](Tape& t, std::size_t self) {
            if (!t.rg(x)) return;
            const auto& in = t.value(x).data;
            const auto& g = t.nodes_[self].grad;
            T* gx = t.grad_buffer(x);
            for (std::size_t i = 0; i < in.size(); ++i)
                if (in[i] > T{0}) gx[i] += g[i];
        });
    }

    /// Non-overlapping k x k max pooling over N x H x W x C. Ties route the
    /// gradient to the first maximal element in row-major window order.
    Var maxpool2d(Var x, std::size_t k) {
        const auto& xs = value(x).shape;
        if (xs.size() != 4 || k == 0 || xs[1] < k || xs[2] < k) {
            throw Error("shape-error", "maxpool2d " + shape_string(xs) + " with window " + std::to_string(k));
        }
        const std::size_t n = xs[0], h = xs[1], w = xs[2], c = xs[3];
        const std::size_t oh = h / k, ow = w / k;
        Tensor<T> out({n, oh, ow, c});
        auto arg = std::make_shared<std::vector<std::size_t>>(out.size());
        const T* in = value(x).ptr();
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t oy = 0; oy < oh; ++oy)
                for (std::size_t ox = 0; ox < ow; ++ox)
                    for (std::size_t ch = 0; ch < c; ++ch) {
                        std::size_t best = ((b * h + oy * k) * w + ox * k) * c + ch;
                        for (std::size_t ky = 0; ky < k; ++ky)
                            for (std::size_t kx = 0; kx < k; ++kx) {
                                const std::size_t idx = ((b * h + oy * k + ky) * w + ox * k + kx) * c + ch;
                                if (in[idx] > in[best]) best = idx;
                            }
                        const std::size_t o = ((b * oh + oy) * ow + ox) * c + ch;
                        out[o] = in[best];
                        (*arg)[o] = best;
                    }
        return push(std::move(out), rg(x), [x, arg](Tape& t, std::size_t self) {
            if (!t.rg(x)) return;
            const auto& g = t.nodes_[self].grad;
            T* gx = t.grad_buffer(x);
            for (std::size_t i = 0; i < g.size(); ++i) gx[(*arg)[i]] += g[i];
        });
    }

    /// N x ... -> N x prod(...)
    Var flatten(Var x) {
        Tensor<T> out = value(x);
        out.requires_grad = false;
        if (out.shape.empty()) throw Error("shape-error", "flatten of a scalar");
        out.shape = {out.shape[0], out.size() / std::max<std::size_t>(out.shape[0], 1)};
        return push(std::move(out), rg(x), [x](Tape& t, std::size_t self) {
            if (!t.rg(x)) return;
            const auto& g = t.nodes_[self].grad;
            T* gx = t.grad_buffer(x);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
        });
    }

    /// Row-wise softmax over N x K.
    Var softmax(Var x) {
        const auto& xs = value(x).shape;
        if (xs.size() != 2) throw Error("shape-error", "softmax expects N x K, got " + shape_string(xs));
        Tensor<T> out = softmax_rows(value(x));
        const std::size_t n = xs[0], k = xs[1];
        return push(std::move(out), rg(x), [x, n, k](Tape& t, std::size_t self) {
            if (!t.rg(x)) return;
            const auto& s = t.nodes_[self].value.data;
            const auto& g = t.nodes_[self].grad;
            T* gx = t.grad_buffer(x);
            for (std::size_t i = 0; i < n; ++i) {
                T dot{0};
                for (std::size_t j = 0; j < k; ++j) dot += g[i * k + j] * s[i * k + j];
                for (std::size_t j = 0; j < k; ++j) gx[i * k + j] += s[i * k + j] * (g[i * k + j] - dot);
            }
        });
    }

    /// Fused softmax + cross-entropy over N x K logits; mean over the batch.
    Var cross_entropy(Var logits, std::span<const int> labels) {
        const auto& xs = value(logits).shape;
        if (xs.size() != 2 || xs[0] != labels.size()) {
            throw Error("shape-error", "cross_entropy logits " + shape_string(xs) + " with " +
                                           std::to_string(labels.size()) + " labels");
        }
        const std::size_t n = xs[0], k = xs[1];
        for (int y : labels)
            if (y < 0 || static_cast<std::size_t>(y) >= k)
                throw Error("shape-error", "label " + std::to_string(y) + " outside " + std::to_string(k) + " classes");
        Tensor<T> probs = softmax_rows(value(logits));
        T loss{0};
        const T* z = value(logits).ptr();
        for (std::size_t i = 0; i < n; ++i) {
            T m = z[i * k];
            for (std::size_t j = 1; j < k; ++j) m = std::max(m, z[i * k + j]);
            T se{0};
            for (std::size_t j = 0; j < k; ++j) se += std::exp(z[i * k + j] - m);
            loss += m + std::log(se) - z[i * k + static_cast<std::size_t>(labels[i])];
        }
        loss /= static_cast<T>(n);
        auto p = std::make_shared<Tensor<T>>(std::move(probs));
        std::vector<int> y(labels.begin(), labels.end());
        return push(Tensor<T>({}, std::vector<T>{loss}), rg(logits),
                    [logits, p, y = std::move(y), n, k](Tape& t, std::size_t self) {
                        if (!t.rg(logits)) return;
                        const T g = t.nodes_[self].grad[0] / static_cast<T>(n);
                        T* gx = t.grad_buffer(logits);
                        for (std::size_t i = 0; i < n; ++i)
                            for (std::size_t j = 0; j < k; ++j) {
                                const T onehot = static_cast<std::size_t>(y[i]) == j ? T{1} : T{0};
                                gx[i * k + j] += g * ((*p)[i * k + j] - onehot);
                            }
                    });
    }

    Var sum(Var x) {
        T s{0};
        for (T v : value(x).data) s += v;
        return push(Tensor<T>({}, std::vector<T>{s}), rg(x), [x](Tape& t, std::size_t self) {
            if (!t.rg(x)) return;
            const T g = t.nodes_[self].grad[0];
            T* gx = t.grad_buffer(x);
            for (std::size_t i = 0; i < t.value(x).size(); ++i) gx[i] += g;
        });
    }

    Var square(Var x) {
        Tensor<T> out = value(x);
        out.requires_grad = false;
        for (T& v : out.data) v = v * v;
        return push(std::move(out), rg(x), [x](Tape& t, std::size_t self) {
            if (!t.rg(x)) return;
            const auto& in = t.value(x).data;
            const auto& g = t.nodes_[self].grad;
            T* gx = t.grad_buffer(x);
            for (std::size_t i = 0; i < in.size(); ++i) gx[i] += T{2} * in[i] * g[i];
        });
    }

    Var add_scalar(Var x, T c) {
        Tensor<T> out = value(x);
        out.requires_grad = false;
        for (T& v : out.data) v += c;
        return push(std::move(out), rg(x), [x](Tape& t, std::size_t self) {
            if (!t.rg(x)) return;
            const auto& g = t.nodes_[self].grad;
            T* gx = t.grad_buffer(x);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
        });
    }

    /// Scalar sum(coefficients * x) with constant coefficients of x's shape.
    Var weighted_sum(Var x, Tensor<T> coefficients) {
        require_same_shape(value(x), coefficients, "weighted_sum");
        T s{0};
        for (std::size_t i = 0; i < coefficients.size(); ++i) s += coefficients[i] * value(x)[i];
        auto c = std::make_shared<Tensor<T>>(std::move(coefficients));
        return push(Tensor<T>({}, std::vector<T>{s}), rg(x), [x, c](Tape& t, std::size_t self) {
            if (!t.rg(x)) return;
            const T g = t.nodes_[self].grad[0];
            T* gx = t.grad_buffer(x);
            for (std::size_t i = 0; i < c->size(); ++i) gx[i] += g * (*c)[i];
        });
    }

    // ---- reverse pass -------------------------------------------------------

    /// Accumulate d(loss)/d(node) into every reachable node that requires grad.
    void backward(Var loss) {
        if (value(loss).size() != 1) {
            throw Error("non-scalar-loss", "loss has shape " + shape_string(value(loss).shape));
        }
        for (Node& node : nodes_) node.grad.clear();
        grad_buffer(loss)[0] = T{1};
        for (std::size_t i = loss.id + 1; i-- > 0;) {
            Node& node = nodes_[i];
            if (node.grad.empty() || !node.requires_grad || !node.backward) continue;
            node.backward(*this, i);
        }
    }

    static Tensor<T> softmax_rows(const Tensor<T>& x) {
        Tensor<T> out = x;
        out.requires_grad = false;
        const std::size_t n = x.shape[0], k = x.shape[1];
        for (std::size_t i = 0; i < n; ++i) {
            T m = x[i * k];
            for (std::size_t j = 1; j < k; ++j) m = std::max(m, x[i * k + j]);
            T se{0};
            for (std::size_t j = 0; j < k; ++j) {
                out[i * k + j] = std::exp(x[i * k + j] - m);
                se += out[i * k + j];
            }
            for (std::size_t j = 0; j < k; ++j) out[i * k + j] /= se;
        }
        return out;
    }

private:
    struct Node {
        Tensor<T> value;
        std::vector<T> grad;
        bool requires_grad = false;
        std::function<void(Tape&, std::size_t)> backward;
    };

    Var push(Tensor<T> value, bool requires_grad, std::function<void(Tape&, std::size_t)> backward) {
        nodes_.push_back(Node{std::move(value), {}, requires_grad, std::move(backward)});
        return Var{nodes_.size() - 1};
    }

    bool rg(Var v) const { return nodes_[v.id].requires_grad; }

    bool any_rg(std::initializer_list<Var> vars) const {
        return std::any_of(vars.begin(), vars.end(), [this](Var v) { return rg(v); });
    }

    T* grad_buffer(Var v) {
        Node& node = nodes_[v.id];
        if (node.grad.empty()) node.grad.assign(node.value.size(), T{0});
        return node.grad.data();
    }

    std::vector<Node> nodes_;
};

} // namespace dumb

#endif
