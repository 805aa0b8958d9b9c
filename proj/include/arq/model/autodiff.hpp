#pragma once

// Minimal reverse-mode differentiation over small dense row-major matrices.
// A Tape records each op together with a closure that pushes the output
// gradient back into its inputs. Trainable parameters are not copied onto the
// tape: ops read them straight from a flat parameter span and accumulate
// their gradients into a flat gradient span with the same layout.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "arq/core/error.hpp"

namespace arq::ad {

template <class T>
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<T> data;

    Matrix() = default;
    Matrix(int r, int c, T fill = T(0)) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

    T& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    T operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    T* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
    const T* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }
};

// Location of one named parameter tensor inside the flat parameter array.
struct ParamSlot {
    std::size_t offset = 0;
    int rows = 0;
    int cols = 0;
    std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

struct Var {
    std::size_t id = 0;
};

// Four interleaved partial sums, combined in a fixed order.
template <class T>
inline T dot(const T* a, const T* b, int n) {
    T s0 = T(0), s1 = T(0), s2 = T(0), s3 = T(0);
    int j = 0;
    for (; j + 4 <= n; j += 4) {
        s0 += a[j] * b[j];
        s1 += a[j + 1] * b[j + 1];
        s2 += a[j + 2] * b[j + 2];
        s3 += a[j + 3] * b[j + 3];
    }
    for (; j < n; ++j) s0 += a[j] * b[j];
    return (s0 + s1) + (s2 + s3);
}

template <class T>
class Tape {
public:
    using Mat = Matrix<T>;

    // Gradients are recorded only when a gradient span is supplied.
    Tape(std::span<const T> params, std::span<T> grads) : params_(params), grads_(grads), record_(!grads.empty()) {
        nodes_.reserve(64);
    }

    bool recording() const { return record_; }
    const Mat& value(Var v) const { return nodes_[v.id].value; }
    Mat& grad(Var v) { return nodes_[v.id].grad; }
    std::size_t size() const { return nodes_.size(); }

    Var constant(Mat m) { return push(std::move(m), nullptr); }

    // y = x W + b
    Var linear(Var x, ParamSlot W, ParamSlot b) {
        const Mat& X = value(x);
        require(X.cols == W.rows && b.size() == static_cast<std::size_t>(W.cols), "linear: shape mismatch");
        Mat Y(X.rows, W.cols);
        const T* w = params_.data() + W.offset;
        const T* bias = params_.data() + b.offset;
        for (int r = 0; r < X.rows; ++r) {
            T* y = Y.row(r);
            for (int j = 0; j < W.cols; ++j) y[j] = bias[j];
            const T* xr = X.row(r);
            for (int k = 0; k < X.cols; ++k) {
                const T xv = xr[k];
                const T* wk = w + static_cast<std::size_t>(k) * W.cols;
                for (int j = 0; j < W.cols; ++j) y[j] += xv * wk[j];
            }
        }
        return push(std::move(Y), [x, W, b](Tape& t, std::size_t self) {
            const Mat& G = t.nodes_[self].grad;
            const Mat& X = t.value(x);
            Mat& GX = t.grad(x);
            const T* w = t.params_.data() + W.offset;
            T* gw = t.grads_.data() + W.offset;
            T* gb = t.grads_.data() + b.offset;
            for (int r = 0; r < X.rows; ++r) {
                const T* g = G.row(r);
                const T* xr = X.row(r);
                T* gx = GX.row(r);
                for (int j = 0; j < W.cols; ++j) gb[j] += g[j];
                for (int k = 0; k < X.cols; ++k) {
                    const T* wk = w + static_cast<std::size_t>(k) * W.cols;
                    T* gwk = gw + static_cast<std::size_t>(k) * W.cols;
                    const T xv = xr[k];
                    if (xv != T(0))
                        for (int j = 0; j < W.cols; ++j) gwk[j] += xv * g[j];
                    gx[k] += dot(g, wk, W.cols);
                }
            }
        });
    }

    // Rows idx[r] of a parameter table.
    Var gather(ParamSlot table, std::vector<int> idx) {
        Mat Y(static_cast<int>(idx.size()), table.cols);
        for (int r = 0; r < Y.rows; ++r) {
            require(idx[static_cast<std::size_t>(r)] >= 0 && idx[static_cast<std::size_t>(r)] < table.rows,
                    "gather: index out of range");
            const T* src = params_.data() + table.offset + static_cast<std::size_t>(idx[static_cast<std::size_t>(r)]) * table.cols;
            std::copy(src, src + table.cols, Y.row(r));
        }
        return push(std::move(Y), [table, idx = std::move(idx)](Tape& t, std::size_t self) {
            const Mat& G = t.nodes_[self].grad;
            for (int r = 0; r < G.rows; ++r) {
                T* dst = t.grads_.data() + table.offset + static_cast<std::size_t>(idx[static_cast<std::size_t>(r)]) * table.cols;
                const T* g = G.row(r);
                for (int j = 0; j < G.cols; ++j) dst[j] += g[j];
            }
        });
    }

    Var concat_rows(Var a, Var b) {
        const Mat& A = value(a);
        const Mat& B = value(b);
        require(A.cols == B.cols, "concat_rows: column mismatch");
        Mat Y(A.rows + B.rows, A.cols);
        std::copy(A.data.begin(), A.data.end(), Y.data.begin());
        std::copy(B.data.begin(), B.data.end(), Y.data.begin() + static_cast<std::ptrdiff_t>(A.data.size()));
        return push(std::move(Y), [a, b](Tape& t, std::size_t self) {
            const Mat& G = t.nodes_[self].grad;
            Mat& GA = t.grad(a);
            Mat& GB = t.grad(b);
            for (std::size_t i = 0; i < GA.data.size(); ++i) GA.data[i] += G.data[i];
            for (std::size_t i = 0; i < GB.data.size(); ++i) GB.data[i] += G.data[GA.data.size() + i];
        });
    }

    // x + P[0:rows] for a parameter matrix P with at least x.rows rows.
    Var add_param_rows(Var x, ParamSlot P) {
        const Mat& X = value(x);
        require(X.cols == P.cols && X.rows <= P.rows, "add_param_rows: shape mismatch");
        Mat Y = X;
        const T* p = params_.data() + P.offset;
        for (std::size_t i = 0; i < Y.data.size(); ++i) Y.data[i] += p[i];
        return push(std::move(Y), [x, P](Tape& t, std::size_t self) {
            const Mat& G = t.nodes_[self].grad;
            Mat& GX = t.grad(x);
            T* gp = t.grads_.data() + P.offset;
            for (std::size_t i = 0; i < G.data.size(); ++i) {
                GX.data[i] += G.data[i];
                gp[i] += G.data[i];
            }
        });
    }

    Var add(Var a, Var b) {
        const Mat& A = value(a);
        const Mat& B = value(b);
        require(A.rows == B.rows && A.cols == B.cols, "add: shape mismatch");
        Mat Y = A;
        for (std::size_t i = 0; i < Y.data.size(); ++i) Y.data[i] += B.data[i];
        return push(std::move(Y), [a, b](Tape& t, std::size_t self) {
            const Mat& G = t.nodes_[self].grad;
            Mat& GA = t.grad(a);
            Mat& GB = t.grad(b);
            for (std::size_t i = 0; i < G.data.size(); ++i) {
                GA.data[i] += G.data[i];
                GB.data[i] += G.data[i];
            }
        });
    }

    Var scale(Var x, T s) {
        Mat Y = value(x);
        for (auto& v : Y.data) v *= s;
        return push(std::move(Y), [x, s](Tape& t, std::size_t self) {
            const Mat& G = t.nodes_[self].grad;
            Mat& GX = t.grad(x);
            for (std::size_t i = 0; i < G.data.size(); ++i) GX.data[i] += s * G.data[i];
        });
    }

    Var tanh(Var x) {
        Mat Y = value(x);
        for (auto& v : Y.data) v = std::tanh(v);
        return push(std::move(Y), [x](Tape& t, std::size_t self) {
            const Mat& G = t.nodes_[self].grad;
            const Mat& Yv = t.nodes_[self].value;
            Mat& GX = t.grad(x);
            for (std::size_t i = 0; i < G.data.size(); ++i) GX.data[i] += G.data[i] * (T(1) - Yv.data[i] * Yv.data[i]);
        });
    }

    // tanh approximation of GELU.
    Var gelu(Var x) {
        static const T c = std::sqrt(T(2) / T(3.14159265358979323846264338327950288L));
        const Mat& X = value(x);
        Mat Y(X.rows, X.cols);
        for (std::size_t i = 0; i < X.data.size(); ++i) {
            const T v = X.data[i];
            Y.data[i] = T(0.5) * v * (T(1) + std::tanh(c * (v + T(0.044715) * v * v * v)));
        }
        return push(std::move(Y), [x](Tape& t, std::size_t self) {
            const Mat& G = t.nodes_[self].grad;
            const Mat& X = t.value(x);
            Mat& GX = t.grad(x);
            for (std::size_t i = 0; i < G.data.size(); ++i) {
                const T v = X.data[i];
                const T u = c * (v + T(0.044715) * v * v * v);
                const T th = std::tanh(u);
                const T du = c * (T(1) + T(3) * T(0.044715) * v * v);
                const T d = T(0.5) * (T(1) + th) + T(0.5) * v * (T(1) - th * th) * du;
                GX.data[i] += G.data[i] * d;
            }
        });
    }

    Var layer_norm(Var x, ParamSlot gain, ParamSlot bias, T eps = T(1e-5)) {
        const Mat& X = value(x);
        require(gain.size() == static_cast<std::size_t>(X.cols) && bias.size() == gain.size(), "layer_norm: shape mismatch");
        Mat Y(X.rows, X.cols);
        Mat xhat(X.rows, X.cols);
        std::vector<T> inv_std(static_cast<std::size_t>(X.rows));
        const T* g = params_.data() + gain.offset;
        const T* b = params_.data() + bias.offset;
        const T n = T(X.cols);
        for (int r = 0; r < X.rows; ++r) {
            const T* xr = X.row(r);
            T mu = T(0);
            for (int j = 0; j < X.cols; ++j) mu += xr[j];
            mu /= n;
            T var = T(0);
            for (int j = 0; j < X.cols; ++j) var += (xr[j] - mu) * (xr[j] - mu);
            var /= n;
            const T is = T(1) / std::sqrt(var + eps);
            inv_std[static_cast<std::size_t>(r)] = is;
            for (int j = 0; j < X.cols; ++j) {
                xhat(r, j) = (xr[j] - mu) * is;
                Y(r, j) = xhat(r, j) * g[j] + b[j];
            }
        }
        return push(std::move(Y), [x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t, std::size_t self) {
            const Mat& G = t.nodes_[self].grad;
            Mat& GX = t.grad(x);
            const T* g = t.params_.data() + gain.offset;
            T* gg = t.grads_.data() + gain.offset;
            T* gb = t.grads_.data() + bias.offset;
            const T n = T(G.cols);
            std::vector<T> gxhat(static_cast<std::size_t>(G.cols));
            for (int r = 0; r < G.rows; ++r) {
                T mean_g = T(0), mean_gx = T(0);
                for (int j = 0; j < G.cols; ++j) {
                    const T gv = G(r, j);
                    gg[j] += gv * xhat(r, j);
                    gb[j] += gv;
                    gxhat[static_cast<std::size_t>(j)] = gv * g[j];
                    mean_g += gxhat[static_cast<std::size_t>(j)];
                    mean_gx += gxhat[static_cast<std::size_t>(j)] * xhat(r, j);
                }
                mean_g /= n;
                mean_gx /= n;
                const T is = inv_std[static_cast<std::size_t>(r)];
                for (int j = 0; j < G.cols; ++j)
                    GX(r, j) += is * (gxhat[static_cast<std::size_t>(j)] - mean_g - xhat(r, j) * mean_gx);
            }
        });
    }

    // A B
    Var matmul(Var a, Var b) {
        const Mat& A = value(a);
        const Mat& B = value(b);
        require(A.cols == B.rows, "matmul: shape mismatch");
        Mat Y(A.rows, B.cols);
        for (int r = 0; r < A.rows; ++r)
            for (int k = 0; k < A.cols; ++k) {
                const T av = A(r, k);
                if (av == T(0)) continue;
                const T* bk = B.row(k);
                T* y = Y.row(r);
                for (int j = 0; j < B.cols; ++j) y[j] += av * bk[j];
            }
        return push(std::move(Y), [a, b](Tape& t, std::size_t self) {
            const Mat& G = t.nodes_[self].grad;
            const Mat& A = t.value(a);
            const Mat& B = t.value(b);
            Mat& GA = t.grad(a);
            Mat& GB = t.grad(b);
            for (int r = 0; r < A.rows; ++r)
                for (int k = 0; k < A.cols; ++k) {
                    const T* bk = B.row(k);
                    const T* g = G.row(r);
                    T* gbk = GB.row(k);
                    const T av = A(r, k);
                    T acc = T(0);
                    for (int j = 0; j < B.cols; ++j) {
                        acc += g[j] * bk[j];
                        gbk[j] += av * g[j];
                    }
                    GA(r, k) += acc;
                }
        });
    }

    // A B^T
    Var matmul_nt(Var a, Var b) {
        const Mat& A = value(a);
        const Mat& B = value(b);
        require(A.cols == B.cols, "matmul_nt: shape mismatch");
        Mat Y(A.rows, B.rows);
        for (int r = 0; r < A.rows; ++r)
            for (int c = 0; c < B.rows; ++c) {
                T acc = T(0);
                const T* ar = A.row(r);
                const T* bc = B.row(c);
                for (int k = 0; k < A.cols; ++k) acc += ar[k] * bc[k];
                Y(r, c) = acc;
            }
        return push(std::move(Y), [a, b](Tape& t, std::size_t self) {
            const Mat& G = t.nodes_[self].grad;
            const Mat& A = t.value(a);
            const Mat& B = t.value(b);
            Mat& GA = t.grad(a);
            Mat& GB = t.grad(b);
            for (int r = 0; r < A.rows; ++r)
                for (int c = 0; c < B.rows; ++c) {
                    const T g = G(r, c);
                    if (g == T(0)) continue;
                    const T* ar = A.row(r);
                    const T* bc = B.row(c);
                    T* gar = GA.row(r);
                    T* gbc = GB.row(c);
                    for (int k = 0; k < A.cols; ++k) {
                        gar[k] += g * bc[k];
                        gbc[k] += g * ar[k];
                    }
                }
        });
    }

    // Row-wise softmax restricted to allowed[r * cols + c]; a row with no
    // allowed entry yields zeros. Disallowed entries are exactly zero, so
    // they cannot leak into downstream products.
    Var masked_softmax(Var x, std::vector<char> allowed) {
        const Mat& X = value(x);
        require(allowed.size() == X.data.size(), "masked_softmax: mask size mismatch");
        Mat Y(X.rows, X.cols);
        for (int r = 0; r < X.rows; ++r) {
            const char* ok = allowed.data() + static_cast<std::size_t>(r) * X.cols;
            bool any = false;
            T mx = T(0);
            for (int c = 0; c < X.cols; ++c)
                if (ok[c] && (!any || X(r, c) > mx)) {
                    mx = X(r, c);
                    any = true;
                }
            if (!any) continue;
            T sum = T(0);
            for (int c = 0; c < X.cols; ++c)
                if (ok[c]) {
                    Y(r, c) = std::exp(X(r, c) - mx);
                    sum += Y(r, c);
                }
            for (int c = 0; c < X.cols; ++c) Y(r, c) /= sum;
        }
        return push(std::move(Y), [x](Tape& t, std::size_t self) {
            const Mat& G = t.nodes_[self].grad;
            const Mat& P = t.nodes_[self].value;
            Mat& GX = t.grad(x);
            for (int r = 0; r < P.rows; ++r) {
                T dot = T(0);
                for (int c = 0; c < P.cols; ++c) dot += G(r, c) * P(r, c);
                for (int c = 0; c < P.cols; ++c) GX(r, c) += P(r, c) * (G(r, c) - dot);
            }
        });
    }

    Var row(Var x, int r) {
        const Mat& X = value(x);
        require(r >= 0 && r < X.rows, "row: index out of range");
        Mat Y(1, X.cols);
        std::copy(X.row(r), X.row(r) + X.cols, Y.row(0));
        return push(std::move(Y), [x, r](Tape& t, std::size_t self) {
            const Mat& G = t.nodes_[self].grad;
            T* gx = t.grad(x).row(r);
            for (int j = 0; j < G.cols; ++j) gx[j] += G(0, j);
        });
    }

    // Caller seeds grad() of the output nodes first.
    void backward() {
        require(record_, "backward on a tape that was not recording");
        for (std::size_t i = nodes_.size(); i-- > 0;)
            if (nodes_[i].back) nodes_[i].back(*this, i);
    }

private:
    struct Node {
        Mat value;
        Mat grad;
        std::function<void(Tape&, std::size_t)> back;
    };

    Var push(Mat value, std::function<void(Tape&, std::size_t)> back) {
        Node n;
        if (record_) {
            n.grad = Mat(value.rows, value.cols);
            n.back = std::move(back);
        }
        n.value = std::move(value);
        nodes_.push_back(std::move(n));
        return Var{nodes_.size() - 1};
    }

    std::span<const T> params_;
    std::span<T> grads_;
    bool record_;
    std::vector<Node> nodes_;
};

}  // namespace arq::ad
