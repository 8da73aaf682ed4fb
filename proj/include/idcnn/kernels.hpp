#pragma once

// OpenMP-parallel compute kernels. Every kernel is deterministic regardless
// of thread count: parallel loops are arranged so each output element has a
// single writer, and scalar reductions fold fixed-order partials serially.
// A naive serial mirror of each kernel lives in idcnn/serial.hpp; the test
// suite checks the two against each other and tools/bench.cpp compares their
// throughput.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "idcnn/tensor.hpp"

namespace idcnn {

// ---------------------------------------------------------------------------
// 3x3 convolution (cross-correlation), stride 1, zero padding 1.
//
// The hot loop handles one kernel row (3 taps) fused over a contiguous span
// of the output plane. Output pixels in the x = 0 / x = W-1 columns pick up a
// bogus wrapped-neighbor term from the span pass; a cheap fixup pass removes
// it and adds the few span-end elements the main pass skipped.
// ---------------------------------------------------------------------------

namespace detail {

// out_plane += 3x3 taps of k applied to in_plane (one image channel pair).
template <typename T>
inline void conv3x3_accumulate_plane(const T* in_plane, const T* k, T* out_plane, int h, int w) {
    const std::ptrdiff_t hw = static_cast<std::ptrdiff_t>(h) * w;
    for (int dy = -1; dy <= 1; ++dy) {
        const T w0 = k[(dy + 1) * 3 + 0];
        const T w1 = k[(dy + 1) * 3 + 1];
        const T w2 = k[(dy + 1) * 3 + 2];
        const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(dy) * w;
        // i such that in indices i+off-1 .. i+off+1 are all inside the plane
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, 1 - off);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(hw, hw - 1 - off);
        const T* xs = in_plane + off;
#pragma GCC ivdep
        for (std::ptrdiff_t i = lo; i < hi; ++i)
            out_plane[i] += w0 * xs[i - 1] + w1 * xs[i] + w2 * xs[i + 1];
        // Remove the wrapped terms the span pass added at the x edges.
        for (int y = 0; y < h; ++y) {
            const std::ptrdiff_t i0 = static_cast<std::ptrdiff_t>(y) * w;
            const std::ptrdiff_t i1 = i0 + w - 1;
            if (i0 >= lo && i0 < hi) out_plane[i0] -= w0 * xs[i0 - 1];
            if (i1 >= lo && i1 < hi) out_plane[i1] -= w2 * xs[i1 + 1];
        }
        // Elements outside [lo, hi) whose source row is still in range.
        auto patch = [&](std::ptrdiff_t i) {
            const int y = static_cast<int>(i / w);
            const int x = static_cast<int>(i % w);
            if (y + dy < 0 || y + dy >= h) return;
            T acc = T(0);
            if (x > 0) acc += w0 * xs[i - 1];
            acc += w1 * xs[i];
            if (x < w - 1) acc += w2 * xs[i + 1];
            out_plane[i] += acc;
        };
        for (std::ptrdiff_t i = 0; i < std::min<std::ptrdiff_t>(lo, hw); ++i) patch(i);
        for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(hi, 0); i < hw; ++i) patch(i);
    }
}

// grad_k[0..8] += correlation of upstream plane with in plane at the 9 taps.
template <typename T>
inline void conv3x3_weight_grad_plane(const T* in_plane, const T* up_plane, T* grad_k, int h, int w) {
    const std::ptrdiff_t hw = static_cast<std::ptrdiff_t>(h) * w;
    for (int dy = -1; dy <= 1; ++dy) {
        const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(dy) * w;
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, 1 - off);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(hw, hw - 1 - off);
        const T* xs = in_plane + off;
        T g0 = T(0), g1 = T(0), g2 = T(0);
#pragma GCC ivdep
        for (std::ptrdiff_t i = lo; i < hi; ++i) {
            const T u = up_plane[i];
            g0 += u * xs[i - 1];
            g1 += u * xs[i];
            g2 += u * xs[i + 1];
        }
        for (int y = 0; y < h; ++y) {
            const std::ptrdiff_t i0 = static_cast<std::ptrdiff_t>(y) * w;
            const std::ptrdiff_t i1 = i0 + w - 1;
            if (i0 >= lo && i0 < hi) g0 -= up_plane[i0] * xs[i0 - 1];
            if (i1 >= lo && i1 < hi) g2 -= up_plane[i1] * xs[i1 + 1];
        }
        auto patch = [&](std::ptrdiff_t i) {
            const int y = static_cast<int>(i / w);
            const int x = static_cast<int>(i % w);
            if (y + dy < 0 || y + dy >= h) return;
            const T u = up_plane[i];
            if (x > 0) g0 += u * xs[i - 1];
            g1 += u * xs[i];
            if (x < w - 1) g2 += u * xs[i + 1];
        };
        for (std::ptrdiff_t i = 0; i < std::min<std::ptrdiff_t>(lo, hw); ++i) patch(i);
        for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(hi, 0); i < hw; ++i) patch(i);
        grad_k[(dy + 1) * 3 + 0] += g0;
        grad_k[(dy + 1) * 3 + 1] += g1;
        grad_k[(dy + 1) * 3 + 2] += g2;
    }
}

}  // namespace detail

// out(n,co) = bias[co] + sum_ci conv3x3(x(n,ci), weights[co][ci])
// weights layout: (c_out, c_in, 3, 3) row-major.
template <typename T>
void conv2d_forward_kernel(const Tensor4<T>& x, const T* weights, const T* bias, int c_out,
                           Tensor4<T>& out) {
    const int c_in = x.c;
    out = Tensor4<T>(x.n, c_out, x.h, x.w);
    const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(x.n) * c_out;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t t = 0; t < total; ++t) {
        const int in = static_cast<int>(t / c_out);
        const int co = static_cast<int>(t % c_out);
        T* o = out.channel(in, co);
        std::fill(o, o + out.plane(), bias[co]);
        for (int ci = 0; ci < c_in; ++ci)
            detail::conv3x3_accumulate_plane(x.channel(in, ci),
                                             weights + (static_cast<std::size_t>(co) * c_in + ci) * 9,
                                             o, x.h, x.w);
    }
}

// Gradient w.r.t. the conv input: full correlation of upstream with the
// 180-degree-rotated kernels, summed over output channels.
template <typename T>
void conv2d_backward_input_kernel(const Tensor4<T>& upstream, const T* weights, int c_in,
                                  Tensor4<T>& dx) {
    const int c_out = upstream.c;
    dx = Tensor4<T>(upstream.n, c_in, upstream.h, upstream.w);
    const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(upstream.n) * c_in;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t t = 0; t < total; ++t) {
        const int in = static_cast<int>(t / c_in);
        const int ci = static_cast<int>(t % c_in);
        T* o = dx.channel(in, ci);
        for (int co = 0; co < c_out; ++co) {
            const T* k = weights + (static_cast<std::size_t>(co) * c_in + ci) * 9;
            T kflip[9];
            for (int i = 0; i < 9; ++i) kflip[i] = k[8 - i];
            detail::conv3x3_accumulate_plane(upstream.channel(in, co), kflip, o,
                                             upstream.h, upstream.w);
        }
    }
}

// Gradients w.r.t. weights and bias. Each output channel is owned by one
// thread and accumulated serially over the batch, keeping the result
// independent of the thread count.
template <typename T>
void conv2d_backward_params_kernel(const Tensor4<T>& x, const Tensor4<T>& upstream,
                                   T* grad_weights, T* grad_bias) {
    const int c_in = x.c;
    const int c_out = upstream.c;
    const std::ptrdiff_t plane = static_cast<std::ptrdiff_t>(x.h) * x.w;
#pragma omp parallel for schedule(static)
    for (int co = 0; co < c_out; ++co) {
        T* gw = grad_weights + static_cast<std::size_t>(co) * c_in * 9;
        std::fill(gw, gw + static_cast<std::size_t>(c_in) * 9, T(0));
        T gb = T(0);
        for (int in = 0; in < x.n; ++in) {
            const T* up = upstream.channel(in, co);
            for (std::ptrdiff_t i = 0; i < plane; ++i) gb += up[i];
            for (int ci = 0; ci < c_in; ++ci)
                detail::conv3x3_weight_grad_plane(x.channel(in, ci), up, gw + ci * 9, x.h, x.w);
        }
        grad_bias[co] = gb;
    }
}

// ---------------------------------------------------------------------------
// Batch normalization over (N, H, W) per channel.
// ---------------------------------------------------------------------------

template <typename T>
struct BatchNormCache {
    std::vector<T> inv_std;  // 1 / sqrt(var + eps) per channel
    Tensor4<T> normalized;   // x_hat before gamma/beta
};

// Training-mode forward: normalize by batch statistics (biased variance) and
// report them so the caller can fold them into the running averages.
template <typename T>
void batchnorm_forward_train_kernel(const Tensor4<T>& x, const T* gamma, const T* beta, T eps,
                                    Tensor4<T>& out, BatchNormCache<T>& cache,
                                    std::vector<T>& batch_mean, std::vector<T>& batch_var) {
    const int C = x.c;
    const std::ptrdiff_t plane = static_cast<std::ptrdiff_t>(x.h) * x.w;
    const T m = static_cast<T>(static_cast<double>(x.n) * plane);
    out = Tensor4<T>(x.n, x.c, x.h, x.w);
    cache.normalized = Tensor4<T>(x.n, x.c, x.h, x.w);
    cache.inv_std.assign(C, T(0));
    batch_mean.assign(C, T(0));
    batch_var.assign(C, T(0));
#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) {
        T sum = T(0);
        for (int in = 0; in < x.n; ++in) {
            const T* p = x.channel(in, c);
            for (std::ptrdiff_t i = 0; i < plane; ++i) sum += p[i];
        }
        const T mean = sum / m;
        T var_sum = T(0);
        for (int in = 0; in < x.n; ++in) {
            const T* p = x.channel(in, c);
            for (std::ptrdiff_t i = 0; i < plane; ++i) {
                const T d = p[i] - mean;
                var_sum += d * d;
            }
        }
        const T var = var_sum / m;
        const T inv = T(1) / std::sqrt(var + eps);
        batch_mean[c] = mean;
        batch_var[c] = var;
        cache.inv_std[c] = inv;
        for (int in = 0; in < x.n; ++in) {
            const T* p = x.channel(in, c);
            T* q = cache.normalized.channel(in, c);
            T* o = out.channel(in, c);
            const T g = gamma[c], b = beta[c];
#pragma GCC ivdep
            for (std::ptrdiff_t i = 0; i < plane; ++i) {
                const T xn = (p[i] - mean) * inv;
                q[i] = xn;
                o[i] = g * xn + b;
            }
        }
    }
}

template <typename T>
void batchnorm_forward_eval_kernel(const Tensor4<T>& x, const T* gamma, const T* beta,
                                   const T* run_mean, const T* run_var, T eps, Tensor4<T>& out) {
    const int C = x.c;
    const std::ptrdiff_t plane = static_cast<std::ptrdiff_t>(x.h) * x.w;
    out = Tensor4<T>(x.n, x.c, x.h, x.w);
    const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(x.n) * C;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t t = 0; t < total; ++t) {
        const int in = static_cast<int>(t / C);
        const int c = static_cast<int>(t % C);
        const T inv = T(1) / std::sqrt(run_var[c] + eps);
        const T g = gamma[c], b = beta[c], mu = run_mean[c];
        const T* p = x.channel(in, c);
        T* o = out.channel(in, c);
#pragma GCC ivdep
        for (std::ptrdiff_t i = 0; i < plane; ++i) o[i] = g * (p[i] - mu) * inv + b;
    }
}

// Backward through training-mode batch norm.
template <typename T>
void batchnorm_backward_kernel(const Tensor4<T>& upstream, const BatchNormCache<T>& cache,
                               const T* gamma, Tensor4<T>& dx, T* dgamma, T* dbeta) {
    const int C = upstream.c;
    const std::ptrdiff_t plane = static_cast<std::ptrdiff_t>(upstream.h) * upstream.w;
    const T m = static_cast<T>(static_cast<double>(upstream.n) * plane);
    dx = Tensor4<T>(upstream.n, upstream.c, upstream.h, upstream.w);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) {
        T sum_dy = T(0), sum_dy_xn = T(0);
        for (int in = 0; in < upstream.n; ++in) {
            const T* dy = upstream.channel(in, c);
            const T* xn = cache.normalized.channel(in, c);
            for (std::ptrdiff_t i = 0; i < plane; ++i) {
                sum_dy += dy[i];
                sum_dy_xn += dy[i] * xn[i];
            }
        }
        dgamma[c] = sum_dy_xn;
        dbeta[c] = sum_dy;
        const T scale = gamma[c] * cache.inv_std[c];
        const T mean_dy = sum_dy / m;
        const T mean_dy_xn = sum_dy_xn / m;
        for (int in = 0; in < upstream.n; ++in) {
            const T* dy = upstream.channel(in, c);
            const T* xn = cache.normalized.channel(in, c);
            T* o = dx.channel(in, c);
#pragma GCC ivdep
            for (std::ptrdiff_t i = 0; i < plane; ++i)
                o[i] = scale * (dy[i] - mean_dy - xn[i] * mean_dy_xn);
        }
    }
}

// ---------------------------------------------------------------------------
// Elementwise ops.
// ---------------------------------------------------------------------------

template <typename T>
void relu_kernel(const Tensor4<T>& x, Tensor4<T>& out) {
    out = Tensor4<T>(x.n, x.c, x.h, x.w);
    const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < total; ++i) out.v[i] = x.v[i] > T(0) ? x.v[i] : T(0);
}

// Upstream gradient gated by the forward output (out > 0 <=> pre > 0, and
// the subgradient at exactly 0 is taken as 0 either way).
template <typename T>
void relu_backward_kernel(const Tensor4<T>& upstream, const Tensor4<T>& forward_out,
                          Tensor4<T>& dx) {
    dx = Tensor4<T>(upstream.n, upstream.c, upstream.h, upstream.w);
    const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(upstream.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < total; ++i)
        dx.v[i] = forward_out.v[i] > T(0) ? upstream.v[i] : T(0);
}

// Component-wise division-residual skip: out = y / (n + eps).
template <typename T>
void division_residual_kernel(const Tensor4<T>& y, const Tensor4<T>& n, T eps, Tensor4<T>& out) {
    require_same_shape(y, n, "division_residual");
    out = Tensor4<T>(y.n, y.c, y.h, y.w);
    const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(y.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < total; ++i) out.v[i] = y.v[i] / (n.v[i] + eps);
}

template <typename T>
void tanh_kernel(const Tensor4<T>& x, Tensor4<T>& out) {
    out = Tensor4<T>(x.n, x.c, x.h, x.w);
    const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < total; ++i) out.v[i] = std::tanh(x.v[i]);
}

}  // namespace idcnn
