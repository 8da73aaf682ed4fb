#pragma once

#include <cstddef>
#include <vector>

#include "idcnn/errors.hpp"

namespace idcnn {

// Dense rank-4 array in (batch, channel, height, width) order, row-major.
// The optional grad buffer, when allocated, mirrors the value shape.
template <typename T>
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> v;
    std::vector<T> grad;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_, T fill = T(0))
        : n(n_), c(c_), h(h_), w(w_), v(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

    std::size_t size() const { return v.size(); }
    std::size_t plane() const { return static_cast<std::size_t>(h) * w; }

    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    T* channel(int in, int ic) {
        return v.data() + (static_cast<std::size_t>(in) * c + ic) * plane();
    }
    const T* channel(int in, int ic) const {
        return v.data() + (static_cast<std::size_t>(in) * c + ic) * plane();
    }

    T& at(int in, int ic, int iy, int ix) {
        return v[((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix];
    }
    T at(int in, int ic, int iy, int ix) const {
        return v[((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix];
    }

    bool same_shape(const Tensor4& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    void alloc_grad() { grad.assign(size(), T(0)); }

    template <typename U>
    Tensor4<U> cast() const {
        Tensor4<U> out(n, c, h, w);
        for (std::size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }
};

template <typename T>
inline void require_same_shape(const Tensor4<T>& a, const Tensor4<T>& b, const char* what) {
    if (!a.same_shape(b))
        throw IncompatibleError(std::string(what) + ": tensor shape mismatch");
}

using Tensor4f = Tensor4<float>;
using Tensor4d = Tensor4<double>;

}  // namespace idcnn
