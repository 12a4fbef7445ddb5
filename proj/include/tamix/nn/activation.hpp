#pragma once

#include <cmath>

#include "tamix/core/tensor.hpp"

namespace tamix::nn {

// Exact GELU (erf form). Smooth everywhere, which keeps central finite
// differences well behaved during gradient checks.

template <typename T>
inline T gelu_scalar(T x) {
    return static_cast<T>(0.5) * x *
           (static_cast<T>(1) + std::erf(x * static_cast<T>(M_SQRT1_2)));
}

template <typename T>
inline T gelu_grad_scalar(T x) {
    const T phi =
        std::exp(static_cast<T>(-0.5) * x * x) * static_cast<T>(0.3989422804014327);
    const T Phi = static_cast<T>(0.5) *
                  (static_cast<T>(1) + std::erf(x * static_cast<T>(M_SQRT1_2)));
    return Phi + x * phi;
}

template <typename T>
struct Gelu {
    struct State {
        Tensor<T> input;
    };

    Tensor<T> forward(const Tensor<T>& x, State* st) const {
        Tensor<T> y(x.shape());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = gelu_scalar(x[i]);
        if (st) st->input = x;
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy, const State& st) const {
        Tensor<T> gx(gy.shape());
        for (std::size_t i = 0; i < gy.size(); ++i)
            gx[i] = gy[i] * gelu_grad_scalar(st.input[i]);
        return gx;
    }
};

} // namespace tamix::nn
