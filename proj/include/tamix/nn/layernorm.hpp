#pragma once

#include <cmath>
#include <string>

#include "tamix/nn/parameter.hpp"

namespace tamix::nn {

//! Standardization over the last axis with learned scale/shift. Used as the
//! pre-normalization in front of every mixing MLP.
template <typename T>
struct LayerNorm {
    Param<T> gamma;
    Param<T> beta;
    std::size_t dim = 0;
    T eps = static_cast<T>(1e-5);

    struct State {
        Tensor<T> xhat;    // (rows, dim)
        Tensor<T> inv_std; // (rows)
    };

    void setup(const std::string& name, std::size_t d) {
        dim = d;
        gamma.setup(name + ".g", {d});
        beta.setup(name + ".b", {d});
        gamma.init_constant(T(1));
        beta.init_constant(T(0));
    }

    void collect(ParamRefs<T>& into) {
        into.push_back(&gamma);
        into.push_back(&beta);
    }

    Tensor<T> forward(const Tensor<T>& x, State* st) const {
        const std::size_t rows = x.size() / dim;
        Tensor<T> y(x.shape());
        Tensor<T> xhat({rows, dim});
        Tensor<T> inv_std({rows});
        const T* xd = x.data();
        const T* g = gamma.value.data();
        const T* b = beta.value.data();
        for (std::size_t r = 0; r < rows; ++r) {
            const T* xr = xd + r * dim;
            T mu = 0;
            for (std::size_t i = 0; i < dim; ++i) mu += xr[i];
            mu /= static_cast<T>(dim);
            T var = 0;
            for (std::size_t i = 0; i < dim; ++i) {
                const T c = xr[i] - mu;
                var += c * c;
            }
            var /= static_cast<T>(dim);
            const T inv = T(1) / std::sqrt(var + eps);
            inv_std[r] = inv;
            for (std::size_t i = 0; i < dim; ++i) {
                const T h = (xr[i] - mu) * inv;
                xhat[r * dim + i] = h;
                y[r * dim + i] = g[i] * h + b[i];
            }
        }
        if (st) {
            st->xhat = std::move(xhat);
            st->inv_std = std::move(inv_std);
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy, const State& st) {
        const std::size_t rows = gy.size() / dim;
        Tensor<T> gx(gy.shape());
        const T* g = gamma.value.data();
        T* dg = gamma.grad.data();
        T* db = beta.grad.data();
        for (std::size_t r = 0; r < rows; ++r) {
            const T* gyr = gy.data() + r * dim;
            const T* xh = st.xhat.data() + r * dim;
            T sum_gg = 0, sum_ggx = 0;
            for (std::size_t i = 0; i < dim; ++i) {
                const T gg = gyr[i] * g[i];
                sum_gg += gg;
                sum_ggx += gg * xh[i];
                dg[i] += gyr[i] * xh[i];
                db[i] += gyr[i];
            }
            const T inv = st.inv_std[r];
            const T mean_gg = sum_gg / static_cast<T>(dim);
            const T mean_ggx = sum_ggx / static_cast<T>(dim);
            T* gxr = gx.data() + r * dim;
            for (std::size_t i = 0; i < dim; ++i) {
                const T gg = gyr[i] * g[i];
                gxr[i] = inv * (gg - mean_gg - xh[i] * mean_ggx);
            }
        }
        return gx;
    }
};

} // namespace tamix::nn
