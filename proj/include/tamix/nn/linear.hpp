#pragma once

#include <string>

#include "tamix/nn/parameter.hpp"

namespace tamix::nn {

//! Affine map on the last axis: y = x W + b with W of shape (in, out).
//! Forward is const; per-call activations live in the caller-owned State so
//! the same layer can serve concurrent batches.
template <typename T>
struct Linear {
    Param<T> weight;
    Param<T> bias;
    std::size_t in = 0, out = 0;

    struct State {
        Tensor<T> input; // (rows, in)
    };

    void setup(const std::string& name, std::size_t in_dim, std::size_t out_dim,
               std::uint64_t seed) {
        in = in_dim;
        out = out_dim;
        weight.setup(name + ".w", {in, out});
        bias.setup(name + ".b", {out});
        weight.init_xavier(seed, in, out);
        bias.init_constant(T(0));
    }

    void collect(ParamRefs<T>& into) {
        into.push_back(&weight);
        into.push_back(&bias);
    }

    //! x: any tensor whose last axis is `in`; output keeps the leading axes.
    Tensor<T> forward(const Tensor<T>& x, State* st) const {
        const std::size_t rows = x.size() / in;
        Tensor<T> y(output_shape(x));
        gemm(x.data(), rows, in, weight.value.data(), out, y.data(), false);
        T* yd = y.data();
        const T* b = bias.value.data();
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < out; ++c) yd[r * out + c] += b[c];
        if (st) st->input = x;
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy, const State& st) {
        const std::size_t rows = gy.size() / out;
        gemm_at(st.input.data(), rows, in, gy.data(), out, weight.grad.data(), true);
        const T* g = gy.data();
        T* db = bias.grad.data();
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < out; ++c) db[c] += g[r * out + c];
        Tensor<T> gx(st.input.shape());
        gemm_bt(gy.data(), rows, out, weight.value.data(), in, gx.data(), false);
        return gx;
    }

private:
    Shape output_shape(const Tensor<T>& x) const {
        Shape s = x.shape();
        if (s.empty() || s.back() != in)
            throw compute_error("linear " + weight.name + ": last axis " +
                                shape_str(s) + " != in " + std::to_string(in));
        s.back() = out;
        return s;
    }
};

} // namespace tamix::nn
