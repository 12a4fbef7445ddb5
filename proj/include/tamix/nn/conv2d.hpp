#pragma once

#include <string>

#include "tamix/nn/parameter.hpp"

namespace tamix::nn {

//! Strided 2-D convolution over (N, C, H, W) via im2col + GEMM.
template <typename T>
struct Conv2d {
    Param<T> weight; // (out_ch, in_ch * kh * kw)
    Param<T> bias;   // (out_ch)
    std::size_t in_ch = 0, out_ch = 0, kernel = 3, stride = 2, pad = 1;

    struct State {
        Tensor<T> cols; // (N, out_h * out_w, in_ch * k * k)
        Shape input_shape;
    };

    void setup(const std::string& name, std::size_t ci, std::size_t co,
               std::size_t k, std::size_t s, std::size_t p, std::uint64_t seed) {
        in_ch = ci;
        out_ch = co;
        kernel = k;
        stride = s;
        pad = p;
        weight.setup(name + ".w", {co, ci * k * k});
        bias.setup(name + ".b", {co});
        weight.init_xavier(seed, ci * k * k, co);
        bias.init_constant(T(0));
    }

    void collect(ParamRefs<T>& into) {
        into.push_back(&weight);
        into.push_back(&bias);
    }

    std::size_t out_size(std::size_t in) const {
        return (in + 2 * pad - kernel) / stride + 1;
    }

    Tensor<T> forward(const Tensor<T>& x, State* st) const {
        const std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
        if (x.dim(1) != in_ch)
            throw compute_error("conv " + weight.name + ": channel mismatch");
        const std::size_t oh = out_size(h), ow = out_size(w);
        const std::size_t patch = in_ch * kernel * kernel;
        const std::size_t opix = oh * ow;
        Tensor<T> cols({n, opix, patch});
        Tensor<T> y({n, out_ch, oh, ow});
        for (std::size_t img = 0; img < n; ++img) {
            T* col = cols.data() + img * opix * patch;
            im2col(x.data() + img * in_ch * h * w, h, w, col);
            // (opix, out_ch) = col (opix, patch) * W^T (patch, out_ch)
            Tensor<T> prod({opix, out_ch});
            gemm_bt(col, opix, patch, weight.value.data(), out_ch, prod.data(), false);
            T* yd = y.data() + img * out_ch * opix;
            const T* b = bias.value.data();
            for (std::size_t c = 0; c < out_ch; ++c)
                for (std::size_t pix = 0; pix < opix; ++pix)
                    yd[c * opix + pix] = prod[pix * out_ch + c] + b[c];
        }
        if (st) {
            st->cols = std::move(cols);
            st->input_shape = x.shape();
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy, const State& st) {
        const std::size_t n = gy.dim(0), oh = gy.dim(2), ow = gy.dim(3);
        const std::size_t opix = oh * ow;
        const std::size_t patch = in_ch * kernel * kernel;
        const std::size_t h = st.input_shape[2], w = st.input_shape[3];
        Tensor<T> gx(st.input_shape);
        Tensor<T> gy_t({opix, out_ch}); // per-image (pix, channel) view
        Tensor<T> gcol({opix, patch});
        for (std::size_t img = 0; img < n; ++img) {
            const T* g = gy.data() + img * out_ch * opix;
            for (std::size_t c = 0; c < out_ch; ++c)
                for (std::size_t pix = 0; pix < opix; ++pix)
                    gy_t[pix * out_ch + c] = g[c * opix + pix];
            const T* col = st.cols.data() + img * opix * patch;
            // dW (out_ch, patch) += gy_t^T (out_ch, opix) * col (opix, patch)
            gemm_at(gy_t.data(), opix, out_ch, col, patch, weight.grad.data(), true);
            T* db = bias.grad.data();
            for (std::size_t c = 0; c < out_ch; ++c) {
                T s = 0;
                for (std::size_t pix = 0; pix < opix; ++pix) s += g[c * opix + pix];
                db[c] += s;
            }
            // dcol = gy_t (opix, out_ch) * W (out_ch, patch)
            gemm(gy_t.data(), opix, out_ch, weight.value.data(), patch, gcol.data(),
                 false);
            col2im(gcol.data(), h, w, gx.data() + img * in_ch * h * w);
        }
        return gx;
    }

private:
    void im2col(const T* x, std::size_t h, std::size_t w, T* col) const {
        const std::size_t oh = out_size(h), ow = out_size(w);
        std::size_t o = 0;
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const std::ptrdiff_t y0 =
                    static_cast<std::ptrdiff_t>(oy * stride) - static_cast<std::ptrdiff_t>(pad);
                const std::ptrdiff_t x0 =
                    static_cast<std::ptrdiff_t>(ox * stride) - static_cast<std::ptrdiff_t>(pad);
                for (std::size_t c = 0; c < in_ch; ++c) {
                    const T* plane = x + c * h * w;
                    for (std::size_t ky = 0; ky < kernel; ++ky) {
                        const std::ptrdiff_t yy = y0 + static_cast<std::ptrdiff_t>(ky);
                        for (std::size_t kx = 0; kx < kernel; ++kx) {
                            const std::ptrdiff_t xx = x0 + static_cast<std::ptrdiff_t>(kx);
                            const bool inside = yy >= 0 && xx >= 0 &&
                                                yy < static_cast<std::ptrdiff_t>(h) &&
                                                xx < static_cast<std::ptrdiff_t>(w);
                            col[o++] = inside ? plane[yy * static_cast<std::ptrdiff_t>(w) + xx]
                                              : T(0);
                        }
                    }
                }
            }
        }
    }

    void col2im(const T* gcol, std::size_t h, std::size_t w, T* gx) const {
        const std::size_t oh = out_size(h), ow = out_size(w);
        std::size_t o = 0;
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const std::ptrdiff_t y0 =
                    static_cast<std::ptrdiff_t>(oy * stride) - static_cast<std::ptrdiff_t>(pad);
                const std::ptrdiff_t x0 =
                    static_cast<std::ptrdiff_t>(ox * stride) - static_cast<std::ptrdiff_t>(pad);
                for (std::size_t c = 0; c < in_ch; ++c) {
                    T* plane = gx + c * h * w;
                    for (std::size_t ky = 0; ky < kernel; ++ky) {
                        const std::ptrdiff_t yy = y0 + static_cast<std::ptrdiff_t>(ky);
                        for (std::size_t kx = 0; kx < kernel; ++kx) {
                            const std::ptrdiff_t xx = x0 + static_cast<std::ptrdiff_t>(kx);
                            const bool inside = yy >= 0 && xx >= 0 &&
                                                yy < static_cast<std::ptrdiff_t>(h) &&
                                                xx < static_cast<std::ptrdiff_t>(w);
                            if (inside)
                                plane[yy * static_cast<std::ptrdiff_t>(w) + xx] += gcol[o];
                            ++o;
                        }
                    }
                }
            }
        }
    }
};

} // namespace tamix::nn
