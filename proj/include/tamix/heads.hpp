#pragma once

#include <cmath>
#include <utility>

#include "tamix/nn/linear.hpp"
#include "tamix/tam.hpp"

namespace tamix {

inline constexpr std::size_t kAuDims = 12;
inline constexpr std::size_t kVaDims = 2;
inline constexpr std::size_t kAhDims = 1;
inline constexpr std::size_t kEmiDims = 6;

//! Raw task outputs per batch: frame-level AU/VA/AH plus the sequence-level
//! mimicry-intensity vector.
template <typename T>
struct TaskOutput {
    Tensor<T> au_logits; // (B, T, 12)
    Tensor<T> va;        // (B, T, 2), squashed into (-1, 1)
    Tensor<T> ah_logits; // (B, T, 1)
    Tensor<T> emi;       // (B, 6)
};

template <typename T>
struct TaskOutputGrad {
    Tensor<T> au_logits, va, ah_logits, emi;
};

//! Affine task heads over the aggregated features. Frame-level heads read
//! per_frame; the sequence-level head reads per_sequence only.
template <typename T>
class Heads {
public:
    struct State {
        typename nn::Linear<T>::State au, va, ah, emi;
        Tensor<T> va_out; // post-squash values, reused for the tanh gradient
    };

    void setup(std::size_t in_dim, std::uint64_t seed) {
        in_dim_ = in_dim;
        au_.setup("heads.au", in_dim, kAuDims, seed);
        va_.setup("heads.va", in_dim, kVaDims, seed);
        ah_.setup("heads.ah", in_dim, kAhDims, seed);
        emi_.setup("heads.emi", in_dim, kEmiDims, seed);
    }

    TaskOutput<T> forward(const AggregatedFeatures<T>& agg, State* st) const {
        if (agg.per_frame.dim(2) != in_dim_)
            throw compute_error("heads: feature dim " +
                                std::to_string(agg.per_frame.dim(2)) +
                                " != configured " + std::to_string(in_dim_));
        TaskOutput<T> out;
        out.au_logits = au_.forward(agg.per_frame, st ? &st->au : nullptr);
        Tensor<T> va_pre = va_.forward(agg.per_frame, st ? &st->va : nullptr);
        out.va = Tensor<T>(va_pre.shape());
        for (std::size_t i = 0; i < va_pre.size(); ++i)
            out.va[i] = std::tanh(va_pre[i]);
        out.ah_logits = ah_.forward(agg.per_frame, st ? &st->ah : nullptr);
        out.emi = emi_.forward(agg.per_sequence, st ? &st->emi : nullptr);
        if (st) st->va_out = out.va;
        return out;
    }

    //! Returns (grad per_frame, grad per_sequence).
    std::pair<Tensor<T>, Tensor<T>> backward(const TaskOutputGrad<T>& g,
                                             const State& st) {
        Tensor<T> g_frame = au_.backward(g.au_logits, st.au);
        Tensor<T> g_va(g.va.shape());
        for (std::size_t i = 0; i < g_va.size(); ++i)
            g_va[i] = g.va[i] * (T(1) - st.va_out[i] * st.va_out[i]);
        g_frame += va_.backward(g_va, st.va);
        g_frame += ah_.backward(g.ah_logits, st.ah);
        Tensor<T> g_seq = emi_.backward(g.emi, st.emi);
        return {std::move(g_frame), std::move(g_seq)};
    }

    void collect(nn::ParamRefs<T>& into) {
        au_.collect(into);
        va_.collect(into);
        ah_.collect(into);
        emi_.collect(into);
    }

    nn::Linear<T>& au() { return au_; }
    nn::Linear<T>& va() { return va_; }
    nn::Linear<T>& ah() { return ah_; }
    nn::Linear<T>& emi() { return emi_; }

private:
    std::size_t in_dim_ = 0;
    nn::Linear<T> au_, va_, ah_, emi_;
};

} // namespace tamix
