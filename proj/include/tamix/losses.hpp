#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "tamix/heads.hpp"

namespace tamix {

using Mask = Tensor<std::uint8_t>;

//! Labels with explicit validity masks. Padded frames and unannotated entries
//! carry mask 0 and are excluded from every loss and metric.
template <typename T>
struct LabelBatch {
    Tensor<T> au;
    Mask au_mask; // (B, T, 12)
    Tensor<T> va;
    Mask va_mask; // (B, T, 2)
    Tensor<T> ah;
    Mask ah_mask; // (B, T, 1)
    Tensor<T> emi;
    Mask emi_mask; // (B, 6)
};

struct TaskWeights {
    double au = 0, va = 0, ah = 0, emi = 0;
    bool any() const { return au > 0 || va > 0 || ah > 0 || emi > 0; }
};

struct LossBreakdown {
    double total = 0;
    std::optional<double> au, va, ah, emi;
    std::vector<std::string> skipped; // enabled tasks with no valid entries
};

namespace detail {

//! Numerically stable binary cross-entropy on logits, mean over valid
//! entries. Returns nullopt when nothing is valid.
template <typename T>
std::optional<double> bce_masked(const Tensor<T>& logits, const Tensor<T>& labels,
                                 const Mask& mask, double weight,
                                 Tensor<T>* grad) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) count += mask[i] ? 1 : 0;
    if (count == 0) return std::nullopt;
    double loss = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (!mask[i]) continue;
        const double z = static_cast<double>(logits[i]);
        const double y = static_cast<double>(labels[i]);
        loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    }
    loss /= static_cast<double>(count);
    if (grad) {
        const double scale = weight / static_cast<double>(count);
        for (std::size_t i = 0; i < logits.size(); ++i) {
            if (!mask[i]) continue;
            const double z = static_cast<double>(logits[i]);
            const double sig = 1.0 / (1.0 + std::exp(-z));
            (*grad)[i] += static_cast<T>(scale * (sig - static_cast<double>(labels[i])));
        }
    }
    return loss;
}

//! 1 - CCC per target column, averaged over columns that have at least two
//! valid frames in the batch.
template <typename T>
std::optional<double> ccc_loss_masked(const Tensor<T>& pred, const Tensor<T>& labels,
                                      const Mask& mask, double weight,
                                      Tensor<T>* grad) {
    const std::size_t cols = pred.shape().back();
    const std::size_t rows = pred.size() / cols;
    std::vector<std::vector<std::size_t>> col_idx(cols);
    std::size_t used_cols = 0;
    for (std::size_t c = 0; c < cols; ++c) {
        for (std::size_t r = 0; r < rows; ++r)
            if (mask[r * cols + c]) col_idx[c].push_back(r * cols + c);
        if (col_idx[c].size() >= 2) ++used_cols;
    }
    if (used_cols == 0) return std::nullopt;
    const double col_scale = 1.0 / static_cast<double>(used_cols);
    double loss = 0;
    for (std::size_t c = 0; c < cols; ++c) {
        const auto& idx = col_idx[c];
        const std::size_t n = idx.size();
        if (n < 2) continue;
        double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
        for (std::size_t i : idx) {
            const double x = static_cast<double>(pred[i]);
            const double y = static_cast<double>(labels[i]);
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
            sxy += x * y;
        }
        const double dn = static_cast<double>(n);
        const double mx = sx / dn, my = sy / dn;
        const double vx = sxx / dn - mx * mx, vy = syy / dn - my * my;
        const double cov = sxy / dn - mx * my;
        const double dm = mx - my;
        const double den = vx + vy + dm * dm;
        if (den < 1e-12) {
            loss += col_scale; // agreement undefined; no useful gradient here
            continue;
        }
        const double num = 2.0 * cov;
        loss += col_scale * (1.0 - num / den);
        if (grad) {
            for (std::size_t i : idx) {
                const double x = static_cast<double>(pred[i]);
                const double y = static_cast<double>(labels[i]);
                const double dnum = 2.0 * (y - my) / dn;
                const double dden = 2.0 * (x - mx) / dn + 2.0 * dm / dn;
                const double dccc = (dnum * den - num * dden) / (den * den);
                (*grad)[i] += static_cast<T>(-weight * col_scale * dccc);
            }
        }
    }
    return loss;
}

template <typename T>
std::optional<double> mse_masked(const Tensor<T>& pred, const Tensor<T>& labels,
                                 const Mask& mask, double weight, Tensor<T>* grad) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) count += mask[i] ? 1 : 0;
    if (count == 0) return std::nullopt;
    double loss = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!mask[i]) continue;
        const double r = static_cast<double>(pred[i]) - static_cast<double>(labels[i]);
        loss += r * r;
    }
    loss /= static_cast<double>(count);
    if (grad) {
        const double scale = 2.0 * weight / static_cast<double>(count);
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (!mask[i]) continue;
            (*grad)[i] += static_cast<T>(
                scale * (static_cast<double>(pred[i]) - static_cast<double>(labels[i])));
        }
    }
    return loss;
}

} // namespace detail

template <typename T>
std::optional<double> loss_au(const Tensor<T>& logits, const Tensor<T>& labels,
                              const Mask& mask, Tensor<T>* grad = nullptr,
                              double weight = 1.0) {
    return detail::bce_masked(logits, labels, mask, weight, grad);
}

template <typename T>
std::optional<double> loss_ah(const Tensor<T>& logits, const Tensor<T>& labels,
                              const Mask& mask, Tensor<T>* grad = nullptr,
                              double weight = 1.0) {
    return detail::bce_masked(logits, labels, mask, weight, grad);
}

template <typename T>
std::optional<double> loss_va(const Tensor<T>& pred, const Tensor<T>& labels,
                              const Mask& mask, Tensor<T>* grad = nullptr,
                              double weight = 1.0) {
    return detail::ccc_loss_masked(pred, labels, mask, weight, grad);
}

template <typename T>
std::optional<double> loss_emi(const Tensor<T>& pred, const Tensor<T>& labels,
                               const Mask& mask, Tensor<T>* grad = nullptr,
                               double weight = 1.0) {
    return detail::mse_masked(pred, labels, mask, weight, grad);
}

//! Weighted sum of the enabled task losses. Gradients are written into `g`
//! (pre-zeroed here), already scaled by the task weights. Enabled terms with
//! an empty valid set are dropped and listed in `skipped`.
template <typename T>
LossBreakdown total_loss(const TaskOutput<T>& out, const LabelBatch<T>& labels,
                         const TaskWeights& w, TaskOutputGrad<T>* g = nullptr) {
    LossBreakdown r;
    if (g) {
        g->au_logits = Tensor<T>(out.au_logits.shape());
        g->va = Tensor<T>(out.va.shape());
        g->ah_logits = Tensor<T>(out.ah_logits.shape());
        g->emi = Tensor<T>(out.emi.shape());
    }
    if (w.au > 0) {
        r.au = loss_au(out.au_logits, labels.au, labels.au_mask,
                       g ? &g->au_logits : nullptr, w.au);
        if (r.au)
            r.total += w.au * *r.au;
        else
            r.skipped.push_back("au");
    }
    if (w.va > 0) {
        r.va = loss_va(out.va, labels.va, labels.va_mask, g ? &g->va : nullptr, w.va);
        if (r.va)
            r.total += w.va * *r.va;
        else
            r.skipped.push_back("va");
    }
    if (w.ah > 0) {
        r.ah = loss_ah(out.ah_logits, labels.ah, labels.ah_mask,
                       g ? &g->ah_logits : nullptr, w.ah);
        if (r.ah)
            r.total += w.ah * *r.ah;
        else
            r.skipped.push_back("ah");
    }
    if (w.emi > 0) {
        r.emi = loss_emi(out.emi, labels.emi, labels.emi_mask, g ? &g->emi : nullptr,
                         w.emi);
        if (r.emi)
            r.total += w.emi * *r.emi;
        else
            r.skipped.push_back("emi");
    }
    return r;
}

} // namespace tamix
