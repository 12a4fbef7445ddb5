#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "tamix/core/error.hpp"

// Streaming evaluation metrics. Accumulators hold mergeable sufficient
// statistics in double precision; merging shards is field-wise addition, so
// sharded evaluation reproduces single-stream results exactly.

namespace tamix::metrics {

inline constexpr double kDenomEps = 1e-12;

struct BinaryCounts {
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

    void add(bool pred, bool label) {
        if (pred && label)
            ++tp;
        else if (pred && !label)
            ++fp;
        else if (!pred && label)
            ++fn;
        else
            ++tn;
    }
    void merge(const BinaryCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
    }
    std::uint64_t total() const { return tp + fp + fn + tn; }
};

//! F1 = 2PR/(P+R); 0 whenever precision+recall degenerates (tp = 0 included).
inline double f1(const BinaryCounts& c) {
    const double denom = 2.0 * static_cast<double>(c.tp) + static_cast<double>(c.fp) +
                         static_cast<double>(c.fn);
    if (denom < kDenomEps) return 0.0;
    return 2.0 * static_cast<double>(c.tp) / denom;
}

//! Sufficient statistics for second-order agreement between two streams.
struct MomentStats {
    std::uint64_t n = 0;
    double sum_x = 0, sum_y = 0, sum_xx = 0, sum_yy = 0, sum_xy = 0;

    void add(double x, double y) {
        ++n;
        sum_x += x;
        sum_y += y;
        sum_xx += x * x;
        sum_yy += y * y;
        sum_xy += x * y;
    }
    void merge(const MomentStats& o) {
        n += o.n;
        sum_x += o.sum_x;
        sum_y += o.sum_y;
        sum_xx += o.sum_xx;
        sum_yy += o.sum_yy;
        sum_xy += o.sum_xy;
    }

    double mean_x() const { return sum_x / static_cast<double>(n); }
    double mean_y() const { return sum_y / static_cast<double>(n); }
    // Population variances; no Bessel correction.
    double var_x() const { return sum_xx / static_cast<double>(n) - mean_x() * mean_x(); }
    double var_y() const { return sum_yy / static_cast<double>(n) - mean_y() * mean_y(); }
    double cov() const { return sum_xy / static_cast<double>(n) - mean_x() * mean_y(); }
};

//! Pearson correlation; 0 by convention when either variance vanishes.
inline double pearson(const MomentStats& s) {
    if (s.n < 2) throw compute_error("pearson: need at least 2 samples");
    const double vx = s.var_x(), vy = s.var_y();
    if (vx < kDenomEps || vy < kDenomEps) return 0.0;
    return s.cov() / std::sqrt(vx * vy);
}

//! Concordance correlation: 2*cov / (var_x + var_y + (mean_x - mean_y)^2),
//! population variances; 0 by convention when the denominator vanishes.
inline double ccc(const MomentStats& s) {
    if (s.n < 2) throw compute_error("ccc: need at least 2 samples");
    const double dm = s.mean_x() - s.mean_y();
    const double denom = s.var_x() + s.var_y() + dm * dm;
    if (denom < kDenomEps) return 0.0;
    return 2.0 * s.cov() / denom;
}

inline double pearson_or(const MomentStats& s, double fallback) {
    return s.n < 2 ? fallback : pearson(s);
}
inline double ccc_or(const MomentStats& s, double fallback) {
    return s.n < 2 ? fallback : ccc(s);
}

inline constexpr std::size_t kNumActionUnits = 12;
inline constexpr std::size_t kNumEmiDims = 6;

//! Unweighted mean F1 over the 12 action units.
inline double f_au(const std::array<BinaryCounts, kNumActionUnits>& counts) {
    double s = 0;
    for (const auto& c : counts) s += f1(c);
    return s / static_cast<double>(kNumActionUnits);
}

struct VaScore {
    double valence = 0, arousal = 0, mean = 0;
};

inline VaScore p_va(const MomentStats& v, const MomentStats& a) {
    VaScore s;
    s.valence = ccc(v);
    s.arousal = ccc(a);
    s.mean = 0.5 * (s.valence + s.arousal);
    return s;
}

//! Unweighted mean Pearson over the six emotion dimensions.
inline double p_emi(const std::array<MomentStats, kNumEmiDims>& stats) {
    double s = 0;
    for (const auto& m : stats) s += pearson(m);
    return s / static_cast<double>(kNumEmiDims);
}

//! Everything the evaluator accumulates, mergeable across shards.
struct Accumulator {
    std::array<BinaryCounts, kNumActionUnits> au;
    MomentStats valence;
    MomentStats arousal;
    BinaryCounts ah;
    std::array<MomentStats, kNumEmiDims> emi;

    void merge(const Accumulator& o) {
        for (std::size_t i = 0; i < au.size(); ++i) au[i].merge(o.au[i]);
        valence.merge(o.valence);
        arousal.merge(o.arousal);
        ah.merge(o.ah);
        for (std::size_t i = 0; i < emi.size(); ++i) emi[i].merge(o.emi[i]);
    }
};

struct MetricReport {
    std::array<double, kNumActionUnits> f1_per_au{};
    double f_au = 0;
    double p_valence = 0, p_arousal = 0, p_va = 0;
    std::array<double, kNumEmiDims> pearson_per_emi{};
    double p_emi = 0;
    double f_ah = 0;
    std::uint64_t au_frames = 0, va_frames = 0, ah_frames = 0, emi_sequences = 0;
    bool va_degenerate = false, emi_degenerate = false;
};

//! Assemble the final report. Streams with fewer than two points fall back to
//! the degenerate value 0 and are flagged.
inline MetricReport report_from(const Accumulator& acc) {
    MetricReport r;
    for (std::size_t i = 0; i < acc.au.size(); ++i) {
        r.f1_per_au[i] = f1(acc.au[i]);
        r.au_frames += acc.au[i].total();
    }
    r.f_au = f_au(acc.au);
    r.va_degenerate = acc.valence.n < 2 || acc.arousal.n < 2;
    r.p_valence = ccc_or(acc.valence, 0.0);
    r.p_arousal = ccc_or(acc.arousal, 0.0);
    r.p_va = 0.5 * (r.p_valence + r.p_arousal);
    r.va_frames = acc.valence.n;
    r.f_ah = f1(acc.ah);
    r.ah_frames = acc.ah.total();
    double sum = 0;
    for (std::size_t i = 0; i < acc.emi.size(); ++i) {
        r.emi_degenerate = r.emi_degenerate || acc.emi[i].n < 2;
        r.pearson_per_emi[i] = pearson_or(acc.emi[i], 0.0);
        sum += r.pearson_per_emi[i];
        r.emi_sequences = std::max<std::uint64_t>(r.emi_sequences, acc.emi[i].n);
    }
    r.p_emi = sum / static_cast<double>(kNumEmiDims);
    return r;
}

} // namespace tamix::metrics
