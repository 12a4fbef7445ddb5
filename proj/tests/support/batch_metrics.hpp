#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

// Direct two-pass evaluation of the benchmark metrics on full arrays. This is
// the independent oracle the streaming accumulators are checked against; it
// deliberately shares no code with the library implementation.

namespace tamix_test {

struct BatchAgreement {
    double pearson = 0, ccc = 0;
};

inline BatchAgreement batch_agreement(const std::vector<double>& x,
                                      const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double vx = 0, vy = 0, cov = 0;
    for (std::size_t i = 0; i < n; ++i) {
        vx += (x[i] - mx) * (x[i] - mx);
        vy += (y[i] - my) * (y[i] - my);
        cov += (x[i] - mx) * (y[i] - my);
    }
    vx /= static_cast<double>(n);
    vy /= static_cast<double>(n);
    cov /= static_cast<double>(n);
    BatchAgreement out;
    out.pearson = (vx < 1e-12 || vy < 1e-12) ? 0.0 : cov / std::sqrt(vx * vy);
    const double den = vx + vy + (mx - my) * (mx - my);
    out.ccc = den < 1e-12 ? 0.0 : 2.0 * cov / den;
    return out;
}

inline double batch_f1(const std::vector<bool>& pred, const std::vector<bool>& label) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] && label[i]) ++tp;
        if (pred[i] && !label[i]) ++fp;
        if (!pred[i] && label[i]) ++fn;
    }
    if (tp == 0) return 0.0;
    const double precision = tp / (tp + fp);
    const double recall = tp / (tp + fn);
    if (precision + recall == 0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

} // namespace tamix_test
