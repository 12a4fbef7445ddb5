#include <gtest/gtest.h>

#include "tamix/core/rng.hpp"
#include "tamix/metrics.hpp"

#include "support/batch_metrics.hpp"

using namespace tamix;
using namespace tamix::metrics;

TEST(F1, HandEvaluatedCounts) {
    BinaryCounts c{2, 1, 1, 0};
    EXPECT_NEAR(f1(c), 2.0 / 3.0, 1e-12); // P = R = 2/3

    BinaryCounts empty;
    EXPECT_DOUBLE_EQ(f1(empty), 0.0);

    BinaryCounts perfect{10, 0, 0, 5};
    EXPECT_DOUBLE_EQ(f1(perfect), 1.0);
}

TEST(F1, MeanOverActionUnits) {
    std::array<BinaryCounts, kNumActionUnits> counts{};
    for (auto& c : counts) c = BinaryCounts{1, 1, 1, 0}; // each F1 = 0.5
    EXPECT_NEAR(f_au(counts), 0.5, 1e-12);

    for (std::size_t i = 0; i < 6; ++i) counts[i] = BinaryCounts{5, 0, 0, 0}; // F1 = 1
    for (std::size_t i = 6; i < 12; ++i) counts[i] = BinaryCounts{0, 3, 3, 0}; // F1 = 0
    EXPECT_NEAR(f_au(counts), 0.5, 1e-12);
}

TEST(F1, SelfAgreementIsPerfect) {
    Rng rng(404);
    std::array<BinaryCounts, kNumActionUnits> counts{};
    for (int frame = 0; frame < 100; ++frame)
        for (auto& c : counts) {
            const bool label = rng.uniform() < 0.3;
            c.add(label, label);
        }
    EXPECT_DOUBLE_EQ(f_au(counts), 1.0);
}

TEST(Ccc, IdentityAndHandDerivedValue) {
    MomentStats s;
    for (double v : {1.0, 2.0, 3.0, 4.0}) s.add(v, v);
    EXPECT_NEAR(ccc(s), 1.0, 1e-12);

    MomentStats shifted;
    const double xs[] = {1, 2, 3, 4};
    const double ys[] = {2, 3, 4, 5};
    for (int i = 0; i < 4; ++i) shifted.add(xs[i], ys[i]);
    // var = 1.25 each, cov = 1.25, mean gap 1 -> 2*1.25/(1.25+1.25+1) = 5/7
    EXPECT_NEAR(ccc(shifted), 5.0 / 7.0, 1e-15);
    EXPECT_EQ(static_cast<long>(std::llround(ccc(shifted) * 1e6)), 714286L);
}

TEST(Ccc, DegenerateConstantStreams) {
    MomentStats s;
    s.add(2.0, 2.0);
    s.add(2.0, 2.0);
    EXPECT_DOUBLE_EQ(ccc(s), 0.0);

    MomentStats one;
    one.add(1.0, 1.0);
    EXPECT_THROW(ccc(one), compute_error);
}

TEST(Ccc, SymmetricInArguments) {
    Rng rng(7);
    MomentStats ab, ba;
    for (int i = 0; i < 50; ++i) {
        const double a = rng.normal(), b = 0.5 * a + rng.normal();
        ab.add(a, b);
        ba.add(b, a);
    }
    EXPECT_NEAR(ccc(ab), ccc(ba), 1e-14);
}

TEST(Pearson, AffineAndDegenerateCases) {
    MomentStats up, down, flat;
    for (double v : {0.0, 1.0, 2.0, 5.0}) {
        up.add(v, 2.0 * v + 3.0);
        down.add(v, -v);
        flat.add(1.0, v);
    }
    EXPECT_NEAR(pearson(up), 1.0, 1e-12);
    EXPECT_NEAR(pearson(down), -1.0, 1e-12);
    EXPECT_DOUBLE_EQ(pearson(flat), 0.0);
}

TEST(VaScore, MeanOfTwoAgreements) {
    MomentStats perfect, anti;
    for (double v : {1.0, 2.0, 3.0}) {
        perfect.add(v, v);
        anti.add(v, 7.0 - v); // ccc < 0
    }
    VaScore s = p_va(perfect, perfect);
    EXPECT_NEAR(s.mean, 1.0, 1e-12);

    MomentStats derived;
    const double xs[] = {1, 2, 3, 4};
    const double ys[] = {2, 3, 4, 5};
    for (int i = 0; i < 4; ++i) derived.add(xs[i], ys[i]);
    VaScore d = p_va(derived, derived);
    EXPECT_NEAR(d.mean, 5.0 / 7.0, 1e-15);
}

TEST(Emi, MeanPearsonOverDims) {
    std::array<MomentStats, kNumEmiDims> stats;
    for (std::size_t d = 0; d < kNumEmiDims; ++d)
        for (double v : {0.0, 1.0, 2.0}) stats[d].add(v, d < 3 ? v : 1.0);
    // first three perfect, last three degenerate-zero
    EXPECT_NEAR(p_emi(stats), 0.5, 1e-12);
}

TEST(Streaming, EqualsBatchOracleOnRandomStreams) {
    Rng rng(2024);
    for (int rep = 0; rep < 25; ++rep) {
        const std::size_t n = 10 + rng.index(5000);
        std::vector<double> x(n), y(n);
        MomentStats stats;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.normal();
            y[i] = 0.7 * x[i] + 0.4 * rng.normal() + 0.1;
            stats.add(x[i], y[i]);
        }
        const auto oracle = tamix_test::batch_agreement(x, y);
        EXPECT_NEAR(pearson(stats), oracle.pearson, 1e-9);
        EXPECT_NEAR(ccc(stats), oracle.ccc, 1e-9);
    }
}

TEST(Streaming, F1EqualsBatchOracle) {
    Rng rng(55);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t n = 10 + rng.index(2000);
        std::vector<bool> pred(n), label(n);
        BinaryCounts counts;
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = rng.uniform() < 0.4;
            label[i] = rng.uniform() < 0.35;
            counts.add(pred[i], label[i]);
        }
        EXPECT_NEAR(f1(counts), tamix_test::batch_f1(pred, label), 1e-12);
    }
}

TEST(Merge, IdentityCommutativityAssociativity) {
    Rng rng(31);
    auto randomStats = [&](int n) {
        MomentStats s;
        for (int i = 0; i < n; ++i) s.add(rng.normal(), rng.normal());
        return s;
    };
    MomentStats a = randomStats(40), b = randomStats(17), c = randomStats(29);
    MomentStats empty;

    MomentStats ae = a;
    ae.merge(empty);
    EXPECT_EQ(ae.n, a.n);
    EXPECT_DOUBLE_EQ(ae.sum_xy, a.sum_xy);

    MomentStats ab = a, ba = b;
    ab.merge(b);
    ba.merge(a);
    EXPECT_DOUBLE_EQ(ab.sum_xx, ba.sum_xx);
    EXPECT_DOUBLE_EQ(ccc(ab), ccc(ba));

    MomentStats ab_c = ab, bc = b;
    ab_c.merge(c);
    bc.merge(c);
    MomentStats a_bc = a;
    a_bc.merge(bc);
    EXPECT_DOUBLE_EQ(ab_c.sum_xy, a_bc.sum_xy);
    EXPECT_DOUBLE_EQ(ab_c.sum_yy, a_bc.sum_yy);
}

TEST(Merge, SplitStreamMatchesUnsplit) {
    Rng rng(77);
    const std::size_t n = 10000;
    MomentStats whole, left, right;
    const std::size_t cut = 1 + rng.index(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.normal(), y = x * 0.3 + rng.normal();
        whole.add(x, y);
        (i < cut ? left : right).add(x, y);
    }
    left.merge(right);
    EXPECT_NEAR(ccc(left), ccc(whole), 1e-9);
    EXPECT_NEAR(pearson(left), pearson(whole), 1e-9);
}

TEST(Ordering, CccBoundedByPearson) {
    Rng rng(91);
    for (int rep = 0; rep < 50; ++rep) {
        MomentStats s;
        const double scale = rng.uniform(0.1, 3.0), shift = rng.uniform(-2.0, 2.0);
        for (int i = 0; i < 30; ++i) {
            const double x = rng.normal();
            s.add(x, scale * x + shift + 0.3 * rng.normal());
        }
        const double p = pearson(s), concordance = ccc(s);
        EXPECT_LE(std::abs(concordance), std::abs(p) + 1e-12);
        EXPECT_LE(std::abs(p), 1.0 + 1e-12);
    }
}

TEST(Report, AssemblesFromAccumulator) {
    Accumulator acc;
    for (int i = 0; i < 10; ++i) {
        for (auto& c : acc.au) c.add(i % 2 == 0, i % 2 == 0);
        acc.valence.add(i, i);
        acc.arousal.add(i, 9 - i);
        acc.ah.add(true, true);
        for (auto& m : acc.emi) m.add(i, 2.0 * i + 1.0);
    }
    MetricReport r = report_from(acc);
    EXPECT_DOUBLE_EQ(r.f_au, 1.0);
    EXPECT_NEAR(r.p_valence, 1.0, 1e-12);
    EXPECT_LT(r.p_arousal, 0.0);
    EXPECT_NEAR(r.p_va, 0.5 * (r.p_valence + r.p_arousal), 1e-15);
    EXPECT_DOUBLE_EQ(r.f_ah, 1.0);
    EXPECT_NEAR(r.p_emi, 1.0, 1e-12);
    EXPECT_FALSE(r.va_degenerate);
}

TEST(Report, EmptyStreamsAreDegenerateNotFatal) {
    Accumulator acc;
    MetricReport r = report_from(acc);
    EXPECT_DOUBLE_EQ(r.f_au, 0.0);
    EXPECT_DOUBLE_EQ(r.p_va, 0.0);
    EXPECT_DOUBLE_EQ(r.p_emi, 0.0);
    EXPECT_TRUE(r.va_degenerate);
    EXPECT_TRUE(r.emi_degenerate);
}
