#include <gtest/gtest.h>

#include "tamix/core/rng.hpp"
#include "tamix/core/tensor.hpp"
#include "tamix/nn/activation.hpp"
#include "tamix/nn/conv2d.hpp"
#include "tamix/nn/layernorm.hpp"
#include "tamix/nn/linear.hpp"

#include "support/finite_diff.hpp"

using namespace tamix;
using tamix_test::central_diff;
using tamix_test::rel_error;

namespace {

Tensor<double> random_tensor(Shape shape, std::uint64_t seed, double scale = 1.0) {
    Tensor<double> t(std::move(shape));
    Rng rng(seed);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
    return t;
}

// Fixed random projection turning a tensor into a scalar test loss.
struct ScalarProbe {
    Tensor<double> coeff;
    explicit ScalarProbe(const Shape& shape, std::uint64_t seed)
        : coeff(random_tensor(shape, seed)) {}
    double loss(const Tensor<double>& y) const {
        double s = 0;
        for (std::size_t i = 0; i < y.size(); ++i) s += coeff[i] * y[i];
        return s;
    }
    Tensor<double> grad() const { return coeff; }
};

} // namespace

TEST(Tensor, ReshapeAndIndexing) {
    Tensor<float> t({2, 3, 4});
    EXPECT_EQ(t.size(), 24u);
    t.at(1, 2, 3) = 7.0f;
    EXPECT_FLOAT_EQ(t[23], 7.0f);
    t.reshape({6, 4});
    EXPECT_FLOAT_EQ(t.at(5, 3), 7.0f);
    EXPECT_THROW(t.reshape({5, 5}), compute_error);
}

TEST(Tensor, PermuteRoundTrip) {
    Tensor<double> t = random_tensor({2, 3, 4, 5}, 11);
    const std::array<int, 4> perm{0, 2, 3, 1};
    Tensor<double> p = permute4(t, perm);
    EXPECT_EQ(p.shape(), (Shape{2, 4, 5, 3}));
    EXPECT_DOUBLE_EQ(p.at(1, 2, 3, 0), t.at(1, 0, 2, 3));
    Tensor<double> back = unpermute4(p, perm, t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_DOUBLE_EQ(back[i], t[i]);
}

TEST(Tensor, GemmMatchesNaive) {
    const std::size_t r = 3, k = 4, c = 5;
    Tensor<double> a = random_tensor({r, k}, 1);
    Tensor<double> b = random_tensor({k, c}, 2);
    Tensor<double> out({r, c});
    gemm(a.data(), r, k, b.data(), c, out.data(), false);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            double s = 0;
            for (std::size_t m = 0; m < k; ++m) s += a.at(i, m) * b.at(m, j);
            EXPECT_NEAR(out.at(i, j), s, 1e-12);
        }
}

TEST(Rng, NamedStreamsAreStable) {
    EXPECT_EQ(derive_seed(42, "alpha"), derive_seed(42, "alpha"));
    EXPECT_NE(derive_seed(42, "alpha"), derive_seed(42, "beta"));
    EXPECT_NE(derive_seed(42, "alpha"), derive_seed(43, "alpha"));
    Rng a(derive_seed(7, "x")), b(derive_seed(7, "x"));
    for (int i = 0; i < 10; ++i) EXPECT_DOUBLE_EQ(a.uniform(), b.uniform());
}

TEST(Linear, GradientMatchesFiniteDifference) {
    nn::Linear<double> lin;
    lin.setup("t.lin", 4, 3, 99);
    Tensor<double> x = random_tensor({5, 4}, 3);
    ScalarProbe probe({5, 3}, 4);

    typename nn::Linear<double>::State st;
    Tensor<double> y = lin.forward(x, &st);
    lin.weight.zero_grad();
    lin.bias.zero_grad();
    Tensor<double> gx = lin.backward(probe.grad(), st);

    auto loss_fn = [&]() { return probe.loss(lin.forward(x, nullptr)); };
    const double h = 1e-6;
    for (std::size_t i = 0; i < lin.weight.value.size(); ++i) {
        const double num = central_diff(loss_fn, &lin.weight.value[i], h);
        EXPECT_LT(rel_error(lin.weight.grad[i], num), 1e-6) << "weight " << i;
    }
    for (std::size_t i = 0; i < lin.bias.value.size(); ++i) {
        const double num = central_diff(loss_fn, &lin.bias.value[i], h);
        EXPECT_LT(rel_error(lin.bias.grad[i], num), 1e-6) << "bias " << i;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double num = central_diff(loss_fn, &x[i], h);
        EXPECT_LT(rel_error(gx[i], num), 1e-6) << "input " << i;
    }
}

TEST(LayerNorm, NormalizesAndMatchesFiniteDifference) {
    nn::LayerNorm<double> ln;
    ln.setup("t.ln", 6);
    Tensor<double> x = random_tensor({4, 6}, 5, 2.0);
    ScalarProbe probe({4, 6}, 6);

    typename nn::LayerNorm<double>::State st;
    Tensor<double> y = ln.forward(x, &st);
    // unit gamma, zero beta: each row ~zero mean, ~unit variance
    for (std::size_t r = 0; r < 4; ++r) {
        double mu = 0, var = 0;
        for (std::size_t i = 0; i < 6; ++i) mu += y.at(r, i);
        mu /= 6;
        for (std::size_t i = 0; i < 6; ++i) var += (y.at(r, i) - mu) * (y.at(r, i) - mu);
        var /= 6;
        EXPECT_NEAR(mu, 0.0, 1e-12);
        EXPECT_NEAR(var, 1.0, 1e-4);
    }

    ln.gamma.zero_grad();
    ln.beta.zero_grad();
    Rng gr(17);
    for (std::size_t i = 0; i < ln.gamma.value.size(); ++i)
        ln.gamma.value[i] = 1.0 + 0.1 * gr.normal();
    Tensor<double> y2 = ln.forward(x, &st);
    Tensor<double> gx = ln.backward(probe.grad(), st);

    auto loss_fn = [&]() { return probe.loss(ln.forward(x, nullptr)); };
    const double h = 1e-6;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double num = central_diff(loss_fn, &x[i], h);
        EXPECT_LT(rel_error(gx[i], num), 1e-5) << "input " << i;
    }
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_LT(rel_error(ln.gamma.grad[i],
                            central_diff(loss_fn, &ln.gamma.value[i], h)),
                  1e-6);
        EXPECT_LT(rel_error(ln.beta.grad[i],
                            central_diff(loss_fn, &ln.beta.value[i], h)),
                  1e-6);
    }
}

TEST(Gelu, ValuesAndGradient) {
    EXPECT_DOUBLE_EQ(nn::gelu_scalar(0.0), 0.0);
    EXPECT_NEAR(nn::gelu_scalar(1.0), 0.8413447460685429, 1e-12);
    nn::Gelu<double> act;
    Tensor<double> x = random_tensor({10}, 8);
    typename nn::Gelu<double>::State st;
    act.forward(x, &st);
    ScalarProbe probe({10}, 9);
    Tensor<double> gx = act.backward(probe.grad(), st);
    auto loss_fn = [&]() { return probe.loss(act.forward(x, nullptr)); };
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double num = central_diff(loss_fn, &x[i], 1e-6);
        EXPECT_LT(rel_error(gx[i], num), 1e-6) << "x " << i;
    }
}

TEST(Conv2d, ShapeAndGradient) {
    nn::Conv2d<double> conv;
    conv.setup("t.conv", 2, 3, 3, 2, 1, 21);
    Tensor<double> x = random_tensor({2, 2, 8, 8}, 22);
    typename nn::Conv2d<double>::State st;
    Tensor<double> y = conv.forward(x, &st);
    EXPECT_EQ(y.shape(), (Shape{2, 3, 4, 4}));

    ScalarProbe probe(y.shape(), 23);
    conv.weight.zero_grad();
    conv.bias.zero_grad();
    Tensor<double> gx = conv.backward(probe.grad(), st);

    auto loss_fn = [&]() { return probe.loss(conv.forward(x, nullptr)); };
    const double h = 1e-6;
    for (std::size_t i = 0; i < conv.weight.value.size(); ++i) {
        const double num = central_diff(loss_fn, &conv.weight.value[i], h);
        EXPECT_LT(rel_error(conv.weight.grad[i], num), 1e-6) << "w " << i;
    }
    for (std::size_t i = 0; i < conv.bias.value.size(); ++i) {
        const double num = central_diff(loss_fn, &conv.bias.value[i], h);
        EXPECT_LT(rel_error(conv.bias.grad[i], num), 1e-6) << "b " << i;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double num = central_diff(loss_fn, &x[i], h);
        EXPECT_LT(rel_error(gx[i], num), 1e-6) << "x " << i;
    }
}

TEST(Conv2d, StrideOneKeepsSize) {
    nn::Conv2d<float> conv;
    conv.setup("t.conv1", 3, 4, 3, 1, 1, 31);
    Tensor<float> x({1, 3, 6, 6});
    Tensor<float> y = conv.forward(x, nullptr);
    EXPECT_EQ(y.shape(), (Shape{1, 4, 6, 6}));
}
