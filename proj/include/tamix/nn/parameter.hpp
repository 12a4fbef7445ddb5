#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tamix/core/rng.hpp"
#include "tamix/core/tensor.hpp"

namespace tamix::nn {

//! A named weight with its gradient buffer. Freezing excludes it from
//! optimizer updates and from gradient checking.
template <typename T>
struct Param {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    bool frozen = false;

    void setup(std::string n, Shape shape) {
        name = std::move(n);
        value = Tensor<T>(shape);
        grad = Tensor<T>(std::move(shape));
    }

    //! Uniform Xavier init seeded by (seed, name) so results do not depend on
    //! construction order.
    void init_xavier(std::uint64_t seed, std::size_t fan_in, std::size_t fan_out) {
        Rng rng(derive_seed(seed, name));
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (std::size_t i = 0; i < value.size(); ++i)
            value[i] = static_cast<T>(rng.uniform(-limit, limit));
    }

    void init_constant(T v) { value.fill(v); }
    void zero_grad() { grad.set_zero(); }
};

template <typename T>
using ParamRefs = std::vector<Param<T>*>;

template <typename T>
std::size_t total_size(const ParamRefs<T>& params) {
    std::size_t n = 0;
    for (const auto* p : params) n += p->value.size();
    return n;
}

} // namespace tamix::nn
