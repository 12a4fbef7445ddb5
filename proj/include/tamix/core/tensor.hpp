#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tamix/core/error.hpp"

namespace tamix {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << ")";
    return os.str();
}

//! Dense row-major n-dimensional array. The single value type used across the
//! library; float for training, double for gradient checking.
template <typename T>
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape)
        : shape_(std::move(shape)), data_(shape_numel(shape_), T(0)) {}
    Tensor(Shape shape, T value)
        : shape_(std::move(shape)), data_(shape_numel(shape_), value) {}

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    template <typename... Ix>
    T& at(Ix... ix) { return data_[offset(ix...)]; }
    template <typename... Ix>
    const T& at(Ix... ix) const { return data_[offset(ix...)]; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
    void set_zero() { fill(T(0)); }

    //! Reinterpret the layout under a new shape with the same element count.
    Tensor& reshape(Shape shape) {
        if (shape_numel(shape) != data_.size())
            throw compute_error("reshape: element count mismatch " +
                                shape_str(shape_) + " -> " + shape_str(shape));
        shape_ = std::move(shape);
        return *this;
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    Tensor& operator+=(const Tensor& o) {
        check_same(o, "+=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Tensor& operator-=(const Tensor& o) {
        check_same(o, "-=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Tensor& operator*=(T s) {
        for (T& v : data_) v *= s;
        return *this;
    }

    bool all_finite() const {
        for (T v : data_)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    auto begin() { return data_.begin(); }
    auto end() { return data_.end(); }
    auto begin() const { return data_.begin(); }
    auto end() const { return data_.end(); }

private:
    template <typename... Ix>
    std::size_t offset(Ix... ix) const {
        constexpr std::size_t n = sizeof...(Ix);
        const std::array<std::size_t, n> idx{static_cast<std::size_t>(ix)...};
        std::size_t off = 0;
        for (std::size_t i = 0; i < n; ++i) off = off * shape_[i] + idx[i];
        return off;
    }
    void check_same(const Tensor& o, const char* op) const {
        if (!same_shape(o))
            throw compute_error(std::string("tensor ") + op + ": shape mismatch " +
                                shape_str(shape_) + " vs " + shape_str(o.shape_));
    }

    Shape shape_;
    std::vector<T> data_;
};

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

//! C (+)= A(r x k) * B(k x c), all row-major buffers.
template <typename T>
void gemm(const T* a, std::size_t r, std::size_t k, const T* b, std::size_t c,
          T* out, bool accumulate) {
    ConstMatMap<T> A(a, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k));
    ConstMatMap<T> B(b, static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c));
    MatMap<T> C(out, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    if (accumulate)
        C.noalias() += A * B;
    else
        C.noalias() = A * B;
}

//! C (+)= A^T * B where A is (k x r) and B is (k x c), row-major buffers.
template <typename T>
void gemm_at(const T* a, std::size_t k, std::size_t r, const T* b, std::size_t c,
             T* out, bool accumulate) {
    ConstMatMap<T> A(a, static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(r));
    ConstMatMap<T> B(b, static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c));
    MatMap<T> C(out, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    if (accumulate)
        C.noalias() += A.transpose() * B;
    else
        C.noalias() = A.transpose() * B;
}

//! C (+)= A * B^T where A is (r x k) and B is (c x k), row-major buffers.
template <typename T>
void gemm_bt(const T* a, std::size_t r, std::size_t k, const T* b, std::size_t c,
             T* out, bool accumulate) {
    ConstMatMap<T> A(a, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k));
    ConstMatMap<T> B(b, static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k));
    MatMap<T> C(out, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    if (accumulate)
        C.noalias() += A * B.transpose();
    else
        C.noalias() = A * B.transpose();
}

//! Reorder a rank-4 tensor: out has axes (perm[0],perm[1],perm[2],perm[3]) of in.
template <typename T>
Tensor<T> permute4(const Tensor<T>& in, const std::array<int, 4>& perm) {
    if (in.rank() != 4) throw compute_error("permute4: rank != 4");
    const std::size_t d[4] = {in.dim(0), in.dim(1), in.dim(2), in.dim(3)};
    Shape out_shape{d[perm[0]], d[perm[1]], d[perm[2]], d[perm[3]]};
    Tensor<T> out(out_shape);
    std::size_t stride[4];
    stride[3] = 1;
    stride[2] = d[3];
    stride[1] = d[2] * d[3];
    stride[0] = d[1] * d[2] * d[3];
    const std::size_t s0 = stride[perm[0]], s1 = stride[perm[1]],
                      s2 = stride[perm[2]], s3 = stride[perm[3]];
    const T* src = in.data();
    T* dst = out.data();
    std::size_t o = 0;
    for (std::size_t i0 = 0; i0 < out_shape[0]; ++i0)
        for (std::size_t i1 = 0; i1 < out_shape[1]; ++i1)
            for (std::size_t i2 = 0; i2 < out_shape[2]; ++i2) {
                std::size_t base = i0 * s0 + i1 * s1 + i2 * s2;
                for (std::size_t i3 = 0; i3 < out_shape[3]; ++i3)
                    dst[o++] = src[base + i3 * s3];
            }
    return out;
}

//! Scatter-add the inverse of permute4: grad w.r.t. the pre-permute tensor.
template <typename T>
Tensor<T> unpermute4(const Tensor<T>& grad_out, const std::array<int, 4>& perm,
                     const Shape& in_shape) {
    std::array<int, 4> inv{};
    for (int i = 0; i < 4; ++i) inv[perm[i]] = i;
    Tensor<T> g = permute4(grad_out, inv);
    if (g.shape() != in_shape) throw compute_error("unpermute4: shape mismatch");
    return g;
}

} // namespace tamix
