#ifndef DUMB_DIFFCORE_TENSOR_HPP
#define DUMB_DIFFCORE_TENSOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "dumb/core/error.hpp"

namespace dumb {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

/// Dense row-major array. Images are stored H x W x C, batches N x H x W x C.
template <typename T>
struct Tensor {
    Shape shape;
    std::vector<T> data;
    bool requires_grad = false;

    Tensor() = default;
    explicit Tensor(Shape s, T fill = T{0}) : shape(std::move(s)), data(numel(shape), fill) {}
    Tensor(Shape s, std::vector<T> values) : shape(std::move(s)), data(std::move(values)) {
        if (numel(shape) != data.size()) {
            throw Error("shape-error", "shape " + shape_string(shape) + " does not hold " +
                                           std::to_string(data.size()) + " values");
        }
    }

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }

    T& operator[](std::size_t i) { return data[i]; }
    const T& operator[](std::size_t i) const { return data[i]; }

    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }

    bool operator==(const Tensor& other) const { return shape == other.shape && data == other.data; }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.data.assign(data.begin(), data.end());
        out.requires_grad = requires_grad;
        return out;
    }

    bool all_finite() const {
        return std::all_of(data.begin(), data.end(), [](T v) { return std::isfinite(v); });
    }

    bool in_unit_range() const {
        return std::all_of(data.begin(), data.end(), [](T v) { return v >= T{0} && v <= T{1}; });
    }
};

template <typename T>
inline void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
    if (a.shape != b.shape) {
        throw Error("shape-error", std::string(what) + ": " + shape_string(a.shape) + " vs " +
                                       shape_string(b.shape));
    }
}

/// Max-norm distance between two equally shaped tensors.
template <typename T>
inline T linf_distance(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "linf_distance");
    T m{0};
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

template <typename T>
inline T l2_norm(const Tensor<T>& a) {
    T s{0};
    for (T v : a.data) s += v * v;
    return std::sqrt(s);
}

/// Stack equally shaped tensors along a new leading axis.
template <typename T>
inline Tensor<T> stack(const std::vector<Tensor<T>>& items) {
    if (items.empty()) throw Error("shape-error", "stack of empty list");
    Shape shape{items.size()};
    shape.insert(shape.end(), items.front().shape.begin(), items.front().shape.end());
    Tensor<T> out(shape);
    const std::size_t stride = items.front().size();
    for (std::size_t i = 0; i < items.size(); ++i) {
        require_same_shape(items[i], items.front(), "stack");
        std::copy(items[i].data.begin(), items[i].data.end(), out.data.begin() + i * stride);
    }
    return out;
}

/// Add a leading batch axis of size one.
template <typename T>
inline Tensor<T> as_batch(const Tensor<T>& item) {
    Tensor<T> out = item;
    out.shape.insert(out.shape.begin(), 1);
    return out;
}

} // namespace dumb

#endif
