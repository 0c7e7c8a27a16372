#pragma once

#include <cstddef>
#include <vector>

namespace tokred {

// Dense row-major matrix over a flat buffer. Rows are contiguous, so
// row(i) can be handed to dot-product loops directly.
template <typename T>
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, T(0)) {}

    T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    T* row(std::size_t r) { return data.data() + r * cols; }
    const T* row(std::size_t r) const { return data.data() + r * cols; }

    bool same_shape(const Mat& other) const { return rows == other.rows && cols == other.cols; }
};

using MatF = Mat<float>;
using MatD = Mat<double>;

}  // namespace tokred
