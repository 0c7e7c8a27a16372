#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "tokred/mat.hpp"

namespace tokred {

// One head of a selective state-space layer:
//   S_t = a_bar[t] * S_{t-1} + x_t * b_bar_t^T      (S_0 = 0, S is p x n)
//   y_t = S_t * c_t
// a_bar is the per-step scalar decay in (0,1), b_bar_t = delta_t * b_t is
// the effective input projection, c_t the output projection.
template <typename T>
struct ScanInputs {
    Mat<T> x;              // T x p
    std::vector<T> a_bar;  // length T, each in (0,1)
    Mat<T> b_bar;          // T x n
    Mat<T> c;              // T x n

    std::size_t steps() const { return a_bar.size(); }

    void validate() const {
        const std::size_t t = steps();
        if (t == 0) throw std::invalid_argument("scan needs at least one step");
        if (x.rows != t || b_bar.rows != t || c.rows != t)
            throw std::invalid_argument("scan inputs disagree on sequence length");
        if (b_bar.cols != c.cols) throw std::invalid_argument("b_bar and c disagree on state dim");
        for (T a : a_bar) {
            if (!(a > T(0) && a < T(1))) throw std::invalid_argument("a_bar entries must lie in (0,1)");
        }
        auto check_finite = [](const Mat<T>& m, const char* name) {
            for (T v : m.data)
                if (!std::isfinite(v)) throw std::invalid_argument(std::string("non-finite value in ") + name);
        };
        check_finite(x, "x");
        check_finite(b_bar, "b_bar");
        check_finite(c, "c");
    }
};

// Left-to-right recurrence; O(T*p*n) time, O(p*n) state.
template <typename T>
Mat<T> selective_scan(const ScanInputs<T>& in) {
    in.validate();
    const std::size_t steps = in.steps();
    const std::size_t p = in.x.cols;
    const std::size_t n = in.b_bar.cols;

    Mat<T> y(steps, p);
    std::vector<T> state(p * n, T(0));  // row-major p x n
    for (std::size_t t = 0; t < steps; ++t) {
        const T a = in.a_bar[t];
        const T* xt = in.x.row(t);
        const T* bt = in.b_bar.row(t);
        const T* ct = in.c.row(t);
        T* yt = y.row(t);
        for (std::size_t i = 0; i < p; ++i) {
            T* srow = state.data() + i * n;
            const T xi = xt[i];
            T acc = T(0);
            for (std::size_t j = 0; j < n; ++j) {
                srow[j] = a * srow[j] + xi * bt[j];
                acc += srow[j] * ct[j];
            }
            yt[i] = acc;
        }
    }
    return y;
}

// Scalar contribution of input j to output t:
//   W[t][j] = (prod_{u=j+1..t} a_bar[u]) * (b_bar_j . c_t)   for j <= t
// The decay product is evaluated as exp of a log-sum so that sequences of
// tens of thousands of steps do not underflow pair by pair; products
// below 1e-300 clamp to zero. This overload takes only the fields the
// weights depend on; a_bar and shapes are validated the same way.
template <typename T>
Mat<T> implicit_weights(const std::vector<T>& a_bar, const Mat<T>& b_bar, const Mat<T>& c) {
    const std::size_t steps = a_bar.size();
    if (steps == 0) throw std::invalid_argument("scan needs at least one step");
    if (b_bar.rows != steps || c.rows != steps)
        throw std::invalid_argument("scan inputs disagree on sequence length");
    if (b_bar.cols != c.cols) throw std::invalid_argument("b_bar and c disagree on state dim");
    for (T a : a_bar)
        if (!(a > T(0) && a < T(1))) throw std::invalid_argument("a_bar entries must lie in (0,1)");
    for (T v : b_bar.data)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite value in b_bar");
    for (T v : c.data)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite value in c");

    const std::size_t n = b_bar.cols;

    // log_cum[t] = sum_{u<=t} log a_bar[u]; the product over (j, t] is
    // exp(log_cum[t] - log_cum[j]), and the empty product (j == t) is 1.
    std::vector<double> log_cum(steps);
    double acc = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
        acc += std::log(static_cast<double>(a_bar[t]));
        log_cum[t] = acc;
    }

    constexpr double kLogFloor = -690.77552789821368;  // log(1e-300)
    Mat<T> w(steps, steps);
    for (std::size_t t = 0; t < steps; ++t) {
        const T* ct = c.row(t);
        T* wrow = w.row(t);
        for (std::size_t j = 0; j <= t; ++j) {
            const double log_decay = log_cum[t] - log_cum[j];
            if (log_decay < kLogFloor) continue;  // row stays zero
            const T* bj = b_bar.row(j);
            T align = T(0);
            for (std::size_t k = 0; k < n; ++k) align += bj[k] * ct[k];
            wrow[j] = static_cast<T>(std::exp(log_decay)) * align;
        }
    }
    return w;
}

template <typename T>
Mat<T> implicit_weights(const ScanInputs<T>& in) {
    in.validate();
    return implicit_weights(in.a_bar, in.b_bar, in.c);
}

// Unrolled form y_t = sum_{j<=t} W[t][j] * x_j; O(T^2), the quadratic
// counterpart the recurrence is checked against.
template <typename T>
Mat<T> unrolled_output(const ScanInputs<T>& in) {
    const Mat<T> w = implicit_weights(in);
    const std::size_t steps = in.steps();
    const std::size_t p = in.x.cols;

    Mat<T> y(steps, p);
    for (std::size_t t = 0; t < steps; ++t) {
        const T* wrow = w.row(t);
        T* yt = y.row(t);
        for (std::size_t j = 0; j <= t; ++j) {
            const T wj = wrow[j];
            if (wj == T(0)) continue;
            const T* xj = in.x.row(j);
            for (std::size_t i = 0; i < p; ++i) yt[i] += wj * xj[i];
        }
    }
    return y;
}

}  // namespace tokred
