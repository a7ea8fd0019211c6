#include "rtgn/kernels.hpp"

#include <omp.h>

namespace rtgn::kernels {

namespace serial {

void gemv(std::span<const double> w, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<const double> b,
          std::span<double> y) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double* row = w.data() + i * cols;
        double acc = b.empty() ? 0.0 : b[i];
        for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
}

void gemv_t_acc(std::span<const double> w, std::size_t rows, std::size_t cols,
                std::span<const double> gy, std::span<double> gx) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double g = gy[i];
        if (g == 0.0) continue;
        const double* row = w.data() + i * cols;
        for (std::size_t j = 0; j < cols; ++j) gx[j] += row[j] * g;
    }
}

void ger_acc(std::span<const double> gy, std::span<const double> x,
             std::span<double> gw) {
    const std::size_t cols = x.size();
    for (std::size_t i = 0; i < gy.size(); ++i) {
        const double g = gy[i];
        if (g == 0.0) continue;
        double* row = gw.data() + i * cols;
        for (std::size_t j = 0; j < cols; ++j) row[j] += g * x[j];
    }
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

}  // namespace serial

namespace omp {

// Row-parallel: every output element is produced by one thread with the same
// summation order as the serial kernel, so results are bitwise identical.
void gemv(std::span<const double> w, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<const double> b,
          std::span<double> y) {
    const auto n = static_cast<long>(rows);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) {
        const double* row = w.data() + static_cast<std::size_t>(i) * cols;
        double acc = b.empty() ? 0.0 : b[static_cast<std::size_t>(i)];
        for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
        y[static_cast<std::size_t>(i)] = acc;
    }
}

// Column-parallel so each gx[j] is owned by one thread; the row loop order is
// kept, which again matches the serial accumulation order.
void gemv_t_acc(std::span<const double> w, std::size_t rows, std::size_t cols,
                std::span<const double> gy, std::span<double> gx) {
    // Each thread owns a block of columns and walks rows in order, so every
    // gx[j] sums in the same order as the serial kernel.
#pragma omp parallel
    {
        const auto nt = static_cast<std::size_t>(omp_get_num_threads());
        const auto id = static_cast<std::size_t>(omp_get_thread_num());
        const std::size_t j0 = cols * id / nt, j1 = cols * (id + 1) / nt;
        for (std::size_t i = 0; i < rows; ++i) {
            const double g = gy[i];
            if (g == 0.0) continue;
            const double* row = w.data() + i * cols;
            for (std::size_t j = j0; j < j1; ++j) gx[j] += row[j] * g;
        }
    }
}

void ger_acc(std::span<const double> gy, std::span<const double> x,
             std::span<double> gw) {
    const std::size_t cols = x.size();
    const auto n = static_cast<long>(gy.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) {
        const double g = gy[static_cast<std::size_t>(i)];
        if (g == 0.0) continue;
        double* row = gw.data() + static_cast<std::size_t>(i) * cols;
        for (std::size_t j = 0; j < cols; ++j) row[j] += g * x[j];
    }
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    const auto n = static_cast<long>(a.size());
#pragma omp parallel for reduction(+ : acc) schedule(static)
    for (long i = 0; i < n; ++i) {
        const double d = a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)];
        acc += d * d;
    }
    return acc;
}

}  // namespace omp

void gemv(std::span<const double> w, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<const double> b,
          std::span<double> y) {
    if (rows * cols >= kParallelWork && !omp_in_parallel())
        omp::gemv(w, rows, cols, x, b, y);
    else
        serial::gemv(w, rows, cols, x, b, y);
}

void gemv_t_acc(std::span<const double> w, std::size_t rows, std::size_t cols,
                std::span<const double> gy, std::span<double> gx) {
    if (rows * cols >= kParallelWork && !omp_in_parallel())
        omp::gemv_t_acc(w, rows, cols, gy, gx);
    else
        serial::gemv_t_acc(w, rows, cols, gy, gx);
}

void ger_acc(std::span<const double> gy, std::span<const double> x,
             std::span<double> gw) {
    if (gy.size() * x.size() >= kParallelWork && !omp_in_parallel())
        omp::ger_acc(gy, x, gw);
    else
        serial::ger_acc(gy, x, gw);
}

}  // namespace rtgn::kernels
