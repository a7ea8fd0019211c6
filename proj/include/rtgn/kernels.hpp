#pragma once

// Dense kernels used by the autodiff tape. Each kernel has a serial
// reference implementation and an OpenMP version; the dispatching entry
// points pick the parallel one above a work threshold. The serial versions
// stay available so tests can compare the two paths and the benchmark can
// time them against each other.
//
// Matrices are row-major, `rows x cols`.

#include <cstddef>
#include <span>

namespace rtgn::kernels {

// Below this many multiply-adds the serial kernel is used.
inline constexpr std::size_t kParallelWork = 1u << 16;

namespace serial {

// y = W x + b  (b may be empty)
void gemv(std::span<const double> w, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<const double> b,
          std::span<double> y);

// gx += W^T gy
void gemv_t_acc(std::span<const double> w, std::size_t rows, std::size_t cols,
                std::span<const double> gy, std::span<double> gx);

// gw += gy x^T
void ger_acc(std::span<const double> gy, std::span<const double> x,
             std::span<double> gw);

double sq_dist(std::span<const double> a, std::span<const double> b);

}  // namespace serial

namespace omp {

void gemv(std::span<const double> w, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<const double> b,
          std::span<double> y);

void gemv_t_acc(std::span<const double> w, std::size_t rows, std::size_t cols,
                std::span<const double> gy, std::span<double> gx);

void ger_acc(std::span<const double> gy, std::span<const double> x,
             std::span<double> gw);

double sq_dist(std::span<const double> a, std::span<const double> b);

}  // namespace omp

void gemv(std::span<const double> w, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<const double> b,
          std::span<double> y);
void gemv_t_acc(std::span<const double> w, std::size_t rows, std::size_t cols,
                std::span<const double> gy, std::span<double> gx);
void ger_acc(std::span<const double> gy, std::span<const double> x,
             std::span<double> gw);

}  // namespace rtgn::kernels
