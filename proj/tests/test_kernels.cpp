#include <doctest.h>

#include <random>

#include "rtgn/kernels.hpp"
#include "support.hpp"

using namespace rtgn;

TEST_CASE("serial gemv matches a hand product") {
    const std::vector<double> w{1, 2, 3, 4, 5, 6};  // 2x3
    const std::vector<double> x{1, 0, -1};
    const std::vector<double> b{0.5, -0.5};
    std::vector<double> y(2);
    kernels::serial::gemv(w, 2, 3, x, b, y);
    CHECK(y[0] == -1.5);
    CHECK(y[1] == -2.5);
    kernels::serial::gemv(w, 2, 3, x, {}, y);
    CHECK(y[0] == -2.0);
}

TEST_CASE("omp kernels are bitwise equal to serial ones") {
    std::mt19937_64 rng(7);
    for (auto [rows, cols] : {std::pair<std::size_t, std::size_t>{3, 5}, {96, 64}, {400, 300}}) {
        const auto w = testing::randn(rng, rows * cols);
        const auto x = testing::randn(rng, cols);
        const auto b = testing::randn(rng, rows);
        const auto gy = testing::randn(rng, rows);

        std::vector<double> y1(rows), y2(rows);
        kernels::serial::gemv(w, rows, cols, x, b, y1);
        kernels::omp::gemv(w, rows, cols, x, b, y2);
        CHECK(y1 == y2);

        std::vector<double> g1(cols, 0.5), g2(cols, 0.5);
        kernels::serial::gemv_t_acc(w, rows, cols, gy, g1);
        kernels::omp::gemv_t_acc(w, rows, cols, gy, g2);
        CHECK(g1 == g2);

        std::vector<double> gw1(rows * cols, 0.25), gw2(rows * cols, 0.25);
        kernels::serial::ger_acc(gy, x, gw1);
        kernels::omp::ger_acc(gy, x, gw2);
        CHECK(gw1 == gw2);

        CHECK(kernels::serial::sq_dist(x, x) == 0.0);
        const auto z = testing::randn(rng, cols);
        CHECK(kernels::omp::sq_dist(x, z) == doctest::Approx(kernels::serial::sq_dist(x, z)).epsilon(1e-12));

        std::vector<double> y3(rows);
        kernels::gemv(w, rows, cols, x, b, y3);
        CHECK(y3 == y1);
    }
}

TEST_CASE("gemv_t_acc is the transpose of gemv") {
    std::mt19937_64 rng(3);
    const std::size_t rows = 7, cols = 4;
    const auto w = testing::randn(rng, rows * cols);
    const auto x = testing::randn(rng, cols);
    const auto u = testing::randn(rng, rows);
    std::vector<double> wx(rows), wtu(cols, 0.0);
    kernels::serial::gemv(w, rows, cols, x, {}, wx);
    kernels::serial::gemv_t_acc(w, rows, cols, u, wtu);
    double lhs = 0, rhs = 0;
    for (std::size_t i = 0; i < rows; ++i) lhs += u[i] * wx[i];
    for (std::size_t j = 0; j < cols; ++j) rhs += wtu[j] * x[j];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}
