#pragma once

#include <random>
#include <string>
#include <vector>

#include "rtgn/ctdg.hpp"
#include "rtgn/diff.hpp"

namespace testing {

inline std::vector<double> randn(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    std::vector<double> v(n);
    for (double& x : v) x = g(rng);
    return v;
}

inline std::vector<double> uniform(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

inline rtgn::diff::Parameter param(const std::string& name, std::size_t rows, std::size_t cols,
                                   std::vector<double> value) {
    rtgn::diff::Parameter p(name, rows, cols);
    p.value = std::move(value);
    return p;
}

// sum_m w_m v_m with fixed weights, so every output component matters. Uses
// the first v.size() weights.
inline rtgn::diff::Value project(rtgn::diff::Tape& tape, rtgn::diff::Value v, const std::vector<double>& w) {
    std::vector<double> head(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(v.size()));
    return rtgn::diff::sum(rtgn::diff::mul(v, tape.constant(std::move(head))));
}

// Small sorted stream over `nodes` nodes with f features.
inline std::vector<rtgn::ctdg::Event> random_stream(std::mt19937_64& rng, std::size_t count, std::size_t nodes,
                                                    std::size_t f, double rate = 1.0) {
    std::uniform_int_distribution<rtgn::ctdg::NodeId> pick(0, static_cast<rtgn::ctdg::NodeId>(nodes - 1));
    std::exponential_distribution<double> gap(rate);
    std::vector<rtgn::ctdg::Event> out;
    double t = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        t += gap(rng);
        rtgn::ctdg::Event e;
        e.src = pick(rng);
        e.dst = pick(rng);
        e.t = t;
        e.features = randn(rng, f);
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace testing
