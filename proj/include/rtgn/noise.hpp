#pragma once

// Synthetic noise events for robustness tests: endpoints uniform over the
// dataset's node set (independent draws, self-loops allowed), features
// N(0, variance * I), timestamps uniform over [t_begin, t_end].

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "rtgn/ctdg.hpp"

namespace rtgn::noise {

using ctdg::Event;
using ctdg::NodeId;

struct NoiseConfig {
    // Noise count as a fraction of the Normal events in the test split.
    double ratio = 0.10;
    double variance = 5.0;
    double t_begin = 0.0;
    double t_end = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

// round(ratio * #Normal events in `test`).
std::size_t noise_count(std::span<const Event> test, double ratio);

std::vector<Event> craft_noise_events(std::span<const NodeId> nodes, std::size_t count, std::size_t feature_dim,
                                      const NoiseConfig& config, std::mt19937_64& rng);

// Merges noise into the test split, stable by time with originals first at
// equal timestamps. Throws if a noise timestamp lies outside [t_begin, t_end].
std::vector<Event> inject(std::span<const Event> test, std::span<const Event> noise, double t_begin, double t_end);

}  // namespace rtgn::noise
