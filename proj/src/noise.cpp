#include "rtgn/noise.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rtgn::noise {

void NoiseConfig::validate() const {
    if (!(ratio >= 0.0)) throw std::invalid_argument("noise: ratio must be non-negative");
    if (!(variance > 0.0)) throw std::invalid_argument("noise: variance must be positive");
    if (!(t_begin <= t_end)) throw std::invalid_argument("noise: empty time window");
}

std::size_t noise_count(std::span<const Event> test, double ratio) {
    const auto normal = std::count_if(test.begin(), test.end(),
                                      [](const Event& e) { return e.label == ctdg::Label::Normal; });
    return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(normal)));
}

std::vector<Event> craft_noise_events(std::span<const NodeId> nodes, std::size_t count, std::size_t feature_dim,
                                      const NoiseConfig& config, std::mt19937_64& rng) {
    config.validate();
    if (nodes.empty()) throw std::invalid_argument("craft_noise_events: empty node set");
    std::uniform_int_distribution<std::size_t> pick(0, nodes.size() - 1);
    std::normal_distribution<double> feature(0.0, std::sqrt(config.variance));
    std::uniform_real_distribution<double> when(config.t_begin, config.t_end);
    std::vector<Event> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Event e;
        e.src = nodes[pick(rng)];
        e.dst = nodes[pick(rng)];
        // uniform_real_distribution is half-open; a degenerate window is a point.
        e.t = config.t_begin == config.t_end ? config.t_begin : when(rng);
        e.features.resize(feature_dim);
        for (double& v : e.features) v = feature(rng);
        e.label = ctdg::Label::Noise;
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<Event> inject(std::span<const Event> test, std::span<const Event> noise, double t_begin, double t_end) {
    for (const Event& e : noise) {
        if (e.t < t_begin || e.t > t_end) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "inject: noise timestamp " << e.t << " outside test window [" << t_begin << ", " << t_end << "]";
            throw std::invalid_argument(msg.str());
        }
    }
    std::vector<Event> merged;
    merged.reserve(test.size() + noise.size());
    merged.insert(merged.end(), test.begin(), test.end());
    merged.insert(merged.end(), noise.begin(), noise.end());
    std::stable_sort(merged.begin(), merged.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
    return merged;
}

}  // namespace rtgn::noise
