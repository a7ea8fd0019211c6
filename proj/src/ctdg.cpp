#include "rtgn/ctdg.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "rtgn/binary_io.hpp"

namespace rtgn::ctdg {

std::string_view to_string(Label label) {
    switch (label) {
        case Label::Normal: return "normal";
        case Label::Attack: return "attack";
        case Label::Noise: return "noise";
    }
    return "unknown";
}

std::size_t TemporalAdjacencyStore::insert(Event event) {
    if (!events_.empty() && event.t < events_.back().t) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "out-of-order event: timestamp " << event.t << " precedes last inserted "
            << events_.back().t;
        throw OrderError(msg.str());
    }
    const std::size_t index = events_.size();
    const NodeId hi = std::max(event.src, event.dst);
    if (by_node_.size() <= hi) by_node_.resize(static_cast<std::size_t>(hi) + 1);
    by_node_[event.src].push_back({index, event.dst, event.t, true});
    by_node_[event.dst].push_back({index, event.src, event.t, false});
    events_.push_back(std::move(event));
    return index;
}

std::vector<Incidence> TemporalAdjacencyStore::neighbors(NodeId node, double t, std::size_t k) const {
    if (k == 0) throw std::invalid_argument("neighbors: K must be at least 1");
    std::vector<Incidence> out;
    if (node >= by_node_.size()) return out;
    const auto& list = by_node_[node];
    auto end = std::lower_bound(list.begin(), list.end(), t,
                                [](const Incidence& inc, double v) { return inc.t < v; });
    const auto available = static_cast<std::size_t>(end - list.begin());
    const std::size_t take = std::min(k, available);
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back(*(end - 1 - static_cast<std::ptrdiff_t>(i)));
    return out;
}

std::vector<NodeId> TemporalAdjacencyStore::node_set(double until) const {
    std::set<NodeId> nodes;
    for (const Event& e : events_) {
        if (e.t > until) break;
        nodes.insert(e.src);
        nodes.insert(e.dst);
    }
    return {nodes.begin(), nodes.end()};
}

std::vector<std::pair<NodeId, NodeId>> TemporalAdjacencyStore::edges_until(double until) const {
    std::set<std::pair<NodeId, NodeId>> edges;
    for (const Event& e : events_) {
        if (e.t > until) break;
        edges.emplace(e.src, e.dst);
    }
    return {edges.begin(), edges.end()};
}

std::span<const Incidence> TemporalAdjacencyStore::incidences(NodeId node) const {
    if (node >= by_node_.size()) return {};
    return by_node_[node];
}

void TemporalAdjacencyStore::clear() {
    events_.clear();
    by_node_.clear();
}

void TemporalAdjacencyStore::save(std::ostream& os) const {
    io::write_u64(os, events_.size());
    for (const Event& e : events_) {
        io::write_u32(os, e.src);
        io::write_u32(os, e.dst);
        io::write_f64(os, e.t);
        io::write_u32(os, static_cast<std::uint32_t>(e.label));
        io::write_f64s(os, e.features);
    }
}

TemporalAdjacencyStore TemporalAdjacencyStore::load(std::istream& is) {
    TemporalAdjacencyStore store;
    const auto n = io::read_u64(is);
    for (std::uint64_t i = 0; i < n; ++i) {
        Event e;
        e.src = io::read_u32(is);
        e.dst = io::read_u32(is);
        e.t = io::read_f64(is);
        const auto label = io::read_u32(is);
        if (label > 2) throw io::FormatError("store: bad label code " + std::to_string(label));
        e.label = static_cast<Label>(label);
        e.features = io::read_f64s(is);
        store.insert(std::move(e));
    }
    return store;
}

}  // namespace rtgn::ctdg
