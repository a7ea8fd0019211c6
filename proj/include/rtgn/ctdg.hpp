#pragma once

// Continuous-time dynamic graph: an append-only stream of timestamped,
// directed interaction events with edge features, plus a per-node
// time-ordered incidence index for temporal neighborhood queries.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

namespace rtgn::ctdg {

using NodeId = std::uint32_t;

enum class Label : std::uint8_t { Normal = 0, Attack = 1, Noise = 2 };

std::string_view to_string(Label label);

struct Event {
    NodeId src = 0;
    NodeId dst = 0;
    double t = 0.0;
    std::vector<double> features;
    Label label = Label::Normal;

    bool operator==(const Event&) const = default;
};

class OrderError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Incidence {
    std::size_t event = 0;
    NodeId other = 0;
    double t = 0.0;
    bool outgoing = false;

    bool operator==(const Incidence&) const = default;
};

class TemporalAdjacencyStore {
public:
    TemporalAdjacencyStore() = default;

    // Appends an event; timestamps must be nondecreasing.
    std::size_t insert(Event event);

    // Up to k most recent incidences of `node` with timestamp strictly < t,
    // most recent first. Unknown nodes yield an empty result.
    std::vector<Incidence> neighbors(NodeId node, double t, std::size_t k) const;

    // F(T): every node that participates in an event with timestamp <= T,
    // sorted ascending.
    std::vector<NodeId> node_set(double until) const;

    // E(T): distinct ordered (src, dst) pairs with an event at timestamp <= T.
    std::vector<std::pair<NodeId, NodeId>> edges_until(double until) const;

    std::span<const Incidence> incidences(NodeId node) const;
    const Event& event(std::size_t index) const { return events_.at(index); }
    std::span<const Event> events() const { return events_; }
    std::size_t size() const { return events_.size(); }
    bool empty() const { return events_.empty(); }
    void clear();

    void save(std::ostream& os) const;
    static TemporalAdjacencyStore load(std::istream& is);

    bool operator==(const TemporalAdjacencyStore&) const = default;

private:
    std::vector<Event> events_;
    std::vector<std::vector<Incidence>> by_node_;
};

}  // namespace rtgn::ctdg
