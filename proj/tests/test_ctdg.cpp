#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "rtgn/ctdg.hpp"
#include "support.hpp"

using namespace rtgn::ctdg;

namespace {

Event ev(NodeId s, NodeId d, double t) {
    Event e;
    e.src = s;
    e.dst = d;
    e.t = t;
    e.features = {t};
    return e;
}

}  // namespace

TEST_CASE("insert basics") {
    TemporalAdjacencyStore s;
    CHECK(s.insert(ev(0, 1, 1.0)) == 0);
    CHECK(s.incidences(0).size() == 1);
    CHECK(s.incidences(1).size() == 1);
    CHECK(s.incidences(0)[0].outgoing);
    CHECK_FALSE(s.incidences(1)[0].outgoing);
    s.insert(ev(2, 2, 2.0));
    CHECK(s.incidences(2).size() == 2);
}

TEST_CASE("out-of-order insert names both timestamps") {
    TemporalAdjacencyStore s;
    s.insert(ev(0, 1, 5.0));
    try {
        s.insert(ev(0, 1, 3.0));
        FAIL("expected OrderError");
    } catch (const OrderError& e) {
        const std::string msg = e.what();
        CHECK(msg.find('5') != std::string::npos);
        CHECK(msg.find('3') != std::string::npos);
    }
}

TEST_CASE("incidence counts sum to twice the event count") {
    std::mt19937_64 rng(1);
    TemporalAdjacencyStore s;
    for (auto& e : testing::random_stream(rng, 1000, 30, 2)) s.insert(e);
    std::size_t total = 0;
    for (NodeId n = 0; n < 30; ++n) total += s.incidences(n).size();
    CHECK(total == 2000);
}

TEST_CASE("neighbors examples") {
    TemporalAdjacencyStore s;
    CHECK(s.neighbors(4, 10.0, 3).empty());
    s.insert(ev(0, 1, 1.0));
    s.insert(ev(0, 2, 2.0));
    s.insert(ev(3, 0, 3.0));
    auto n = s.neighbors(0, 10.0, 2);
    REQUIRE(n.size() == 2);
    CHECK(n[0].t == 3.0);
    CHECK(n[0].other == 3);
    CHECK(n[1].t == 2.0);
    CHECK(s.neighbors(0, 3.0, 10).size() == 2);  // strict t' < t
    CHECK(s.neighbors(0, 1.0, 10).empty());
    CHECK_THROWS(s.neighbors(0, 10.0, 0));
}

TEST_CASE("neighbors match a linear scan oracle") {
    std::mt19937_64 rng(2);
    const auto stream = testing::random_stream(rng, 600, 20, 1, 2.0);
    TemporalAdjacencyStore s;
    for (const auto& e : stream) s.insert(e);
    std::uniform_real_distribution<double> when(0.0, stream.back().t + 1.0);
    std::uniform_int_distribution<NodeId> node(0, 19);
    std::uniform_int_distribution<std::size_t> kk(1, 15);
    for (int q = 0; q < 300; ++q) {
        const NodeId v = node(rng);
        const double t = when(rng);
        const std::size_t k = kk(rng);
        std::vector<std::pair<double, std::size_t>> oracle;  // (t, index), self-loops count twice
        for (std::size_t i = 0; i < stream.size(); ++i) {
            if (stream[i].t >= t) continue;
            if (stream[i].src == v) oracle.emplace_back(stream[i].t, i);
            if (stream[i].dst == v) oracle.emplace_back(stream[i].t, i);
        }
        std::stable_sort(oracle.begin(), oracle.end(), [](auto& a, auto& b) { return a.first > b.first; });
        if (oracle.size() > k) oracle.resize(k);
        const auto got = s.neighbors(v, t, k);
        REQUIRE(got.size() == oracle.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].t == oracle[i].first);
            CHECK(got[i].t < t);
        }
        std::multiset<std::size_t> a, b;
        for (auto& g : got) a.insert(g.event);
        for (auto& o : oracle) b.insert(o.second);
        CHECK(a == b);
    }
}

TEST_CASE("node_set and edges_until") {
    TemporalAdjacencyStore s;
    CHECK(s.node_set(100.0).empty());
    CHECK(s.edges_until(100.0).empty());
    s.insert(ev(0, 1, 1.0));
    s.insert(ev(2, 3, 5.0));
    CHECK(s.node_set(2.0) == std::vector<NodeId>{0, 1});
    s.insert(ev(2, 3, 6.0));
    CHECK(s.edges_until(10.0).size() == 2);

    std::mt19937_64 rng(4);
    TemporalAdjacencyStore r;
    const auto stream = testing::random_stream(rng, 500, 40, 1, 0.5);
    for (const auto& e : stream) r.insert(e);
    std::vector<NodeId> prev;
    for (double T : {10.0, 100.0, 400.0, 2000.0}) {
        std::set<NodeId> nodes;
        std::set<std::pair<NodeId, NodeId>> edges;
        for (const auto& e : stream)
            if (e.t <= T) {
                nodes.insert(e.src);
                nodes.insert(e.dst);
                edges.emplace(e.src, e.dst);
            }
        const auto got = r.node_set(T);
        CHECK(got == std::vector<NodeId>(nodes.begin(), nodes.end()));
        auto ge = r.edges_until(T);
        CHECK(std::set<std::pair<NodeId, NodeId>>(ge.begin(), ge.end()) == edges);
        CHECK(ge.size() == edges.size());
        CHECK(std::includes(got.begin(), got.end(), prev.begin(), prev.end()));
        prev = got;
    }
}

TEST_CASE("store round-trips through serialization") {
    std::mt19937_64 rng(6);
    TemporalAdjacencyStore s;
    for (auto& e : testing::random_stream(rng, 200, 10, 3)) s.insert(e);
    std::stringstream buf;
    s.save(buf);
    CHECK(TemporalAdjacencyStore::load(buf) == s);
}
