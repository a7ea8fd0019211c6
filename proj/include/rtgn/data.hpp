#pragma once

// Flow-record datasets: CSV ingestion/export, chronological splits, feature
// standardization and a seeded synthetic benchmark generator.
//
// CSV schema: header `src,dst,timestamp,label,f_1,...,f_k`. Endpoints are
// arbitrary strings mapped to dense ids in order of first appearance (after
// sorting by timestamp). Labels are case-insensitive: "benign"/"normal" ->
// Normal, "noise" -> Noise, anything else -> Attack.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "rtgn/ctdg.hpp"

namespace rtgn::data {

using ctdg::Event;
using ctdg::Label;
using ctdg::NodeId;

class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SplitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EventDataset {
    std::vector<Event> events;
    std::vector<std::string> node_names;
    std::size_t feature_dim = 0;

    NodeId intern(const std::string& name);
    std::size_t node_count() const { return node_names.size(); }
    std::size_t count(Label label) const;
    double start_time() const { return events.empty() ? 0.0 : events.front().t; }
    double end_time() const { return events.empty() ? 0.0 : events.back().t; }

private:
    std::unordered_map<std::string, NodeId> ids_;
};

Label parse_label(std::string_view text);

EventDataset parse_csv(std::istream& is, const std::string& source = "<stream>");
EventDataset ingest_csv(const std::filesystem::path& path);

// Writes events with endpoint names from `node_names`; 17 significant digits.
void export_csv(std::ostream& os, std::span<const Event> events, std::span<const std::string> node_names,
                std::size_t feature_dim);
void export_csv(std::ostream& os, const EventDataset& dataset);

struct SplitSpec {
    double train = 0.70;
    double val = 0.15;
    double test = 0.15;

    void validate() const;
};

struct Split {
    std::vector<Event> train;
    std::vector<Event> val;
    std::vector<Event> test;
    double t_val = 0.0;   // first validation timestamp
    double t_test = 0.0;  // first test timestamp
    double t_max = 0.0;   // last timestamp of the dataset
};

// Contiguous time-ordered split. Events sharing a timestamp with a boundary
// all go to the earlier split. Train and validation must be Normal only.
Split chronological_split(const EventDataset& dataset, const SplitSpec& spec);

struct Scaler {
    std::vector<double> mean;
    std::vector<double> std;

    static constexpr double kStdFloor = 1e-8;

    static Scaler fit(std::span<const Event> train);
    bool empty() const { return mean.empty(); }
    void apply(Event& e) const;
    void apply(std::span<Event> events) const;

    bool operator==(const Scaler&) const = default;
};

// Fits on train and rescales every split in place; returns the scaler.
Scaler standardize(Split& split);

struct SynthConfig {
    std::size_t nodes = 100;
    std::size_t communities = 4;
    std::size_t normal_events = 20000;
    double duration = 10000.0;
    std::size_t feature_dim = 8;
    double intra_community = 0.9;
    // Zipf exponent of node activity within each community.
    double popularity_exponent = 1.2;
    double community_mean_scale = 2.0;
    std::size_t attack_events = 600;
    std::size_t attack_bursts = 4;
    // Attacks are confined to [attack_start, attack_end] x duration.
    double attack_start = 0.90;
    double attack_end = 0.99;
    std::size_t victims = 3;
    std::size_t attackers = 10;
    double attack_shift = 3.0;
    double attack_shift_fraction = 0.25;
    std::uint64_t seed = 0;

    void validate() const;
};

EventDataset synth_generate(const SynthConfig& config, std::mt19937_64& rng);
EventDataset synth_generate(const SynthConfig& config);

}  // namespace rtgn::data
