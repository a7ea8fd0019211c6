#include "rtgn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace rtgn::data {

NodeId EventDataset::intern(const std::string& name) {
    if (auto it = ids_.find(name); it != ids_.end()) return it->second;
    const auto id = static_cast<NodeId>(node_names.size());
    node_names.push_back(name);
    ids_.emplace(name, id);
    return id;
}

std::size_t EventDataset::count(Label label) const {
    return static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [label](const Event& e) { return e.label == label; }));
}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

bool parse_double(std::string_view text, double& out) {
    if (text.empty()) return false;
    if (text.front() == '+') text.remove_prefix(1);
    const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    return res.ec == std::errc() && res.ptr == text.data() + text.size() && std::isfinite(out);
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Row {
    std::string src;
    std::string dst;
    double t;
    Label label;
    std::vector<double> features;
};

}  // namespace

Label parse_label(std::string_view text) {
    const std::string l = lower(trim(text));
    if (l == "benign" || l == "normal") return Label::Normal;
    if (l == "noise") return Label::Noise;
    return Label::Attack;
}

EventDataset parse_csv(std::istream& is, const std::string& source) {
    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& what) -> CsvError {
        return CsvError(source + ":" + std::to_string(lineno) + ": " + what);
    };

    if (!std::getline(is, line)) {
        lineno = 1;
        throw fail("empty file, expected header src,dst,timestamp,label,f_1..f_k");
    }
    ++lineno;
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
    const auto header = split_fields(line);
    const char* required[] = {"src", "dst", "timestamp", "label"};
    for (std::size_t i = 0; i < 4; ++i) {
        if (header.size() <= i || lower(header[i]) != required[i])
            throw fail(std::string("missing column '") + required[i] + "' at position " + std::to_string(i + 1));
    }
    const std::size_t fdim = header.size() - 4;
    for (std::size_t k = 0; k < fdim; ++k) {
        if (lower(header[4 + k]) != "f_" + std::to_string(k + 1))
            throw fail("expected feature column f_" + std::to_string(k + 1) + ", got '" +
                       std::string(header[4 + k]) + "'");
    }

    std::vector<Row> rows;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto f = split_fields(line);
        if (f.size() != header.size())
            throw fail("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
        Row r;
        r.src = std::string(f[0]);
        r.dst = std::string(f[1]);
        if (r.src.empty() || r.dst.empty()) throw fail("empty endpoint");
        if (!parse_double(f[2], r.t)) throw fail("unparseable timestamp '" + std::string(f[2]) + "'");
        r.label = parse_label(f[3]);
        r.features.resize(fdim);
        for (std::size_t k = 0; k < fdim; ++k)
            if (!parse_double(f[4 + k], r.features[k]))
                throw fail("non-numeric feature f_" + std::to_string(k + 1) + " '" + std::string(f[4 + k]) + "'");
        rows.push_back(std::move(r));
    }

    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
    EventDataset ds;
    ds.feature_dim = fdim;
    ds.events.reserve(rows.size());
    for (Row& r : rows) {
        Event e;
        e.src = ds.intern(r.src);
        e.dst = ds.intern(r.dst);
        e.t = r.t;
        e.label = r.label;
        e.features = std::move(r.features);
        ds.events.push_back(std::move(e));
    }
    return ds;
}

EventDataset ingest_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CsvError(path.string() + ": cannot open file");
    return parse_csv(in, path.string());
}

void export_csv(std::ostream& os, std::span<const Event> events, std::span<const std::string> node_names,
                std::size_t feature_dim) {
    os << "src,dst,timestamp,label";
    for (std::size_t k = 0; k < feature_dim; ++k) os << ",f_" << (k + 1);
    os << '\n';
    for (const Event& e : events) {
        if (e.features.size() != feature_dim) throw CsvError("export: event feature dimension mismatch");
        os << node_names[e.src] << ',' << node_names[e.dst] << ',' << format_double(e.t) << ','
           << ctdg::to_string(e.label);
        for (double v : e.features) os << ',' << format_double(v);
        os << '\n';
    }
}

void export_csv(std::ostream& os, const EventDataset& dataset) {
    export_csv(os, dataset.events, dataset.node_names, dataset.feature_dim);
}

// ---------------------------------------------------------------------------

void SplitSpec::validate() const {
    if (!(train > 0.0 && val > 0.0 && test > 0.0))
        throw SplitError("split fractions must all be positive");
    if (std::abs(train + val + test - 1.0) > 1e-9) throw SplitError("split fractions must sum to 1");
}

Split chronological_split(const EventDataset& dataset, const SplitSpec& spec) {
    spec.validate();
    const auto& ev = dataset.events;
    const std::size_t n = ev.size();
    if (n == 0) throw SplitError("cannot split an empty dataset");

    auto boundary = [&](double frac) {
        auto b = static_cast<std::size_t>(std::llround(static_cast<double>(n) * frac));
        b = std::min(b, n);
        while (b > 0 && b < n && ev[b].t == ev[b - 1].t) ++b;
        return b;
    };
    const std::size_t b1 = boundary(spec.train);
    const std::size_t b2 = std::max(b1, boundary(spec.train + spec.val));

    Split s;
    s.train.assign(ev.begin(), ev.begin() + static_cast<std::ptrdiff_t>(b1));
    s.val.assign(ev.begin() + static_cast<std::ptrdiff_t>(b1), ev.begin() + static_cast<std::ptrdiff_t>(b2));
    s.test.assign(ev.begin() + static_cast<std::ptrdiff_t>(b2), ev.end());
    s.t_val = s.val.empty() ? (s.test.empty() ? ev.back().t : s.test.front().t) : s.val.front().t;
    s.t_test = s.test.empty() ? ev.back().t : s.test.front().t;
    s.t_max = ev.back().t;

    for (std::size_t i = 0; i < b2; ++i) {
        if (ev[i].label != Label::Normal) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "event " << i << " at t=" << ev[i].t << " is labelled " << ctdg::to_string(ev[i].label)
                << " but falls before the test boundary (index " << b2
                << "); shrink the train/validation fractions so attacks land in the test split";
            throw SplitError(msg.str());
        }
    }
    return s;
}

// ---------------------------------------------------------------------------

Scaler Scaler::fit(std::span<const Event> train) {
    if (train.empty()) throw std::invalid_argument("Scaler::fit: empty training split");
    const std::size_t d = train.front().features.size();
    Scaler s;
    s.mean.assign(d, 0.0);
    s.std.assign(d, 0.0);
    for (const Event& e : train)
        for (std::size_t k = 0; k < d; ++k) s.mean[k] += e.features[k];
    const double n = static_cast<double>(train.size());
    for (double& m : s.mean) m /= n;
    for (const Event& e : train)
        for (std::size_t k = 0; k < d; ++k) {
            const double r = e.features[k] - s.mean[k];
            s.std[k] += r * r;
        }
    for (double& v : s.std) v = std::max(std::sqrt(v / n), kStdFloor);
    return s;
}

void Scaler::apply(Event& e) const {
    if (e.features.size() != mean.size())
        throw std::invalid_argument("Scaler::apply: feature dimension " + std::to_string(e.features.size()) +
                                    " vs scaler dimension " + std::to_string(mean.size()));
    for (std::size_t k = 0; k < mean.size(); ++k) e.features[k] = (e.features[k] - mean[k]) / std[k];
}

void Scaler::apply(std::span<Event> events) const {
    for (Event& e : events) apply(e);
}

Scaler standardize(Split& split) {
    Scaler s = Scaler::fit(split.train);
    s.apply(split.train);
    s.apply(split.val);
    s.apply(split.test);
    return s;
}

// ---------------------------------------------------------------------------

void SynthConfig::validate() const {
    if (nodes < 2) throw std::invalid_argument("synth: need at least 2 nodes");
    if (communities == 0 || communities > nodes) throw std::invalid_argument("synth: bad community count");
    if (!(duration > 0.0)) throw std::invalid_argument("synth: duration must be positive");
    if (feature_dim == 0) throw std::invalid_argument("synth: feature_dim must be positive");
    if (!(intra_community >= 0.0 && intra_community <= 1.0))
        throw std::invalid_argument("synth: intra_community must be in [0,1]");
    if (!(attack_start >= 0.0 && attack_start < attack_end && attack_end <= 1.0))
        throw std::invalid_argument("synth: need 0 <= attack_start < attack_end <= 1");
    if (attack_events > 0 && (victims == 0 || attackers == 0 || attack_bursts == 0))
        throw std::invalid_argument("synth: attacks need victims, attackers and bursts");
    if (victims + attackers > nodes) throw std::invalid_argument("synth: too many victims/attackers");
}

EventDataset synth_generate(const SynthConfig& cfg) {
    std::mt19937_64 rng(cfg.seed);
    return synth_generate(cfg, rng);
}

EventDataset synth_generate(const SynthConfig& cfg, std::mt19937_64& rng) {
    cfg.validate();
    const std::size_t n = cfg.nodes, C = cfg.communities, f = cfg.feature_dim;
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // Contiguous community blocks; Zipf activity by position within the block.
    std::vector<std::size_t> community(n);
    std::vector<std::vector<NodeId>> members(C);
    std::vector<double> weight(n);
    for (std::size_t k = 0; k < n; ++k) {
        community[k] = k * C / n;
        const std::size_t rank = members[community[k]].size();
        members[community[k]].push_back(static_cast<NodeId>(k));
        weight[k] = std::pow(static_cast<double>(rank + 1), -cfg.popularity_exponent);
    }
    std::vector<std::vector<double>> comm_mean(C, std::vector<double>(f));
    for (auto& m : comm_mean)
        for (double& v : m) v = cfg.community_mean_scale * gauss(rng);

    std::discrete_distribution<std::size_t> pick_global(weight.begin(), weight.end());
    std::vector<std::discrete_distribution<std::size_t>> pick_in(C);
    for (std::size_t c = 0; c < C; ++c) {
        std::vector<double> w;
        for (NodeId m : members[c]) w.push_back(weight[m]);
        pick_in[c] = std::discrete_distribution<std::size_t>(w.begin(), w.end());
    }

    struct Raw {
        NodeId src, dst;
        double t;
        Label label;
        std::vector<double> features;
    };
    std::vector<Raw> raw;
    raw.reserve(cfg.normal_events + cfg.attack_events);

    for (std::size_t i = 0; i < cfg.normal_events; ++i) {
        Raw r;
        r.t = unit(rng) * cfg.duration;
        r.src = static_cast<NodeId>(pick_global(rng));
        const std::size_t cs = community[r.src];
        do {
            if (C == 1 || unit(rng) < cfg.intra_community) {
                r.dst = members[cs][pick_in[cs](rng)];
            } else {
                std::size_t cd = std::uniform_int_distribution<std::size_t>(0, C - 2)(rng);
                if (cd >= cs) ++cd;
                r.dst = members[cd][pick_in[cd](rng)];
            }
        } while (r.dst == r.src);
        r.label = Label::Normal;
        r.features.resize(f);
        for (std::size_t k = 0; k < f; ++k) r.features[k] = comm_mean[cs][k] + gauss(rng);
        raw.push_back(std::move(r));
    }

    if (cfg.attack_events > 0) {
        // Victims are the most active node of successive communities, attackers
        // the next most active nodes taken round-robin from the last community
        // backwards; all of them also take part in normal traffic.
        std::vector<NodeId> victims, attackers;
        for (std::size_t i = 0; i < cfg.victims; ++i) {
            const auto& mem = members[i % C];
            victims.push_back(mem[(i / C) % mem.size()]);
        }
        for (std::size_t i = 0; i < cfg.attackers; ++i) {
            const auto& mem = members[(C - 1 - i % C)];
            attackers.push_back(mem[std::min<std::size_t>(1 + i / C, mem.size() - 1)]);
        }
        const std::size_t shifted =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.attack_shift_fraction * f)));
        const double a0 = cfg.attack_start * cfg.duration, a1 = cfg.attack_end * cfg.duration;
        const double slot = (a1 - a0) / static_cast<double>(cfg.attack_bursts);
        for (std::size_t i = 0; i < cfg.attack_events; ++i) {
            const std::size_t burst = i % cfg.attack_bursts;
            Raw r;
            // Each burst occupies the first quarter of its slot.
            r.t = a0 + slot * (static_cast<double>(burst) + 0.25 * unit(rng));
            r.src = attackers[std::uniform_int_distribution<std::size_t>(0, attackers.size() - 1)(rng)];
            r.dst = victims[std::uniform_int_distribution<std::size_t>(0, victims.size() - 1)(rng)];
            r.label = Label::Attack;
            r.features.resize(f);
            const std::size_t cs = community[r.src];
            for (std::size_t k = 0; k < f; ++k)
                r.features[k] = comm_mean[cs][k] + gauss(rng) + (k < shifted ? cfg.attack_shift : 0.0);
            raw.push_back(std::move(r));
        }
    }

    std::stable_sort(raw.begin(), raw.end(), [](const Raw& a, const Raw& b) { return a.t < b.t; });

    EventDataset ds;
    ds.feature_dim = f;
    ds.events.reserve(raw.size());
    for (Raw& r : raw) {
        Event e;
        e.src = ds.intern("node" + std::to_string(r.src));
        e.dst = ds.intern("node" + std::to_string(r.dst));
        e.t = r.t;
        e.label = r.label;
        e.features = std::move(r.features);
        ds.events.push_back(std::move(e));
    }
    return ds;
}

}  // namespace rtgn::data
