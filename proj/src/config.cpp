#include "rtgn/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>
#include <vector>

namespace rtgn {

namespace {

std::string trim(std::string s) {
    auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
    return s;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double to_double(const std::string& v) {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return d;
}

std::uint64_t to_u64(const std::string& v) {
    if (v.empty() || v[0] == '-') throw std::invalid_argument("expected a non-negative integer");
    std::size_t used = 0;
    const auto u = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return u;
}

bool to_bool(std::string v) {
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument("expected true or false");
}

std::vector<double> to_list(const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item)));
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
}

std::string list_str(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        char buf[40];
        std::snprintf(buf, sizeof buf, "%g", v[i]);
        s += buf;
    }
    return s;
}

struct Key {
    const char* section;
    const char* name;
    std::function<std::string()> get;
    std::function<void(const std::string&)> set;
};

std::vector<Key> keys(RunConfig& c) {
    std::vector<Key> k;
    auto size_key = [&](const char* sec, const char* name, std::size_t& ref) {
        k.push_back({sec, name, [&ref] { return std::to_string(ref); },
                     [&ref](const std::string& v) { ref = static_cast<std::size_t>(to_u64(v)); }});
    };
    auto real_key = [&](const char* sec, const char* name, double& ref) {
        k.push_back({sec, name, [&ref] { return fmt(ref); }, [&ref](const std::string& v) { ref = to_double(v); }});
    };
    auto bool_key = [&](const char* sec, const char* name, bool& ref) {
        k.push_back({sec, name, [&ref] { return std::string(ref ? "true" : "false"); },
                     [&ref](const std::string& v) { ref = to_bool(v); }});
    };

    k.push_back({"run", "seed", [&c] { return std::to_string(c.seed); },
                 [&c](const std::string& v) { c.seed = to_u64(v); }});
    k.push_back({"run", "head", [&c] { return std::string(encoder::to_string(c.head)); },
                 [&c](const std::string& v) { c.head = encoder::parse_head(v); }});

    size_key("synth", "nodes", c.synth.nodes);
    size_key("synth", "communities", c.synth.communities);
    size_key("synth", "normal_events", c.synth.normal_events);
    real_key("synth", "duration", c.synth.duration);
    size_key("synth", "feature_dim", c.synth.feature_dim);
    real_key("synth", "intra_community", c.synth.intra_community);
    real_key("synth", "popularity_exponent", c.synth.popularity_exponent);
    real_key("synth", "community_mean_scale", c.synth.community_mean_scale);
    size_key("synth", "attack_events", c.synth.attack_events);
    size_key("synth", "attack_bursts", c.synth.attack_bursts);
    real_key("synth", "attack_start", c.synth.attack_start);
    real_key("synth", "attack_end", c.synth.attack_end);
    size_key("synth", "victims", c.synth.victims);
    size_key("synth", "attackers", c.synth.attackers);
    real_key("synth", "attack_shift", c.synth.attack_shift);
    real_key("synth", "attack_shift_fraction", c.synth.attack_shift_fraction);

    real_key("split", "train", c.split.train);
    real_key("split", "val", c.split.val);
    real_key("split", "test", c.split.test);

    size_key("encoder", "memory_dim", c.encoder.memory_dim);
    size_key("encoder", "time_dim", c.encoder.time_dim);
    size_key("encoder", "embed_dim", c.encoder.embed_dim);
    size_key("encoder", "feature_dim", c.encoder.feature_dim);
    size_key("encoder", "hidden_dim", c.encoder.hidden_dim);
    size_key("encoder", "neighbors", c.encoder.neighbors);
    real_key("encoder", "sigma_floor", c.encoder.sigma_floor);
    real_key("encoder", "time_scale_decades", c.encoder.time_scale_decades);
    bool_key("encoder", "memory_grad", c.encoder.memory_grad);

    real_key("train", "lr", c.train.lr);
    real_key("train", "weight_decay", c.train.weight_decay);
    size_key("train", "epochs", c.train.epochs);
    size_key("train", "batch_size", c.train.batch_size);
    real_key("train", "neg_ratio", c.train.neg_ratio);
    real_key("train", "neg_variance", c.train.neg_variance);
    real_key("train", "clip_norm", c.train.clip_norm);

    real_key("noise", "variance", c.eval.noise_variance);

    k.push_back({"eval", "noise_ratios", [&c] { return list_str(c.eval.noise_ratios); },
                 [&c](const std::string& v) { c.eval.noise_ratios = to_list(v); }});
    size_key("eval", "resamples", c.eval.resamples);
    bool_key("eval", "update_memory", c.eval.update_memory_at_inference);
    bool_key("eval", "parallel", c.eval.parallel);
    k.push_back({"eval", "tau_mode",
                 [&c] {
                     return std::string(c.eval.tau.mode == eval::TauGridConfig::Mode::Fixed ? "fixed" : "quantile");
                 },
                 [&c](const std::string& v) {
                     if (v == "fixed") c.eval.tau.mode = eval::TauGridConfig::Mode::Fixed;
                     else if (v == "quantile") c.eval.tau.mode = eval::TauGridConfig::Mode::ValidationQuantile;
                     else throw std::invalid_argument("expected fixed or quantile");
                 }});
    real_key("eval", "tau_min", c.eval.tau.min);
    real_key("eval", "tau_max", c.eval.tau.max);
    size_key("eval", "tau_steps", c.eval.tau.steps);
    real_key("eval", "tau_quantile_min", c.eval.tau.quantile_min);
    real_key("eval", "tau_quantile_max", c.eval.tau.quantile_max);
    return k;
}

}  // namespace

void RunConfig::apply_seed(std::uint64_t s) {
    seed = s;
    synth.seed = s;
    train.seed = s;
    eval.seed = s;
}

std::string RunConfig::to_ini() const {
    RunConfig copy = *this;
    std::ostringstream os;
    std::string section;
    for (const Key& k : keys(copy)) {
        if (section != k.section) {
            if (!section.empty()) os << "\n";
            section = k.section;
            os << "[" << section << "]\n";
        }
        os << k.name << " = " << k.get() << "\n";
    }
    return os.str();
}

void RunConfig::validate() const {
    synth.validate();
    split.validate();
    train.validate();
    eval.tau.validate();
    if (!(eval.noise_variance > 0.0)) throw ConfigError("noise.variance must be positive");
    if (eval.resamples < 2) throw ConfigError("eval.resamples must be at least 2");
    if (encoder.memory_dim == 0 || encoder.time_dim == 0 || encoder.embed_dim == 0 || encoder.hidden_dim == 0 ||
        encoder.neighbors == 0)
        throw ConfigError("encoder dimensions must be positive");
}

RunConfig parse_config(std::istream& is, const std::string& source) {
    RunConfig c;
    auto table = keys(c);
    std::string section = "run";
    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& what) {
        throw ConfigError(source + ":" + std::to_string(lineno) + ": " + what);
    };
    while (std::getline(is, line)) {
        ++lineno;
        if (auto hash = line.find_first_of("#;"); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail("unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            const bool known = std::any_of(table.begin(), table.end(),
                                           [&](const Key& k) { return section == k.section; });
            if (!known) fail("unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail("expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto it = std::find_if(table.begin(), table.end(),
                               [&](const Key& k) { return section == k.section && key == k.name; });
        if (it == table.end()) fail("unknown key '" + key + "' in [" + section + "]");
        try {
            it->set(value);
        } catch (const std::exception& e) {
            fail("bad value '" + value + "' for " + section + "." + key + ": " + e.what());
        }
    }
    c.apply_seed(c.seed);
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError(path.string() + ": cannot open config");
    return parse_config(is, path.string());
}

}  // namespace rtgn
