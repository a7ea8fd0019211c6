// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Usage: acceptance <path-to-rtgn-binary>

#include <unistd.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "op_cases.hpp"
#include "rtgn/cli.hpp"
#include "rtgn/eval.hpp"
#include "rtgn/heads.hpp"
#include "rtgn/noise.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace rtgn;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("rtgn_accept_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// ---- 1 ------------------------------------------------------------------

Outcome gradients() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    std::string worst_op;
    auto note = [&](double err, const std::string& op) {
        if (err > worst) worst = err, worst_op = op;
    };
    for (const auto& op : testing::op_cases()) {
        for (int restart = 0; restart < 10; ++restart) {
            std::vector<diff::Parameter> ps;
            for (auto [r, c, lo, hi] : op.shapes)
                ps.push_back(testing::param("p", r, c, testing::uniform(rng, r * c, lo, hi)));
            std::vector<diff::Parameter*> ptrs;
            for (auto& p : ps) ptrs.push_back(&p);
            const auto w = testing::randn(rng, 8);
            note(diff::grad_check([&](diff::Tape& t) { return op.build(t, ps, w); }, ptrs, 1e-5), op.name);
        }
    }
    for (int restart = 0; restart < 10; ++restart) {
        diff::GruParams g("gru", 3, 4);
        for (auto* p : g.all()) p->value = testing::randn(rng, p->size(), 0.5);
        auto h = testing::param("h", 3, 1, testing::uniform(rng, 3, -0.9, 0.9));
        auto x = testing::param("x", 4, 1, testing::randn(rng, 4));
        const auto w = testing::randn(rng, 3);
        auto ps = g.all();
        ps.push_back(&h);
        ps.push_back(&x);
        note(diff::grad_check([&](diff::Tape& t) { return testing::project(t, gru_cell(t.param(h), t.param(x), g), w); },
                              ps, 1e-5),
             "gru_cell");
    }

    // full positive NLL of a 4-node toy model, memory path included
    encoder::EncoderConfig c;
    c.memory_dim = 4;
    c.time_dim = 3;
    c.embed_dim = 3;
    c.feature_dim = 2;
    c.hidden_dim = 5;
    c.neighbors = 3;
    c.memory_grad = true;
    for (int restart = 0; restart < 10; ++restart) {
        Model model = make_model(c, encoder::HeadKind::Gaussian, 100 + restart);
        model.set_center(testing::randn(rng, model.event_dim(), 0.5));
        auto bank = encoder::init_memory(4, c.memory_dim, c.message_dim(), 0.0);
        ctdg::TemporalAdjacencyStore store;
        const auto history = testing::random_stream(rng, 12, 4, 2);
        for (const auto& e : history) {
            encoder::apply_event(bank, e, model.params);
            store.insert(e);
        }
        std::vector<ctdg::Event> batch;
        for (ctdg::NodeId i = 0; i < 4; ++i) {
            ctdg::Event e;
            e.src = i;
            e.dst = (i + 1) % 4;
            e.t = history.back().t + 1.0 + i;
            e.features = testing::randn(rng, 2);
            batch.push_back(e);
        }
        auto ps = model.trainable();
        auto loss = [&](diff::Tape& t) {
            encoder::MemoryView view(t, bank, model.params, true);
            return heads::batch_loss(t, view, model, batch, {}, bank, store).positive;
        };
        note(diff::grad_check(loss, ps, 1e-5), "positive NLL (4-node model)");
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-4 && secs < 60.0,
            "max relative error " + fmt("%.2e", worst) + " (" + worst_op + "), " + fmt("%.1f s", secs)};
}

// ---- 2 ------------------------------------------------------------------

Outcome metrics() {
    std::mt19937_64 rng(7);
    double worst = 0.0;
    std::size_t f1_mismatch = 0;
    for (int k = 0; k < 100; ++k) {
        const std::size_t n = 2 + rng() % 199;
        std::uniform_int_distribution<int> lv(0, k % 3 == 0 ? 3 : 50);
        std::vector<double> s(n);
        std::vector<std::uint8_t> y(n);
        for (std::size_t i = 0; i < n; ++i) s[i] = lv(rng) * 0.25, y[i] = rng() % 3 == 0;
        y[0] = 1;
        y[1] = 0;
        double wins = 0.0, pairs = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (y[i] && !y[j]) pairs += 1.0, wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
        worst = std::max(worst, std::abs(eval::roc_auc(s, y) - wins / pairs));

        const auto taus = eval::linear_grid(-0.5, 13.0, 28);
        const auto r = eval::f1_grid(s, y, taus);
        for (std::size_t t = 0; t < taus.size(); ++t) {
            std::size_t tp = 0, fp = 0, fn = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const bool pred = s[i] > taus[t];
                tp += pred && y[i];
                fp += pred && !y[i];
                fn += !pred && y[i];
            }
            const double p = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
            const double rc = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
            const double f = p + rc > 0.0 ? 2.0 * p * rc / (p + rc) : 0.0;
            f1_mismatch += r.curve[t].precision != p || r.curve[t].recall != rc || r.curve[t].f1 != f;
        }
    }
    return {worst <= 1e-12 && f1_mismatch == 0,
            "max |auc - pair oracle| " + fmt("%.2e", worst) + ", f1 mismatches " + std::to_string(f1_mismatch)};
}

// ---- 3 ------------------------------------------------------------------

Outcome anchors() {
    std::mt19937_64 rng(3);
    const auto mi = testing::randn(rng, 4), mj = testing::randn(rng, 4);
    std::vector<double> c(mi);
    c.insert(c.end(), mj.begin(), mj.end());
    const std::vector<double> one(4, 1.0), root_e(4, std::exp(0.5));
    const double a = heads::positive_nll(mi, one, mj, one, c, 1e-4);
    const double b = heads::positive_nll(mi, root_e, mj, root_e, c, 1e-4);
    const std::vector<double> s(4, 0.37);
    const double sig = heads::score_sigma(s, s);

    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const auto zi = testing::randn(rng, 5), zj = testing::randn(rng, 5), cc = testing::randn(rng, 10);
        diff::Tape t(false);
        const double ref = diff::sq_dist(diff::concat(t.constant(zi), t.constant(zj)), t.constant(cc)).item();
        worst = std::max(worst, std::abs(heads::svdd_score(zi, zj, cc) - ref));
    }
    const bool ok = std::abs(a) <= 1e-12 && std::abs(b - 1.0) <= 1e-12 && std::abs(sig - 0.37) <= 1e-12 &&
                    worst <= 1e-12;
    return {ok, "nll(c,1) " + fmt("%.3g", a) + ", nll(c,e^0.5) " + fmt("%.15g", b) + ", score_sigma " +
                    fmt("%.15g", sig) + ", svdd vs sq_dist " + fmt("%.2e", worst)};
}

// ---- 4 ------------------------------------------------------------------

RunConfig replay_config() {
    RunConfig c;
    c.apply_seed(11);
    c.synth.nodes = 40;
    c.synth.normal_events = 3000;
    c.synth.attack_events = 90;
    c.synth.attackers = 4;
    c.train.epochs = 2;
    c.eval.noise_ratios = {10, 50};
    c.eval.resamples = 2;
    c.eval.tau.mode = eval::TauGridConfig::Mode::ValidationQuantile;
    return c;
}

Outcome causality() {
    const auto cfg = replay_config();
    std::vector<std::string> artifacts[2];
    for (int run = 0; run < 2; ++run) {
        const auto dir = scratch("replay" + std::to_string(run));
        cli::cmd_synth(cfg, dir / "d.csv");
        for (auto head : {encoder::HeadKind::Svdd, encoder::HeadKind::Gaussian}) {
            auto c = cfg;
            c.head = head;
            const std::string tag = encoder::to_string(head);
            cli::cmd_train(c, dir / "d.csv", dir / (tag + ".ckpt"), dir / (tag + ".loss.csv"));
        }
        cli::cmd_evaluate(cfg, {dir / "svdd.ckpt", dir / "gaussian.ckpt"}, dir / "d.csv", dir / "r.csv");
        for (const char* f : {"d.csv", "svdd.ckpt", "gaussian.ckpt", "svdd.loss.csv", "gaussian.loss.csv", "r.csv"})
            artifacts[run].push_back(slurp(dir / f));
    }
    const bool replay = artifacts[0] == artifacts[1] && !artifacts[0].back().empty();

    // Embeddings at a cut time. The full run also holds every later event in
    // the adjacency store; the truncated run never saw them.
    Model model = load_checkpoint(fs::temp_directory_path() / ("rtgn_accept_" + std::to_string(::getpid())) /
                                  "replay1" / "gaussian.ckpt");
    const auto ds = data::synth_generate(cfg.synth);
    auto split = data::chronological_split(ds, cfg.split);
    std::vector<ctdg::Event> stream = split.train;
    stream.insert(stream.end(), split.val.begin(), split.val.end());
    stream.insert(stream.end(), split.test.begin(), split.test.end());
    model.scaler.apply(stream);
    std::size_t differing = 0;
    for (double frac : {0.3, 0.75, 0.95}) {
        const double cut = stream[static_cast<std::size_t>(frac * stream.size())].t;
        auto embed_all = [&](bool with_future) {
            auto state = eval::initial_state(model, ds.node_count(), stream.front().t);
            for (const auto& e : stream) {
                if (e.t < cut) {
                    encoder::apply_event(state.bank, e, model.params);
                    state.store.insert(e);
                } else if (with_future) {
                    state.store.insert(e);
                }
            }
            std::vector<encoder::GaussianNodeEmbedding> out;
            for (ctdg::NodeId n = 0; n < ds.node_count(); ++n)
                out.push_back(encoder::embed_values(n, cut, state.bank, state.store, model.params));
            return out;
        };
        const auto full = embed_all(true);
        const auto cut_only = embed_all(false);
        for (std::size_t n = 0; n < full.size(); ++n)
            differing += full[n].mu != cut_only[n].mu || full[n].sigma != cut_only[n].sigma;
    }
    return {replay && differing == 0, std::string("bitwise replay of synth/train/evaluate ") +
                                          (replay ? "identical" : "DIFFERS") + ", truncation oracle " +
                                          std::to_string(differing) + " differing embeddings"};
}

// ---- 5 ------------------------------------------------------------------

Outcome noise_statistics() {
    const std::size_t n = 100000, f = 4;
    std::vector<ctdg::NodeId> nodes(50);
    std::iota(nodes.begin(), nodes.end(), ctdg::NodeId{0});
    noise::NoiseConfig cfg;
    cfg.variance = 5.0;
    cfg.t_end = 1.0;
    std::mt19937_64 rng(5);
    const auto ev = noise::craft_noise_events(nodes, n, f, cfg, rng);

    bool ok = true;
    double worst_mean_z = 0.0, worst_var_rel = 0.0;
    for (std::size_t d = 0; d < f; ++d) {
        double s = 0.0, sq = 0.0;
        for (const auto& e : ev) s += e.features[d], sq += e.features[d] * e.features[d];
        const double mean = s / n, var = sq / n - mean * mean;
        const double z = std::abs(mean) / std::sqrt(5.0 / n);
        worst_mean_z = std::max(worst_mean_z, z);
        worst_var_rel = std::max(worst_var_rel, std::abs(var - 5.0) / 5.0);
        ok = ok && z <= 3.0 && std::abs(var - 5.0) <= 0.05 * 5.0;
    }
    std::vector<double> counts(nodes.size(), 0.0);
    for (const auto& e : ev) counts[e.src] += 1.0, counts[e.dst] += 1.0;
    const double expected = 2.0 * n / nodes.size();
    double stat = 0.0;
    for (double c : counts) stat += (c - expected) * (c - expected) / expected;
    boost::math::chi_squared dist(static_cast<double>(nodes.size() - 1));
    const double p = boost::math::cdf(boost::math::complement(dist, stat));
    ok = ok && p > 0.01;
    return {ok, "max |mean|/(sigma/sqrt n) " + fmt("%.2f", worst_mean_z) + ", max variance error " +
                    fmt("%.2f%%", 100.0 * worst_var_rel) + ", endpoint chi-square p " + fmt("%.3f", p)};
}

// ---- 6-8: one desk-scale run through the command-line tool -------------

struct DeskRun {
    fs::path dir;
    std::vector<std::pair<std::string, int>> exit_codes;
    double synth_s = 0.0, train_svdd_s = 0.0, train_gauss_s = 0.0, evaluate_s = 0.0;
};

int shell(const std::string& cmd) {
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

DeskRun desk_run(const std::string& binary) {
    DeskRun r;
    r.dir = scratch("desk");
    const std::string cfg = std::string(RTGN_SOURCE_DIR) + "/configs/desk.ini";
    const std::string base = "'" + binary + "' --config '" + cfg + "' --seed 0 ";
    const std::string d = r.dir.string();
    auto step = [&](const std::string& name, const std::string& args, double& secs) {
        const auto t0 = Clock::now();
        const int rc = shell(base + args + " >'" + d + "/" + name + ".out' 2>'" + d + "/" + name + ".err'");
        secs = seconds_since(t0);
        r.exit_codes.emplace_back(name, rc);
        std::cout << "  " << name << " exit " << rc << " (" << fmt("%.1f s", secs) << ")\n" << std::flush;
    };
    step("synth", "synth -o '" + d + "/d.csv'", r.synth_s);
    step("train-svdd", "--head svdd train --data '" + d + "/d.csv' -o '" + d + "/s.ckpt'", r.train_svdd_s);
    step("train-gaussian", "--head gaussian train --data '" + d + "/d.csv' -o '" + d + "/g.ckpt'", r.train_gauss_s);
    step("evaluate", "evaluate --data '" + d + "/d.csv' -c '" + d + "/s.ckpt' -c '" + d + "/g.ckpt' -o '" + d +
                         "/r.csv'",
         r.evaluate_s);
    return r;
}

Outcome sigma_mechanism(const DeskRun& run) {
    const auto t0 = Clock::now();
    RunConfig cfg = load_config(std::string(RTGN_SOURCE_DIR) + "/configs/desk.ini");
    cfg.apply_seed(0);
    const auto scored = cli::cmd_trace(cfg, run.dir / "g.ckpt", run.dir / "d.csv", run.dir / "trace.csv", 10.0);
    const auto ds = data::ingest_csv(run.dir / "d.csv");
    const auto split = data::chronological_split(ds, cfg.split);
    std::vector<double> s;
    std::vector<std::uint8_t> is_noise;
    double noise_sum = 0.0, normal_sum = 0.0;
    std::size_t noise_n = 0, normal_n = 0;
    for (const auto& e : scored) {
        if (e.t < split.t_test) continue;
        if (e.label == ctdg::Label::Noise) {
            noise_sum += e.s_sigma, ++noise_n;
        } else if (e.label == ctdg::Label::Normal) {
            normal_sum += e.s_sigma, ++normal_n;
        } else {
            continue;
        }
        s.push_back(e.s_sigma);
        is_noise.push_back(e.label == ctdg::Label::Noise);
    }
    const double auc = eval::roc_auc(s, is_noise);
    const double mn = noise_sum / noise_n, mh = normal_sum / normal_n;
    const double secs = run.synth_s + run.train_gauss_s + seconds_since(t0);
    return {mn > mh && auc >= 0.80 && secs < 600.0,
            "mean s_sigma noise " + fmt("%.3f", mn) + " vs normal " + fmt("%.3f", mh) + ", AUC " + fmt("%.3f", auc) +
                " over " + std::to_string(noise_n) + " noise / " + std::to_string(normal_n) + " normal, " +
                fmt("%.0f s", secs)};
}

std::optional<std::vector<eval::SummaryRow>> report_rows(const DeskRun& run) {
    std::ifstream is(run.dir / "r.csv");
    if (!is) return std::nullopt;
    try {
        return eval::read_report_csv(is);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

Outcome trend(const DeskRun& run) {
    const auto rows = report_rows(run);
    if (!rows) return {false, "no readable report"};
    auto mean = [&](double ratio, const char* model) -> std::optional<double> {
        for (const auto& r : *rows)
            if (r.noise_ratio == ratio && r.model == model) return r.mean_auc;
        return std::nullopt;
    };
    std::string base_str, robust_str;
    bool non_increasing = true;
    std::optional<double> prev;
    for (double ratio : {10.0, 20.0, 30.0, 40.0, 50.0}) {
        const auto b = mean(ratio, "TGN-SVDD");
        const auto g = mean(ratio, "RTGN-SVDD");
        if (!b || !g) return {false, "report is missing ratio " + fmt("%g", ratio)};
        if (prev && *b > *prev) non_increasing = false;
        prev = b;
        base_str += (base_str.empty() ? "" : " ") + fmt("%.1f", 100.0 * *b);
        robust_str += (robust_str.empty() ? "" : " ") + fmt("%.1f", 100.0 * *g);
    }
    const double gap = 100.0 * (*mean(50, "RTGN-SVDD") - *mean(50, "TGN-SVDD"));
    const double secs = run.synth_s + run.train_svdd_s + run.train_gauss_s + run.evaluate_s;
    return {non_increasing && gap >= 5.0 && secs < 1800.0,
            "TGN-SVDD " + base_str + (non_increasing ? " (non-increasing)" : " (NOT non-increasing)") +
                "; RTGN-SVDD " + robust_str + "; gap at 50% " + fmt("%.1f", gap) + " points; " +
                fmt("%.0f s", secs)};
}

Outcome pipeline(const DeskRun& run) {
    bool exits_ok = true;
    std::string codes;
    for (const auto& [name, rc] : run.exit_codes) {
        exits_ok = exits_ok && rc == 0;
        codes += (codes.empty() ? "" : ", ") + name + "=" + std::to_string(rc);
    }
    std::ifstream is(run.dir / "r.csv");
    std::string header;
    std::getline(is, header);
    const auto rows = report_rows(run);
    bool shape = rows && rows->size() == 10;
    if (shape) {
        const char* models[2] = {"TGN-SVDD", "RTGN-SVDD"};
        for (std::size_t i = 0; i < 10; ++i)
            shape = shape && (*rows)[i].noise_ratio == 10.0 * (i / 2 + 1) && (*rows)[i].model == models[i % 2];
    }
    const bool header_ok = header == "noise_ratio,model,mean_auc,std_auc";
    const std::string table = slurp(run.dir / "evaluate.out");
    const bool table_ok = std::count(table.begin(), table.end(), '\n') == 6;
    return {exits_ok && header_ok && shape && table_ok,
            "exit codes " + codes + "; header " + (header_ok ? "ok" : "BAD") + "; rows " +
                (rows ? std::to_string(rows->size()) : std::string("unreadable")) + (shape ? " (5 ratios x 2 models)" : "") +
                "; printed table " + (table_ok ? "ok" : "BAD")};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: acceptance <path-to-rtgn>\n";
        return 2;
    }
    const std::string binary = argv[1];
    int failures = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << id << "] " << name << ": " << o.detail << "\n"
                  << std::flush;
    };

    report(1, "gradient correctness", gradients);
    report(2, "metric oracle", metrics);
    report(3, "formula anchors", anchors);
    report(4, "causality and determinism", causality);
    report(5, "noise-model statistics", noise_statistics);

    std::cout << "desk run (configs/desk.ini, seed 0):\n" << std::flush;
    const DeskRun run = desk_run(binary);
    report(6, "sigma mechanism", [&] { return sigma_mechanism(run); });
    report(7, "noise trend at desk scale", [&] { return trend(run); });
    report(8, "pipeline integrity", [&] { return pipeline(run); });

    std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed"))
              << "\n";
    fs::remove_all(fs::temp_directory_path() / ("rtgn_accept_" + std::to_string(::getpid())));
    return failures ? 1 : 0;
}
