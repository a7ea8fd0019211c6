#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "rtgn/eval.hpp"
#include "rtgn/heads.hpp"
#include "rtgn/noise.hpp"
#include "support.hpp"

using namespace rtgn;
using namespace rtgn::eval;

namespace {

// P(s+ > s-) + 0.5 P(s+ == s-) by enumerating all pairs.
double pair_auc(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            if (y[i] && !y[j]) {
                pairs += 1.0;
                wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
            }
    return wins / pairs;
}

struct Instance {
    std::vector<double> s;
    std::vector<std::uint8_t> y;
};

Instance random_instance(std::mt19937_64& rng, std::size_t n, int levels) {
    std::uniform_int_distribution<int> lv(0, levels);
    std::bernoulli_distribution pos(0.3);
    Instance in;
    for (std::size_t i = 0; i < n; ++i) {
        in.s.push_back(lv(rng) * 0.5);
        in.y.push_back(pos(rng));
    }
    in.y[0] = 1;
    in.y[1] = 0;
    return in;
}

encoder::EncoderConfig toy_config(std::size_t f) {
    encoder::EncoderConfig c;
    c.memory_dim = 6;
    c.time_dim = 4;
    c.embed_dim = 4;
    c.feature_dim = f;
    c.hidden_dim = 8;
    c.neighbors = 4;
    return c;
}

}  // namespace

TEST_CASE("auc against pair counting") {
    std::mt19937_64 rng(1);
    for (int k = 0; k < 100; ++k) {
        const auto in = random_instance(rng, 5 + k, k % 2 ? 4 : 1000);
        CHECK(roc_auc(in.s, in.y) == doctest::Approx(pair_auc(in.s, in.y)).epsilon(1e-12));
    }
}

TEST_CASE("auc anchors and invariants") {
    const std::vector<std::uint8_t> y{0, 0, 1, 1};
    CHECK(roc_auc(std::vector<double>{0.1, 0.2, 0.3, 0.4}, y) == 1.0);
    CHECK(roc_auc(std::vector<double>{0.4, 0.3, 0.2, 0.1}, y) == 0.0);
    CHECK(roc_auc(std::vector<double>{1, 1, 1, 1}, y) == 0.5);
    CHECK(roc_auc(std::vector<double>{0.1, 0.35, 0.3, 0.4}, y) == 0.75);

    std::mt19937_64 rng(2);
    for (int k = 0; k < 20; ++k) {
        auto in = random_instance(rng, 60, 7);
        const double a = roc_auc(in.s, in.y);
        std::vector<double> neg, mono;
        for (double v : in.s) neg.push_back(-v), mono.push_back(std::exp(3.0 * v) + 2.0);
        CHECK(roc_auc(neg, in.y) == doctest::Approx(1.0 - a));
        CHECK(roc_auc(mono, in.y) == a);
        std::vector<std::size_t> perm(in.s.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Instance sh;
        for (auto p : perm) sh.s.push_back(in.s[p]), sh.y.push_back(in.y[p]);
        CHECK(roc_auc(sh.s, sh.y) == doctest::Approx(a).epsilon(1e-12));
    }

    CHECK_THROWS(roc_auc(std::vector<double>{1, 2}, std::vector<std::uint8_t>{1, 1}));
    CHECK_THROWS(roc_auc(std::vector<double>{1, 2}, std::vector<std::uint8_t>{1}));
    CHECK_THROWS(roc_auc(std::vector<double>{1, NAN}, std::vector<std::uint8_t>{1, 0}));
}

TEST_CASE("f1 grid against direct counting") {
    std::mt19937_64 rng(3);
    const auto in = random_instance(rng, 80, 10);
    const auto taus = linear_grid(-0.5, 5.5, 13);
    const auto r = f1_grid(in.s, in.y, taus);
    REQUIRE(r.curve.size() == taus.size());
    double best = -1.0, best_tau = 0.0;
    for (std::size_t k = 0; k < taus.size(); ++k) {
        double tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < in.s.size(); ++i) {
            const bool pred = in.s[i] > taus[k];
            tp += pred && in.y[i];
            fp += pred && !in.y[i];
            fn += !pred && in.y[i];
        }
        const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
        const double rc = tp / (tp + fn);
        const double f = p + rc > 0 ? 2 * p * rc / (p + rc) : 0.0;
        CHECK(r.curve[k].precision == doctest::Approx(p));
        CHECK(r.curve[k].recall == doctest::Approx(rc));
        CHECK(r.curve[k].f1 == doctest::Approx(f));
        if (f > best) best = f, best_tau = taus[k];
    }
    CHECK(r.best_f1 == doctest::Approx(best));
    CHECK(r.best_threshold == best_tau);
    CHECK(r.curve.back().f1 == 0.0);
}

TEST_CASE("two-fold scores") {
    const std::vector<double> mu{3.0, 4.0, 5.0, 6.0}, sg{1.0, 9.0, 2.0, 2.5};
    CHECK(twofold_scores(mu, sg, 2.0) == std::vector<double>{3.0, 0.0, 5.0, 0.0});
    CHECK(twofold_scores(mu, sg, 100.0) == mu);
    CHECK(twofold_scores(mu, sg, std::numeric_limits<double>::infinity()) == mu);
    CHECK(twofold_scores(mu, sg, 0.0) == std::vector<double>(4, 0.0));

    std::mt19937_64 rng(4);
    const auto in = random_instance(rng, 3000, 1000);
    const auto sigma = testing::uniform(rng, in.s.size(), 0.0, 30.0);
    const auto taus = linear_grid(5.0, 25.0, 21);
    const auto a = serial::auc_over_grid(in.s, sigma, in.y, taus);
    const auto b = omp::auc_over_grid(in.s, sigma, in.y, taus);
    CHECK(a == b);
    CHECK(auc_over_grid(in.s, sigma, in.y, taus) == a);
    for (std::size_t k = 0; k < taus.size(); k += 5)
        CHECK(a[k] == doctest::Approx(pair_auc(twofold_scores(in.s, sigma, taus[k]), in.y)).epsilon(1e-12));
}

TEST_CASE("tau grids") {
    const auto g = linear_grid(5.0, 25.0, 21);
    REQUIRE(g.size() == 21);
    for (std::size_t k = 0; k < 21; ++k) CHECK(g[k] == doctest::Approx(5.0 + k));
    CHECK(linear_grid(2.0, 3.0, 1) == std::vector<double>{2.0});

    CHECK(quantile({4, 1, 3, 2}, 0.5) == 2.5);
    CHECK(quantile({4, 1, 3, 2}, 0.9) == doctest::Approx(3.7));
    CHECK(quantile({7}, 0.3) == 7.0);
    CHECK_THROWS(quantile({}, 0.5));

    TauGridConfig c;
    CHECK(resolve_tau_grid(c, {}) == g);
    c.mode = TauGridConfig::Mode::ValidationQuantile;
    c.quantile_min = 0.0;
    c.quantile_max = 1.0;
    c.steps = 5;
    const std::vector<double> v{0, 1, 2, 3, 4, 5, 6, 7, 8};
    const auto q = resolve_tau_grid(c, v);
    CHECK(q == std::vector<double>{0, 2, 4, 6, 8});
    CHECK_THROWS(resolve_tau_grid(c, {}));
    c.quantile_min = 0.95;
    c.quantile_max = 0.9;
    CHECK_THROWS(c.validate());
}

TEST_CASE("summaries and reports") {
    std::vector<TrialResult> t(3);
    t[0].mean_auc = 0.8;
    t[1].mean_auc = 0.9;
    t[2].mean_auc = 0.85;
    for (auto& x : t) x.noise_ratio = 20;
    const auto row = summarize(t, "TGN-SVDD");
    CHECK(row.mean_auc == doctest::Approx(0.85));
    CHECK(row.std_auc == doctest::Approx(0.05));
    CHECK(row.trials == 3);
    CHECK(row.noise_ratio == 20);
    CHECK_THROWS_WITH(summarize(std::span<const TrialResult>(t).first(1), "x"), doctest::Contains("resamples"));

    const std::vector<SummaryRow> rows{{10, "TGN-SVDD", 0.830, 0.005, 5},
                                       {10, "RTGN-SVDD", 0.927, 0.001, 5},
                                       {20, "TGN-SVDD", 0.5, 0.0, 5}};
    CHECK(render_report(rows) ==
          "noise & TGN-SVDD & RTGN-SVDD\n10 & 83.0 ± 0.5 & 92.7 ± 0.1\n20 & 50.0 ± 0.0 & -\n");

    std::stringstream csv;
    write_report_csv(csv, rows);
    const auto back = read_report_csv(csv);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].noise_ratio == rows[i].noise_ratio);
        CHECK(back[i].model == rows[i].model);
        CHECK(back[i].mean_auc == rows[i].mean_auc);
        CHECK(back[i].std_auc == rows[i].std_auc);
    }
    std::istringstream bad("ratio,model\n");
    CHECK_THROWS(read_report_csv(bad));

    std::ostringstream tr;
    write_trace_csv(tr, std::vector<ScoredEvent>{{1.5, 2.0, 0.25, Label::Attack}});
    CHECK(tr.str().rfind("t,s_mu,s_sigma,label\n1.5,2,0.25,", 0) == 0);
}

TEST_CASE("evaluate_trial matches scoring by hand") {
    std::mt19937_64 rng(5);
    auto stream = testing::random_stream(rng, 150, 10, 3);
    for (std::size_t i = 0; i < stream.size(); ++i)
        stream[i].label = i % 7 == 3 ? Label::Attack : i % 5 == 1 ? Label::Noise : Label::Normal;
    for (auto head : {encoder::HeadKind::Gaussian, encoder::HeadKind::Svdd}) {
        Model m = make_model(toy_config(3), head, 9);
        m.set_center(testing::randn(rng, m.event_dim(), 0.3));
        auto state = initial_state(m, 10, 0.0);
        const auto history = testing::random_stream(rng, 50, 10, 3);
        advance(m, state, history);
        auto shifted = stream;
        for (auto& e : shifted) e.t += history.back().t;

        const std::vector<double> taus{0.5, 0.9, 1.3};
        const auto r = evaluate_trial(m, state, shifted, taus);

        auto copy = state;
        const auto scored = score_stream(m, copy, shifted);
        std::vector<double> mu, sg;
        std::vector<std::uint8_t> y;
        for (const auto& s : scored) mu.push_back(s.s_mu), sg.push_back(s.s_sigma), y.push_back(s.label == Label::Attack);
        if (head == encoder::HeadKind::Svdd) {
            REQUIRE(r.tau.size() == 1);
            CHECK(std::isinf(r.tau[0]));
            CHECK(r.mean_auc == doctest::Approx(pair_auc(mu, y)).epsilon(1e-12));
        } else {
            REQUIRE(r.auc.size() == 3);
            double mean = 0.0;
            for (std::size_t k = 0; k < 3; ++k) {
                const double a = pair_auc(twofold_scores(mu, sg, taus[k]), y);
                CHECK(r.auc[k] == doctest::Approx(a).epsilon(1e-12));
                mean += a / 3.0;
            }
            CHECK(r.mean_auc == doctest::Approx(mean).epsilon(1e-12));
        }
    }
}

TEST_CASE("scoring needs a center and respects the memory flag") {
    std::mt19937_64 rng(6);
    Model m = make_model(toy_config(3), encoder::HeadKind::Gaussian, 1);
    auto state = initial_state(m, 6, 0.0);
    const auto s = testing::random_stream(rng, 20, 6, 3);
    CHECK_THROWS(score_stream(m, state, s));
    m.set_center(std::vector<double>(m.event_dim(), 0.1));
    const auto before = state.bank;
    score_stream(m, state, s, {false});
    CHECK(state.bank == before);
    CHECK(state.store.size() == 20);
}

TEST_CASE("experiment runner") {
    data::SynthConfig sc;
    sc.nodes = 30;
    sc.normal_events = 1500;
    sc.attack_events = 60;
    sc.attackers = 4;
    sc.feature_dim = 3;
    const auto ds = data::synth_generate(sc);
    const auto split = data::chronological_split(ds, data::SplitSpec{});

    std::vector<Model> models;
    for (auto head : {encoder::HeadKind::Svdd, encoder::HeadKind::Gaussian}) {
        auto scaled = split;
        const auto scaler = data::standardize(scaled);
        Model m = make_model(toy_config(3), head, 2);
        m.scaler = scaler;
        heads::TrainConfig tc;
        tc.epochs = 1;
        heads::train(m, scaled.train, ds.node_count(), tc);
        models.push_back(std::move(m));
    }
    std::vector<Model*> ptrs{&models[0], &models[1]};

    ExperimentPlan plan;
    plan.noise_ratios = {10, 30};
    plan.resamples = 3;
    plan.seed = 4;
    plan.tau.mode = TauGridConfig::Mode::ValidationQuantile;
    const auto par = run_experiment(ptrs, split, ds.node_count(), plan);
    plan.parallel = false;
    const auto ser = run_experiment(ptrs, split, ds.node_count(), plan);

    REQUIRE(par.trials.size() == 2 * 2 * 3);
    REQUIRE(par.rows.size() == 4);
    CHECK(par.rows == ser.rows);
    for (std::size_t i = 0; i < par.trials.size(); ++i) CHECK(par.trials[i].auc == ser.trials[i].auc);
    CHECK(par.trials[0].noise_ratio == 10);
    CHECK(par.trials[3].noise_ratio == 30);
    CHECK(par.rows[0].model == "TGN-SVDD");
    CHECK(par.rows[1].model == "RTGN-SVDD");
    CHECK(par.rows[2].noise_ratio == 30);
    CHECK(par.trials[0].seed != par.trials[1].seed);

    // the same noise across models for a given trial
    auto scaled = split;
    models[0].scaler.apply(scaled.test);
    const auto n1 = noise_for_trial(scaled.test, ds.node_count(), split.t_test, split.t_max, 3, 30, 1, 2, plan);
    const auto n2 = noise_for_trial(scaled.test, ds.node_count(), split.t_test, split.t_max, 3, 30, 1, 2, plan);
    CHECK(n1 == n2);
    CHECK(n1.size() == noise::noise_count(scaled.test, 0.30));
    CHECK(noise_for_trial(scaled.test, ds.node_count(), split.t_test, split.t_max, 3, 30, 1, 1, plan) != n1);

    plan.resamples = 1;
    CHECK_THROWS(run_experiment(ptrs, split, ds.node_count(), plan));
    plan.resamples = 2;
    CHECK_THROWS(run_experiment({}, split, ds.node_count(), plan));
}
