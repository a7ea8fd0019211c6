#include "rtgn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <omp.h>

#include "rtgn/heads.hpp"
#include "rtgn/noise.hpp"

namespace rtgn::eval {

namespace {

void require_same_length(const char* what, std::size_t a, std::size_t b) {
    if (a != b)
        throw std::invalid_argument(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                                    std::to_string(b) + ")");
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> positive) {
    require_same_length("roc_auc", scores.size(), positive.size());
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isnan(scores[i])) throw std::invalid_argument("roc_auc: NaN score at index " + std::to_string(i));
        if (positive[i]) ++n_pos;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("roc_auc: need both classes (positives " + std::to_string(n_pos) +
                                    ", negatives " + std::to_string(n_neg) + ")");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        // ranks i+1 .. j share the midrank
        const double mid = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k)
            if (positive[order[k]]) pos_rank_sum += mid;
        i = j;
    }
    const double np = static_cast<double>(n_pos);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

F1Result f1_grid(std::span<const double> scores, std::span<const std::uint8_t> positive,
                 std::span<const double> thresholds) {
    require_same_length("f1_grid", scores.size(), positive.size());
    if (scores.empty()) throw std::invalid_argument("f1_grid: no scores");
    if (thresholds.empty()) throw std::invalid_argument("f1_grid: no thresholds");
    if (!std::is_sorted(thresholds.begin(), thresholds.end()))
        throw std::invalid_argument("f1_grid: thresholds must be sorted ascending");

    F1Result out;
    out.curve.reserve(thresholds.size());
    bool first = true;
    for (double tau : thresholds) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const bool pred = scores[i] > tau;
            if (pred && positive[i]) ++tp;
            else if (pred) ++fp;
            else if (positive[i]) ++fn;
        }
        F1Point p;
        p.threshold = tau;
        p.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
        p.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
        p.f1 = p.precision + p.recall == 0.0 ? 0.0 : 2.0 * p.precision * p.recall / (p.precision + p.recall);
        if (first || p.f1 > out.best_f1) {
            out.best_f1 = p.f1;
            out.best_threshold = tau;
            first = false;
        }
        out.curve.push_back(p);
    }
    return out;
}

std::vector<double> twofold_scores(std::span<const double> s_mu, std::span<const double> s_sigma, double tau) {
    require_same_length("twofold_scores", s_mu.size(), s_sigma.size());
    std::vector<double> out(s_mu.size());
    for (std::size_t i = 0; i < s_mu.size(); ++i) out[i] = s_sigma[i] > tau ? 0.0 : s_mu[i];
    return out;
}

namespace serial {
std::vector<double> auc_over_grid(std::span<const double> s_mu, std::span<const double> s_sigma,
                                  std::span<const std::uint8_t> positive, std::span<const double> taus) {
    std::vector<double> out(taus.size());
    for (std::size_t k = 0; k < taus.size(); ++k) out[k] = roc_auc(twofold_scores(s_mu, s_sigma, taus[k]), positive);
    return out;
}
}  // namespace serial

namespace omp {
std::vector<double> auc_over_grid(std::span<const double> s_mu, std::span<const double> s_sigma,
                                  std::span<const std::uint8_t> positive, std::span<const double> taus) {
    // validate once up front so no exception has to leave the parallel region
    require_same_length("auc_over_grid", s_mu.size(), positive.size());
    (void)roc_auc(s_mu, positive);
    require_same_length("twofold_scores", s_mu.size(), s_sigma.size());
    std::vector<double> out(taus.size());
    const auto n = static_cast<std::ptrdiff_t>(taus.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) out[k] = roc_auc(twofold_scores(s_mu, s_sigma, taus[k]), positive);
    return out;
}
}  // namespace omp

std::vector<double> auc_over_grid(std::span<const double> s_mu, std::span<const double> s_sigma,
                                  std::span<const std::uint8_t> positive, std::span<const double> taus) {
    if (taus.size() > 1 && s_mu.size() * taus.size() >= (1u << 14) && !omp_in_parallel())
        return omp::auc_over_grid(s_mu, s_sigma, positive, taus);
    return serial::auc_over_grid(s_mu, s_sigma, positive, taus);
}

std::vector<double> linear_grid(double lo, double hi, std::size_t steps) {
    if (steps == 0) throw std::invalid_argument("linear_grid: steps must be positive");
    if (!(lo <= hi)) throw std::invalid_argument("linear_grid: lo > hi");
    if (steps == 1) return {lo};
    std::vector<double> g(steps);
    for (std::size_t i = 0; i < steps; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
    return g;
}

void TauGridConfig::validate() const {
    if (steps == 0) throw std::invalid_argument("tau grid: steps must be positive");
    if (mode == Mode::Fixed && !(min <= max)) throw std::invalid_argument("tau grid: min > max");
    if (mode == Mode::ValidationQuantile &&
        !(quantile_min >= 0.0 && quantile_min <= quantile_max && quantile_max <= 1.0))
        throw std::invalid_argument("tau grid: quantiles must satisfy 0 <= min <= max <= 1");
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile: empty input");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q outside [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<double> resolve_tau_grid(const TauGridConfig& config, std::span<const double> validation_s_sigma) {
    config.validate();
    if (config.mode == TauGridConfig::Mode::Fixed) return linear_grid(config.min, config.max, config.steps);
    if (validation_s_sigma.empty())
        throw std::invalid_argument("tau grid: quantile mode needs validation s_sigma values");
    std::vector<double> sorted(validation_s_sigma.begin(), validation_s_sigma.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> grid;
    for (double q : linear_grid(config.quantile_min, config.quantile_max, config.steps))
        grid.push_back(quantile(sorted, q));
    return grid;
}

std::string model_name(encoder::HeadKind head) {
    return head == encoder::HeadKind::Gaussian ? "RTGN-SVDD" : "TGN-SVDD";
}

// ---------------------------------------------------------------------------

StreamState initial_state(const Model& model, std::size_t node_count, double t0) {
    const auto& c = model.params.config;
    return StreamState{encoder::init_memory(node_count, c.memory_dim, c.message_dim(), t0), {}};
}

void advance(Model& model, StreamState& state, std::span<const Event> events) {
    for (const Event& e : events) {
        encoder::apply_event(state.bank, e, model.params);
        state.store.insert(e);
    }
}

std::vector<ScoredEvent> score_stream(Model& model, StreamState& state, std::span<const Event> events,
                                      encoder::StreamOptions options) {
    if (!model.has_center()) throw std::invalid_argument("score_stream: model has no center (untrained?)");
    const auto emb = encoder::process_batch(events, state.bank, state.store, model.params, options);
    const bool gaussian = model.head() == encoder::HeadKind::Gaussian;
    std::vector<ScoredEvent> out(events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
        out[i].t = events[i].t;
        out[i].label = events[i].label;
        out[i].s_mu = heads::score_mu(emb[i].src.mu, emb[i].dst.mu, model.center.value);
        out[i].s_sigma = gaussian ? heads::score_sigma(emb[i].src.sigma, emb[i].dst.sigma) : 0.0;
    }
    return out;
}

TrialResult evaluate_trial(Model& model, StreamState state, std::span<const Event> test_with_noise,
                           std::span<const double> tau_grid, encoder::StreamOptions options) {
    if (tau_grid.empty()) throw std::invalid_argument("evaluate_trial: empty tau grid");
    const auto scored = score_stream(model, state, test_with_noise, options);
    std::vector<double> s_mu(scored.size()), s_sigma(scored.size());
    std::vector<std::uint8_t> positive(scored.size());
    for (std::size_t i = 0; i < scored.size(); ++i) {
        s_mu[i] = scored[i].s_mu;
        s_sigma[i] = scored[i].s_sigma;
        positive[i] = scored[i].label == Label::Attack ? 1 : 0;
    }
    TrialResult r;
    if (model.head() == encoder::HeadKind::Svdd)
        r.tau = {std::numeric_limits<double>::infinity()};
    else
        r.tau.assign(tau_grid.begin(), tau_grid.end());
    r.auc = auc_over_grid(s_mu, s_sigma, positive, r.tau);
    r.mean_auc = std::accumulate(r.auc.begin(), r.auc.end(), 0.0) / static_cast<double>(r.auc.size());
    return r;
}

SummaryRow summarize(std::span<const TrialResult> trials, const std::string& model) {
    if (trials.size() < 2)
        throw std::invalid_argument("summarize: need at least 2 trials for a standard deviation, got " +
                                    std::to_string(trials.size()) + " (raise --resamples)");
    SummaryRow row;
    row.noise_ratio = trials.front().noise_ratio;
    row.model = model;
    row.trials = trials.size();
    double sum = 0.0;
    for (const auto& t : trials) sum += t.mean_auc;
    const double n = static_cast<double>(trials.size());
    row.mean_auc = sum / n;
    double ss = 0.0;
    for (const auto& t : trials) ss += (t.mean_auc - row.mean_auc) * (t.mean_auc - row.mean_auc);
    row.std_auc = std::sqrt(ss / (n - 1.0));
    return row;
}

std::string render_report(std::span<const SummaryRow> rows) {
    std::vector<double> ratios;
    std::vector<std::string> models;
    for (const auto& r : rows) {
        if (std::find(ratios.begin(), ratios.end(), r.noise_ratio) == ratios.end()) ratios.push_back(r.noise_ratio);
        if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
    }
    std::ostringstream os;
    os << "noise";
    for (const auto& m : models) os << " & " << m;
    os << "\n";
    char buf[64];
    for (double ratio : ratios) {
        std::snprintf(buf, sizeof buf, "%g", ratio);
        os << buf;
        for (const auto& m : models) {
            auto it = std::find_if(rows.begin(), rows.end(),
                                   [&](const SummaryRow& r) { return r.noise_ratio == ratio && r.model == m; });
            if (it == rows.end()) {
                os << " & -";
                continue;
            }
            std::snprintf(buf, sizeof buf, "%.1f ± %.1f", 100.0 * it->mean_auc, 100.0 * it->std_auc);
            os << " & " << buf;
        }
        os << "\n";
    }
    return os.str();
}

void write_report_csv(std::ostream& os, std::span<const SummaryRow> rows) {
    os << "noise_ratio,model,mean_auc,std_auc\n";
    for (const auto& r : rows)
        os << fmt17(r.noise_ratio) << ',' << r.model << ',' << fmt17(r.mean_auc) << ',' << fmt17(r.std_auc) << '\n';
}

std::vector<SummaryRow> read_report_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "noise_ratio,model,mean_auc,std_auc")
        throw std::runtime_error("report csv: bad header");
    std::vector<SummaryRow> rows;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 4)
            throw std::runtime_error("report csv:" + std::to_string(lineno) + ": expected 4 fields");
        SummaryRow r;
        try {
            r.noise_ratio = std::stod(f[0]);
            r.model = f[1];
            r.mean_auc = std::stod(f[2]);
            r.std_auc = std::stod(f[3]);
        } catch (const std::exception&) {
            throw std::runtime_error("report csv:" + std::to_string(lineno) + ": bad number");
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_trace_csv(std::ostream& os, std::span<const ScoredEvent> events) {
    os << "t,s_mu,s_sigma,label\n";
    for (const auto& e : events)
        os << fmt17(e.t) << ',' << fmt17(e.s_mu) << ',' << fmt17(e.s_sigma) << ',' << ctdg::to_string(e.label)
           << '\n';
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t trial_seed(std::uint64_t seed, std::size_t ratio_index, std::size_t resample) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(ratio_index), static_cast<std::uint32_t>(resample)};
    std::uint32_t w[2];
    seq.generate(w, w + 2);
    return (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
}

}  // namespace

std::vector<Event> noise_for_trial(std::span<const Event> scaled_test, std::size_t node_count, double t_begin,
                                   double t_end, std::size_t feature_dim, double ratio_percent,
                                   std::size_t ratio_index, std::size_t resample, const ExperimentPlan& plan) {
    noise::NoiseConfig nc;
    nc.ratio = ratio_percent / 100.0;
    nc.variance = plan.noise_variance;
    nc.t_begin = t_begin;
    nc.t_end = t_end;
    nc.seed = trial_seed(plan.seed, ratio_index, resample);
    std::mt19937_64 rng(nc.seed);
    std::vector<ctdg::NodeId> nodes(node_count);
    std::iota(nodes.begin(), nodes.end(), ctdg::NodeId{0});
    return noise::craft_noise_events(nodes, noise::noise_count(scaled_test, nc.ratio), feature_dim, nc, rng);
}

ExperimentResult run_experiment(std::span<Model* const> models, const data::Split& split, std::size_t node_count,
                                const ExperimentPlan& plan) {
    if (models.empty()) throw std::invalid_argument("run_experiment: no models");
    if (plan.noise_ratios.empty()) throw std::invalid_argument("run_experiment: no noise ratios");
    if (plan.resamples < 2)
        throw std::invalid_argument("run_experiment: resamples must be >= 2 so the standard deviation is defined");
    if (split.train.empty() || split.test.empty()) throw std::invalid_argument("run_experiment: empty split");
    plan.tau.validate();
    {
        const bool has_attack = std::any_of(split.test.begin(), split.test.end(),
                                            [](const Event& e) { return e.label == Label::Attack; });
        if (!has_attack)
            throw std::invalid_argument("run_experiment: test split has no attack events (single-class test)");
    }

    struct Prepared {
        data::Split scaled;
        StreamState warm;
        std::vector<double> taus;
    };
    std::vector<Prepared> prepared;
    prepared.reserve(models.size());
    for (Model* m : models) {
        if (m->scaler.empty()) throw std::invalid_argument("run_experiment: model has no feature scaler");
        if (m->params.config.feature_dim != split.train.front().features.size())
            throw std::invalid_argument("run_experiment: checkpoint expects " +
                                        std::to_string(m->params.config.feature_dim) + " features, data has " +
                                        std::to_string(split.train.front().features.size()));
        Prepared p{split, {}, {}};
        m->scaler.apply(p.scaled.train);
        m->scaler.apply(p.scaled.val);
        m->scaler.apply(p.scaled.test);
        p.warm = initial_state(*m, node_count, p.scaled.train.front().t);
        advance(*m, p.warm, p.scaled.train);
        const bool gaussian = m->head() == encoder::HeadKind::Gaussian;
        if (gaussian && plan.tau.mode == TauGridConfig::Mode::ValidationQuantile) {
            const auto val = score_stream(*m, p.warm, p.scaled.val);
            std::vector<double> ss;
            ss.reserve(val.size());
            for (const auto& e : val) ss.push_back(e.s_sigma);
            p.taus = resolve_tau_grid(plan.tau, ss);
        } else {
            advance(*m, p.warm, p.scaled.val);
            p.taus = gaussian ? resolve_tau_grid(plan.tau, {}) : std::vector<double>{};
        }
        if (!gaussian) p.taus = {std::numeric_limits<double>::infinity()};
        prepared.push_back(std::move(p));
    }

    const std::size_t nr = plan.noise_ratios.size();
    const std::size_t total = models.size() * nr * plan.resamples;
    ExperimentResult result;
    result.trials.resize(total);
    std::vector<std::exception_ptr> errors(total);
    const encoder::StreamOptions options{plan.update_memory_at_inference};
    const double t_begin = split.t_test;
    const double t_end = split.t_max;

#pragma omp parallel for schedule(dynamic, 1) if (plan.parallel)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(total); ++k) {
        try {
            const std::size_t mi = static_cast<std::size_t>(k) / (nr * plan.resamples);
            const std::size_t ri = (static_cast<std::size_t>(k) / plan.resamples) % nr;
            const std::size_t s = static_cast<std::size_t>(k) % plan.resamples;
            const Prepared& p = prepared[mi];
            const auto noise = noise_for_trial(p.scaled.test, node_count, t_begin, t_end,
                                               models[mi]->params.config.feature_dim, plan.noise_ratios[ri], ri, s,
                                               plan);
            const auto stream = noise::inject(p.scaled.test, noise, t_begin, t_end);
            TrialResult r = evaluate_trial(*models[mi], p.warm, stream, p.taus, options);
            r.noise_ratio = plan.noise_ratios[ri];
            r.seed = trial_seed(plan.seed, ri, s);
            result.trials[k] = std::move(r);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    for (std::size_t ri = 0; ri < nr; ++ri)
        for (std::size_t mi = 0; mi < models.size(); ++mi) {
            const auto first = result.trials.begin() + static_cast<std::ptrdiff_t>((mi * nr + ri) * plan.resamples);
            std::vector<TrialResult> group(first, first + static_cast<std::ptrdiff_t>(plan.resamples));
            result.rows.push_back(summarize(group, model_name(models[mi]->head())));
        }
    return result;
}

}  // namespace rtgn::eval
