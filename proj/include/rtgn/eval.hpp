#pragma once

// Evaluation: ROC-AUC / F1 metrics, the two-fold decision rule (flag events
// with s_sigma > tau as noise, rank the rest by s_mu), streaming scoring of a
// test split on a frozen model, repeated noise-resampling trials and
// summary reports.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rtgn/ctdg.hpp"
#include "rtgn/data.hpp"
#include "rtgn/encoder.hpp"
#include "rtgn/model.hpp"

namespace rtgn::eval {

using ctdg::Event;
using ctdg::Label;

// Mann-Whitney statistic with midranks. positive[i] != 0 marks a positive.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> positive);

struct F1Point {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct F1Result {
    double best_threshold = 0.0;
    double best_f1 = 0.0;
    std::vector<F1Point> curve;
};

// Predict positive when score > threshold. F1 = 0 when P + R = 0.
F1Result f1_grid(std::span<const double> scores, std::span<const std::uint8_t> positive,
                 std::span<const double> thresholds);

// Events with s_sigma > tau get final score 0; the rest keep s_mu.
std::vector<double> twofold_scores(std::span<const double> s_mu, std::span<const double> s_sigma, double tau);

// AUC of the two-fold scores for every tau.
namespace serial {
std::vector<double> auc_over_grid(std::span<const double> s_mu, std::span<const double> s_sigma,
                                  std::span<const std::uint8_t> positive, std::span<const double> taus);
}
namespace omp {
std::vector<double> auc_over_grid(std::span<const double> s_mu, std::span<const double> s_sigma,
                                  std::span<const std::uint8_t> positive, std::span<const double> taus);
}
std::vector<double> auc_over_grid(std::span<const double> s_mu, std::span<const double> s_sigma,
                                  std::span<const std::uint8_t> positive, std::span<const double> taus);

std::vector<double> linear_grid(double lo, double hi, std::size_t steps);

struct TauGridConfig {
    enum class Mode { Fixed, ValidationQuantile };
    Mode mode = Mode::Fixed;
    double min = 5.0;
    double max = 25.0;
    std::size_t steps = 21;
    // ValidationQuantile: the grid spans these quantiles of s_sigma over the
    // validation events.
    double quantile_min = 0.90;
    double quantile_max = 0.99;

    void validate() const;
};

std::vector<double> resolve_tau_grid(const TauGridConfig& config, std::span<const double> validation_s_sigma);

double quantile(std::vector<double> values, double q);

std::string model_name(encoder::HeadKind head);

struct ScoredEvent {
    double t = 0.0;
    double s_mu = 0.0;
    double s_sigma = 0.0;  // 0 for the SVDD head
    Label label = Label::Normal;
};

struct StreamState {
    encoder::MemoryBank bank;
    ctdg::TemporalAdjacencyStore store;
};

StreamState initial_state(const Model& model, std::size_t node_count, double t0);

// Applies events (memory update + store insert) without scoring.
void advance(Model& model, StreamState& state, std::span<const Event> events);

// Scores every event with the pre-event state, then applies it. With
// update_memory off, events still enter the store but leave memory as is.
std::vector<ScoredEvent> score_stream(Model& model, StreamState& state, std::span<const Event> events,
                                      encoder::StreamOptions options = {});

struct TrialResult {
    double noise_ratio = 0.0;  // percent
    std::uint64_t seed = 0;
    std::vector<double> tau;
    std::vector<double> auc;
    double mean_auc = 0.0;
};

// Attack = positive, Normal and Noise = negative. For the SVDD head the tau
// grid collapses to a single +inf entry (raw scores).
TrialResult evaluate_trial(Model& model, StreamState state, std::span<const Event> test_with_noise,
                           std::span<const double> tau_grid, encoder::StreamOptions options = {});

struct SummaryRow {
    double noise_ratio = 0.0;  // percent
    std::string model;
    double mean_auc = 0.0;
    double std_auc = 0.0;
    std::size_t trials = 0;

    bool operator==(const SummaryRow&) const = default;
};

// Mean and sample standard deviation (n - 1) of per-trial mean AUCs.
SummaryRow summarize(std::span<const TrialResult> trials, const std::string& model);

// Noise-ratio rows x model columns, values x100 with +- std.
std::string render_report(std::span<const SummaryRow> rows);
void write_report_csv(std::ostream& os, std::span<const SummaryRow> rows);
std::vector<SummaryRow> read_report_csv(std::istream& is);

void write_trace_csv(std::ostream& os, std::span<const ScoredEvent> events);

// ---- repeated-trial experiment -----------------------------------------------

struct ExperimentPlan {
    std::vector<double> noise_ratios{10, 20, 30, 40, 50};  // percent
    std::size_t resamples = 5;
    std::uint64_t seed = 0;
    double noise_variance = 5.0;
    bool update_memory_at_inference = true;
    TauGridConfig tau;
    bool parallel = true;
};

struct ExperimentResult {
    std::vector<TrialResult> trials;  // model-major, then ratio, then resample
    std::vector<SummaryRow> rows;     // ratio-major, then model
};

// `split` holds raw (unscaled) features; each model applies its own scaler.
ExperimentResult run_experiment(std::span<Model* const> models, const data::Split& split, std::size_t node_count,
                                const ExperimentPlan& plan);

// Noise events for one (ratio, resample) pair in scaled feature space;
// identical across models for the same plan seed.
std::vector<Event> noise_for_trial(std::span<const Event> scaled_test, std::size_t node_count, double t_begin,
                                   double t_end, std::size_t feature_dim, double ratio_percent,
                                   std::size_t ratio_index, std::size_t resample, const ExperimentPlan& plan);

}  // namespace rtgn::eval
