#pragma once

// Detection heads and their objectives.
//
// SVDD head: s = ||(z_i ⊕ z_j) - c||^2, trained on the mean score.
// Gaussian head: the concatenated means are modelled as N(c, diag(sigma^2))
// with sigma = sigma_i ⊕ sigma_j. Positive events minimize the per-dimension
// averaged NLL; negative events (random endpoint pairs) minimize the same NLL
// against a target mu_hat ~ N(0, Sigma_neg), which pushes sigma of unlikely
// pairs up toward the target spread. Scores: s_mu (attack) and s_sigma
// (noise).

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "rtgn/ctdg.hpp"
#include "rtgn/diff.hpp"
#include "rtgn/model.hpp"

namespace rtgn::heads {

using ctdg::Event;
using ctdg::NodeId;

struct TrainConfig {
    double lr = 1e-3;
    double weight_decay = 1e-4;
    std::size_t epochs = 30;
    std::size_t batch_size = 200;
    double neg_ratio = 0.30;
    // Diagonal entries of Sigma_neg (variances).
    double neg_variance = 5.0;
    double clip_norm = 5.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ScorePair {
    double s_mu = 0.0;
    double s_sigma = 0.0;
};

double svdd_score(std::span<const double> z_i, std::span<const double> z_j, std::span<const double> c);
diff::Value svdd_score(diff::Value z_i, diff::Value z_j, diff::Value c);

double svdd_objective(std::span<const double> scores);
diff::Value svdd_objective(std::span<const diff::Value> scores);

double positive_nll(std::span<const double> mu_i, std::span<const double> sigma_i,
                    std::span<const double> mu_j, std::span<const double> sigma_j,
                    std::span<const double> c, double sigma_floor);
diff::Value positive_nll(diff::Value mu_i, diff::Value sigma_i, diff::Value mu_j, diff::Value sigma_j,
                         diff::Value c);

double negative_nll(std::span<const double> sigma_v, std::span<const double> sigma_w,
                    std::span<const double> mu_hat, double sigma_floor);
diff::Value negative_nll(diff::Value sigma_v, diff::Value sigma_w, diff::Value mu_hat);

double score_sigma(std::span<const double> sigma_i, std::span<const double> sigma_j);
double score_mu(std::span<const double> mu_i, std::span<const double> mu_j, std::span<const double> c);

// Mean of the event embeddings; components with |c_m| < 0.01 are pushed to
// +-0.01 (sign of the mean, + for exactly zero).
std::vector<double> init_center(std::span<const std::vector<double>> event_embeddings);

struct Negative {
    Event event;                 // batch event with both endpoints resampled
    std::vector<double> mu_hat;  // target, dimension N = 2p
};

struct NegativeBatch {
    std::vector<Negative> items;
};

// ceil(ratio * |batch|) negatives; endpoints uniform with replacement over
// `nodes`, timestamp and features copied from a uniformly chosen batch event.
NegativeBatch sample_negatives(std::span<const Event> batch, std::span<const NodeId> nodes, double ratio,
                               double variance, std::size_t event_dim, std::mt19937_64& rng);

struct EpochLoss {
    std::size_t epoch = 0;
    double positive = 0.0;
    double negative = 0.0;
};

using ProgressFn = std::function<void(const EpochLoss&)>;

// One-class training on a Normal-only, time-sorted stream. Memory and the
// adjacency store are reset at the start of every epoch. The model's center
// is initialized from the first batch before the first update.
std::vector<EpochLoss> train(Model& model, std::span<const Event> train_events, std::size_t node_count,
                             const TrainConfig& config, const ProgressFn& progress = {});

// Loss of one batch given pre-batch state, recorded on `tape`. Exposed for
// gradient checking; `negatives` may be empty.
struct BatchLoss {
    diff::Value total;
    diff::Value positive;
    diff::Value negative;  // invalid when there are no negatives
};

BatchLoss batch_loss(diff::Tape& tape, encoder::MemoryView& memory, Model& model,
                     std::span<const Event> batch, const NegativeBatch& negatives,
                     const encoder::MemoryBank& bank, const ctdg::TemporalAdjacencyStore& store);

void write_loss_csv(std::ostream& os, std::span<const EpochLoss> trace);

}  // namespace rtgn::heads
