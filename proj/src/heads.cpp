#include "rtgn/heads.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace rtgn::heads {

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("train: epochs must be at least 1");
    if (batch_size < 1) throw std::invalid_argument("train: batch_size must be at least 1");
    if (!(neg_ratio >= 0.0 && neg_ratio <= 1.0)) throw std::invalid_argument("train: neg_ratio must be in [0,1]");
    if (!(neg_variance > 0.0)) throw std::invalid_argument("train: neg_variance must be positive");
    if (!(lr >= 0.0) || !(weight_decay >= 0.0)) throw std::invalid_argument("train: lr and weight_decay must be >= 0");
}

namespace {

void require_dims(const char* what, std::size_t a, std::size_t b) {
    if (a != b)
        throw diff::ShapeError(std::string(what) + ": dimension mismatch " + std::to_string(a) + " vs " +
                               std::to_string(b));
}

void require_floor(std::span<const double> sigma, double floor) {
    for (double s : sigma)
        if (!(s >= floor))
            throw std::domain_error("sigma component " + std::to_string(s) + " below floor " + std::to_string(floor));
}

}  // namespace

double svdd_score(std::span<const double> z_i, std::span<const double> z_j, std::span<const double> c) {
    require_dims("svdd_score", z_i.size() + z_j.size(), c.size());
    // Same accumulation order as sq_dist over the concatenation.
    double acc = 0.0;
    const std::size_t p = z_i.size();
    for (std::size_t m = 0; m < p; ++m) {
        const double d = z_i[m] - c[m];
        acc += d * d;
    }
    for (std::size_t m = 0; m < z_j.size(); ++m) {
        const double d = z_j[m] - c[p + m];
        acc += d * d;
    }
    return acc;
}

diff::Value svdd_score(diff::Value z_i, diff::Value z_j, diff::Value c) {
    return diff::sq_dist(diff::concat(z_i, z_j), c);
}

double svdd_objective(std::span<const double> scores) {
    if (scores.empty()) throw std::invalid_argument("svdd_objective: empty batch");
    double s = 0.0;
    for (double v : scores) s += v;
    return s / static_cast<double>(scores.size());
}

diff::Value svdd_objective(std::span<const diff::Value> scores) {
    if (scores.empty()) throw std::invalid_argument("svdd_objective: empty batch");
    return diff::scale(diff::add_n(scores), 1.0 / static_cast<double>(scores.size()));
}

double positive_nll(std::span<const double> mu_i, std::span<const double> sigma_i,
                    std::span<const double> mu_j, std::span<const double> sigma_j,
                    std::span<const double> c, double sigma_floor) {
    require_dims("positive_nll", mu_i.size() + mu_j.size(), c.size());
    require_dims("positive_nll", sigma_i.size() + sigma_j.size(), c.size());
    require_floor(sigma_i, sigma_floor);
    require_floor(sigma_j, sigma_floor);
    const std::size_t p = mu_i.size();
    double acc = 0.0;
    for (std::size_t m = 0; m < c.size(); ++m) {
        const double z = m < p ? mu_i[m] : mu_j[m - p];
        const double s = m < p ? sigma_i[m] : sigma_j[m - p];
        const double r = z - c[m];
        acc += std::log(s * s) + r * r / (s * s);
    }
    return acc / static_cast<double>(c.size());
}

diff::Value positive_nll(diff::Value mu_i, diff::Value sigma_i, diff::Value mu_j, diff::Value sigma_j,
                         diff::Value c) {
    return diff::gaussian_nll(diff::concat(mu_i, mu_j), diff::concat(sigma_i, sigma_j), c);
}

double negative_nll(std::span<const double> sigma_v, std::span<const double> sigma_w,
                    std::span<const double> mu_hat, double sigma_floor) {
    require_dims("negative_nll", sigma_v.size() + sigma_w.size(), mu_hat.size());
    require_floor(sigma_v, sigma_floor);
    require_floor(sigma_w, sigma_floor);
    const std::size_t p = sigma_v.size();
    double acc = 0.0;
    for (std::size_t m = 0; m < mu_hat.size(); ++m) {
        const double s = m < p ? sigma_v[m] : sigma_w[m - p];
        acc += std::log(s * s) + mu_hat[m] * mu_hat[m] / (s * s);
    }
    return acc / static_cast<double>(mu_hat.size());
}

diff::Value negative_nll(diff::Value sigma_v, diff::Value sigma_w, diff::Value mu_hat) {
    diff::Tape& t = *mu_hat.tape();
    return diff::gaussian_nll(mu_hat, diff::concat(sigma_v, sigma_w),
                              t.constant(std::vector<double>(mu_hat.size(), 0.0)));
}

double score_sigma(std::span<const double> sigma_i, std::span<const double> sigma_j) {
    const std::size_t n = sigma_i.size() + sigma_j.size();
    if (n == 0) throw std::invalid_argument("score_sigma: empty input");
    double acc = 0.0;
    for (double s : sigma_i) acc += s;
    for (double s : sigma_j) acc += s;
    return acc / static_cast<double>(n);
}

double score_mu(std::span<const double> mu_i, std::span<const double> mu_j, std::span<const double> c) {
    return svdd_score(mu_i, mu_j, c);
}

std::vector<double> init_center(std::span<const std::vector<double>> event_embeddings) {
    if (event_embeddings.empty()) throw std::invalid_argument("init_center: no embeddings");
    const std::size_t n = event_embeddings.front().size();
    std::vector<double> c(n, 0.0);
    for (const auto& e : event_embeddings) {
        require_dims("init_center", e.size(), n);
        for (std::size_t m = 0; m < n; ++m) c[m] += e[m];
    }
    const double inv = 1.0 / static_cast<double>(event_embeddings.size());
    constexpr double kMin = 0.01;
    for (double& v : c) {
        v *= inv;
        if (std::abs(v) < kMin) v = v < 0.0 ? -kMin : kMin;
    }
    return c;
}

NegativeBatch sample_negatives(std::span<const Event> batch, std::span<const NodeId> nodes, double ratio,
                               double variance, std::size_t event_dim, std::mt19937_64& rng) {
    if (nodes.empty()) throw std::invalid_argument("sample_negatives: empty node set");
    if (!(ratio >= 0.0 && ratio <= 1.0)) throw std::invalid_argument("sample_negatives: ratio must be in [0,1]");
    NegativeBatch out;
    if (batch.empty() || ratio == 0.0) return out;
    // The small epsilon keeps e.g. 0.3 * 10 from rounding up to 4.
    const auto count = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(batch.size()) - 1e-9));
    std::uniform_int_distribution<std::size_t> pick_node(0, nodes.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_event(0, batch.size() - 1);
    std::normal_distribution<double> target(0.0, std::sqrt(variance));
    out.items.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Negative n;
        n.event = batch[pick_event(rng)];
        n.event.src = nodes[pick_node(rng)];
        n.event.dst = nodes[pick_node(rng)];
        n.mu_hat.resize(event_dim);
        for (double& v : n.mu_hat) v = target(rng);
        out.items.push_back(std::move(n));
    }
    return out;
}

BatchLoss batch_loss(diff::Tape& tape, encoder::MemoryView& memory, Model& model, std::span<const Event> batch,
                     const NegativeBatch& negatives, const encoder::MemoryBank& bank,
                     const ctdg::TemporalAdjacencyStore& store) {
    if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
    auto& params = model.params;
    const bool gaussian = params.head == encoder::HeadKind::Gaussian;

    std::vector<encoder::NodeOutput> src(batch.size()), dst(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        src[i] = encoder::embed_node(tape, memory, batch[i].src, batch[i].t, bank, store, params);
        dst[i] = encoder::embed_node(tape, memory, batch[i].dst, batch[i].t, bank, store, params);
    }
    if (!model.has_center()) {
        std::vector<std::vector<double>> ev;
        ev.reserve(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
            auto a = src[i].mu.data(), b = dst[i].mu.data();
            std::vector<double> e(a.begin(), a.end());
            e.insert(e.end(), b.begin(), b.end());
            ev.push_back(std::move(e));
        }
        model.set_center(init_center(ev));
    }
    diff::Value c = tape.param(model.center);

    std::vector<diff::Value> terms;
    terms.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        terms.push_back(gaussian ? positive_nll(src[i].mu, src[i].sigma, dst[i].mu, dst[i].sigma, c)
                                 : svdd_score(src[i].mu, dst[i].mu, c));
    }
    BatchLoss out;
    out.positive = diff::scale(diff::add_n(terms), 1.0 / static_cast<double>(terms.size()));
    out.total = out.positive;

    if (gaussian && !negatives.items.empty()) {
        std::vector<diff::Value> neg;
        neg.reserve(negatives.items.size());
        for (const Negative& n : negatives.items) {
            auto v = encoder::embed_node(tape, memory, n.event.src, n.event.t, bank, store, params);
            auto w = encoder::embed_node(tape, memory, n.event.dst, n.event.t, bank, store, params);
            neg.push_back(negative_nll(v.sigma, w.sigma, tape.constant(n.mu_hat)));
        }
        out.negative = diff::scale(diff::add_n(neg), 1.0 / static_cast<double>(neg.size()));
        // Both objectives are normalized by the positive count.
        const double weight = static_cast<double>(neg.size()) / static_cast<double>(batch.size());
        out.total = diff::add(out.positive, diff::scale(out.negative, weight));
    }
    return out;
}

std::vector<EpochLoss> train(Model& model, std::span<const Event> train_events, std::size_t node_count,
                             const TrainConfig& config, const ProgressFn& progress) {
    config.validate();
    if (train_events.empty()) throw std::invalid_argument("train: empty training split");
    for (std::size_t i = 0; i < train_events.size(); ++i) {
        const Event& e = train_events[i];
        if (e.label != ctdg::Label::Normal) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "train: event " << i << " at t=" << e.t << " is labelled " << ctdg::to_string(e.label)
                << "; the training split must contain only normal events";
            throw std::invalid_argument(msg.str());
        }
        if (i > 0 && e.t < train_events[i - 1].t) throw ctdg::OrderError("train: events are not sorted by time");
    }

    auto& params = model.params;
    const auto& ec = params.config;
    const bool gaussian = params.head == encoder::HeadKind::Gaussian;
    std::mt19937_64 rng(config.seed ^ 0x5bd1e995u);

    ctdg::TemporalAdjacencyStore train_graph;
    for (const Event& e : train_events) train_graph.insert(e);
    const std::vector<NodeId> train_nodes = train_graph.node_set(train_events.back().t);

    const auto trainable = model.trainable();
    diff::AdamConfig ac;
    ac.lr = config.lr;
    ac.weight_decay = config.weight_decay;
    diff::OptimizerState opt = diff::make_optimizer(trainable, ac);

    const double t0 = train_events.front().t;
    encoder::MemoryBank bank(node_count, ec.memory_dim, ec.message_dim(), t0);
    ctdg::TemporalAdjacencyStore store;
    diff::Tape tape;

    std::vector<EpochLoss> trace;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        bank.reset();
        store.clear();
        double pos_sum = 0.0, neg_sum = 0.0;
        std::size_t pos_n = 0, neg_n = 0;

        for (std::size_t start = 0; start < train_events.size(); start += config.batch_size) {
            const std::size_t end = std::min(train_events.size(), start + config.batch_size);
            const auto batch = train_events.subspan(start, end - start);

            NegativeBatch negatives;
            if (gaussian)
                negatives = sample_negatives(batch, train_nodes, config.neg_ratio, config.neg_variance,
                                             model.event_dim(), rng);

            tape.clear();
            diff::zero_grad(trainable);
            encoder::MemoryView view(tape, bank, params, ec.memory_grad);
            const BatchLoss loss = batch_loss(tape, view, model, batch, negatives, bank, store);
            pos_sum += loss.positive.item() * static_cast<double>(batch.size());
            pos_n += batch.size();
            if (loss.negative.valid()) {
                neg_sum += loss.negative.item() * static_cast<double>(negatives.items.size());
                neg_n += negatives.items.size();
            }
            tape.backward(loss.total);
            diff::clip_grad_norm(trainable, config.clip_norm);
            diff::adam_step(opt, trainable);

            view.write_back(bank);
            for (const Event& e : batch) {
                encoder::apply_event(bank, e, params);
                store.insert(e);
            }
        }
        EpochLoss el{epoch, pos_sum / static_cast<double>(pos_n), neg_n ? neg_sum / static_cast<double>(neg_n) : 0.0};
        trace.push_back(el);
        if (progress) progress(el);
    }
    return trace;
}

void write_loss_csv(std::ostream& os, std::span<const EpochLoss> trace) {
    os << "epoch,positive_loss,negative_loss\n";
    char buf[96];
    for (const auto& e : trace) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", e.epoch, e.positive, e.negative);
        os << buf;
    }
}

}  // namespace rtgn::heads
