#include "rtgn/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "rtgn/binary_io.hpp"

namespace rtgn::encoder {

const char* to_string(HeadKind head) {
    return head == HeadKind::Gaussian ? "gaussian" : "svdd";
}

HeadKind parse_head(const std::string& name) {
    if (name == "svdd") return HeadKind::Svdd;
    if (name == "gaussian") return HeadKind::Gaussian;
    throw std::invalid_argument("unknown head '" + name + "' (expected svdd or gaussian)");
}

EncoderParams::EncoderParams(const EncoderConfig& c, HeadKind h)
    : config(c), head(h),
      gru("gru", c.memory_dim, c.message_dim()),
      time_omega("time.omega", c.time_dim, 1),
      time_phase("time.phase", c.time_dim, 1),
      embed_w1("embed.w1", c.hidden_dim, c.embed_input_dim()),
      embed_b1("embed.b1", c.hidden_dim, 1),
      embed_w2("embed.w2", c.hidden_dim, c.hidden_dim),
      embed_b2("embed.b2", c.hidden_dim, 1),
      out_w("head.mu.w", c.embed_dim, c.hidden_dim),
      out_b("head.mu.b", c.embed_dim, 1) {
    if (h == HeadKind::Gaussian) {
        sigma_w = diff::Parameter("head.sigma.w", c.embed_dim, c.hidden_dim);
        sigma_b = diff::Parameter("head.sigma.b", c.embed_dim, 1);
    }
}

void EncoderParams::initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto glorot = [&](diff::Parameter& p) {
        const double limit = std::sqrt(6.0 / static_cast<double>(p.shape.rows + p.shape.cols));
        std::uniform_real_distribution<double> u(-limit, limit);
        for (double& v : p.value) v = u(rng);
    };
    auto zero = [](diff::Parameter& p) { std::fill(p.value.begin(), p.value.end(), 0.0); };

    // The three GRU gate blocks are initialized as separate d x m matrices.
    for (diff::Parameter* w : {&gru.w_input, &gru.w_hidden}) {
        const std::size_t d = config.memory_dim;
        const double limit = std::sqrt(6.0 / static_cast<double>(d + w->shape.cols));
        std::uniform_real_distribution<double> u(-limit, limit);
        for (double& v : w->value) v = u(rng);
    }
    zero(gru.b_input);
    zero(gru.b_hidden);

    const std::size_t dt = config.time_dim;
    for (std::size_t k = 0; k < dt; ++k) {
        const double frac = dt > 1 ? static_cast<double>(k) / static_cast<double>(dt - 1) : 0.0;
        time_omega.value[k] = std::pow(10.0, -config.time_scale_decades * frac);
    }
    zero(time_phase);

    glorot(embed_w1);
    zero(embed_b1);
    glorot(embed_w2);
    zero(embed_b2);
    glorot(out_w);
    zero(out_b);
    if (head == HeadKind::Gaussian) {
        glorot(sigma_w);
        zero(sigma_b);
    }
}

std::vector<diff::Parameter*> EncoderParams::all() {
    std::vector<diff::Parameter*> ps = gru.all();
    for (diff::Parameter* p : {&time_omega, &time_phase, &embed_w1, &embed_b1, &embed_w2, &embed_b2, &out_w, &out_b})
        ps.push_back(p);
    if (head == HeadKind::Gaussian) {
        ps.push_back(&sigma_w);
        ps.push_back(&sigma_b);
    }
    return ps;
}

std::vector<const diff::Parameter*> EncoderParams::all() const {
    auto ps = const_cast<EncoderParams*>(this)->all();
    return {ps.begin(), ps.end()};
}

// ---------------------------------------------------------------------------

MemoryBank::MemoryBank(std::size_t node_count, std::size_t dim, std::size_t message_dim, double t0)
    : dim_(dim), message_dim_(message_dim), t0_(t0),
      memory_(node_count * dim, 0.0), prev_(node_count * dim, 0.0),
      message_(node_count * message_dim, 0.0), last_update_(node_count, t0),
      has_message_(node_count, 0), zeros_(std::max(dim, message_dim), 0.0) {}

MemoryBank init_memory(std::size_t node_count, std::size_t dim, std::size_t message_dim, double t0) {
    return MemoryBank(node_count, dim, message_dim, t0);
}

void MemoryBank::grow(NodeId node) {
    const std::size_t n = static_cast<std::size_t>(node) + 1;
    if (n <= last_update_.size()) return;
    memory_.resize(n * dim_, 0.0);
    prev_.resize(n * dim_, 0.0);
    message_.resize(n * message_dim_, 0.0);
    last_update_.resize(n, t0_);
    has_message_.resize(n, 0);
}

std::span<const double> MemoryBank::memory(NodeId node) const {
    if (node >= node_count()) return {zeros_.data(), dim_};
    return {memory_.data() + static_cast<std::size_t>(node) * dim_, dim_};
}

double MemoryBank::last_update(NodeId node) const {
    return node < node_count() ? last_update_[node] : t0_;
}

bool MemoryBank::has_message(NodeId node) const {
    return node < node_count() && has_message_[node] != 0;
}

std::span<const double> MemoryBank::prev_memory(NodeId node) const {
    if (node >= node_count()) return {zeros_.data(), dim_};
    return {prev_.data() + static_cast<std::size_t>(node) * dim_, dim_};
}

std::span<const double> MemoryBank::last_message(NodeId node) const {
    if (node >= node_count()) return {zeros_.data(), message_dim_};
    return {message_.data() + static_cast<std::size_t>(node) * message_dim_, message_dim_};
}

void MemoryBank::commit(NodeId node, std::span<const double> new_memory,
                        std::span<const double> message, double t) {
    if (new_memory.size() != dim_ || message.size() != message_dim_)
        throw std::invalid_argument("MemoryBank::commit: dimension mismatch");
    grow(node);
    const std::size_t off = static_cast<std::size_t>(node) * dim_;
    std::copy(memory_.begin() + static_cast<std::ptrdiff_t>(off),
              memory_.begin() + static_cast<std::ptrdiff_t>(off + dim_),
              prev_.begin() + static_cast<std::ptrdiff_t>(off));
    std::copy(new_memory.begin(), new_memory.end(), memory_.begin() + static_cast<std::ptrdiff_t>(off));
    std::copy(message.begin(), message.end(),
              message_.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(node) * message_dim_));
    last_update_[node] = t;
    has_message_[node] = 1;
}

void MemoryBank::refresh(NodeId node, std::span<const double> new_memory) {
    if (new_memory.size() != dim_) throw std::invalid_argument("MemoryBank::refresh: dimension mismatch");
    grow(node);
    std::copy(new_memory.begin(), new_memory.end(),
              memory_.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(node) * dim_));
}

void MemoryBank::reset() {
    std::fill(memory_.begin(), memory_.end(), 0.0);
    std::fill(prev_.begin(), prev_.end(), 0.0);
    std::fill(message_.begin(), message_.end(), 0.0);
    std::fill(last_update_.begin(), last_update_.end(), t0_);
    std::fill(has_message_.begin(), has_message_.end(), 0);
}

void MemoryBank::save(std::ostream& os) const {
    io::write_u64(os, dim_);
    io::write_u64(os, message_dim_);
    io::write_f64(os, t0_);
    io::write_f64s(os, memory_);
    io::write_f64s(os, prev_);
    io::write_f64s(os, message_);
    io::write_f64s(os, last_update_);
    io::write_u64(os, has_message_.size());
    for (auto b : has_message_) io::write_u32(os, b);
}

MemoryBank MemoryBank::load(std::istream& is) {
    MemoryBank b;
    b.dim_ = io::read_u64(is);
    b.message_dim_ = io::read_u64(is);
    b.t0_ = io::read_f64(is);
    b.memory_ = io::read_f64s(is);
    b.prev_ = io::read_f64s(is);
    b.message_ = io::read_f64s(is);
    b.last_update_ = io::read_f64s(is);
    const auto n = io::read_u64(is);
    if (n != b.last_update_.size() || b.memory_.size() != n * b.dim_ || b.prev_.size() != n * b.dim_ ||
        b.message_.size() != n * b.message_dim_)
        throw io::FormatError("memory bank: inconsistent block sizes");
    b.has_message_.resize(n);
    for (auto& f : b.has_message_) f = static_cast<std::uint8_t>(io::read_u32(is));
    b.zeros_.assign(std::max(b.dim_, b.message_dim_), 0.0);
    return b;
}

// ---------------------------------------------------------------------------

namespace {

void check_delta(double dt) {
    if (!(dt >= 0.0) || !std::isfinite(dt)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "time_encode: negative or non-finite time delta " << dt << " (clock regression upstream?)";
        throw std::domain_error(msg.str());
    }
}

diff::Tape& scratch_tape() {
    thread_local diff::Tape tape(false);
    tape.clear();
    return tape;
}

}  // namespace

std::vector<double> time_encode(double dt, const EncoderParams& params) {
    check_delta(dt);
    const auto& w = params.time_omega.value;
    const auto& ph = params.time_phase.value;
    std::vector<double> out(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) out[k] = std::cos(w[k] * dt + ph[k]);
    return out;
}

diff::Value time_encode(diff::Tape& tape, std::span<const double> deltas, EncoderParams& params) {
    for (double dt : deltas) check_delta(dt);
    return diff::mean_cos_affine(tape.param(params.time_omega), tape.param(params.time_phase), deltas);
}

Messages compute_messages(const Event& event, const MemoryBank& bank, const EncoderParams& params) {
    const EncoderConfig& c = params.config;
    if (event.features.size() != c.feature_dim)
        throw std::invalid_argument("compute_messages: event has " + std::to_string(event.features.size()) +
                                    " features, encoder expects " + std::to_string(c.feature_dim));
    auto hs = bank.memory(event.src);
    auto hd = bank.memory(event.dst);
    auto build = [&](std::span<const double> self, std::span<const double> other, NodeId node) {
        std::vector<double> msg;
        msg.reserve(c.message_dim());
        msg.insert(msg.end(), self.begin(), self.end());
        msg.insert(msg.end(), other.begin(), other.end());
        const auto te = time_encode(event.t - bank.last_update(node), params);
        msg.insert(msg.end(), te.begin(), te.end());
        msg.insert(msg.end(), event.features.begin(), event.features.end());
        return msg;
    };
    return {build(hs, hd, event.src), build(hd, hs, event.dst)};
}

void update_memory(MemoryBank& bank, NodeId node, std::span<const double> message,
                   EncoderParams& params, double t) {
    if (t < bank.last_update(node)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "update_memory: time regression for node " << node << ": " << t << " < "
            << bank.last_update(node);
        throw ctdg::OrderError(msg.str());
    }
    diff::Tape& tape = scratch_tape();
    diff::Value h = diff::gru_cell(tape.constant(bank.memory(node)), tape.constant(message), params.gru);
    auto out = h.data();
    bank.commit(node, out, message, t);
}

void apply_event(MemoryBank& bank, const Event& event, EncoderParams& params) {
    const Messages m = compute_messages(event, bank, params);
    update_memory(bank, event.src, m.src, params, event.t);
    update_memory(bank, event.dst, m.dst, params, event.t);
}

// ---------------------------------------------------------------------------

MemoryView::MemoryView(diff::Tape& tape, const MemoryBank& bank, EncoderParams& params, bool replay)
    : tape_(tape), bank_(bank), params_(params), replay_(replay) {}

diff::Value MemoryView::get(NodeId node) {
    if (auto it = cache_.find(node); it != cache_.end()) return it->second;
    diff::Value v;
    if (replay_ && bank_.has_message(node)) {
        v = diff::gru_cell(tape_.constant(bank_.prev_memory(node)), tape_.constant(bank_.last_message(node)),
                           params_.gru);
    } else {
        v = tape_.constant(bank_.memory(node));
    }
    cache_.emplace(node, v);
    return v;
}

void MemoryView::write_back(MemoryBank& bank) const {
    if (!replay_) return;
    for (const auto& [node, v] : cache_)
        if (bank.has_message(node)) bank.refresh(node, v.data());
}

NodeOutput embed_node(diff::Tape& tape, MemoryView& memory, NodeId node, double t,
                      const MemoryBank& bank, const TemporalAdjacencyStore& store,
                      EncoderParams& params) {
    const EncoderConfig& c = params.config;
    diff::Value h = memory.get(node);

    const auto nbrs = store.neighbors(node, t, c.neighbors);
    diff::Value agg_h, agg_t, agg_f;
    if (nbrs.empty()) {
        agg_h = tape.constant(std::vector<double>(c.memory_dim, 0.0));
        agg_t = tape.constant(std::vector<double>(c.time_dim, 0.0));
        agg_f = tape.constant(std::vector<double>(c.feature_dim, 0.0));
    } else {
        const double inv = 1.0 / static_cast<double>(nbrs.size());
        std::vector<double> mh(c.memory_dim, 0.0), mf(c.feature_dim, 0.0), deltas;
        deltas.reserve(nbrs.size());
        for (const auto& inc : nbrs) {
            auto hn = bank.memory(inc.other);
            for (std::size_t k = 0; k < c.memory_dim; ++k) mh[k] += hn[k];
            const auto& f = store.event(inc.event).features;
            for (std::size_t k = 0; k < c.feature_dim; ++k) mf[k] += f[k];
            deltas.push_back(t - inc.t);
        }
        for (double& v : mh) v *= inv;
        for (double& v : mf) v *= inv;
        agg_h = tape.constant(std::move(mh));
        agg_t = time_encode(tape, deltas, params);
        agg_f = tape.constant(std::move(mf));
    }

    diff::Value x = diff::concat({h, agg_h, agg_t, agg_f});
    diff::Value a1 = diff::tanh(diff::linear(x, tape.param(params.embed_w1), tape.param(params.embed_b1)));
    diff::Value raw = diff::tanh(diff::linear(a1, tape.param(params.embed_w2), tape.param(params.embed_b2)));

    NodeOutput out;
    out.mu = diff::linear(raw, tape.param(params.out_w), tape.param(params.out_b));
    if (params.head == HeadKind::Gaussian) {
        diff::Value pre = diff::linear(raw, tape.param(params.sigma_w), tape.param(params.sigma_b));
        out.sigma = diff::clamp_min(diff::softplus(pre), c.sigma_floor);
    }
    return out;
}

GaussianNodeEmbedding embed_values(NodeId node, double t, const MemoryBank& bank,
                                   const TemporalAdjacencyStore& store, EncoderParams& params) {
    diff::Tape& tape = scratch_tape();
    MemoryView view(tape, bank, params, false);
    const NodeOutput o = embed_node(tape, view, node, t, bank, store, params);
    GaussianNodeEmbedding e;
    auto mu = o.mu.data();
    e.mu.assign(mu.begin(), mu.end());
    if (o.sigma.valid()) {
        auto s = o.sigma.data();
        e.sigma.assign(s.begin(), s.end());
    }
    return e;
}

std::vector<EventEmbedding> process_batch(std::span<const Event> events, MemoryBank& bank,
                                          TemporalAdjacencyStore& store, EncoderParams& params,
                                          StreamOptions options) {
    for (std::size_t i = 1; i < events.size(); ++i)
        if (events[i].t < events[i - 1].t) throw ctdg::OrderError("process_batch: batch is not sorted by time");
    std::vector<EventEmbedding> out;
    out.reserve(events.size());
    for (const Event& e : events) {
        EventEmbedding ee;
        ee.src = embed_values(e.src, e.t, bank, store, params);
        ee.dst = embed_values(e.dst, e.t, bank, store, params);
        out.push_back(std::move(ee));
        if (options.update_memory) apply_event(bank, e, params);
        store.insert(e);
    }
    return out;
}

}  // namespace rtgn::encoder
