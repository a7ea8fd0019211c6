#pragma once

// TGN-style temporal encoder. Every node carries a memory vector updated by a
// GRU after each event it takes part in; embeddings are computed from the
// node's pre-event memory and the mean of its K most recent prior
// interactions (neighbor memory, harmonic time encoding of the age, edge
// features), passed through a two-layer tanh network and an output head.
//
// The point head emits z (dim p). The Gaussian head emits mu (dim p) and a
// standard deviation sigma = max(softplus(.), sigma_floor).

#include <cstdint>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

#include "rtgn/ctdg.hpp"
#include "rtgn/diff.hpp"

namespace rtgn::encoder {

using ctdg::Event;
using ctdg::NodeId;
using ctdg::TemporalAdjacencyStore;

enum class HeadKind : std::uint32_t { Svdd = 0, Gaussian = 1 };

const char* to_string(HeadKind head);
HeadKind parse_head(const std::string& name);

struct EncoderConfig {
    std::size_t memory_dim = 32;
    std::size_t time_dim = 8;
    std::size_t embed_dim = 32;
    std::size_t feature_dim = 0;
    std::size_t hidden_dim = 64;
    std::size_t neighbors = 10;
    double sigma_floor = 1e-4;
    // Largest harmonic period exponent: frequencies span 1 .. 10^-time_scale_decades.
    double time_scale_decades = 5.0;
    // Recompute each batch node's last GRU step on the tape so the memory
    // updater receives gradients (one step deep).
    bool memory_grad = true;

    std::size_t message_dim() const { return 2 * memory_dim + time_dim + feature_dim; }
    std::size_t aggregate_dim() const { return memory_dim + time_dim + feature_dim; }
    std::size_t embed_input_dim() const { return memory_dim + aggregate_dim(); }

    bool operator==(const EncoderConfig&) const = default;
};

struct EncoderParams {
    EncoderConfig config;
    HeadKind head = HeadKind::Svdd;

    diff::GruParams gru;
    diff::Parameter time_omega;
    diff::Parameter time_phase;
    diff::Parameter embed_w1, embed_b1;
    diff::Parameter embed_w2, embed_b2;
    diff::Parameter out_w, out_b;
    diff::Parameter sigma_w, sigma_b;  // Gaussian head only

    EncoderParams(const EncoderConfig& config, HeadKind head);

    // Glorot-uniform weights, zero biases, log-spaced time frequencies.
    void initialize(std::uint64_t seed);

    std::vector<diff::Parameter*> all();
    std::vector<const diff::Parameter*> all() const;
};

// Per-node memory h_i(t-) with last-update times. For each node the state
// before its latest update and the message that produced it are kept so the
// latest GRU step can be replayed on a tape.
class MemoryBank {
public:
    MemoryBank() = default;
    MemoryBank(std::size_t node_count, std::size_t dim, std::size_t message_dim, double t0);

    std::size_t node_count() const { return last_update_.size(); }
    std::size_t dim() const { return dim_; }
    double start_time() const { return t0_; }

    std::span<const double> memory(NodeId node) const;
    double last_update(NodeId node) const;
    bool has_message(NodeId node) const;
    std::span<const double> prev_memory(NodeId node) const;
    std::span<const double> last_message(NodeId node) const;

    // h <- new_memory, remembering the old h and the message.
    void commit(NodeId node, std::span<const double> new_memory, std::span<const double> message, double t);
    // Overwrites the current h only (used after replaying the last step).
    void refresh(NodeId node, std::span<const double> new_memory);
    void reset();

    void save(std::ostream& os) const;
    static MemoryBank load(std::istream& is);

    bool operator==(const MemoryBank&) const = default;

private:
    void grow(NodeId node);

    std::size_t dim_ = 0;
    std::size_t message_dim_ = 0;
    double t0_ = 0.0;
    std::vector<double> memory_;
    std::vector<double> prev_;
    std::vector<double> message_;
    std::vector<double> last_update_;
    std::vector<std::uint8_t> has_message_;
    std::vector<double> zeros_;
};

MemoryBank init_memory(std::size_t node_count, std::size_t dim, std::size_t message_dim, double t0);

// cos(omega_k * dt + phase_k); dt must be >= 0.
std::vector<double> time_encode(double dt, const EncoderParams& params);
diff::Value time_encode(diff::Tape& tape, std::span<const double> deltas, EncoderParams& params);

struct Messages {
    std::vector<double> src;
    std::vector<double> dst;
};

// msg_src = h_src ⊕ h_dst ⊕ time_encode(t - last_update(src)) ⊕ f, and the
// mirror image for dst.
Messages compute_messages(const Event& event, const MemoryBank& bank, const EncoderParams& params);

void update_memory(MemoryBank& bank, NodeId node, std::span<const double> message,
                   EncoderParams& params, double t);

// Computes both messages from pre-event memory, then updates src and dst.
void apply_event(MemoryBank& bank, const Event& event, EncoderParams& params);

// Resolves node memory as tape values during one recording. With replay
// enabled, nodes that have been updated get h = gru(prev, last_message)
// recomputed under the current parameters.
class MemoryView {
public:
    MemoryView(diff::Tape& tape, const MemoryBank& bank, EncoderParams& params, bool replay);

    diff::Value get(NodeId node);
    // Writes replayed values back as the bank's current memory.
    void write_back(MemoryBank& bank) const;

private:
    diff::Tape& tape_;
    const MemoryBank& bank_;
    EncoderParams& params_;
    bool replay_;
    std::unordered_map<NodeId, diff::Value> cache_;
};

struct NodeOutput {
    diff::Value mu;     // z for the point head
    diff::Value sigma;  // invalid for the point head
};

struct NodeEmbedding {
    std::vector<double> z;
};

struct GaussianNodeEmbedding {
    std::vector<double> mu;
    std::vector<double> sigma;
};

NodeOutput embed_node(diff::Tape& tape, MemoryView& memory, NodeId node, double t,
                      const MemoryBank& bank, const TemporalAdjacencyStore& store,
                      EncoderParams& params);

// Plain-value embedding on a scratch tape; sigma is empty for the point head.
GaussianNodeEmbedding embed_values(NodeId node, double t, const MemoryBank& bank,
                                   const TemporalAdjacencyStore& store, EncoderParams& params);

struct EventEmbedding {
    GaussianNodeEmbedding src;
    GaussianNodeEmbedding dst;
};

struct StreamOptions {
    bool update_memory = true;
};

// Per-event processing: embeds both endpoints with pre-event state, then
// applies the memory updates and inserts the event into the store.
std::vector<EventEmbedding> process_batch(std::span<const Event> events, MemoryBank& bank,
                                          TemporalAdjacencyStore& store, EncoderParams& params,
                                          StreamOptions options = {});

}  // namespace rtgn::encoder
