#pragma once

// Minimal reverse-mode automatic differentiation over dense 64-bit vectors and
// matrices. A Tape records every primitive in creation order (parents always
// precede children), so a single reverse sweep is a valid topological
// traversal. Tapes are rebuilt per batch and are single-use: backward() may be
// called once, after which the tape must be cleared before recording again.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace rtgn::diff {

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class TapeError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct Shape {
    std::size_t rows = 0;
    std::size_t cols = 1;

    std::size_t size() const { return rows * cols; }
    bool is_vector() const { return cols == 1; }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

// Trainable tensor living outside any tape. `decay` selects whether the
// optimizer applies decoupled weight decay to it.
struct Parameter {
    std::string name;
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool decay = true;

    Parameter() = default;
    Parameter(std::string name, std::size_t rows, std::size_t cols, bool decay = true);

    std::size_t size() const { return value.size(); }
    void zero_grad();
};

class Tape;

// Handle to a node on a tape. Cheap to copy; only valid while its tape lives
// and has not been cleared.
class Value {
public:
    Value() = default;

    bool valid() const { return tape_ != nullptr; }
    Shape shape() const;
    std::size_t size() const { return shape().size(); }
    std::span<const double> data() const;
    double item() const;
    bool requires_grad() const;

    Tape* tape() const { return tape_; }
    std::uint32_t id() const { return id_; }

private:
    friend class Tape;
    Value(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::uint32_t id_ = 0;
};

class Tape {
public:
    // With grad disabled no backward closures are recorded; values are
    // computed by exactly the same code paths.
    explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool grad_enabled() const { return grad_enabled_; }
    std::size_t node_count() const { return nodes_.size(); }
    bool consumed() const { return consumed_; }

    // Drops all nodes; parameter leaves are re-created on next use.
    void clear();

    Value constant(std::vector<double> data, Shape shape);
    Value constant(std::vector<double> data);
    Value constant(std::span<const double> data);
    Value scalar(double v);
    // Leaf that receives a gradient readable through grad().
    Value variable(std::vector<double> data, Shape shape);
    Value variable(std::vector<double> data);
    // Leaf bound to a Parameter; gradients are accumulated into param.grad.
    // Repeated calls within one recording return the same node.
    Value param(Parameter& p);

    void backward(Value root);
    std::span<const double> grad(Value v) const;

    // Internal node access used by the ops.
    struct Node {
        Shape shape;
        std::vector<double> own;
        const double* ext = nullptr;
        std::vector<double> grad;
        Parameter* param = nullptr;
        std::function<void(Tape&, std::uint32_t)> backward;
        bool requires_grad = false;

        std::span<const double> value() const {
            return ext ? std::span<const double>(ext, shape.size())
                       : std::span<const double>(own);
        }
    };

    const Node& node(Value v) const { return nodes_[v.id_]; }
    Node& node(std::uint32_t id) { return nodes_[id]; }
    std::span<double> grad_buffer(std::uint32_t id);

    // Record a computed node. `backward` is dropped unless some parent
    // requires grad and recording is enabled.
    Value push(Shape shape, std::vector<double> data, bool any_parent_grad,
               std::function<void(Tape&, std::uint32_t)> backward);

private:
    void check(Value v) const;

    std::vector<Node> nodes_;
    std::unordered_map<const Parameter*, std::uint32_t> param_nodes_;
    bool grad_enabled_;
    bool consumed_ = false;
};

// ---- primitive ops ------------------------------------------------------

// weight [m x n] . x [n] + bias [m]; bias may be an invalid Value for none.
Value linear(Value x, Value weight, Value bias);
Value add(Value a, Value b);
Value sub(Value a, Value b);
Value mul(Value a, Value b);
Value div(Value a, Value b);
Value scale(Value a, double s);
Value one_minus(Value a);
Value sigmoid(Value a);
Value tanh(Value a);
// log(1 + exp(x)), overflow safe: returns x for x > 30.
Value softplus(Value a);
// max(a, floor) elementwise; zero gradient where clamped.
Value clamp_min(Value a, double floor);
Value log(Value a);
Value square(Value a);
Value concat(Value a, Value b);
Value concat(std::initializer_list<Value> parts);
Value concat(std::span<const Value> parts);
Value sum(Value a);
Value mean(Value a);
Value add_n(std::span<const Value> parts);
// sum_m (a_m - b_m)^2
Value sq_dist(Value a, Value b);
// mean over deltas of cos(omega * delta + phase), elementwise in omega/phase.
Value mean_cos_affine(Value omega, Value phase, std::span<const double> deltas);
// (1/N) sum_m [ log sigma_m^2 + (z_m - target_m)^2 / sigma_m^2 ]
Value gaussian_nll(Value z, Value sigma, Value target);

// ---- composite ops -------------------------------------------------------

struct GruParams {
    Parameter w_input;   // [3d x m]  rows: reset, update, candidate
    Parameter w_hidden;  // [3d x d]
    Parameter b_input;   // [3d]
    Parameter b_hidden;  // [3d]

    GruParams() = default;
    GruParams(const std::string& prefix, std::size_t hidden, std::size_t input);

    std::size_t hidden_dim() const { return b_input.size() / 3; }
    std::size_t input_dim() const { return w_input.shape.cols; }
    std::vector<Parameter*> all();
};

// r = sig(Wi_r m + bi_r + Wh_r h + bh_r)
// u = sig(Wi_u m + bi_u + Wh_u h + bh_u)
// n = tanh(Wi_n m + bi_n + r * (Wh_n h + bh_n))
// h' = (1 - u) * n + u * h
Value gru_cell(Value h_prev, Value msg, GruParams& params);

// ---- optimizer -----------------------------------------------------------

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

struct OptimizerState {
    AdamConfig config;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::uint64_t step = 0;
};

OptimizerState make_optimizer(std::span<Parameter* const> params, AdamConfig config);

// Adam with bias correction; decoupled decay p -= lr * wd * p on params with
// decay set. Uses each parameter's .grad.
void adam_step(OptimizerState& state, std::span<Parameter* const> params);

// Rescales all gradients so their joint L2 norm is at most max_norm.
// Returns the pre-clipping norm.
double clip_grad_norm(std::span<Parameter* const> params, double max_norm);

void zero_grad(std::span<Parameter* const> params);

// ---- finite-difference checking -------------------------------------------

struct Objective {
    std::function<double(std::span<const double>)> value;
    std::function<std::vector<double>(std::span<const double>)> gradient;
};

// Worst relative error between the analytic gradient and central differences,
// with denominator max(|a|, |n|, 1e-8). Throws on non-finite evaluations.
double grad_check(const Objective& f, std::span<const double> x, double eps = 1e-5);

// Same check over a set of parameters: `loss` records a scalar on the given
// tape using the parameters' current values.
double grad_check(const std::function<Value(Tape&)>& loss,
                  std::span<Parameter* const> params, double eps = 1e-5);

}  // namespace rtgn::diff
