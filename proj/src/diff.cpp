#include "rtgn/diff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rtgn/kernels.hpp"

namespace rtgn::diff {

std::string Shape::str() const {
    std::ostringstream os;
    os << "[" << rows << "x" << cols << "]";
    return os.str();
}

Parameter::Parameter(std::string n, std::size_t rows, std::size_t cols, bool d)
    : name(std::move(n)), shape{rows, cols}, value(rows * cols, 0.0),
      grad(rows * cols, 0.0), decay(d) {}

void Parameter::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

Shape Value::shape() const { return tape_->node(*this).shape; }
std::span<const double> Value::data() const { return tape_->node(*this).value(); }
bool Value::requires_grad() const { return tape_->node(*this).requires_grad; }

double Value::item() const {
    if (size() != 1) throw ShapeError("item() on non-scalar value " + shape().str());
    return data()[0];
}

// ---------------------------------------------------------------------------

void Tape::clear() {
    nodes_.clear();
    param_nodes_.clear();
    consumed_ = false;
}

void Tape::check(Value v) const {
    if (v.tape_ != this) throw TapeError("value belongs to a different tape");
    if (v.id_ >= nodes_.size()) throw TapeError("value refers to a cleared tape");
}

Value Tape::constant(std::vector<double> data, Shape shape) {
    if (data.size() != shape.size())
        throw ShapeError("constant: data length does not match shape " + shape.str());
    Node n;
    n.shape = shape;
    n.own = std::move(data);
    nodes_.push_back(std::move(n));
    return Value(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Value Tape::constant(std::vector<double> data) {
    const Shape s{data.size(), 1};
    return constant(std::move(data), s);
}

Value Tape::constant(std::span<const double> data) {
    return constant(std::vector<double>(data.begin(), data.end()));
}

Value Tape::scalar(double v) { return constant(std::vector<double>{v}); }

Value Tape::variable(std::vector<double> data, Shape shape) {
    Value v = constant(std::move(data), shape);
    nodes_[v.id_].requires_grad = grad_enabled_;
    return v;
}

Value Tape::variable(std::vector<double> data) {
    const Shape s{data.size(), 1};
    return variable(std::move(data), s);
}

Value Tape::param(Parameter& p) {
    if (auto it = param_nodes_.find(&p); it != param_nodes_.end())
        return Value(this, it->second);
    Node n;
    n.shape = p.shape;
    n.ext = p.value.data();
    n.param = &p;
    n.requires_grad = grad_enabled_;
    nodes_.push_back(std::move(n));
    const auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
    param_nodes_.emplace(&p, id);
    return Value(this, id);
}

std::span<double> Tape::grad_buffer(std::uint32_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad.assign(n.shape.size(), 0.0);
    return n.grad;
}

Value Tape::push(Shape shape, std::vector<double> data, bool any_parent_grad,
                 std::function<void(Tape&, std::uint32_t)> backward) {
    if (consumed_) throw TapeError("tape already consumed by backward(); clear() it first");
    Node n;
    n.shape = shape;
    n.own = std::move(data);
    if (grad_enabled_ && any_parent_grad) {
        n.requires_grad = true;
        n.backward = std::move(backward);
    }
    nodes_.push_back(std::move(n));
    return Value(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

void Tape::backward(Value root) {
    check(root);
    if (consumed_) throw TapeError("backward() called twice on the same recording");
    if (nodes_[root.id_].shape.size() != 1)
        throw ShapeError("backward() needs a scalar root, got " + nodes_[root.id_].shape.str());
    consumed_ = true;
    if (!nodes_[root.id_].requires_grad) return;
    grad_buffer(root.id_)[0] = 1.0;
    for (std::uint32_t id = root.id_ + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.requires_grad || n.grad.empty()) continue;
        if (n.backward) {
            n.backward(*this, id);
        } else if (n.param) {
            auto& g = n.param->grad;
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        }
    }
}

std::span<const double> Tape::grad(Value v) const {
    check(v);
    const Node& n = nodes_[v.id_];
    if (n.grad.empty()) {
        // Leaf that received no gradient: report zeros of the right length.
        thread_local std::vector<double> zeros;
        zeros.assign(n.shape.size(), 0.0);
        return zeros;
    }
    return n.grad;
}

// ---------------------------------------------------------------------------

namespace {

Tape& same_tape(Value a, Value b) {
    if (!a.valid() || !b.valid() || a.tape() != b.tape())
        throw TapeError("operands live on different tapes");
    return *a.tape();
}

void require_same_shape(const char* op, Value a, Value b) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                         b.shape().str());
}

void require_vector(const char* op, Value a) {
    if (!a.shape().is_vector())
        throw ShapeError(std::string(op) + ": expected a vector, got " + a.shape().str());
}

template <class Fwd, class Bwd>
Value unary(Value a, Fwd fwd, Bwd dydx) {
    Tape& t = *a.tape();
    auto x = a.data();
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
    const auto ia = a.id();
    return t.push(a.shape(), std::move(y), a.requires_grad(), [ia, dydx](Tape& tp, std::uint32_t self) {
        auto xs = tp.node(ia).value();
        auto ys = tp.node(self).value();
        const auto& g = tp.node(self).grad;
        auto ga = tp.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * dydx(xs[i], ys[i]);
    });
}

double stable_softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Value linear(Value x, Value weight, Value bias) {
    Tape& t = same_tape(x, weight);
    require_vector("linear", x);
    const Shape ws = weight.shape();
    if (ws.cols != x.size())
        throw ShapeError("linear: weight " + ws.str() + " does not accept input " + x.shape().str());
    if (bias.valid()) {
        same_tape(x, bias);
        if (bias.size() != ws.rows)
            throw ShapeError("linear: bias " + bias.shape().str() + " does not match weight " + ws.str());
    }
    std::vector<double> y(ws.rows);
    kernels::gemv(weight.data(), ws.rows, ws.cols, x.data(),
                  bias.valid() ? bias.data() : std::span<const double>{}, y);
    const bool rg = x.requires_grad() || weight.requires_grad() || (bias.valid() && bias.requires_grad());
    const auto ix = x.id(), iw = weight.id();
    const bool has_bias = bias.valid();
    const auto ib = has_bias ? bias.id() : 0u;
    return t.push({ws.rows, 1}, std::move(y), rg, [ix, iw, ib, has_bias, ws](Tape& tp, std::uint32_t self) {
        const auto& gy = tp.node(self).grad;
        if (tp.node(ix).requires_grad)
            kernels::gemv_t_acc(tp.node(iw).value(), ws.rows, ws.cols, gy, tp.grad_buffer(ix));
        if (tp.node(iw).requires_grad)
            kernels::ger_acc(gy, tp.node(ix).value(), tp.grad_buffer(iw));
        if (has_bias && tp.node(ib).requires_grad) {
            auto gb = tp.grad_buffer(ib);
            for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i];
        }
    });
}

Value add(Value a, Value b) {
    Tape& t = same_tape(a, b);
    require_same_shape("add", a, b);
    auto x = a.data(), z = b.data();
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] + z[i];
    const auto ia = a.id(), ib = b.id();
    return t.push(a.shape(), std::move(y), a.requires_grad() || b.requires_grad(),
                  [ia, ib](Tape& tp, std::uint32_t self) {
                      const auto& g = tp.node(self).grad;
                      for (auto id : {ia, ib}) {
                          if (!tp.node(id).requires_grad) continue;
                          auto gp = tp.grad_buffer(id);
                          for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i];
                      }
                  });
}

Value sub(Value a, Value b) {
    Tape& t = same_tape(a, b);
    require_same_shape("sub", a, b);
    auto x = a.data(), z = b.data();
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] - z[i];
    const auto ia = a.id(), ib = b.id();
    return t.push(a.shape(), std::move(y), a.requires_grad() || b.requires_grad(),
                  [ia, ib](Tape& tp, std::uint32_t self) {
                      const auto& g = tp.node(self).grad;
                      if (tp.node(ia).requires_grad) {
                          auto gp = tp.grad_buffer(ia);
                          for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i];
                      }
                      if (tp.node(ib).requires_grad) {
                          auto gp = tp.grad_buffer(ib);
                          for (std::size_t i = 0; i < g.size(); ++i) gp[i] -= g[i];
                      }
                  });
}

Value mul(Value a, Value b) {
    Tape& t = same_tape(a, b);
    require_same_shape("mul", a, b);
    auto x = a.data(), z = b.data();
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] * z[i];
    const auto ia = a.id(), ib = b.id();
    return t.push(a.shape(), std::move(y), a.requires_grad() || b.requires_grad(),
                  [ia, ib](Tape& tp, std::uint32_t self) {
                      const auto& g = tp.node(self).grad;
                      auto xa = tp.node(ia).value(), xb = tp.node(ib).value();
                      if (tp.node(ia).requires_grad) {
                          auto gp = tp.grad_buffer(ia);
                          for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i] * xb[i];
                      }
                      if (tp.node(ib).requires_grad) {
                          auto gp = tp.grad_buffer(ib);
                          for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i] * xa[i];
                      }
                  });
}

Value div(Value a, Value b) {
    Tape& t = same_tape(a, b);
    require_same_shape("div", a, b);
    auto x = a.data(), z = b.data();
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] / z[i];
    const auto ia = a.id(), ib = b.id();
    return t.push(a.shape(), std::move(y), a.requires_grad() || b.requires_grad(),
                  [ia, ib](Tape& tp, std::uint32_t self) {
                      const auto& g = tp.node(self).grad;
                      auto xb = tp.node(ib).value();
                      auto ys = tp.node(self).value();
                      if (tp.node(ia).requires_grad) {
                          auto gp = tp.grad_buffer(ia);
                          for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i] / xb[i];
                      }
                      if (tp.node(ib).requires_grad) {
                          auto gp = tp.grad_buffer(ib);
                          for (std::size_t i = 0; i < g.size(); ++i) gp[i] -= g[i] * ys[i] / xb[i];
                      }
                  });
}

Value scale(Value a, double s) {
    return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Value one_minus(Value a) {
    return unary(a, [](double x) { return 1.0 - x; }, [](double, double) { return -1.0; });
}

Value sigmoid(Value a) {
    return unary(a, logistic, [](double, double y) { return y * (1.0 - y); });
}

Value tanh(Value a) {
    return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Value softplus(Value a) {
    return unary(a, stable_softplus, [](double x, double) { return logistic(x); });
}

Value clamp_min(Value a, double floor) {
    return unary(a, [floor](double x) { return x < floor ? floor : x; },
                 [floor](double x, double) { return x < floor ? 0.0 : 1.0; });
}

Value log(Value a) {
    return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Value square(Value a) {
    return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Value concat(Value a, Value b) { return concat({a, b}); }

Value concat(std::initializer_list<Value> parts) {
    return concat(std::span<const Value>(parts.begin(), parts.size()));
}

Value concat(std::span<const Value> parts) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    Tape& t = *parts.front().tape();
    std::size_t total = 0;
    bool rg = false;
    for (const Value& p : parts) {
        same_tape(parts.front(), p);
        require_vector("concat", p);
        total += p.size();
        rg = rg || p.requires_grad();
    }
    std::vector<double> y;
    y.reserve(total);
    std::vector<std::uint32_t> ids;
    ids.reserve(parts.size());
    for (const Value& p : parts) {
        auto d = p.data();
        y.insert(y.end(), d.begin(), d.end());
        ids.push_back(p.id());
    }
    return t.push({total, 1}, std::move(y), rg, [ids = std::move(ids)](Tape& tp, std::uint32_t self) {
        const auto& g = tp.node(self).grad;
        std::size_t off = 0;
        for (auto id : ids) {
            const std::size_t n = tp.node(id).shape.size();
            if (tp.node(id).requires_grad) {
                auto gp = tp.grad_buffer(id);
                for (std::size_t i = 0; i < n; ++i) gp[i] += g[off + i];
            }
            off += n;
        }
    });
}

Value sum(Value a) {
    Tape& t = *a.tape();
    double s = 0.0;
    for (double x : a.data()) s += x;
    const auto ia = a.id();
    return t.push({1, 1}, {s}, a.requires_grad(), [ia](Tape& tp, std::uint32_t self) {
        const double g = tp.node(self).grad[0];
        for (double& gp : tp.grad_buffer(ia)) gp += g;
    });
}

Value mean(Value a) {
    if (a.size() == 0) throw ShapeError("mean of an empty value");
    return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Value add_n(std::span<const Value> parts) {
    if (parts.empty()) throw ShapeError("add_n: no inputs");
    Tape& t = *parts.front().tape();
    const Shape s = parts.front().shape();
    std::vector<double> y(s.size(), 0.0);
    std::vector<std::uint32_t> ids;
    bool rg = false;
    for (const Value& p : parts) {
        same_tape(parts.front(), p);
        require_same_shape("add_n", parts.front(), p);
        auto d = p.data();
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += d[i];
        ids.push_back(p.id());
        rg = rg || p.requires_grad();
    }
    return t.push(s, std::move(y), rg, [ids = std::move(ids)](Tape& tp, std::uint32_t self) {
        const auto& g = tp.node(self).grad;
        for (auto id : ids) {
            if (!tp.node(id).requires_grad) continue;
            auto gp = tp.grad_buffer(id);
            for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i];
        }
    });
}

Value sq_dist(Value a, Value b) {
    Tape& t = same_tape(a, b);
    require_same_shape("sq_dist", a, b);
    const double d = kernels::serial::sq_dist(a.data(), b.data());
    const auto ia = a.id(), ib = b.id();
    return t.push({1, 1}, {d}, a.requires_grad() || b.requires_grad(), [ia, ib](Tape& tp, std::uint32_t self) {
        const double g = tp.node(self).grad[0];
        auto xa = tp.node(ia).value(), xb = tp.node(ib).value();
        if (tp.node(ia).requires_grad) {
            auto gp = tp.grad_buffer(ia);
            for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += 2.0 * g * (xa[i] - xb[i]);
        }
        if (tp.node(ib).requires_grad) {
            auto gp = tp.grad_buffer(ib);
            for (std::size_t i = 0; i < gp.size(); ++i) gp[i] -= 2.0 * g * (xa[i] - xb[i]);
        }
    });
}

Value mean_cos_affine(Value omega, Value phase, std::span<const double> deltas) {
    Tape& t = same_tape(omega, phase);
    require_same_shape("mean_cos_affine", omega, phase);
    if (deltas.empty()) throw ShapeError("mean_cos_affine: no deltas");
    auto w = omega.data(), ph = phase.data();
    const std::size_t n = w.size();
    const double inv = 1.0 / static_cast<double>(deltas.size());
    std::vector<double> y(n, 0.0);
    for (double dt : deltas)
        for (std::size_t k = 0; k < n; ++k) y[k] += std::cos(w[k] * dt + ph[k]);
    for (double& v : y) v *= inv;
    const auto iw = omega.id(), ip = phase.id();
    std::vector<double> ds(deltas.begin(), deltas.end());
    return t.push(omega.shape(), std::move(y), omega.requires_grad() || phase.requires_grad(),
                  [iw, ip, ds = std::move(ds), inv](Tape& tp, std::uint32_t self) {
                      const auto& g = tp.node(self).grad;
                      auto w = tp.node(iw).value(), ph = tp.node(ip).value();
                      const bool gw = tp.node(iw).requires_grad, gph = tp.node(ip).requires_grad;
                      std::vector<double> dw(g.size(), 0.0), dp(g.size(), 0.0);
                      for (double dt : ds) {
                          for (std::size_t k = 0; k < g.size(); ++k) {
                              const double s = -std::sin(w[k] * dt + ph[k]) * inv * g[k];
                              dw[k] += s * dt;
                              dp[k] += s;
                          }
                      }
                      if (gw) {
                          auto b = tp.grad_buffer(iw);
                          for (std::size_t k = 0; k < b.size(); ++k) b[k] += dw[k];
                      }
                      if (gph) {
                          auto b = tp.grad_buffer(ip);
                          for (std::size_t k = 0; k < b.size(); ++k) b[k] += dp[k];
                      }
                  });
}

Value gaussian_nll(Value z, Value sigma, Value target) {
    Tape& t = same_tape(z, sigma);
    same_tape(z, target);
    require_same_shape("gaussian_nll", z, sigma);
    require_same_shape("gaussian_nll", z, target);
    auto zv = z.data(), sv = sigma.data(), cv = target.data();
    const std::size_t n = zv.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
        const double s2 = sv[m] * sv[m];
        const double r = zv[m] - cv[m];
        acc += std::log(s2) + r * r / s2;
    }
    const auto iz = z.id(), is = sigma.id(), ic = target.id();
    const bool rg = z.requires_grad() || sigma.requires_grad() || target.requires_grad();
    return t.push({1, 1}, {acc * inv_n}, rg, [iz, is, ic, inv_n](Tape& tp, std::uint32_t self) {
        const double g = tp.node(self).grad[0] * inv_n;
        auto zv = tp.node(iz).value(), sv = tp.node(is).value(), cv = tp.node(ic).value();
        const std::size_t n = zv.size();
        if (tp.node(iz).requires_grad || tp.node(ic).requires_grad) {
            std::vector<double> dr(n);
            for (std::size_t m = 0; m < n; ++m) dr[m] = 2.0 * (zv[m] - cv[m]) / (sv[m] * sv[m]) * g;
            if (tp.node(iz).requires_grad) {
                auto b = tp.grad_buffer(iz);
                for (std::size_t m = 0; m < n; ++m) b[m] += dr[m];
            }
            if (tp.node(ic).requires_grad) {
                auto b = tp.grad_buffer(ic);
                for (std::size_t m = 0; m < n; ++m) b[m] -= dr[m];
            }
        }
        if (tp.node(is).requires_grad) {
            auto b = tp.grad_buffer(is);
            for (std::size_t m = 0; m < n; ++m) {
                const double r = zv[m] - cv[m];
                const double s = sv[m];
                b[m] += g * (2.0 / s - 2.0 * r * r / (s * s * s));
            }
        }
    });
}

// ---------------------------------------------------------------------------

GruParams::GruParams(const std::string& prefix, std::size_t hidden, std::size_t input)
    : w_input(prefix + ".w_input", 3 * hidden, input),
      w_hidden(prefix + ".w_hidden", 3 * hidden, hidden),
      b_input(prefix + ".b_input", 3 * hidden, 1),
      b_hidden(prefix + ".b_hidden", 3 * hidden, 1) {}

std::vector<Parameter*> GruParams::all() { return {&w_input, &w_hidden, &b_input, &b_hidden}; }

Value gru_cell(Value h_prev, Value msg, GruParams& params) {
    Tape& t = same_tape(h_prev, msg);
    const std::size_t d = params.hidden_dim();
    if (h_prev.size() != d || !h_prev.shape().is_vector())
        throw ShapeError("gru_cell: hidden state " + h_prev.shape().str() + " vs hidden dim " +
                         std::to_string(d));
    if (msg.size() != params.input_dim() || !msg.shape().is_vector())
        throw ShapeError("gru_cell: message " + msg.shape().str() + " vs input dim " +
                         std::to_string(params.input_dim()));

    Value gi = linear(msg, t.param(params.w_input), t.param(params.b_input));
    Value gh = linear(h_prev, t.param(params.w_hidden), t.param(params.b_hidden));

    // Fused gate combination over gi = [i_r, i_u, i_n], gh = [h_r, h_u, h_n].
    auto xi = gi.data(), xh = gh.data(), hp = h_prev.data();
    std::vector<double> out(d);
    for (std::size_t k = 0; k < d; ++k) {
        const double r = logistic(xi[k] + xh[k]);
        const double u = logistic(xi[d + k] + xh[d + k]);
        const double n = std::tanh(xi[2 * d + k] + r * xh[2 * d + k]);
        out[k] = (1.0 - u) * n + u * hp[k];
    }
    const auto ii = gi.id(), ih = gh.id(), ip = h_prev.id();
    const bool rg = gi.requires_grad() || gh.requires_grad() || h_prev.requires_grad();
    return t.push({d, 1}, std::move(out), rg, [ii, ih, ip, d](Tape& tp, std::uint32_t self) {
        const auto& g = tp.node(self).grad;
        auto xi = tp.node(ii).value(), xh = tp.node(ih).value(), hp = tp.node(ip).value();
        std::vector<double> dgi(3 * d), dgh(3 * d), dh(d);
        for (std::size_t k = 0; k < d; ++k) {
            const double r = logistic(xi[k] + xh[k]);
            const double u = logistic(xi[d + k] + xh[d + k]);
            const double n = std::tanh(xi[2 * d + k] + r * xh[2 * d + k]);
            const double dn = g[k] * (1.0 - u);
            const double du = g[k] * (hp[k] - n);
            dh[k] = g[k] * u;
            const double dn_pre = dn * (1.0 - n * n);
            const double dr = dn_pre * xh[2 * d + k];
            const double dr_pre = dr * r * (1.0 - r);
            const double du_pre = du * u * (1.0 - u);
            dgi[k] = dr_pre;
            dgh[k] = dr_pre;
            dgi[d + k] = du_pre;
            dgh[d + k] = du_pre;
            dgi[2 * d + k] = dn_pre;
            dgh[2 * d + k] = dn_pre * r;
        }
        if (tp.node(ii).requires_grad) {
            auto b = tp.grad_buffer(ii);
            for (std::size_t k = 0; k < 3 * d; ++k) b[k] += dgi[k];
        }
        if (tp.node(ih).requires_grad) {
            auto b = tp.grad_buffer(ih);
            for (std::size_t k = 0; k < 3 * d; ++k) b[k] += dgh[k];
        }
        if (tp.node(ip).requires_grad) {
            auto b = tp.grad_buffer(ip);
            for (std::size_t k = 0; k < d; ++k) b[k] += dh[k];
        }
    });
}

// ---------------------------------------------------------------------------

OptimizerState make_optimizer(std::span<Parameter* const> params, AdamConfig config) {
    OptimizerState s;
    s.config = config;
    for (const Parameter* p : params) {
        s.m.emplace_back(p->size(), 0.0);
        s.v.emplace_back(p->size(), 0.0);
    }
    return s;
}

void adam_step(OptimizerState& state, std::span<Parameter* const> params) {
    if (params.size() != state.m.size())
        throw ShapeError("adam_step: optimizer tracks " + std::to_string(state.m.size()) +
                         " parameters, got " + std::to_string(params.size()));
    const AdamConfig& c = state.config;
    ++state.step;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter& p = *params[k];
        auto& m = state.m[k];
        auto& v = state.v[k];
        if (m.size() != p.size() || p.grad.size() != p.size())
            throw ShapeError("adam_step: moment/gradient shape mismatch for " + p.name);
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double g = p.grad[i];
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            if (p.decay && c.weight_decay != 0.0) p.value[i] -= c.lr * c.weight_decay * p.value[i];
            p.value[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
        }
    }
}

double clip_grad_norm(std::span<Parameter* const> params, double max_norm) {
    double sq = 0.0;
    for (const Parameter* p : params)
        for (double g : p->grad) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double f = max_norm / norm;
        for (Parameter* p : params)
            for (double& g : p->grad) g *= f;
    }
    return norm;
}

void zero_grad(std::span<Parameter* const> params) {
    for (Parameter* p : params) p->zero_grad();
}

// ---------------------------------------------------------------------------

double grad_check(const Objective& f, std::span<const double> x, double eps) {
    const std::vector<double> analytic = f.gradient(x);
    if (analytic.size() != x.size())
        throw ShapeError("grad_check: gradient length does not match input length");
    std::vector<double> probe(x.begin(), x.end());
    double worst = 0.0;
    for (std::size_t m = 0; m < x.size(); ++m) {
        probe[m] = x[m] + eps;
        const double fp = f.value(probe);
        probe[m] = x[m] - eps;
        const double fm = f.value(probe);
        probe[m] = x[m];
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw std::domain_error("grad_check: non-finite evaluation at coordinate " + std::to_string(m));
        const double numeric = (fp - fm) / (2.0 * eps);
        const double a = analytic[m];
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(a - numeric) / denom);
    }
    return worst;
}

double grad_check(const std::function<Value(Tape&)>& loss, std::span<Parameter* const> params,
                  double eps) {
    std::vector<double> x0;
    for (const Parameter* p : params) x0.insert(x0.end(), p->value.begin(), p->value.end());

    auto load = [&](std::span<const double> x) {
        std::size_t off = 0;
        for (Parameter* p : params) {
            std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(off), p->size(), p->value.begin());
            off += p->size();
        }
    };

    Objective obj;
    obj.value = [&](std::span<const double> x) {
        load(x);
        Tape t(false);
        return loss(t).item();
    };
    obj.gradient = [&](std::span<const double> x) {
        load(x);
        zero_grad(params);
        Tape t;
        t.backward(loss(t));
        std::vector<double> g;
        for (const Parameter* p : params) g.insert(g.end(), p->grad.begin(), p->grad.end());
        return g;
    };
    const double err = grad_check(obj, x0, eps);
    load(x0);
    return err;
}

}  // namespace rtgn::diff
