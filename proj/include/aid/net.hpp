#ifndef AID_NET_HPP
#define AID_NET_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "aid/linalg.hpp"
#include "aid/rng.hpp"

namespace aid {

// Sinusoidal embedding of log sigma over geometrically spaced frequencies:
// [sin(w_j log s), ..., cos(w_j log s), ...], width/2 frequencies.
inline Vec time_embed(double sigma, int width) {
    if (!(sigma > 0.0)) throw std::domain_error("time_embed: sigma must be > 0");
    if (width < 2 || width % 2 != 0) throw std::invalid_argument("time_embed: width must be even and >= 2");
    int half = width / 2;
    double ls = std::log(sigma);
    Vec e(static_cast<std::size_t>(width));
    const double w_min = 0.25, w_max = 4.0;
    for (int j = 0; j < half; ++j) {
        double w = (half == 1) ? w_min : w_min * std::pow(w_max / w_min, static_cast<double>(j) / (half - 1));
        e[static_cast<std::size_t>(j)] = std::sin(w * ls);
        e[static_cast<std::size_t>(half + j)] = std::cos(w * ls);
    }
    return e;
}

enum class HeadKind { vector, scalar };

// Dense residual architecture shared by actor and critic: a conditioning
// stem over xi = (mask bits, observation), concatenated with the scaled
// state and a log-sigma embedding, a residual trunk, and a linear head.
struct NetSpec {
    int state_dim = 0;
    int time_embed_width = 16;
    int stem_width = 32;
    int stem_blocks = 2;
    int trunk_width = 64;
    int trunk_blocks = 4;
    HeadKind head = HeadKind::vector;

    void validate() const {
        if (state_dim < 1) throw std::invalid_argument("net spec: state_dim must be >= 1");
        if (time_embed_width < 2 || time_embed_width % 2 != 0)
            throw std::invalid_argument("net spec: time_embed_width must be even and >= 2");
        if (stem_width < 1 || trunk_width < 1 || stem_blocks < 1 || trunk_blocks < 1)
            throw std::invalid_argument("net spec: widths and depths must be >= 1");
    }

    int xi_dim() const { return 2 * state_dim; }
    int concat_dim() const { return stem_width + state_dim + time_embed_width; }
    int head_dim() const { return head == HeadKind::vector ? state_dim : 1; }

    std::int64_t param_count() const {
        std::int64_t n = 0;
        auto lin = [&n](int out, int in) { n += static_cast<std::int64_t>(out) * in + out; };
        lin(stem_width, xi_dim());
        for (int i = 0; i < stem_blocks; ++i) { lin(stem_width, stem_width); lin(stem_width, stem_width); }
        lin(trunk_width, concat_dim());
        for (int i = 0; i < trunk_blocks; ++i) { lin(trunk_width, trunk_width); lin(trunk_width, trunk_width); }
        lin(head_dim(), trunk_width);
        return n;
    }
};

struct ParamEntry {
    std::string name;
    std::size_t offset = 0;
    int rows = 0;  // rows == 0 marks a bias
    int cols = 0;
};

struct ParamLayout {
    std::vector<ParamEntry> entries;
    std::size_t total = 0;

    void add(const std::string& name, int rows, int cols) {
        entries.push_back({name, total, rows, cols});
        total += static_cast<std::size_t>(rows > 0 ? rows * cols : cols);
    }
};

namespace detail {

inline double silu(double x) { return x / (1.0 + std::exp(-x)); }

inline double silu_grad(double x) {
    double s = 1.0 / (1.0 + std::exp(-x));
    return s * (1.0 + x * (1.0 - s));
}

}  // namespace detail

// Forward cache for one evaluation; reused across calls to avoid churn.
struct NetWorkspace {
    Vec xi_in;
    Vec stem_pre0, stem_h0;
    std::vector<Vec> stem_pre1, stem_mid, stem_out;  // per block
    Vec concat_in;
    Vec trunk_pre0, trunk_h0;
    std::vector<Vec> trunk_pre1, trunk_mid, trunk_out;
};

class GuidanceNet {
public:
    explicit GuidanceNet(NetSpec spec) : spec_(spec) {
        spec_.validate();
        layout_.add("stem.in.w", spec_.stem_width, spec_.xi_dim());
        layout_.add("stem.in.b", 0, spec_.stem_width);
        for (int i = 0; i < spec_.stem_blocks; ++i) {
            std::string p = "stem.block" + std::to_string(i);
            layout_.add(p + ".w1", spec_.stem_width, spec_.stem_width);
            layout_.add(p + ".b1", 0, spec_.stem_width);
            layout_.add(p + ".w2", spec_.stem_width, spec_.stem_width);
            layout_.add(p + ".b2", 0, spec_.stem_width);
        }
        layout_.add("trunk.in.w", spec_.trunk_width, spec_.concat_dim());
        layout_.add("trunk.in.b", 0, spec_.trunk_width);
        for (int i = 0; i < spec_.trunk_blocks; ++i) {
            std::string p = "trunk.block" + std::to_string(i);
            layout_.add(p + ".w1", spec_.trunk_width, spec_.trunk_width);
            layout_.add(p + ".b1", 0, spec_.trunk_width);
            layout_.add(p + ".w2", spec_.trunk_width, spec_.trunk_width);
            layout_.add(p + ".b2", 0, spec_.trunk_width);
        }
        layout_.add("head.w", spec_.head_dim(), spec_.trunk_width);
        layout_.add("head.b", 0, spec_.head_dim());
        if (layout_.total != static_cast<std::size_t>(spec_.param_count()))
            throw std::logic_error("net: layout/param count mismatch");
    }

    const NetSpec& spec() const { return spec_; }
    const ParamLayout& layout() const { return layout_; }
    std::size_t param_count() const { return layout_.total; }

    // Scaled-uniform init; zero_head starts the net as the zero function so
    // an untrained actor reproduces the unguided sampler exactly.
    Vec init_params(Rng& rng, bool zero_head) const {
        Vec p(layout_.total, 0.0);
        for (const ParamEntry& e : layout_.entries) {
            if (e.rows == 0) continue;  // biases start at zero
            bool is_head = e.name == "head.w";
            if (is_head && zero_head) continue;
            double s = std::sqrt(1.0 / e.cols);
            for (int i = 0; i < e.rows * e.cols; ++i)
                p[e.offset + static_cast<std::size_t>(i)] = rng.uniform(-s, s);
        }
        return p;
    }

    // Raw network output NN(sigma, x, xi); the critic's -lambda t shift is
    // applied by the caller.
    Vec forward(const Vec& params, double sigma, const Vec& x, const Vec& xi, NetWorkspace& ws) const {
        check_shapes(params, x, xi);
        ws.xi_in = xi;
        linear(params, 0, spec_.stem_width, spec_.xi_dim(), xi, ws.stem_pre0);
        act(ws.stem_pre0, ws.stem_h0);
        resize_blocks(ws.stem_pre1, ws.stem_mid, ws.stem_out, spec_.stem_blocks);
        const Vec* h = &ws.stem_h0;
        std::size_t off = offset_after_stem_in();
        for (int i = 0; i < spec_.stem_blocks; ++i) {
            off = block_forward(params, off, spec_.stem_width, *h, ws.stem_pre1[static_cast<std::size_t>(i)],
                                ws.stem_mid[static_cast<std::size_t>(i)], ws.stem_out[static_cast<std::size_t>(i)]);
            h = &ws.stem_out[static_cast<std::size_t>(i)];
        }

        ws.concat_in.resize(static_cast<std::size_t>(spec_.concat_dim()));
        std::size_t c = 0;
        for (double v : *h) ws.concat_in[c++] = v;
        double xs = 1.0 / (1.0 + sigma);  // keep state features O(1) across noise levels
        for (double v : x) ws.concat_in[c++] = v * xs;
        Vec te = time_embed(sigma, spec_.time_embed_width);
        for (double v : te) ws.concat_in[c++] = v;

        linear(params, off, spec_.trunk_width, spec_.concat_dim(), ws.concat_in, ws.trunk_pre0);
        off += static_cast<std::size_t>(spec_.trunk_width) * spec_.concat_dim() + spec_.trunk_width;
        act(ws.trunk_pre0, ws.trunk_h0);
        resize_blocks(ws.trunk_pre1, ws.trunk_mid, ws.trunk_out, spec_.trunk_blocks);
        const Vec* g = &ws.trunk_h0;
        for (int i = 0; i < spec_.trunk_blocks; ++i) {
            off = block_forward(params, off, spec_.trunk_width, *g, ws.trunk_pre1[static_cast<std::size_t>(i)],
                                ws.trunk_mid[static_cast<std::size_t>(i)], ws.trunk_out[static_cast<std::size_t>(i)]);
            g = &ws.trunk_out[static_cast<std::size_t>(i)];
        }
        Vec out;
        linear(params, off, spec_.head_dim(), spec_.trunk_width, *g, out);
        return out;
    }

    // Accumulate d<upstream, output>/d(params) into grad. Exact reverse
    // mode over the cached forward pass; for a vector head this is the
    // vector-Jacobian product with cotangent `upstream`.
    void backward(const Vec& params, const NetWorkspace& ws, const Vec& upstream, Vec& grad) const {
        if (params.size() != layout_.total || grad.size() != layout_.total)
            throw std::invalid_argument("backward: parameter size mismatch");
        if (static_cast<int>(upstream.size()) != spec_.head_dim())
            throw std::invalid_argument("backward: cotangent shape mismatch");

        std::size_t head_off = layout_.total - static_cast<std::size_t>(spec_.head_dim()) * spec_.trunk_width -
                               static_cast<std::size_t>(spec_.head_dim());
        const Vec& gtop = spec_.trunk_blocks > 0
                              ? ws.trunk_out[static_cast<std::size_t>(spec_.trunk_blocks - 1)]
                              : ws.trunk_h0;
        // head
        Vec dg(static_cast<std::size_t>(spec_.trunk_width), 0.0);
        linear_backward(params, head_off, spec_.head_dim(), spec_.trunk_width, gtop, upstream, grad, &dg);

        // trunk blocks in reverse
        std::size_t off = head_off;
        for (int i = spec_.trunk_blocks - 1; i >= 0; --i) {
            off -= block_size(spec_.trunk_width);
            const Vec& in = (i == 0) ? ws.trunk_h0 : ws.trunk_out[static_cast<std::size_t>(i - 1)];
            block_backward(params, off, spec_.trunk_width, in, ws.trunk_pre1[static_cast<std::size_t>(i)],
                           ws.trunk_mid[static_cast<std::size_t>(i)], dg, grad);
        }
        // trunk input layer
        off -= static_cast<std::size_t>(spec_.trunk_width) * spec_.concat_dim() + spec_.trunk_width;
        Vec dpre(ws.trunk_pre0.size());
        for (std::size_t i = 0; i < dpre.size(); ++i) dpre[i] = dg[i] * detail::silu_grad(ws.trunk_pre0[i]);
        Vec dconcat(static_cast<std::size_t>(spec_.concat_dim()), 0.0);
        linear_backward(params, off, spec_.trunk_width, spec_.concat_dim(), ws.concat_in, dpre, grad, &dconcat);

        // stem gradient flows through the first stem_width concat slots
        Vec dh(static_cast<std::size_t>(spec_.stem_width));
        for (int i = 0; i < spec_.stem_width; ++i) dh[static_cast<std::size_t>(i)] = dconcat[static_cast<std::size_t>(i)];
        std::size_t soff = offset_after_stem_in() + static_cast<std::size_t>(spec_.stem_blocks) * block_size(spec_.stem_width);
        for (int i = spec_.stem_blocks - 1; i >= 0; --i) {
            soff -= block_size(spec_.stem_width);
            const Vec& in = (i == 0) ? ws.stem_h0 : ws.stem_out[static_cast<std::size_t>(i - 1)];
            block_backward(params, soff, spec_.stem_width, in, ws.stem_pre1[static_cast<std::size_t>(i)],
                           ws.stem_mid[static_cast<std::size_t>(i)], dh, grad);
        }
        Vec dpre0(ws.stem_pre0.size());
        for (std::size_t i = 0; i < dpre0.size(); ++i) dpre0[i] = dh[i] * detail::silu_grad(ws.stem_pre0[i]);
        linear_backward(params, 0, spec_.stem_width, spec_.xi_dim(), ws.xi_in, dpre0, grad, nullptr);
    }

private:
    NetSpec spec_;
    ParamLayout layout_;

    std::size_t offset_after_stem_in() const {
        return static_cast<std::size_t>(spec_.stem_width) * spec_.xi_dim() + spec_.stem_width;
    }

    static std::size_t block_size(int w) {
        return 2 * (static_cast<std::size_t>(w) * w + static_cast<std::size_t>(w));
    }

    void check_shapes(const Vec& params, const Vec& x, const Vec& xi) const {
        if (params.size() != layout_.total) throw std::invalid_argument("net: parameter size mismatch");
        if (static_cast<int>(x.size()) != spec_.state_dim) throw std::invalid_argument("net: state shape mismatch");
        if (static_cast<int>(xi.size()) != spec_.xi_dim()) throw std::invalid_argument("net: xi shape mismatch");
    }

    // out = W in + b, W row-major at `off`, b right after.
    static void linear(const Vec& p, std::size_t off, int rows, int cols, const Vec& in, Vec& out) {
        out.assign(static_cast<std::size_t>(rows), 0.0);
        std::size_t boff = off + static_cast<std::size_t>(rows) * cols;
        for (int r = 0; r < rows; ++r) {
            double s = p[boff + static_cast<std::size_t>(r)];
            std::size_t row = off + static_cast<std::size_t>(r) * cols;
            for (int c = 0; c < cols; ++c) s += p[row + static_cast<std::size_t>(c)] * in[static_cast<std::size_t>(c)];
            out[static_cast<std::size_t>(r)] = s;
        }
    }

    // Given dL/dout, accumulate dL/dW, dL/db and optionally add dL/din.
    static void linear_backward(const Vec& p, std::size_t off, int rows, int cols, const Vec& in,
                                const Vec& dout, Vec& grad, Vec* din) {
        std::size_t boff = off + static_cast<std::size_t>(rows) * cols;
        for (int r = 0; r < rows; ++r) {
            double d = dout[static_cast<std::size_t>(r)];
            grad[boff + static_cast<std::size_t>(r)] += d;
            std::size_t row = off + static_cast<std::size_t>(r) * cols;
            for (int c = 0; c < cols; ++c) {
                grad[row + static_cast<std::size_t>(c)] += d * in[static_cast<std::size_t>(c)];
                if (din) (*din)[static_cast<std::size_t>(c)] += d * p[row + static_cast<std::size_t>(c)];
            }
        }
    }

    static void act(const Vec& pre, Vec& out) {
        out.resize(pre.size());
        for (std::size_t i = 0; i < pre.size(); ++i) out[i] = detail::silu(pre[i]);
    }

    static void resize_blocks(std::vector<Vec>& a, std::vector<Vec>& b, std::vector<Vec>& c, int n) {
        a.resize(static_cast<std::size_t>(n));
        b.resize(static_cast<std::size_t>(n));
        c.resize(static_cast<std::size_t>(n));
    }

    // out = in + (W2 silu(W1 in + b1) + b2); returns offset past the block.
    static std::size_t block_forward(const Vec& p, std::size_t off, int w, const Vec& in, Vec& pre1,
                                     Vec& mid, Vec& out) {
        linear(p, off, w, w, in, pre1);
        std::size_t o2 = off + static_cast<std::size_t>(w) * w + w;
        act(pre1, mid);
        linear(p, o2, w, w, mid, out);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += in[i];
        return o2 + static_cast<std::size_t>(w) * w + w;
    }

    // dout is dL/d(block out) on entry and dL/d(block in) on exit.
    static void block_backward(const Vec& p, std::size_t off, int w, const Vec& in, const Vec& pre1,
                               const Vec& mid, Vec& dout, Vec& grad) {
        std::size_t o2 = off + static_cast<std::size_t>(w) * w + w;
        Vec dmid(static_cast<std::size_t>(w), 0.0);
        linear_backward(p, o2, w, w, mid, dout, grad, &dmid);
        Vec dpre(static_cast<std::size_t>(w));
        for (int i = 0; i < w; ++i)
            dpre[static_cast<std::size_t>(i)] = dmid[static_cast<std::size_t>(i)] * detail::silu_grad(pre1[static_cast<std::size_t>(i)]);
        // residual pass-through: dL/din += identity branch (already in dout)
        linear_backward(p, off, w, w, in, dpre, grad, &dout);
    }
};

// Adam with bias correction, preceded by global-norm gradient clipping.
struct AdamState {
    Vec m;
    Vec v;
    std::int64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

inline void adam_step(AdamState& state, Vec& params, const Vec& grads, double lr, double clip_norm) {
    if (params.size() != grads.size() || state.m.size() != params.size())
        throw std::invalid_argument("adam_step: size mismatch");
    if (!(lr > 0.0)) throw std::invalid_argument("adam_step: lr must be > 0");
    double n2 = 0.0;
    for (double g : grads) {
        if (!std::isfinite(g)) throw std::runtime_error("adam_step: non-finite gradient");
        n2 += g * g;
    }
    double gnorm = std::sqrt(n2);
    double cs = (clip_norm > 0.0 && gnorm > clip_norm) ? clip_norm / gnorm : 1.0;
    ++state.step;
    double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        double g = grads[i] * cs;
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        double mhat = state.m[i] / bc1;
        double vhat = state.v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

}  // namespace aid

#endif
