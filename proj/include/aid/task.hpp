#ifndef AID_TASK_HPP
#define AID_TASK_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "aid/backbone.hpp"
#include "aid/linalg.hpp"
#include "aid/rng.hpp"

namespace aid {

// Diagonal binary mask; 1 = visible, 0 = missing.
struct Mask {
    std::vector<int> bits;
    int height = 0;  // 0 when d is not image-structured
    int width = 0;

    int dimension() const { return static_cast<int>(bits.size()); }

    int missing_count() const {
        int m = 0;
        for (int b : bits) m += (b == 0);
        return m;
    }

    double missing_fraction() const {
        return static_cast<double>(missing_count()) / static_cast<double>(bits.size());
    }

    void validate() const {
        if (bits.empty()) throw std::invalid_argument("mask: empty");
        for (int b : bits)
            if (b != 0 && b != 1) throw std::invalid_argument("mask: bits must be 0 or 1");
        if (height > 0 && height * width != dimension())
            throw std::invalid_argument("mask: shape does not match dimension");
    }
};

// Apply M (visible projection) or I - M (missing projection).
inline Vec apply_mask(const Mask& m, const Vec& x, bool visible = true) {
    if (static_cast<int>(x.size()) != m.dimension())
        throw std::invalid_argument("apply_mask: dimension mismatch");
    Vec r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        bool on = m.bits[i] == 1;
        r[i] = (on == visible) ? x[i] : 0.0;
    }
    return r;
}

// Supervised tuple: observable input (mask, y) plus the hidden clean target.
struct Task {
    Mask mask;
    Vec observation;  // y = M x_clean, zeros on missing coordinates
    Vec clean;        // x_clean, training-only

    void validate() const {
        mask.validate();
        if (observation.size() != clean.size() ||
            static_cast<int>(observation.size()) != mask.dimension())
            throw std::invalid_argument("task: dimension mismatch");
        for (std::size_t i = 0; i < observation.size(); ++i) {
            if (mask.bits[i] == 0 && observation[i] != 0.0)
                throw std::invalid_argument("task: observation supported on missing coordinate");
            if (mask.bits[i] == 1 && observation[i] != clean[i])
                throw std::invalid_argument("task: observation disagrees with clean image");
        }
    }
};

struct TerminalWeights {
    double alpha_vis = 2.0;
    double alpha_hole = 1.0;

    void validate() const {
        if (alpha_vis < 0.0 || alpha_hole < 0.0)
            throw std::invalid_argument("terminal weights: must be nonnegative");
        if (alpha_vis == 0.0 && alpha_hole == 0.0)
            throw std::invalid_argument("terminal weights: must not both be zero");
    }
};

enum class MaskFamily { freeform, center, strip };

inline MaskFamily mask_family_from_string(const std::string& s) {
    if (s == "freeform") return MaskFamily::freeform;
    if (s == "center") return MaskFamily::center;
    if (s == "strip") return MaskFamily::strip;
    throw std::invalid_argument("unknown mask family: " + s);
}

inline const char* to_string(MaskFamily f) {
    switch (f) {
        case MaskFamily::freeform: return "freeform";
        case MaskFamily::center: return "center";
        default: return "strip";
    }
}

// Free-form mask: union of random axis-aligned rectangles, grown until the
// missing count first reaches a target count whose fraction is uniform in
// [0.2, 0.6]. The last rectangle is truncated in scan order at the target,
// keeping the fraction inside the stated range on every draw.
inline Mask sample_mask(MaskFamily family, int height, int width, Rng& rng) {
    if (height < 2 || width < 2)
        throw std::invalid_argument("sample_mask: image shape must be at least 2x2");
    int d = height * width;
    Mask m;
    m.height = height;
    m.width = width;
    m.bits.assign(static_cast<std::size_t>(d), 1);

    auto idx = [width](int r, int c) { return static_cast<std::size_t>(r * width + c); };

    switch (family) {
        case MaskFamily::center: {
            int hh = height / 2, hw = width / 2;
            int r0 = (height - hh) / 2, c0 = (width - hw) / 2;
            for (int r = r0; r < r0 + hh; ++r)
                for (int c = c0; c < c0 + hw; ++c) m.bits[idx(r, c)] = 0;
            break;
        }
        case MaskFamily::strip: {
            int bw = std::max(1, width / 4);
            int c0 = (width - bw) / 2;
            for (int r = 0; r < height; ++r)
                for (int c = c0; c < c0 + bw; ++c) m.bits[idx(r, c)] = 0;
            break;
        }
        case MaskFamily::freeform: {
            double target_frac = rng.uniform(0.2, 0.6);
            int lo = static_cast<int>(std::ceil(0.2 * d));
            int hi = static_cast<int>(std::floor(0.6 * d));
            int target = std::clamp(static_cast<int>(std::lround(target_frac * d)), lo, hi);
            int missing = 0;
            while (missing < target) {
                int rh = 1 + static_cast<int>(rng.integer(static_cast<std::uint64_t>(std::max(1, height / 2))));
                int rw = 1 + static_cast<int>(rng.integer(static_cast<std::uint64_t>(std::max(1, width / 2))));
                int r0 = static_cast<int>(rng.integer(static_cast<std::uint64_t>(height - rh + 1)));
                int c0 = static_cast<int>(rng.integer(static_cast<std::uint64_t>(width - rw + 1)));
                for (int r = r0; r < r0 + rh && missing < target; ++r)
                    for (int c = c0; c < c0 + rw && missing < target; ++c) {
                        std::size_t i = idx(r, c);
                        if (m.bits[i] == 1) {
                            m.bits[i] = 0;
                            ++missing;
                        }
                    }
            }
            break;
        }
    }
    return m;
}

// Draw a supervised inpainting task: clean image from the backbone's data
// distribution, mask from the requested family, y = M x_clean.
inline Task sample_task(const ScoreBackbone& backbone, MaskFamily family, int height, int width,
                        Rng& rng) {
    if (height * width != backbone.dimension)
        throw std::invalid_argument("sample_task: mask shape does not match backbone dimension");
    Task t;
    t.clean = backbone.sample_data(rng);
    t.mask = sample_mask(family, height, width, rng);
    t.observation = apply_mask(t.mask, t.clean, true);
    return t;
}

// Task with a caller-supplied fixed mask (LQ experiments use this).
inline Task sample_task_fixed_mask(const ScoreBackbone& backbone, const Mask& mask, Rng& rng) {
    if (mask.dimension() != backbone.dimension)
        throw std::invalid_argument("sample_task_fixed_mask: dimension mismatch");
    Task t;
    t.clean = backbone.sample_data(rng);
    t.mask = mask;
    t.observation = apply_mask(t.mask, t.clean, true);
    return t;
}

// Psi = alpha_vis/2 ||M(x - x_clean)||^2 + alpha_hole/2 ||(I-M)(x - x_clean)||^2.
inline double terminal_loss(const TerminalWeights& w, const Vec& x, const Task& task) {
    if (x.size() != task.clean.size())
        throw std::invalid_argument("terminal_loss: dimension mismatch");
    double vis = 0.0, hole = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double e = x[i] - task.clean[i];
        if (task.mask.bits[i] == 1)
            vis += e * e;
        else
            hole += e * e;
    }
    return 0.5 * w.alpha_vis * vis + 0.5 * w.alpha_hole * hole;
}

// Centered terminal target: Psi - lambda T. Anchors the critic at t = T.
inline double centered_terminal(const TerminalWeights& w, const Vec& x, const Task& task,
                                double lambda, double horizon) {
    return terminal_loss(w, x, task) - lambda * horizon;
}

}  // namespace aid

#endif
