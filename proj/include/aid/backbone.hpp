#ifndef AID_BACKBONE_HPP
#define AID_BACKBONE_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "aid/linalg.hpp"
#include "aid/rng.hpp"
#include "aid/schedule.hpp"

namespace aid {

// Frozen analytic data distribution: an isotropic Gaussian mixture whose
// sigma-widened score is available in closed form. Plays the role of the
// pretrained score model, with zero approximation error.
struct ScoreBackbone {
    int dimension = 0;
    std::vector<double> weights;    // sums to 1
    std::vector<Vec> means;         // one length-d vector per component
    double component_variance = 0.0;

    void validate() const {
        if (dimension < 1) throw std::invalid_argument("backbone: dimension must be >= 1");
        if (weights.empty() || weights.size() != means.size())
            throw std::invalid_argument("backbone: weights/means size mismatch");
        double sum = 0.0;
        for (double w : weights) {
            if (w < 0.0) throw std::invalid_argument("backbone: negative component weight");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("backbone: weights must sum to 1");
        for (const Vec& m : means)
            if (static_cast<int>(m.size()) != dimension)
                throw std::invalid_argument("backbone: component mean has wrong dimension");
        if (component_variance < 0.0)
            throw std::invalid_argument("backbone: negative component variance");
    }

    int components() const { return static_cast<int>(weights.size()); }

    // Posterior component responsibilities of the sigma-widened mixture.
    void responsibilities(double sigma, const Vec& x, std::vector<double>& gamma) const {
        double s2 = component_variance + sigma * sigma;
        if (!(s2 > 0.0)) throw std::invalid_argument("backbone: degenerate variance v + sigma^2");
        int c = components();
        gamma.resize(static_cast<std::size_t>(c));
        double best = -1e300;
        for (int i = 0; i < c; ++i) {
            double q = norm2(sub(x, means[static_cast<std::size_t>(i)]));
            double lg = std::log(std::max(weights[static_cast<std::size_t>(i)], 1e-300)) - 0.5 * q / s2;
            gamma[static_cast<std::size_t>(i)] = lg;
            best = std::max(best, lg);
        }
        double z = 0.0;
        for (double& g : gamma) {
            g = std::exp(g - best);
            z += g;
        }
        for (double& g : gamma) g /= z;
    }

    // log of the sigma-widened mixture density (up to full normalization,
    // including it exactly so finite differences of this are the score).
    double log_density(double sigma, const Vec& x) const {
        double s2 = component_variance + sigma * sigma;
        if (!(s2 > 0.0)) throw std::invalid_argument("backbone: degenerate variance v + sigma^2");
        int c = components();
        double best = -1e300;
        std::vector<double> lg(static_cast<std::size_t>(c));
        for (int i = 0; i < c; ++i) {
            double q = norm2(sub(x, means[static_cast<std::size_t>(i)]));
            lg[static_cast<std::size_t>(i)] =
                std::log(std::max(weights[static_cast<std::size_t>(i)], 1e-300)) - 0.5 * q / s2;
            best = std::max(best, lg[static_cast<std::size_t>(i)]);
        }
        double z = 0.0;
        for (double v : lg) z += std::exp(v - best);
        double norm_const = -0.5 * dimension * std::log(6.283185307179586 * s2);
        return best + std::log(z) + norm_const;
    }

    // Exact score of the sigma-widened mixture:
    //   S(sigma, x) = sum_i gamma_i(x) (m_i - x) / (v + sigma^2).
    Vec score(double sigma, const Vec& x) const {
        double s2 = component_variance + sigma * sigma;
        if (!(s2 > 0.0)) throw std::invalid_argument("backbone: degenerate variance v + sigma^2");
        std::vector<double> gamma;
        responsibilities(sigma, x, gamma);
        Vec out(static_cast<std::size_t>(dimension), 0.0);
        for (int i = 0; i < components(); ++i) {
            const Vec& m = means[static_cast<std::size_t>(i)];
            double g = gamma[static_cast<std::size_t>(i)] / s2;
            for (int j = 0; j < dimension; ++j)
                out[static_cast<std::size_t>(j)] += g * (m[static_cast<std::size_t>(j)] - x[static_cast<std::size_t>(j)]);
        }
        return out;
    }

    // Jacobian dS/dx of the mixture score; symmetric. Used by the
    // posterior-gradient baseline.
    Mat score_jacobian(double sigma, const Vec& x) const {
        double s2 = component_variance + sigma * sigma;
        std::vector<double> gamma;
        responsibilities(sigma, x, gamma);
        int d = dimension;
        Mat j(d);
        Vec s(static_cast<std::size_t>(d), 0.0);
        std::vector<Vec> u(static_cast<std::size_t>(components()));
        for (int i = 0; i < components(); ++i) {
            u[static_cast<std::size_t>(i)] = sub(means[static_cast<std::size_t>(i)], x);
            scale(u[static_cast<std::size_t>(i)], 1.0 / s2);
            axpy(gamma[static_cast<std::size_t>(i)], u[static_cast<std::size_t>(i)], s);
        }
        // dS/dx = sum_i gamma_i u_i u_i^T - S S^T - I/s2
        for (int i = 0; i < components(); ++i) {
            double g = gamma[static_cast<std::size_t>(i)];
            const Vec& ui = u[static_cast<std::size_t>(i)];
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c)
                    j(r, c) += g * ui[static_cast<std::size_t>(r)] * ui[static_cast<std::size_t>(c)];
        }
        for (int r = 0; r < d; ++r) {
            for (int c = 0; c < d; ++c) j(r, c) -= s[static_cast<std::size_t>(r)] * s[static_cast<std::size_t>(c)];
            j(r, r) -= 1.0 / s2;
        }
        return j;
    }

    // Draw from the clean data distribution (sigma = 0 mixture).
    Vec sample_data(Rng& rng) const {
        double u = rng.uniform();
        int pick = components() - 1;
        double acc = 0.0;
        for (int i = 0; i < components(); ++i) {
            acc += weights[static_cast<std::size_t>(i)];
            if (u <= acc) { pick = i; break; }
        }
        Vec x = means[static_cast<std::size_t>(pick)];
        double sd = std::sqrt(component_variance);
        for (double& v : x) v += sd * rng.normal();
        return x;
    }
};

// Draw from the wide-Gaussian approximation of the terminal forward law,
// N(0, sigma_max^2 I).
inline Vec sample_prior(const ScoreBackbone& backbone, const Schedule& sched, Rng& rng) {
    Vec x(static_cast<std::size_t>(backbone.dimension));
    for (double& v : x) v = sched.sigma_max * rng.normal();
    return x;
}

// Probability-flow reverse drift b(t, x). Variance-exploding, so the
// linear forward term vanishes and
//   b(t, x) = 1/2 g^2(T - t) S(sigma(t), x) = -1/2 d(sigma^2)/dt S(sigma(t), x).
inline Vec reverse_drift(const ScoreBackbone& backbone, const Schedule& sched, double t, const Vec& x) {
    if (t < 0.0 || t > sched.horizon)
        throw std::domain_error("reverse_drift: t outside [0, T]");
    Vec s = backbone.score(sched.sigma(t), x);
    scale(s, 0.5 * sched.g2_reverse(t));
    return s;
}

// Convenience constructor for a single-Gaussian backbone.
inline ScoreBackbone single_gaussian(Vec mean, double variance) {
    ScoreBackbone b;
    b.dimension = static_cast<int>(mean.size());
    b.weights = {1.0};
    b.means = {std::move(mean)};
    b.component_variance = variance;
    b.validate();
    return b;
}

}  // namespace aid

#endif
