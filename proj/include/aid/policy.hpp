#ifndef AID_POLICY_HPP
#define AID_POLICY_HPP

#include <cmath>
#include <stdexcept>

#include "aid/linalg.hpp"
#include "aid/rng.hpp"

namespace aid {

// Gaussian policy class: actions ~ N(mu, (2 lambda / (beta d)) I).
// The variance is derived on access so it can never go stale.
struct PolicyConfig {
    double lambda = 1e-3;  // exploration temperature
    double beta = 1e-3;    // control weight
    int dimension = 0;

    void validate() const {
        if (!(lambda > 0.0)) throw std::invalid_argument("policy: lambda must be > 0");
        if (!(beta > 0.0)) throw std::invalid_argument("policy: beta must be > 0");
        if (dimension < 1) throw std::invalid_argument("policy: dimension must be >= 1");
    }

    double variance() const { return 2.0 * lambda / (beta * dimension); }
};

// A = mu + sqrt(2 lambda / (beta d)) z, z standard normal.
inline Vec sample_action(const Vec& mu, const PolicyConfig& cfg, Rng& rng) {
    cfg.validate();
    double sd = std::sqrt(cfg.variance());
    Vec a(mu);
    for (double& v : a) v += sd * rng.normal();
    return a;
}

}  // namespace aid

#endif
