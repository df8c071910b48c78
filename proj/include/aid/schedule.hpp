#ifndef AID_SCHEDULE_HPP
#define AID_SCHEDULE_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

namespace aid {

// Variance-exploding noise schedule in the EDM sigma parameterization.
// Reverse time t runs over [0, horizon]; the noise level decreases from
// sigma_max at t=0 to sigma_min at t=horizon along
//   sigma(t) = (a + (t/T)(b - a))^rho,  a = sigma_max^(1/rho), b = sigma_min^(1/rho).
// f == 0 and g^2 = d(sigma^2)/d(forward time), so the reverse drift only
// involves -d(sigma^2)/dt in reverse time.
struct Schedule {
    double rho = 7.0;
    double sigma_min = 0.002;
    double sigma_max = 80.0;
    double horizon = 1.0;
    bool variance_exploding = true;

    void validate() const {
        if (!(sigma_min > 0.0) || !(sigma_min < sigma_max))
            throw std::invalid_argument("schedule: require 0 < sigma_min < sigma_max");
        if (!(rho > 0.0)) throw std::invalid_argument("schedule: rho must be positive");
        if (!(horizon > 0.0)) throw std::invalid_argument("schedule: horizon must be positive");
        if (!variance_exploding)
            throw std::invalid_argument("schedule: only variance-exploding schedules are supported");
    }

    // Interpolation parameter s in [0,1] along the sigma formula.
    double sigma_of_s(double s) const {
        double a = std::pow(sigma_max, 1.0 / rho);
        double b = std::pow(sigma_min, 1.0 / rho);
        return std::pow(a + s * (b - a), rho);
    }

    // d(sigma^2)/ds, closed form.
    double dsigma2_ds(double s) const {
        double a = std::pow(sigma_max, 1.0 / rho);
        double b = std::pow(sigma_min, 1.0 / rho);
        return 2.0 * rho * std::pow(a + s * (b - a), 2.0 * rho - 1.0) * (b - a);
    }

    double sigma(double t) const { return sigma_of_s(t / horizon); }

    // d(sigma^2)/dt in reverse time; negative since sigma decreases.
    double dsigma2_dt(double t) const { return dsigma2_ds(t / horizon) / horizon; }

    // g^2 evaluated at the matching forward time; nonnegative.
    double g2_reverse(double t) const { return -dsigma2_dt(t); }
};

// K noise levels of the EDM grid, sigma_0 = sigma_max down to
// sigma_{K-1} = sigma_min, strictly decreasing.
inline std::vector<double> sigma_grid(int steps, const Schedule& sched) {
    if (steps < 2) throw std::invalid_argument("sigma_grid: need at least 2 steps");
    sched.validate();
    std::vector<double> g(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i)
        g[static_cast<std::size_t>(i)] = sched.sigma_of_s(static_cast<double>(i) / (steps - 1));
    return g;
}

}  // namespace aid

#endif
