#pragma once

// Fixed-step classical Runge-Kutta used by every evolution in the library.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ctap/common.hpp"

namespace ctap {

struct IntegratorConfig {
    double dt = 0.01;
    /// Pure states only: rescale to unit norm after every step.
    bool renormalize = false;

    /// 0.01 / max(1, omega_max, max|chi|, R/N)
    static double default_dt(double omega_max, double chi_max, double rate_per_qpc) {
        return 0.01 / std::max({1.0, omega_max, std::abs(chi_max), rate_per_qpc});
    }

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("integrator dt must be > 0");
    }
};

/// Uniform steps covering a window, and which of them are stored.
struct StepPlan {
    long steps = 1;
    double h = 0.0;
    long stride = 1;

    static constexpr long kMaxStored = 2000;

    static StepPlan make(TimeWindow window, double dt) {
        if (!(window.end > window.start)) throw std::invalid_argument("evolution window must have end > start");
        StepPlan p;
        p.steps = std::max(1L, static_cast<long>(std::ceil(window.length() / dt - 1e-9)));
        p.h = window.length() / static_cast<double>(p.steps);
        p.stride = std::max(1L, (p.steps + kMaxStored - 1) / kMaxStored);
        return p;
    }

    bool stored(long step) const { return step % stride == 0 || step == steps; }
};

/// One RK4 step of y' = f(t, y). State must support + and scalar *.
template <class State, class Rhs>
void rk4_step(State& y, double t, double h, Rhs&& f) {
    const State k1 = f(t, y);
    const State k2 = f(t + 0.5 * h, State(y + (0.5 * h) * k1));
    const State k3 = f(t + 0.5 * h, State(y + (0.5 * h) * k2));
    const State k4 = f(t + h, State(y + h * k3));
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace ctap
