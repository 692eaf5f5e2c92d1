#include "stylegest/diffusion/schedule.hpp"

#include <cmath>

namespace stylegest::diffusion {

ScheduleKind schedule_kind_from_string(const std::string& s) {
    if (s == "linear") return ScheduleKind::linear;
    if (s == "cosine") return ScheduleKind::cosine;
    throw ValidationError("unknown schedule kind: " + s);
}

std::string to_string(ScheduleKind k) { return k == ScheduleKind::linear ? "linear" : "cosine"; }

NoiseSchedule NoiseSchedule::make(idx n_steps, ScheduleKind kind, double beta_start, double beta_end) {
    if (n_steps < 1) throw ValidationError("NoiseSchedule: N >= 1 required");
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
        throw ValidationError("NoiseSchedule: need 0 < beta_start <= beta_end < 1");

    NoiseSchedule s;
    s.alpha_.resize(static_cast<std::size_t>(n_steps));
    s.alpha_bar_.resize(static_cast<std::size_t>(n_steps));

    if (kind == ScheduleKind::linear) {
        for (idx n = 1; n <= n_steps; ++n) {
            const double t = n_steps == 1 ? 0.0
                                          : static_cast<double>(n - 1) / static_cast<double>(n_steps - 1);
            const double beta = beta_start + (beta_end - beta_start) * t;
            s.alpha_[static_cast<std::size_t>(n - 1)] = 1.0 - beta;
        }
    } else {
        // squared-cosine alpha_bar profile, betas derived and clipped
        const double eps = 0.008;
        auto f = [&](double t) {
            const double v = std::cos((t + eps) / (1.0 + eps) * 1.5707963267948966);
            return v * v;
        };
        double prev = 1.0;
        for (idx n = 1; n <= n_steps; ++n) {
            const double ab = f(static_cast<double>(n) / static_cast<double>(n_steps)) / f(0.0);
            double beta = 1.0 - ab / prev;
            beta = std::min(0.999, std::max(1e-8, beta));
            s.alpha_[static_cast<std::size_t>(n - 1)] = 1.0 - beta;
            prev = ab;
        }
    }

    double prod = 1.0;
    for (idx n = 1; n <= n_steps; ++n) {
        prod *= s.alpha_[static_cast<std::size_t>(n - 1)];
        s.alpha_bar_[static_cast<std::size_t>(n - 1)] = prod;
    }
    return s;
}

}  // namespace stylegest::diffusion
