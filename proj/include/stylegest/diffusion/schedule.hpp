#pragma once

#include <string>
#include <vector>

#include "stylegest/core/array.hpp"

namespace stylegest::diffusion {

enum class ScheduleKind { linear, cosine };

ScheduleKind schedule_kind_from_string(const std::string& s);
std::string to_string(ScheduleKind k);

// Per-step noising coefficients. Index convention: step n in [1, N];
// alpha_bar(0) == 1.
class NoiseSchedule {
public:
    NoiseSchedule() = default;

    idx steps() const { return static_cast<idx>(alpha_.size()); }
    double alpha(idx n) const { return alpha_[check(n) - 1]; }
    double beta(idx n) const { return 1.0 - alpha_[check(n) - 1]; }
    double alpha_bar(idx n) const { return n == 0 ? 1.0 : alpha_bar_[check(n) - 1]; }

    static NoiseSchedule make(idx n_steps, ScheduleKind kind, double beta_start, double beta_end);

private:
    std::size_t check(idx n) const {
        if (n < 1 || n > steps())
            throw ValidationError("NoiseSchedule: step " + std::to_string(n) + " outside [1," +
                                  std::to_string(steps()) + "]");
        return static_cast<std::size_t>(n);
    }

    std::vector<double> alpha_;
    std::vector<double> alpha_bar_;
};

inline NoiseSchedule make_schedule(idx n_steps, ScheduleKind kind = ScheduleKind::linear,
                                   double beta_start = 1e-4, double beta_end = 0.02) {
    return NoiseSchedule::make(n_steps, kind, beta_start, beta_end);
}

}  // namespace stylegest::diffusion
