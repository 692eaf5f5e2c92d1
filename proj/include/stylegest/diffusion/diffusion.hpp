#pragma once

#include <functional>

#include "stylegest/core/random.hpp"
#include "stylegest/diffusion/schedule.hpp"

namespace stylegest::diffusion {

enum class VarianceKind { beta, posterior };

// Closed-form forward marginal: z_n = sqrt(ab_n) z0 + sqrt(1-ab_n) eps.
Array q_sample(const NoiseSchedule& s, const Array& z0, idx n, const Array& eps);

// One exact forward transition z_{n-1} -> z_n.
Array q_step(const NoiseSchedule& s, const Array& z_prev, idx n, const Array& eps);

// One reverse step. Adds sigma_n * xi noise for n > 1 (drawn from rng), none
// at n == 1. sigma^2 is beta_n or the posterior variance, by `variance`.
Array ddpm_step(const NoiseSchedule& s, const Array& zn, idx n, const Array& eps_hat,
                RandomStream& rng, VarianceKind variance = VarianceKind::beta);

// s * cond + (1 - s) * uncond, elementwise.
Array cfg_mix(const Array& cond, const Array& uncond, double s);

// Noise prediction callback: (noisy codes, step, conditional?) -> eps_hat.
using DenoiseFn = std::function<Array(const Array& zn, idx n, bool conditional)>;

struct SampleOptions {
    double guidance_scale = 1.0;  // s; 1 disables the unconditional pass
    bool has_prompt = false;
    VarianceKind variance = VarianceKind::beta;
};

// Full reverse chain from z_N ~ N(0, I). Each step runs the denoiser twice
// (prompt and empty) only when guidance is active and a prompt is present.
Array sample(const NoiseSchedule& s, const DenoiseFn& denoise, idx rows, idx cols,
             const SampleOptions& opt, RandomStream& rng);

}  // namespace stylegest::diffusion
