#include "stylegest/diffusion/diffusion.hpp"

#include <cmath>

namespace stylegest::diffusion {

Array q_sample(const NoiseSchedule& s, const Array& z0, idx n, const Array& eps) {
    check_same_shape(z0, eps, "q_sample");
    const double ab = s.alpha_bar(n);
    const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
    Array out = z0;
    for (idx i = 0; i < out.size(); ++i) out[i] = a * out[i] + b * eps[i];
    return out;
}

Array q_step(const NoiseSchedule& s, const Array& z_prev, idx n, const Array& eps) {
    check_same_shape(z_prev, eps, "q_step");
    const double a = std::sqrt(s.alpha(n)), b = std::sqrt(s.beta(n));
    Array out = z_prev;
    for (idx i = 0; i < out.size(); ++i) out[i] = a * out[i] + b * eps[i];
    return out;
}

Array ddpm_step(const NoiseSchedule& s, const Array& zn, idx n, const Array& eps_hat,
                RandomStream& rng, VarianceKind variance) {
    check_same_shape(zn, eps_hat, "ddpm_step");
    const double beta = s.beta(n);
    const double ab = s.alpha_bar(n);
    const double coeff = beta / std::sqrt(1.0 - ab);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(s.alpha(n));

    Array out = zn;
    for (idx i = 0; i < out.size(); ++i) out[i] = inv_sqrt_alpha * (out[i] - coeff * eps_hat[i]);

    if (n > 1) {
        double var = beta;
        if (variance == VarianceKind::posterior)
            var = beta * (1.0 - s.alpha_bar(n - 1)) / (1.0 - ab);
        const double sigma = std::sqrt(var);
        for (idx i = 0; i < out.size(); ++i) out[i] += sigma * rng.normal();
    }
    return out;
}

Array cfg_mix(const Array& cond, const Array& uncond, double s) {
    check_same_shape(cond, uncond, "cfg_mix");
    Array out = cond;
    for (idx i = 0; i < out.size(); ++i) out[i] = s * out[i] + (1.0 - s) * uncond[i];
    return out;
}

Array sample(const NoiseSchedule& s, const DenoiseFn& denoise, idx rows, idx cols,
             const SampleOptions& opt, RandomStream& rng) {
    Array z = rng.normal_array({rows, cols});
    for (idx n = s.steps(); n >= 1; --n) {
        Array eps_hat;
        if (opt.has_prompt && opt.guidance_scale != 1.0) {
            eps_hat = cfg_mix(denoise(z, n, true), denoise(z, n, false), opt.guidance_scale);
        } else {
            eps_hat = denoise(z, n, opt.has_prompt);
        }
        z = ddpm_step(s, z, n, eps_hat, rng, opt.variance);
        if (!z.all_finite())
            throw NumericalError("sample: non-finite latent at step " + std::to_string(n));
    }
    return z;
}

}  // namespace stylegest::diffusion
