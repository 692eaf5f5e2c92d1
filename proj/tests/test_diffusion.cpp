#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "stylegest/diffusion/diffusion.hpp"
#include "test_util.hpp"

using namespace stylegest;
using namespace stylegest::diffusion;

TEST_CASE("q_sample closed form: zero noise and alpha_bar -> 1 limits") {
    const NoiseSchedule s = make_schedule(100, ScheduleKind::linear, 1e-5, 1e-5);
    RandomStream rng(1);
    Array z0 = rng.normal_array({4, 3});
    Array zero({4, 3});
    const Array zn = q_sample(s, z0, 50, zero);
    const double a = std::sqrt(s.alpha_bar(50));
    for (idx i = 0; i < z0.size(); ++i) CHECK(zn[i] == doctest::Approx(a * z0[i]).epsilon(1e-12));
    // with betas ~ 1e-5, alpha_bar(1) ~ 1: z1 ~ z0
    Array eps = rng.normal_array({4, 3});
    const Array z1 = q_sample(s, z0, 1, eps);
    for (idx i = 0; i < z0.size(); ++i) CHECK(z1[i] == doctest::Approx(z0[i]).epsilon(1e-2));

    Array bad({3, 3});
    CHECK_THROWS_AS(q_sample(s, z0, 50, bad), ShapeError);
}

TEST_CASE("q_sample Monte Carlo moments match the closed form within 2%") {
    const NoiseSchedule s = make_schedule(200);
    RandomStream rng(7);
    const double z0v = 1.3;
    Array z0 = Array::from({1, 1}, {z0v});

    for (idx n : {static_cast<idx>(1), static_cast<idx>(100), static_cast<idx>(200)}) {
        const idx draws = 100000;
        double mean = 0.0, m2 = 0.0;
        for (idx d = 0; d < draws; ++d) {
            Array eps({1, 1});
            eps[0] = rng.normal();
            const double v = q_sample(s, z0, n, eps)[0];
            mean += v;
            m2 += v * v;
        }
        mean /= static_cast<double>(draws);
        const double var = m2 / static_cast<double>(draws) - mean * mean;
        const double expect_mean = std::sqrt(s.alpha_bar(n)) * z0v;
        const double expect_var = 1.0 - s.alpha_bar(n);
        CHECK(std::abs(mean - expect_mean) < 0.02 * std::max(1.0, std::abs(expect_mean)));
        if (expect_var > 1e-4) CHECK(std::abs(var / expect_var - 1.0) < 0.02);
    }
}

TEST_CASE("composition: the closed-form marginal matches n sequential single steps (KS)") {
    const NoiseSchedule s = make_schedule(10, ScheduleKind::linear, 0.01, 0.1);
    RandomStream rng(11);
    const idx draws = 4000;
    std::vector<double> direct, stepped;
    for (idx d = 0; d < draws; ++d) {
        Array z0 = Array::from({1, 1}, {0.7});
        Array eps({1, 1});
        eps[0] = rng.normal();
        direct.push_back(q_sample(s, z0, 10, eps)[0]);

        Array z = z0;
        for (idx n = 1; n <= 10; ++n) {
            Array e({1, 1});
            e[0] = rng.normal();
            z = q_step(s, z, n, e);
        }
        stepped.push_back(z[0]);
    }
    CHECK(testutil::ks_two_sample_p(direct, stepped) > 0.01);
}

TEST_CASE("ddpm_step inverts q_sample exactly at N=1 and is deterministic there") {
    const NoiseSchedule s = make_schedule(1, ScheduleKind::linear, 0.3, 0.3);
    RandomStream rng(3);
    Array z0 = rng.normal_array({5, 2});
    Array eps = rng.normal_array({5, 2});
    const Array z1 = q_sample(s, z0, 1, eps);

    RandomStream rng2(99);  // never consulted at n=1
    const Array back = ddpm_step(s, z1, 1, eps, rng2);
    for (idx i = 0; i < z0.size(); ++i) CHECK(back[i] == doctest::Approx(z0[i]).epsilon(1e-6));

    // zero eps_hat, final step: pure 1/sqrt(alpha) rescale
    Array zero({5, 2});
    const Array scaled = ddpm_step(s, z1, 1, zero, rng2);
    for (idx i = 0; i < z1.size(); ++i)
        CHECK(scaled[i] == doctest::Approx(z1[i] / std::sqrt(0.7)).epsilon(1e-12));
}

TEST_CASE("cfg_mix is the exact affine combination") {
    Array cond = Array::from({1, 3}, {1.0, 2.0, 3.0});
    Array uncond = Array::from({1, 3}, {0.0, -2.0, 1.0});

    const Array s1 = cfg_mix(cond, uncond, 1.0);
    CHECK(s1.storage() == cond.storage());
    const Array s0 = cfg_mix(cond, uncond, 0.0);
    CHECK(s0.storage() == uncond.storage());

    const Array s2 = cfg_mix(cond, uncond, 2.0);
    CHECK(s2[0] == doctest::Approx(2.0));  // 2*1 + (1-2)*0
    CHECK(s2[1] == doctest::Approx(6.0));  // 2*2 - (-2)
    CHECK(s2[2] == doctest::Approx(5.0));
}

TEST_CASE("sampling with the analytic gaussian denoiser recovers the target distribution") {
    // target: independent gaussians N(mu_c, sigma_c^2) per column
    const double mu[2] = {1.0, -0.6};
    const double var[2] = {1.5, 0.4};
    const NoiseSchedule s = make_schedule(1000);

    DenoiseFn oracle = [&](const Array& zn, idx n, bool) {
        const double ab = s.alpha_bar(n);
        Array eps = zn;
        for (idx i = 0; i < zn.size(); ++i) {
            const idx c = i % 2;
            eps[i] = std::sqrt(1.0 - ab) * (zn[i] - std::sqrt(ab) * mu[c]) /
                     (ab * var[c] + (1.0 - ab));
        }
        return eps;
    };

    RandomStream rng(2024);
    SampleOptions opt;  // unconditional
    const idx rows = 10000;
    const Array out = sample(s, oracle, rows, 2, opt, rng);

    for (idx c = 0; c < 2; ++c) {
        double mean = 0.0, m2 = 0.0;
        for (idx r = 0; r < rows; ++r) mean += out.at(r, c);
        mean /= static_cast<double>(rows);
        for (idx r = 0; r < rows; ++r) m2 += (out.at(r, c) - mean) * (out.at(r, c) - mean);
        const double v = m2 / static_cast<double>(rows);
        CHECK(std::abs(mean - mu[c]) < 0.05 * std::max(1.0, std::abs(mu[c])));
        CHECK(std::abs(v / var[c] - 1.0) < 0.05);
    }
    // cross-covariance of independent columns stays near zero
    double cov = 0.0, mean0 = 0.0, mean1 = 0.0;
    for (idx r = 0; r < rows; ++r) {
        mean0 += out.at(r, 0);
        mean1 += out.at(r, 1);
    }
    mean0 /= rows;
    mean1 /= rows;
    for (idx r = 0; r < rows; ++r) cov += (out.at(r, 0) - mean0) * (out.at(r, 1) - mean1);
    cov /= rows;
    CHECK(std::abs(cov) < 0.05 * std::sqrt(var[0] * var[1]));
}

TEST_CASE("sampler is reproducible and counts denoiser calls per the guidance rule") {
    const NoiseSchedule s = make_schedule(20);
    idx calls = 0;
    DenoiseFn zero_fn = [&](const Array& zn, idx, bool) {
        ++calls;
        return Array(zn.shape());
    };

    SampleOptions opt;
    opt.has_prompt = false;
    RandomStream r1(5), r2(5);
    const Array a = sample(s, zero_fn, 3, 4, opt, r1);
    const idx calls_uncond = calls;
    calls = 0;
    const Array b = sample(s, zero_fn, 3, 4, opt, r2);
    CHECK(a.storage() == b.storage());
    CHECK(calls_uncond == 20);  // one call per step without a prompt

    calls = 0;
    opt.has_prompt = true;
    opt.guidance_scale = 2.5;
    RandomStream r3(5);
    (void)sample(s, zero_fn, 3, 4, opt, r3);
    CHECK(calls == 40);  // prompt and empty passes per step

    calls = 0;
    opt.guidance_scale = 1.0;  // guidance off: single conditional call
    RandomStream r4(5);
    (void)sample(s, zero_fn, 3, 4, opt, r4);
    CHECK(calls == 20);
}

TEST_CASE("non-finite denoiser output aborts with the step index") {
    const NoiseSchedule s = make_schedule(10);
    DenoiseFn nan_fn = [&](const Array& zn, idx n, bool) {
        Array e(zn.shape());
        if (n == 7)
            for (idx i = 0; i < e.size(); ++i) e[i] = std::nan("");
        return e;
    };
    RandomStream rng(1);
    SampleOptions opt;
    try {
        (void)sample(s, nan_fn, 2, 2, opt, rng);
        CHECK(false);
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("step 7") != std::string::npos);
    }
}
