#include <cmath>

#include <stdexcept>

#include "doctest.h"
#include "videdit/rng.hpp"
#include "videdit/schedule.hpp"

using namespace videdit;

TEST_CASE("schedule alpha_bar matches a long-double product oracle") {
    const NoiseSchedule s = NoiseSchedule::linear(1000, 1e-4, 2e-2);
    long double prod = 1.0L;
    for (int t = 0; t < 1000; ++t) {
        const long double beta = 1e-4L + (2e-2L - 1e-4L) * t / 999.0L;
        prod *= 1.0L - beta;
    }
    CHECK(s.alpha_bar[999] > 0.0);
    CHECK(s.alpha_bar[999] < 1e-3);
    CHECK(std::abs(static_cast<double>((s.alpha_bar[999] - prod) / prod)) < 1e-10);
    for (int t = 1; t < 1000; ++t) REQUIRE(s.alpha_bar[t] < s.alpha_bar[t - 1]);
}

TEST_CASE("schedule T=2 unrolls the definition") {
    const NoiseSchedule s = NoiseSchedule::linear(2, 0.1, 0.3);
    CHECK(s.alpha_bar[0] == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(s.alpha_bar[1] == doctest::Approx(0.9 * 0.7).epsilon(1e-12));
}

TEST_CASE("schedule rejects bad parameters") {
    CHECK_THROWS_AS(NoiseSchedule::linear(1000, 0.3, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(NoiseSchedule::linear(1, 0.1, 0.2), std::invalid_argument);
    CHECK_THROWS_AS(NoiseSchedule::linear(10, 0.0, 0.2), std::invalid_argument);
}

TEST_CASE("forward_diffuse limits") {
    const NoiseSchedule s = NoiseSchedule::linear(100, 1e-4, 2e-2);
    SeededRng rng(1);
    VideoLatent z0 = VideoLatent::random_normal(1, 2, 2, 4, 4, rng);
    VideoLatent eps = VideoLatent::random_normal(1, 2, 2, 4, 4, rng);

    // z0 = 0: output is sqrt(1-ab) * eps
    VideoLatent zero = VideoLatent::zeros(1, 2, 2, 4, 4);
    VideoLatent out = forward_diffuse(zero, eps, 50, s);
    const float b = static_cast<float>(s.sqrt_one_minus_ab(50));
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        CHECK(out.data[i] == doctest::Approx(b * eps.data[i]).epsilon(1e-6));
    }

    // near ab = 1 (t = 0) output is close to z0
    out = forward_diffuse(z0, eps, 0, s);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        CHECK(out.data[i] == doctest::Approx(z0.data[i]).epsilon(0.05));
    }
}

TEST_CASE("infer_reference_noise inverts forward_diffuse") {
    const NoiseSchedule s = NoiseSchedule::linear(1000, 1e-4, 2e-2);
    SeededRng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const int t = rng.uniform_int(0, 999);
        VideoLatent z0 = VideoLatent::random_normal(1, 2, 3, 6, 6, rng);
        VideoLatent eps = VideoLatent::random_normal(1, 2, 3, 6, 6, rng);
        const VideoLatent z_t = forward_diffuse(z0, eps, t, s);
        const VideoLatent rec = infer_reference_noise(z_t, z0, t, s);
        float max_err = 0.0f, max_eps = 0.0f;
        for (std::size_t i = 0; i < eps.data.size(); ++i) {
            max_err = std::max(max_err, std::abs(rec.data[i] - eps.data[i]));
            max_eps = std::max(max_eps, std::abs(eps.data[i]));
        }
        REQUIRE(max_err / max_eps < 1e-5);
    }
}

TEST_CASE("infer_reference_noise special values") {
    const NoiseSchedule s = NoiseSchedule::linear(100, 1e-3, 2e-2);
    SeededRng rng(3);
    VideoLatent eps = VideoLatent::random_normal(1, 1, 2, 4, 4, rng);
    VideoLatent zero = VideoLatent::zeros(1, 1, 2, 4, 4);

    // z_ref = 0 and z_t = sqrt(1-ab) eps recovers eps
    VideoLatent z_t = eps;
    const float b = static_cast<float>(s.sqrt_one_minus_ab(40));
    for (float& x : z_t.data) x *= b;
    VideoLatent rec = infer_reference_noise(z_t, zero, 40, s);
    for (std::size_t i = 0; i < rec.data.size(); ++i) {
        CHECK(rec.data[i] == doctest::Approx(eps.data[i]).epsilon(1e-5));
    }

    // z_t = sqrt(ab) z_ref gives zero noise
    VideoLatent z_ref = VideoLatent::random_normal(1, 1, 2, 4, 4, rng);
    VideoLatent scaled = z_ref;
    const float a = static_cast<float>(s.sqrt_ab(40));
    for (float& x : scaled.data) x *= a;
    rec = infer_reference_noise(scaled, z_ref, 40, s);
    for (float x : rec.data) CHECK(std::abs(x) < 1e-6f);
}

TEST_CASE("ddim_step recovers z0 when eps is exact and t_prev = -1") {
    const NoiseSchedule s = NoiseSchedule::linear(1000, 1e-4, 2e-2);
    SeededRng rng(4);
    VideoLatent z0 = VideoLatent::random_normal(1, 2, 2, 4, 4, rng);
    VideoLatent eps = VideoLatent::random_normal(1, 2, 2, 4, 4, rng);
    const int t = 700;
    const VideoLatent z_t = forward_diffuse(z0, eps, t, s);
    const VideoLatent rec = ddim_step(z_t, eps, t, -1, s);
    float max_err = 0.0f, max_z = 0.0f;
    for (std::size_t i = 0; i < rec.data.size(); ++i) {
        max_err = std::max(max_err, std::abs(rec.data[i] - z0.data[i]));
        max_z = std::max(max_z, std::abs(z0.data[i]));
    }
    CHECK(max_err / max_z < 1e-5);
}

TEST_CASE("ddim_step with t_prev = t is a fixed point") {
    const NoiseSchedule s = NoiseSchedule::linear(1000, 1e-4, 2e-2);
    SeededRng rng(5);
    VideoLatent z = VideoLatent::random_normal(1, 1, 2, 4, 4, rng);
    VideoLatent eps = VideoLatent::random_normal(1, 1, 2, 4, 4, rng);
    const VideoLatent out = ddim_step(z, eps, 300, 300, s);
    for (std::size_t i = 0; i < z.data.size(); ++i) {
        CHECK(out.data[i] == doctest::Approx(z.data[i]).epsilon(1e-5));
    }
}

TEST_CASE("ddim_step rejects bad ordering") {
    const NoiseSchedule s = NoiseSchedule::linear(100, 1e-3, 2e-2);
    VideoLatent z = VideoLatent::zeros(1, 1, 1, 2, 2);
    CHECK_THROWS_AS(ddim_step(z, z, 10, 20, s), std::invalid_argument);
    CHECK_THROWS_AS(ddim_step(z, z, 10, -2, s), std::invalid_argument);
}

TEST_CASE("uniform timestep plan covers both ends and is strictly decreasing") {
    const TimestepPlan p = TimestepPlan::uniform(30, 1000);
    p.validate(1000);
    CHECK(p.indices.front() == 999);
    CHECK(p.indices.back() == 0);
    CHECK(p.steps() == 30);

    const TimestepPlan single = TimestepPlan::uniform(1, 1000);
    single.validate(1000);
    CHECK(single.indices.front() == 0);

    // dense plan never exceeds T distinct indices
    const TimestepPlan dense = TimestepPlan::uniform(50, 50);
    dense.validate(50);
    CHECK(dense.steps() == 50);
}
