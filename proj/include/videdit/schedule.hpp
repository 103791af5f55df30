#pragma once

#include <vector>

#include "videdit/tensor.hpp"

namespace videdit {

/// Per-timestep diffusion coefficients. beta is linear between the two
/// endpoints; alpha_bar[t] is the running product of (1 - beta) kept in
/// double so downstream square roots are stable.
struct NoiseSchedule {
    int T = 0;
    std::vector<double> beta;
    std::vector<double> alpha_bar;

    static NoiseSchedule linear(int T, double beta_min, double beta_max);

    double ab(int t) const;          // alpha_bar at step t, bounds-checked
    double sqrt_ab(int t) const;
    double sqrt_one_minus_ab(int t) const;
};

/// Strictly decreasing subsequence of [0, T) visited by the deterministic
/// sampler; covers both endpoints (first ~T-1, last exactly 0).
struct TimestepPlan {
    std::vector<int> indices;

    /// Uniform stride over [0, T): round(i*(T-1)/(steps-1)) descending.
    static TimestepPlan uniform(int ddim_steps, int T);

    int steps() const { return static_cast<int>(indices.size()); }
    void validate(int T) const;
};

/// z_t = sqrt(ab_t) * z0 + sqrt(1 - ab_t) * eps.
VideoLatent forward_diffuse(const VideoLatent& z0, const VideoLatent& eps, int t,
                            const NoiseSchedule& s);

/// Closed-form noise that maps clean reference frames to their renoised
/// latents: (z_t_ref - sqrt(ab_t) * z_ref) / sqrt(1 - ab_t).
/// Exact left inverse of forward_diffuse in eps.
VideoLatent infer_reference_noise(const VideoLatent& z_t_ref, const VideoLatent& z_ref, int t,
                                  const NoiseSchedule& s);

/// Deterministic denoising update (eta = 0). Predicts
/// zhat0 = (z_t - sqrt(1-ab_t) * eps_hat) / sqrt(ab_t) and re-noises it to
/// t_prev; t_prev = -1 returns zhat0 itself (final output).
VideoLatent ddim_step(const VideoLatent& z_t, const VideoLatent& eps_hat, int t, int t_prev,
                      const NoiseSchedule& s);

}  // namespace videdit
