#include "videdit/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace videdit {

NoiseSchedule NoiseSchedule::linear(int T, double beta_min, double beta_max) {
    if (T < 2) throw std::invalid_argument("schedule: T must be >= 2");
    if (!(beta_min > 0.0) || !(beta_min <= beta_max) || !(beta_max < 1.0)) {
        throw std::invalid_argument("schedule: require 0 < beta_min <= beta_max < 1");
    }
    NoiseSchedule s;
    s.T = T;
    s.beta.resize(T);
    s.alpha_bar.resize(T);
    double prod = 1.0;
    for (int t = 0; t < T; ++t) {
        s.beta[t] = beta_min + (beta_max - beta_min) * static_cast<double>(t) / (T - 1);
        prod *= 1.0 - s.beta[t];
        s.alpha_bar[t] = prod;
    }
    return s;
}

double NoiseSchedule::ab(int t) const {
    if (t < 0 || t >= T) throw std::invalid_argument("schedule: timestep out of range");
    return alpha_bar[t];
}

double NoiseSchedule::sqrt_ab(int t) const { return std::sqrt(ab(t)); }

double NoiseSchedule::sqrt_one_minus_ab(int t) const { return std::sqrt(1.0 - ab(t)); }

TimestepPlan TimestepPlan::uniform(int ddim_steps, int T) {
    if (ddim_steps < 1 || ddim_steps > T) {
        throw std::invalid_argument("plan: ddim_steps must be in [1, T]");
    }
    TimestepPlan p;
    p.indices.reserve(ddim_steps);
    if (ddim_steps == 1) {
        p.indices.push_back(0);
        return p;
    }
    int prev = -1;
    for (int i = ddim_steps - 1; i >= 0; --i) {
        const int t = static_cast<int>(std::lround(static_cast<double>(i) * (T - 1) / (ddim_steps - 1)));
        if (t != prev) p.indices.push_back(t);
        prev = t;
    }
    return p;
}

void TimestepPlan::validate(int T) const {
    if (indices.empty()) throw std::invalid_argument("plan: empty");
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] < 0 || indices[i] >= T) throw std::invalid_argument("plan: index out of range");
        if (i > 0 && indices[i] >= indices[i - 1]) {
            throw std::invalid_argument("plan: indices must be strictly decreasing");
        }
    }
    if (indices.back() != 0) throw std::invalid_argument("plan: must end at t=0");
}

VideoLatent forward_diffuse(const VideoLatent& z0, const VideoLatent& eps, int t,
                            const NoiseSchedule& s) {
    check_same_shape(z0, eps, "forward_diffuse");
    const float a = static_cast<float>(s.sqrt_ab(t));
    const float b = static_cast<float>(s.sqrt_one_minus_ab(t));
    VideoLatent out = z0;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = a * z0.data[i] + b * eps.data[i];
    }
    return out;
}

VideoLatent infer_reference_noise(const VideoLatent& z_t_ref, const VideoLatent& z_ref, int t,
                                  const NoiseSchedule& s) {
    check_same_shape(z_t_ref, z_ref, "infer_reference_noise");
    const double one_minus = 1.0 - s.ab(t);
    if (!(one_minus > 0.0)) {
        throw std::invalid_argument("infer_reference_noise: alpha_bar at t is 1, noise undefined");
    }
    const float a = static_cast<float>(s.sqrt_ab(t));
    const float inv = static_cast<float>(1.0 / std::sqrt(one_minus));
    VideoLatent out = z_t_ref;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = (z_t_ref.data[i] - a * z_ref.data[i]) * inv;
    }
    return out;
}

VideoLatent ddim_step(const VideoLatent& z_t, const VideoLatent& eps_hat, int t, int t_prev,
                      const NoiseSchedule& s) {
    check_same_shape(z_t, eps_hat, "ddim_step");
    if (t_prev < -1 || t_prev > t) {
        throw std::invalid_argument("ddim_step: require t >= t_prev >= 0 or t_prev == -1");
    }
    const float inv_sqrt_ab = static_cast<float>(1.0 / s.sqrt_ab(t));
    const float sq1m = static_cast<float>(s.sqrt_one_minus_ab(t));
    VideoLatent out = z_t;
    if (t_prev == -1) {
        for (std::size_t i = 0; i < out.data.size(); ++i) {
            out.data[i] = (z_t.data[i] - sq1m * eps_hat.data[i]) * inv_sqrt_ab;
        }
        return out;
    }
    const float a_prev = static_cast<float>(s.sqrt_ab(t_prev));
    const float b_prev = static_cast<float>(s.sqrt_one_minus_ab(t_prev));
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const float zhat0 = (z_t.data[i] - sq1m * eps_hat.data[i]) * inv_sqrt_ab;
        out.data[i] = a_prev * zhat0 + b_prev * eps_hat.data[i];
    }
    return out;
}

}  // namespace videdit
