#include "reframe/scheduler.hpp"

#include <cmath>

#include "reframe/reframe.hpp"
#include "reframe/rehab.hpp"
#include "reframe/rng.hpp"

namespace reframe {

double NoiseSchedule::at(int t) const {
  if (t == kClean) return 1.0;
  if (t < 0 || t >= train_steps()) {
    throw Error(Errc::InvalidCounts, "timestep " + std::to_string(t) + " outside the schedule", {t});
  }
  return alpha_bar[static_cast<std::size_t>(t)];
}

NoiseSchedule make_schedule(int train_steps, BetaSchedule kind, double beta_start, double beta_end) {
  if (train_steps < 2) throw Error(Errc::InvalidCounts, "need at least two training steps", {train_steps});
  if (!(beta_start > 0.0 && beta_start < beta_end && beta_end < 1.0)) {
    throw Error(Errc::InvalidBetaRange, "require 0 < beta_start < beta_end < 1");
  }
  NoiseSchedule sched;
  sched.alpha_bar.resize(static_cast<std::size_t>(train_steps));
  double prod = 1.0;
  switch (kind) {
    case BetaSchedule::Linear:
      for (int t = 0; t < train_steps; ++t) {
        const double beta = beta_start + (beta_end - beta_start) * double(t) / double(train_steps - 1);
        prod *= 1.0 - beta;
        sched.alpha_bar[static_cast<std::size_t>(t)] = prod;
      }
      break;
  }
  return sched;
}

LatentVideo add_noise(const LatentVideo& z0, int t, const LatentVideo& eps, const NoiseSchedule& sched) {
  require_same_shape(z0, eps);
  const double ab = sched.at(t);
  return LatentVideo(z0.shape(), std::sqrt(ab) * z0.array() + std::sqrt(1.0 - ab) * eps.array());
}

LatentVideo estimate_x0(const LatentVideo& z_t, const LatentVideo& eps_hat, int t, const NoiseSchedule& sched) {
  require_same_shape(z_t, eps_hat);
  const double ab = sched.at(t);
  if (ab <= 1e-12) throw Error(Errc::DegenerateAlpha, "alpha_bar too small to invert", {t});
  if (t == kClean) return z_t;
  return LatentVideo(z_t.shape(), (z_t.array() - std::sqrt(1.0 - ab) * eps_hat.array()) / std::sqrt(ab));
}

LatentVideo ddim_step(const LatentVideo& z_t, const LatentVideo& eps_hat, int t, int t_prev,
                      const NoiseSchedule& sched) {
  if (t == kClean || (t_prev != kClean && t_prev >= t)) {
    throw Error(Errc::StepOrderViolation, "t_prev must be earlier than t", {t, t_prev});
  }
  LatentVideo x0 = estimate_x0(z_t, eps_hat, t, sched);
  if (t_prev == kClean) return x0;
  const double ab_prev = sched.at(t_prev);
  return LatentVideo(z_t.shape(), std::sqrt(ab_prev) * x0.array() + std::sqrt(1.0 - ab_prev) * eps_hat.array());
}

LatentVideo cfg_combine(const LatentVideo& eps_uncond, const LatentVideo& eps_cond, double guidance) {
  require_same_shape(eps_uncond, eps_cond);
  return LatentVideo(eps_uncond.shape(), eps_uncond.array() + guidance * (eps_cond.array() - eps_uncond.array()));
}

SampleSteps::SampleSteps(int train_steps, int sample_steps) {
  if (sample_steps < 1 || sample_steps > train_steps) {
    throw Error(Errc::InvalidCounts, "need 1 <= sample_steps <= train_steps", {train_steps, sample_steps});
  }
  descending_.reserve(static_cast<std::size_t>(sample_steps));
  for (int i = sample_steps - 1; i >= 0; --i) {
    // ceil((i + 1) T / S) - 1 in integer arithmetic.
    const long long num = static_cast<long long>(i + 1) * train_steps;
    descending_.push_back(static_cast<int>((num + sample_steps - 1) / sample_steps) - 1);
  }
}

int SampleSteps::timestep(int k) const {
  if (k < 0 || k > count()) throw Error(Errc::InvalidCounts, "sampling step out of range", {k});
  if (k == 0) return kClean;
  return descending_[static_cast<std::size_t>(count() - k)];
}

SampleSteps select_timesteps(int train_steps, int sample_steps) { return SampleSteps(train_steps, sample_steps); }

LatentVideo oracle_epsilon(const LatentVideo& z_t, int t, const LatentVideo& target, const NoiseSchedule& sched) {
  require_same_shape(z_t, target);
  const double ab = sched.at(t);
  if (ab >= 1.0 - 1e-12) throw Error(Errc::DegenerateAlpha, "alpha_bar too close to one", {t});
  return LatentVideo(z_t.shape(), (z_t.array() - std::sqrt(ab) * target.array()) / std::sqrt(1.0 - ab));
}

LatentVideo OracleDenoiser::predict(const LatentVideo& z, int t, std::optional<Condition>) {
  return oracle_epsilon(z, t, target_, sched_);
}

void OracleDenoiser::on_reframe(const ReframeOutcome& outcome) {
  if (retarget_) target_ = retarget_(outcome);
}

LatentVideo box_blur3(const LatentVideo& z) {
  LatentVideo out(z.shape());
  const int h = z.height();
  const int w = z.width();
  for (int f = 0; f < z.frames(); ++f) {
    for (int c = 0; c < z.channels(); ++c) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          double sum = 0.0;
          for (int dy = -1; dy <= 1; ++dy) {
            const int yy = std::clamp(y + dy, 0, h - 1);
            for (int dx = -1; dx <= 1; ++dx) sum += z(f, c, yy, std::clamp(x + dx, 0, w - 1));
          }
          out(f, c, y, x) = sum / 9.0;
        }
      }
    }
  }
  return out;
}

LatentVideo ToyDenoiser::predict(const LatentVideo& z, int t, std::optional<Condition>) {
  if (!stored_ || !(stored_->shape() == z.shape())) {
    if (stored_) throw Error(Errc::ShapeMismatch, "toy denoiser stored latent has a different shape");
    stored_ = box_blur3(gaussian_latent(z.shape(), seed_));
  }
  const double ab = sched_.at(t);
  if (ab >= 1.0 - 1e-12) throw Error(Errc::DegenerateAlpha, "alpha_bar too close to one", {t});
  const double var = spread_ * spread_;
  const double gain = std::sqrt(ab) * var / (ab * var + 1.0 - ab);
  const LatentVideo residual(z.shape(), z.array() - std::sqrt(ab) * stored_->array());
  const LatentVideo x0(z.shape(), stored_->array() + gain * box_blur3(residual).array());
  return oracle_epsilon(z, t, x0, sched_);
}

void ToyDenoiser::on_reframe(const ReframeOutcome& outcome) {
  const LatentVideo seen = box_blur3(outcome.z0_reframed);
  if (stored_ && stored_->shape() == seen.shape()) {
    stored_ = merge_step(seen, *stored_, outcome.latent_mask);
  } else {
    stored_ = seen;
  }
}

LatentVideo GuidedDenoiser::predict(const LatentVideo& z, int t, std::optional<Condition>) {
  const LatentVideo eps_cond = base_.predict(z, t, condition_);
  const LatentVideo eps_uncond = base_.predict(z, t, std::nullopt);
  return cfg_combine(eps_uncond, eps_cond, guidance_);
}

LatentVideo gaussian_latent(const VideoShape& shape, std::uint64_t seed) {
  LatentVideo out(shape);
  SplitMix64 rng(seed);
  for (Eigen::Index i = 0; i < out.array().size(); ++i) out.array()[i] = rng.gaussian();
  return out;
}

}  // namespace reframe
