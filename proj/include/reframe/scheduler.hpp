#ifndef REFRAME_SCHEDULER_HPP
#define REFRAME_SCHEDULER_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "reframe/video.hpp"

namespace reframe {

/// Timestep value meaning "fully denoised" (alpha_bar = 1).
inline constexpr int kClean = -1;

enum class BetaSchedule { Linear };

struct NoiseSchedule {
  std::vector<double> alpha_bar;

  int train_steps() const { return static_cast<int>(alpha_bar.size()); }
  /// alpha_bar at a training timestep; kClean maps to 1.
  double at(int t) const;
};

/// Linear betas in [beta_start, beta_end], alpha_bar_t = prod_{s<=t} (1 - beta_s).
NoiseSchedule make_schedule(int train_steps = 1000, BetaSchedule kind = BetaSchedule::Linear,
                            double beta_start = 1e-4, double beta_end = 0.02);

/// sqrt(ab_t) z0 + sqrt(1 - ab_t) eps.
LatentVideo add_noise(const LatentVideo& z0, int t, const LatentVideo& eps, const NoiseSchedule& sched);

/// (z_t - sqrt(1 - ab_t) eps) / sqrt(ab_t). At kClean returns z_t.
LatentVideo estimate_x0(const LatentVideo& z_t, const LatentVideo& eps_hat, int t, const NoiseSchedule& sched);

/// Deterministic (eta = 0) DDIM update from t to t_prev (t_prev may be kClean).
LatentVideo ddim_step(const LatentVideo& z_t, const LatentVideo& eps_hat, int t, int t_prev,
                      const NoiseSchedule& sched);

/// eps_u + guidance (eps_c - eps_u).
LatentVideo cfg_combine(const LatentVideo& eps_uncond, const LatentVideo& eps_cond, double guidance);

/// Training timesteps visited by the sampler, indexed by sampling step k.
/// Step k in 1..count() uses timestep ceil(k T / S) - 1; step 0 is clean.
class SampleSteps {
 public:
  SampleSteps(int train_steps, int sample_steps);

  int count() const { return static_cast<int>(descending_.size()); }
  /// Descending training timesteps, entry 0 is step count().
  const std::vector<int>& descending() const { return descending_; }
  /// Timestep for sampling step k; kClean for k == 0.
  int timestep(int k) const;

 private:
  std::vector<int> descending_;
};

SampleSteps select_timesteps(int train_steps, int sample_steps);

/// Opaque conditioning handle passed through to the denoiser.
struct Condition {
  std::uint64_t id{0};
};

struct ReframeOutcome;

/// Epsilon-prediction network stand-in. Called from one thread at a time.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual LatentVideo predict(const LatentVideo& z, int t, std::optional<Condition> condition) = 0;
  /// Notification that the sampler moved the video to new cameras. Default:
  /// ignored.
  virtual void on_reframe(const ReframeOutcome& /*outcome*/) {}
};

/// (z_t - sqrt(ab_t) target) / sqrt(1 - ab_t): the noise for which the
/// clean estimate is exactly `target`.
LatentVideo oracle_epsilon(const LatentVideo& z_t, int t, const LatentVideo& target, const NoiseSchedule& sched);

/// Denoiser that always steers toward a stored target latent. The target can
/// be replaced when the sampler reframes (see `set_retarget`).
class OracleDenoiser : public Denoiser {
 public:
  using Retarget = std::function<LatentVideo(const ReframeOutcome&)>;

  OracleDenoiser(LatentVideo target, NoiseSchedule sched) : target_(std::move(target)), sched_(std::move(sched)) {}

  LatentVideo predict(const LatentVideo& z, int t, std::optional<Condition> condition) override;
  void on_reframe(const ReframeOutcome& outcome) override;

  void set_retarget(Retarget fn) { retarget_ = std::move(fn); }
  const LatentVideo& target() const { return target_; }

 private:
  LatentVideo target_;
  NoiseSchedule sched_;
  Retarget retarget_;
};

/// Imperfect but deterministic denoiser: the linear shrinkage estimate for
/// a Gaussian prior centered on a stored latent, with the data term smoothed,
///
///   x0_hat = stored + g_t * box3x3(z_t - sqrt(ab_t) stored)
///   g_t    = sqrt(ab_t) s^2 / (ab_t s^2 + 1 - ab_t)
///
/// where s is the prior spread and box3x3 a per-channel 3x3 mean with edge
/// clamping. The returned eps is the one consistent with x0_hat. When no
/// stored latent is given, a smooth seeded latent of the requested shape is
/// drawn on first use. After a reframe the stored latent takes the smoothed
/// reframed content, box3x3(z0_reframed), on known cells and keeps its old
/// value elsewhere.
class ToyDenoiser : public Denoiser {
 public:
  ToyDenoiser(NoiseSchedule sched, std::optional<LatentVideo> stored, std::uint64_t seed, double spread = 0.1)
      : sched_(std::move(sched)), stored_(std::move(stored)), seed_(seed), spread_(spread) {}
  LatentVideo predict(const LatentVideo& z, int t, std::optional<Condition> condition) override;
  void on_reframe(const ReframeOutcome& outcome) override;

 private:
  NoiseSchedule sched_;
  std::optional<LatentVideo> stored_;
  std::uint64_t seed_;
  double spread_;
};

/// Classifier-free guidance around another denoiser: two calls (with and
/// without the condition) combined by cfg_combine.
class GuidedDenoiser : public Denoiser {
 public:
  GuidedDenoiser(Denoiser& base, double guidance, std::optional<Condition> condition)
      : base_(base), guidance_(guidance), condition_(condition) {}

  LatentVideo predict(const LatentVideo& z, int t, std::optional<Condition> condition) override;
  void on_reframe(const ReframeOutcome& outcome) override { base_.on_reframe(outcome); }

 private:
  Denoiser& base_;
  double guidance_;
  std::optional<Condition> condition_;
};

/// Standard normal latent drawn from the SplitMix64 stream of `seed`.
LatentVideo gaussian_latent(const VideoShape& shape, std::uint64_t seed);

/// 3x3 spatial mean per frame and channel, edges clamped.
LatentVideo box_blur3(const LatentVideo& z);

}  // namespace reframe

#endif  // REFRAME_SCHEDULER_HPP
