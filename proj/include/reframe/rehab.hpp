#ifndef REFRAME_REHAB_HPP
#define REFRAME_REHAB_HPP

// Latent rehabilitation and the end-to-end sampler.
//
// Sampling steps count down from S (pure noise) to 0 (clean). After the
// video is reframed at step t_w, the unknown cells restart from noise at
// step S while the known cells are re-noised from the reframed latent at
// step S - offset. Each merge iteration denoises the merged latent one step,
// keeps the result for the unknown cells and re-noises the known cells one
// level lower. When the known cells reach t_w (unknown at t_w + offset) the
// merging stops and the whole latent is denoised from t_w + offset to 0.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "reframe/reframe.hpp"
#include "reframe/scheduler.hpp"
#include "reframe/trajectory.hpp"

namespace reframe {

struct RunConfig {
  int sample_steps{25};
  int warp_step{8};
  int noise_offset{3};
  double guidance{7.5};
  CloudMode mode{CloudMode::TimeAware};
  double splat_radius{1.0};
  std::uint64_t seed{0};
  std::optional<Condition> condition{Condition{1}};

  /// Throws InvalidConfig unless 0 <= warp_step < sample_steps,
  /// noise_offset >= 0 and warp_step + noise_offset <= sample_steps.
  void validate() const;
};

/// m * known + (1 - m) * unknown, mask broadcast over channels.
LatentVideo merge_step(const LatentVideo& z_known, const LatentVideo& z_unknown, const OcclusionMask& mask);

/// max(unknown_step - offset, 0).
int known_level(int unknown_step, int offset);

/// One merged latent as seen by the denoiser (or, for the last record, the
/// latent handed to plain denoising).
struct MergeRecord {
  int unknown_step;
  int known_step;
  /// Noise used to re-noise the known cells at this iteration.
  const LatentVideo& known_noise;
  const LatentVideo& merged;
  bool final;
};

using MergeObserver = std::function<void(const MergeRecord&)>;

struct RehabStats {
  int merge_iterations{0};
  int plain_steps{0};
};

/// Runs the merge loop and the remaining plain steps; returns the clean
/// latent. `denoiser` is wrapped in classifier-free guidance with
/// config.guidance.
LatentVideo rehabilitate(const LatentVideo& z0_reframed, const OcclusionMask& mask, Denoiser& denoiser,
                         const NoiseSchedule& sched, const SampleSteps& steps, const RunConfig& config,
                         std::uint64_t rng_seed, const MergeObserver& observer = {}, RehabStats* stats = nullptr);

/// Noise stream ids used by rehabilitate (exposed so tests can replay them).
std::uint64_t unknown_noise_seed(std::uint64_t rng_seed);
std::uint64_t known_noise_seed(std::uint64_t rng_seed, int unknown_step);

struct PipelineInputs {
  SceneInputs scene;
  /// Camera motion to apply; relativized, optionally normalized to
  /// trajectory_scale, then left-multiplied onto the source poses.
  Trajectory trajectory;
  std::optional<double> trajectory_scale;
};

struct StageTiming {
  std::string stage;
  double seconds;
};

struct RunReport {
  std::vector<StageTiming> timings;
  double mask_coverage{0};
  double latent_mask_coverage{0};
  std::vector<Posed> target_poses;
  int warp_timestep{0};
  int merge_iterations{0};
  int plain_steps{0};
};

struct PipelineResult {
  PixelVideo video;
  LatentVideo latent;
  OcclusionMask mask;  // latent resolution
  ReframeOutcome reframe;
  RunReport report;
};

/// Target camera-from-world poses for a pipeline run.
std::vector<Posed> target_poses(const PipelineInputs& inputs);

/// Plain DDIM from seeded noise down to step t_w, reframing, rehabilitation,
/// decode. The denoiser is told about the reframing through on_reframe.
PipelineResult run_pipeline(std::uint64_t initial_noise_seed, Denoiser& denoiser, const Codec& codec,
                            const NoiseSchedule& sched, const SampleSteps& steps, const RunConfig& config,
                            const PipelineInputs& inputs);

}  // namespace reframe

#endif  // REFRAME_REHAB_HPP
