#include "reframe/rehab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "reframe/rng.hpp"

namespace reframe {

void RunConfig::validate() const {
  if (sample_steps < 1) throw Error(Errc::InvalidConfig, "sample_steps must be >= 1", {sample_steps});
  if (warp_step < 0 || warp_step >= sample_steps) {
    throw Error(Errc::InvalidConfig, "warp_step must satisfy 0 <= warp_step < sample_steps", {warp_step});
  }
  if (noise_offset < 0) throw Error(Errc::InvalidConfig, "noise_offset must be >= 0", {noise_offset});
  if (warp_step + noise_offset > sample_steps) {
    throw Error(Errc::InvalidConfig, "warp_step + noise_offset must not exceed sample_steps",
                {warp_step, noise_offset});
  }
  if (!std::isfinite(guidance)) throw Error(Errc::InvalidConfig, "guidance must be finite");
  if (!(splat_radius > 0)) throw Error(Errc::InvalidConfig, "splat_radius must be positive");
}

LatentVideo merge_step(const LatentVideo& z_known, const LatentVideo& z_unknown, const OcclusionMask& mask) {
  require_same_shape(z_known, z_unknown);
  if (mask.frames() != z_known.frames() || mask.height() != z_known.height() || mask.width() != z_known.width()) {
    throw Error(Errc::ShapeMismatch, "mask does not match the latent grid");
  }
  LatentVideo out(z_known.shape());
  for (int f = 0; f < out.frames(); ++f) {
    for (int c = 0; c < out.channels(); ++c) {
      for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
          out(f, c, y, x) = mask(f, y, x) ? z_known(f, c, y, x) : z_unknown(f, c, y, x);
        }
      }
    }
  }
  return out;
}

int known_level(int unknown_step, int offset) { return std::max(unknown_step - offset, 0); }

std::uint64_t unknown_noise_seed(std::uint64_t rng_seed) { return stream_seed(rng_seed, 0); }

std::uint64_t known_noise_seed(std::uint64_t rng_seed, int unknown_step) {
  return stream_seed(rng_seed, 1000 + static_cast<std::uint64_t>(unknown_step));
}

namespace {

void require_finite(const LatentVideo& z, int step) {
  if (!z.allFinite()) throw Error(Errc::NonFiniteLatent, "latent became non-finite", {step});
}

}  // namespace

LatentVideo rehabilitate(const LatentVideo& z0_reframed, const OcclusionMask& mask, Denoiser& denoiser,
                         const NoiseSchedule& sched, const SampleSteps& steps, const RunConfig& config,
                         std::uint64_t rng_seed, const MergeObserver& observer, RehabStats* stats) {
  config.validate();
  if (steps.count() != config.sample_steps) {
    throw Error(Errc::InvalidConfig, "sample step list does not match sample_steps", {steps.count()});
  }
  require_finite(z0_reframed, config.sample_steps);
  GuidedDenoiser guided(denoiser, config.guidance, config.condition);

  const int top = config.sample_steps;
  const int offset = config.noise_offset;
  const int merge_end = config.warp_step + offset;

  LatentVideo unknown = gaussian_latent(z0_reframed.shape(), unknown_noise_seed(rng_seed));
  RehabStats local;

  auto known_at = [&](int unknown_step, LatentVideo& noise) {
    noise = gaussian_latent(z0_reframed.shape(), known_noise_seed(rng_seed, unknown_step));
    return add_noise(z0_reframed, steps.timestep(known_level(unknown_step, offset)), noise, sched);
  };

  LatentVideo noise;
  LatentVideo known = known_at(top, noise);
  for (int s = top; s > merge_end; --s) {
    const LatentVideo merged = merge_step(known, unknown, mask);
    if (observer) observer({s, known_level(s, offset), noise, merged, false});
    const LatentVideo eps = guided.predict(merged, steps.timestep(s), config.condition);
    unknown = ddim_step(merged, eps, steps.timestep(s), steps.timestep(s - 1), sched);
    require_finite(unknown, s - 1);
    known = known_at(s - 1, noise);
    ++local.merge_iterations;
  }

  LatentVideo z = merge_step(known, unknown, mask);
  if (observer) observer({merge_end, known_level(merge_end, offset), noise, z, true});
  for (int s = merge_end; s > 0; --s) {
    const LatentVideo eps = guided.predict(z, steps.timestep(s), config.condition);
    z = ddim_step(z, eps, steps.timestep(s), steps.timestep(s - 1), sched);
    require_finite(z, s - 1);
    ++local.plain_steps;
  }
  if (stats) *stats = local;
  return z;
}

std::vector<Posed> target_poses(const PipelineInputs& inputs) {
  Trajectory relative = relativize(inputs.trajectory);
  if (inputs.trajectory_scale) relative = normalize_translation(relative, *inputs.trajectory_scale);
  const Trajectory targets = compose_targets(relative, Trajectory::from_poses(inputs.scene.source_poses));
  return targets.poses();
}

PipelineResult run_pipeline(std::uint64_t initial_noise_seed, Denoiser& denoiser, const Codec& codec,
                            const NoiseSchedule& sched, const SampleSteps& steps, const RunConfig& config,
                            const PipelineInputs& inputs) {
  using Clock = std::chrono::steady_clock;
  config.validate();
  if (steps.count() != config.sample_steps) {
    throw Error(Errc::InvalidConfig, "sample step list does not match sample_steps", {steps.count()});
  }
  const int frames = static_cast<int>(inputs.scene.source_poses.size());
  const Intrinsicsd& k = inputs.scene.intrinsics;
  const VideoShape latent_shape = codec.encode(PixelVideo(frames, 3, k.height, k.width)).shape();

  PipelineResult result;
  RunReport& report = result.report;
  auto stage = [&](const char* name, Clock::time_point start) {
    report.timings.push_back({name, std::chrono::duration<double>(Clock::now() - start).count()});
  };

  auto start = Clock::now();
  report.target_poses = target_poses(inputs);
  GuidedDenoiser guided(denoiser, config.guidance, config.condition);
  LatentVideo z = gaussian_latent(latent_shape, initial_noise_seed);
  for (int s = config.sample_steps; s > config.warp_step; --s) {
    const LatentVideo eps = guided.predict(z, steps.timestep(s), config.condition);
    z = ddim_step(z, eps, steps.timestep(s), steps.timestep(s - 1), sched);
    require_finite(z, s - 1);
  }
  stage("initial_denoise", start);

  start = Clock::now();
  report.warp_timestep = steps.timestep(config.warp_step);
  ReframeOptions options{config.mode, config.splat_radius, config.condition};
  result.reframe = reframe_latent(z, report.warp_timestep, guided, codec, inputs.scene, report.target_poses, sched,
                                  options);
  guided.on_reframe(result.reframe);
  report.mask_coverage = result.reframe.pixel_mask.coverage();
  report.latent_mask_coverage = result.reframe.latent_mask.coverage();
  stage("reframe", start);

  start = Clock::now();
  RehabStats stats;
  result.latent = rehabilitate(result.reframe.z0_reframed, result.reframe.latent_mask, denoiser, sched, steps, config,
                               config.seed, {}, &stats);
  report.merge_iterations = stats.merge_iterations;
  report.plain_steps = stats.plain_steps;
  stage("rehabilitate", start);

  start = Clock::now();
  result.video = codec.decode(result.latent);
  result.video.array() = result.video.array().cwiseMax(0.0).cwiseMin(1.0);
  result.mask = result.reframe.latent_mask;
  stage("decode", start);
  return result;
}

}  // namespace reframe
