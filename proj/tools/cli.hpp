#ifndef REFRAME_TOOLS_CLI_HPP
#define REFRAME_TOOLS_CLI_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "reframe/reframe.hpp"
#include "reframe/synthscene.hpp"

namespace reframe::cli {

/// Entry point of the `reframe` tool. Returns the process exit code: 0 on
/// success, 1 on usage errors, 2 on data errors.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// A scene bundle as written by `synth`.
struct Bundle {
  SceneSpec spec;
  GroundTruthBundle truth;
  std::vector<EdgeObservation> observations;
  int window{3};
  double noise_sigma{0.0};
};

/// Renders the scene, emits edge observations and writes everything under
/// `dir`: scene.json, frames/depth/pointmaps/validity.lrtf, poses.txt and
/// observations/.
Bundle synthesize(const SceneSpec& spec, int window, double noise_sigma);
void write_bundle(const std::filesystem::path& dir, const Bundle& bundle);
Bundle read_bundle(const std::filesystem::path& dir);

/// Latent the oracle denoiser should steer to once the video has been
/// reframed: the reframed content where the mask is known, the analytic
/// rendering from the target cameras elsewhere.
LatentVideo oracle_retarget(const SceneModel& scene, const Intrinsicsd& intrinsics, const Codec& codec,
                            const ReframeOutcome& outcome);

/// CRC-32 of the LRTF encoding minus its checksum; used to compare stages
/// across runs.
std::uint32_t digest(const LatentVideo& z);
std::uint32_t digest(const OcclusionMask& mask);

}  // namespace reframe::cli

#endif  // REFRAME_TOOLS_CLI_HPP
