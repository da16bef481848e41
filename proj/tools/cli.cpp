#include "cli.hpp"

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "reframe/io.hpp"
#include "reframe/metrics.hpp"
#include "reframe/rehab.hpp"
#include "reframe/rng.hpp"

namespace reframe::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

Bundle synthesize(const SceneSpec& spec, int window, double noise_sigma) {
  GroundTruthBundle truth = make_bundle(spec);
  auto observations =
      emit_edge_observations(truth, build_graph(spec.frames, window), noise_sigma, stream_seed(spec.seed, 7));
  return {spec, std::move(truth), std::move(observations), window, noise_sigma};
}

namespace {

json intrinsics_json(const Intrinsicsd& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

Intrinsicsd intrinsics_from(const json& j) {
  Intrinsicsd k{j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(),
                j.at("cy").get<double>(), j.at("width").get<int>(), j.at("height").get<int>()};
  k.validate();
  return k;
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, what + ": " + e.what());
  }
}

}  // namespace

void write_bundle(const fs::path& dir, const Bundle& b) {
  fs::create_directories(dir / "observations");
  const auto& t = b.truth;
  json scene = {{"kind", scene_kind_name(b.spec.kind)},
                {"frames", b.spec.frames},
                {"width", b.spec.width},
                {"height", b.spec.height},
                {"seed", b.spec.seed},
                {"camera_yaw_deg", b.spec.camera_yaw_deg},
                {"camera_shift", b.spec.camera_shift},
                {"window", b.window},
                {"noise_sigma", b.noise_sigma},
                {"intrinsics", intrinsics_json(t.intrinsics)}};
  write_text(dir / "scene.json", scene.dump(2) + "\n");
  write_tensor(dir / "frames.lrtf", to_tensor(t.frames));
  write_tensor(dir / "depth.lrtf", scalar_maps_tensor(t.depth, t.intrinsics.height, t.intrinsics.width));
  write_tensor(dir / "pointmaps.lrtf", pointmaps_tensor(t.pointmaps));
  write_tensor(dir / "validity.lrtf", masks_tensor(t.validity, t.intrinsics.height, t.intrinsics.width));
  write_text(dir / "poses.txt", serialize_realestate(t.source_poses, t.intrinsics.width, t.intrinsics.height));
  write_observations(dir / "observations", b.observations);
}

Bundle read_bundle(const fs::path& dir) {
  const json scene = parse_json(read_text(dir / "scene.json"), "scene.json");
  SceneSpec spec;
  int window = 0;
  double noise_sigma = 0.0;
  Intrinsicsd k;
  try {
    spec.kind = parse_scene_kind(scene.at("kind").get<std::string>());
    spec.frames = scene.at("frames").get<int>();
    spec.width = scene.at("width").get<int>();
    spec.height = scene.at("height").get<int>();
    spec.seed = scene.at("seed").get<std::uint64_t>();
    spec.camera_yaw_deg = scene.at("camera_yaw_deg").get<double>();
    spec.camera_shift = scene.at("camera_shift").get<double>();
    window = scene.at("window").get<int>();
    noise_sigma = scene.at("noise_sigma").get<double>();
    k = intrinsics_from(scene.at("intrinsics"));
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("scene.json: ") + e.what());
  }
  GroundTruthBundle t{pixels_from_tensor(read_tensor(dir / "frames.lrtf")),
                      scalar_maps_from_tensor(read_tensor(dir / "depth.lrtf")),
                      pointmaps_from_tensor(read_tensor(dir / "pointmaps.lrtf")),
                      masks_from_tensor(read_tensor(dir / "validity.lrtf")),
                      parse_realestate(read_text(dir / "poses.txt"), k.width, k.height),
                      k};
  const auto frames = static_cast<std::size_t>(spec.frames);
  if (t.frames.frames() != spec.frames || t.pointmaps.size() != frames || t.validity.size() != frames ||
      t.depth.size() != frames || t.source_poses.size() != frames) {
    throw Error(Errc::ShapeMismatch, "bundle files disagree on the frame count");
  }
  return {spec, std::move(t), read_observations(dir / "observations"), window, noise_sigma};
}

LatentVideo oracle_retarget(const SceneModel& scene, const Intrinsicsd& intrinsics, const Codec& codec,
                            const ReframeOutcome& outcome) {
  const GroundTruthBundle target = render_bundle(scene, Trajectory::from_poses(outcome.target_poses), intrinsics);
  return merge_step(outcome.z0_reframed, codec.encode(target.frames), outcome.latent_mask);
}

std::uint32_t digest(const LatentVideo& z) {
  const auto bytes = encode_tensor(to_tensor(z));
  return crc32_ieee(bytes.data(), bytes.size() - 4);
}

std::uint32_t digest(const OcclusionMask& mask) {
  const auto bytes = encode_tensor(to_tensor(mask));
  return crc32_ieee(bytes.data(), bytes.size() - 4);
}

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Settings {
  // scene
  std::string kind{"static"};
  int frames{16};
  int width{64};
  int height{48};
  double yaw_deg{0.0};
  double shift{0.0};
  std::uint64_t seed{0};
  int window{3};
  double noise_sigma{0.0};
  // camera path
  std::string trajectory;
  std::string motion{"pan-right"};
  double magnitude{0.5};
  std::optional<double> orbit_radius;
  std::optional<double> trajectory_scale;
  std::string format{"realestate"};
  // sampler
  int train_steps{1000};
  double beta_start{1e-4};
  double beta_end{0.02};
  int sample_steps{25};
  int warp_step{8};
  int noise_offset{3};
  double guidance{7.5};
  std::string mode{"time-aware"};
  double splat_radius{1.0};
  std::string codec{"identity"};
  std::string denoiser{"oracle"};
  double toy_spread{0.1};
  std::string pointmaps{"gt"};
  // alignment
  int alignment_steps{300};
  double learning_rate{0.01};
  std::string schedule{"constant"};
  double final_learning_rate{1e-6};
  // paths
  std::string bundle;
  std::string out{"."};
  std::string est;
  std::string gt;
  std::string video;
  std::string reference;
  std::string mask;
};

template <typename T>
void read_into(const json& j, T& field) {
  field = j.get<T>();
}

template <typename T>
void read_into(const json& j, std::optional<T>& field) {
  if (j.is_null()) {
    field.reset();
  } else {
    field = j.get<T>();
  }
}

using Binder = std::function<void(const json&, Settings&)>;

const std::map<std::string, Binder>& config_keys() {
#define REFRAME_KEY(name) \
  { #name, [](const json& j, Settings& s) { read_into(j, s.name); } }
  static const std::map<std::string, Binder> keys = {
      REFRAME_KEY(kind),          REFRAME_KEY(frames),
      REFRAME_KEY(width),         REFRAME_KEY(height),
      REFRAME_KEY(yaw_deg),       REFRAME_KEY(shift),
      REFRAME_KEY(seed),          REFRAME_KEY(window),
      REFRAME_KEY(noise_sigma),   REFRAME_KEY(trajectory),
      REFRAME_KEY(motion),        REFRAME_KEY(magnitude),
      REFRAME_KEY(orbit_radius),  REFRAME_KEY(trajectory_scale),
      REFRAME_KEY(format),        REFRAME_KEY(train_steps),
      REFRAME_KEY(beta_start),    REFRAME_KEY(beta_end),
      REFRAME_KEY(sample_steps),  REFRAME_KEY(warp_step),
      REFRAME_KEY(noise_offset),  REFRAME_KEY(guidance),
      REFRAME_KEY(mode),          REFRAME_KEY(splat_radius),
      REFRAME_KEY(codec),         REFRAME_KEY(denoiser),
      REFRAME_KEY(toy_spread),    REFRAME_KEY(pointmaps),
      REFRAME_KEY(alignment_steps), REFRAME_KEY(learning_rate),
      REFRAME_KEY(schedule),      REFRAME_KEY(final_learning_rate),
      REFRAME_KEY(bundle),        REFRAME_KEY(out),
      REFRAME_KEY(est),           REFRAME_KEY(gt),
      REFRAME_KEY(video),         REFRAME_KEY(reference),
      REFRAME_KEY(mask),
  };
#undef REFRAME_KEY
  return keys;
}

void load_config(const fs::path& path, Settings& s) {
  const json doc = parse_json(read_text(path), path.string());
  if (!doc.is_object()) throw Error(Errc::InvalidConfig, path.string() + ": expected a JSON object");
  const auto& keys = config_keys();
  for (const auto& [key, value] : doc.items()) {
    const auto it = keys.find(key);
    if (it == keys.end()) throw UsageError("unknown config key '" + key + "' in " + path.string());
    try {
      it->second(value, s);
    } catch (const json::exception& e) {
      throw Error(Errc::InvalidConfig, "config key '" + key + "': " + e.what());
    }
  }
}

std::optional<std::string> find_config(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

SceneSpec scene_spec(const Settings& s) {
  SceneSpec spec;
  spec.kind = parse_scene_kind(s.kind);
  spec.frames = s.frames;
  spec.width = s.width;
  spec.height = s.height;
  spec.seed = s.seed;
  spec.camera_yaw_deg = s.yaw_deg;
  spec.camera_shift = s.shift;
  return spec;
}

Trajectory camera_path(const Settings& s, const Intrinsicsd& k, int frames) {
  if (!s.trajectory.empty()) return read_trajectory_file(s.trajectory, k.width, k.height);
  return basic_trajectory(parse_basic_motion(s.motion), s.magnitude, frames, s.orbit_radius);
}

Bundle load_or_synthesize(const Settings& s) {
  if (!s.bundle.empty()) return read_bundle(s.bundle);
  return synthesize(scene_spec(s), s.window, s.noise_sigma);
}

std::unique_ptr<Codec> make_codec(const std::string& name) {
  if (name == "identity") return std::make_unique<IdentityCodec>();
  if (name == "pooling") return std::make_unique<PoolingCodec>(4);
  throw UsageError("--codec must be identity or pooling, got '" + name + "'");
}

LearningRateSchedule parse_schedule(const std::string& name) {
  if (name == "constant") return LearningRateSchedule::Constant;
  if (name == "exponential-tail") return LearningRateSchedule::ExponentialTail;
  throw UsageError("--schedule must be constant or exponential-tail, got '" + name + "'");
}

AlignmentConfig alignment_config(const Settings& s) {
  AlignmentConfig c;
  c.steps = s.alignment_steps;
  c.learning_rate = s.learning_rate;
  c.final_learning_rate = s.final_learning_rate;
  c.schedule = parse_schedule(s.schedule);
  c.seed = s.seed;
  return c;
}

/// Nearest upsampling of a latent-grid mask to pixel resolution.
OcclusionMask upsample_mask(const OcclusionMask& mask, int factor) {
  OcclusionMask out(mask.frames(), mask.height() * factor, mask.width() * factor);
  for (int f = 0; f < out.frames(); ++f) {
    for (int y = 0; y < out.height(); ++y) {
      for (int x = 0; x < out.width(); ++x) out(f, y, x) = mask(f, y / factor, x / factor);
    }
  }
  return out;
}

json psnr_json(const Psnr& p) {
  if (p.exact) return {{"db", nullptr}, {"exact", true}};
  return {{"db", p.db}, {"exact", false}};
}

/// PSNR over all pixels and over known pixels; the known entry is null when
/// nothing is known.
json quality(const PixelVideo& video, const PixelVideo& truth, const OcclusionMask& known) {
  json q = {{"all", psnr_json(psnr(video, truth))}};
  try {
    q["known"] = psnr_json(psnr(video, truth, &known));
  } catch (const Error& e) {
    if (e.code() != Errc::EmptyMask) throw;
    q["known"] = nullptr;
  }
  return q;
}

void write_previews(const fs::path& dir, const PixelVideo& video, const OcclusionMask* mask) {
  fs::create_directories(dir);
  char name[32];
  for (int f = 0; f < video.frames(); ++f) {
    std::snprintf(name, sizeof name, "frame_%03d.ppm", f);
    write_text(dir / name, encode_ppm(video, f));
    if (mask) {
      std::snprintf(name, sizeof name, "mask_%03d.pgm", f);
      write_text(dir / name, encode_pgm(*mask, f));
    }
  }
}

std::string hex(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

// ---- commands ----

json cmd_synth(const Settings& s) {
  const Bundle b = synthesize(scene_spec(s), s.window, s.noise_sigma);
  write_bundle(s.out, b);
  write_previews(fs::path(s.out) / "preview", b.truth.frames, nullptr);
  return {{"command", "synth"},
          {"out", s.out},
          {"kind", s.kind},
          {"frames", b.spec.frames},
          {"width", b.spec.width},
          {"height", b.spec.height},
          {"edges", b.observations.size()}};
}

json cmd_trajgen(const Settings& s) {
  const Trajectory t = basic_trajectory(parse_basic_motion(s.motion), s.magnitude, s.frames, s.orbit_radius);
  fs::create_directories(s.out);
  fs::path file;
  if (s.format == "json") {
    file = fs::path(s.out) / "trajectory.json";
    write_text(file, trajectory_to_json(t));
  } else if (s.format == "realestate") {
    file = fs::path(s.out) / "trajectory.txt";
    write_text(file, serialize_realestate(t, s.width, s.height, s.motion));
  } else {
    throw UsageError("--format must be realestate or json, got '" + s.format + "'");
  }
  return {{"command", "trajgen"}, {"motion", s.motion}, {"frames", t.size()}, {"file", file.string()}};
}

json pose_rows(const std::vector<Posed>& poses) {
  json rows = json::array();
  for (const auto& p : poses) {
    json row = json::array();
    const Eigen::Matrix<double, 3, 4> m = p.matrix();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) row.push_back(m(r, c));
    }
    rows.push_back(row);
  }
  return rows;
}

json cmd_align(const Settings& s) {
  if (s.bundle.empty()) throw UsageError("align needs --bundle");
  const Bundle b = read_bundle(s.bundle);
  const std::vector<Intrinsicsd> intrinsics(static_cast<std::size_t>(b.spec.frames), b.truth.intrinsics);
  const AlignmentResult r = optimize_alignment(b.observations, intrinsics, alignment_config(s));

  std::vector<Posed> cameras;
  for (const auto& p : r.state.frame_poses) cameras.push_back(inverse(p));
  const Trajectory estimate = Trajectory::from_poses(cameras);
  const PoseErrorReport errors = pose_errors(estimate, b.truth.source_poses);

  fs::create_directories(s.out);
  const fs::path out(s.out);
  const auto& k = b.truth.intrinsics;
  write_tensor(out / "aligned_pointmaps.lrtf", pointmaps_tensor(r.state.global_pointmaps));
  TensorData scales{{std::uint32_t(r.state.log_scales.size())}, std::vector<float>{}};
  for (Eigen::Index e = 0; e < r.state.log_scales.size(); ++e) {
    std::get<std::vector<float>>(scales.values).push_back(static_cast<float>(r.state.log_scales[e]));
  }
  write_tensor(out / "log_scales.lrtf", scales);
  write_text(out / "poses.txt", serialize_realestate(estimate, k.width, k.height, "aligned"));

  json summary = {{"command", "align"},
                  {"steps", s.alignment_steps},
                  {"initial_loss", r.initial_loss},
                  {"final_loss", r.final_loss},
                  {"rot_error", errors.rot_error},
                  {"trans_error", errors.trans_error}};
  json report = summary;
  report["camera_from_world"] = pose_rows(cameras);
  write_text(out / "alignment.json", report.dump(2) + "\n");
  return summary;
}

SceneInputs scene_inputs(const Bundle& b, const Settings& s, json* extra) {
  SceneInputs scene;
  scene.intrinsics = b.truth.intrinsics;
  if (s.pointmaps == "gt") {
    scene.pointmaps = b.truth.pointmaps;
    scene.validity = b.truth.validity;
    scene.source_poses = b.truth.source_poses.poses();
  } else if (s.pointmaps == "aligned") {
    const std::vector<Intrinsicsd> intrinsics(static_cast<std::size_t>(b.spec.frames), b.truth.intrinsics);
    const AlignmentResult r = optimize_alignment(b.observations, intrinsics, alignment_config(s));
    scene.pointmaps = r.state.global_pointmaps;
    scene.validity = b.truth.validity;
    for (const auto& p : r.state.frame_poses) scene.source_poses.push_back(inverse(p));
    if (extra) *extra = {{"initial_loss", r.initial_loss}, {"final_loss", r.final_loss}};
  } else {
    throw UsageError("--pointmaps must be gt or aligned, got '" + s.pointmaps + "'");
  }
  return scene;
}

json cmd_reframe(const Settings& s) {
  const Bundle b = load_or_synthesize(s);
  const auto codec = make_codec(s.codec);
  const NoiseSchedule sched = make_schedule(s.train_steps, BetaSchedule::Linear, s.beta_start, s.beta_end);
  json alignment;
  const SceneInputs scene = scene_inputs(b, s, &alignment);
  PipelineInputs inputs{scene, camera_path(s, b.truth.intrinsics, b.spec.frames), s.trajectory_scale};
  const std::vector<Posed> targets = target_poses(inputs);

  // At the clean timestep the denoiser is not consulted.
  ToyDenoiser unused(sched, std::nullopt, s.seed);
  const ReframeOptions options{parse_cloud_mode(s.mode), s.splat_radius, std::nullopt};
  const ReframeOutcome r =
      reframe_latent(codec->encode(b.truth.frames), kClean, unused, *codec, scene, targets, sched, options);

  const GroundTruthBundle truth = render_bundle(make_scene(b.spec), Trajectory::from_poses(targets), scene.intrinsics);
  const fs::path out(s.out);
  fs::create_directories(out);
  write_tensor(out / "reframed.lrtf", to_tensor(r.x0_reframed));
  write_tensor(out / "pixel_mask.lrtf", to_tensor(r.pixel_mask));
  write_tensor(out / "latent_mask.lrtf", to_tensor(r.latent_mask));
  write_text(out / "target_poses.txt",
             serialize_realestate(Trajectory::from_poses(targets), scene.intrinsics.width, scene.intrinsics.height));
  write_previews(out / "preview", r.x0_reframed, &r.pixel_mask);

  json summary = {{"command", "reframe"},
                  {"mode", s.mode},
                  {"coverage", r.pixel_mask.coverage()},
                  {"psnr", quality(r.x0_reframed, truth.frames, r.pixel_mask)}};
  if (!alignment.is_null()) summary["alignment"] = alignment;
  write_text(out / "report.json", summary.dump(2) + "\n");
  return summary;
}

json cmd_run(const Settings& s) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  const Bundle b = load_or_synthesize(s);
  const auto codec = make_codec(s.codec);
  const NoiseSchedule sched = make_schedule(s.train_steps, BetaSchedule::Linear, s.beta_start, s.beta_end);
  const SampleSteps steps(s.train_steps, s.sample_steps);

  RunConfig config;
  config.sample_steps = s.sample_steps;
  config.warp_step = s.warp_step;
  config.noise_offset = s.noise_offset;
  config.guidance = s.guidance;
  config.mode = parse_cloud_mode(s.mode);
  config.splat_radius = s.splat_radius;
  config.seed = s.seed;
  config.validate();

  json alignment;
  const SceneInputs scene = scene_inputs(b, s, &alignment);
  const PipelineInputs inputs{scene, camera_path(s, b.truth.intrinsics, b.spec.frames), s.trajectory_scale};
  const SceneModel model = make_scene(b.spec);

  std::unique_ptr<Denoiser> denoiser;
  if (s.denoiser == "oracle") {
    auto oracle = std::make_unique<OracleDenoiser>(codec->encode(b.truth.frames), sched);
    const Codec* c = codec.get();
    const Intrinsicsd k = scene.intrinsics;
    oracle->set_retarget([&model, c, k](const ReframeOutcome& o) { return oracle_retarget(model, k, *c, o); });
    denoiser = std::move(oracle);
  } else if (s.denoiser == "toy") {
    denoiser = std::make_unique<ToyDenoiser>(sched, codec->encode(b.truth.frames), stream_seed(s.seed, 2), s.toy_spread);
  } else {
    throw UsageError("--denoiser must be oracle or toy, got '" + s.denoiser + "'");
  }

  const PipelineResult result =
      run_pipeline(stream_seed(s.seed, 1), *denoiser, *codec, sched, steps, config, inputs);
  const GroundTruthBundle truth =
      render_bundle(model, Trajectory::from_poses(result.report.target_poses), scene.intrinsics);
  const OcclusionMask known = upsample_mask(result.mask, codec->spatial_factor());

  const fs::path out(s.out);
  fs::create_directories(out);
  write_tensor(out / "video.lrtf", to_tensor(result.video));
  write_tensor(out / "latent.lrtf", to_tensor(result.latent));
  write_tensor(out / "mask.lrtf", to_tensor(result.mask));
  write_text(out / "target_poses.txt",
             serialize_realestate(Trajectory::from_poses(result.report.target_poses), scene.intrinsics.width,
                                  scene.intrinsics.height));
  write_previews(out / "preview", result.video, &known);

  const RunReport& rep = result.report;
  json report = {{"mode", s.mode},
                 {"denoiser", s.denoiser},
                 {"codec", s.codec},
                 {"sample_steps", s.sample_steps},
                 {"warp_step", s.warp_step},
                 {"noise_offset", s.noise_offset},
                 {"guidance", s.guidance},
                 {"seed", s.seed},
                 {"warp_timestep", rep.warp_timestep},
                 {"merge_iterations", rep.merge_iterations},
                 {"plain_steps", rep.plain_steps},
                 {"coverage", rep.mask_coverage},
                 {"latent_coverage", rep.latent_mask_coverage},
                 {"psnr", quality(result.video, truth.frames, known)},
                 {"stages",
                  {{"initial_denoise", hex(digest(result.reframe.z0_estimate))},
                   {"reframe", hex(digest(result.reframe.z0_reframed) ^ digest(result.reframe.latent_mask))},
                   {"rehabilitate", hex(digest(result.latent))}}}};
  if (!alignment.is_null()) report["alignment"] = alignment;
  write_text(out / "report.json", report.dump(2) + "\n");

  json summary = {{"command", "run"},
                  {"out", s.out},
                  {"coverage", rep.mask_coverage},
                  {"psnr", report["psnr"]},
                  {"seconds", std::chrono::duration<double>(Clock::now() - start).count()}};
  json timings = json::object();
  for (const auto& t : rep.timings) timings[t.stage] = t.seconds;
  summary["timings"] = timings;
  return summary;
}

json cmd_eval(const Settings& s) {
  json summary = {{"command", "eval"}};
  bool any = false;
  if (!s.est.empty() || !s.gt.empty()) {
    if (s.est.empty() || s.gt.empty()) throw UsageError("eval needs both --est and --gt");
    const Trajectory est = read_trajectory_file(s.est, s.width, s.height);
    const Trajectory gt = read_trajectory_file(s.gt, s.width, s.height);
    const PoseErrorReport r = pose_errors(est, gt);
    summary["rot_error"] = r.rot_error;
    summary["trans_error"] = r.trans_error;
    any = true;
  }
  if (!s.video.empty() || !s.reference.empty()) {
    if (s.video.empty() || s.reference.empty()) throw UsageError("eval needs both --video and --reference");
    const PixelVideo a = pixels_from_tensor(read_tensor(s.video));
    const PixelVideo b = pixels_from_tensor(read_tensor(s.reference));
    if (s.mask.empty()) {
      summary["psnr"] = psnr_json(psnr(a, b));
    } else {
      const OcclusionMask m = mask_from_tensor(read_tensor(s.mask));
      summary["psnr"] = psnr_json(psnr(a, b, &m));
    }
    any = true;
  }
  if (!any) throw UsageError("eval needs --est/--gt or --video/--reference");
  return summary;
}

// ---- option wiring ----

void scene_options(CLI::App& app, Settings& s) {
  app.add_option("--kind", s.kind, "static or dynamic")->capture_default_str();
  app.add_option("--frames", s.frames, "number of frames")->capture_default_str();
  app.add_option("--width", s.width, "image width")->capture_default_str();
  app.add_option("--height", s.height, "image height")->capture_default_str();
  app.add_option("--yaw-deg", s.yaw_deg, "total source camera yaw in degrees")->capture_default_str();
  app.add_option("--shift", s.shift, "total source camera travel along +x")->capture_default_str();
  app.add_option("--window", s.window, "sliding window of the pair graph")->capture_default_str();
  app.add_option("--noise-sigma", s.noise_sigma, "std of the point map noise")->capture_default_str();
}

void path_options(CLI::App& app, Settings& s) {
  app.add_option("--trajectory", s.trajectory, "camera path file (.json or RealEstate10K text)");
  app.add_option("--motion", s.motion, "basic motion used when no --trajectory is given")->capture_default_str();
  app.add_option("--magnitude", s.magnitude, "total motion in scene units or radians")->capture_default_str();
  app.add_option("--orbit-radius", s.orbit_radius, "orbit center distance for orbit motions");
  app.add_option("--trajectory-scale", s.trajectory_scale, "normalize the relative path to this translation sum");
}

void alignment_options(CLI::App& app, Settings& s) {
  app.add_option("--alignment-steps", s.alignment_steps, "optimizer steps")->capture_default_str();
  app.add_option("--lr", s.learning_rate, "learning rate")->capture_default_str();
  app.add_option("--schedule", s.schedule, "constant or exponential-tail")->capture_default_str();
  app.add_option("--final-lr", s.final_learning_rate, "final rate of the exponential tail")->capture_default_str();
}

void sampler_options(CLI::App& app, Settings& s) {
  app.add_option("--mode", s.mode, "time-aware or time-static")->capture_default_str();
  app.add_option("--splat-radius", s.splat_radius, "splat square side in pixels")->capture_default_str();
  app.add_option("--codec", s.codec, "identity or pooling")->capture_default_str();
  app.add_option("--pointmaps", s.pointmaps, "gt or aligned")->capture_default_str();
  app.add_option("--train-steps", s.train_steps, "training timesteps of the schedule")->capture_default_str();
  app.add_option("--beta-start", s.beta_start, "first beta")->capture_default_str();
  app.add_option("--beta-end", s.beta_end, "last beta")->capture_default_str();
}

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Settings s;
  CLI::App app{"Camera-controlled video sampling by latent reframing", "reframe"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", "JSON config; command-line flags take precedence");
  app.add_option("--seed", s.seed, "seed for every random draw")->capture_default_str();
  app.add_option("--out", s.out, "output directory")->capture_default_str();

  auto* synth = app.add_subcommand("synth", "render a synthetic scene bundle");
  scene_options(*synth, s);

  auto* trajgen = app.add_subcommand("trajgen", "write a basic camera trajectory");
  trajgen->add_option("--motion", s.motion, "zoom-in, pan-left, rotate-cw, orbit-ccw, ...")->capture_default_str();
  trajgen->add_option("--magnitude", s.magnitude, "total motion")->capture_default_str();
  trajgen->add_option("--frames", s.frames, "number of frames")->capture_default_str();
  trajgen->add_option("--orbit-radius", s.orbit_radius, "orbit center distance");
  trajgen->add_option("--format", s.format, "realestate or json")->capture_default_str();
  trajgen->add_option("--width", s.width, "image width for the intrinsics")->capture_default_str();
  trajgen->add_option("--height", s.height, "image height for the intrinsics")->capture_default_str();

  auto* align = app.add_subcommand("align", "globally align a bundle's pairwise point maps");
  align->add_option("--bundle", s.bundle, "bundle directory written by synth");
  alignment_options(*align, s);

  auto* reframe_cmd = app.add_subcommand("reframe", "re-render a bundle's frames from new cameras");
  reframe_cmd->add_option("--bundle", s.bundle, "bundle directory (synthesized in memory when absent)");
  scene_options(*reframe_cmd, s);
  path_options(*reframe_cmd, s);
  sampler_options(*reframe_cmd, s);
  alignment_options(*reframe_cmd, s);

  auto* run = app.add_subcommand("run", "sample a video along a new camera path");
  run->add_option("--bundle", s.bundle, "bundle directory (synthesized in memory when absent)");
  scene_options(*run, s);
  path_options(*run, s);
  sampler_options(*run, s);
  alignment_options(*run, s);
  run->add_option("--sample-steps", s.sample_steps, "DDIM steps")->capture_default_str();
  run->add_option("--warp-step", s.warp_step, "sampling step at which the video is reframed")->capture_default_str();
  run->add_option("--noise-offset", s.noise_offset, "steps of noise the known region is spared")
      ->capture_default_str();
  run->add_option("--guidance", s.guidance, "classifier-free guidance scale")->capture_default_str();
  run->add_option("--denoiser", s.denoiser, "oracle or toy")->capture_default_str();
  run->add_option("--toy-spread", s.toy_spread, "prior spread of the toy denoiser")->capture_default_str();

  auto* eval = app.add_subcommand("eval", "pose errors between trajectories, PSNR between videos");
  eval->add_option("--est", s.est, "estimated trajectory");
  eval->add_option("--gt", s.gt, "reference trajectory");
  eval->add_option("--width", s.width, "image width for RealEstate10K intrinsics")->capture_default_str();
  eval->add_option("--height", s.height, "image height for RealEstate10K intrinsics")->capture_default_str();
  eval->add_option("--video", s.video, "video tensor");
  eval->add_option("--reference", s.reference, "reference video tensor");
  eval->add_option("--mask", s.mask, "known-pixel mask tensor");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    if (auto config = find_config(args)) load_config(*config, s);
    app.parse(reversed);

    json summary;
    if (*synth) summary = cmd_synth(s);
    if (*trajgen) summary = cmd_trajgen(s);
    if (*align) summary = cmd_align(s);
    if (*reframe_cmd) summary = cmd_reframe(s);
    if (*run) summary = cmd_run(s);
    if (*eval) summary = cmd_eval(s);
    summary["ok"] = true;
    out << summary.dump() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return 0;
    out << json{{"ok", false}, {"error", "UsageError"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    out << json{{"ok", false}, {"error", "UsageError"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    out << json{{"ok", false}, {"error", e.name()}, {"message", e.what()}}.dump() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    out << json{{"ok", false}, {"error", errc_name(Errc::IoFailure)}, {"message", e.what()}}.dump() << "\n";
    return 2;
  }
}

}  // namespace reframe::cli
