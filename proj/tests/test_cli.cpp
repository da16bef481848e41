#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"
#include "reframe/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
  json summary() const { return json::parse(out.substr(out.rfind('\n', out.size() - 2) + 1)); }
};

Outcome call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = reframe::cli::main(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("reframe_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> small_run(const fs::path& out) {
  return {"run", "--frames", "4", "--width", "16", "--height", "16", "--out", out.string()};
}

json stages(const fs::path& out) {
  return json::parse(reframe::read_text(out / "report.json")).at("stages");
}

}  // namespace

TEST_CASE("every subcommand answers --help") {
  for (const char* sub : {"synth", "trajgen", "align", "reframe", "run", "eval"}) {
    CAPTURE(sub);
    const auto r = call({sub, "--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("--") != std::string::npos);
  }
  CHECK(call({}).code == 1);
  CHECK(call({"bogus"}).code == 1);
}

TEST_CASE("eval of a trajectory against itself is zero") {
  const auto dir = scratch_dir("eval");
  const auto r = call({"trajgen", "--motion", "orbit-ccw", "--magnitude", "0.5", "--orbit-radius", "3", "--frames", "6", "--out", dir.string()});
  REQUIRE(r.code == 0);
  const std::string file = r.summary().at("file");
  const auto e = call({"eval", "--est", file, "--gt", file});
  REQUIRE(e.code == 0);
  CHECK(e.summary().at("rot_error").get<double>() == 0.0);
  CHECK(e.summary().at("trans_error").get<double>() < 1e-12);
}

TEST_CASE("synth then align then reframe from a bundle") {
  const auto dir = scratch_dir("bundle");
  const auto bundle = (dir / "bundle").string();
  REQUIRE(call({"synth", "--frames", "4", "--width", "16", "--height", "16", "--out", bundle}).code == 0);
  const auto a = call({"align", "--bundle", bundle, "--alignment-steps", "20", "--out", (dir / "align").string()});
  REQUIRE(a.code == 0);
  CHECK(fs::exists(dir / "align" / "poses.txt"));
  const auto f = call({"reframe", "--bundle", bundle, "--out", (dir / "reframe").string()});
  REQUIRE(f.code == 0);
  CHECK(f.summary().at("coverage").get<double>() > 0.5);
  CHECK(fs::exists(dir / "reframe" / "reframed.lrtf"));
}

TEST_CASE("run is byte-for-byte reproducible") {
  const auto a = scratch_dir("run_a"), b = scratch_dir("run_b");
  REQUIRE(call(small_run(a)).code == 0);
  REQUIRE(call(small_run(b)).code == 0);
  for (const char* name : {"video.lrtf", "latent.lrtf", "mask.lrtf", "target_poses.txt", "report.json"}) {
    CAPTURE(name);
    CHECK(reframe::read_bytes(a / name) == reframe::read_bytes(b / name));
  }
}

TEST_CASE("ablation flags change only the stages they control") {
  // The oracle lands on its target to float precision whatever the schedule,
  // so the toy denoiser is what exposes the sampling stages.
  auto toy_run = [](const std::string& name, std::vector<std::string> extra) {
    const auto dir = scratch_dir(name);
    auto args = small_run(dir);
    args.insert(args.end(), {"--denoiser", "toy"});
    args.insert(args.end(), extra.begin(), extra.end());
    REQUIRE(call(args).code == 0);
    return stages(dir);
  };
  const json ref = toy_run("abl_base", {});

  json s = toy_run("abl_offset", {"--noise-offset", "0"});
  CHECK(s["initial_denoise"] == ref["initial_denoise"]);
  CHECK(s["reframe"] == ref["reframe"]);
  CHECK(s["rehabilitate"] != ref["rehabilitate"]);

  s = toy_run("abl_warp", {"--warp-step", "12"});
  CHECK(s["initial_denoise"] != ref["initial_denoise"]);
  CHECK(s["rehabilitate"] != ref["rehabilitate"]);

  const json dynamic_ref = toy_run("abl_dynamic", {"--kind", "dynamic"});
  s = toy_run("abl_static", {"--kind", "dynamic", "--mode", "time-static"});
  CHECK(s["initial_denoise"] == dynamic_ref["initial_denoise"]);
  CHECK(s["reframe"] != dynamic_ref["reframe"]);
  CHECK(s["rehabilitate"] != dynamic_ref["rehabilitate"]);
}

TEST_CASE("config files and error exits") {
  const auto dir = scratch_dir("errors");
  reframe::write_text(dir / "bad.json", "{\"frames\": 4, \"colour\": 1}");
  const auto unknown = call({"--config", (dir / "bad.json").string(), "synth", "--out", (dir / "x").string()});
  CHECK(unknown.code == 1);
  CHECK(unknown.summary().at("ok") == false);

  reframe::write_text(dir / "good.json", "{\"frames\": 3, \"width\": 16, \"height\": 16}");
  const auto good = call({"--config", (dir / "good.json").string(), "synth", "--out", (dir / "b").string()});
  REQUIRE(good.code == 0);
  CHECK(good.summary().at("frames") == 3);

  const auto video = dir / "b" / "frames.lrtf";
  auto bytes = reframe::read_bytes(video);
  bytes[bytes.size() / 2] ^= 0x01;
  reframe::write_bytes(dir / "corrupt.lrtf", bytes);
  const auto crc = call({"eval", "--video", (dir / "corrupt.lrtf").string(), "--reference", video.string()});
  CHECK(crc.code == 2);
  CHECK(crc.summary().at("error") == "BadCRC");

  CHECK(call({"run", "--warp-step", "40", "--frames", "4", "--width", "16", "--height", "16", "--out",
              (dir / "r").string()})
            .code == 2);
}
