#ifndef REFRAME_IO_HPP
#define REFRAME_IO_HPP

// On-disk formats.
//
// LRTF tensor container, all integers little-endian:
//   offset 0  "LRTF"                 4 bytes
//   offset 4  version = 1            u16
//   offset 6  dtype (0 f32, 1 u8)    u8
//   offset 7  ndim                   u8
//   offset 8  dims                   ndim x u32
//   ...       payload                row-major, f32 little-endian or u8
//   ...       CRC-32 (IEEE) of the payload bytes, u32
//
// Trajectories use the RealEstate10K text format (see trajectory.hpp) or a
// JSON document {"frames": [{"timestamp", "rotation" (9, row-major),
// "translation" (3)}]}. Images are binary PPM (P6) and PGM (P5).

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "reframe/alignment.hpp"
#include "reframe/trajectory.hpp"
#include "reframe/video.hpp"

namespace reframe {

enum class DType : std::uint8_t { F32 = 0, U8 = 1 };

struct TensorData {
  std::vector<std::uint32_t> dims;
  std::variant<std::vector<float>, std::vector<std::uint8_t>> values;

  DType dtype() const { return values.index() == 0 ? DType::F32 : DType::U8; }
  std::size_t element_count() const;
  const std::vector<float>& f32() const { return std::get<std::vector<float>>(values); }
  const std::vector<std::uint8_t>& u8() const { return std::get<std::vector<std::uint8_t>>(values); }
};

std::uint32_t crc32_ieee(const std::uint8_t* data, std::size_t size);

std::vector<std::uint8_t> encode_tensor(const TensorData& tensor);
TensorData decode_tensor(const std::vector<std::uint8_t>& bytes);

void write_tensor(const std::filesystem::path& path, const TensorData& tensor);
TensorData read_tensor(const std::filesystem::path& path);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// Conversions between tensors and the library's types. Videos are stored as
// frames x channels x height x width f32, masks as frames x height x width
// u8, point maps as frames x height x width x 3 f32.
TensorData to_tensor(const LatentVideo& z);
TensorData to_tensor(const PixelVideo& x);
TensorData to_tensor(const OcclusionMask& mask);
TensorData pointmaps_tensor(const std::vector<PointMap>& maps);
TensorData masks_tensor(const std::vector<PixelMask>& masks, int height, int width);
TensorData scalar_maps_tensor(const std::vector<Eigen::ArrayXd>& maps, int height, int width);

LatentVideo latent_from_tensor(const TensorData& t);
PixelVideo pixels_from_tensor(const TensorData& t);
OcclusionMask mask_from_tensor(const TensorData& t);
std::vector<PointMap> pointmaps_from_tensor(const TensorData& t);
std::vector<PixelMask> masks_from_tensor(const TensorData& t);
std::vector<Eigen::ArrayXd> scalar_maps_from_tensor(const TensorData& t);

/// Edge observations as three tensors under `dir`: edges.lrtf (E x 2 f32
/// frame indices), edge_points.lrtf (E x 2 x H x W x 3), edge_confidence.lrtf
/// (E x 2 x H x W). Index 0 along the second axis is the reference view.
void write_observations(const std::filesystem::path& dir, const std::vector<EdgeObservation>& observations);
std::vector<EdgeObservation> read_observations(const std::filesystem::path& dir);

/// RealEstate10K text; 9 digits after the decimal point per value. Frames without
/// intrinsics are written with focal length 1 (normalized) and a centered
/// principal point.
std::string serialize_realestate(const Trajectory& t, int width, int height,
                                 const std::string& source_id = "reframe");

std::string trajectory_to_json(const Trajectory& t);
Trajectory trajectory_from_json(const std::string& text);

/// JSON when the extension is .json, RealEstate10K text otherwise.
Trajectory read_trajectory_file(const std::filesystem::path& path, int width, int height);

/// Frame `frame` as 8-bit P6 / P5 (values clamped to [0, 1], rounded).
std::string encode_ppm(const PixelVideo& video, int frame);
std::string encode_pgm(const OcclusionMask& mask, int frame);

}  // namespace reframe

#endif  // REFRAME_IO_HPP
