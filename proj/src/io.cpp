#include "reframe/io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"

namespace reframe {

namespace {

constexpr char kMagic[4] = {'L', 'R', 'T', 'F'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}

}  // namespace

std::size_t TensorData::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::uint32_t crc32_ieee(const std::uint8_t* data, std::size_t size) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (size > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_tensor(const TensorData& tensor) {
  if (tensor.dims.size() > 255) throw Error(Errc::ShapeMismatch, "at most 255 dimensions");
  const std::size_t count = tensor.element_count();
  const std::size_t stored = tensor.dtype() == DType::F32 ? tensor.f32().size() : tensor.u8().size();
  if (stored != count) throw Error(Errc::ShapeMismatch, "payload length does not match dims");

  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u16(out, kVersion);
  out.push_back(static_cast<std::uint8_t>(tensor.dtype()));
  out.push_back(static_cast<std::uint8_t>(tensor.dims.size()));
  for (auto d : tensor.dims) put_u32(out, d);
  const std::size_t payload_start = out.size();
  if (tensor.dtype() == DType::F32) {
    out.reserve(out.size() + count * 4 + 4);
    for (float v : tensor.f32()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  } else {
    out.insert(out.end(), tensor.u8().begin(), tensor.u8().end());
  }
  put_u32(out, crc32_ieee(out.data() + payload_start, out.size() - payload_start));
  return out;
}

TensorData decode_tensor(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || !std::equal(kMagic, kMagic + 4, bytes.begin())) {
    throw Error(Errc::BadMagic, "not an LRTF container");
  }
  if (bytes.size() < 8) throw Error(Errc::TruncatedFile, "header cut short");
  const std::uint16_t version = static_cast<std::uint16_t>(bytes[4] | (bytes[5] << 8));
  if (version != kVersion) throw Error(Errc::UnsupportedVersion, "version " + std::to_string(version), {version});
  const std::uint8_t dtype = bytes[6];
  if (dtype > 1) throw Error(Errc::UnsupportedDtype, "dtype code " + std::to_string(dtype), {dtype});
  const std::size_t ndim = bytes[7];
  std::size_t pos = 8;
  if (bytes.size() < pos + 4 * ndim) throw Error(Errc::TruncatedFile, "dims cut short");
  TensorData t;
  for (std::size_t i = 0; i < ndim; ++i, pos += 4) t.dims.push_back(get_u32(bytes.data() + pos));
  // Bounded by the file size so hostile dims cannot overflow the product.
  std::size_t count = 1;
  if (std::find(t.dims.begin(), t.dims.end(), 0u) != t.dims.end()) {
    count = 0;
  } else {
    for (auto d : t.dims) {
      count *= d;
      if (count > bytes.size()) throw Error(Errc::TruncatedFile, "dims exceed the file size");
    }
  }
  const std::size_t width = dtype == 0 ? 4 : 1;
  const std::size_t payload = count * width;
  if (bytes.size() < pos + payload + 4) throw Error(Errc::TruncatedFile, "payload cut short");
  if (bytes.size() > pos + payload + 4) throw Error(Errc::IoFailure, "trailing bytes after checksum");
  const std::uint32_t stored_crc = get_u32(bytes.data() + pos + payload);
  if (crc32_ieee(bytes.data() + pos, payload) != stored_crc) throw Error(Errc::BadCRC, "payload checksum mismatch");
  if (dtype == 0) {
    std::vector<float> values(count);
    for (std::size_t i = 0; i < count; ++i) values[i] = std::bit_cast<float>(get_u32(bytes.data() + pos + 4 * i));
    t.values = std::move(values);
  } else {
    t.values = std::vector<std::uint8_t>(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                         bytes.begin() + static_cast<std::ptrdiff_t>(pos + payload));
  }
  return t;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoFailure, "short write to " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  return {bytes.begin(), bytes.end()};
}

void write_tensor(const std::filesystem::path& path, const TensorData& tensor) {
  write_bytes(path, encode_tensor(tensor));
}

TensorData read_tensor(const std::filesystem::path& path) { return decode_tensor(read_bytes(path)); }

namespace {

template <typename Tag>
TensorData video_tensor(const VideoTensor<double, Tag>& v) {
  TensorData t;
  t.dims = {std::uint32_t(v.frames()), std::uint32_t(v.channels()), std::uint32_t(v.height()),
            std::uint32_t(v.width())};
  std::vector<float> values(static_cast<std::size_t>(v.array().size()));
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<float>(v.array()[Eigen::Index(i)]);
  t.values = std::move(values);
  return t;
}

template <typename Video>
Video video_from(const TensorData& t) {
  if (t.dtype() != DType::F32 || t.dims.size() != 4) throw Error(Errc::ShapeMismatch, "expected a 4-d f32 tensor");
  Video v(int(t.dims[0]), int(t.dims[1]), int(t.dims[2]), int(t.dims[3]));
  for (std::size_t i = 0; i < t.f32().size(); ++i) v.array()[Eigen::Index(i)] = t.f32()[i];
  return v;
}

}  // namespace

TensorData to_tensor(const LatentVideo& z) { return video_tensor(z); }
TensorData to_tensor(const PixelVideo& x) { return video_tensor(x); }

TensorData to_tensor(const OcclusionMask& mask) {
  return {{std::uint32_t(mask.frames()), std::uint32_t(mask.height()), std::uint32_t(mask.width())}, mask.values()};
}

LatentVideo latent_from_tensor(const TensorData& t) { return video_from<LatentVideo>(t); }
PixelVideo pixels_from_tensor(const TensorData& t) { return video_from<PixelVideo>(t); }

OcclusionMask mask_from_tensor(const TensorData& t) {
  if (t.dtype() != DType::U8 || t.dims.size() != 3) throw Error(Errc::ShapeMismatch, "expected a 3-d u8 tensor");
  OcclusionMask mask(int(t.dims[0]), int(t.dims[1]), int(t.dims[2]));
  mask.values() = t.u8();
  return mask;
}

TensorData pointmaps_tensor(const std::vector<PointMap>& maps) {
  if (maps.empty()) throw Error(Errc::ShapeMismatch, "no point maps");
  const int h = maps[0].height, w = maps[0].width;
  std::vector<float> values;
  values.reserve(maps.size() * std::size_t(h) * w * 3);
  for (const auto& m : maps) {
    if (m.height != h || m.width != w) throw Error(Errc::ShapeMismatch, "point map sizes differ");
    for (Eigen::Index i = 0; i < m.points.size(); ++i) values.push_back(static_cast<float>(m.points.data()[i]));
  }
  return {{std::uint32_t(maps.size()), std::uint32_t(h), std::uint32_t(w), 3u}, std::move(values)};
}

std::vector<PointMap> pointmaps_from_tensor(const TensorData& t) {
  if (t.dtype() != DType::F32 || t.dims.size() != 4 || t.dims[3] != 3) {
    throw Error(Errc::ShapeMismatch, "expected an F x H x W x 3 f32 tensor");
  }
  std::vector<PointMap> maps;
  const std::size_t block = std::size_t(t.dims[1]) * t.dims[2] * 3;
  for (std::uint32_t f = 0; f < t.dims[0]; ++f) {
    PointMap m(int(t.dims[1]), int(t.dims[2]));
    for (std::size_t i = 0; i < block; ++i) m.points.data()[i] = t.f32()[f * block + i];
    maps.push_back(std::move(m));
  }
  return maps;
}

TensorData masks_tensor(const std::vector<PixelMask>& masks, int height, int width) {
  std::vector<std::uint8_t> values;
  for (const auto& m : masks) {
    if (m.size() != Eigen::Index(height) * width) throw Error(Errc::ShapeMismatch, "mask size differs");
    values.insert(values.end(), m.data(), m.data() + m.size());
  }
  return {{std::uint32_t(masks.size()), std::uint32_t(height), std::uint32_t(width)}, std::move(values)};
}

std::vector<PixelMask> masks_from_tensor(const TensorData& t) {
  if (t.dtype() != DType::U8 || t.dims.size() != 3) throw Error(Errc::ShapeMismatch, "expected a 3-d u8 tensor");
  std::vector<PixelMask> masks;
  const std::size_t block = std::size_t(t.dims[1]) * t.dims[2];
  for (std::uint32_t f = 0; f < t.dims[0]; ++f) {
    PixelMask m(static_cast<Eigen::Index>(block));
    std::copy_n(t.u8().begin() + static_cast<std::ptrdiff_t>(f * block), block, m.data());
    masks.push_back(std::move(m));
  }
  return masks;
}

TensorData scalar_maps_tensor(const std::vector<Eigen::ArrayXd>& maps, int height, int width) {
  std::vector<float> values;
  for (const auto& m : maps) {
    if (m.size() != Eigen::Index(height) * width) throw Error(Errc::ShapeMismatch, "map size differs");
    for (Eigen::Index i = 0; i < m.size(); ++i) values.push_back(static_cast<float>(m[i]));
  }
  return {{std::uint32_t(maps.size()), std::uint32_t(height), std::uint32_t(width)}, std::move(values)};
}

std::vector<Eigen::ArrayXd> scalar_maps_from_tensor(const TensorData& t) {
  if (t.dtype() != DType::F32 || t.dims.size() != 3) throw Error(Errc::ShapeMismatch, "expected a 3-d f32 tensor");
  std::vector<Eigen::ArrayXd> maps;
  const std::size_t block = std::size_t(t.dims[1]) * t.dims[2];
  for (std::uint32_t f = 0; f < t.dims[0]; ++f) {
    Eigen::ArrayXd m(static_cast<Eigen::Index>(block));
    for (std::size_t i = 0; i < block; ++i) m[Eigen::Index(i)] = t.f32()[f * block + i];
    maps.push_back(std::move(m));
  }
  return maps;
}

void write_observations(const std::filesystem::path& dir, const std::vector<EdgeObservation>& observations) {
  if (observations.empty()) throw Error(Errc::ShapeMismatch, "no observations");
  const int h = observations[0].pointmap_ref.height, w = observations[0].pointmap_ref.width;
  std::vector<float> edges;
  std::vector<PointMap> points;
  std::vector<Eigen::ArrayXd> confidence;
  for (const auto& o : observations) {
    edges.push_back(float(o.ref_frame));
    edges.push_back(float(o.src_frame));
    points.push_back(o.pointmap_ref);
    points.push_back(o.pointmap_src);
    confidence.push_back(o.confidence_ref);
    confidence.push_back(o.confidence_src);
  }
  const auto e = std::uint32_t(observations.size());
  write_tensor(dir / "edges.lrtf", TensorData{{e, 2u}, std::move(edges)});
  TensorData p = pointmaps_tensor(points);
  p.dims = {e, 2u, std::uint32_t(h), std::uint32_t(w), 3u};
  write_tensor(dir / "edge_points.lrtf", p);
  TensorData c = scalar_maps_tensor(confidence, h, w);
  c.dims = {e, 2u, std::uint32_t(h), std::uint32_t(w)};
  write_tensor(dir / "edge_confidence.lrtf", c);
}

std::vector<EdgeObservation> read_observations(const std::filesystem::path& dir) {
  const TensorData edges = read_tensor(dir / "edges.lrtf");
  TensorData points = read_tensor(dir / "edge_points.lrtf");
  TensorData confidence = read_tensor(dir / "edge_confidence.lrtf");
  if (edges.dtype() != DType::F32 || edges.dims.size() != 2 || edges.dims[1] != 2 || points.dims.size() != 5 ||
      confidence.dims.size() != 4 || points.dims[0] != edges.dims[0] || confidence.dims[0] != edges.dims[0] ||
      points.dims[1] != 2 || confidence.dims[1] != 2) {
    throw Error(Errc::InconsistentShapes, "observation tensors disagree");
  }
  const std::uint32_t e = edges.dims[0];
  points.dims = {2 * e, points.dims[2], points.dims[3], points.dims[4]};
  confidence.dims = {2 * e, confidence.dims[2], confidence.dims[3]};
  const auto maps = pointmaps_from_tensor(points);
  const auto conf = scalar_maps_from_tensor(confidence);
  std::vector<EdgeObservation> out;
  for (std::uint32_t i = 0; i < e; ++i) {
    EdgeObservation o;
    o.ref_frame = static_cast<int>(edges.f32()[2 * i]);
    o.src_frame = static_cast<int>(edges.f32()[2 * i + 1]);
    o.pointmap_ref = maps[2 * i];
    o.pointmap_src = maps[2 * i + 1];
    o.confidence_ref = conf[2 * i];
    o.confidence_src = conf[2 * i + 1];
    out.push_back(std::move(o));
  }
  return out;
}

namespace {

// Nine digits after the decimal point, trailing zeros trimmed: absolute
// round-trip error stays below 1e-9 for every magnitude.
void append_number(std::string& out, double v) {
  char buf[400];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 9);
  std::string s(buf, res.ptr);
  s.erase(s.find_last_not_of('0') + 1);
  if (s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  out += s;
}

}  // namespace

std::string serialize_realestate(const Trajectory& t, int width, int height, const std::string& source_id) {
  std::string out = source_id + "\n";
  for (const auto& f : t) {
    out += std::to_string(f.timestamp);
    double k[4] = {1.0, double(width) / double(height), 0.5, 0.5};
    if (f.intrinsics) {
      k[0] = f.intrinsics->fx / width;
      k[1] = f.intrinsics->fy / height;
      k[2] = f.intrinsics->cx / width;
      k[3] = f.intrinsics->cy / height;
    }
    for (double v : k) {
      out += ' ';
      append_number(out, v);
    }
    out += " 0 0";
    const auto m = f.pose.matrix();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) {
        out += ' ';
        append_number(out, m(r, c));
      }
    }
    out += '\n';
  }
  return out;
}

std::string trajectory_to_json(const Trajectory& t) {
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& f : t) {
    const auto& r = f.pose.rotation();
    const auto& tr = f.pose.translation();
    frames.push_back({{"timestamp", f.timestamp},
                      {"rotation", {r(0, 0), r(0, 1), r(0, 2), r(1, 0), r(1, 1), r(1, 2), r(2, 0), r(2, 1), r(2, 2)}},
                      {"translation", {tr.x(), tr.y(), tr.z()}}});
  }
  return nlohmann::json{{"frames", frames}}.dump(2) + "\n";
}

Trajectory trajectory_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedLine, std::string("invalid trajectory JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("frames") || !doc["frames"].is_array()) {
    throw Error(Errc::MalformedLine, "trajectory JSON needs a 'frames' array");
  }
  std::vector<TrajectoryFrame> frames;
  std::int64_t index = 0;
  for (const auto& f : doc["frames"]) {
    try {
      const auto rot = f.at("rotation").get<std::vector<double>>();
      const auto tr = f.at("translation").get<std::vector<double>>();
      if (rot.size() != 9 || tr.size() != 3) throw Error(Errc::MalformedLine, "rotation needs 9 and translation 3 values", {index});
      Eigen::Matrix3d r;
      r << rot[0], rot[1], rot[2], rot[3], rot[4], rot[5], rot[6], rot[7], rot[8];
      const std::int64_t ts = f.contains("timestamp") ? f["timestamp"].get<std::int64_t>() : index;
      frames.push_back({ts, Posed(r, Eigen::Vector3d(tr[0], tr[1], tr[2])), {}});
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::MalformedLine, std::string("frame entry: ") + e.what(), {index});
    }
    ++index;
  }
  if (frames.empty()) throw Error(Errc::EmptyTrajectory, "no frames");
  return Trajectory(std::move(frames));
}

Trajectory read_trajectory_file(const std::filesystem::path& path, int width, int height) {
  const std::string text = read_text(path);
  if (path.extension() == ".json") return trajectory_from_json(text);
  return parse_realestate(text, width, height);
}

namespace {

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

std::string encode_ppm(const PixelVideo& video, int frame) {
  if (frame < 0 || frame >= video.frames() || video.channels() != 3) {
    throw Error(Errc::FrameOutOfRange, "frame out of range or not RGB", {frame});
  }
  std::string out = "P6\n" + std::to_string(video.width()) + " " + std::to_string(video.height()) + "\n255\n";
  for (int y = 0; y < video.height(); ++y) {
    for (int x = 0; x < video.width(); ++x) {
      for (int c = 0; c < 3; ++c) out += static_cast<char>(quantize(video(frame, c, y, x)));
    }
  }
  return out;
}

std::string encode_pgm(const OcclusionMask& mask, int frame) {
  if (frame < 0 || frame >= mask.frames()) throw Error(Errc::FrameOutOfRange, "frame out of range", {frame});
  std::string out = "P5\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) + "\n255\n";
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) out += static_cast<char>(mask(frame, y, x) ? 255 : 0);
  }
  return out;
}

}  // namespace reframe
