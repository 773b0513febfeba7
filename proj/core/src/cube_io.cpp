#include "spectrasep/cube_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "spectrasep/error.hpp"

namespace spectrasep {

namespace {

constexpr std::size_t kMagicSize = 8;
constexpr std::size_t kLengthSize = 4;
constexpr std::size_t kPreambleSize = kMagicSize + kLengthSize;

std::uint32_t load_u32_le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_u32_le(std::uint8_t* p, std::uint32_t v) {
  p[0] = static_cast<std::uint8_t>(v);
  p[1] = static_cast<std::uint8_t>(v >> 8);
  p[2] = static_cast<std::uint8_t>(v >> 16);
  p[3] = static_cast<std::uint8_t>(v >> 24);
}

std::size_t require_size(const nlohmann::json& header, const char* key) {
  if (!header.contains(key) || !header[key].is_number_unsigned()) {
    throw FormatError(std::string("SpecCube header: '") + key + "' must be a non-negative integer (offset " +
                      std::to_string(kPreambleSize) + ")");
  }
  return header[key].get<std::size_t>();
}

double require_number(const nlohmann::json& header, const char* key) {
  if (!header.contains(key) || !header[key].is_number()) {
    throw FormatError(std::string("SpecCube header: '") + key + "' must be a number (offset " +
                      std::to_string(kPreambleSize) + ")");
  }
  return header[key].get<double>();
}

}  // namespace

std::vector<std::uint8_t> encode_cube(const SpectralCube& cube) {
  nlohmann::json header = {
      {"width", cube.width()},
      {"height", cube.height()},
      {"channels", cube.channels()},
      {"wavelength_start_nm", cube.axis().start_nm},
      {"wavelength_step_nm", cube.axis().step_nm},
      {"calibration_state", to_string(cube.state())},
      {"layout", "bsq"},
  };
  const std::string text = header.dump();
  const std::size_t payload = cube.size() * sizeof(float);

  std::vector<std::uint8_t> bytes(kPreambleSize + text.size() + payload);
  std::memcpy(bytes.data(), kSpecCubeMagic.data(), kMagicSize);
  store_u32_le(bytes.data() + kMagicSize, static_cast<std::uint32_t>(text.size()));
  std::memcpy(bytes.data() + kPreambleSize, text.data(), text.size());

  std::uint8_t* out = bytes.data() + kPreambleSize + text.size();
  for (float v : cube.values()) {
    auto bits = std::bit_cast<std::uint32_t>(v);
    store_u32_le(out, bits);
    out += 4;
  }
  return bytes;
}

SpectralCube decode_cube(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPreambleSize ||
      std::memcmp(bytes.data(), kSpecCubeMagic.data(), kMagicSize) != 0) {
    throw FormatError("SpecCube: bad magic at offset 0 (expected \"SPECCUB1\")");
  }
  const std::uint32_t header_len = load_u32_le(bytes.data() + kMagicSize);
  if (kPreambleSize + static_cast<std::size_t>(header_len) > bytes.size()) {
    throw FormatError("SpecCube: header length " + std::to_string(header_len) +
                      " at offset 8 exceeds file size " + std::to_string(bytes.size()));
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + kPreambleSize,
                                   bytes.begin() + kPreambleSize + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("SpecCube: malformed JSON header at offset 12: " + std::string(e.what()));
  }
  if (!header.is_object()) throw FormatError("SpecCube: header at offset 12 is not a JSON object");

  const std::size_t width = require_size(header, "width");
  const std::size_t height = require_size(header, "height");
  const std::size_t channels = require_size(header, "channels");
  SpectralAxis axis{require_number(header, "wavelength_start_nm"),
                    require_number(header, "wavelength_step_nm")};
  if (!header.contains("calibration_state") || !header["calibration_state"].is_string()) {
    throw FormatError("SpecCube header: 'calibration_state' must be a string (offset 12)");
  }
  const CalibrationState state = parse_calibration_state(header["calibration_state"].get<std::string>());
  if (header.contains("layout") && header["layout"] != "bsq") {
    throw FormatError("SpecCube header: unsupported layout " + header["layout"].dump() + " (offset 12)");
  }

  const std::size_t payload_offset = kPreambleSize + header_len;
  const std::size_t count = width * height * channels;
  const std::size_t payload_size = bytes.size() - payload_offset;
  if (payload_size != count * sizeof(float)) {
    throw FormatError("SpecCube: payload at offset " + std::to_string(payload_offset) + " holds " +
                      std::to_string(payload_size) + " bytes, header declares " +
                      std::to_string(count * sizeof(float)));
  }

  std::vector<float> values(count);
  const std::uint8_t* in = bytes.data() + payload_offset;
  for (std::size_t i = 0; i < count; ++i, in += 4) {
    const float v = std::bit_cast<float>(load_u32_le(in));
    if (!std::isfinite(v)) {
      throw FormatError("SpecCube: non-finite value at offset " +
                        std::to_string(payload_offset + i * sizeof(float)));
    }
    values[i] = v;
  }
  return SpectralCube(width, height, channels, axis, state, std::move(values));
}

void save_cube(const SpectralCube& cube, const std::filesystem::path& path) {
  write_binary_file(path, encode_cube(cube));
}

SpectralCube load_cube(const std::filesystem::path& path) {
  try {
    return decode_cube(read_binary_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

nlohmann::json annotation_to_json(const RegionAnnotation& roi) {
  return {{"image_id", roi.image_id},
          {"site", to_string(roi.site)},
          {"center_x", roi.center_x},
          {"center_y", roi.center_y},
          {"radius", roi.radius}};
}

RegionAnnotation annotation_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw AnnotationError("annotation must be a JSON object");
  RegionAnnotation roi;
  try {
    roi.image_id = j.at("image_id").get<std::string>();
    roi.site = parse_site(j.at("site").get<std::string>());
    roi.center_x = j.at("center_x").get<double>();
    roi.center_y = j.at("center_y").get<double>();
    roi.radius = j.contains("radius") ? j["radius"].get<double>() : default_radius(roi.site);
  } catch (const nlohmann::json::exception& e) {
    throw AnnotationError("annotation: " + std::string(e.what()));
  }
  if (!(roi.radius > 0.0)) throw AnnotationError("annotation '" + roi.image_id + "': radius must be positive");
  return roi;
}

std::vector<RegionAnnotation> load_annotations(const std::filesystem::path& path) {
  const nlohmann::json j = read_json_file(path);
  if (!j.is_array()) throw AnnotationError(path.string() + ": expected a JSON array of annotations");
  std::vector<RegionAnnotation> rois;
  rois.reserve(j.size());
  for (const auto& item : j) rois.push_back(annotation_from_json(item));
  return rois;
}

void save_annotations(const std::vector<RegionAnnotation>& rois, const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& roi : rois) j.push_back(annotation_to_json(roi));
  write_json_file(path, j);
}

void save_mask_pgm(const Mask& mask, const std::filesystem::path& path) {
  std::string header = "P5\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  for (auto bit : mask.bits()) bytes.push_back(bit ? 255 : 0);
  write_binary_file(path, bytes);
}

Mask load_mask_pgm(const std::filesystem::path& path) {
  const auto bytes = read_binary_file(path);
  std::string text(bytes.begin(), bytes.end());
  std::istringstream in(text);
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || maxval != 255 || !in) throw FormatError(path.string() + ": not an 8-bit P5 PGM");
  in.get();
  const auto offset = static_cast<std::size_t>(in.tellg());
  if (bytes.size() - offset != w * h) throw FormatError(path.string() + ": PGM payload size mismatch");
  Mask mask(w, h);
  for (std::size_t i = 0; i < w * h; ++i) mask.set(i % w, i / w, bytes[offset + i] != 0);
  return mask;
}

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::uint8_t> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw Error("read failed: " + path.string());
  return bytes;
}

void write_binary_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  const auto bytes = read_binary_file(path);
  return std::string(bytes.begin(), bytes.end());
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  write_binary_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace spectrasep
