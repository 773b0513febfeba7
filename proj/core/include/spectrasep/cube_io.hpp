#pragma once

#include <cstdint>
#include <span>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectrasep/cube.hpp"

namespace spectrasep {

// SpecCube v1 container:
//   "SPECCUB1" | u32 LE header length | UTF-8 JSON header | f32 LE payload
// The header carries width, height, channels, wavelength_start_nm,
// wavelength_step_nm, calibration_state and layout ("bsq"). The payload is
// channel-major and must hold exactly width * height * channels values.
inline constexpr std::string_view kSpecCubeMagic = "SPECCUB1";

std::vector<std::uint8_t> encode_cube(const SpectralCube& cube);
SpectralCube decode_cube(std::span<const std::uint8_t> bytes);

void save_cube(const SpectralCube& cube, const std::filesystem::path& path);
SpectralCube load_cube(const std::filesystem::path& path);

// Annotation file: JSON array of {image_id, site, center_x, center_y, radius}.
nlohmann::json annotation_to_json(const RegionAnnotation& roi);
RegionAnnotation annotation_from_json(const nlohmann::json& j);
std::vector<RegionAnnotation> load_annotations(const std::filesystem::path& path);
void save_annotations(const std::vector<RegionAnnotation>& rois, const std::filesystem::path& path);

// 8-bit binary PGM (P5), 255 inside the mask.
void save_mask_pgm(const Mask& mask, const std::filesystem::path& path);
Mask load_mask_pgm(const std::filesystem::path& path);

// Whole-file helpers shared by the writers.
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_binary_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
nlohmann::json read_json_file(const std::filesystem::path& path);
// Pretty-printed (2-space indent) JSON with a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace spectrasep
