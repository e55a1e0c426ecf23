#pragma once

// Binary dataset files ("FDCE" container) and the JSON sidecar holding the
// scenario that produced them.
//
// Layout, little-endian:
//   magic "FDCE" | version u16 | n_samples u32 | n_rx u16 | n_tx u16 |
//   domain_tag u8 | split_tag u8 | carrier f64 | normalization_scale f64 |
//   seed u64
//   then per sample: scene_id u32 | is_los u8 | n_rx*n_tx x (re f64, im f64)

#include <filesystem>
#include <string>

#include "fdce/channel_sim.hpp"

namespace fdce {

inline constexpr std::uint16_t kDatasetFormatVersion = 1;

void write_dataset(const std::filesystem::path& path, const Dataset& d);
Dataset read_dataset(const std::filesystem::path& path);

std::string scenario_to_json(const ScenarioConfig& cfg);
ScenarioConfig scenario_from_json(const std::string& text);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view bytes);

}  // namespace fdce
