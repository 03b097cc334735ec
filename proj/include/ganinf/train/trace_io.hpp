#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "ganinf/train/trainer.hpp"

namespace ganinf {

inline constexpr int kTraceFormatVersion = 1;

// Binary layouts (all little-endian):
//   step:   "GISTEP01" u64 t, u64 d, u64 n, f64 eta_G, f64 eta_D, u64 z_seed, f64[d] theta, u32[n] indices
//   params: "GIPARAM1" u64 d, f64[d]
std::vector<std::byte> encode_step(const StepRecord& rec);
StepRecord decode_step(std::span<const std::byte> bytes);
std::vector<std::byte> encode_params(std::span<const double> values);
std::vector<double> decode_params(std::span<const std::byte> bytes);

void write_bytes(const std::filesystem::path& file, std::span<const std::byte> bytes);
std::vector<std::byte> read_bytes(const std::filesystem::path& file);

void save_params(const std::filesystem::path& file, std::span<const double> values);
std::vector<double> load_params(const std::filesystem::path& file);

/// SHA-256 over every encoded step followed by the encoded final parameters.
std::string trace_checksum(const TrainingTrace& trace);

nlohmann::json to_json(const GanArchitecture& arch);
GanArchitecture architecture_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainingConfig& cfg);
TrainingConfig training_from_json(const nlohmann::json& j);

/// Directory with manifest.json, step_<t>.bin per step and final.bin.
void save_trace(const TrainingTrace& trace, const std::filesystem::path& dir);
/// Verifies the manifest checksum and fingerprint; throws TraceError on any inconsistency.
TrainingTrace load_trace(const std::filesystem::path& dir);

}  // namespace ganinf
