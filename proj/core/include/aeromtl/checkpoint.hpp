#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "aeromtl/model.hpp"

namespace aeromtl {

// Layout (all integers little-endian):
//   "MTLCKPT1"
//   u32 config length, UTF-8 config text
//   repeated: u32 name length, UTF-8 name, u8 rank, u32 dims[rank], f32 payload
//   u32 CRC32 of every preceding byte

inline constexpr char kCheckpointMagic[8] = {'M', 'T', 'L', 'C', 'K', 'P', 'T', '1'};

struct NamedTensor {
    std::string name;
    Shape shape;
    std::vector<float> values;
};

struct Checkpoint {
    std::string config_text;
    std::vector<NamedTensor> tensors;
};

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_checkpoint(const std::string& config_text, std::span<const Parameter> params);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Writes to a temporary sibling and renames it into place, so an
/// interrupted write never clobbers the previous checkpoint.
void write_checkpoint(const std::filesystem::path& path, const std::string& config_text, const MtlModel& model);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Copies tensors into the model by name; names and shapes must match exactly.
void load_parameters(MtlModel& model, const Checkpoint& checkpoint);

/// Atomic whole-file write used by checkpoints and other outputs.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace aeromtl
