// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint container, little-endian throughout:
//
//   "BGID" | u32 version | u64 meta_len | meta (JSON text) | u32 crc32(meta)
//   u32 n_tensors
//   per tensor: u16 name_len | name | u32 rank | u64 dims[rank]
//               | f32 payload[prod(dims)] | u32 crc32(payload)
//
// The metadata object always carries the "variant" key; everything else
// (label codec, scaler, training config) is free-form.
#pragma once

#include <cstdint>
#include <filesystem>
#include "json.hpp"

#include "bigat/model.hpp"

namespace bigat {

inline constexpr std::uint32_t kCheckpointVersion = 1;

nlohmann::json variant_to_json(const VariantSpec& spec);
VariantSpec variant_from_json(const nlohmann::json& j);

struct Checkpoint {
  ModelParams params;
  VariantSpec spec;
  nlohmann::json metadata;  // includes "variant"
};

/// Parameters are written as 32-bit floats; see round_to_storage().
void save_checkpoint(const ModelParams& params, const VariantSpec& spec,
                     const nlohmann::json& metadata, const std::filesystem::path& path);

/// Throws FormatError (bad magic / empty), VersionError, ChecksumError or
/// TruncatedError; FileError when the path cannot be opened.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace bigat
