#pragma once

#include "storeboard/star_model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace storeboard {

// Binary columnar snapshot of a StarSchema.
//
//   "SBRD" | u32 version | u64 directory length | directory | data | u64 checksum
//
// The directory holds metadata, relationships and, per table, the column
// list with (kind, offset, length, dictionary size) into the data section.
// All integers and doubles are little-endian. The trailing checksum is
// FNV-1a 64 over every preceding byte. Serialization is deterministic:
// identical schemas produce identical bytes.
inline constexpr std::uint32_t kSnapshotVersion = 1;

std::string serialize_snapshot(const StarSchema& schema);
StarSchema deserialize_snapshot(std::string_view bytes); // throws SnapshotError

void write_snapshot(const StarSchema& schema, const std::filesystem::path& path);
StarSchema read_snapshot(const std::filesystem::path& path); // throws FileNotFound, SnapshotError

std::uint64_t fnv1a64(std::string_view bytes);

} // namespace storeboard
