#pragma once

// Binary checkpoint container:
//
//   "NLMB" | u32 version | u32 section count
//   section table: u32 name length, name, u64 offset, u64 size, u64 checksum
//   section payloads
//
// Integers and doubles are little-endian; checksums are FNV-1a 64 over the
// payload bytes. Any mismatch or truncation raises LoadError.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "nlimb/harness/joint.hpp"

namespace nlimb {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::uint64_t fnv1a64(std::string_view bytes);

// Named byte sections; order in the file follows the map order.
using CheckpointSections = std::map<std::string, std::string>;

std::string encode_sections(const CheckpointSections& sections);
CheckpointSections decode_sections(std::string_view bytes);

std::string serialize_joint_state(const JointState& state);
JointState deserialize_joint_state(std::string_view bytes);

void save_checkpoint(const std::string& path, const JointState& state);
JointState load_checkpoint(const std::string& path);

}  // namespace nlimb
