#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "ini/nets/classifier.hpp"

namespace ini::nets {

struct CheckpointMetadata {
  std::string mode = "vanilla";
  double benign_accuracy = 0.0;
  std::size_t epoch = 0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double beta = 0.0;
  double threshold = 0.0;
  bool threshold_met = true;
};

struct Checkpoint {
  Classifier model;
  std::string config_digest;
  CheckpointMetadata metadata;
};

// File layout (all integers little-endian):
//
//   "INI1"                      4 bytes magic
//   header_length               u32
//   header                      header_length bytes of JSON text: format,
//                               architecture {layer_dims, activation},
//                               architecture_digest, seed, config_digest,
//                               param_count, metadata
//   payload                     param_count float32 values, segment order
//   crc32(payload)              u32
//
// Parameters are written as float32. Models produced by initialization and
// training hold float32-representable values, so their round trip is exact.
std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
/// Throws TruncatedFileError, ChecksumError, ArchitectureMismatchError or
/// FormatError; never returns a partially filled model.
Checkpoint load_checkpoint(const std::string& path);

/// SHA-256 of the architecture descriptor, stored in the header.
std::string architecture_digest(const Architecture& architecture);

}  // namespace ini::nets
