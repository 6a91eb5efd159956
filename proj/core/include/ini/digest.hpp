#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace ini {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);

/// CRC-32 (IEEE 802.3 polynomial, as used by zlib/PNG).
std::uint32_t crc32(std::span<const unsigned char> bytes);

/// Reads a whole file as bytes. Throws ini::Error if it cannot be opened.
std::string read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::string_view bytes);

}  // namespace ini
