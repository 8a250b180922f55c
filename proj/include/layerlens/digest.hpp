#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace layerlens {

// FNV-1a 64-bit. Used for config digests, manifest artifact digests and
// deterministic string -> seed derivation.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64(std::string_view s);

// FNV-1a over a file's raw bytes. Throws DataError if the file cannot be read.
std::uint64_t fnv1a64_file(const std::filesystem::path& path);

// Lowercase hex rendering, zero padded to 16 digits.
std::string hex64(std::uint64_t v);

// CRC-32 (reflected polynomial 0xEDB88320, init/final xor 0xFFFFFFFF), the
// same convention zlib uses. Guards LTRC trace payloads.
std::uint32_t crc32(const void* data, std::size_t len);
std::uint32_t crc32_update(std::uint32_t crc, const void* data, std::size_t len);

}  // namespace layerlens
