#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "layerlens/errors.hpp"
#include "layerlens/tensor.hpp"

namespace layerlens {

// All per-layer hidden states for one input: the central exchange object.
// hidden[i-1] holds layer i (layers are 1-based throughout), each entry an
// N x D token matrix with the CLS token at row 0 when present.
struct LayerTrace {
  std::vector<Tensor> hidden;
  bool has_cls = false;
  std::uint64_t config_hash = 0;
  std::string sample_id;

  int layers() const { return static_cast<int>(hidden.size()); }
  int tokens() const;
  int dim() const;
  const Tensor& layer(int index_1based) const;

  // L >= 1, every entry N x D, everything finite.
  void validate() const;
};

// Codec failures carry a distinct code so callers can tell the malformed-file
// classes apart.
struct TraceError : DataError {
  enum class Code {
    io,
    bad_magic,
    version_mismatch,
    truncated_payload,
    dimension_overflow,
    unsupported_dtype,
    crc_mismatch,
    nonfinite_payload,
  };
  Code code;
  TraceError(Code c, const std::string& msg) : DataError(msg), code(c) {}
};

// LTRC binary trace file, all integers little-endian:
//   magic "LTRC" | version u16 = 1 | flags u16 (bit0: CLS present)
//   | L u32 | N u32 | D u32 | dtype u8 (0 = f32) | 7 reserved bytes
//   | payload: L blocks of N x D little-endian f32, row-major, layers 1..L
//   | CRC-32 of the payload (u32)
void write_trace(const LayerTrace& trace, const std::filesystem::path& path);
LayerTrace read_trace(const std::filesystem::path& path);

}  // namespace layerlens
