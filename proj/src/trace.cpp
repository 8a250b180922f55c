#include "layerlens/trace.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "layerlens/digest.hpp"

namespace layerlens {

namespace {

constexpr char kMagic[4] = {'L', 'T', 'R', 'C'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint16_t kFlagCls = 0x0001;
constexpr std::uint8_t kDtypeF32 = 0;
constexpr std::size_t kHeaderSize = 4 + 2 + 2 + 4 + 4 + 4 + 1 + 7;
// Refuse payloads past 1 GiB; desk-scale traces are kilobytes.
constexpr std::uint64_t kMaxPayloadBytes = 1ull << 30;

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f32_le(std::string& out, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  put_u32(out, bits);
}

float get_f32_le(const unsigned char* p) {
  return std::bit_cast<float>(get_u32(p));
}

}  // namespace

int LayerTrace::tokens() const {
  if (hidden.empty()) throw DataError("trace has no layers");
  return static_cast<int>(hidden.front().rows());
}

int LayerTrace::dim() const {
  if (hidden.empty()) throw DataError("trace has no layers");
  return static_cast<int>(hidden.front().cols());
}

const Tensor& LayerTrace::layer(int index_1based) const {
  if (index_1based < 1 || index_1based > layers()) {
    throw ValueError("trace layer index " + std::to_string(index_1based) + " out of range [1, " +
                     std::to_string(layers()) + "]");
  }
  return hidden[static_cast<std::size_t>(index_1based - 1)];
}

void LayerTrace::validate() const {
  if (hidden.empty()) {
    throw DataError("trace must contain at least one layer");
  }
  const std::size_t n = hidden.front().rows(), d = hidden.front().cols();
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    if (!hidden[i].is_matrix() || hidden[i].rows() != n || hidden[i].cols() != d) {
      throw ShapeError("trace layer " + std::to_string(i + 1) + " has shape " +
                       hidden[i].shape_str() + ", expected " + hidden.front().shape_str());
    }
    ensure_finite(hidden[i], "trace layer");
  }
}

void write_trace(const LayerTrace& trace, const std::filesystem::path& path) {
  trace.validate();
  const std::uint64_t l = static_cast<std::uint64_t>(trace.layers());
  const std::uint64_t n = static_cast<std::uint64_t>(trace.tokens());
  const std::uint64_t d = static_cast<std::uint64_t>(trace.dim());
  if (l > std::numeric_limits<std::uint32_t>::max() ||
      n > std::numeric_limits<std::uint32_t>::max() ||
      d > std::numeric_limits<std::uint32_t>::max() || l * n * d * 4 > kMaxPayloadBytes) {
    throw TraceError(TraceError::Code::dimension_overflow,
                     "trace dimensions overflow the LTRC format");
  }

  std::string buf;
  buf.reserve(kHeaderSize + static_cast<std::size_t>(l * n * d) * 4 + 4);
  buf.append(kMagic, 4);
  put_u16(buf, kVersion);
  put_u16(buf, trace.has_cls ? kFlagCls : 0);
  put_u32(buf, static_cast<std::uint32_t>(l));
  put_u32(buf, static_cast<std::uint32_t>(n));
  put_u32(buf, static_cast<std::uint32_t>(d));
  buf.push_back(static_cast<char>(kDtypeF32));
  buf.append(7, '\0');

  const std::size_t payload_start = buf.size();
  for (const Tensor& layer : trace.hidden) {
    for (double v : layer.data) put_f32_le(buf, static_cast<float>(v));
  }
  const std::uint32_t crc = crc32(buf.data() + payload_start, buf.size() - payload_start);
  put_u32(buf, crc);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw TraceError(TraceError::Code::io, "cannot open trace file for writing: " + path.string());
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) {
    throw TraceError(TraceError::Code::io, "failed writing trace file: " + path.string());
  }
}

LayerTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw TraceError(TraceError::Code::io, "cannot open trace file: " + path.string());
  }
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());

  if (buf.size() < kHeaderSize) {
    if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0) {
      throw TraceError(TraceError::Code::bad_magic, "bad magic in " + path.string());
    }
    throw TraceError(TraceError::Code::truncated_payload,
                     "truncated header in " + path.string());
  }
  if (std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw TraceError(TraceError::Code::bad_magic, "bad magic in " + path.string());
  }
  const std::uint16_t version = get_u16(p + 4);
  if (version != kVersion) {
    throw TraceError(TraceError::Code::version_mismatch,
                     "unsupported trace version " + std::to_string(version) + " in " +
                         path.string());
  }
  const std::uint16_t flags = get_u16(p + 6);
  const std::uint64_t l = get_u32(p + 8);
  const std::uint64_t n = get_u32(p + 12);
  const std::uint64_t d = get_u32(p + 16);
  const std::uint8_t dtype = p[20];
  if (dtype != kDtypeF32) {
    throw TraceError(TraceError::Code::unsupported_dtype,
                     "unsupported dtype " + std::to_string(dtype) + " in " + path.string());
  }
  if (l == 0 || n == 0 || d == 0 || l * n * d * 4 > kMaxPayloadBytes) {
    throw TraceError(TraceError::Code::dimension_overflow,
                     "declared dimensions overflow: L=" + std::to_string(l) +
                         " N=" + std::to_string(n) + " D=" + std::to_string(d));
  }
  const std::size_t payload_bytes = static_cast<std::size_t>(l * n * d) * 4;
  if (buf.size() < kHeaderSize + payload_bytes + 4) {
    throw TraceError(TraceError::Code::truncated_payload,
                     "payload truncated: have " + std::to_string(buf.size() - kHeaderSize) +
                         " bytes, need " + std::to_string(payload_bytes + 4));
  }
  const unsigned char* payload = p + kHeaderSize;
  const std::uint32_t stored_crc = get_u32(payload + payload_bytes);
  const std::uint32_t actual_crc = crc32(payload, payload_bytes);
  if (stored_crc != actual_crc) {
    throw TraceError(TraceError::Code::crc_mismatch, "payload CRC mismatch in " + path.string());
  }

  LayerTrace trace;
  trace.has_cls = (flags & kFlagCls) != 0;
  trace.hidden.reserve(static_cast<std::size_t>(l));
  const unsigned char* cursor = payload;
  for (std::uint64_t i = 0; i < l; ++i) {
    Tensor layer = Tensor::matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(d));
    for (double& v : layer.data) {
      const float f = get_f32_le(cursor);
      cursor += 4;
      if (!std::isfinite(f)) {
        throw TraceError(TraceError::Code::nonfinite_payload,
                         "non-finite value in trace payload: " + path.string());
      }
      v = static_cast<double>(f);
    }
    trace.hidden.push_back(std::move(layer));
  }
  return trace;
}

}  // namespace layerlens
