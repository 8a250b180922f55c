#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <string>
#include <vector>

#include "layerlens/rng.hpp"
#include "layerlens/trace.hpp"

using namespace layerlens;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("ltrc_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

LayerTrace random_trace(std::uint64_t seed, int l = 3, int n = 4, int d = 5, bool cls = true) {
  SeededRng rng(seed);
  LayerTrace t;
  t.has_cls = cls;
  t.sample_id = "s" + std::to_string(seed);
  for (int i = 0; i < l; ++i) {
    Tensor layer = Tensor::matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(d));
    for (double& v : layer.data) v = rng.gaussian();
    t.hidden.push_back(std::move(layer));
  }
  return t;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

TraceError::Code read_error_code(const fs::path& p) {
  try {
    read_trace(p);
  } catch (const TraceError& e) {
    return e.code;
  }
  FAIL("expected a TraceError");
  return TraceError::Code::io;
}

}  // namespace

TEST_CASE("roundtrip is lossless at single precision") {
  TempDir tmp;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const LayerTrace orig = random_trace(s);
    const fs::path file = tmp.path / ("t" + std::to_string(s) + ".ltrc");
    write_trace(orig, file);
    const LayerTrace back = read_trace(file);
    REQUIRE(back.layers() == orig.layers());
    CHECK(back.has_cls == orig.has_cls);
    for (int i = 1; i <= orig.layers(); ++i) {
      const Tensor& a = orig.layer(i);
      const Tensor& b = back.layer(i);
      REQUIRE(a.same_shape(b));
      for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(static_cast<double>(static_cast<float>(a.data[k])) == b.data[k]);
      }
    }
  }
}

TEST_CASE("second write of the same trace is byte-identical") {
  TempDir tmp;
  const LayerTrace t = random_trace(7);
  write_trace(t, tmp.path / "a.ltrc");
  write_trace(t, tmp.path / "b.ltrc");
  CHECK(read_bytes(tmp.path / "a.ltrc") == read_bytes(tmp.path / "b.ltrc"));
}

TEST_CASE("corrupt magic bytes") {
  TempDir tmp;
  const fs::path file = tmp.path / "t.ltrc";
  write_trace(random_trace(1), file);
  std::string bytes = read_bytes(file);
  bytes[0] = 'X';
  write_bytes(file, bytes);
  CHECK(read_error_code(file) == TraceError::Code::bad_magic);
}

TEST_CASE("version mismatch") {
  TempDir tmp;
  const fs::path file = tmp.path / "t.ltrc";
  write_trace(random_trace(2), file);
  std::string bytes = read_bytes(file);
  bytes[4] = 9;  // version lo byte
  write_bytes(file, bytes);
  CHECK(read_error_code(file) == TraceError::Code::version_mismatch);
}

TEST_CASE("declared layers exceed the payload") {
  TempDir tmp;
  const fs::path file = tmp.path / "t.ltrc";
  write_trace(random_trace(3, 2, 4, 5), file);
  std::string bytes = read_bytes(file);
  bytes[8] = 3;  // L lo byte: claim 3 layers, payload holds 2
  write_bytes(file, bytes);
  CHECK(read_error_code(file) == TraceError::Code::truncated_payload);
}

TEST_CASE("dimension overflow is detected before allocation") {
  TempDir tmp;
  const fs::path file = tmp.path / "t.ltrc";
  write_trace(random_trace(4, 1, 2, 2), file);
  std::string bytes = read_bytes(file);
  for (int off : {8, 12, 16}) {
    for (int k = 0; k < 4; ++k) bytes[static_cast<std::size_t>(off + k)] = '\xFF';
  }
  write_bytes(file, bytes);
  CHECK(read_error_code(file) == TraceError::Code::dimension_overflow);
}

TEST_CASE("payload corruption fails the CRC") {
  TempDir tmp;
  const fs::path file = tmp.path / "t.ltrc";
  write_trace(random_trace(5), file);
  std::string bytes = read_bytes(file);
  bytes[40] = static_cast<char>(bytes[40] ^ 0x40);
  write_bytes(file, bytes);
  CHECK(read_error_code(file) == TraceError::Code::crc_mismatch);
}

TEST_CASE("unsupported dtype") {
  TempDir tmp;
  const fs::path file = tmp.path / "t.ltrc";
  write_trace(random_trace(6), file);
  std::string bytes = read_bytes(file);
  bytes[20] = 1;
  write_bytes(file, bytes);
  CHECK(read_error_code(file) == TraceError::Code::unsupported_dtype);
}

TEST_CASE("trace validation rejects ragged or non-finite traces") {
  LayerTrace t = random_trace(8, 2, 3, 3);
  t.hidden[1] = Tensor::matrix(2, 3);
  CHECK_THROWS_AS(t.validate(), ShapeError);

  LayerTrace nan_trace = random_trace(9, 1, 2, 2);
  nan_trace.hidden[0].data[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(nan_trace.validate(), NumericalError);
}
