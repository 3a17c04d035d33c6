#include "cnode/param_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "cnode/errors.hpp"

namespace cnode {
namespace {

constexpr const char* kMagic = "cnode-params";
constexpr const char* kVersion = "v1";

void encode_le(double value, unsigned char* out) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i) out[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xffU);
}

double decode_le(const unsigned char* in) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_params(const std::filesystem::path& path, std::span<const double> params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  out << kMagic << ' ' << kVersion << ' ' << params.size() << '\n';
  std::vector<unsigned char> buffer(params.size() * 8);
  for (std::size_t i = 0; i < params.size(); ++i) encode_le(params[i], buffer.data() + 8 * i);
  out.write(reinterpret_cast<const char*>(buffer.data()),
            static_cast<std::streamsize>(buffer.size()));
  if (!out) throw ConfigError("failed writing " + path.string());
}

std::vector<double> read_params(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw MissingArtifactError("parameter file not found: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot open parameter file " + path.string());
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic, version;
  std::size_t count = 0;
  if (!(hs >> magic >> version >> count) || magic != kMagic || version != kVersion) {
    throw ConfigError("bad parameter file header in " + path.string());
  }
  std::vector<unsigned char> buffer(count * 8);
  in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(buffer.size()));
  if (static_cast<std::size_t>(in.gcount()) != buffer.size()) {
    throw ConfigError("parameter file " + path.string() + " is truncated");
  }
  std::vector<double> params(count);
  for (std::size_t i = 0; i < count; ++i) params[i] = decode_le(buffer.data() + 8 * i);
  return params;
}

}  // namespace cnode
