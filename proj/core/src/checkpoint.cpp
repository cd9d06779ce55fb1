#include "rdrsr/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace rdrsr {

namespace {

constexpr char kMagic[8] = {'R', 'D', 'R', 'S', 'R', 'C', 'K', '1'};

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_archive(const std::string& path, const std::vector<NamedMatrix>& records) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
  os.write(kMagic, sizeof(kMagic));
  write_pod<uint64_t>(os, records.size());
  for (const auto& r : records) {
    write_pod<uint32_t>(os, static_cast<uint32_t>(r.name.size()));
    os.write(r.name.data(), static_cast<std::streamsize>(r.name.size()));
    write_pod<int32_t>(os, r.m.rows);
    write_pod<int32_t>(os, r.m.cols);
    os.write(reinterpret_cast<const char*>(r.m.a.data()),
             static_cast<std::streamsize>(r.m.a.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

std::vector<NamedMatrix> load_archive(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: '" + path + "' has wrong magic/version");
  const auto n = read_pod<uint64_t>(is);
  std::vector<NamedMatrix> out;
  out.reserve(n);
  for (uint64_t i = 0; i < n; ++i) {
    const auto len = read_pod<uint32_t>(is);
    std::string name(len, '\0');
    is.read(name.data(), len);
    const auto rows = read_pod<int32_t>(is);
    const auto cols = read_pod<int32_t>(is);
    if (rows < 0 || cols < 0) throw std::runtime_error("checkpoint: bad shape in '" + path + "'");
    Matrix m(rows, cols);
    is.read(reinterpret_cast<char*>(m.a.data()),
            static_cast<std::streamsize>(m.a.size() * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint: truncated record '" + name + "'");
    out.push_back({std::move(name), std::move(m)});
  }
  return out;
}

}  // namespace rdrsr
