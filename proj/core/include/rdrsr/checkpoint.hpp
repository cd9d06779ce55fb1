#pragma once

#include <string>
#include <vector>

#include "rdrsr/matrix.hpp"

namespace rdrsr {

/// Flat archive of (name, shape, row-major doubles) records with a version
/// header. Binary little-endian; save -> load -> save is bit-exact.
struct NamedMatrix {
  std::string name;
  Matrix m;
};

void save_archive(const std::string& path, const std::vector<NamedMatrix>& records);
std::vector<NamedMatrix> load_archive(const std::string& path);

}  // namespace rdrsr
