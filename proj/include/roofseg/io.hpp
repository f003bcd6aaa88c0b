#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "roofseg/types.hpp"

namespace roofseg {

struct XyzContents {
  PointCloud cloud;
  std::optional<InstanceLabeling> labeling;
};

/// Reads whitespace-separated "x y z" lines, or "x y z label" when
/// has_label_column is set. Points keep file order; -1 labels map to kNoise.
XyzContents load_xyz(const std::filesystem::path& path, bool has_label_column);

/// Writes "x y z" lines (plus a label column when labeling is given) using
/// shortest exact decimal formatting, so save/load round-trips bit-exactly.
void save_xyz(const PointCloud& cloud, const std::filesystem::path& path,
              const InstanceLabeling* labeling = nullptr);

enum class PlyFormat { kAscii, kBinaryLittleEndian };

/// ASCII or binary-little-endian PLY with float/double x,y,z vertex
/// properties; nx,ny,nz populate normals (renormalized). 32-bit floats are
/// widened to double on load.
PointCloud load_ply(const std::filesystem::path& path);

void save_ply(const PointCloud& cloud, const std::filesystem::path& path,
              PlyFormat format);

/// One integer per line in point order; -1 means nonplane.
InstanceLabeling load_labeling(const std::filesystem::path& path,
                               std::ptrdiff_t expected_len = -1);

void save_labeling(const InstanceLabeling& labeling,
                   const std::filesystem::path& path);

/// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double v);

}  // namespace roofseg
