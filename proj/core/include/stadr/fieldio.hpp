#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include <Eigen/Core>

#include "stadr/basis.hpp"
#include "stadr/grid.hpp"

namespace stadr {

/// A space-time field on the buffered grid, values time-major (k * K + flat).
/// NaN marks an unobserved entry in observation files.
struct FieldData {
  int mb = 0;
  int nb = 0;
  int num_times = 0;
  double dt = 1.0;
  Bounds bounds;  // buffered domain
  Eigen::VectorXd values;

  static FieldData on_grid(const GridSpec& grid, Eigen::VectorXd values);
  /// Throws when the header disagrees with `grid`.
  void check_matches(const GridSpec& grid) const;
};

/// Binary layout, little-endian:
///   char[4] "STFD", u32 version (1), u32 M_B, u32 N_B, u32 T,
///   f64 dt, f64 x_min, f64 x_max, f64 y_min, f64 y_max,
///   then T * M_B * N_B f64 values (time-major, x fastest).
void write_field_binary(const std::filesystem::path& path, const FieldData& field);
FieldData read_field_binary(const std::filesystem::path& path);
void write_field_binary(std::ostream& os, const FieldData& field);
FieldData read_field_binary(std::istream& is);

/// CSV with columns t,i,j,x,y,value (one row per space-time cell).
void write_field_csv(const std::filesystem::path& path, const FieldData& field);
FieldData read_field_csv(const std::filesystem::path& path, const GridSpec& grid);

/// Dispatches on the extension (.csv, anything else binary).
void write_field(const std::filesystem::path& path, const FieldData& field);
FieldData read_field(const std::filesystem::path& path, const GridSpec& grid);

/// Text parameter file: '#' header lines (kind, basis size), then one number
/// per line, theta followed by log sigma_n2.
void write_parameters(const std::filesystem::path& path, const ModelParameters& params);
void write_parameters(std::ostream& os, const ModelParameters& params);
ModelParameters read_parameters(const std::filesystem::path& path);
ModelParameters read_parameters(std::istream& is);

}  // namespace stadr
