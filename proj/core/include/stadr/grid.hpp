#pragma once

#include <array>
#include <cstddef>

namespace stadr {

/// A point in the plane.
struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Axis-aligned rectangle [x_min, x_max] x [y_min, y_max].
struct Bounds {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;
};

/// Cell address on the buffered grid. `flat` is j * M_B + i (x fastest).
struct CellIndex {
  int i = 0;
  int j = 0;
  int flat = 0;
};

/// Face midpoints of one cell.
struct FaceCenters {
  Point left;
  Point right;
  Point bottom;
  Point top;
};

/// Regular rectangular space-time discretization with a buffer zone.
///
/// The interior domain D is split into M x N cells. `buffer` whole cells are
/// added on every side, giving the buffered domain D_B with M_B x N_B cells,
/// so interior cells keep the same centers with and without buffer. Time is
/// the uniform grid t_k = k * dt, k = 0..T-1.
class GridSpec {
 public:
  GridSpec() = default;

  const Bounds& interior() const { return interior_; }
  const Bounds& buffered() const { return buffered_; }

  int m() const { return m_; }
  int n() const { return n_; }
  int buffer() const { return buffer_; }
  int mb() const { return m_ + 2 * buffer_; }
  int nb() const { return n_ + 2 * buffer_; }
  int num_times() const { return t_; }
  double dt() const { return dt_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  double cell_volume() const { return hx_ * hy_; }

  /// Number of spatial cells K = M_B * N_B.
  int num_cells() const { return mb() * nb(); }
  /// Latent dimension K * T.
  std::size_t latent_size() const {
    return static_cast<std::size_t>(num_cells()) * static_cast<std::size_t>(t_);
  }

  int flat(int i, int j) const { return j * mb() + i; }
  CellIndex cell(int i, int j) const;
  CellIndex cell(int flat) const;

  Point cell_center(int i, int j) const;
  Point cell_center(int flat) const { auto c = cell(flat); return cell_center(c.i, c.j); }

  /// Center of the vertical face between columns i-1 and i (i = 0..M_B), row j.
  Point vertical_face_center(int i, int j) const;
  /// Center of the horizontal face between rows j-1 and j (j = 0..N_B), column i.
  Point horizontal_face_center(int i, int j) const;

  bool is_interior_cell(int i, int j) const;
  bool contains(Point p, double tol = 1e-12) const;
  bool in_interior(Point p, double tol = 1e-12) const;

  /// Cell containing p (clamped to the grid for points on the outer boundary).
  CellIndex locate(Point p) const;

  double time(int k) const { return k * dt_; }

 private:
  friend GridSpec build_grid(const Bounds&, int, int, int, int, double);

  Bounds interior_;
  Bounds buffered_;
  int m_ = 1;
  int n_ = 1;
  int buffer_ = 0;
  int t_ = 2;
  double dt_ = 1.0;
  double hx_ = 1.0;
  double hy_ = 1.0;
};

/// Builds a grid over `interior` with M x N interior cells and `buffer` extra
/// cells on each side. Throws std::invalid_argument on non-positive counts or
/// dt, negative buffer, or badly ordered bounds.
GridSpec build_grid(const Bounds& interior, int m, int n, int buffer, int num_times, double dt);

/// dt for `num_times` points spanning [0, length].
double time_step_for_interval(double length, int num_times);

FaceCenters face_centers(const GridSpec& grid, const CellIndex& cell);

/// Advection taper: 1 on D, falling linearly to 0 on the outer boundary of
/// D_B. Defined as 1 - max(p_x, p_y) where p_x is the normalized penetration
/// into the buffer along x (0 at the boundary of D, 1 at the boundary of D_B).
double taper_factor(const GridSpec& grid, Point p);

}  // namespace stadr
