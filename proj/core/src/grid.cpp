#include "stadr/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stadr {

GridSpec build_grid(const Bounds& interior, int m, int n, int buffer, int num_times, double dt) {
  if (!(interior.x_min < interior.x_max) || !(interior.y_min < interior.y_max)) {
    throw std::invalid_argument("build_grid: bounds must satisfy min < max");
  }
  if (m < 1 || n < 1) throw std::invalid_argument("build_grid: M and N must be positive");
  if (buffer < 0) throw std::invalid_argument("build_grid: buffer must be non-negative");
  if (num_times < 1) throw std::invalid_argument("build_grid: T must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("build_grid: dt must be positive");

  GridSpec g;
  g.interior_ = interior;
  g.m_ = m;
  g.n_ = n;
  g.buffer_ = buffer;
  g.t_ = num_times;
  g.dt_ = dt;
  g.hx_ = (interior.x_max - interior.x_min) / m;
  g.hy_ = (interior.y_max - interior.y_min) / n;
  g.buffered_ = Bounds{interior.x_min - buffer * g.hx_, interior.x_max + buffer * g.hx_,
                       interior.y_min - buffer * g.hy_, interior.y_max + buffer * g.hy_};
  return g;
}

double time_step_for_interval(double length, int num_times) {
  if (num_times < 2) throw std::invalid_argument("time_step_for_interval: need at least two time points");
  if (!(length > 0.0)) throw std::invalid_argument("time_step_for_interval: length must be positive");
  return length / (num_times - 1);
}

CellIndex GridSpec::cell(int i, int j) const {
  if (i < 0 || i >= mb() || j < 0 || j >= nb()) {
    throw std::invalid_argument("cell (" + std::to_string(i) + ", " + std::to_string(j) + ") out of range");
  }
  return CellIndex{i, j, flat(i, j)};
}

CellIndex GridSpec::cell(int flat_index) const {
  if (flat_index < 0 || flat_index >= num_cells()) {
    throw std::invalid_argument("flat cell index " + std::to_string(flat_index) + " out of range");
  }
  return CellIndex{flat_index % mb(), flat_index / mb(), flat_index};
}

Point GridSpec::cell_center(int i, int j) const {
  return {buffered_.x_min + (i + 0.5) * hx_, buffered_.y_min + (j + 0.5) * hy_};
}

Point GridSpec::vertical_face_center(int i, int j) const {
  return {buffered_.x_min + i * hx_, buffered_.y_min + (j + 0.5) * hy_};
}

Point GridSpec::horizontal_face_center(int i, int j) const {
  return {buffered_.x_min + (i + 0.5) * hx_, buffered_.y_min + j * hy_};
}

bool GridSpec::is_interior_cell(int i, int j) const {
  return i >= buffer_ && i < mb() - buffer_ && j >= buffer_ && j < nb() - buffer_;
}

bool GridSpec::contains(Point p, double tol) const {
  const double tx = tol * (buffered_.x_max - buffered_.x_min);
  const double ty = tol * (buffered_.y_max - buffered_.y_min);
  return p.x >= buffered_.x_min - tx && p.x <= buffered_.x_max + tx && p.y >= buffered_.y_min - ty &&
         p.y <= buffered_.y_max + ty;
}

bool GridSpec::in_interior(Point p, double tol) const {
  const double tx = tol * (interior_.x_max - interior_.x_min);
  const double ty = tol * (interior_.y_max - interior_.y_min);
  return p.x >= interior_.x_min - tx && p.x <= interior_.x_max + tx && p.y >= interior_.y_min - ty &&
         p.y <= interior_.y_max + ty;
}

CellIndex GridSpec::locate(Point p) const {
  if (!contains(p)) throw std::invalid_argument("locate: point outside buffered domain");
  int i = static_cast<int>(std::floor((p.x - buffered_.x_min) / hx_));
  int j = static_cast<int>(std::floor((p.y - buffered_.y_min) / hy_));
  i = std::clamp(i, 0, mb() - 1);
  j = std::clamp(j, 0, nb() - 1);
  return cell(i, j);
}

FaceCenters face_centers(const GridSpec& grid, const CellIndex& cell) {
  const auto c = grid.cell(cell.i, cell.j);
  return FaceCenters{grid.vertical_face_center(c.i, c.j), grid.vertical_face_center(c.i + 1, c.j),
                     grid.horizontal_face_center(c.i, c.j), grid.horizontal_face_center(c.i, c.j + 1)};
}

namespace {

double penetration(double v, double lo, double hi, double width) {
  if (width <= 0.0) return 0.0;
  double p = 0.0;
  if (v < lo) p = (lo - v) / width;
  else if (v > hi) p = (v - hi) / width;
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace

double taper_factor(const GridSpec& grid, Point p) {
  if (!grid.contains(p)) throw std::invalid_argument("taper_factor: point outside buffered domain");
  const auto& in = grid.interior();
  const double px = penetration(p.x, in.x_min, in.x_max, grid.buffer() * grid.hx());
  const double py = penetration(p.y, in.y_min, in.y_max, grid.buffer() * grid.hy());
  return 1.0 - std::max(px, py);
}

}  // namespace stadr
