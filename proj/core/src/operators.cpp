#include "stadr/operators.hpp"

#include <Eigen/LU>

#include <array>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace stadr {

namespace {

/// Sparse weights over at most six cells.
struct Stencil {
  int size = 0;
  std::array<int, 6> idx{};
  std::array<double, 6> w{};

  void add(int i, double v) {
    idx[size] = i;
    w[size] = v;
    ++size;
  }
  double dot(const Eigen::VectorXd& u) const {
    double s = 0.0;
    for (int k = 0; k < size; ++k) s += w[k] * u[idx[k]];
    return s;
  }
};

/// Normal difference `a` and tangential difference `b` at one interior face.
struct FaceStencil {
  Stencil normal;
  Stencil tangential;
};

/// Tangential derivative along the second axis for the cell column `c`,
/// central in the interior and one-sided at the ends.
void add_tangential(Stencil& s, int along, int count, double h, double weight, auto&& flat_at) {
  if (count < 2) return;
  if (along == 0) {
    s.add(flat_at(1), weight / h);
    s.add(flat_at(0), -weight / h);
  } else if (along == count - 1) {
    s.add(flat_at(count - 1), weight / h);
    s.add(flat_at(count - 2), -weight / h);
  } else {
    s.add(flat_at(along + 1), weight / (2.0 * h));
    s.add(flat_at(along - 1), -weight / (2.0 * h));
  }
}

/// Vertical face between cells (i-1, j) and (i, j); 1 <= i <= M_B - 1.
FaceStencil vertical_face_stencil(const GridSpec& g, int i, int j) {
  FaceStencil fs;
  fs.normal.add(g.flat(i - 1, j), -1.0 / g.hx());
  fs.normal.add(g.flat(i, j), 1.0 / g.hx());
  for (int c : {i - 1, i}) {
    add_tangential(fs.tangential, j, g.nb(), g.hy(), 0.5, [&](int jj) { return g.flat(c, jj); });
  }
  return fs;
}

/// Horizontal face between cells (i, j-1) and (i, j); 1 <= j <= N_B - 1.
FaceStencil horizontal_face_stencil(const GridSpec& g, int i, int j) {
  FaceStencil fs;
  fs.normal.add(g.flat(i, j - 1), -1.0 / g.hy());
  fs.normal.add(g.flat(i, j), 1.0 / g.hy());
  for (int r : {j - 1, j}) {
    add_tangential(fs.tangential, i, g.mb(), g.hx(), 0.5, [&](int ii) { return g.flat(ii, r); });
  }
  return fs;
}

/// Adds -scale * (h_nn a a^T + h_xy/2 (a b^T + b a^T)) to the triplet list.
void add_face_energy(std::vector<Triplet>& t, const FaceStencil& fs, double scale, double h_nn, double h_xy) {
  const Stencil& a = fs.normal;
  const Stencil& b = fs.tangential;
  for (int r = 0; r < a.size; ++r)
    for (int c = 0; c < a.size; ++c) t.emplace_back(a.idx[r], a.idx[c], -scale * h_nn * a.w[r] * a.w[c]);
  for (int r = 0; r < a.size; ++r)
    for (int c = 0; c < b.size; ++c) {
      const double v = -scale * 0.5 * h_xy * a.w[r] * b.w[c];
      t.emplace_back(a.idx[r], b.idx[c], v);
      t.emplace_back(b.idx[c], a.idx[r], v);
    }
}

void check_face_sizes(const GridSpec& g, Eigen::Index nv, Eigen::Index nh, const char* what) {
  if (nv != (g.mb() + 1) * g.nb() || nh != g.mb() * (g.nb() + 1)) {
    throw std::invalid_argument(std::string(what) + ": face field sizes do not match the grid");
  }
}

}  // namespace

SparseMatrix volume_matrix(const GridSpec& grid) {
  SparseMatrix d(grid.num_cells(), grid.num_cells());
  d.setIdentity();
  d *= grid.cell_volume();
  return d;
}

SparseMatrix dampening_matrix(const GridSpec& grid, const Eigen::VectorXd& kappa2) {
  if (kappa2.size() != grid.num_cells()) throw std::invalid_argument("dampening_matrix: size mismatch");
  SparseMatrix d(grid.num_cells(), grid.num_cells());
  std::vector<Triplet> t;
  t.reserve(grid.num_cells());
  for (int k = 0; k < grid.num_cells(); ++k) t.emplace_back(k, k, kappa2[k]);
  d.setFromTriplets(t.begin(), t.end());
  return d;
}

SparseMatrix diffusion_matrix(const GridSpec& grid, const AnisotropyField& h) {
  check_face_sizes(grid, h.gamma_v.size(), h.gamma_h.size(), "diffusion_matrix");
  const int mb = grid.mb();
  const int nb = grid.nb();
  const double vol = grid.cell_volume();
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(grid.num_cells()) * 2 * 28);
  // Diagonal entries first so every row has a structural diagonal.
  for (int k = 0; k < grid.num_cells(); ++k) t.emplace_back(k, k, 0.0);
  for (int j = 0; j < nb; ++j)
    for (int i = 1; i < mb; ++i) {
      const int f = j * (mb + 1) + i;
      add_face_energy(t, vertical_face_stencil(grid, i, j), vol, h.hxx_v(f), h.hxy_v(f));
    }
  for (int j = 1; j < nb; ++j)
    for (int i = 0; i < mb; ++i) {
      const int f = j * mb + i;
      add_face_energy(t, horizontal_face_stencil(grid, i, j), vol, h.hyy_h(f), h.hxy_h(f));
    }
  SparseMatrix a(grid.num_cells(), grid.num_cells());
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

SparseMatrix advection_matrix(const GridSpec& grid, const AdvectionField& omega) {
  check_face_sizes(grid, omega.wx_v.size(), omega.wy_h.size(), "advection_matrix");
  const int mb = grid.mb();
  const int nb = grid.nb();
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(grid.num_cells()) * 9);
  for (int k = 0; k < grid.num_cells(); ++k) t.emplace_back(k, k, 0.0);
  auto add_face = [&](int lo, int hi, double w, double len) {
    // Flow from `lo` to `hi` when w > 0.
    const double out_lo = 0.5 * len * (std::abs(w) + w);
    const double out_hi = 0.5 * len * (std::abs(w) - w);
    t.emplace_back(lo, lo, out_lo);
    t.emplace_back(lo, hi, -out_hi);
    t.emplace_back(hi, hi, out_hi);
    t.emplace_back(hi, lo, -out_lo);
  };
  for (int j = 0; j < nb; ++j)
    for (int i = 1; i < mb; ++i) add_face(grid.flat(i - 1, j), grid.flat(i, j), omega.wx_v[j * (mb + 1) + i], grid.hy());
  for (int j = 1; j < nb; ++j)
    for (int i = 0; i < mb; ++i) add_face(grid.flat(i, j - 1), grid.flat(i, j), omega.wy_h[j * mb + i], grid.hx());
  SparseMatrix a(grid.num_cells(), grid.num_cells());
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

SparseMatrix whittle_matern_operator(const GridSpec& grid, const Eigen::VectorXd& kappa2, const AnisotropyField& h) {
  SparseMatrix k = grid.cell_volume() * dampening_matrix(grid, kappa2) - diffusion_matrix(grid, h);
  k.makeCompressed();
  return k;
}

SparseMatrix whittle_matern_precision(const GridSpec& grid, const Eigen::VectorXd& kappa2, const AnisotropyField& h) {
  const SparseMatrix k = whittle_matern_operator(grid, kappa2, h);
  const SparseMatrix scaled = k / grid.cell_volume();
  SparseMatrix q = SparseMatrix(k.transpose()) * scaled;
  SparseMatrix qt = q.transpose();
  q = 0.5 * (q + qt);
  q.makeCompressed();
  return q;
}

double matern_marginal_variance(double kappa, double det_h) {
  return 1.0 / (4.0 * std::numbers::pi * kappa * kappa * std::sqrt(det_h));
}

double matern_correlation(double kappa, const Eigen::Matrix2d& h, const Eigen::Vector2d& d) {
  const double r = std::sqrt(d.dot(h.inverse() * d));
  if (r == 0.0) return 1.0;
  const double x = kappa * r;
  return x * std::cyl_bessel_k(1.0, x);
}

void write_triplets(std::ostream& os, const SparseMatrix& m) {
  os.precision(17);
  for (int c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

// ---------------------------------------------------------------------------

void DiffusionSensitivity::resize_zero(const GridSpec& grid) {
  const int nv = (grid.mb() + 1) * grid.nb();
  const int nh = grid.mb() * (grid.nb() + 1);
  xx_v = Eigen::VectorXd::Zero(nv);
  xy_v = Eigen::VectorXd::Zero(nv);
  yy_h = Eigen::VectorXd::Zero(nh);
  xy_h = Eigen::VectorXd::Zero(nh);
}

DiffusionSensitivity& DiffusionSensitivity::operator+=(const DiffusionSensitivity& o) {
  xx_v += o.xx_v;
  xy_v += o.xy_v;
  yy_h += o.yy_h;
  xy_h += o.xy_h;
  return *this;
}

DiffusionSensitivity& DiffusionSensitivity::operator*=(double s) {
  xx_v *= s;
  xy_v *= s;
  yy_h *= s;
  xy_h *= s;
  return *this;
}

void AdvectionSensitivity::resize_zero(const GridSpec& grid) {
  wx_v = Eigen::VectorXd::Zero((grid.mb() + 1) * grid.nb());
  wy_h = Eigen::VectorXd::Zero(grid.mb() * (grid.nb() + 1));
}

void accumulate_diffusion_sensitivity(const GridSpec& grid, const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                                      double weight, DiffusionSensitivity& out) {
  const int mb = grid.mb();
  const int nb = grid.nb();
  const double s = weight * grid.cell_volume();
  for (int j = 0; j < nb; ++j)
    for (int i = 1; i < mb; ++i) {
      const int f = j * (mb + 1) + i;
      const FaceStencil fs = vertical_face_stencil(grid, i, j);
      const double ap = fs.normal.dot(p), aq = fs.normal.dot(q);
      const double bp = fs.tangential.dot(p), bq = fs.tangential.dot(q);
      out.xx_v[f] += s * ap * aq;
      out.xy_v[f] += s * 0.5 * (ap * bq + bp * aq);
    }
  for (int j = 1; j < nb; ++j)
    for (int i = 0; i < mb; ++i) {
      const int f = j * mb + i;
      const FaceStencil fs = horizontal_face_stencil(grid, i, j);
      const double ap = fs.normal.dot(p), aq = fs.normal.dot(q);
      const double bp = fs.tangential.dot(p), bq = fs.tangential.dot(q);
      out.yy_h[f] += s * ap * aq;
      out.xy_h[f] += s * 0.5 * (ap * bq + bp * aq);
    }
}

void accumulate_advection_sensitivity(const GridSpec& grid, const AdvectionField& omega, const Eigen::VectorXd& p,
                                      const Eigen::VectorXd& q, double weight, AdvectionSensitivity& out) {
  const int mb = grid.mb();
  const int nb = grid.nb();
  auto face = [&](int lo, int hi, double w, double len) {
    const double sgn = w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0);
    return weight * 0.5 * len * (p[lo] - p[hi]) * ((sgn + 1.0) * q[lo] - (sgn - 1.0) * q[hi]);
  };
  for (int j = 0; j < nb; ++j)
    for (int i = 1; i < mb; ++i) {
      const int f = j * (mb + 1) + i;
      out.wx_v[f] += face(grid.flat(i - 1, j), grid.flat(i, j), omega.wx_v[f], grid.hy());
    }
  for (int j = 1; j < nb; ++j)
    for (int i = 0; i < mb; ++i) {
      const int f = j * mb + i;
      out.wy_h[f] += face(grid.flat(i, j - 1), grid.flat(i, j), omega.wy_h[f], grid.hx());
    }
}

}  // namespace stadr
