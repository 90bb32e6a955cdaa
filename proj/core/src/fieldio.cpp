#include "stadr/fieldio.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace stadr {

namespace {

static_assert(std::endian::native == std::endian::little, "field files are written in native little-endian order");

constexpr char kMagic[4] = {'S', 'T', 'F', 'D'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("field file is truncated");
  return v;
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::max(std::abs(a), std::abs(b))); }

}  // namespace

FieldData FieldData::on_grid(const GridSpec& grid, Eigen::VectorXd values) {
  if (values.size() != static_cast<Eigen::Index>(grid.latent_size()))
    throw std::invalid_argument("field values do not match the grid");
  FieldData f;
  f.mb = grid.mb();
  f.nb = grid.nb();
  f.num_times = grid.num_times();
  f.dt = grid.dt();
  f.bounds = grid.buffered();
  f.values = std::move(values);
  return f;
}

void FieldData::check_matches(const GridSpec& grid) const {
  if (mb != grid.mb() || nb != grid.nb() || num_times != grid.num_times())
    throw std::invalid_argument("field file shape does not match the configured grid");
  const Bounds& b = grid.buffered();
  if (!close(dt, grid.dt()) || !close(bounds.x_min, b.x_min) || !close(bounds.x_max, b.x_max) ||
      !close(bounds.y_min, b.y_min) || !close(bounds.y_max, b.y_max))
    throw std::invalid_argument("field file geometry does not match the configured grid");
}

void write_field_binary(std::ostream& os, const FieldData& f) {
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(f.mb));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(f.nb));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(f.num_times));
  for (double v : {f.dt, f.bounds.x_min, f.bounds.x_max, f.bounds.y_min, f.bounds.y_max}) put<double>(os, v);
  os.write(reinterpret_cast<const char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  if (!os) throw std::runtime_error("failed to write field file");
}

FieldData read_field_binary(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("not a field file (bad magic)");
  const auto version = get<std::uint32_t>(is);
  if (version != kVersion) throw std::runtime_error("unsupported field file version " + std::to_string(version));
  FieldData f;
  f.mb = static_cast<int>(get<std::uint32_t>(is));
  f.nb = static_cast<int>(get<std::uint32_t>(is));
  f.num_times = static_cast<int>(get<std::uint32_t>(is));
  f.dt = get<double>(is);
  f.bounds.x_min = get<double>(is);
  f.bounds.x_max = get<double>(is);
  f.bounds.y_min = get<double>(is);
  f.bounds.y_max = get<double>(is);
  const Eigen::Index n = static_cast<Eigen::Index>(f.mb) * f.nb * f.num_times;
  f.values.resize(n);
  is.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw std::runtime_error("field file is truncated");
  return f;
}

void write_field_binary(const std::filesystem::path& path, const FieldData& field) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_field_binary(os, field);
}

FieldData read_field_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_field_binary(is);
}

void write_field_csv(const std::filesystem::path& path, const FieldData& f) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const double hx = (f.bounds.x_max - f.bounds.x_min) / f.mb;
  const double hy = (f.bounds.y_max - f.bounds.y_min) / f.nb;
  os << "t,i,j,x,y,value\n";
  os.precision(17);
  Eigen::Index idx = 0;
  for (int k = 0; k < f.num_times; ++k)
    for (int j = 0; j < f.nb; ++j)
      for (int i = 0; i < f.mb; ++i, ++idx)
        os << k << ',' << i << ',' << j << ',' << f.bounds.x_min + (i + 0.5) * hx << ','
           << f.bounds.y_min + (j + 0.5) * hy << ',' << f.values[idx] << '\n';
}

FieldData read_field_csv(const std::filesystem::path& path, const GridSpec& grid) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  FieldData f = FieldData::on_grid(
      grid, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(grid.latent_size()),
                                      std::numeric_limits<double>::quiet_NaN()));
  std::string line;
  std::getline(is, line);
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cols;
    while (std::getline(ls, cell, ',')) cols.push_back(cell);
    if (cols.size() != 6) throw std::runtime_error("field CSV row " + std::to_string(row) + " needs 6 columns");
    const int k = std::stoi(cols[0]);
    const int i = std::stoi(cols[1]);
    const int j = std::stoi(cols[2]);
    if (k < 0 || k >= grid.num_times() || i < 0 || i >= grid.mb() || j < 0 || j >= grid.nb())
      throw std::runtime_error("field CSV row " + std::to_string(row) + " is outside the grid");
    const double v = cols[5] == "nan" || cols[5] == "NaN" ? std::numeric_limits<double>::quiet_NaN() : std::stod(cols[5]);
    f.values[static_cast<Eigen::Index>(k) * grid.num_cells() + grid.flat(i, j)] = v;
  }
  return f;
}

void write_field(const std::filesystem::path& path, const FieldData& field) {
  if (path.extension() == ".csv") write_field_csv(path, field);
  else write_field_binary(path, field);
}

FieldData read_field(const std::filesystem::path& path, const GridSpec& grid) {
  FieldData f = path.extension() == ".csv" ? read_field_csv(path, grid) : read_field_binary(path);
  f.check_matches(grid);
  return f;
}

void write_parameters(std::ostream& os, const ModelParameters& p) {
  os << "# kind " << to_string(p.kind()) << '\n';
  os << "# basis_per_axis " << p.n_per_axis() << '\n';
  os << "# count " << p.num_covariance_params() + 1 << '\n';
  os.precision(17);
  const Eigen::VectorXd x = p.packed();
  for (Eigen::Index i = 0; i < x.size(); ++i) os << x[i] << '\n';
}

void write_parameters(const std::filesystem::path& path, const ModelParameters& params) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_parameters(os, params);
}

ModelParameters read_parameters(std::istream& is) {
  std::string line;
  std::string kind;
  int per_axis = 3;
  std::vector<double> values;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string key;
      ls >> key;
      if (key == "kind") ls >> kind;
      else if (key == "basis_per_axis") ls >> per_axis;
      continue;
    }
    values.push_back(std::stod(line));
  }
  if (kind.empty()) throw std::runtime_error("parameter file lacks a '# kind' header");
  ModelParameters p = ModelParameters::zeros(parse_model_kind(kind), per_axis);
  if (static_cast<int>(values.size()) != p.num_covariance_params() + 1)
    throw std::runtime_error("parameter file has " + std::to_string(values.size()) + " values, expected " +
                             std::to_string(p.num_covariance_params() + 1));
  p.unpack(Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
  return p;
}

ModelParameters read_parameters(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_parameters(is);
}

}  // namespace stadr
