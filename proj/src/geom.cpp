#include "ppr/geom.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ppr/error.hpp"

namespace ppr {

namespace {

double parse_real(std::string_view text, const std::string& where) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw IoError(where + ": cannot parse number '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Index of the nearest pixel center along one axis; exact midpoints go to
// the lower index.
int nearest_cell(double coord, double lo, double step, int n) {
  double t = (coord - lo) / step;
  int i = static_cast<int>(std::ceil(t)) - 1;
  return std::clamp(i, 0, n - 1);
}

}  // namespace

Window::Window(double x_min, double x_max, double y_min, double y_max)
    : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max) {
  if (!(std::isfinite(x_min) && std::isfinite(x_max) && std::isfinite(y_min) &&
        std::isfinite(y_max))) {
    throw DegenerateWindowError("window bounds must be finite");
  }
  if (!(x_min < x_max) || !(y_min < y_max)) {
    throw DegenerateWindowError("window requires x_min < x_max and y_min < y_max");
  }
}

double Window::min_side() const { return std::min(width(), height()); }

bool Window::contains(Point u) const {
  return u.x >= x_min_ && u.x <= x_max_ && u.y >= y_min_ && u.y <= y_max_;
}

bool Window::contains(const Window& o) const {
  return o.x_min_ >= x_min_ && o.x_max_ <= x_max_ && o.y_min_ >= y_min_ && o.y_max_ <= y_max_;
}

double area(const Window& win) { return win.width() * win.height(); }

Window erode(const Window& win, double margin) {
  if (!(margin >= 0.0)) throw DomainError("erosion margin must be nonnegative");
  if (2.0 * margin >= win.width() || 2.0 * margin >= win.height()) {
    throw DegenerateWindowError("erosion margin too large for window");
  }
  return Window(win.x_min() + margin, win.x_max() - margin, win.y_min() + margin,
                win.y_max() - margin);
}

Window dilate(const Window& win, double margin) {
  if (!(margin >= 0.0)) throw DomainError("dilation margin must be nonnegative");
  return Window(win.x_min() - margin, win.x_max() + margin, win.y_min() - margin,
                win.y_max() + margin);
}

double overlap_area(const Window& a, const Window& b) {
  double w = std::min(a.x_max(), b.x_max()) - std::max(a.x_min(), b.x_min());
  double h = std::min(a.y_max(), b.y_max()) - std::max(a.y_min(), b.y_min());
  return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

PointPattern::PointPattern(Window window, std::vector<Point> points)
    : window_(window), points_(std::move(points)) {
  for (const auto& p : points_) {
    if (!window_.contains(p)) {
      throw DomainError("point (" + format_real(p.x) + ", " + format_real(p.y) +
                        ") lies outside the window");
    }
  }
}

CovariateField::CovariateField(int nx, int ny, Window window, std::vector<double> values)
    : nx_(nx), ny_(ny), window_(window), values_(std::move(values)) {
  if (nx < 1 || ny < 1) throw ConfigError("raster dimensions must be positive");
  if (values_.size() != static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny)) {
    throw ConfigError("raster has " + std::to_string(values_.size()) + " values, expected " +
                      std::to_string(static_cast<std::size_t>(nx) * ny));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw DomainError("raster contains a non-finite value");
  }
}

Point CovariateField::pixel_center(int ix, int iy) const {
  return {window_.x_min() + (ix + 0.5) * pixel_width(),
          window_.y_min() + (iy + 0.5) * pixel_height()};
}

Window CovariateField::pixel(int ix, int iy) const {
  double dx = pixel_width(), dy = pixel_height();
  double x0 = window_.x_min() + ix * dx;
  double y0 = window_.y_min() + iy * dy;
  double x1 = (ix == nx_ - 1) ? window_.x_max() : x0 + dx;
  double y1 = (iy == ny_ - 1) ? window_.y_max() : y0 + dy;
  return Window(x0, x1, y0, y1);
}

std::size_t CovariateField::pixel_index(Point u) const {
  if (!window_.contains(u)) {
    throw DomainError("location (" + format_real(u.x) + ", " + format_real(u.y) +
                      ") is outside the raster window");
  }
  int ix = nearest_cell(u.x, window_.x_min(), pixel_width(), nx_);
  int iy = nearest_cell(u.y, window_.y_min(), pixel_height(), ny_);
  return static_cast<std::size_t>(iy) * nx_ + ix;
}

bool CovariateField::same_grid(const CovariateField& o) const {
  return nx_ == o.nx_ && ny_ == o.ny_ && window_ == o.window_;
}

double lookup(const CovariateField& field, Point u) { return field.values()[field.pixel_index(u)]; }

CovariateField standardize(const CovariateField& field) {
  auto vals = field.values();
  const double n = static_cast<double>(vals.size());
  if (vals.size() < 2) throw DomainError("cannot standardize a single-pixel raster");
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : vals) ss += (v - mean) * (v - mean);
  double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0)) throw DomainError("cannot standardize a constant raster (zero variance)");
  std::vector<double> out(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) out[i] = (vals[i] - mean) / sd;
  return CovariateField(field.nx(), field.ny(), field.window(), std::move(out));
}

void covariate_row(const CovariateList& covariates, Point u, std::span<double> out) {
  for (std::size_t j = 0; j < covariates.size(); ++j) out[j] = lookup(covariates[j], u);
}

double pixel_integral(const CovariateList& covariates, const Window& win,
                      const std::function<double(std::span<const double>)>& f) {
  if (covariates.empty()) return f({}) * area(win);
  const auto& ref = covariates.front();
  for (const auto& c : covariates) {
    if (!c.same_grid(ref)) throw ConfigError("pixel integration needs rasters on one grid");
  }
  if (!ref.window().contains(win)) {
    throw DomainError("integration window extends beyond the covariate rasters");
  }
  std::vector<double> z(covariates.size());
  double total = 0.0;
  for (int iy = 0; iy < ref.ny(); ++iy) {
    for (int ix = 0; ix < ref.nx(); ++ix) {
      double a = overlap_area(ref.pixel(ix, iy), win);
      if (a <= 0.0) continue;
      for (std::size_t j = 0; j < covariates.size(); ++j) z[j] = covariates[j].at(ix, iy);
      total += a * f(z);
    }
  }
  return total;
}

Window common_window(const CovariateList& covariates) {
  if (covariates.empty()) throw ConfigError("no covariate rasters supplied");
  double x0 = covariates[0].window().x_min(), x1 = covariates[0].window().x_max();
  double y0 = covariates[0].window().y_min(), y1 = covariates[0].window().y_max();
  for (const auto& c : covariates) {
    x0 = std::max(x0, c.window().x_min());
    x1 = std::min(x1, c.window().x_max());
    y0 = std::max(y0, c.window().y_min());
    y1 = std::min(y1, c.window().y_max());
  }
  if (!(x0 < x1 && y0 < y1)) throw ConfigError("covariate rasters do not overlap");
  return Window(x0, x1, y0, y1);
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

PointPattern read_pattern_csv(const std::filesystem::path& path, const Window& window) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pattern file " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != "x,y") {
    throw IoError(path.string() + ": expected header 'x,y'");
  }
  std::vector<Point> pts;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cols = split(line, ',');
    std::string where = path.string() + ":" + std::to_string(lineno);
    if (cols.size() != 2) throw IoError(where + ": expected two columns");
    pts.push_back({parse_real(cols[0], where), parse_real(cols[1], where)});
  }
  return PointPattern(window, std::move(pts));
}

void write_pattern_csv(const std::filesystem::path& path, const PointPattern& pattern) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write pattern file " + path.string());
  out << "x,y\n";
  for (const auto& p : pattern.points()) out << format_real(p.x) << ',' << format_real(p.y) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

CovariateField read_raster_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open raster file " + path.string());
  std::string line;
  auto header = [&](std::string_view key) {
    if (!std::getline(in, line)) throw IoError(path.string() + ": truncated header");
    std::string_view s = trim(line);
    if (s.substr(0, key.size()) != key) {
      throw IoError(path.string() + ": expected header '" + std::string(key) + "'");
    }
    return std::string(s.substr(key.size()));
  };
  std::string where = path.string();
  int nx = static_cast<int>(parse_real(header("nx="), where));
  int ny = static_cast<int>(parse_real(header("ny="), where));
  auto xr = header("xrange=");
  auto yr = header("yrange=");
  auto xs = split(xr, ','), ys = split(yr, ',');
  if (xs.size() != 2 || ys.size() != 2) throw IoError(where + ": malformed range header");
  Window win(parse_real(xs[0], where), parse_real(xs[1], where), parse_real(ys[0], where),
             parse_real(ys[1], where));
  if (nx < 1 || ny < 1) throw IoError(where + ": nx and ny must be positive");
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(nx) * ny);
  int rows = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto cols = split(line, ',');
    if (static_cast<int>(cols.size()) != nx) {
      throw IoError(where + ": row " + std::to_string(rows) + " has " +
                    std::to_string(cols.size()) + " values, expected " + std::to_string(nx));
    }
    for (auto c : cols) values.push_back(parse_real(c, where));
    ++rows;
  }
  if (rows != ny) throw IoError(where + ": expected " + std::to_string(ny) + " rows");
  return CovariateField(nx, ny, win, std::move(values));
}

void write_raster_csv(const std::filesystem::path& path, const CovariateField& field) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write raster file " + path.string());
  const auto& w = field.window();
  out << "nx=" << field.nx() << "\nny=" << field.ny() << "\nxrange=" << format_real(w.x_min())
      << ',' << format_real(w.x_max()) << "\nyrange=" << format_real(w.y_min()) << ','
      << format_real(w.y_max()) << '\n';
  for (int iy = 0; iy < field.ny(); ++iy) {
    for (int ix = 0; ix < field.nx(); ++ix) {
      if (ix) out << ',';
      out << format_real(field.at(ix, iy));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

CovariateList read_covariate_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("covariate directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  CovariateList out;
  for (const auto& f : files) out.push_back(read_raster_csv(f));
  return out;
}

void write_covariate_dir(const std::filesystem::path& dir, const CovariateList& covariates) {
  std::filesystem::create_directories(dir);
  for (std::size_t j = 0; j < covariates.size(); ++j) {
    char name[32];
    std::snprintf(name, sizeof name, "z%02zu.csv", j + 1);
    write_raster_csv(dir / name, covariates[j]);
  }
}

}  // namespace ppr
