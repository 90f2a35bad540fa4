#pragma once

// Planar observation windows, point patterns and pixel covariate rasters.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ppr {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Axis-aligned rectangle [x_min, x_max] x [y_min, y_max].
class Window {
 public:
  Window(double x_min, double x_max, double y_min, double y_max);

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double y_min() const { return y_min_; }
  double y_max() const { return y_max_; }
  double width() const { return x_max_ - x_min_; }
  double height() const { return y_max_ - y_min_; }
  double min_side() const;

  bool contains(Point u) const;
  bool contains(const Window& other) const;

  friend bool operator==(const Window&, const Window&) = default;

 private:
  double x_min_, x_max_, y_min_, y_max_;
};

double area(const Window& win);

// Moves every side inward by `margin`. Throws DegenerateWindowError when
// 2 * margin reaches either side length.
Window erode(const Window& win, double margin);
Window dilate(const Window& win, double margin);
double overlap_area(const Window& a, const Window& b);

class PointPattern {
 public:
  explicit PointPattern(Window window, std::vector<Point> points = {});

  const Window& window() const { return window_; }
  std::span<const Point> points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Point& operator[](std::size_t i) const { return points_[i]; }

 private:
  Window window_;
  std::vector<Point> points_;
};

// Pixel image of one covariate. values[iy * nx + ix]; row iy = 0 is the
// lowest y. Pixels tile `window` exactly.
class CovariateField {
 public:
  CovariateField(int nx, int ny, Window window, std::vector<double> values);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  const Window& window() const { return window_; }
  std::span<const double> values() const { return values_; }
  double at(int ix, int iy) const { return values_[static_cast<std::size_t>(iy) * nx_ + ix]; }
  double pixel_width() const { return window_.width() / nx_; }
  double pixel_height() const { return window_.height() / ny_; }
  Point pixel_center(int ix, int iy) const;
  Window pixel(int ix, int iy) const;

  // Flat index of the pixel whose center is nearest to u. Ties go to the
  // lower index. Throws DomainError outside the window.
  std::size_t pixel_index(Point u) const;

  bool same_grid(const CovariateField& other) const;

 private:
  int nx_, ny_;
  Window window_;
  std::vector<double> values_;
};

double lookup(const CovariateField& field, Point u);

// Centers and scales pixel values to mean 0 and sample (n-1) sd 1.
CovariateField standardize(const CovariateField& field);

using CovariateList = std::vector<CovariateField>;

// Writes (z_1(u), ..., z_p(u)) into out (size p).
void covariate_row(const CovariateList& covariates, Point u, std::span<double> out);

// Pixel-sum quadrature of  int_win f(z(u)) du  for a covariate list sharing
// one grid: each pixel contributes |pixel ∩ win| * f(z_pixel). With no
// covariates the integrand is the constant f({}).
double pixel_integral(const CovariateList& covariates, const Window& win,
                      const std::function<double(std::span<const double>)>& f);

// Smallest window covered by every raster. Throws ConfigError if the list
// is empty or the rasters are disjoint.
Window common_window(const CovariateList& covariates);

// --- file formats ---------------------------------------------------------

// CSV with header `x,y`. Points must lie inside `window`.
PointPattern read_pattern_csv(const std::filesystem::path& path, const Window& window);
void write_pattern_csv(const std::filesystem::path& path, const PointPattern& pattern);

// Four header lines `nx=`, `ny=`, `xrange=lo,hi`, `yrange=lo,hi` then ny rows
// of nx values, row 0 = lowest y.
CovariateField read_raster_csv(const std::filesystem::path& path);
void write_raster_csv(const std::filesystem::path& path, const CovariateField& field);

// Every *.csv in `dir`, in lexicographic filename order.
CovariateList read_covariate_dir(const std::filesystem::path& dir);
// Writes z01.csv, z02.csv, ... so that read_covariate_dir restores the order.
void write_covariate_dir(const std::filesystem::path& dir, const CovariateList& covariates);

// "%.17g" formatting used by every text writer.
std::string format_real(double v);

}  // namespace ppr
