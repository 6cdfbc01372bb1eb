#pragma once

#include <string>
#include <utility>
#include <vector>

#include "perturblab/common.hpp"

namespace perturblab::cli {

// Round-trip formatting, "nan"/"inf" for non-finite values.
std::string num(double x);

class Csv {
 public:
  explicit Csv(std::vector<std::string> header);
  Csv& row(const std::vector<std::string>& cells);
  Csv& row(const Vec& values);
  std::string str() const { return out_; }

 private:
  std::size_t width_;
  std::string out_;
};

// Scatter/line plot on a fixed 800x600 canvas.
class SvgPlot {
 public:
  SvgPlot(std::string title, std::string xlabel, std::string ylabel, std::pair<double, double> xr,
          std::pair<double, double> yr);

  void points(const Vec& x, const Vec& y, const std::string& color);
  void line(const Vec& x, const Vec& y, const std::string& color, bool dashed = false);
  void legend(const std::string& text, const std::string& color);
  std::string str() const;

 private:
  double px(double x) const;
  double py(double y) const;
  bool inside(double x, double y) const;

  std::string title_, xlabel_, ylabel_;
  std::pair<double, double> xr_, yr_;
  std::vector<std::string> body_;
  std::vector<std::pair<std::string, std::string>> legend_;
};

// Distinct colors for small categorical indices.
const std::string& palette(std::size_t i);

}  // namespace perturblab::cli
