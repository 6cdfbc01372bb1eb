#include "output.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "perturblab/cli.hpp"

namespace perturblab::cli {

namespace fs = std::filesystem;

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::string fixed(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr double kLeft = 80, kRight = 760, kTop = 50, kBottom = 540;

}  // namespace

Csv::Csv(std::vector<std::string> header) : width_(header.size()) { row(header); }

Csv& Csv::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw Error("csv row has " + std::to_string(cells.size()) + " cells, expected " +
                                          std::to_string(width_));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ += ',';
    out_ += cells[i];
  }
  out_ += '\n';
  return *this;
}

Csv& Csv::row(const Vec& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(num(v));
  return row(cells);
}

SvgPlot::SvgPlot(std::string title, std::string xlabel, std::string ylabel, std::pair<double, double> xr,
                 std::pair<double, double> yr)
    : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)), xr_(xr), yr_(yr) {
  if (!(xr.second > xr.first) || !(yr.second > yr.first)) throw Error("empty plot range");
}

double SvgPlot::px(double x) const { return kLeft + (x - xr_.first) / (xr_.second - xr_.first) * (kRight - kLeft); }
double SvgPlot::py(double y) const { return kBottom - (y - yr_.first) / (yr_.second - yr_.first) * (kBottom - kTop); }

bool SvgPlot::inside(double x, double y) const {
  return std::isfinite(x) && std::isfinite(y) && x >= xr_.first && x <= xr_.second && y >= yr_.first &&
         y <= yr_.second;
}

void SvgPlot::points(const Vec& x, const Vec& y, const std::string& color) {
  std::string g = "<g fill=\"" + color + "\">";
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!inside(x[i], y[i])) continue;
    g += "<circle cx=\"" + fixed(px(x[i])) + "\" cy=\"" + fixed(py(y[i])) + "\" r=\"0.6\"/>";
  }
  g += "</g>";
  body_.push_back(std::move(g));
}

void SvgPlot::line(const Vec& x, const Vec& y, const std::string& color, bool dashed) {
  // split at points outside the frame
  std::vector<std::string> runs;
  std::string cur;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!inside(x[i], y[i])) {
      if (!cur.empty()) runs.push_back(std::move(cur));
      cur.clear();
      continue;
    }
    if (!cur.empty()) cur += ' ';
    cur += fixed(px(x[i])) + "," + fixed(py(y[i]));
  }
  if (!cur.empty()) runs.push_back(std::move(cur));
  for (const auto& r : runs)
    body_.push_back("<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.2\"" +
                    (dashed ? " stroke-dasharray=\"5,4\"" : "") + " points=\"" + r + "\"/>");
}

void SvgPlot::legend(const std::string& text, const std::string& color) { legend_.emplace_back(text, color); }

std::string SvgPlot::str() const {
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\" width=\"800\" height=\"600\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n";
  s += "<rect x=\"" + fixed(kLeft) + "\" y=\"" + fixed(kTop) + "\" width=\"" + fixed(kRight - kLeft) +
       "\" height=\"" + fixed(kBottom - kTop) + "\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<text x=\"400\" y=\"30\" text-anchor=\"middle\" font-size=\"15\">" + escape_xml(title_) + "</text>\n";
  s += "<text x=\"420\" y=\"580\" text-anchor=\"middle\">" + escape_xml(xlabel_) + "</text>\n";
  s += "<text x=\"20\" y=\"295\" text-anchor=\"middle\" transform=\"rotate(-90 20 295)\">" + escape_xml(ylabel_) +
       "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xr_.first + (xr_.second - xr_.first) * i / 4;
    const double yv = yr_.first + (yr_.second - yr_.first) * i / 4;
    char bx[32], by[32];
    std::snprintf(bx, sizeof bx, "%.4g", xv);
    std::snprintf(by, sizeof by, "%.4g", yv);
    s += "<text x=\"" + fixed(px(xv)) + "\" y=\"558\" text-anchor=\"middle\">" + bx + "</text>\n";
    s += "<text x=\"74\" y=\"" + fixed(py(yv) + 4) + "\" text-anchor=\"end\">" + by + "</text>\n";
  }
  for (std::size_t i = 0; i < legend_.size(); ++i) {
    const double y = kTop + 16 + 16 * i;
    s += "<rect x=\"" + fixed(kRight - 170) + "\" y=\"" + fixed(y - 9) + "\" width=\"10\" height=\"10\" fill=\"" +
         legend_[i].second + "\"/>\n";
    s += "<text x=\"" + fixed(kRight - 155) + "\" y=\"" + fixed(y) + "\">" + escape_xml(legend_[i].first) +
         "</text>\n";
  }
  s += "</g>\n";
  for (const auto& b : body_) s += b + "\n";
  s += "</svg>\n";
  return s;
}

const std::string& palette(std::size_t i) {
  static const std::vector<std::string> p{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return p[i % p.size()];
}

void write_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot move " + tmp.string() + " to " + target.string() + ": " + ec.message());
  }
}

}  // namespace perturblab::cli
