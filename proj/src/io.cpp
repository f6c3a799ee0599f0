#include "qlss/io.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace qlss {

using nlohmann::json;

namespace {

json complex_array(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      rows.push_back({m(i, j).real(), m(i, j).imag()});
  return rows;
}

Complex parse_pair(const json& v, const std::string& field, Index k) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ParseError("instance_from_json: field '" + field + "' entry " + std::to_string(k) +
                     " is not a [re, im] pair");
  return Complex(v[0].get<double>(), v[1].get<double>());
}

}  // namespace

std::string instance_to_json(const LinearSystemInstance& inst) {
  json j;
  j["version"] = kQlsiVersion;
  j["rows"] = inst.rows();
  j["cols"] = inst.cols();
  j["kappa"] = inst.kappa;
  j["a"] = complex_array(inst.a);
  j["b"] = complex_array(inst.b);
  return j.dump(2);
}

LinearSystemInstance instance_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("instance_from_json: ") + e.what());
  }
  if (!j.contains("version")) throw ParseError("instance_from_json: missing 'version'");
  if (j["version"].get<int>() != kQlsiVersion)
    throw VersionError("instance_from_json: unsupported version " + j["version"].dump());
  for (const char* field : {"rows", "cols", "kappa", "a", "b"})
    if (!j.contains(field))
      throw ParseError(std::string("instance_from_json: missing '") + field + "'");

  const Index rows = j["rows"].get<Index>();
  const Index cols = j["cols"].get<Index>();
  if (rows < 1 || cols < 1) throw ParseError("instance_from_json: nonpositive dimensions");
  const auto& ja = j["a"];
  const auto& jb = j["b"];
  if (!ja.is_array() || Index(ja.size()) != rows * cols)
    throw ParseError("instance_from_json: field 'a' has wrong length");
  if (!jb.is_array() || Index(jb.size()) != rows)
    throw ParseError("instance_from_json: field 'b' has wrong length");

  Matrix a(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index k = 0; k < cols; ++k) a(i, k) = parse_pair(ja[i * cols + k], "a", i * cols + k);
  Vector b(rows);
  for (Index i = 0; i < rows; ++i) b(i) = parse_pair(jb[i], "b", i);
  return make_instance(std::move(a), std::move(b), j["kappa"].get<double>());
}

void store_instance(const LinearSystemInstance& inst, const std::string& path) {
  write_text_file(path, instance_to_json(inst));
}

LinearSystemInstance load_instance(const std::string& path) {
  return instance_from_json(read_text_file(path));
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string fmt_coord(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

std::string render_svg(const std::vector<Series>& series, const std::string& title,
                       const std::string& x_label, const std::string& y_label) {
  if (series.empty()) throw DomainError("render_svg: no series");
  for (const auto& s : series) {
    if (s.x.empty() || s.x.size() != s.y.size())
      throw DomainError("render_svg: empty or ragged series '" + s.label + "'");
  }

  double xmin = series[0].x[0], xmax = xmin, ymin = series[0].y[0], ymax = ymin;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;

  const double w = 640, h = 420, ml = 70, mr = 20, mt = 40, mb = 50;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
  auto py = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  os << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
     << title << "</text>\n";
  // axes
  os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\""
     << h - mb << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    os << "<text x=\"" << fmt_coord(px(xv)) << "\" y=\"" << h - mb + 18
       << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt_coord(xv) << "</text>\n";
    os << "<text x=\"" << ml - 8 << "\" y=\"" << fmt_coord(py(yv) + 4)
       << "\" text-anchor=\"end\" font-size=\"11\">" << fmt_coord(yv) << "</text>\n";
  }
  os << "<text x=\"" << w / 2 << "\" y=\"" << h - 12
     << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n";
  os << "<text x=\"18\" y=\"" << h / 2 << "\" text-anchor=\"middle\" font-size=\"13\" "
     << "transform=\"rotate(-90 18 " << h / 2 << ")\">" << y_label << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    os << "<polyline fill=\"none\" stroke=\"" << colors[si % 4] << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i) os << ' ';
      os << fmt_coord(px(s.x[i])) << ',' << fmt_coord(py(s.y[i]));
    }
    os << "\"/>\n";
    os << "<text x=\"" << w - mr - 8 << "\" y=\"" << mt + 18 + 16 * double(si)
       << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << colors[si % 4] << "\">"
       << s.label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace qlss
