#pragma once

#include "qlss/instance.hpp"
#include "qlss/types.hpp"

#include <string>
#include <vector>

namespace qlss {

inline constexpr int kQlsiVersion = 1;

/// Canonical JSON form of an instance (.qlsi): row-major [re, im] pairs.
std::string instance_to_json(const LinearSystemInstance& inst);
LinearSystemInstance instance_from_json(const std::string& text);

void store_instance(const LinearSystemInstance& inst, const std::string& path);
LinearSystemInstance load_instance(const std::string& path);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Standalone SVG plot with axes and labels; byte-stable for equal input.
/// Throws DomainError when any series is empty.
std::string render_svg(const std::vector<Series>& series, const std::string& title,
                       const std::string& x_label, const std::string& y_label);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

/// Locale-independent shortest round-trip formatting used by every CSV.
std::string format_double(double v);

}  // namespace qlss
