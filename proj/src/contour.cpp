#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "reid/contour/contour.hpp"
#include "reid/contour/io.hpp"

namespace reid::contour {

std::string_view to_string(Side side) noexcept { return side == Side::Left ? "left" : "right"; }

Side side_from_string(std::string_view text) {
  if (text == "left" || text == "L" || text == "l") return Side::Left;
  if (text == "right" || text == "R" || text == "r") return Side::Right;
  throw Error(ErrorCode::ValidationError, "unknown ear side '" + std::string(text) + "'");
}

std::vector<Contour<double>> read_contours(std::istream& in) {
  std::vector<Contour<double>> out;
  std::string id;
  while (in >> id) {
    std::string side;
    long long count = -1;
    if (!(in >> side >> count) || count < 0) {
      throw Error(ErrorCode::ValidationError, "bad contour header for '" + id + "'");
    }
    Contour<double> c;
    c.source = id;
    c.side = side_from_string(side);
    c.points.resize(count, 2);
    for (long long i = 0; i < count; ++i) {
      if (!(in >> c.points(i, 0) >> c.points(i, 1))) {
        throw Error(ErrorCode::ValidationError, "contour '" + id + "' truncated at point " +
                                                    std::to_string(i));
      }
    }
    out.push_back(std::move(c));
  }
  if (!in.eof()) throw Error(ErrorCode::ValidationError, "unreadable contour stream");
  return out;
}

std::vector<Contour<double>> read_contours(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open contour file " + path.string());
  return read_contours(in);
}

void write_contours(std::ostream& out, const std::vector<Contour<double>>& contours) {
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  for (const auto& c : contours) {
    out << c.source << ' ' << to_string(c.side) << ' ' << c.points.rows() << '\n';
    for (Eigen::Index i = 0; i < c.points.rows(); ++i) {
      out << c.points(i, 0) << ' ' << c.points(i, 1) << '\n';
    }
  }
  out.precision(old);
}

}  // namespace reid::contour
