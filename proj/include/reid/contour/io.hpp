#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "reid/contour/contour.hpp"

namespace reid::contour {

// Contour text format, whitespace-delimited, any number of records:
//
//   <sighting-id> <left|right> <point-count>
//   <x> <y>
//   ...
//
// Line breaks carry no meaning, so CRLF files read the same as LF files.

std::vector<Contour<double>> read_contours(std::istream& in);
std::vector<Contour<double>> read_contours(const std::filesystem::path& path);
void write_contours(std::ostream& out, const std::vector<Contour<double>>& contours);

}  // namespace reid::contour
