#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mtr {

/// Reads all lines of a UTF-8 text file. Strips trailing \r and \n.
std::vector<std::string> read_lines(const std::string& path);

std::vector<std::string> read_lines(std::istream& in);

/// Writes one line per element, '\n' terminated.
void write_lines(const std::string& path, const std::vector<std::string>& lines);

void write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

/// Fixed-point decimal with `digits` places, used for all CSV and report
/// output so re-emission is byte-identical.
std::string format_fixed(double v, int digits);

}  // namespace mtr
