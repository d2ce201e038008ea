#pragma once

#include <string>

namespace dhj {

/// Text form of a double used in CSV artifacts (17 significant digits).
std::string format_double(double v);

void write_text_file(const std::string &path, const std::string &contents);
std::string read_text_file(const std::string &path);
void ensure_directory(const std::string &path);
std::string join_path(const std::string &dir, const std::string &file);

} // namespace dhj
