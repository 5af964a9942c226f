// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace scl {

// Lines of a UTF-8 text file without trailing '\n' / '\r'. Throws DataError if
// the file cannot be opened.
std::vector<std::string> read_lines(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

// Writes to "<path>.tmp" and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

bool is_blank(std::string_view line);

}  // namespace scl
