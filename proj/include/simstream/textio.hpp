#pragma once

#include <string>
#include <vector>

namespace simstream {

std::vector<std::string> read_lines(const std::string& path);

// One pre-tokenized sentence per line, space-separated tokens.
std::vector<std::vector<std::string>> read_token_lines(const std::string& path);

std::vector<std::string> split_tokens(const std::string& line);
std::string join_tokens(const std::vector<std::string>& tokens);

// Writes via a temp file in the same directory followed by a rename.
void atomic_write_file(const std::string& path, const std::string& contents);

void write_token_lines(const std::string& path,
                       const std::vector<std::vector<std::string>>& lines);

}  // namespace simstream
