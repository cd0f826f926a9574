#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sibf::detail {

// Writes `bytes` to `path` via a sibling temporary file renamed into place,
// so an interrupted write never leaves a partial file at `path`.
void write_file_atomic(const std::string& path,
                       const std::vector<std::uint8_t>& bytes);

// Reads the whole file. Throws std::runtime_error with `who` in the message
// when the file cannot be opened.
std::vector<std::uint8_t> read_file(const std::string& path,
                                    const std::string& who);

}  // namespace sibf::detail
