#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace twin::zip {

/// Reads every file entry of a ZIP archive (stored or deflate, no ZIP64,
/// no encryption). Entry names map to their uncompressed bytes. Throws
/// Error{archive} on anything it cannot decode or whose CRC does not match.
std::map<std::string, std::string> read_archive(std::string_view bytes);

/// Writes a ZIP archive with stored (uncompressed) entries in the given order.
std::string write_archive(const std::vector<std::pair<std::string, std::string>>& entries);

}  // namespace twin::zip
