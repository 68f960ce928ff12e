#pragma once

#include <filesystem>
#include <string>

namespace levydecon::io {

/// Decimal with 17 significant digits (round-trips a double).
std::string fmt17(double v);

/// Writes `content` to `path`, creating parent directories. Throws
/// std::runtime_error naming the path on failure.
void write_text(const std::filesystem::path& path, const std::string& content);

} // namespace levydecon::io
