#include "levydecon/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace levydecon::io {

std::string fmt17(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& content)
{
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  if (!out)
    throw std::runtime_error("write failed: " + path.string());
}

} // namespace levydecon::io
