#include "hpso/format.hpp"

#include <charconv>
#include <cmath>
#include <system_error>

namespace hpso::text {

std::string shortest(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

}  // namespace hpso::text
