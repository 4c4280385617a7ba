#pragma once

#include <string>

namespace hpso::text {

/// Shortest decimal form that parses back to exactly `v` ("nan"/"inf" otherwise).
std::string shortest(double v);

}  // namespace hpso::text
