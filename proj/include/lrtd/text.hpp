#pragma once

#include <string>

namespace lrtd {

// Shortest decimal form that round-trips the exact double value.
std::string fmt_double(double v);

}  // namespace lrtd
