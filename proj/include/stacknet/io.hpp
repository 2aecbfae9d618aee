#pragma once

#include <string>

namespace stacknet {

// Shortest-round-trip style decimal formatting at 17 significant digits,
// locale independent.
std::string format_double(double x);

}  // namespace stacknet
