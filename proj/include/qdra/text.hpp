#pragma once

#include <string>

namespace qdra {

/// Shortest decimal form that parses back to exactly the same double; used
/// everywhere a float reaches a text file so reruns are byte-identical.
std::string format_double(double v);

}  // namespace qdra
