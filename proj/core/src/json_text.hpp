#pragma once

// Canonical JSON text helpers shared by the dataset and checkpoint writers.

#include <span>
#include <string>
#include <string_view>

namespace drpo::json_text {

/// Shortest-free, locale-independent %.17g rendering; throws NumericError for
/// NaN or infinity, which JSON cannot carry.
std::string number(double x);

/// Escaped, quoted JSON string.
std::string quote(std::string_view s);

/// "[a,b,c]" with number() elements.
std::string number_array(std::span<const double> xs);

}  // namespace drpo::json_text
