#include "json_text.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "drpo/error.hpp"

namespace drpo::json_text {

std::string number(double x) {
  if (!std::isfinite(x)) throw NumericError("cannot serialize non-finite number");
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s(buf, static_cast<std::size_t>(n));
  // Keep integral-valued doubles recognisable as floats when read back.
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

std::string quote(std::string_view s) { return nlohmann::json(std::string(s)).dump(); }

std::string number_array(std::span<const double> xs) {
  std::string out = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += number(xs[i]);
  }
  out += ']';
  return out;
}

}  // namespace drpo::json_text
