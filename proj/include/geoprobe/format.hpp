#pragma once

#include <string>

namespace geoprobe {

// printf-style "%.{decimals}f"; locale independent.
std::string format_fixed(double value, int decimals);

// Rounds to the given number of significant digits.
double round_significant(double value, int digits = 6);

// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_now_iso8601();

}  // namespace geoprobe
