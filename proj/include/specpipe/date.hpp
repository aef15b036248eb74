#pragma once

#include <compare>
#include <string>

namespace specpipe {

// Calendar date, ISO-8601 (YYYY-MM-DD). Validated on parse, ordered lexicographically
// on (year, month, day).
struct Date {
  int year = 0;
  int month = 0;
  int day = 0;

  auto operator<=>(const Date&) const = default;

  // Throws Error(MalformedDate) on anything that is not a valid calendar date.
  static Date parse(const std::string& text);

  std::string to_string() const;

  Date next_day() const;
  Date plus_days(int n) const;  // n >= 0
};

}  // namespace specpipe
