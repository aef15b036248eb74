#include "specpipe/date.hpp"

#include <cctype>
#include <cstdio>

#include "specpipe/error.hpp"

namespace specpipe {

namespace {

bool is_leap(int year) {
  return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

int days_in_month(int year, int month) {
  static const int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month == 2 && is_leap(year)) return 29;
  return days[month - 1];
}

}  // namespace

Date Date::parse(const std::string& text) {
  auto fail = [&] { throw Error(ErrorCode::MalformedDate, "'" + text + "' is not YYYY-MM-DD"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') fail();
  for (int i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) fail();
  }
  Date d;
  d.year = std::stoi(text.substr(0, 4));
  d.month = std::stoi(text.substr(5, 2));
  d.day = std::stoi(text.substr(8, 2));
  if (d.month < 1 || d.month > 12) fail();
  if (d.day < 1 || d.day > days_in_month(d.year, d.month)) fail();
  return d;
}

std::string Date::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
  return buf;
}

Date Date::next_day() const {
  Date d = *this;
  d.day += 1;
  if (d.day > days_in_month(d.year, d.month)) {
    d.day = 1;
    d.month += 1;
    if (d.month > 12) {
      d.month = 1;
      d.year += 1;
    }
  }
  return d;
}

Date Date::plus_days(int n) const {
  Date d = *this;
  for (int i = 0; i < n; ++i) d = d.next_day();
  return d;
}

}  // namespace specpipe
