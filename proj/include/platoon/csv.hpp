#ifndef PLATOON_CSV_HPP
#define PLATOON_CSV_HPP

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace platoon::csv {

/// Shortest decimal text that parses back to exactly the same double.
std::string format(double value);

/// Writes one comma-separated row terminated by '\n'. Fields are written
/// verbatim; callers keep commas out of them.
void write_row(std::ostream& out, const std::vector<std::string>& fields);
void write_row(std::ostream& out, std::initializer_list<std::string_view> fields);

}  // namespace platoon::csv

#endif  // PLATOON_CSV_HPP
