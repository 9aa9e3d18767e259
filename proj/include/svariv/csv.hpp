#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace svariv::csv {

// Minimal reader for the unquoted comma-separated files this project
// exchanges. Blank lines are skipped; a trailing '\r' is stripped.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> line_numbers;  // 1-based source line of each row

    int column(std::string_view name) const;  // -1 if absent
};

Table read(const std::string& path, std::string_view module);
Table parse(std::istream& in, std::string_view module);

std::vector<std::string> split(std::string_view line);

// Requires the header to equal `expected` exactly (order included).
void require_header(const Table& table, const std::vector<std::string>& expected,
                    std::string_view module, const std::string& source);

double to_double(const std::string& field, std::string_view module, const std::string& where);

// Shortest round-trip-safe rendering used by every writer so reruns are byte-identical.
std::string fmt(double value);

}  // namespace svariv::csv
