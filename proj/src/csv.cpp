#include "svariv/csv.hpp"

#include "svariv/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>

namespace svariv::csv {

int Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        auto field = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
        while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
        out.emplace_back(field);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

Table parse(std::istream& in, std::string_view module) {
    Table table;
    std::string line;
    int line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        auto fields = split(line);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size())
            throw Error(ErrorKind::Parse, std::string(module),
                        "line " + std::to_string(line_no) + ": expected " + std::to_string(table.header.size()) +
                            " fields, found " + std::to_string(fields.size()));
        table.rows.push_back(std::move(fields));
        table.line_numbers.push_back(line_no);
    }
    if (!have_header) throw Error(ErrorKind::Parse, std::string(module), "empty file (no header)");
    return table;
}

Table read(const std::string& path, std::string_view module) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, std::string(module), "cannot open '" + path + "'");
    return parse(in, module);
}

void require_header(const Table& table, const std::vector<std::string>& expected, std::string_view module,
                    const std::string& source) {
    if (table.header == expected) return;
    std::string want;
    for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
    throw Error(ErrorKind::Parse, std::string(module), source + ": header must be '" + want + "'");
}

double to_double(const std::string& field, std::string_view module, const std::string& where) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = first + field.size();
    if (first != last && *first == '+') ++first;
    auto [p, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || p != last || !std::isfinite(value))
        throw Error(ErrorKind::Parse, std::string(module), where + ": non-numeric value '" + field + "'");
    return value;
}

std::string fmt(double value) {
    if (std::isnan(value)) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

}  // namespace svariv::csv
