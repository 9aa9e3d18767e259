#include "svariv/error.hpp"
#include "svariv/quarter.hpp"

#include <charconv>
#include <cstdio>

namespace svariv {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Parse: return "parse error";
        case ErrorKind::Integrity: return "integrity error";
        case ErrorKind::Domain: return "domain error";
        case ErrorKind::Alignment: return "alignment error";
        case ErrorKind::SingularDesign: return "singular design";
        case ErrorKind::SampleSize: return "insufficient sample";
        case ErrorKind::OrderCondition: return "order condition";
        case ErrorKind::Identification: return "identification error";
        case ErrorKind::Degenerate: return "degenerate input";
        case ErrorKind::Stability: return "stability error";
        case ErrorKind::Parameter: return "parameter error";
        case ErrorKind::NotImplemented: return "not implemented";
        case ErrorKind::Config: return "config error";
        case ErrorKind::Io: return "i/o error";
    }
    return "error";
}

namespace {

bool parse_year_and_index(std::string_view text, char tag, int max_index, int& year, int& index) {
    if (text.size() != 6 || (text[4] != tag && text[4] != static_cast<char>(tag + 32))) return false;
    auto [p, ec] = std::from_chars(text.data(), text.data() + 4, year);
    if (ec != std::errc{} || p != text.data() + 4) return false;
    index = text[5] - '0';
    return index >= 1 && index <= max_index;
}

}  // namespace

Quarter Quarter::parse(std::string_view text) {
    int year = 0;
    int q = 0;
    if (!parse_year_and_index(text, 'Q', 4, year, q))
        throw Error(ErrorKind::Parse, "quarter", "expected YYYYQn, got '" + std::string(text) + "'");
    return Quarter(year, q);
}

std::string Quarter::str() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04dQ%d", year(), quarter());
    return buf;
}

Period Period::parse(std::string_view text) {
    int year = 0;
    int idx = 0;
    if (parse_year_and_index(text, 'Q', 4, year, idx))
        return Period{Frequency::Quarterly, Quarter(year, idx)};
    if (parse_year_and_index(text, 'S', 2, year, idx))
        return Period{Frequency::Semiannual, Quarter(year, idx == 1 ? 1 : 3)};
    throw Error(ErrorKind::Parse, "quarter", "expected YYYYQn or YYYYSn, got '" + std::string(text) + "'");
}

std::string Period::str() const {
    if (frequency == Frequency::Quarterly) return first.str();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04dS%d", first.year(), first.quarter() <= 2 ? 1 : 2);
    return buf;
}

}  // namespace svariv
