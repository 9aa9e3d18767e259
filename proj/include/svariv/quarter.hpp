#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace svariv {

// Calendar quarter stored as a single ordinal (year * 4 + quarter - 1) so
// arithmetic and ordering are plain integer operations.
class Quarter {
public:
    constexpr Quarter() = default;
    constexpr Quarter(int year, int quarter) : ordinal_(year * 4 + (quarter - 1)) {}

    static constexpr Quarter from_ordinal(int ordinal) {
        Quarter q;
        q.ordinal_ = ordinal;
        return q;
    }

    // Accepts "YYYYQn"; throws svariv::Error(Parse) otherwise.
    static Quarter parse(std::string_view text);

    constexpr int ordinal() const { return ordinal_; }
    constexpr int year() const { return ordinal_ >= 0 ? ordinal_ / 4 : (ordinal_ - 3) / 4; }
    constexpr int quarter() const { return ordinal_ - year() * 4 + 1; }

    std::string str() const;

    constexpr Quarter operator+(int k) const { return from_ordinal(ordinal_ + k); }
    constexpr Quarter operator-(int k) const { return from_ordinal(ordinal_ - k); }
    constexpr int operator-(Quarter other) const { return ordinal_ - other.ordinal_; }
    constexpr auto operator<=>(const Quarter&) const = default;

private:
    int ordinal_ = 0;
};

// A forecast target period: either one quarter or one half-year (two quarters).
struct Period {
    enum class Frequency { Quarterly, Semiannual };

    Frequency frequency = Frequency::Quarterly;
    Quarter first;  // first quarter covered

    // Accepts "YYYYQn" or "YYYYSn".
    static Period parse(std::string_view text);

    int quarters() const { return frequency == Frequency::Quarterly ? 1 : 2; }
    Quarter last() const { return first + (quarters() - 1); }
    std::string str() const;

    auto operator<=>(const Period&) const = default;
};

}  // namespace svariv
