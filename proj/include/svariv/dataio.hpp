#pragma once

#include "svariv/quarter.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace svariv {

// ---------------------------------------------------------------------------
// Raw ingestion
// ---------------------------------------------------------------------------

struct RawRow {
    std::string country;
    Quarter quarter;
    std::string variable;
    double value = 0.0;
    std::string unit;
};

struct Coverage {
    std::string country;
    Quarter first;
    Quarter last;
    int quarters = 0;   // distinct quarters with at least one observation
    int variables = 0;
};

// Long-format panel keyed by (country, variable, quarter). Iteration order is
// lexicographic, so everything derived from it is independent of file row order.
class RawPanel {
public:
    using Series = std::map<Quarter, double>;

    // Throws Integrity on a duplicate (country, quarter, variable).
    void add(const RawRow& row);

    // Throws Integrity when some (country, variable) series has a gap.
    void validate() const;

    std::size_t size() const { return size_; }
    std::vector<std::string> countries() const;
    const Series* find(const std::string& country, const std::string& variable) const;
    std::vector<Coverage> coverage() const;

    const std::map<std::string, std::map<std::string, Series>>& data() const { return data_; }

private:
    std::map<std::string, std::map<std::string, Series>> data_;
    std::map<std::string, std::string> units_;
    std::size_t size_ = 0;
};

struct VariableRule {
    std::string name;                     // model column
    std::string source;                   // raw variable
    std::optional<std::string> deflator;  // raw deflator variable; empty when already real or not a quantity
    bool per_capita = false;
    bool log = false;
};

struct SampleWindow {
    std::optional<Quarter> start;
    std::optional<Quarter> end;
};

struct SeriesSpec {
    std::vector<VariableRule> variables;
    std::string population;                            // raw variable used by per-capita rules
    std::string nominal_gdp;                           // denominator for share computation
    std::map<std::string, std::string> share_sources;  // model column -> raw nominal numerator
    std::map<std::string, SampleWindow> windows;       // per-country estimation window

    static SeriesSpec from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;

    // Raw variables that must be present for every retained quarter.
    std::vector<std::string> required_inputs() const;
};

// Reads the long CSV (header country,quarter,variable,value,unit).
// Rows whose variable is not referenced by `schema` are kept as-is.
RawPanel load_panel(const std::string& path, const SeriesSpec& schema);
RawPanel load_panel(std::istream& in, const SeriesSpec& schema, const std::string& source = "<stream>");

// ---------------------------------------------------------------------------
// Model dataset
// ---------------------------------------------------------------------------

struct CountryData {
    std::string country;
    Quarter start;
    Eigen::MatrixXd values;                // T x columns
    std::map<std::string, double> shares;  // e.g. "g" -> mean nominal G/GDP
    int share_observations = 0;

    int rows() const { return static_cast<int>(values.rows()); }
    Quarter end() const { return start + (rows() - 1); }
};

struct ModelDataset {
    std::vector<std::string> columns;
    std::vector<CountryData> countries;

    int column(const std::string& name) const;  // throws Config when absent
    bool has_column(const std::string& name) const;
    const CountryData& country(const std::string& name) const;

    // Observation-weighted mean of per-country shares.
    double pooled_share(const std::string& name) const;

    ModelDataset without_country(const std::string& name) const;
    ModelDataset only_country(const std::string& name) const;

    void write_csv(std::ostream& out) const;
};

ModelDataset build_model_dataset(const RawPanel& raw, const SeriesSpec& spec);

}  // namespace svariv
