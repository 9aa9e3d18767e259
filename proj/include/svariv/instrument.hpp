#pragma once

#include "svariv/quarter.hpp"
#include "svariv/regress.hpp"

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace svariv {

// Quarterly series keyed by country, e.g. realized growth or forecast errors.
using CountrySeries = std::map<std::string, std::map<Quarter, double>>;

enum class ValueKind { Level, LogDiff, SemiannualLogDiff };

const char* to_string(ValueKind kind);
ValueKind parse_value_kind(const std::string& text);

struct ForecastVintage {
    std::string issuer;        // "SPF", "OECD-EO", ...
    Period issue;
    std::string target_country;
    Period target;
    std::string variable;
    int horizon = 1;           // steps ahead; 0 only for a level row that anchors a level forecast
    ValueKind kind = ValueKind::LogDiff;
    double value = 0.0;

    void validate() const;
};

struct ForecastError {
    std::string country;
    Quarter quarter;
    double value = 0.0;
};

// ln(forecast level) - ln(prior level), both taken from the same vintage.
ForecastVintage level_to_logdiff_forecast(const ForecastVintage& vintage, double prior_level);

// Realized quarterly log-difference minus a one-step log-difference forecast
// for the same quarter.
ForecastError forecast_error(const std::string& country, Quarter realized_quarter, double realized,
                             const ForecastVintage& forecast);

// Even split of a half-year log-difference across its two quarters.
std::array<double, 2> interpolate_semiannual(double semiannual);
std::array<ForecastVintage, 2> interpolate_semiannual(const ForecastVintage& semiannual);

// Weights for one domestic economy: quarter -> partner -> weight.
struct ExportWeights {
    std::string domestic;
    std::map<Quarter, std::map<std::string, double>> weights;
    int window = 4;
    std::vector<Quarter> short_window_quarters;  // where fewer than `window` quarters were averaged

    double at(Quarter q, const std::string& partner) const;  // 0 when absent
};

// exports: partner -> quarter -> export value. Shares are averaged over the
// trailing `window` quarters and, when `coverage` is given, renormalized over
// the partners that have a forecast error in that quarter.
ExportWeights export_share_weights(const std::string& domestic, const CountrySeries& exports, int window = 4,
                                   const CountrySeries* coverage = nullptr);

struct InstrumentSeries {
    std::string country;
    std::map<Quarter, double> values;
    std::vector<std::string> partners;
    std::string weighting = "export-share";
    bool g7_only = false;

    std::optional<double> at(Quarter q) const;
};

using InstrumentSet = std::map<std::string, InstrumentSeries>;

// m(t) = sum_p w(p,t) fe_p(t) over partners with an error at t (weights renormalized
// over them). Quarters without any covered partner are left out.
InstrumentSeries aggregate_instrument(const CountrySeries& partner_errors, const ExportWeights& weights);

// Canada-style single-partner instrument: the partner's errors with weight 1.
InstrumentSeries single_partner_instrument(const std::string& domestic, const std::string& partner,
                                           const CountrySeries& partner_errors);

const std::set<std::string>& g7_countries();
CountrySeries filter_partners(const CountrySeries& errors, const std::set<std::string>& keep);

// Collapses raw vintages into one quarterly log-difference forecast per
// (country, target quarter) for `variable`: level rows are differenced against
// their horizon-0 anchor, half-year rows are split evenly, and when several
// vintages target the same quarter the latest issue wins (quarterly over split).
CountrySeries one_step_forecasts(const std::vector<ForecastVintage>& vintages, const std::string& variable);

// realized - forecast wherever both exist.
CountrySeries forecast_errors(const CountrySeries& realized, const CountrySeries& forecasts);

struct InstrumentOptions {
    std::string variable = "gdp";
    int window = 4;
    bool g7_only = false;
    std::map<std::string, std::string> single_partner;  // domestic -> partner (Canada: USA)
};

// Full construction for each domestic economy present in `exports` or in
// `options.single_partner`.
InstrumentSet build_instruments(const std::vector<ForecastVintage>& vintages, const CountrySeries& realized,
                                const std::map<std::string, CountrySeries>& exports, const InstrumentOptions& options);

// --- file formats ---------------------------------------------------------

std::vector<ForecastVintage> read_vintages(const std::string& path);
CountrySeries read_country_series(const std::string& path);  // header country,quarter,value
std::map<std::string, CountrySeries> read_exports(const std::string& path);  // domestic,partner,quarter,value
InstrumentSet read_instruments(const std::string& path);     // country,quarter,m
void write_instruments(std::ostream& out, const InstrumentSet& set);

// --- pretests -------------------------------------------------------------

enum class PretestKind { Relevance, Exogeneity };

// Relevance: series ~ m. Exogeneity: m ~ series. Aligned on common
// (country, quarter); constant or country fixed effects. cov.kind must be HC0
// or TwoWayCluster; the cluster labels (country x quarter) are filled in here.
RegressionResult pretest(PretestKind kind, const CountrySeries& series, const InstrumentSet& m, bool fixed_effects,
                         const CovSpec& cov);

}  // namespace svariv
