#include "svariv/instrument.hpp"

#include "svariv/csv.hpp"
#include "svariv/error.hpp"

#include <cmath>
#include <ostream>

namespace svariv {

namespace {

constexpr const char* kModule = "instrument";

[[noreturn]] void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, kModule, msg); }

}  // namespace

const char* to_string(ValueKind kind) {
    switch (kind) {
        case ValueKind::Level: return "level";
        case ValueKind::LogDiff: return "logdiff";
        case ValueKind::SemiannualLogDiff: return "semiannual-logdiff";
    }
    return "?";
}

ValueKind parse_value_kind(const std::string& text) {
    if (text == "level") return ValueKind::Level;
    if (text == "logdiff" || text == "log-difference") return ValueKind::LogDiff;
    if (text == "semiannual-logdiff" || text == "semiannual") return ValueKind::SemiannualLogDiff;
    fail(ErrorKind::Parse, "unknown value kind '" + text + "'");
}

void ForecastVintage::validate() const {
    const bool anchor = kind == ValueKind::Level && horizon == 0;
    if (horizon < 1 && !anchor) fail(ErrorKind::Integrity, "forecast horizon must be at least 1");
    if (anchor) {
        if (target.first > issue.last())
            fail(ErrorKind::Integrity, "level anchor row targets a period after its issue");
        return;
    }
    if (!(target.first > issue.last()))
        fail(ErrorKind::Integrity, "target " + target.str() + " is not after issue " + issue.str());
    if (kind == ValueKind::SemiannualLogDiff && target.frequency != Period::Frequency::Semiannual)
        fail(ErrorKind::Integrity, "semiannual forecast must target a half-year");
}

ForecastVintage level_to_logdiff_forecast(const ForecastVintage& vintage, double prior_level) {
    if (vintage.kind != ValueKind::Level) fail(ErrorKind::Parameter, "expected a level forecast");
    if (!(vintage.value > 0.0)) fail(ErrorKind::Domain, "nonpositive forecast level");
    if (!(prior_level > 0.0)) fail(ErrorKind::Domain, "nonpositive prior level");
    ForecastVintage out = vintage;
    out.value = std::log(vintage.value) - std::log(prior_level);
    out.kind = ValueKind::LogDiff;
    return out;
}

ForecastError forecast_error(const std::string& country, Quarter realized_quarter, double realized,
                             const ForecastVintage& forecast) {
    if (forecast.kind != ValueKind::LogDiff) fail(ErrorKind::Parameter, "forecast must be a log-difference");
    if (forecast.horizon != 1) fail(ErrorKind::Parameter, "forecast must be one step ahead");
    if (forecast.target.frequency != Period::Frequency::Quarterly || forecast.target.first != realized_quarter ||
        forecast.target_country != country)
        fail(ErrorKind::Alignment, "forecast for " + forecast.target_country + " " + forecast.target.str() +
                                       " does not match realized " + country + " " + realized_quarter.str());
    return {country, realized_quarter, realized - forecast.value};
}

std::array<double, 2> interpolate_semiannual(double semiannual) { return {semiannual / 2.0, semiannual / 2.0}; }

std::array<ForecastVintage, 2> interpolate_semiannual(const ForecastVintage& semiannual) {
    if (semiannual.kind != ValueKind::SemiannualLogDiff) fail(ErrorKind::Parameter, "expected a half-year forecast");
    const auto halves = interpolate_semiannual(semiannual.value);
    std::array<ForecastVintage, 2> out{semiannual, semiannual};
    for (int i = 0; i < 2; ++i) {
        out[i].kind = ValueKind::LogDiff;
        out[i].target = Period{Period::Frequency::Quarterly, semiannual.target.first + i};
        out[i].value = halves[i];
    }
    return out;
}

double ExportWeights::at(Quarter q, const std::string& partner) const {
    auto it = weights.find(q);
    if (it == weights.end()) return 0.0;
    auto w = it->second.find(partner);
    return w == it->second.end() ? 0.0 : w->second;
}

ExportWeights export_share_weights(const std::string& domestic, const CountrySeries& exports, int window,
                                   const CountrySeries* coverage) {
    if (window < 1) fail(ErrorKind::Parameter, "moving-average window must be at least 1");

    // quarter -> partner -> raw share
    std::map<Quarter, std::map<std::string, double>> shares;
    {
        std::map<Quarter, double> totals;
        for (const auto& [partner, series] : exports)
            for (const auto& [q, v] : series) {
                if (!(v >= 0.0) || !std::isfinite(v))
                    fail(ErrorKind::Domain, "negative export value (" + domestic + ", " + partner + ", " + q.str() + ")");
                totals[q] += v;
            }
        for (const auto& [q, total] : totals)
            if (!(total > 0.0)) fail(ErrorKind::Degenerate, "all-zero exports for " + domestic + " in " + q.str());
        for (const auto& [partner, series] : exports)
            for (const auto& [q, v] : series) shares[q][partner] = v / totals.at(q);
    }

    ExportWeights out;
    out.domestic = domestic;
    out.window = window;
    for (const auto& [q, _] : shares) {
        std::map<std::string, double> ma;
        int used = 0;
        for (int lag = 0; lag < window; ++lag) {
            auto it = shares.find(q - lag);
            if (it == shares.end()) continue;
            ++used;
            for (const auto& [partner, s] : it->second) ma[partner] += s;
        }
        if (used < window) out.short_window_quarters.push_back(q);
        for (auto& [_, s] : ma) s /= used;

        if (coverage) {
            for (auto it = ma.begin(); it != ma.end();) {
                auto c = coverage->find(it->first);
                const bool covered = c != coverage->end() && c->second.count(q) > 0;
                it = covered ? std::next(it) : ma.erase(it);
            }
        }
        double total = 0.0;
        for (const auto& [_, s] : ma) total += s;
        if (ma.empty() || !(total > 0.0)) continue;
        for (auto& [_, s] : ma) s /= total;
        out.weights[q] = std::move(ma);
    }
    return out;
}

std::optional<double> InstrumentSeries::at(Quarter q) const {
    auto it = values.find(q);
    if (it == values.end()) return std::nullopt;
    return it->second;
}

InstrumentSeries aggregate_instrument(const CountrySeries& partner_errors, const ExportWeights& weights) {
    InstrumentSeries out;
    out.country = weights.domestic;
    std::set<std::string> used;
    for (const auto& [q, ws] : weights.weights) {
        double num = 0.0;
        double den = 0.0;
        for (const auto& [partner, w] : ws) {
            auto p = partner_errors.find(partner);
            if (p == partner_errors.end()) continue;
            auto e = p->second.find(q);
            if (e == p->second.end()) continue;
            num += w * e->second;
            den += w;
            used.insert(partner);
        }
        if (den > 0.0) out.values[q] = num / den;
    }
    out.partners.assign(used.begin(), used.end());
    return out;
}

InstrumentSeries single_partner_instrument(const std::string& domestic, const std::string& partner,
                                           const CountrySeries& partner_errors) {
    auto it = partner_errors.find(partner);
    if (it == partner_errors.end()) fail(ErrorKind::Alignment, "no forecast errors for partner " + partner);
    InstrumentSeries out;
    out.country = domestic;
    out.values = it->second;
    out.partners = {partner};
    out.weighting = "single-partner";
    return out;
}

const std::set<std::string>& g7_countries() {
    static const std::set<std::string> g7{"CAN", "DEU", "FRA", "GBR", "ITA", "JPN", "USA"};
    return g7;
}

CountrySeries filter_partners(const CountrySeries& errors, const std::set<std::string>& keep) {
    CountrySeries out;
    for (const auto& [partner, series] : errors)
        if (keep.count(partner)) out[partner] = series;
    return out;
}

CountrySeries one_step_forecasts(const std::vector<ForecastVintage>& vintages, const std::string& variable) {
    struct Key {
        std::string issuer;
        Period issue;
        std::string country;
        Period target;
        auto operator<=>(const Key&) const = default;
    };
    std::map<Key, double> anchors;
    for (const auto& v : vintages)
        if (v.variable == variable && v.kind == ValueKind::Level && v.horizon == 0)
            anchors[{v.issuer, v.issue, v.target_country, v.target}] = v.value;

    struct Candidate {
        Period issue;
        bool quarterly = false;
        double value = 0.0;
    };
    std::map<std::string, std::map<Quarter, Candidate>> best;
    auto offer = [&](const std::string& country, Quarter q, const Candidate& c) {
        auto [it, inserted] = best[country].emplace(q, c);
        if (inserted) return;
        auto& cur = it->second;
        if (c.issue.first > cur.issue.first || (c.issue.first == cur.issue.first && c.quarterly && !cur.quarterly))
            cur = c;
    };

    for (const auto& v : vintages) {
        if (v.variable != variable) continue;
        v.validate();
        if (v.horizon != 1) continue;
        switch (v.kind) {
            case ValueKind::Level: {
                if (v.target.frequency != Period::Frequency::Quarterly)
                    fail(ErrorKind::Parse, "level forecasts must target a quarter");
                const Period prior{Period::Frequency::Quarterly, v.target.first - 1};
                auto a = anchors.find({v.issuer, v.issue, v.target_country, prior});
                if (a == anchors.end())
                    fail(ErrorKind::Alignment, "level forecast " + v.issuer + " " + v.issue.str() + " for " +
                                                   v.target_country + " " + v.target.str() + " has no level anchor for " +
                                                   prior.str());
                const auto d = level_to_logdiff_forecast(v, a->second);
                offer(v.target_country, v.target.first, {v.issue, true, d.value});
                break;
            }
            case ValueKind::LogDiff:
                if (v.target.frequency != Period::Frequency::Quarterly)
                    fail(ErrorKind::Parse, "log-difference forecasts must target a quarter");
                offer(v.target_country, v.target.first, {v.issue, true, v.value});
                break;
            case ValueKind::SemiannualLogDiff:
                for (const auto& q : interpolate_semiannual(v)) offer(v.target_country, q.target.first, {v.issue, false, q.value});
                break;
        }
    }

    CountrySeries out;
    for (const auto& [country, series] : best)
        for (const auto& [q, c] : series) out[country][q] = c.value;
    return out;
}

CountrySeries forecast_errors(const CountrySeries& realized, const CountrySeries& forecasts) {
    CountrySeries out;
    for (const auto& [country, fc] : forecasts) {
        auto r = realized.find(country);
        if (r == realized.end()) continue;
        for (const auto& [q, f] : fc) {
            auto v = r->second.find(q);
            if (v == r->second.end()) continue;
            ForecastVintage vintage;
            vintage.target_country = country;
            vintage.target = Period{Period::Frequency::Quarterly, q};
            vintage.issue = Period{Period::Frequency::Quarterly, q - 1};
            vintage.value = f;
            out[country][q] = forecast_error(country, q, v->second, vintage).value;
        }
    }
    return out;
}

InstrumentSet build_instruments(const std::vector<ForecastVintage>& vintages, const CountrySeries& realized,
                                const std::map<std::string, CountrySeries>& exports, const InstrumentOptions& options) {
    const auto errors_all = forecast_errors(realized, one_step_forecasts(vintages, options.variable));
    InstrumentSet out;

    for (const auto& [domestic, partner] : options.single_partner) {
        auto inst = single_partner_instrument(domestic, partner, errors_all);
        inst.g7_only = options.g7_only;
        out[domestic] = std::move(inst);
    }

    for (const auto& [domestic, flows] : exports) {
        if (out.count(domestic)) continue;
        CountrySeries errors = errors_all;
        errors.erase(domestic);
        CountrySeries partner_flows = flows;
        partner_flows.erase(domestic);
        if (options.g7_only) errors = filter_partners(errors, g7_countries());
        // Shares are taken over all recorded destinations; the G7 filter only
        // changes which partners survive the coverage renormalization.
        const auto weights = export_share_weights(domestic, partner_flows, options.window, &errors);
        auto inst = aggregate_instrument(errors, weights);
        inst.g7_only = options.g7_only;
        if (inst.values.empty()) fail(ErrorKind::Alignment, "instrument for " + domestic + " has no covered quarter");
        out[domestic] = std::move(inst);
    }
    return out;
}

std::vector<ForecastVintage> read_vintages(const std::string& path) {
    const auto table = csv::read(path, kModule);
    csv::require_header(table,
                        {"issuer", "issue_period", "target_country", "target_period", "variable", "horizon", "kind", "value"},
                        kModule, path);
    std::vector<ForecastVintage> out;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& f = table.rows[i];
        const std::string where = path + " line " + std::to_string(table.line_numbers[i]);
        ForecastVintage v;
        v.issuer = f[0];
        try {
            v.issue = Period::parse(f[1]);
            v.target = Period::parse(f[3]);
        } catch (const Error& e) {
            fail(ErrorKind::Parse, where + ": " + e.what());
        }
        v.target_country = f[2];
        v.variable = f[4];
        v.horizon = static_cast<int>(csv::to_double(f[5], kModule, where));
        v.kind = parse_value_kind(f[6]);
        v.value = csv::to_double(f[7], kModule, where);
        out.push_back(std::move(v));
    }
    return out;
}

CountrySeries read_country_series(const std::string& path) {
    const auto table = csv::read(path, kModule);
    csv::require_header(table, {"country", "quarter", "value"}, kModule, path);
    CountrySeries out;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& f = table.rows[i];
        const std::string where = path + " line " + std::to_string(table.line_numbers[i]);
        if (!out[f[0]].emplace(Quarter::parse(f[1]), csv::to_double(f[2], kModule, where)).second)
            fail(ErrorKind::Integrity, where + ": duplicate (" + f[0] + ", " + f[1] + ")");
    }
    return out;
}

std::map<std::string, CountrySeries> read_exports(const std::string& path) {
    const auto table = csv::read(path, kModule);
    csv::require_header(table, {"domestic", "partner", "quarter", "value"}, kModule, path);
    std::map<std::string, CountrySeries> out;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& f = table.rows[i];
        const std::string where = path + " line " + std::to_string(table.line_numbers[i]);
        if (!out[f[0]][f[1]].emplace(Quarter::parse(f[2]), csv::to_double(f[3], kModule, where)).second)
            fail(ErrorKind::Integrity, where + ": duplicate export flow");
    }
    return out;
}

InstrumentSet read_instruments(const std::string& path) {
    const auto table = csv::read(path, kModule);
    csv::require_header(table, {"country", "quarter", "m"}, kModule, path);
    InstrumentSet out;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& f = table.rows[i];
        const std::string where = path + " line " + std::to_string(table.line_numbers[i]);
        auto& inst = out[f[0]];
        inst.country = f[0];
        inst.weighting = "file";
        if (!inst.values.emplace(Quarter::parse(f[1]), csv::to_double(f[2], kModule, where)).second)
            fail(ErrorKind::Integrity, where + ": duplicate instrument value");
    }
    return out;
}

void write_instruments(std::ostream& out, const InstrumentSet& set) {
    out << "country,quarter,m\n";
    for (const auto& [country, inst] : set)
        for (const auto& [q, v] : inst.values) out << country << ',' << q.str() << ',' << csv::fmt(v) << '\n';
}

RegressionResult pretest(PretestKind kind, const CountrySeries& series, const InstrumentSet& m, bool fixed_effects,
                         const CovSpec& cov) {
    if (cov.kind != CovSpec::Kind::HC0 && cov.kind != CovSpec::Kind::TwoWayCluster)
        fail(ErrorKind::Parameter, "pretest covariance must be heteroskedasticity-robust or two-way clustered");

    std::vector<double> lhs;
    std::vector<double> rhs;
    std::vector<std::string> country;
    std::vector<std::string> quarter;
    for (const auto& [c, s] : series) {
        auto inst = m.find(c);
        if (inst == m.end()) continue;
        for (const auto& [q, v] : s) {
            auto mv = inst->second.at(q);
            if (!mv) continue;
            const double x = kind == PretestKind::Relevance ? *mv : v;
            const double y = kind == PretestKind::Relevance ? v : *mv;
            lhs.push_back(y);
            rhs.push_back(x);
            country.push_back(c);
            quarter.push_back(q.str());
        }
    }

    const auto country_ids = encode_labels(country);
    int groups = 0;
    for (int id : country_ids) groups = std::max(groups, id + 1);
    const Eigen::Index n = static_cast<Eigen::Index>(lhs.size());
    const Eigen::Index det = fixed_effects ? groups : 1;
    if (n < det + 1)
        fail(ErrorKind::SingularDesign, "pretest has " + std::to_string(n) + " aligned observations for " +
                                            std::to_string(det + 1) + " parameters");

    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, 1 + det);
    Eigen::VectorXd y(n);
    std::vector<std::string> names{"slope"};
    if (fixed_effects) {
        std::vector<std::string> seen(groups);
        for (Eigen::Index i = 0; i < n; ++i) seen[country_ids[i]] = country[i];
        for (const auto& s : seen) names.push_back("fe." + s);
    } else {
        names.push_back("const");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        y(i) = lhs[i];
        X(i, 0) = rhs[i];
        X(i, fixed_effects ? 1 + country_ids[i] : 1) = 1.0;
    }

    CovSpec spec = cov;
    if (cov.kind == CovSpec::Kind::TwoWayCluster) {
        spec.cluster1 = country_ids;
        spec.cluster2 = encode_labels(quarter);
    }
    return ols(y, X, spec, names);
}

}  // namespace svariv
