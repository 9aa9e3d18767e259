#include "svariv/dataio.hpp"

#include "svariv/csv.hpp"
#include "svariv/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace svariv {

namespace {

constexpr const char* kModule = "dataio";

[[noreturn]] void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, kModule, msg); }

}  // namespace

void RawPanel::add(const RawRow& row) {
    auto& series = data_[row.country][row.variable];
    if (!series.emplace(row.quarter, row.value).second)
        fail(ErrorKind::Integrity, "duplicate key (" + row.country + ", " + row.quarter.str() + ", " +
                                       row.variable + ")");
    units_.emplace(row.variable, row.unit);
    ++size_;
}

void RawPanel::validate() const {
    for (const auto& [country, vars] : data_)
        for (const auto& [variable, series] : vars) {
            if (series.empty()) continue;
            const int span = series.rbegin()->first - series.begin()->first + 1;
            if (span != static_cast<int>(series.size()))
                fail(ErrorKind::Integrity, "series (" + country + ", " + variable + ") has gaps between " +
                                               series.begin()->first.str() + " and " +
                                               series.rbegin()->first.str());
        }
}

std::vector<std::string> RawPanel::countries() const {
    std::vector<std::string> out;
    for (const auto& [c, _] : data_) out.push_back(c);
    return out;
}

const RawPanel::Series* RawPanel::find(const std::string& country, const std::string& variable) const {
    auto c = data_.find(country);
    if (c == data_.end()) return nullptr;
    auto v = c->second.find(variable);
    return v == c->second.end() ? nullptr : &v->second;
}

std::vector<Coverage> RawPanel::coverage() const {
    std::vector<Coverage> out;
    for (const auto& [country, vars] : data_) {
        std::set<Quarter> quarters;
        for (const auto& [_, series] : vars)
            for (const auto& [q, __] : series) quarters.insert(q);
        if (quarters.empty()) continue;
        out.push_back({country, *quarters.begin(), *quarters.rbegin(), static_cast<int>(quarters.size()),
                       static_cast<int>(vars.size())});
    }
    return out;
}

SeriesSpec SeriesSpec::from_json(const nlohmann::json& doc) {
    SeriesSpec spec;
    try {
        for (const auto& v : doc.at("variables")) {
            VariableRule rule;
            rule.name = v.at("name").get<std::string>();
            rule.source = v.value("source", rule.name);
            if (v.contains("deflator") && !v.at("deflator").is_null())
                rule.deflator = v.at("deflator").get<std::string>();
            rule.per_capita = v.value("per_capita", false);
            rule.log = v.value("log", false);
            spec.variables.push_back(std::move(rule));
        }
        spec.population = doc.value("population", "");
        spec.nominal_gdp = doc.value("nominal_gdp", "");
        if (doc.contains("shares"))
            for (const auto& [k, v] : doc.at("shares").items()) spec.share_sources[k] = v.get<std::string>();
        if (doc.contains("windows"))
            for (const auto& [country, w] : doc.at("windows").items()) {
                SampleWindow win;
                if (w.contains("start")) win.start = Quarter::parse(w.at("start").get<std::string>());
                if (w.contains("end")) win.end = Quarter::parse(w.at("end").get<std::string>());
                spec.windows[country] = win;
            }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Config, std::string("series spec: ") + e.what());
    }

    std::set<std::string> names;
    for (const auto& rule : spec.variables) {
        if (!names.insert(rule.name).second) fail(ErrorKind::Config, "variable '" + rule.name + "' has two rules");
        if (rule.per_capita && spec.population.empty())
            fail(ErrorKind::Config, "variable '" + rule.name + "' is per capita but no population series is named");
    }
    if (!spec.share_sources.empty() && spec.nominal_gdp.empty())
        fail(ErrorKind::Config, "shares requested but 'nominal_gdp' is not set");
    return spec;
}

nlohmann::json SeriesSpec::to_json() const {
    nlohmann::json doc;
    doc["variables"] = nlohmann::json::array();
    for (const auto& r : variables) {
        nlohmann::json v{{"name", r.name}, {"source", r.source}, {"per_capita", r.per_capita}, {"log", r.log}};
        v["deflator"] = r.deflator ? nlohmann::json(*r.deflator) : nlohmann::json(nullptr);
        doc["variables"].push_back(v);
    }
    doc["population"] = population;
    doc["nominal_gdp"] = nominal_gdp;
    doc["shares"] = share_sources;
    nlohmann::json win = nlohmann::json::object();
    for (const auto& [c, w] : windows) {
        nlohmann::json e = nlohmann::json::object();
        if (w.start) e["start"] = w.start->str();
        if (w.end) e["end"] = w.end->str();
        win[c] = e;
    }
    doc["windows"] = win;
    return doc;
}

std::vector<std::string> SeriesSpec::required_inputs() const {
    std::set<std::string> req;
    for (const auto& r : variables) {
        req.insert(r.source);
        if (r.deflator) req.insert(*r.deflator);
        if (r.per_capita) req.insert(population);
    }
    for (const auto& [_, src] : share_sources) req.insert(src);
    if (!share_sources.empty()) req.insert(nominal_gdp);
    return {req.begin(), req.end()};
}

RawPanel load_panel(std::istream& in, const SeriesSpec& schema, const std::string& source) {
    auto table = csv::parse(in, kModule);
    csv::require_header(table, {"country", "quarter", "variable", "value", "unit"}, kModule, source);

    RawPanel panel;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& f = table.rows[i];
        const std::string where = source + " line " + std::to_string(table.line_numbers[i]);
        RawRow row;
        row.country = f[0];
        try {
            row.quarter = Quarter::parse(f[1]);
        } catch (const Error&) {
            fail(ErrorKind::Parse, where + ": bad quarter '" + f[1] + "'");
        }
        row.variable = f[2];
        row.value = csv::to_double(f[3], kModule, where);
        row.unit = f[4];
        if (row.country.empty() || row.variable.empty()) fail(ErrorKind::Parse, where + ": empty key field");
        panel.add(row);
    }
    panel.validate();

    // Every input the schema needs must exist for at least one country.
    for (const auto& name : schema.required_inputs()) {
        bool seen = false;
        for (const auto& [_, vars] : panel.data()) seen = seen || vars.count(name) > 0;
        if (!seen && !schema.variables.empty())
            fail(ErrorKind::Parse, source + ": schema variable '" + name + "' never appears");
    }
    return panel;
}

RawPanel load_panel(const std::string& path, const SeriesSpec& schema) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
    return load_panel(in, schema, path);
}

int ModelDataset::column(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) fail(ErrorKind::Config, "dataset has no column '" + name + "'");
    return static_cast<int>(it - columns.begin());
}

bool ModelDataset::has_column(const std::string& name) const {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
}

const CountryData& ModelDataset::country(const std::string& name) const {
    for (const auto& c : countries)
        if (c.country == name) return c;
    fail(ErrorKind::Config, "dataset has no country '" + name + "'");
}

double ModelDataset::pooled_share(const std::string& name) const {
    double sum = 0.0;
    double weight = 0.0;
    for (const auto& c : countries) {
        auto it = c.shares.find(name);
        if (it == c.shares.end()) fail(ErrorKind::Config, "no share '" + name + "' for " + c.country);
        const double w = c.share_observations > 0 ? c.share_observations : c.rows();
        sum += w * it->second;
        weight += w;
    }
    if (weight <= 0.0) fail(ErrorKind::Config, "no observations for share '" + name + "'");
    return sum / weight;
}

ModelDataset ModelDataset::without_country(const std::string& name) const {
    ModelDataset out{columns, {}};
    bool found = false;
    for (const auto& c : countries) {
        if (c.country == name)
            found = true;
        else
            out.countries.push_back(c);
    }
    if (!found) fail(ErrorKind::Config, "cannot leave out unknown country '" + name + "'");
    return out;
}

ModelDataset ModelDataset::only_country(const std::string& name) const {
    return ModelDataset{columns, {country(name)}};
}

void ModelDataset::write_csv(std::ostream& out) const {
    out << "country,quarter";
    for (const auto& c : columns) out << ',' << c;
    out << '\n';
    for (const auto& c : countries)
        for (int t = 0; t < c.rows(); ++t) {
            out << c.country << ',' << (c.start + t).str();
            for (Eigen::Index j = 0; j < c.values.cols(); ++j) out << ',' << csv::fmt(c.values(t, j));
            out << '\n';
        }
}

ModelDataset build_model_dataset(const RawPanel& raw, const SeriesSpec& spec) {
    if (spec.variables.empty()) fail(ErrorKind::Config, "series spec defines no variables");
    const auto required = spec.required_inputs();

    ModelDataset out;
    for (const auto& r : spec.variables) out.columns.push_back(r.name);

    for (const auto& country : raw.countries()) {
        // Retained window = intersection of input ranges, clipped to the configured window.
        std::optional<Quarter> lo;
        std::optional<Quarter> hi;
        bool complete = true;
        for (const auto& name : required) {
            const auto* s = raw.find(country, name);
            if (!s || s->empty()) {
                complete = false;
                break;
            }
            lo = lo ? std::max(*lo, s->begin()->first) : s->begin()->first;
            hi = hi ? std::min(*hi, s->rbegin()->first) : s->rbegin()->first;
        }
        if (!complete) fail(ErrorKind::Integrity, "country " + country + " lacks a required input series");
        if (auto w = spec.windows.find(country); w != spec.windows.end()) {
            if (w->second.start) lo = std::max(*lo, *w->second.start);
            if (w->second.end) hi = std::min(*hi, *w->second.end);
        }
        if (*hi < *lo) fail(ErrorKind::Integrity, "country " + country + " has no quarter with complete data");

        const int T = *hi - *lo + 1;
        auto value_at = [&](const std::string& variable, Quarter q) {
            const auto* s = raw.find(country, variable);
            auto it = s->find(q);
            if (it == s->end())
                fail(ErrorKind::Integrity, "missing interior value (" + country + ", " + q.str() + ", " + variable + ")");
            return it->second;
        };

        CountryData cd;
        cd.country = country;
        cd.start = *lo;
        cd.values.resize(T, static_cast<Eigen::Index>(spec.variables.size()));
        for (int t = 0; t < T; ++t) {
            const Quarter q = *lo + t;
            for (std::size_t j = 0; j < spec.variables.size(); ++j) {
                const auto& rule = spec.variables[j];
                double v = value_at(rule.source, q);
                if (rule.deflator) {
                    const double d = value_at(*rule.deflator, q);
                    if (!(d > 0.0))
                        fail(ErrorKind::Domain, "nonpositive deflator (" + country + ", " + q.str() + ", " + *rule.deflator + ")");
                    v /= d;
                }
                if (rule.per_capita) {
                    const double pop = value_at(spec.population, q);
                    if (!(pop > 0.0))
                        fail(ErrorKind::Domain, "nonpositive population (" + country + ", " + q.str() + ", " + spec.population + ")");
                    v /= pop;
                }
                if (rule.log) {
                    if (!(v > 0.0))
                        fail(ErrorKind::Domain, "nonpositive value before log (" + country + ", " + q.str() + ", " + rule.source + ")");
                    v = std::log(v);
                }
                cd.values(t, static_cast<Eigen::Index>(j)) = v;
            }
        }

        for (const auto& [name, source] : spec.share_sources) {
            double sum = 0.0;
            for (int t = 0; t < T; ++t) {
                const Quarter q = *lo + t;
                const double gdp = value_at(spec.nominal_gdp, q);
                if (!(gdp > 0.0))
                    fail(ErrorKind::Domain, "nonpositive nominal GDP (" + country + ", " + q.str() + ", " + spec.nominal_gdp + ")");
                sum += value_at(source, q) / gdp;
            }
            const double share = sum / T;
            if (!(share > 0.0 && share < 1.0))
                fail(ErrorKind::Domain, "share '" + name + "' for " + country + " outside (0, 1): " + csv::fmt(share));
            cd.shares[name] = share;
        }
        cd.share_observations = T;
        out.countries.push_back(std::move(cd));
    }
    return out;
}

}  // namespace svariv
