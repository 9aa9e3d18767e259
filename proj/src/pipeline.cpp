#include "svariv/pipeline.hpp"

#include "svariv/csv.hpp"
#include "svariv/error.hpp"
#include "svariv/svg.hpp"

#include <Eigen/Core>
#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

namespace svariv {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kModule = "cli";
constexpr const char* kVersion = "0.1.0";

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::Config, kModule, msg); }

std::string resolve(const json& v, const fs::path& base) {
    const fs::path p(v.get<std::string>());
    return (p.is_absolute() ? p : base / p).lexically_normal().string();
}

std::string opt_path(const json& doc, const char* key, const fs::path& base) {
    return doc.contains(key) && !doc[key].is_null() ? resolve(doc[key], base) : std::string{};
}

std::vector<double> expand_grid(const json& doc) {
    if (doc.is_array()) return doc.get<std::vector<double>>();
    const double from = doc.value("from", -1.0);
    const double to = doc.value("to", 0.5);
    const double step = doc.value("step", 0.05);
    if (!(step > 0.0) || to < from) config_error("sweep grid needs from <= to and step > 0");
    std::vector<double> grid;
    for (int i = 0;; ++i) {
        const double v = std::round((from + i * step) * 1e9) / 1e9;
        if (v > to + 1e-12) break;
        grid.push_back(v);
    }
    return grid;
}

CovSpec identification_cov(const RunConfig& c) {
    CovSpec cov;
    if (c.cov == "hc0") cov = CovSpec::hc0();
    else if (c.cov == "homoskedastic") cov = CovSpec::homoskedastic();
    else if (c.cov == "newey_west") cov = CovSpec::newey_west(c.nw_lags);
    else if (c.cov == "two_way") cov = CovSpec::of(CovSpec::Kind::TwoWayCluster);
    else config_error("unknown covariance '" + c.cov + "' (hc0, homoskedastic, newey_west, two_way)");
    cov.cluster_correction = c.cluster_correction;
    return cov;
}

std::string na(const std::optional<double>& v) { return v ? csv::fmt(*v) : "NA"; }

class Writer {
public:
    explicit Writer(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    void put(const std::string& name, const std::string& content) {
        std::ofstream f(dir_ / name, std::ios::binary);
        if (!f) throw Error(ErrorKind::Io, kModule, "cannot write " + (dir_ / name).string());
        f << content;
        files.push_back(name);
    }

    std::vector<std::string> files;

private:
    fs::path dir_;
};

struct SchemeResult {
    Scheme scheme;
    Identification id;
    IrfSet irf;
    MultiplierPath mult;
    std::optional<BootstrapBands> bands;
};

struct Estimation {
    VarEstimate est;
    std::vector<SchemeResult> schemes;
    ElasticityCurve sweep;
};

Estimation estimate(const ModelDataset& data, const VarSpec& var, const InstrumentSet& m, const RunConfig& c,
                    const Shares& shares, bool with_bootstrap) {
    Estimation out{fit_var(data, var), {}, {}};
    IdentifyOptions opts;
    opts.cov = identification_cov(c);
    opts.names = c.names;
    for (Scheme s : c.schemes) {
        SchemeResult r{s, identify(out.est, m, s, opts), {}, {}, {}};
        r.irf = structural_irfs(out.est, r.id, c.horizon, shares, c.names, c.boot.allow_unstable);
        r.mult = cumulative_multiplier(r.irf, c.horizon, c.names);
        if (with_bootstrap) {
            PipelineSpec ps{s, opts, shares, c.horizon, c.sweep_grid};
            r.bands = bootstrap_pipeline(data, var, m, ps, c.boot);
        }
        out.schemes.push_back(std::move(r));
    }
    out.sweep = elasticity_sweep(out.est, c.sweep_grid, shares, c.names);
    return out;
}

std::pair<std::string, std::string> band(const std::optional<BootstrapBands>& b, const std::string& stat) {
    if (!b) return {"NA", "NA"};
    const int i = b->index(stat);
    return {csv::fmt(b->lower[i]), csv::fmt(b->upper[i])};
}

std::string table2_csv(const Estimation& e) {
    std::ostringstream o;
    o << "scheme,a_g,se_a_g,f_spending,a_r,se_a_r,f_revenue,b_gr,se_b_gr,observations,fwl_gap_spending,fwl_gap_revenue\n";
    for (const auto& s : e.schemes) {
        const auto& r = s.id.rule;
        o << to_string(s.scheme) << ',' << csv::fmt(r.a_g) << ',' << csv::fmt(r.se_a_g) << ',' << na(r.f_spending) << ','
          << csv::fmt(r.a_r) << ',' << csv::fmt(r.se_a_r) << ',' << na(r.f_revenue) << ',' << csv::fmt(r.b_gr) << ','
          << csv::fmt(r.se_b_gr) << ',' << e.est.residuals.rows() << ',' << csv::fmt(r.fwl_gap_spending) << ','
          << csv::fmt(r.fwl_gap_revenue) << '\n';
    }
    return o.str();
}

std::string irf_csv(const SchemeResult& s) {
    std::ostringstream o;
    o << "shock,variable,horizon,value,lo,hi\n";
    for (std::size_t k = 0; k < s.irf.shocks.size(); ++k)
        for (std::size_t v = 0; v < s.irf.variables.size(); ++v)
            for (int h = 0; h <= s.irf.horizon; ++h) {
                const auto& shock = s.irf.shocks[k];
                const auto& var = s.irf.variables[v];
                const auto [lo, hi] = band(s.bands, "irf:" + shock + ":" + var + ":" + std::to_string(h));
                o << shock << ',' << var << ',' << h << ','
                  << csv::fmt(s.irf.responses[k](static_cast<Eigen::Index>(v), h)) << ',' << lo << ',' << hi << '\n';
            }
    return o.str();
}

std::string multipliers_csv(const Estimation& e) {
    std::ostringstream o;
    o << "scheme,horizon,value,lo,hi\n";
    for (const auto& s : e.schemes)
        for (std::size_t h = 0; h < s.mult.values.size(); ++h) {
            const auto [lo, hi] = band(s.bands, "mult:" + std::to_string(h));
            o << to_string(s.scheme) << ',' << h << ',' << csv::fmt(s.mult.values[h]) << ',' << lo << ',' << hi << '\n';
        }
    return o.str();
}

std::string sweep_csv(const Estimation& e) {
    const std::optional<BootstrapBands>* bands = nullptr;
    for (const auto& s : e.schemes)
        if (s.bands) bands = &s.bands;
    std::ostringstream o;
    o << "a_g,impact_multiplier,lo,hi\n";
    for (std::size_t i = 0; i < e.sweep.grid.size(); ++i) {
        const auto [lo, hi] = bands ? band(*bands, "sweep:" + csv::fmt(e.sweep.grid[i])) : std::pair{std::string("NA"), std::string("NA")};
        o << csv::fmt(e.sweep.grid[i]) << ',' << csv::fmt(e.sweep.values[i]) << ',' << lo << ',' << hi << '\n';
    }
    return o.str();
}

std::string bands_csv(const Estimation& e) {
    std::ostringstream o;
    o << "scheme,statistic,point,lo,hi,valid_draws,failed_draws,level\n";
    for (const auto& s : e.schemes) {
        if (!s.bands) continue;
        const auto& b = *s.bands;
        for (std::size_t i = 0; i < b.statistics.size(); ++i)
            o << to_string(s.scheme) << ',' << b.statistics[i] << ',' << csv::fmt(b.point[i]) << ','
              << csv::fmt(b.lower[i]) << ',' << csv::fmt(b.upper[i]) << ',' << b.valid[i] << ',' << b.failed_draws
              << ',' << csv::fmt(b.level) << '\n';
    }
    return o.str();
}

std::vector<double> band_path(const SchemeResult& s, const std::string& prefix, int H, bool upper) {
    std::vector<double> out;
    if (!s.bands) return out;
    for (int h = 0; h <= H; ++h) {
        const int i = s.bands->index(prefix + std::to_string(h));
        out.push_back(upper ? s.bands->upper[i] : s.bands->lower[i]);
    }
    return out;
}

std::vector<double> horizons(int H) {
    std::vector<double> x(H + 1);
    for (int h = 0; h <= H; ++h) x[h] = h;
    return x;
}

std::string irf_svg(const SchemeResult& s) {
    std::vector<svg::Panel> panels;
    const auto x = horizons(s.irf.horizon);
    for (std::size_t k = 0; k < s.irf.shocks.size(); ++k)
        for (std::size_t v = 0; v < s.irf.variables.size(); ++v) {
            const auto& shock = s.irf.shocks[k];
            const auto& var = s.irf.variables[v];
            const Eigen::VectorXd path = s.irf.responses[k].row(static_cast<Eigen::Index>(v)).transpose();
            const std::string prefix = "irf:" + shock + ":" + var + ":";
            panels.push_back({var + " to " + shock + " shock",
                              {{"", x, std::vector<double>(path.data(), path.data() + path.size()),
                                band_path(s, prefix, s.irf.horizon, false), band_path(s, prefix, s.irf.horizon, true)}}});
        }
    return svg::render(panels, static_cast<int>(s.irf.variables.size()),
                       std::string("Impulse responses (") + to_string(s.scheme) + ", % of GDP)");
}

std::string multipliers_svg(const Estimation& e) {
    std::vector<svg::Panel> panels;
    for (const auto& s : e.schemes) {
        const int H = static_cast<int>(s.mult.values.size()) - 1;
        panels.push_back({std::string("Cumulative multiplier, ") + to_string(s.scheme),
                          {{"", horizons(H), s.mult.values, band_path(s, "mult:", H, false),
                            band_path(s, "mult:", H, true)}}});
    }
    return svg::render(panels, 2);
}

std::string sweep_svg(const Estimation& e) {
    return svg::render({{"Impact multiplier by output elasticity of g", {{"", e.sweep.grid, e.sweep.values, {}, {}}}}}, 1);
}

std::string table1_csv(const RunConfig& c, const InstrumentSet& m) {
    std::ostringstream o;
    o << "name,kind,fixed_effects,cov,slope,se,t,observations,r_squared,adj_r_squared\n";
    for (const auto& p : c.pretests) {
        CovSpec cov = p.cov == "two_way" ? CovSpec::of(CovSpec::Kind::TwoWayCluster) : CovSpec::hc0();
        cov.cluster_correction = c.cluster_correction;
        const auto res = pretest(p.kind, read_country_series(p.series), m, p.fixed_effects, cov);
        const double b = res.coefficients(0);
        const double se = res.standard_error(0);
        o << p.name << ',' << (p.kind == PretestKind::Relevance ? "relevance" : "exogeneity") << ','
          << (p.fixed_effects ? "true" : "false") << ',' << p.cov << ',' << csv::fmt(b) << ',' << csv::fmt(se) << ','
          << csv::fmt(se > 0 ? b / se : std::nan("")) << ',' << res.observations << ',' << csv::fmt(res.r_squared) << ','
          << csv::fmt(res.adj_r_squared) << '\n';
    }
    return o.str();
}

std::vector<std::pair<std::string, std::string>> input_files(const RunConfig& c) {
    std::vector<std::pair<std::string, std::string>> in{{"panel", c.panel}};
    if (!c.instrument.empty()) in.emplace_back("instrument", c.instrument);
    if (!c.vintages.empty()) in.emplace_back("vintages", c.vintages);
    if (!c.realized.empty()) in.emplace_back("realized", c.realized);
    if (!c.exports.empty()) in.emplace_back("exports", c.exports);
    for (const auto& p : c.pretests) in.emplace_back("pretest:" + p.name, p.series);
    return in;
}

}  // namespace

// --- hashing ------------------------------------------------------------------

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorKind::Io, kModule, "SHA-256 failed");
    std::ostringstream o;
    for (unsigned int i = 0; i < len; ++i) o << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return o.str();
}

std::string sha256_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, kModule, "cannot read " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return sha256_hex(buf.str());
}

// --- config -------------------------------------------------------------------

RunConfig RunConfig::from_json(const json& input, const fs::path& base) {
    const json& doc = input.contains("config") && input.contains("inputs_hash") ? input["config"] : input;
    RunConfig c;
    try {
        const json data = doc.value("data", json::object());
        if (!data.contains("panel")) config_error("data.panel is required");
        c.panel = resolve(data["panel"], base);
        if (!data.contains("series")) config_error("data.series is required (path or inline object)");
        if (data["series"].is_string()) {
            c.series_path = resolve(data["series"], base);
            std::ifstream f(c.series_path);
            if (!f) config_error("cannot read series spec " + c.series_path);
            c.series = SeriesSpec::from_json(json::parse(f));
        } else {
            c.series = SeriesSpec::from_json(data["series"]);
        }
        c.instrument = opt_path(data, "instrument", base);
        c.vintages = opt_path(data, "vintages", base);
        c.realized = opt_path(data, "realized", base);
        c.exports = opt_path(data, "exports", base);

        if (doc.contains("instrument")) {
            const auto& i = doc["instrument"];
            c.instrument_options.variable = i.value("variable", c.instrument_options.variable);
            c.instrument_options.window = i.value("window", c.instrument_options.window);
            c.instrument_options.g7_only = i.value("g7_only", false);
            if (i.contains("single_partner"))
                c.instrument_options.single_partner = i["single_partner"].get<std::map<std::string, std::string>>();
        }
        for (const auto& p : doc.value("pretests", json::array())) {
            PretestDirective d;
            d.name = p.at("name").get<std::string>();
            const auto kind = p.value("kind", std::string("relevance"));
            if (kind != "relevance" && kind != "exogeneity") config_error("pretest kind must be relevance or exogeneity");
            d.kind = kind == "relevance" ? PretestKind::Relevance : PretestKind::Exogeneity;
            d.series = resolve(p.at("series"), base);
            d.fixed_effects = p.value("fixed_effects", false);
            d.cov = p.value("cov", std::string("hc0"));
            c.pretests.push_back(d);
        }

        c.var = VarSpec::from_json(doc.at("var"));
        if (doc.contains("schemes")) {
            c.schemes.clear();
            for (const auto& s : doc["schemes"]) c.schemes.push_back(parse_scheme(s.get<std::string>()));
        }
        if (doc.contains("names")) {
            c.names.g = doc["names"].value("g", c.names.g);
            c.names.r = doc["names"].value("r", c.names.r);
            c.names.gdp = doc["names"].value("gdp", c.names.gdp);
        }
        const json ident = doc.value("identification", json::object());
        c.cov = ident.value("cov", c.cov);
        c.nw_lags = ident.value("lags", c.nw_lags);
        c.cluster_correction = ident.value("cluster_correction", c.cluster_correction);
        if (doc.contains("shares") && !doc["shares"].is_null())
            c.shares = Shares{doc["shares"].at("g").get<double>(), doc["shares"].at("r").get<double>()};

        c.horizon = doc.value("horizon", c.horizon);
        c.sweep_grid = expand_grid(doc.value("sweep", json::object()));

        const json b = doc.value("bootstrap", json::object());
        c.bootstrap = b.value("enabled", true);
        c.boot.draws = b.value("draws", c.boot.draws);
        if (b.contains("block_length") && !b["block_length"].is_null()) c.boot.block_length = b["block_length"].get<int>();
        c.boot.level = b.value("level", c.boot.level);
        c.boot.bias_correction = b.value("bias_correction", c.boot.bias_correction);
        c.boot.correct_each_draw = b.value("correct_each_draw", c.boot.correct_each_draw);
        c.boot.pre_draws = b.value("pre_draws", c.boot.pre_draws);
        c.boot.hold_a_g = b.value("hold_a_g", c.boot.hold_a_g);
        c.boot.allow_unstable = b.value("allow_unstable", c.boot.allow_unstable);
        c.boot.max_failure_share = b.value("max_failure_share", c.boot.max_failure_share);
        c.boot.threads = b.value("threads", c.boot.threads);
        c.boot.seed = doc.value("seed", c.boot.seed);

        const json rob = doc.value("robustness", json::object());
        c.lag_grid = rob.value("lags", std::vector<int>{});
        c.leave_out = rob.value("leave_out", std::vector<std::string>{});
        c.leave_one_out = rob.value("leave_one_out", false);

        c.output = doc.contains("output") ? resolve(doc["output"], base) : (base / "out").string();
        c.svg = doc.value("svg", true);
    } catch (const json::exception& e) {
        config_error(std::string("malformed config: ") + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config) throw;
        config_error(e.what());
    }
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) config_error("cannot read config " + path);
    json doc;
    try {
        doc = json::parse(f);
    } catch (const json::exception& e) {
        config_error("config " + path + " is not valid JSON: " + e.what());
    }
    return from_json(doc, fs::absolute(fs::path(path)).parent_path());
}

json RunConfig::to_json() const {
    json data = {{"panel", panel}, {"series", series.to_json()}};
    if (!instrument.empty()) data["instrument"] = instrument;
    if (!vintages.empty()) data["vintages"] = vintages;
    if (!realized.empty()) data["realized"] = realized;
    if (!exports.empty()) data["exports"] = exports;
    json pre = json::array();
    for (const auto& p : pretests)
        pre.push_back({{"name", p.name},
                       {"kind", p.kind == PretestKind::Relevance ? "relevance" : "exogeneity"},
                       {"series", p.series},
                       {"fixed_effects", p.fixed_effects},
                       {"cov", p.cov}});
    json sch = json::array();
    for (Scheme s : schemes) sch.push_back(to_string(s));
    json doc = {
        {"data", data},
        {"instrument",
         {{"variable", instrument_options.variable},
          {"window", instrument_options.window},
          {"g7_only", instrument_options.g7_only},
          {"single_partner", instrument_options.single_partner}}},
        {"pretests", pre},
        {"var", var.to_json()},
        {"schemes", sch},
        {"names", {{"g", names.g}, {"r", names.r}, {"gdp", names.gdp}}},
        {"identification", {{"cov", cov}, {"lags", nw_lags}, {"cluster_correction", cluster_correction}}},
        {"horizon", horizon},
        {"sweep", sweep_grid},
        {"seed", boot.seed},
        {"bootstrap",
         {{"enabled", bootstrap},
          {"draws", boot.draws},
          {"block_length", boot.block_length ? json(*boot.block_length) : json(nullptr)},
          {"level", boot.level},
          {"bias_correction", boot.bias_correction},
          {"correct_each_draw", boot.correct_each_draw},
          {"pre_draws", boot.pre_draws},
          {"hold_a_g", boot.hold_a_g},
          {"allow_unstable", boot.allow_unstable},
          {"max_failure_share", boot.max_failure_share}}},
        {"robustness", {{"lags", lag_grid}, {"leave_out", leave_out}, {"leave_one_out", leave_one_out}}},
        {"svg", svg},
    };
    doc["shares"] = shares ? json{{"g", shares->g}, {"r", shares->r}} : json(nullptr);
    return doc;
}

void RunConfig::validate() const {
    if (!series_path.empty() && !fs::is_regular_file(series_path)) config_error("series file not found: " + series_path);
    for (const auto& [role, path] : input_files(*this))
        if (!fs::is_regular_file(path)) config_error(role + " file not found: " + path);
    if (instrument.empty() && (vintages.empty() || realized.empty()))
        config_error("need data.instrument, or data.vintages and data.realized to build it");
    if (horizon < 1) config_error("horizon must be at least 1");
    if (schemes.empty()) config_error("at least one identification scheme is required");
    if (sweep_grid.empty()) config_error("elasticity sweep grid is empty");
    for (int p : lag_grid)
        if (p < 1) config_error("lag grid entries must be positive");
    if (bootstrap) {
        try {
            boot.validate();
        } catch (const Error& e) {
            config_error(e.what());
        }
    }
    try {
        var.validate();
    } catch (const Error& e) {
        config_error(e.what());
    }
    identification_cov(*this);
}

// --- run ----------------------------------------------------------------------

RunResult run(const RunConfig& c, unsigned stages) {
    c.validate();
    Writer out(c.output);

    ModelDataset data = build_model_dataset(load_panel(c.panel, c.series), c.series);
    for (const auto& country : c.leave_out) data = data.without_country(country);
    if (stages & StageIngest) {
        std::ostringstream o;
        data.write_csv(o);
        out.put("model_dataset.csv", o.str());
    }

    InstrumentSet m;
    if (!c.instrument.empty()) {
        m = read_instruments(c.instrument);
    } else {
        std::map<std::string, CountrySeries> exports;
        if (!c.exports.empty()) exports = read_exports(c.exports);
        m = build_instruments(read_vintages(c.vintages), read_country_series(c.realized), exports, c.instrument_options);
    }
    if (stages & StageInstrument) {
        std::ostringstream o;
        write_instruments(o, m);
        out.put("instrument.csv", o.str());
    }
    if ((stages & StagePretest) && !c.pretests.empty()) out.put("table1_pretests.csv", table1_csv(c, m));

    const unsigned estimation = StageFit | StageIdentify | StageIrf | StageMultiplier | StageSweep | StageBootstrap;
    const Shares shares = c.shares ? *c.shares : Shares{data.pooled_share(c.names.g), data.pooled_share(c.names.r)};
    if (stages & estimation) {
        const Estimation e = estimate(data, c.var, m, c, shares, c.bootstrap && (stages & StageBootstrap));
        if (stages & StageFit) out.put("var_estimate.json", e.est.to_json().dump(2) + "\n");
        if (stages & StageIdentify) out.put("table2_elasticities.csv", table2_csv(e));
        if (stages & StageIrf)
            for (const auto& s : e.schemes) {
                out.put(std::string("irf_") + to_string(s.scheme) + ".csv", irf_csv(s));
                if (c.svg) out.put(std::string("irf_") + to_string(s.scheme) + ".svg", irf_svg(s));
            }
        if (stages & StageMultiplier) {
            out.put("multipliers.csv", multipliers_csv(e));
            if (c.svg) out.put("multipliers.svg", multipliers_svg(e));
        }
        if (stages & StageSweep) {
            out.put("elasticity_sweep.csv", sweep_csv(e));
            if (c.svg) out.put("elasticity_sweep.svg", sweep_svg(e));
        }
        if (c.bootstrap && (stages & StageBootstrap)) {
            out.put("bands.csv", bands_csv(e));
            for (const auto& s : e.schemes) {
                std::ostringstream o;
                s.bands->write_archive(o);
                out.put(std::string("bootstrap_draws_") + to_string(s.scheme) + ".csv", o.str());
            }
        }
    }

    if (stages & StageRobustness) {
        for (int p : c.lag_grid) {
            VarSpec v = c.var;
            v.lags = p;
            const Estimation e = estimate(data, v, m, c, shares, false);
            const std::string sfx = "_p" + std::to_string(p);
            out.put("table2_elasticities" + sfx + ".csv", table2_csv(e));
            for (const auto& s : e.schemes) out.put(std::string("irf_") + to_string(s.scheme) + sfx + ".csv", irf_csv(s));
            out.put("multipliers" + sfx + ".csv", multipliers_csv(e));
        }
        if (c.leave_one_out) {
            if (data.countries.size() < 2) config_error("leave-one-out needs at least two countries");
            for (const auto& country : data.countries) {
                const ModelDataset sub = data.without_country(country.country);
                const Shares sub_shares =
                    c.shares ? *c.shares : Shares{sub.pooled_share(c.names.g), sub.pooled_share(c.names.r)};
                const Estimation e = estimate(sub, c.var, m, c, sub_shares, false);
                const std::string sfx = "_loo_" + country.country;
                out.put("table2_elasticities" + sfx + ".csv", table2_csv(e));
                out.put("multipliers" + sfx + ".csv", multipliers_csv(e));
            }
        }
    }

    RunResult result;
    json inputs = json::array();
    // The series spec is hashed in canonical form so an inlined copy hashes the same.
    const std::string series_hash = sha256_hex(c.series.to_json().dump());
    inputs.push_back({{"role", "series"}, {"sha256", series_hash}});
    std::string joined = "series:" + series_hash + "\n";
    for (const auto& [role, path] : input_files(c)) {
        const std::string h = sha256_file(path);
        inputs.push_back({{"role", role}, {"path", path}, {"sha256", h}});
        joined += role + ":" + h + "\n";
    }
    result.inputs_hash = sha256_hex(joined);
    json artifacts = json::object();
    for (const auto& f : out.files) artifacts[f] = sha256_file((fs::path(c.output) / f).string());
    const json manifest = {
        {"tool", "svariv"},
        {"version", kVersion},
        {"libraries",
         {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
        {"seed", c.boot.seed},
        {"stages", stages},
        {"inputs", inputs},
        {"inputs_hash", result.inputs_hash},
        {"artifacts", artifacts},
        {"config", c.to_json()},
    };
    out.put("run_manifest.json", manifest.dump(2) + "\n");
    result.artifacts = out.files;
    return result;
}

}  // namespace svariv
