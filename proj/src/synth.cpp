#include "svariv/synth.hpp"

#include "svariv/csv.hpp"
#include "svariv/error.hpp"
#include "svariv/var.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

namespace svariv {

namespace {

constexpr const char* kModule = "synth";

[[noreturn]] void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, kModule, msg); }

Eigen::VectorXd mean_levels(const DgpSpec& spec, int country) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(spec.n());
    mu(0) = spec.log_gdp_level + std::log(spec.shares.g);
    mu(1) = spec.log_gdp_level + std::log(spec.shares.r);
    mu(2) = spec.log_gdp_level;
    mu.head(3).array() += spec.country_offset * country;
    return mu;
}

std::vector<double> shock_scales(const DgpSpec& spec) {
    std::vector<double> s{spec.sigma_g, spec.sigma_r, spec.sigma_y};
    for (double v : spec.sigma_extra) s.push_back(v);
    return s;
}

}  // namespace

void DgpSpec::validate() const {
    if (n() < 3 || names[0] != "g" || names[1] != "r" || names[2] != "gdp")
        fail(ErrorKind::Config, "synthetic variables must start with g, r, gdp");
    const int extra = n() - 3;
    if (static_cast<int>(loadings.size()) != extra || static_cast<int>(sigma_extra.size()) != extra)
        fail(ErrorKind::Config, "need one loading and one shock scale per extra variable");
    if (lags.empty()) fail(ErrorKind::Config, "at least one lag matrix required");
    for (const auto& A : lags)
        if (A.rows() != n() || A.cols() != n()) fail(ErrorKind::Config, "lag matrix has wrong dimension");
    if (!std::isfinite(gamma)) fail(ErrorKind::Config, "gamma must be finite");
    if (countries < 1 || T < 2 || burn_in < 0) fail(ErrorKind::Config, "bad sample dimensions");
    if (!(shares.g > 0 && shares.g < 1 && shares.r > 0 && shares.r < 1)) fail(ErrorKind::Config, "shares outside (0, 1)");
    if (companion(lags).spectral_radius >= 1.0) fail(ErrorKind::Stability, "true VAR is not stable");
}

Eigen::MatrixXd DgpSpec::impact_matrix() const {
    const int k = n();
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(k, k);
    // gdp column entries per structural shock
    const double gdp_g = theta_g;
    const double gdp_r = theta_r;
    const double gdp_y = 1.0;
    const double gdp_of[3] = {gdp_g, gdp_r, gdp_y};
    for (int j = 0; j < 3; ++j) {
        B(2, j) = gdp_of[j];
        B(0, j) = a_g * gdp_of[j] + (j == 0 ? 1.0 : 0.0);
        B(1, j) = a_r * gdp_of[j] + b_gr * (j == 0 ? 1.0 : 0.0) + (j == 1 ? 1.0 : 0.0);
        for (int e = 3; e < k; ++e) B(e, j) = loadings[e - 3] * gdp_of[j];
    }
    for (int e = 3; e < k; ++e) B(e, e) = 1.0;
    return B;
}

Eigen::MatrixXd DgpSpec::sigma_u() const {
    const auto s = shock_scales(*this);
    Eigen::VectorXd var(n());
    for (int i = 0; i < n(); ++i) var(i) = s[i] * s[i];
    const Eigen::MatrixXd B = impact_matrix();
    return B * var.asDiagonal() * B.transpose();
}

double DgpSpec::var_u_gdp() const {
    return theta_g * theta_g * sigma_g * sigma_g + theta_r * theta_r * sigma_r * sigma_r + sigma_y * sigma_y;
}

DgpSpec DgpSpec::desk_default(int T, std::uint64_t seed) {
    DgpSpec s;
    Eigen::MatrixXd A(3, 3);
    A << 0.60, 0.00, 0.10,
         0.00, 0.50, 0.20,
         0.10, -0.05, 0.70;
    s.lags = {A};
    s.T = T;
    s.seed = seed;
    s.gamma = instrument_strength_for_f(s, 20.0);
    return s;
}

double instrument_strength_for_f(const DgpSpec& spec, double target_f) {
    if (!(target_f >= 0.0)) fail(ErrorKind::Parameter, "target F must be nonnegative");
    const double N = static_cast<double>(spec.T) * spec.countries;
    const double rho2 = target_f / (N + target_f);
    const double c = spec.var_u_gdp();
    const double sy2 = spec.sigma_y * spec.sigma_y;
    const double denom = sy2 * (sy2 - rho2 * c);
    if (!(denom > 0.0)) fail(ErrorKind::Parameter, "target F not attainable with this noise scale");
    return std::sqrt(rho2 * c * spec.sigma_nu * spec.sigma_nu / denom);
}

SynthOutput simulate(const DgpSpec& spec, int H) {
    spec.validate();
    const int n = spec.n();
    const int p = static_cast<int>(spec.lags.size());
    const Eigen::MatrixXd B = spec.impact_matrix();
    const auto scales = shock_scales(spec);
    Eigen::MatrixXd sum_a = Eigen::MatrixXd::Zero(n, n);
    for (const auto& A : spec.lags) sum_a += A;

    SynthOutput out;
    out.degenerate = true;
    for (double s : scales) out.degenerate = out.degenerate && s == 0.0;
    out.degenerate = out.degenerate && spec.sigma_nu == 0.0;
    out.data.columns = spec.names;

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::student_t_distribution<double> student(spec.t_dof);
    const double t_scale = spec.student_t && spec.t_dof > 2.0 ? std::sqrt((spec.t_dof - 2.0) / spec.t_dof) : 1.0;
    auto draw = [&]() { return spec.student_t ? t_scale * student(rng) : normal(rng); };

    const int start_year = std::max(1000, 2020 - (spec.T + 3) / 4);
    const int total = spec.burn_in + spec.T;
    for (int c = 0; c < spec.countries; ++c) {
        const Eigen::VectorXd mu = mean_levels(spec, c);
        const Eigen::VectorXd intercept = (Eigen::MatrixXd::Identity(n, n) - sum_a) * mu;
        std::vector<Eigen::VectorXd> hist(p, mu);

        CountryData cd;
        cd.country = spec.countries == 1 ? "SYN" : "S" + std::to_string(c + 1);
        cd.start = Quarter(start_year, 1);
        cd.values.resize(spec.T, n);
        Eigen::MatrixXd shocks(spec.T, n);
        Eigen::MatrixXd resid(spec.T, n);
        InstrumentSeries inst;
        inst.country = cd.country;
        inst.weighting = "synthetic";

        for (int t = 0; t < total; ++t) {
            Eigen::VectorXd e(n);
            for (int j = 0; j < n; ++j) e(j) = scales[j] * draw();
            const double m = spec.gamma * e(2) + spec.sigma_nu * draw();
            const Eigen::VectorXd u = B * e;
            Eigen::VectorXd y = intercept + u;
            for (int j = 0; j < p; ++j) y += spec.lags[j] * hist[p - 1 - j];
            hist.erase(hist.begin());
            hist.push_back(y);
            if (t < spec.burn_in) continue;
            const int row = t - spec.burn_in;
            cd.values.row(row) = y.transpose();
            shocks.row(row) = e.transpose();
            resid.row(row) = u.transpose();
            inst.values[cd.start + row] = m;
        }
        double share_sum = 0.0;
        for (int t = 0; t < spec.T; ++t) share_sum += std::exp(cd.values(t, 0) - cd.values(t, 2));
        cd.shares["g"] = share_sum / spec.T;
        share_sum = 0.0;
        for (int t = 0; t < spec.T; ++t) share_sum += std::exp(cd.values(t, 1) - cd.values(t, 2));
        cd.shares["r"] = share_sum / spec.T;
        cd.share_observations = spec.T;

        out.instrument[cd.country] = std::move(inst);
        out.structural_shocks.push_back(std::move(shocks));
        out.residuals.push_back(std::move(resid));
        out.data.countries.push_back(std::move(cd));
    }

    out.true_irfs = true_irf(spec, H);
    out.true_multipliers = cumulative_multiplier(out.true_irfs, H);
    return out;
}

IrfSet true_irf(const DgpSpec& spec, int H) {
    spec.validate();
    if (H < 0) fail(ErrorKind::Parameter, "horizon must be nonnegative");
    const int n = spec.n();
    const auto comp = companion(spec.lags);
    const Eigen::MatrixXd J = comp.selection();
    const Eigen::MatrixXd B = spec.impact_matrix();
    const Eigen::VectorXd factors = unit_factors(spec.names, spec.shares);

    IrfSet set;
    set.variables = spec.names;
    set.variables.push_back("bb");
    set.horizon = H;
    set.unit_factors = factors;
    for (int s = 0; s < 2; ++s) {
        // Phi_h = J C^h J'
        Eigen::MatrixXd resp(n + 1, H + 1);
        Eigen::MatrixXd power = Eigen::MatrixXd::Identity(comp.matrix.rows(), comp.matrix.cols());
        for (int h = 0; h <= H; ++h) {
            const Eigen::VectorXd raw = J * power * J.transpose() * B.col(s);
            resp.col(h).head(n) = factors.cwiseProduct(raw);
            power = comp.matrix * power;
        }
        const double own = resp(s, 0);
        const double scale = (s == 0 ? 1.0 : -1.0) / own;
        resp.topRows(n) *= scale;
        resp.row(n) = resp.row(1) - resp.row(0);
        set.shocks.push_back(s == 0 ? "g" : "r");
        set.responses.push_back(std::move(resp));
        set.shock_scale.push_back(scale);
    }
    return set;
}

void write_synth_files(const SynthOutput& out, const DgpSpec& spec, const std::string& directory) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);
    const fs::path dir(directory);
    {
        std::ofstream f(dir / "panel.csv");
        if (!f) fail(ErrorKind::Io, "cannot write " + (dir / "panel.csv").string());
        f << "country,quarter,variable,value,unit\n";
        for (const auto& c : out.data.countries)
            for (int t = 0; t < c.rows(); ++t) {
                const std::string q = (c.start + t).str();
                for (int j = 0; j < spec.n(); ++j) {
                    const bool fiscal = j < 3;
                    const std::string var = fiscal ? spec.names[j] + "_nom" : spec.names[j];
                    const double v = fiscal ? std::exp(c.values(t, j)) : c.values(t, j);
                    f << c.country << ',' << q << ',' << var << ',' << csv::fmt(v) << ',' << (fiscal ? "nominal" : "level")
                      << '\n';
                }
            }
    }
    {
        SeriesSpec s;
        for (int j = 0; j < spec.n(); ++j) {
            VariableRule r;
            r.name = spec.names[j];
            r.source = j < 3 ? spec.names[j] + "_nom" : spec.names[j];
            r.log = j < 3;
            s.variables.push_back(r);
        }
        s.nominal_gdp = "gdp_nom";
        s.share_sources = {{"g", "g_nom"}, {"r", "r_nom"}};
        std::ofstream f(dir / "series_spec.json");
        f << s.to_json().dump(2) << '\n';
    }
    {
        std::ofstream f(dir / "instrument.csv");
        write_instruments(f, out.instrument);
    }
    // Stand-ins for forecast errors: the true reduced-form innovations of gdp and g.
    for (const auto& [file, column] : {std::pair{"fe_gdp.csv", 2}, std::pair{"fe_g.csv", 0}}) {
        std::ofstream f(dir / file);
        f << "country,quarter,value\n";
        for (std::size_t ci = 0; ci < out.data.countries.size(); ++ci) {
            const auto& c = out.data.countries[ci];
            for (int t = 0; t < c.rows(); ++t)
                f << c.country << ',' << (c.start + t).str() << ',' << csv::fmt(out.residuals[ci](t, column)) << '\n';
        }
    }
}

}  // namespace svariv
