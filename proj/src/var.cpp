#include "svariv/var.hpp"

#include "svariv/error.hpp"
#include "svariv/regress.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace svariv {

namespace {

constexpr const char* kModule = "var";

[[noreturn]] void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, kModule, msg); }

nlohmann::json matrix_json(const Eigen::MatrixXd& M, const std::vector<std::string>& rows,
                           const std::vector<std::string>& cols) {
    nlohmann::json data = nlohmann::json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        data.push_back(row);
    }
    return {{"rows", rows}, {"cols", cols}, {"data", data}};
}

// Per-country means of the rows of M.
Eigen::MatrixXd group_means(const Eigen::MatrixXd& M, const std::vector<int>& group, int groups) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(groups, M.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(groups);
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        sums.row(group[i]) += M.row(i);
        counts(group[i]) += 1.0;
    }
    for (int g = 0; g < groups; ++g)
        if (counts(g) > 0) sums.row(g) /= counts(g);
    return sums;
}

Eigen::MatrixXd demean(const Eigen::MatrixXd& M, const std::vector<int>& group, const Eigen::MatrixXd& means) {
    Eigen::MatrixXd out = M;
    for (Eigen::Index i = 0; i < M.rows(); ++i) out.row(i) -= means.row(group[i]);
    return out;
}

void unpack(VarEstimate& est) {
    const int n = est.n;
    const int k = static_cast<int>(est.spec.exogenous.size());
    const int px = est.spec.exogenous_lag_count();
    est.A.assign(est.p, Eigen::MatrixXd::Zero(n, n));
    est.B.assign(k > 0 ? px + 1 : 0, Eigen::MatrixXd::Zero(n, k));
    est.trend = Eigen::VectorXd::Zero(n);
    int row = 0;
    for (int j = 0; j < est.p; ++j)
        for (int v = 0; v < n; ++v, ++row) est.A[j].col(v) = est.coefficients.row(row).transpose();
    if (k > 0)
        for (int j = 0; j <= px; ++j)
            for (int v = 0; v < k; ++v, ++row) est.B[j].col(v) = est.coefficients.row(row).transpose();
    if (est.spec.trend) est.trend = est.coefficients.row(row).transpose();
}

void finish(VarEstimate& est) {
    const auto& d = est.design;
    const int N = d.rows();
    const int groups = static_cast<int>(d.countries.size());
    const Eigen::MatrixXd partial = d.Y - d.X * est.coefficients;
    if (d.pooled || d.constant) {
        if (d.pooled) {
            est.intercepts = group_means(partial, d.row_country, groups);
        } else {
            est.intercepts = Eigen::MatrixXd(groups, est.n);
            est.intercepts.row(0) = partial.colwise().mean();
            for (int g = 1; g < groups; ++g) est.intercepts.row(g) = est.intercepts.row(0);
        }
    } else {
        est.intercepts = Eigen::MatrixXd::Zero(groups, est.n);
    }
    est.residuals = partial;
    for (int i = 0; i < N; ++i) est.residuals.row(i) -= est.intercepts.row(d.row_country[i]);

    const int deterministic = d.pooled ? groups : (d.constant ? 1 : 0);
    est.dof = static_cast<int>(d.X.cols()) + deterministic;
    if (N <= est.dof) fail(ErrorKind::SampleSize, "no residual degrees of freedom");
    est.sigma_u = est.residuals.transpose() * est.residuals / static_cast<double>(N - est.dof);
    est.sigma_u = 0.5 * (est.sigma_u + est.sigma_u.transpose());

    est.effective_sample.assign(groups, 0);
    for (int c : d.row_country) ++est.effective_sample[c];
    unpack(est);
}

}  // namespace

void VarSpec::validate() const {
    if (lags < 1) fail(ErrorKind::Config, "lag length must be at least 1");
    if (endogenous.empty()) fail(ErrorKind::Config, "no endogenous variables");
    std::set<std::string> endo(endogenous.begin(), endogenous.end());
    if (endo.size() != endogenous.size()) fail(ErrorKind::Config, "duplicate endogenous variable");
    for (const auto& x : exogenous)
        if (endo.count(x)) fail(ErrorKind::Config, "'" + x + "' is both endogenous and exogenous");
}

VarSpec VarSpec::from_json(const nlohmann::json& doc) {
    VarSpec s;
    try {
        s.endogenous = doc.at("endogenous").get<std::vector<std::string>>();
        s.exogenous = doc.value("exogenous", std::vector<std::string>{});
        s.lags = doc.value("lags", 1);
        s.exog_lags = doc.value("exog_lags", -1);
        s.fixed_effects = doc.value("fixed_effects", false);
        s.constant = doc.value("constant", true);
        s.trend = doc.value("trend", false);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Config, std::string("var spec: ") + e.what());
    }
    s.validate();
    return s;
}

nlohmann::json VarSpec::to_json() const {
    return {{"endogenous", endogenous}, {"exogenous", exogenous}, {"lags", lags},      {"exog_lags", exog_lags},
            {"fixed_effects", fixed_effects}, {"constant", constant}, {"trend", trend}};
}

Eigen::MatrixXd VarDesign::deterministic() const {
    const int N = rows();
    if (pooled) {
        Eigen::MatrixXd D = Eigen::MatrixXd::Zero(N, static_cast<Eigen::Index>(countries.size()));
        for (int i = 0; i < N; ++i) D(i, row_country[i]) = 1.0;
        return D;
    }
    if (constant) return Eigen::MatrixXd::Ones(N, 1);
    return Eigen::MatrixXd(N, 0);
}

std::vector<std::string> VarDesign::deterministic_names() const {
    if (pooled) {
        std::vector<std::string> out;
        for (const auto& c : countries) out.push_back("fe." + c);
        return out;
    }
    if (constant) return {"const"};
    return {};
}

VarDesign build_design(const ModelDataset& data, const VarSpec& spec, int skip) {
    spec.validate();
    if (data.countries.empty()) fail(ErrorKind::SampleSize, "dataset has no countries");
    std::vector<int> endo;
    std::vector<int> exo;
    for (const auto& name : spec.endogenous) endo.push_back(data.column(name));
    for (const auto& name : spec.exogenous) exo.push_back(data.column(name));

    const int n = static_cast<int>(endo.size());
    const int k = static_cast<int>(exo.size());
    const int p = spec.lags;
    const int px = spec.exogenous_lag_count();
    const int q = n * p + (k > 0 ? k * (px + 1) : 0) + (spec.trend ? 1 : 0);
    const int first = std::max(p, k > 0 ? px : 0) + skip;

    VarDesign d;
    d.pooled = spec.fixed_effects || data.countries.size() > 1;
    d.constant = spec.constant;
    for (int j = 1; j <= p; ++j)
        for (const auto& name : spec.endogenous) d.regressor_names.push_back(name + ".l" + std::to_string(j));
    if (k > 0)
        for (int j = 0; j <= px; ++j)
            for (const auto& name : spec.exogenous) d.regressor_names.push_back(name + ".l" + std::to_string(j));
    if (spec.trend) d.regressor_names.push_back("trend");

    Quarter base = data.countries.front().start;
    int total = 0;
    for (const auto& c : data.countries) {
        base = std::min(base, c.start);
        const int usable = c.rows() - first;
        if (usable < q + 1)
            fail(ErrorKind::SampleSize, "country " + c.country + " has " + std::to_string(c.rows()) +
                                            " observations; needs at least " + std::to_string(first + q + 1));
        total += usable;
    }

    d.Y.resize(total, n);
    d.X.resize(total, q);
    d.row_country.reserve(total);
    d.row_quarter.reserve(total);
    int row = 0;
    for (std::size_t ci = 0; ci < data.countries.size(); ++ci) {
        const auto& c = data.countries[ci];
        d.countries.push_back(c.country);
        for (int t = first; t < c.rows(); ++t, ++row) {
            for (int v = 0; v < n; ++v) d.Y(row, v) = c.values(t, endo[v]);
            int col = 0;
            for (int j = 1; j <= p; ++j)
                for (int v = 0; v < n; ++v) d.X(row, col++) = c.values(t - j, endo[v]);
            if (k > 0)
                for (int j = 0; j <= px; ++j)
                    for (int v = 0; v < k; ++v) d.X(row, col++) = c.values(t - j, exo[v]);
            if (spec.trend) d.X(row, col++) = static_cast<double>((c.start + t) - base);
            d.row_country.push_back(static_cast<int>(ci));
            d.row_quarter.push_back(c.start + t);
        }
    }
    return d;
}

Eigen::MatrixXd VarEstimate::fitted() const { return design.Y - residuals; }

int VarEstimate::index_of(const std::string& name) const {
    for (int i = 0; i < n; ++i)
        if (spec.endogenous[i] == name) return i;
    fail(ErrorKind::Config, "'" + name + "' is not an endogenous variable");
}

nlohmann::json VarEstimate::to_json() const {
    nlohmann::json doc;
    doc["spec"] = spec.to_json();
    doc["countries"] = design.countries;
    doc["effective_sample"] = effective_sample;
    doc["dof_per_equation"] = dof;
    doc["A"] = nlohmann::json::array();
    for (int j = 0; j < p; ++j) {
        auto m = matrix_json(A[j], spec.endogenous, spec.endogenous);
        m["lag"] = j + 1;
        doc["A"].push_back(m);
    }
    doc["B"] = nlohmann::json::array();
    for (std::size_t j = 0; j < B.size(); ++j) {
        auto m = matrix_json(B[j], spec.endogenous, spec.exogenous);
        m["lag"] = j;
        doc["B"].push_back(m);
    }
    doc["intercepts"] = matrix_json(intercepts, design.countries, spec.endogenous);
    if (spec.trend) doc["trend"] = matrix_json(trend, spec.endogenous, {"trend"});
    doc["sigma_u"] = matrix_json(sigma_u, spec.endogenous, spec.endogenous);
    return doc;
}

VarEstimate fit_var(const ModelDataset& data, const VarSpec& spec, int skip) {
    VarEstimate est;
    est.spec = spec;
    est.n = static_cast<int>(spec.endogenous.size());
    est.p = spec.lags;
    est.design = build_design(data, spec, skip);
    const auto& d = est.design;

    if (d.pooled) {
        const int groups = static_cast<int>(d.countries.size());
        const Eigen::MatrixXd Xd = demean(d.X, d.row_country, group_means(d.X, d.row_country, groups));
        const Eigen::MatrixXd Yd = demean(d.Y, d.row_country, group_means(d.Y, d.row_country, groups));
        est.coefficients = solve_least_squares(Xd, Yd, d.regressor_names);
    } else if (d.constant) {
        Eigen::MatrixXd X1(d.rows(), d.X.cols() + 1);
        X1 << Eigen::VectorXd::Ones(d.rows()), d.X;
        std::vector<std::string> names{"const"};
        names.insert(names.end(), d.regressor_names.begin(), d.regressor_names.end());
        est.coefficients = solve_least_squares(X1, d.Y, names).bottomRows(d.X.cols());
    } else {
        est.coefficients = solve_least_squares(d.X, d.Y, d.regressor_names);
    }
    finish(est);
    return est;
}

VarEstimate with_slopes(const VarEstimate& est, const Eigen::MatrixXd& coefficients) {
    VarEstimate out = est;
    out.coefficients = coefficients;
    finish(out);
    return out;
}

LagSelection select_lags(const ModelDataset& data, const VarSpec& spec, int p_max) {
    if (p_max < 1) fail(ErrorKind::Parameter, "p_max must be at least 1");
    const int n = static_cast<int>(spec.endogenous.size());
    int t_min = std::numeric_limits<int>::max();
    for (const auto& c : data.countries) t_min = std::min(t_min, c.rows());
    if (p_max > t_min / (n + 1))
        fail(ErrorKind::SampleSize, "p_max " + std::to_string(p_max) + " exceeds T/(n+1) = " +
                                        std::to_string(t_min / (n + 1)));

    const bool follow = spec.exog_lags < 0;
    const bool has_exog = !spec.exogenous.empty();
    auto first_row = [&](int p) { return std::max(p, has_exog ? (follow ? p : spec.exog_lags) : 0); };
    const int common = first_row(p_max);

    LagSelection sel;
    double best[3] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                      std::numeric_limits<double>::infinity()};
    for (int p = 1; p <= p_max; ++p) {
        VarSpec s = spec;
        s.lags = p;
        const auto est = fit_var(data, s, common - first_row(p));
        const double N = est.design.rows();
        const Eigen::MatrixXd ml = est.residuals.transpose() * est.residuals / N;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(ml);
        double logdet = 0.0;
        for (Eigen::Index i = 0; i < ldlt.vectorD().size(); ++i) logdet += std::log(ldlt.vectorD()(i));
        const double K = static_cast<double>(n) * est.dof;

        LagCriteria row;
        row.lags = p;
        row.observations = static_cast<int>(N);
        row.aic = logdet + 2.0 * K / N;
        row.bic = logdet + std::log(N) * K / N;
        row.hq = logdet + 2.0 * std::log(std::log(N)) * K / N;
        int min_sample = std::numeric_limits<int>::max();
        for (int e : est.effective_sample) min_sample = std::min(min_sample, e);
        const auto ac = residual_autocorr(est, std::min(8, min_sample - 1));
        for (int v = 0; v < n; ++v) row.max_abs_autocorr.push_back(ac.acf.row(v).cwiseAbs().maxCoeff());

        if (row.aic < best[0]) best[0] = row.aic, sel.best_aic = p;
        if (row.bic < best[1]) best[1] = row.bic, sel.best_bic = p;
        if (row.hq < best[2]) best[2] = row.hq, sel.best_hq = p;
        sel.rows.push_back(std::move(row));
    }
    return sel;
}

Eigen::MatrixXd CompanionForm::selection() const {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n * p);
    J.leftCols(n).setIdentity();
    return J;
}

CompanionForm companion(const std::vector<Eigen::MatrixXd>& lag_matrices) {
    if (lag_matrices.empty()) fail(ErrorKind::Parameter, "no lag matrices");
    CompanionForm c;
    c.n = static_cast<int>(lag_matrices.front().rows());
    c.p = static_cast<int>(lag_matrices.size());
    const int np = c.n * c.p;
    c.matrix = Eigen::MatrixXd::Zero(np, np);
    for (int j = 0; j < c.p; ++j) c.matrix.block(0, j * c.n, c.n, c.n) = lag_matrices[j];
    if (c.p > 1) c.matrix.bottomLeftCorner(np - c.n, np - c.n).setIdentity();
    Eigen::EigenSolver<Eigen::MatrixXd> es(c.matrix, false);
    c.spectral_radius = es.eigenvalues().cwiseAbs().maxCoeff();
    c.unit_root = c.spectral_radius >= 1.0 - 1e-8;
    return c;
}

CompanionForm companion(const VarEstimate& est) { return companion(est.A); }

AutocorrTable autocorr(const Eigen::MatrixXd& series, const std::vector<int>& group, int max_lag,
                       std::vector<std::string> names) {
    const Eigen::Index N = series.rows();
    if (max_lag < 1) fail(ErrorKind::Parameter, "max_lag must be at least 1");
    if (static_cast<Eigen::Index>(group.size()) != N) fail(ErrorKind::Parameter, "group labels do not cover all rows");

    AutocorrTable tab;
    tab.equations = std::move(names);
    tab.observations = static_cast<int>(N);
    tab.band = 2.0 / std::sqrt(static_cast<double>(N));
    tab.acf.resize(series.cols(), max_lag);
    tab.pacf.resize(series.cols(), max_lag);

    for (Eigen::Index v = 0; v < series.cols(); ++v) {
        const Eigen::VectorXd e = series.col(v).array() - series.col(v).mean();
        const double denom = e.squaredNorm();
        const double scale = series.col(v).cwiseAbs().maxCoeff();
        if (!(denom > 1e-28 * scale * scale * static_cast<double>(N)) || denom == 0.0)
            fail(ErrorKind::Degenerate, "residual series " + std::to_string(v) + " has zero variance");
        std::vector<double> rho(max_lag + 1, 0.0);
        rho[0] = 1.0;
        for (int k = 1; k <= max_lag; ++k) {
            double s = 0.0;
            for (Eigen::Index t = k; t < N; ++t)
                if (group[t] == group[t - k]) s += e(t) * e(t - k);
            rho[k] = s / denom;
            tab.acf(v, k - 1) = rho[k];
        }
        // Durbin-Levinson recursion.
        std::vector<double> phi(max_lag + 1, 0.0);
        std::vector<double> prev(max_lag + 1, 0.0);
        for (int k = 1; k <= max_lag; ++k) {
            double num = rho[k];
            double den = 1.0;
            for (int j = 1; j < k; ++j) {
                num -= prev[j] * rho[k - j];
                den -= prev[j] * rho[j];
            }
            const double pkk = den != 0.0 ? num / den : 0.0;
            phi[k] = pkk;
            for (int j = 1; j < k; ++j) phi[j] = prev[j] - pkk * prev[k - j];
            tab.pacf(v, k - 1) = pkk;
            prev = phi;
        }
    }
    return tab;
}

AutocorrTable residual_autocorr(const VarEstimate& est, int max_lag) {
    int min_sample = std::numeric_limits<int>::max();
    for (int e : est.effective_sample) min_sample = std::min(min_sample, e);
    if (max_lag >= min_sample)
        fail(ErrorKind::Parameter, "max_lag " + std::to_string(max_lag) + " not below the smallest effective sample " +
                                       std::to_string(min_sample));
    return autocorr(est.residuals, est.design.row_country, max_lag, est.spec.endogenous);
}

}  // namespace svariv
