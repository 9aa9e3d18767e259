#include "svariv/svar.hpp"

#include "svariv/error.hpp"

#include <cmath>
#include <limits>

namespace svariv {

namespace {

constexpr const char* kModule = "svar";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, kModule, msg); }

// Rows of the VAR design that have an instrument value.
std::vector<int> instrumented_rows(const Eigen::VectorXd& m) {
    std::vector<int> rows;
    for (Eigen::Index i = 0; i < m.size(); ++i)
        if (!std::isnan(m(i))) rows.push_back(static_cast<int>(i));
    return rows;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& M, const std::vector<int>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), M.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = M.row(rows[i]);
    return out;
}

Eigen::VectorXd take(const Eigen::VectorXd& v, const std::vector<int>& rows) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(rows[i]);
    return out;
}

// Covariance spec with its labels taken from the VAR design rows.
CovSpec structural_cov(const VarEstimate& est, const CovSpec& base, const std::vector<int>& rows) {
    CovSpec cov = base;
    const auto& d = est.design;
    std::vector<int> quarter(d.row_quarter.size());
    for (std::size_t i = 0; i < quarter.size(); ++i) quarter[i] = d.row_quarter[i].ordinal();
    switch (base.kind) {
        case CovSpec::Kind::NeweyWest: cov.series = d.row_country; break;
        case CovSpec::Kind::Cluster:
            if (cov.cluster1.empty()) cov.cluster1 = d.row_country;
            break;
        case CovSpec::Kind::TwoWayCluster:
            cov.cluster1 = d.row_country;
            cov.cluster2 = quarter;
            break;
        default: break;
    }
    return cov.subset(rows);
}

Eigen::MatrixXd controls(const VarEstimate& est) {
    const auto& d = est.design;
    const Eigen::MatrixXd det = d.deterministic();
    Eigen::MatrixXd C(d.rows(), d.X.cols() + det.cols());
    C << d.X, det;
    return C;
}

std::vector<std::string> control_names(const VarEstimate& est) {
    auto names = est.design.regressor_names;
    for (const auto& n : est.design.deterministic_names()) names.push_back(n);
    return names;
}

double relative_gap(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(a)); }

RegressionResult run_iv(const Eigen::VectorXd& y, const Eigen::MatrixXd& endog, const Eigen::MatrixXd& exog,
                        const Eigen::MatrixXd& Z, const CovSpec& cov, std::vector<std::string> names) {
    try {
        return tsls(y, endog, exog, Z, cov, std::move(names));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::SingularDesign || e.kind() == ErrorKind::SampleSize ||
            e.kind() == ErrorKind::OrderCondition)
            fail(ErrorKind::Identification, std::string("structural 2SLS failed: ") + e.what());
        throw;
    }
}

}  // namespace

const char* to_string(Scheme scheme) { return scheme == Scheme::BP ? "bp" : "ck"; }

Scheme parse_scheme(const std::string& text) {
    if (text == "bp" || text == "BP") return Scheme::BP;
    if (text == "ck" || text == "CK") return Scheme::CK;
    fail(ErrorKind::Config, "unknown identification scheme '" + text + "'");
}

Eigen::VectorXd align_instrument(const VarEstimate& est, const InstrumentSet& m) {
    const auto& d = est.design;
    Eigen::VectorXd out = Eigen::VectorXd::Constant(d.rows(), kNaN);
    for (int i = 0; i < d.rows(); ++i) {
        auto it = m.find(d.countries[d.row_country[i]]);
        if (it == m.end()) continue;
        if (auto v = it->second.at(d.row_quarter[i])) out(i) = *v;
    }
    return out;
}

SpendingStep identify_spending(const VarEstimate& est, const InstrumentSet& m, Scheme scheme,
                               const IdentifyOptions& options) {
    return identify_spending(est, align_instrument(est, m), scheme, options);
}

RevenueStep identify_revenue(const VarEstimate& est, const InstrumentSet& m, const Eigen::VectorXd& e_g, double a_g,
                             const IdentifyOptions& options) {
    return identify_revenue(est, align_instrument(est, m), e_g, a_g, options);
}

Identification identify(const VarEstimate& est, const InstrumentSet& m, Scheme scheme, const IdentifyOptions& options) {
    return identify(est, align_instrument(est, m), scheme, options);
}

SpendingStep identify_spending(const VarEstimate& est, const Eigen::VectorXd& mz, Scheme scheme,
                               const IdentifyOptions& options) {
    const int ig = est.index_of(options.names.g);
    const int iy = est.index_of(options.names.gdp);
    const auto& U = est.residuals;

    SpendingStep step;
    step.rule.scheme = scheme;
    step.rule.fwl_gap_spending = kNaN;

    if (scheme == Scheme::BP || options.fixed_a_g) {
        step.rule.a_g = scheme == Scheme::BP ? 0.0 : *options.fixed_a_g;
        step.rule.se_a_g = 0.0;
    } else {
        if (mz.size() != est.design.rows()) fail(ErrorKind::Alignment, "instrument is not aligned with the residual rows");
        const auto rows = instrumented_rows(mz);
        if (rows.empty()) fail(ErrorKind::Identification, "instrument does not overlap the VAR sample");

        const Eigen::MatrixXd C = take_rows(controls(est), rows);
        const Eigen::VectorXd y = take(est.design.Y.col(ig), rows);
        const Eigen::MatrixXd endog = take(est.design.Y.col(iy), rows);
        std::vector<std::string> names{options.names.gdp};
        for (auto& n : control_names(est)) names.push_back(std::move(n));
        auto reg = run_iv(y, endog, C, take(mz, rows), structural_cov(est, options.cov, rows), std::move(names));

        step.rule.a_g = reg.coefficients(0);
        step.rule.se_a_g = reg.standard_error(0);
        step.rule.f_spending = reg.first_stage->effective_f;

        if (options.fwl_check && static_cast<int>(rows.size()) == est.design.rows()) {
            const double num = mz.dot(U.col(ig));
            const double den = mz.dot(U.col(iy));
            step.rule.fwl_gap_spending = relative_gap(step.rule.a_g, num / den);
            if (step.rule.fwl_gap_spending > 1e-8)
                fail(ErrorKind::Identification, "full-regression and residual-form spending elasticities disagree");
        }
        step.rule.spending_regression = std::move(reg);
    }
    step.e_g = U.col(ig) - step.rule.a_g * U.col(iy);
    return step;
}

RevenueStep identify_revenue(const VarEstimate& est, const Eigen::VectorXd& mz, const Eigen::VectorXd& e_g,
                             double a_g, const IdentifyOptions& options) {
    const int ig = est.index_of(options.names.g);
    const int ir = est.index_of(options.names.r);
    const int iy = est.index_of(options.names.gdp);
    const auto& U = est.residuals;
    const auto& Y = est.design.Y;
    if (e_g.size() != U.rows()) fail(ErrorKind::Alignment, "spending shock is not aligned with the residual rows");

    if (mz.size() != est.design.rows()) fail(ErrorKind::Alignment, "instrument is not aligned with the residual rows");
    const auto rows = instrumented_rows(mz);
    if (rows.empty()) fail(ErrorKind::Identification, "instrument does not overlap the VAR sample");

    const Eigen::MatrixXd C = controls(est);
    Eigen::MatrixXd exog(Y.rows(), C.cols() + 1);
    exog << (Y.col(ig) - a_g * Y.col(iy)), C;
    std::vector<std::string> names{options.names.gdp, options.names.g + "-a_g*" + options.names.gdp};
    for (auto& n : control_names(est)) names.push_back(std::move(n));

    auto reg = run_iv(take(Y.col(ir), rows), take(Y.col(iy), rows), take_rows(exog, rows), take(mz, rows),
                      structural_cov(est, options.cov, rows), std::move(names));

    RevenueStep step;
    step.a_r = reg.coefficients(0);
    step.b_gr = reg.coefficients(1);
    const Eigen::VectorXd se = reg.standard_errors();
    step.se_a_r = se(0);
    step.se_b_gr = se(1);
    step.f_revenue = reg.first_stage->effective_f;
    step.fwl_gap = kNaN;

    if (options.fwl_check && static_cast<int>(rows.size()) == est.design.rows()) {
        // u_r = a_r u_gdp + b_gr e_g + e_r with m instrumenting u_gdp.
        const auto resid = tsls(U.col(ir), U.col(iy), e_g, mz, CovSpec::hc0());
        step.fwl_gap = std::max(relative_gap(step.a_r, resid.coefficients(0)),
                                relative_gap(step.b_gr, resid.coefficients(1)));
        if (step.fwl_gap > 1e-8)
            fail(ErrorKind::Identification, "full-regression and residual-form revenue estimates disagree");
    }
    step.e_r = U.col(ir) - step.a_r * U.col(iy) - step.b_gr * e_g;
    step.regression = std::move(reg);
    return step;
}

Identification identify(const VarEstimate& est, const Eigen::VectorXd& m, Scheme scheme,
                        const IdentifyOptions& options) {
    auto spending = identify_spending(est, m, scheme, options);
    auto revenue = identify_revenue(est, m, spending.e_g, spending.rule.a_g, options);

    Identification id;
    id.rule = std::move(spending.rule);
    id.rule.a_r = revenue.a_r;
    id.rule.b_gr = revenue.b_gr;
    id.rule.se_a_r = revenue.se_a_r;
    id.rule.se_b_gr = revenue.se_b_gr;
    id.rule.f_revenue = revenue.f_revenue;
    id.rule.fwl_gap_revenue = revenue.fwl_gap;
    id.rule.revenue_regression = std::move(revenue.regression);
    id.shocks.e_g = std::move(spending.e_g);
    id.shocks.e_r = std::move(revenue.e_r);
    return id;
}

ImpactVector structural_impact(const Eigen::MatrixXd& residuals, const Eigen::VectorXd& shock, std::string label) {
    if (shock.size() != residuals.rows()) fail(ErrorKind::Alignment, "shock is not aligned with the residual rows");
    const double ss = shock.squaredNorm();
    if (!(ss > 0.0) || !std::isfinite(ss)) fail(ErrorKind::Degenerate, "structural shock has zero variance");
    return {residuals.transpose() * shock / ss, std::move(label)};
}

ImpactVector structural_impact(const VarEstimate& est, const Eigen::VectorXd& shock, std::string label) {
    return structural_impact(est.residuals, shock, std::move(label));
}

int IrfSet::shock_index(const std::string& shock) const {
    for (std::size_t i = 0; i < shocks.size(); ++i)
        if (shocks[i] == shock) return static_cast<int>(i);
    fail(ErrorKind::Parameter, "IRF set has no shock '" + shock + "'");
}

int IrfSet::variable_index(const std::string& variable) const {
    for (std::size_t i = 0; i < variables.size(); ++i)
        if (variables[i] == variable) return static_cast<int>(i);
    fail(ErrorKind::Parameter, "IRF set has no variable '" + variable + "'");
}

double IrfSet::at(const std::string& shock, const std::string& variable, int h) const {
    return responses[shock_index(shock)](variable_index(variable), h);
}

Eigen::VectorXd IrfSet::path(const std::string& shock, const std::string& variable) const {
    return responses[shock_index(shock)].row(variable_index(variable)).transpose();
}

void IrfSet::append(const IrfSet& other) {
    if (shocks.empty()) {
        *this = other;
        return;
    }
    if (other.variables != variables || other.horizon != horizon)
        fail(ErrorKind::Parameter, "cannot merge IRF sets with different layouts");
    shocks.insert(shocks.end(), other.shocks.begin(), other.shocks.end());
    responses.insert(responses.end(), other.responses.begin(), other.responses.end());
    shock_scale.insert(shock_scale.end(), other.shock_scale.begin(), other.shock_scale.end());
}

Eigen::VectorXd unit_factors(const std::vector<std::string>& endogenous, const Shares& shares, const FiscalNames& names) {
    Eigen::VectorXd f = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(endogenous.size()), 100.0);
    for (std::size_t i = 0; i < endogenous.size(); ++i) {
        if (endogenous[i] == names.g) f(static_cast<Eigen::Index>(i)) = 100.0 * shares.g;
        if (endogenous[i] == names.r) f(static_cast<Eigen::Index>(i)) = 100.0 * shares.r;
    }
    return f;
}

Eigen::MatrixXd propagate(const std::vector<Eigen::MatrixXd>& lag_matrices, const Eigen::VectorXd& impact, int H) {
    if (H < 0) fail(ErrorKind::Parameter, "horizon must be nonnegative");
    const int p = static_cast<int>(lag_matrices.size());
    const Eigen::Index n = impact.size();
    // Phi_h = sum_{j=1}^{min(h,p)} A_j Phi_{h-j}, applied directly to the impact vector.
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, H + 1);
    out.col(0) = impact;
    for (int h = 1; h <= H; ++h)
        for (int j = 1; j <= std::min(h, p); ++j) out.col(h).noalias() += lag_matrices[j - 1] * out.col(h - j);
    return out;
}

IrfSet compute_irf(const std::vector<Eigen::MatrixXd>& lag_matrices, const std::vector<std::string>& endogenous,
                   const ImpactVector& impact, int H, const Shares& shares, ShockKind target, const FiscalNames& names,
                   bool allow_unstable) {
    const auto comp = companion(lag_matrices);
    if (comp.spectral_radius >= 1.0 && !allow_unstable)
        fail(ErrorKind::Stability, "companion spectral radius " + std::to_string(comp.spectral_radius) +
                                       " >= 1; pass the unstable override to propagate anyway");

    const Eigen::VectorXd factors = unit_factors(endogenous, shares, names);
    const Eigen::MatrixXd raw = propagate(lag_matrices, impact.response, H);
    const Eigen::MatrixXd pct = factors.asDiagonal() * raw;

    int ig = -1;
    int ir = -1;
    for (std::size_t i = 0; i < endogenous.size(); ++i) {
        if (endogenous[i] == names.g) ig = static_cast<int>(i);
        if (endogenous[i] == names.r) ir = static_cast<int>(i);
    }
    const int own = target == ShockKind::Spending ? ig : ir;
    if (own < 0) fail(ErrorKind::Config, "shocked fiscal variable is not in the VAR");
    const double own_impact = pct(own, 0);
    if (!(std::abs(own_impact) > 0.0)) fail(ErrorKind::Degenerate, "shocked variable does not respond on impact");
    const double scale = (target == ShockKind::Spending ? 1.0 : -1.0) / own_impact;

    IrfSet set;
    set.shocks = {target == ShockKind::Spending ? names.g : names.r};
    set.variables = endogenous;
    set.horizon = H;
    set.unit_factors = factors;
    set.shock_scale = {scale};
    const bool budget = ig >= 0 && ir >= 0;
    Eigen::MatrixXd resp(pct.rows() + (budget ? 1 : 0), H + 1);
    resp.topRows(pct.rows()) = scale * pct;
    if (budget) {
        set.variables.push_back("bb");
        resp.row(pct.rows()) = resp.row(ir) - resp.row(ig);
    }
    set.responses = {std::move(resp)};
    return set;
}

IrfSet compute_irf(const VarEstimate& est, const ImpactVector& impact, int H, const Shares& shares, ShockKind target,
                   const FiscalNames& names, bool allow_unstable) {
    return compute_irf(est.A, est.spec.endogenous, impact, H, shares, target, names, allow_unstable);
}

IrfSet structural_irfs(const VarEstimate& est, const Identification& id, int H, const Shares& shares,
                       const FiscalNames& names, bool allow_unstable) {
    IrfSet set = compute_irf(est, structural_impact(est, id.shocks.e_g, names.g), H, shares, ShockKind::Spending,
                             names, allow_unstable);
    set.append(compute_irf(est, structural_impact(est, id.shocks.e_r, names.r), H, shares, ShockKind::Revenue, names,
                           allow_unstable));
    return set;
}

MultiplierPath cumulative_multiplier(const IrfSet& irf, int H_max, const FiscalNames& names, const std::string& shock) {
    if (H_max < 0 || H_max > irf.horizon)
        fail(ErrorKind::Parameter, "multiplier horizon " + std::to_string(H_max) + " outside IRF horizon " +
                                       std::to_string(irf.horizon));
    const Eigen::VectorXd y = irf.path(shock, names.gdp);
    const Eigen::VectorXd g = irf.path(shock, names.g);
    MultiplierPath out;
    double num = 0.0;
    double den = 0.0;
    for (int h = 0; h <= H_max; ++h) {
        num += y(h);
        den += g(h);
        const bool ok = std::abs(den) > 1e-12;
        out.defined.push_back(ok);
        out.values.push_back(ok ? num / den : kNaN);
    }
    return out;
}

double impact_multiplier(const VarEstimate& est, double a_g, const Shares& shares, const FiscalNames& names) {
    const int ig = est.index_of(names.g);
    const int iy = est.index_of(names.gdp);
    const Eigen::VectorXd e_g = est.residuals.col(ig) - a_g * est.residuals.col(iy);
    const auto irf = compute_irf(est, structural_impact(est, e_g, names.g), 0, shares, ShockKind::Spending, names, true);
    return irf.at(names.g, names.gdp, 0) / irf.at(names.g, names.g, 0);
}

ElasticityCurve elasticity_sweep(const VarEstimate& est, const std::vector<double>& grid, const Shares& shares,
                                 const FiscalNames& names) {
    ElasticityCurve curve;
    curve.grid = grid;
    for (double a : grid) {
        if (!std::isfinite(a)) fail(ErrorKind::Parameter, "elasticity grid must be finite");
        try {
            curve.values.push_back(impact_multiplier(est, a, shares, names));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Degenerate) throw;
            curve.values.push_back(kNaN);
        }
    }
    return curve;
}

}  // namespace svariv
