#pragma once

#include "svariv/instrument.hpp"
#include "svariv/regress.hpp"
#include "svariv/var.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace svariv {

enum class Scheme { BP, CK };

const char* to_string(Scheme scheme);
Scheme parse_scheme(const std::string& text);

// Names of the fiscal block inside the endogenous vector.
struct FiscalNames {
    std::string g = "g";
    std::string r = "r";
    std::string gdp = "gdp";
};

// Mean nominal G/GDP and R/GDP used to express log responses in % of GDP.
struct Shares {
    double g = 0.0;
    double r = 0.0;
};

struct IdentifyOptions {
    CovSpec cov = CovSpec::hc0();       // labels are filled in from the VAR design
    std::optional<double> fixed_a_g;     // hold the spending elasticity at this value
    FiscalNames names;
    bool fwl_check = true;               // cross-check against the residual-on-residual form
};

struct PolicyRule {
    Scheme scheme = Scheme::CK;
    double a_g = 0.0;    // output elasticity of g
    double a_r = 0.0;    // output elasticity of r
    double b_gr = 0.0;   // response of r to the spending shock
    double se_a_g = 0.0;
    double se_a_r = 0.0;
    double se_b_gr = 0.0;
    std::optional<double> f_spending;   // effective first-stage F
    std::optional<double> f_revenue;
    std::optional<RegressionResult> spending_regression;  // absent when a_g is imposed
    std::optional<RegressionResult> revenue_regression;
    double fwl_gap_spending = 0.0;      // |full form - residual form|; NaN when not checked
    double fwl_gap_revenue = 0.0;
};

struct ShockSeries {
    Eigen::VectorXd e_g;   // aligned with VarEstimate::residuals rows
    Eigen::VectorXd e_r;
};

struct ImpactVector {
    Eigen::VectorXd response;   // contemporaneous response of every endogenous variable
    std::string shock;
};

struct Identification {
    PolicyRule rule;
    ShockSeries shocks;
};

// Instrument value for each residual row (NaN where the proxy is missing).
Eigen::VectorXd align_instrument(const VarEstimate& est, const InstrumentSet& m);

struct SpendingStep {
    PolicyRule rule;
    Eigen::VectorXd e_g;
};

struct RevenueStep {
    double a_r = 0.0;
    double b_gr = 0.0;
    double se_a_r = 0.0;
    double se_b_gr = 0.0;
    std::optional<double> f_revenue;
    RegressionResult regression;
    double fwl_gap = 0.0;
    Eigen::VectorXd e_r;
};

SpendingStep identify_spending(const VarEstimate& est, const InstrumentSet& m, Scheme scheme,
                               const IdentifyOptions& options = {});
RevenueStep identify_revenue(const VarEstimate& est, const InstrumentSet& m, const Eigen::VectorXd& e_g, double a_g,
                             const IdentifyOptions& options = {});
Identification identify(const VarEstimate& est, const InstrumentSet& m, Scheme scheme,
                        const IdentifyOptions& options = {});

// Same steps with the instrument already aligned to the residual rows (NaN = missing).
SpendingStep identify_spending(const VarEstimate& est, const Eigen::VectorXd& m_rows, Scheme scheme,
                               const IdentifyOptions& options = {});
RevenueStep identify_revenue(const VarEstimate& est, const Eigen::VectorXd& m_rows, const Eigen::VectorXd& e_g,
                             double a_g, const IdentifyOptions& options = {});
Identification identify(const VarEstimate& est, const Eigen::VectorXd& m_rows, Scheme scheme,
                        const IdentifyOptions& options = {});

// Impact of one unit of a structural shock: sum_t u_t e_t / sum_t e_t^2.
ImpactVector structural_impact(const Eigen::MatrixXd& residuals, const Eigen::VectorXd& shock, std::string label = {});
ImpactVector structural_impact(const VarEstimate& est, const Eigen::VectorXd& shock, std::string label = {});

enum class ShockKind { Spending, Revenue };

struct IrfSet {
    std::vector<std::string> shocks;
    std::vector<std::string> variables;        // endogenous names, then "bb" when g and r are present
    std::vector<Eigen::MatrixXd> responses;    // per shock: variables x (H+1), % of GDP
    std::vector<double> shock_scale;           // multiplier applied to the unit impact
    Eigen::VectorXd unit_factors;              // per endogenous variable: log -> % of GDP
    int horizon = 0;

    int shock_index(const std::string& shock) const;
    int variable_index(const std::string& variable) const;
    double at(const std::string& shock, const std::string& variable, int h) const;
    Eigen::VectorXd path(const std::string& shock, const std::string& variable) const;
    void append(const IrfSet& other);  // add the other set's shocks
};

// 100 for every variable, 100*s_g for g and 100*s_r for r.
Eigen::VectorXd unit_factors(const std::vector<std::string>& endogenous, const Shares& shares,
                             const FiscalNames& names = {});

// Raw companion propagation of an impact vector: n x (H+1) log responses.
Eigen::MatrixXd propagate(const std::vector<Eigen::MatrixXd>& lag_matrices, const Eigen::VectorXd& impact, int H);

IrfSet compute_irf(const std::vector<Eigen::MatrixXd>& lag_matrices, const std::vector<std::string>& endogenous,
                   const ImpactVector& impact, int H, const Shares& shares, ShockKind target,
                   const FiscalNames& names = {}, bool allow_unstable = false);
IrfSet compute_irf(const VarEstimate& est, const ImpactVector& impact, int H, const Shares& shares, ShockKind target,
                   const FiscalNames& names = {}, bool allow_unstable = false);

// Spending- and revenue-shock IRFs of an identified model.
IrfSet structural_irfs(const VarEstimate& est, const Identification& id, int H, const Shares& shares,
                       const FiscalNames& names = {}, bool allow_unstable = false);

struct MultiplierPath {
    std::vector<double> values;   // NaN where the cumulative g response is within 1e-12 of zero
    std::vector<bool> defined;
};

MultiplierPath cumulative_multiplier(const IrfSet& irf, int H_max, const FiscalNames& names = {},
                                     const std::string& shock = "g");

struct ElasticityCurve {
    std::vector<double> grid;
    std::vector<double> values;   // impact multiplier; NaN where the shock degenerates
};

double impact_multiplier(const VarEstimate& est, double a_g, const Shares& shares, const FiscalNames& names = {});
ElasticityCurve elasticity_sweep(const VarEstimate& est, const std::vector<double>& grid, const Shares& shares,
                                 const FiscalNames& names = {});

}  // namespace svariv
