#pragma once

#include "svariv/dataio.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace svariv {

struct VarSpec {
    std::vector<std::string> endogenous;
    std::vector<std::string> exogenous;
    int lags = 1;
    int exog_lags = -1;           // exogenous block enters with lags 0..exog_lags; -1 means "same as lags"
    bool fixed_effects = false;   // within estimator; implied when the dataset has several countries
    bool constant = true;         // single-country intercept
    bool trend = false;           // common linear trend (robustness runs)

    int exogenous_lag_count() const { return exog_lags < 0 ? lags : exog_lags; }
    void validate() const;

    static VarSpec from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;
};

// Regression layout shared by the reduced-form VAR and the structural
// regressions: levels of the endogenous block and the lag controls, row-aligned.
struct VarDesign {
    Eigen::MatrixXd Y;                     // N x n, y_t
    Eigen::MatrixXd X;                     // N x q, [endog lags | exog lags | trend]; no intercept
    std::vector<int> row_country;          // index into countries
    std::vector<Quarter> row_quarter;
    std::vector<std::string> regressor_names;
    std::vector<std::string> countries;
    bool pooled = false;                   // country fixed effects instead of one constant
    bool constant = true;

    int rows() const { return static_cast<int>(Y.rows()); }
    // Constant column, country dummies, or nothing.
    Eigen::MatrixXd deterministic() const;
    std::vector<std::string> deterministic_names() const;
};

// `skip` drops that many extra leading observations per country (used to put
// every lag order on a common estimation sample).
VarDesign build_design(const ModelDataset& data, const VarSpec& spec, int skip = 0);

struct VarEstimate {
    VarSpec spec;
    int n = 0;
    int p = 0;
    std::vector<Eigen::MatrixXd> A;        // A[j] is the n x n matrix on y_{t-j-1}
    std::vector<Eigen::MatrixXd> B;        // B[j] is the n x k matrix on x_{t-j}
    Eigen::VectorXd trend;                 // n (zero without trend)
    Eigen::MatrixXd intercepts;            // countries x n; zero rows without constant/FE
    Eigen::MatrixXd coefficients;          // q x n slopes on design.X
    Eigen::MatrixXd residuals;             // N x n
    Eigen::MatrixXd sigma_u;               // n x n
    std::vector<int> effective_sample;     // observations per country
    int dof = 0;                           // parameters per equation
    VarDesign design;

    const std::vector<std::string>& countries() const { return design.countries; }
    Eigen::MatrixXd fitted() const;
    int index_of(const std::string& endogenous_name) const;  // throws Config when absent

    nlohmann::json to_json() const;
};

VarEstimate fit_var(const ModelDataset& data, const VarSpec& spec, int skip = 0);

// Re-derives intercepts, residuals and sigma_u for given lag/exogenous slopes
// on the estimate's own design (used after bias correction).
VarEstimate with_slopes(const VarEstimate& est, const Eigen::MatrixXd& coefficients);

struct LagCriteria {
    int lags = 0;
    double aic = 0.0;
    double bic = 0.0;
    double hq = 0.0;
    int observations = 0;
    std::vector<double> max_abs_autocorr;  // per equation, over lags 1..8
};

struct LagSelection {
    std::vector<LagCriteria> rows;
    int best_aic = 0;
    int best_bic = 0;
    int best_hq = 0;
};

LagSelection select_lags(const ModelDataset& data, const VarSpec& spec, int p_max);

struct CompanionForm {
    Eigen::MatrixXd matrix;     // np x np
    int n = 0;
    int p = 0;
    double spectral_radius = 0.0;
    bool unit_root = false;     // radius >= 1 - 1e-8

    // J = [I_n 0 ... 0]
    Eigen::MatrixXd selection() const;
};

CompanionForm companion(const std::vector<Eigen::MatrixXd>& lag_matrices);
CompanionForm companion(const VarEstimate& est);

struct AutocorrTable {
    std::vector<std::string> equations;
    Eigen::MatrixXd acf;   // equations x max_lag, column k-1 is lag k
    Eigen::MatrixXd pacf;  // equations x max_lag
    double band = 0.0;     // 2 / sqrt(N)
    int observations = 0;
};

// Products never pair observations from different countries.
AutocorrTable residual_autocorr(const VarEstimate& est, int max_lag);
AutocorrTable autocorr(const Eigen::MatrixXd& series, const std::vector<int>& group, int max_lag,
                       std::vector<std::string> names = {});

}  // namespace svariv
