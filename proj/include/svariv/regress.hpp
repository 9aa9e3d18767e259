#pragma once

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace svariv {

// Which sandwich to put around the residuals.
struct CovSpec {
    enum class Kind { Homoskedastic, HC0, NeweyWest, Cluster, TwoWayCluster };

    Kind kind = Kind::HC0;
    int lags = 0;                 // Newey-West bandwidth L (Bartlett weights 1 - j/(L+1))
    std::vector<int> cluster1;    // one label per row
    std::vector<int> cluster2;    // second dimension for two-way clustering
    std::vector<int> series;      // optional Newey-West series id per row; lags never cross series
    bool cluster_correction = true;  // G/(G-1) per clustering dimension
    bool dof_scaling = false;        // N/(N-k) (HC, NW) or (N-1)/(N-k) (clusters)

    static CovSpec homoskedastic() { return of(Kind::Homoskedastic); }
    static CovSpec hc0() { return of(Kind::HC0); }
    static CovSpec of(Kind kind) {
        CovSpec c;
        c.kind = kind;
        return c;
    }
    static CovSpec newey_west(int lags, std::vector<int> series = {});
    static CovSpec cluster(std::vector<int> labels);
    static CovSpec two_way(std::vector<int> dim1, std::vector<int> dim2);

    // Same spec with row-indexed labels restricted to `rows`.
    CovSpec subset(const std::vector<int>& rows) const;
};

const char* to_string(CovSpec::Kind kind);

struct RegressionResult;

struct FirstStage {
    std::vector<RegressionResult> regressions;  // one per endogenous regressor
    std::vector<int> instrument_columns;        // positions of the excluded instruments in each first stage
    std::optional<double> effective_f;          // set for one instrument / one endogenous regressor
};

struct RegressionResult {
    Eigen::VectorXd coefficients;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd covariance;
    CovSpec::Kind cov_kind = CovSpec::Kind::HC0;
    int observations = 0;
    int parameters = 0;
    double r_squared = 0.0;
    double adj_r_squared = 0.0;
    std::vector<std::string> names;
    std::shared_ptr<FirstStage> first_stage;  // populated by tsls

    // sqrt of the covariance diagonal; negative entries (possible under two-way
    // clustering) are clamped to 0 and reported on stderr.
    Eigen::VectorXd standard_errors() const;
    double standard_error(int i) const { return standard_errors()(i); }
};

// Least squares via Householder QR. The design must have full column rank
// (smallest singular value above 1e-10 times the largest).
RegressionResult ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const CovSpec& cov = CovSpec::hc0(),
                     std::vector<std::string> names = {});

// Two-stage least squares. Coefficients are ordered [endogenous..., exogenous...].
// The covariance uses the projected regressors as the sandwich design and the
// structural residuals y - [X_endog X_exog] b.
RegressionResult tsls(const Eigen::VectorXd& y, const Eigen::MatrixXd& X_endog, const Eigen::MatrixXd& X_exog,
                      const Eigen::MatrixXd& Z, const CovSpec& cov = CovSpec::hc0(),
                      std::vector<std::string> names = {});

// Multi-response least squares sharing one factorization of X (equation-by-equation
// OLS with a common design). Same rank rule as ols().
Eigen::MatrixXd solve_least_squares(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                    const std::vector<std::string>& names = {});

// Sandwich covariance for coefficients estimated on design X with the given residuals.
Eigen::MatrixXd covariance(const Eigen::MatrixXd& X, const Eigen::VectorXd& residuals, const CovSpec& spec);

// Montiel Olea-Pflueger effective F for one instrument: pi^2 / Var(pi) with the
// first stage's own covariance.
double effective_first_stage_f(const FirstStage& first_stage);

// Helpers for label vectors.
std::vector<int> encode_labels(const std::vector<std::string>& labels);

}  // namespace svariv
