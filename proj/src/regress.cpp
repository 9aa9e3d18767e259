#include "svariv/regress.hpp"

#include "svariv/error.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>

namespace svariv {

namespace {

constexpr const char* kModule = "regress";
constexpr double kRankTol = 1e-10;

[[noreturn]] void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, kModule, msg); }

std::string column_name(const std::vector<std::string>& names, Eigen::Index j) {
    if (j < static_cast<Eigen::Index>(names.size())) return "'" + names[j] + "'";
    return "#" + std::to_string(j);
}

// Thin QR wrapper that also checks numerical rank through the singular values of R.
struct Factorization {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr;
    Eigen::MatrixXd r_inv;

    Factorization(const Eigen::MatrixXd& X, const std::vector<std::string>& names, ErrorKind kind) : qr(X) {
        const Eigen::Index k = X.cols();
        if (X.rows() < k)
            fail(ErrorKind::SampleSize, "fewer observations (" + std::to_string(X.rows()) + ") than parameters (" +
                                            std::to_string(k) + ")");
        if (k == 0) return;
        Eigen::MatrixXd R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(R);
        const auto& sv = svd.singularValues();
        if (!(sv(k - 1) > kRankTol * sv(0))) {
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> piv(X);
            piv.setThreshold(kRankTol);
            const Eigen::Index rank = piv.rank();
            const Eigen::Index offending = piv.colsPermutation().indices()(std::min(rank, k - 1));
            fail(kind, "design is rank deficient (rank " + std::to_string(rank) + " of " + std::to_string(k) +
                           "); offending column " + column_name(names, offending));
        }
        r_inv = R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& y) const {
        const Eigen::Index k = r_inv.rows();
        Eigen::VectorXd qty = qr.householderQ().transpose() * y;
        return r_inv * qty.head(k);
    }

    // (X'X)^{-1} = R^{-1} R^{-T}
    Eigen::MatrixXd bread() const { return r_inv * r_inv.transpose(); }
};

Eigen::MatrixXd cluster_meat(const Eigen::MatrixXd& scores, const std::vector<int>& labels, double& groups) {
    std::map<int, Eigen::Index> index;
    for (int l : labels) index.emplace(l, 0);
    Eigen::Index g = 0;
    for (auto& [_, i] : index) i = g++;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(g, scores.cols());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) sums.row(index.at(labels[i])) += scores.row(i);
    groups = static_cast<double>(g);
    return sums.transpose() * sums;
}

double cluster_factor(double groups, const CovSpec& spec) {
    if (!spec.cluster_correction || groups < 2) return 1.0;
    return groups / (groups - 1.0);
}

Eigen::MatrixXd meat(const Eigen::MatrixXd& X, const Eigen::VectorXd& u, const CovSpec& spec) {
    const Eigen::Index n = X.rows();
    const Eigen::Index k = X.cols();
    const Eigen::MatrixXd scores = X.array().colwise() * u.array();
    auto dof = [&](double base) {
        if (!spec.dof_scaling) return 1.0;
        return base / static_cast<double>(n - k);
    };

    switch (spec.kind) {
        case CovSpec::Kind::Homoskedastic: {
            const double s2 = u.squaredNorm() / static_cast<double>(n - k);
            return s2 * (X.transpose() * X);
        }
        case CovSpec::Kind::HC0:
            return dof(static_cast<double>(n)) * (scores.transpose() * scores);
        case CovSpec::Kind::NeweyWest: {
            if (spec.lags < 0) fail(ErrorKind::Parameter, "Newey-West lag must be nonnegative");
            if (spec.lags >= n)
                fail(ErrorKind::Parameter, "Newey-West lag " + std::to_string(spec.lags) + " not below sample size " +
                                               std::to_string(n));
            if (!spec.series.empty() && static_cast<Eigen::Index>(spec.series.size()) != n)
                fail(ErrorKind::Parameter, "series labels do not cover all rows");
            Eigen::MatrixXd S = scores.transpose() * scores;
            for (int j = 1; j <= spec.lags; ++j) {
                const double w = 1.0 - static_cast<double>(j) / (spec.lags + 1.0);
                Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(k, k);
                for (Eigen::Index t = j; t < n; ++t) {
                    if (!spec.series.empty() && spec.series[t] != spec.series[t - j]) continue;
                    gamma.noalias() += scores.row(t).transpose() * scores.row(t - j);
                }
                S += w * (gamma + gamma.transpose());
            }
            return dof(static_cast<double>(n)) * S;
        }
        case CovSpec::Kind::Cluster: {
            if (static_cast<Eigen::Index>(spec.cluster1.size()) != n)
                fail(ErrorKind::Parameter, "cluster labels do not cover all rows");
            double g = 0;
            Eigen::MatrixXd M = cluster_meat(scores, spec.cluster1, g);
            return dof(static_cast<double>(n - 1)) * cluster_factor(g, spec) * M;
        }
        case CovSpec::Kind::TwoWayCluster: {
            if (static_cast<Eigen::Index>(spec.cluster1.size()) != n ||
                static_cast<Eigen::Index>(spec.cluster2.size()) != n)
                fail(ErrorKind::Parameter, "cluster labels do not cover all rows");
            std::map<std::pair<int, int>, int> pair_ids;
            std::vector<int> inter(n);
            for (Eigen::Index i = 0; i < n; ++i)
                inter[i] = pair_ids.emplace(std::pair{spec.cluster1[i], spec.cluster2[i]},
                                            static_cast<int>(pair_ids.size()))
                               .first->second;
            double g1 = 0, g2 = 0, g12 = 0;
            Eigen::MatrixXd M1 = cluster_meat(scores, spec.cluster1, g1);
            Eigen::MatrixXd M2 = cluster_meat(scores, spec.cluster2, g2);
            Eigen::MatrixXd M12 = cluster_meat(scores, inter, g12);
            return dof(static_cast<double>(n - 1)) *
                   (cluster_factor(g1, spec) * M1 + cluster_factor(g2, spec) * M2 - cluster_factor(g12, spec) * M12);
        }
    }
    fail(ErrorKind::Parameter, "unknown covariance kind");
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& V) { return 0.5 * (V + V.transpose()); }

Eigen::MatrixXd sandwich(const Factorization& f, const Eigen::MatrixXd& X, const Eigen::VectorXd& u,
                         const CovSpec& spec) {
    const Eigen::MatrixXd B = f.bread();
    if (spec.kind == CovSpec::Kind::Homoskedastic) {
        const double s2 = u.squaredNorm() / static_cast<double>(X.rows() - X.cols());
        return symmetrize(s2 * B);
    }
    return symmetrize(B * meat(X, u, spec) * B);
}

// True when the all-ones vector lies in the column space of X.
bool spans_constant(const Factorization& f, const Eigen::MatrixXd& X) {
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(X.rows());
    const Eigen::VectorXd fit = X * f.solve(ones);
    return (ones - fit).norm() <= 1e-8 * std::sqrt(static_cast<double>(X.rows()));
}

void fill_fit_stats(RegressionResult& r, const Eigen::VectorXd& y, bool centered) {
    const double ssr = r.residuals.squaredNorm();
    const double tss = centered ? (y.array() - y.mean()).square().sum() : y.squaredNorm();
    r.r_squared = tss > 0.0 ? 1.0 - ssr / tss : 0.0;
    const double n = r.observations;
    const double k = r.parameters;
    const double base = centered ? n - 1.0 : n;
    r.adj_r_squared = n > k ? 1.0 - (1.0 - r.r_squared) * base / (n - k) : r.r_squared;
}

void check_labels(const CovSpec& cov, Eigen::Index n) {
    if (!cov.cluster1.empty() && static_cast<Eigen::Index>(cov.cluster1.size()) != n)
        fail(ErrorKind::Parameter, "cluster labels do not cover all rows");
    if (!cov.cluster2.empty() && static_cast<Eigen::Index>(cov.cluster2.size()) != n)
        fail(ErrorKind::Parameter, "cluster labels do not cover all rows");
}

}  // namespace

CovSpec CovSpec::newey_west(int lags, std::vector<int> series) {
    CovSpec c = of(Kind::NeweyWest);
    c.lags = lags;
    c.series = std::move(series);
    return c;
}

CovSpec CovSpec::cluster(std::vector<int> labels) {
    CovSpec c = of(Kind::Cluster);
    c.cluster1 = std::move(labels);
    return c;
}

CovSpec CovSpec::two_way(std::vector<int> dim1, std::vector<int> dim2) {
    CovSpec c = of(Kind::TwoWayCluster);
    c.cluster1 = std::move(dim1);
    c.cluster2 = std::move(dim2);
    return c;
}

CovSpec CovSpec::subset(const std::vector<int>& rows) const {
    CovSpec out = *this;
    auto pick = [&](const std::vector<int>& v) {
        if (v.empty()) return v;
        std::vector<int> s;
        s.reserve(rows.size());
        for (int r : rows) s.push_back(v.at(r));
        return s;
    };
    out.cluster1 = pick(cluster1);
    out.cluster2 = pick(cluster2);
    out.series = pick(series);
    return out;
}

const char* to_string(CovSpec::Kind kind) {
    switch (kind) {
        case CovSpec::Kind::Homoskedastic: return "homoskedastic";
        case CovSpec::Kind::HC0: return "hc0";
        case CovSpec::Kind::NeweyWest: return "newey-west";
        case CovSpec::Kind::Cluster: return "cluster";
        case CovSpec::Kind::TwoWayCluster: return "two-way-cluster";
    }
    return "?";
}

Eigen::VectorXd RegressionResult::standard_errors() const {
    Eigen::VectorXd se(covariance.rows());
    for (Eigen::Index i = 0; i < covariance.rows(); ++i) {
        const double v = covariance(i, i);
        if (v < 0.0) {
            std::cerr << "warning: negative variance for coefficient " << column_name(names, i)
                      << " clamped to 0\n";
            se(i) = 0.0;
        } else {
            se(i) = std::sqrt(v);
        }
    }
    return se;
}

RegressionResult ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const CovSpec& cov,
                     std::vector<std::string> names) {
    if (X.rows() != y.size()) fail(ErrorKind::Parameter, "rows(X) != len(y)");
    check_labels(cov, X.rows());
    Factorization f(X, names, ErrorKind::SingularDesign);

    RegressionResult r;
    r.coefficients = f.solve(y);
    r.residuals = y - X * r.coefficients;
    r.observations = static_cast<int>(X.rows());
    r.parameters = static_cast<int>(X.cols());
    r.cov_kind = cov.kind;
    r.covariance = sandwich(f, X, r.residuals, cov);
    r.names = std::move(names);
    fill_fit_stats(r, y, spans_constant(f, X));
    return r;
}

RegressionResult tsls(const Eigen::VectorXd& y, const Eigen::MatrixXd& X_endog, const Eigen::MatrixXd& X_exog,
                      const Eigen::MatrixXd& Z, const CovSpec& cov, std::vector<std::string> names) {
    const Eigen::Index n = y.size();
    const Eigen::Index k1 = X_endog.cols();
    const Eigen::Index k2 = X_exog.cols();
    const Eigen::Index l = Z.cols();
    if (l < k1)
        fail(ErrorKind::OrderCondition, "under-identified: " + std::to_string(k1) + " endogenous regressor(s), " +
                                            std::to_string(l) + " instrument(s)");
    if (X_endog.rows() != n || X_exog.rows() != n || Z.rows() != n)
        fail(ErrorKind::Parameter, "row counts of y, X_endog, X_exog and Z differ");
    check_labels(cov, n);

    Eigen::MatrixXd W(n, k2 + l);
    W << X_exog, Z;
    std::vector<std::string> w_names;
    for (Eigen::Index j = 0; j < k2; ++j)
        w_names.push_back(static_cast<std::size_t>(k1 + j) < names.size() ? names[k1 + j] : "exog#" + std::to_string(j));
    for (Eigen::Index j = 0; j < l; ++j) w_names.push_back("instrument#" + std::to_string(j));
    Factorization fw(W, w_names, ErrorKind::SingularDesign);

    auto first_stage = std::make_shared<FirstStage>();
    for (Eigen::Index j = k2; j < k2 + l; ++j) first_stage->instrument_columns.push_back(static_cast<int>(j));

    Eigen::MatrixXd X(n, k1 + k2);
    X << X_endog, X_exog;
    Eigen::MatrixXd Xhat = X;
    for (Eigen::Index j = 0; j < k1; ++j) {
        RegressionResult fs;
        fs.coefficients = fw.solve(X_endog.col(j));
        Xhat.col(j) = W * fs.coefficients;
        fs.residuals = X_endog.col(j) - Xhat.col(j);
        fs.observations = static_cast<int>(n);
        fs.parameters = static_cast<int>(W.cols());
        fs.cov_kind = cov.kind;
        fs.covariance = sandwich(fw, W, fs.residuals, cov);
        fs.names = w_names;
        fill_fit_stats(fs, X_endog.col(j), spans_constant(fw, W));
        first_stage->regressions.push_back(std::move(fs));
    }
    if (k1 == 1 && l == 1) {
        try {
            first_stage->effective_f = effective_first_stage_f(*first_stage);
        } catch (const Error&) {
            first_stage->effective_f.reset();
        }
    }

    Factorization fx(Xhat, names, ErrorKind::SingularDesign);
    RegressionResult r;
    r.coefficients = fx.solve(y);
    r.residuals = y - X * r.coefficients;
    r.observations = static_cast<int>(n);
    r.parameters = static_cast<int>(k1 + k2);
    r.cov_kind = cov.kind;
    r.covariance = sandwich(fx, Xhat, r.residuals, cov);
    r.names = std::move(names);
    r.first_stage = std::move(first_stage);
    Factorization fxo(X, {}, ErrorKind::SingularDesign);
    fill_fit_stats(r, y, spans_constant(fxo, X));
    return r;
}

Eigen::MatrixXd solve_least_squares(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                    const std::vector<std::string>& names) {
    if (X.rows() != Y.rows()) fail(ErrorKind::Parameter, "rows(X) != rows(Y)");
    Factorization f(X, names, ErrorKind::SingularDesign);
    const Eigen::Index k = X.cols();
    Eigen::MatrixXd qty = f.qr.householderQ().transpose() * Y;
    return f.r_inv * qty.topRows(k);
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd& X, const Eigen::VectorXd& residuals, const CovSpec& spec) {
    if (X.rows() != residuals.size()) fail(ErrorKind::Parameter, "rows(X) != len(residuals)");
    check_labels(spec, X.rows());
    Factorization f(X, {}, ErrorKind::SingularDesign);
    return sandwich(f, X, residuals, spec);
}

double effective_first_stage_f(const FirstStage& first_stage) {
    if (first_stage.regressions.size() != 1)
        fail(ErrorKind::NotImplemented, "effective F implemented for one endogenous regressor only");
    if (first_stage.instrument_columns.size() != 1)
        fail(ErrorKind::NotImplemented, "effective F implemented for one instrument only");
    const auto& fs = first_stage.regressions.front();
    const int j = first_stage.instrument_columns.front();
    const double pi = fs.coefficients(j);
    const double var = fs.covariance(j, j);
    if (!(var > 0.0)) fail(ErrorKind::Degenerate, "first-stage robust variance is not positive");
    return pi * pi / var;
}

std::vector<int> encode_labels(const std::vector<std::string>& labels) {
    std::map<std::string, int> ids;
    std::vector<int> out;
    out.reserve(labels.size());
    for (const auto& l : labels) out.push_back(ids.emplace(l, static_cast<int>(ids.size())).first->second);
    return out;
}

}  // namespace svariv
