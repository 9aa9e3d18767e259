#include "support.hpp"

#include "svariv/regress.hpp"
#include "svariv/var.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>

using namespace svariv;

namespace {

const std::vector<std::string> kNames{"y1", "y2", "y3"};

Eigen::MatrixXd stable_a1() {
    Eigen::MatrixXd A(3, 3);
    A << 0.5, 0.1, 0.0,
         0.0, 0.4, 0.2,
         0.1, -0.1, 0.6;
    return A;
}

VarSpec spec3(int p, bool fe = false) {
    VarSpec s;
    s.endogenous = kNames;
    s.lags = p;
    s.fixed_effects = fe;
    return s;
}

ModelDataset single(const Eigen::MatrixXd& y, const std::string& name = "A") {
    return test::dataset(kNames, {test::country(name, y)});
}

// Largest modulus among the roots of x^2 + b x + c.
double quadratic_radius(std::complex<double> b, std::complex<double> c) {
    const auto d = std::sqrt(b * b - 4.0 * c);
    return std::max(std::abs((-b + d) / 2.0), std::abs((-b - d) / 2.0));
}

}  // namespace

// Persistent VAR(1): coefficient standard errors around 0.007 at T=5000.
Eigen::MatrixXd persistent_a1() {
    Eigen::MatrixXd A(3, 3);
    A << 0.8, 0.1, 0.0,
         0.0, 0.7, 0.1,
         0.1, 0.0, 0.75;
    return A;
}

TEST_CASE("VAR(1) coefficients are recovered at T=5000") {
    // A single draw can miss 0.02 on some cell by chance, so the claim is
    // checked on the median over seeds, and every draw must sit within 4
    // asymptotic standard errors of the truth.
    std::vector<double> worst;
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        const auto y = test::simulate_var({persistent_a1()}, Eigen::Vector3d(0.1, 0.0, -0.2), 5000, seed);
        const auto est = fit_var(single(y), spec3(1));
        const Eigen::MatrixXd X = est.design.X.rowwise() - est.design.X.colwise().mean();
        const Eigen::MatrixXd xtx_inv = (X.transpose() * X).inverse();
        double z = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                z = std::max(z, std::abs(est.A[0](i, j) - persistent_a1()(i, j)) / std::sqrt(est.sigma_u(i, i) * xtx_inv(j, j)));
        CHECK(z < 4.0);
        worst.push_back((est.A[0] - persistent_a1()).cwiseAbs().maxCoeff());
        if (seed == 1) {
            CHECK(est.dof == 4);
            CHECK(est.residuals.rows() == 4999);
            const Eigen::MatrixXd S = est.residuals.transpose() * est.residuals / (4999.0 - 4.0);
            CHECK((est.sigma_u - S).cwiseAbs().maxCoeff() < 1e-14);
        }
    }
    std::nth_element(worst.begin(), worst.begin() + 12, worst.end());
    MESSAGE("median max-abs error " << worst[12]);
    CHECK(worst[12] < 0.02);
}

TEST_CASE("equation-by-equation OLS oracle") {
    const auto y = test::simulate_var({stable_a1(), -0.1 * Eigen::MatrixXd::Identity(3, 3)}, Eigen::Vector3d::Zero(), 60, 9);
    const auto est = fit_var(single(y), spec3(2));
    // Regress y_t on [1, y_{t-1}, y_{t-2}] for each equation.
    const int N = 58;
    Eigen::MatrixXd X(N, 7);
    for (int t = 2; t < 60; ++t) X.row(t - 2) << 1.0, y.row(t - 1), y.row(t - 2);
    const Eigen::MatrixXd Y = y.bottomRows(N);
    const Eigen::MatrixXd beta = (X.transpose() * X).ldlt().solve(X.transpose() * Y);
    CHECK((est.intercepts.row(0).transpose() - beta.row(0).transpose()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((est.A[0] - beta.middleRows(1, 3).transpose()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((est.A[1] - beta.middleRows(4, 3).transpose()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((est.residuals - (Y - X * beta)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((est.fitted() + est.residuals - Y).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("one-country panel equals the single-country fit") {
    const auto y = test::simulate_var({stable_a1()}, Eigen::Vector3d(0.3, 0.1, 0.0), 120, 13);
    const auto a = fit_var(single(y), spec3(2, false));
    const auto b = fit_var(single(y), spec3(2, true));
    CHECK((a.coefficients - b.coefficients).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((a.intercepts - b.intercepts).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((a.residuals - b.residuals).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pooled within estimator matches dummy-variable OLS") {
    std::vector<CountryData> cs;
    for (int c = 0; c < 3; ++c)
        cs.push_back(test::country("C" + std::to_string(c),
                                   test::simulate_var({stable_a1()}, Eigen::Vector3d::Constant(0.2 * c), 40 + 5 * c, 20 + c),
                                   Quarter(2000, 1) + c));
    const auto data = test::dataset(kNames, cs);
    const auto est = fit_var(data, spec3(1, true));
    CHECK(est.design.pooled);
    CHECK(est.dof == 3 + 3);

    const int N = est.design.rows();
    Eigen::MatrixXd X(N, 6);
    X << est.design.X, est.design.deterministic();
    const Eigen::MatrixXd beta = (X.transpose() * X).ldlt().solve(X.transpose() * est.design.Y);
    CHECK((est.coefficients - beta.topRows(3)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((est.intercepts - beta.bottomRows(3)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(est.effective_sample == std::vector<int>{39, 44, 49});
}

TEST_CASE("exogenous block enters with lags 0..p") {
    const Eigen::MatrixXd raw = test::normal_matrix(80, 4, 31);
    auto data = test::dataset({"y1", "y2", "y3", "x"}, {test::country("A", raw)});
    VarSpec s = spec3(2);
    s.exogenous = {"x"};
    const auto est = fit_var(data, s);
    CHECK(est.B.size() == 3);
    CHECK(est.design.X.cols() == 6 + 3);
    CHECK(est.design.regressor_names.front() == "y1.l1");
    s.exog_lags = 0;
    CHECK(fit_var(data, s).B.size() == 1);
}

TEST_CASE("constant series gives a singular design") {
    Eigen::MatrixXd y = test::normal_matrix(50, 3, 41);
    y.col(1).setConstant(2.0);
    CHECK(test::error_kind([&] { fit_var(single(y), spec3(1)); }) == ErrorKind::SingularDesign);
}

TEST_CASE("too short samples are rejected") {
    const Eigen::MatrixXd y = test::normal_matrix(5, 3, 42);
    CHECK(test::error_kind([&] { fit_var(single(y), spec3(2)); }) == ErrorKind::SampleSize);
}

TEST_CASE("with_slopes reproduces the estimate at its own slopes") {
    const auto y = test::simulate_var({stable_a1()}, Eigen::Vector3d::Zero(), 100, 51);
    const auto est = fit_var(single(y), spec3(1));
    const auto same = with_slopes(est, est.coefficients);
    CHECK((same.residuals - est.residuals).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((same.intercepts - est.intercepts).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::MatrixXd shifted = est.coefficients;
    shifted(0, 0) += 0.1;
    const auto moved = with_slopes(est, shifted);
    CHECK(moved.A[0](0, 0) == doctest::Approx(est.A[0](0, 0) + 0.1));
    CHECK(moved.residuals.col(0).mean() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("companion spectral radius") {
    CHECK(companion({0.5 * Eigen::MatrixXd::Identity(2, 2)}).spectral_radius == doctest::Approx(0.5).epsilon(1e-14));
    const auto unit = companion({Eigen::MatrixXd::Identity(2, 2)});
    CHECK(unit.spectral_radius == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(unit.unit_root);

    // Scalar AR(2): roots of x^2 - a1 x - a2.
    Eigen::MatrixXd a1(1, 1), a2(1, 1);
    a1 << 1.2;
    a2 << -0.6;
    CHECK(std::abs(companion({a1, a2}).spectral_radius - quadratic_radius(-1.2, 0.6)) < 1e-10);

    // Random 2x2 VAR(1): roots of x^2 - tr x + det.
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Eigen::MatrixXd A = test::normal_matrix(2, 2, seed, 0.4);
        const double r = quadratic_radius(-A.trace(), A.determinant());
        CHECK(std::abs(companion({A}).spectral_radius - r) < 1e-10);
    }

    // Block-diagonal VAR(2) of two scalar AR(2)s.
    Eigen::MatrixXd b1 = Eigen::MatrixXd::Zero(2, 2), b2 = Eigen::MatrixXd::Zero(2, 2);
    b1.diagonal() << 0.5, 1.1;
    b2.diagonal() << 0.3, -0.5;
    const double oracle = std::max(quadratic_radius(-0.5, -0.3), quadratic_radius(-1.1, 0.5));
    const auto c = companion({b1, b2});
    CHECK(std::abs(c.spectral_radius - oracle) < 1e-10);
    CHECK(c.matrix.rows() == 4);
    CHECK((c.selection() * c.matrix * c.selection().transpose() - b1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("AIC picks one lag on white noise") {
    int hits = 0;
    for (int s = 0; s < 100; ++s) {
        const Eigen::MatrixXd y = test::normal_matrix(200, 3, 1000 + s);
        if (select_lags(single(y), spec3(1), 4).best_aic == 1) ++hits;
    }
    MESSAGE("AIC chose p=1 in " << hits << "/100");
    CHECK(hits >= 90);
}

TEST_CASE("BIC picks two lags on a VAR(2)") {
    Eigen::MatrixXd A2 = Eigen::MatrixXd::Zero(3, 3);
    A2.diagonal() << -0.3, 0.25, -0.2;
    int hits = 0;
    for (int s = 0; s < 100; ++s) {
        const auto y = test::simulate_var({stable_a1(), A2}, Eigen::Vector3d::Zero(), 2000, 2000 + s);
        const auto sel = select_lags(single(y), spec3(1), 4);
        if (sel.best_bic == 2) ++hits;
        if (s == 0) {
            // Common sample across lag orders.
            for (const auto& row : sel.rows) CHECK(row.observations == 1996);
        }
    }
    MESSAGE("BIC chose p=2 in " << hits << "/100");
    CHECK(hits > 50);
}

TEST_CASE("lag selection rejects p_max above T/(n+1)") {
    const Eigen::MatrixXd y = test::normal_matrix(40, 3, 3);
    CHECK(test::error_kind([&] { select_lags(single(y), spec3(1), 11); }) == ErrorKind::SampleSize);
}

TEST_CASE("residual autocorrelation") {
    int small = 0;
    for (int s = 0; s < 200; ++s) {
        const Eigen::MatrixXd u = test::normal_matrix(1000, 1, 3000 + s);
        const auto t = autocorr(u, std::vector<int>(1000, 0), 2);
        if (std::abs(t.acf(0, 0)) < 0.08) ++small;
    }
    CHECK(small >= 190);

    Eigen::MatrixXd ar(5000, 1);
    const Eigen::MatrixXd e = test::normal_matrix(5000, 1, 77);
    ar(0, 0) = e(0, 0);
    for (int t = 1; t < 5000; ++t) ar(t, 0) = 0.9 * ar(t - 1, 0) + e(t, 0);
    const auto t = autocorr(ar, std::vector<int>(5000, 0), 2);
    CHECK(std::abs(t.acf(0, 0) - 0.9) < 0.05);
    // An AR(1) has PACF near zero beyond lag 1.
    CHECK(std::abs(t.pacf(0, 1)) < 0.05);

    CHECK(test::error_kind([] { autocorr(Eigen::MatrixXd::Ones(50, 1), std::vector<int>(50, 0), 2); }) ==
          ErrorKind::Degenerate);
}

TEST_CASE("autocorrelation never pairs rows across countries") {
    Eigen::MatrixXd s(6, 1);
    s << 1, -1, 1, 5, 6, 5;
    // With groups [0,0,0,1,1,1] the cross-boundary product (1*5) must not enter.
    const auto grouped = autocorr(s, {0, 0, 0, 1, 1, 1}, 1);
    const auto pooled = autocorr(s, {0, 0, 0, 0, 0, 0}, 1);
    CHECK(grouped.acf(0, 0) != doctest::Approx(pooled.acf(0, 0)));
}

TEST_CASE("var spec json round trip") {
    auto s = spec3(4, true);
    s.exogenous = {"x"};
    s.trend = true;
    CHECK(VarSpec::from_json(s.to_json()).to_json() == s.to_json());
    CHECK(test::error_kind([] { VarSpec::from_json(nlohmann::json::object()); }) == ErrorKind::Config);
}
