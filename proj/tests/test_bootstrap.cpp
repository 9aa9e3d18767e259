#include "support.hpp"

#include "svariv/bootstrap.hpp"
#include "svariv/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

using namespace svariv;

namespace {

Eigen::MatrixXd position_means(const Eigen::MatrixXd& x, int l) {
    const int starts = static_cast<int>(x.rows()) - l + 1;
    Eigen::MatrixXd mu = Eigen::MatrixXd::Zero(l, x.cols());
    for (int s = 0; s < starts; ++s) mu += x.middleRows(s, l);
    return mu / starts;
}

// Start row of the original block that produced draw rows [row, row + l), or -1.
int source_block(const Eigen::MatrixXd& x, const Eigen::MatrixXd& draw, int row, int l) {
    const int n = static_cast<int>(x.cols()) - 1;
    const Eigen::MatrixXd mu = position_means(x, l);
    for (int s = 0; s + l <= x.rows(); ++s) {
        bool ok = true;
        for (int j = 0; j < l && ok; ++j) {
            ok = (draw.row(row + j).head(n) - (x.row(s + j).head(n) - mu.row(j).head(n))).cwiseAbs().maxCoeff() < 1e-13 &&
                 draw(row + j, n) == x(s + j, n);
        }
        if (ok) return s;
    }
    return -1;
}

VarEstimate ar1_estimate(double phi, int T, std::uint64_t seed, ModelDataset* out = nullptr) {
    Eigen::MatrixXd A(1, 1);
    A << phi;
    const Eigen::MatrixXd y = test::simulate_var({A}, Eigen::VectorXd::Zero(1), T, seed);
    auto data = test::dataset({"y"}, {test::country("AAA", y)});
    VarSpec spec;
    spec.endogenous = {"y"};
    auto est = fit_var(data, spec);
    if (out) *out = std::move(data);
    return est;
}

struct Small {
    SynthOutput synth;
    VarSpec spec;
    PipelineSpec pipe;
};

Small small_problem(int countries = 1) {
    DgpSpec d = DgpSpec::desk_default(120, 4);
    d.countries = countries;
    d.gamma = instrument_strength_for_f(d, 40.0);
    Small s{simulate(d, 6), {}, {}};
    s.spec.endogenous = {"g", "r", "gdp"};
    s.pipe.shares = {0.2, 0.4};
    s.pipe.horizon = 6;
    s.pipe.sweep_grid = {-0.5, 0.0};
    return s;
}

}  // namespace

TEST_CASE("Efron percentile interval") {
    std::vector<double> v;
    for (int i = 1; i <= 100; ++i) v.push_back(i);
    auto [lo, hi] = efron_percentile(v, 0.68);
    CHECK(lo == doctest::Approx(16.84).epsilon(1e-12));
    CHECK(hi == doctest::Approx(84.16).epsilon(1e-12));
    auto same = efron_percentile(std::vector<double>(10, 5.0), 0.9);
    CHECK(same.first == 5.0);
    CHECK(same.second == 5.0);
    auto median = efron_percentile(v, 0.0);
    CHECK(median.first == doctest::Approx(50.5));
    CHECK(median.second == doctest::Approx(50.5));
    v.push_back(NAN);
    CHECK(efron_percentile(v, 0.68).first == doctest::Approx(16.84).epsilon(1e-12));
    CHECK(test::error_kind([] { efron_percentile({1.0, NAN}, 0.68); }) == ErrorKind::Parameter);
}

TEST_CASE("default block length") {
    CHECK(default_block_length(1) == 6);
    CHECK(default_block_length(80) == 16);
    CHECK(default_block_length(136) == static_cast<int>(std::ceil(5.03 * std::pow(136.0, 0.25))));
}

TEST_CASE("moving-block resampling") {
    Eigen::MatrixXd x = test::normal_matrix(50, 4, 8);
    x.col(0).array() += 3.0;

    SUBCASE("block length one draws centered rows") {
        auto rng = draw_rng(1, 2, 3);
        const Eigen::MatrixXd d = mbb_draw(x, 1, rng);
        for (int t = 0; t < 50; ++t) CHECK(source_block(x, d, t, 1) >= 0);
    }
    SUBCASE("block length T returns the centered sample") {
        auto rng = draw_rng(1, 2, 3);
        const Eigen::MatrixXd d = mbb_draw(x, 50, rng);
        CHECK(d.leftCols(3).cwiseAbs().maxCoeff() == 0.0);
        CHECK(d.col(3) == x.col(3));
    }
    SUBCASE("blocks keep residual and proxy rows paired") {
        auto rng = draw_rng(5, 2, 0);
        const Eigen::MatrixXd d = mbb_draw(x, 4, rng);
        CHECK(d.rows() == 50);
        for (int b = 0; b + 4 <= 50; b += 4) CHECK(source_block(x, d, b, 4) >= 0);
    }
    SUBCASE("centering makes the bootstrap mean zero") {
        const Eigen::MatrixXd mu = position_means(x, 4);
        Eigen::RowVectorXd total = Eigen::RowVectorXd::Zero(4);
        for (int s = 0; s + 4 <= 50; ++s)
            for (int j = 0; j < 4; ++j) total += x.row(s + j) - mu.row(j);
        CHECK(total.head(3).cwiseAbs().maxCoeff() <= 1e-10 * x.cwiseAbs().maxCoeff());
    }
    SUBCASE("same seed, same draw") {
        auto a = draw_rng(42, 2, 7);
        auto b = draw_rng(42, 2, 7);
        auto c = draw_rng(42, 2, 8);
        const Eigen::MatrixXd da = mbb_draw(x, 4, a);
        CHECK(da == mbb_draw(x, 4, b));
        CHECK(da != mbb_draw(x, 4, c));
    }
    SUBCASE("invalid block length") {
        auto rng = draw_rng(1, 1, 1);
        CHECK(test::error_kind([&] { mbb_draw(x, 0, rng); }) == ErrorKind::Parameter);
        CHECK(test::error_kind([&] { mbb_draw(x, 51, rng); }) == ErrorKind::Parameter);
    }
}

TEST_CASE("panel blocks stay within a country") {
    Eigen::MatrixXd x = test::normal_matrix(60, 3, 12);
    std::vector<int> country(60);
    for (int i = 0; i < 60; ++i) {
        country[i] = i < 25 ? 0 : 1;
        x(i, 2) = i;  // proxy doubles as a row tag
    }
    for (std::uint64_t k = 0; k < 20; ++k) {
        auto rng = draw_rng(3, 2, k);
        const Eigen::MatrixXd d = mbb_draw_panel(x, country, 6, rng);
        for (int i = 0; i < 60; ++i) CHECK(country[static_cast<int>(d(i, 2))] == country[i]);
    }
}

TEST_CASE("regenerating with the fitted residuals reproduces the data") {
    const auto s = small_problem(2);
    const auto est = fit_var(s.synth.data, s.spec);
    const auto back = regenerate(s.synth.data, est, est.residuals);
    for (std::size_t c = 0; c < back.countries.size(); ++c)
        CHECK((back.countries[c].values - s.synth.data.countries[c].values).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("bias correction guard") {
    ModelDataset data;
    const auto est = ar1_estimate(0.9, 200, 1, &data);
    const double c = est.coefficients(0, 0);

    const auto none = apply_bias(est, Eigen::MatrixXd::Zero(est.coefficients.rows(), est.coefficients.cols()));
    CHECK(none.coefficients == est.coefficients);
    CHECK(none.delta == 1.0);

    Eigen::MatrixXd bias = Eigen::MatrixXd::Zero(est.coefficients.rows(), est.coefficients.cols());
    bias(0, 0) = c - 1.03;  // a full correction would put the root at 1.03
    const auto half = apply_bias(est, bias);
    CHECK(half.applied);
    CHECK(half.delta == 0.5);
    CHECK(half.radius_after == doctest::Approx((c + 1.03) / 2).epsilon(1e-12));
    CHECK(half.radius_after < 1.0);

    const auto explosive = ar1_estimate(1.02, 200, 2);
    REQUIRE(companion(explosive.A).spectral_radius >= 1.0);
    const auto skipped = apply_bias(explosive, bias);
    CHECK_FALSE(skipped.applied);
    CHECK(skipped.coefficients == explosive.coefficients);
}

TEST_CASE("bias correction moves AR(1) estimates toward the truth") {
    int closer = 0;
    const int runs = 200;
    for (int r = 0; r < runs; ++r) {
        ModelDataset data;
        const auto est = ar1_estimate(0.9, 80, 1000 + r, &data);
        const auto k = kilian_correct(data, est, 200, std::nullopt, 7 + r);
        if (std::abs(k.coefficients(0, 0) - 0.9) < std::abs(est.coefficients(0, 0) - 0.9)) ++closer;
    }
    MESSAGE("corrected estimate closer in " << closer << " of " << runs);
    CHECK(closer >= 0.7 * runs);
}

TEST_CASE("pipeline bootstrap") {
    const auto s = small_problem(2);
    BootstrapConfig cfg;
    cfg.draws = 2;
    cfg.pre_draws = 20;
    cfg.seed = 9;

    SUBCASE("tiny runs are reproducible") {
        const auto a = bootstrap_pipeline(s.synth.data, s.spec, s.synth.instrument, s.pipe, cfg);
        const auto b = bootstrap_pipeline(s.synth.data, s.spec, s.synth.instrument, s.pipe, cfg);
        std::ostringstream oa;
        std::ostringstream ob;
        a.write_archive(oa);
        b.write_archive(ob);
        CHECK(oa.str() == ob.str());
        CHECK(a.archive.rows() == 2);
        const auto est = fit_var(s.synth.data, s.spec);
        CHECK(a.statistics == statistic_names(est, s.pipe));
        CHECK(a.statistics.front() == "a_g");
        CHECK(a.index("mult:6") >= 0);
        CHECK(a.index("sweep:-0.5") >= 0);
    }
    SUBCASE("bands are nested and thread-invariant") {
        cfg.draws = 49;
        const auto one = bootstrap_pipeline(s.synth.data, s.spec, s.synth.instrument, s.pipe, cfg);
        cfg.threads = 4;
        const auto four = bootstrap_pipeline(s.synth.data, s.spec, s.synth.instrument, s.pipe, cfg);
        CHECK(one.archive.isApprox(four.archive, 0.0));
        CHECK(one.lower == four.lower);

        const auto wide = one.at_level(0.90);
        for (std::size_t i = 0; i < one.statistics.size(); ++i) {
            if (one.valid[i] < 2) continue;
            CHECK(wide.lower[i] <= one.lower[i]);
            CHECK(wide.upper[i] >= one.upper[i]);
        }
    }
    SUBCASE("hold a_g fixes the spending elasticity in every draw") {
        cfg.draws = 5;
        cfg.hold_a_g = true;
        const auto b = bootstrap_pipeline(s.synth.data, s.spec, s.synth.instrument, s.pipe, cfg);
        for (int d = 0; d < 5; ++d) CHECK(b.archive(d, 0) == b.point[0]);
    }
    SUBCASE("configuration errors") {
        cfg.draws = 0;
        CHECK(test::error_kind([&] { cfg.validate(); }) == ErrorKind::Config);
        cfg.draws = 10;
        cfg.level = 1.5;
        CHECK(test::error_kind([&] { cfg.validate(); }) == ErrorKind::Config);
    }
}
