#include "support.hpp"

#include "svariv/csv.hpp"
#include "svariv/dataio.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace svariv;

namespace {

SeriesSpec fiscal_spec() {
    return SeriesSpec::from_json(nlohmann::json::parse(R"({
        "variables": [
            {"name": "g", "source": "g_nom", "deflator": "defl", "per_capita": true, "log": true},
            {"name": "gdp", "source": "gdp_nom", "deflator": "defl", "per_capita": true, "log": true},
            {"name": "cab", "source": "cab"}
        ],
        "population": "pop",
        "nominal_gdp": "gdp_nom",
        "shares": {"g": "g_nom"}
    })"));
}

std::string panel_csv(const std::vector<double>& g_nom, double gdp_nom = 400.0) {
    std::ostringstream o;
    o << "country,quarter,variable,value,unit\n";
    for (std::size_t t = 0; t < g_nom.size(); ++t) {
        const std::string q = (Quarter(2001, 1) + static_cast<int>(t)).str();
        o << "AAA," << q << ",g_nom," << csv::fmt(g_nom[t]) << ",eur\n";
        o << "AAA," << q << ",gdp_nom," << csv::fmt(gdp_nom) << ",eur\n";
        o << "AAA," << q << ",defl,1.10,index\n";
        o << "AAA," << q << ",pop,100,persons\n";
        o << "AAA," << q << ",cab,0.01,share\n";
    }
    return o.str();
}

}  // namespace

TEST_CASE("quarter parsing and arithmetic") {
    const auto q = Quarter::parse("1986Q1");
    CHECK(q.year() == 1986);
    CHECK(q.quarter() == 1);
    CHECK((q + 135).str() == "2019Q4");
    CHECK(Quarter::parse("2019Q4") - q == 135);
    CHECK(test::error_kind([] { Quarter::parse("1986Q5"); }) == ErrorKind::Parse);
    const auto s2 = Period::parse("2002S2");
    CHECK(s2.quarters() == 2);
    CHECK(s2.first.str() == "2002Q3");
    CHECK(s2.last().str() == "2002Q4");
}

TEST_CASE("two-row CSV ingests as two rows") {
    std::istringstream in("country,quarter,variable,value,unit\nCAN,2000Q1,gdp,1.5,x\nCAN,2000Q2,gdp,1.6,x\n");
    SeriesSpec spec;
    spec.variables.push_back({"gdp", "gdp", std::nullopt, false, false});
    const auto raw = load_panel(in, spec);
    CHECK(raw.size() == 2);
    const auto cov = raw.coverage();
    REQUIRE(cov.size() == 1);
    CHECK(cov[0].quarters == 2);
}

TEST_CASE("non-numeric value is a parse error naming the line") {
    std::istringstream in("country,quarter,variable,value,unit\nCAN,2000Q1,gdp,1.5,x\nCAN,2000Q2,gdp,abc,x\n");
    SeriesSpec spec;
    spec.variables.push_back({"gdp", "gdp", std::nullopt, false, false});
    try {
        load_panel(in, spec);
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Parse);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("malformed rows and duplicates") {
    SeriesSpec spec;
    spec.variables.push_back({"gdp", "gdp", std::nullopt, false, false});
    std::istringstream short_row("country,quarter,variable,value,unit\nCAN,2000Q1,gdp,1.5\n");
    CHECK(test::error_kind([&] { load_panel(short_row, spec); }) == ErrorKind::Parse);
    std::istringstream dup("country,quarter,variable,value,unit\nCAN,2000Q1,gdp,1.5,x\nCAN,2000Q1,gdp,1.7,x\n");
    CHECK(test::error_kind([&] { load_panel(dup, spec); }) == ErrorKind::Integrity);
    std::istringstream gap("country,quarter,variable,value,unit\nCAN,2000Q1,gdp,1.5,x\nCAN,2000Q3,gdp,1.7,x\n");
    CHECK(test::error_kind([&] { load_panel(gap, spec); }) == ErrorKind::Integrity);
    std::istringstream header("country,period,variable,value,unit\nCAN,2000Q1,gdp,1.5,x\n");
    CHECK(test::error_kind([&] { load_panel(header, spec); }) == ErrorKind::Parse);
}

TEST_CASE("coverage report counts 136 quarters for 1986Q1-2019Q4") {
    std::ostringstream o;
    o << "country,quarter,variable,value,unit\n";
    const char* vars[] = {"g", "r", "gdp", "cab", "rer", "srate", "defl", "fdg", "fdgdp"};
    int rows = 0;
    for (Quarter q = Quarter(1986, 1); q <= Quarter(2019, 4); q = q + 1)
        for (const char* v : vars) {
            o << "CAN," << q.str() << ',' << v << ",1.0,x\n";
            ++rows;
        }
    SeriesSpec spec;
    for (const char* v : vars) spec.variables.push_back({v, v, std::nullopt, false, false});
    std::istringstream in(o.str());
    const auto raw = load_panel(in, spec);
    CHECK(raw.size() == static_cast<std::size_t>(rows));
    const auto cov = raw.coverage();
    REQUIRE(cov.size() == 1);
    CHECK(cov[0].quarters == 136);
    CHECK(cov[0].variables == 9);
    CHECK(cov[0].first.str() == "1986Q1");
    CHECK(cov[0].last.str() == "2019Q4");
}

TEST_CASE("real per-capita log transform") {
    const auto spec = fiscal_spec();
    std::istringstream in(panel_csv({110.0, 121.0}));
    const auto data = build_model_dataset(load_panel(in, spec), spec);
    const auto& c = data.country("AAA");
    CHECK(c.values(0, data.column("g")) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(c.values(1, data.column("g")) == doctest::Approx(std::log(1.1)).epsilon(1e-14));
    CHECK(c.values(0, data.column("cab")) == doctest::Approx(0.01));
    CHECK(c.values(0, data.column("gdp")) == doctest::Approx(std::log(400.0 / 1.1 / 100.0)));
}

TEST_CASE("spending shares are means of nominal ratios") {
    const auto spec = fiscal_spec();
    {
        std::istringstream in(panel_csv({100.0, 100.0, 100.0, 100.0}));
        const auto data = build_model_dataset(load_panel(in, spec), spec);
        CHECK(data.country("AAA").shares.at("g") == doctest::Approx(0.25).epsilon(1e-15));
    }
    {
        std::istringstream in(panel_csv({80.0, 120.0, 80.0, 120.0, 80.0, 120.0}));
        const auto data = build_model_dataset(load_panel(in, spec), spec);
        CHECK(data.country("AAA").shares.at("g") == doctest::Approx(0.25).epsilon(1e-15));
        CHECK(data.pooled_share("g") == doctest::Approx(0.25).epsilon(1e-15));
    }
}

TEST_CASE("nonpositive value before log names country, quarter and variable") {
    const auto spec = fiscal_spec();
    std::istringstream in(panel_csv({100.0, 0.0, 100.0}));
    try {
        build_model_dataset(load_panel(in, spec), spec);
        FAIL("expected a domain error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Domain);
        const std::string msg = e.what();
        CHECK(msg.find("AAA") != std::string::npos);
        CHECK(msg.find("2001Q2") != std::string::npos);
        CHECK(msg.find("g_nom") != std::string::npos);
    }
}

TEST_CASE("leading rows without complete inputs are trimmed and windows apply") {
    auto spec = fiscal_spec();
    std::string text = panel_csv({100.0, 100.0, 100.0, 100.0});
    // A cab observation one quarter before everything else.
    text += "AAA,2000Q4,cab,0.02,share\n";
    {
        std::istringstream in(text);
        const auto data = build_model_dataset(load_panel(in, spec), spec);
        CHECK(data.country("AAA").start.str() == "2001Q1");
        CHECK(data.country("AAA").rows() == 4);
    }
    spec.windows["AAA"] = SampleWindow{Quarter(2001, 2), Quarter(2001, 3)};
    std::istringstream in(text);
    const auto data = build_model_dataset(load_panel(in, spec), spec);
    CHECK(data.country("AAA").start.str() == "2001Q2");
    CHECK(data.country("AAA").rows() == 2);
}

TEST_CASE("missing interior value is an integrity error") {
    const auto spec = fiscal_spec();
    std::string text = panel_csv({100.0, 100.0, 100.0});
    const auto pos = text.find("AAA,2001Q2,defl");
    text.erase(pos, text.find('\n', pos) - pos + 1);
    std::istringstream in(text);
    CHECK(test::error_kind([&] { build_model_dataset(load_panel(in, spec), spec); }) == ErrorKind::Integrity);
}

TEST_CASE("series spec json round trip and rule uniqueness") {
    const auto spec = fiscal_spec();
    const auto again = SeriesSpec::from_json(spec.to_json());
    CHECK(again.to_json() == spec.to_json());
    auto doc = spec.to_json();
    doc["variables"].push_back(doc["variables"][0]);
    CHECK(test::error_kind([&] { SeriesSpec::from_json(doc); }) == ErrorKind::Config);
}

TEST_CASE("dataset subsetting by country") {
    auto d = test::dataset({"x"}, {test::country("A", Eigen::MatrixXd::Ones(4, 1)),
                                   test::country("B", Eigen::MatrixXd::Ones(4, 1))});
    d.countries[0].shares["g"] = 0.2;
    d.countries[0].share_observations = 4;
    d.countries[1].shares["g"] = 0.4;
    d.countries[1].share_observations = 12;
    CHECK(d.pooled_share("g") == doctest::Approx(0.35));
    CHECK(d.without_country("A").countries.size() == 1);
    CHECK(d.only_country("A").countries.front().country == "A");
    CHECK(test::error_kind([&] { d.without_country("Z"); }) == ErrorKind::Config);
}
