#include "support.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(SVARIV_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::map<std::string, std::string> csv_files(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".csv") out[e.path().filename().string()] = slurp(e.path());
    return out;
}

}  // namespace

TEST_CASE("synthetic end-to-end run") {
    test::TempDir dir("cli");
    const std::string data = dir.file("data");
    REQUIRE(run("simulate --out " + data + " --seed 3 --T 120 --countries 1 --draws 19 --horizon 8") == 0);
    const std::string cfg = data + "/config.json";
    REQUIRE(run("run --config " + cfg + " --out " + dir.file("a")) == 0);

    SUBCASE("full artifact set") {
        for (const char* f : {"table1_pretests.csv", "table2_elasticities.csv", "irf_ck.csv", "irf_bp.csv",
                              "multipliers.csv", "elasticity_sweep.csv", "bands.csv", "run_manifest.json"})
            CHECK_MESSAGE(fs::exists(fs::path(dir.file("a")) / f), f);
        const auto table2 = slurp(fs::path(dir.file("a")) / "table2_elasticities.csv");
        CHECK(table2.rfind("scheme,a_g,se_a_g", 0) == 0);
        CHECK(table2.find("\nbp,0,") != std::string::npos);
    }
    SUBCASE("reruns and thread counts give identical bytes") {
        REQUIRE(run("run --config " + cfg + " --out " + dir.file("b") + " --threads 4") == 0);
        const auto a = csv_files(dir.file("a"));
        CHECK(a.size() >= 7);
        CHECK(a == csv_files(dir.file("b")));
        const auto ma = nlohmann::json::parse(slurp(fs::path(dir.file("a")) / "run_manifest.json"));
        const auto mb = nlohmann::json::parse(slurp(fs::path(dir.file("b")) / "run_manifest.json"));
        CHECK(ma["inputs_hash"] == mb["inputs_hash"]);
        CHECK(ma["artifacts"] == mb["artifacts"]);
    }
    SUBCASE("the manifest reproduces the run") {
        REQUIRE(run("run --config " + dir.file("a") + "/run_manifest.json --out " + dir.file("c")) == 0);
        CHECK(csv_files(dir.file("a")) == csv_files(dir.file("c")));
    }
    SUBCASE("seed changes the bands only") {
        REQUIRE(run("run --config " + cfg + " --seed 99 --out " + dir.file("d")) == 0);
        const auto a = csv_files(dir.file("a"));
        const auto d = csv_files(dir.file("d"));
        CHECK(a.at("table2_elasticities.csv") == d.at("table2_elasticities.csv"));
        CHECK(a.at("bands.csv") != d.at("bands.csv"));
    }
    SUBCASE("single stages") {
        CHECK(run("fit --config " + cfg + " --out " + dir.file("e")) == 0);
        CHECK(fs::exists(fs::path(dir.file("e")) / "var_estimate.json"));
        CHECK(run("identify --config " + cfg + " --scheme bp --out " + dir.file("f")) == 0);
        const auto t2 = slurp(fs::path(dir.file("f")) / "table2_elasticities.csv");
        CHECK(t2.find("\nbp,") != std::string::npos);
        CHECK(t2.find("\nck,") == std::string::npos);
    }
}

TEST_CASE("leave-one-country-out over five countries") {
    test::TempDir dir("cli_loo");
    const std::string data = dir.file("data");
    REQUIRE(run("simulate --out " + data + " --seed 4 --T 80 --countries 5 --draws 9 --horizon 4") == 0);
    REQUIRE(run("run --config " + data + "/config.json --leave-out all --out " + dir.file("o")) == 0);
    int n = 0;
    for (const auto& e : fs::directory_iterator(dir.file("o")))
        if (e.path().filename().string().rfind("multipliers_loo_", 0) == 0) ++n;
    CHECK(n == 5);
}

TEST_CASE("errors map to exit codes") {
    test::TempDir dir("cli_err");
    CHECK(run("run --config " + dir.file("missing.json")) == 2);
    {
        std::ofstream f(dir.file("bad.json"));
        f << R"({"data": {"panel": "nowhere.csv"}})";
    }
    CHECK(run("run --config " + dir.file("bad.json")) == 2);
    CHECK(run("run") == 2);
    CHECK(run("bogus") == 2);

    // A constant panel makes the VAR design singular: an estimation error.
    const std::string data = dir.file("data");
    REQUIRE(run("simulate --out " + data + " --seed 1 --T 60 --draws 5") == 0);
    std::ifstream in(data + "/panel.csv");
    std::ofstream out(data + "/flat.csv");
    std::string line;
    std::getline(in, line);
    out << line << '\n';
    while (std::getline(in, line)) {
        const auto last = line.rfind(',');
        const auto prev = line.rfind(',', last - 1);
        out << line.substr(0, prev) << ",100" << line.substr(last) << '\n';
    }
    out.close();
    auto cfg = nlohmann::json::parse(slurp(data + "/config.json"));
    cfg["data"]["panel"] = "flat.csv";
    std::ofstream(data + "/flat.json") << cfg.dump();
    CHECK(run("fit --config " + data + "/flat.json --out " + dir.file("o")) == 3);
}
