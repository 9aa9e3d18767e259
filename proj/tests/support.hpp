#pragma once

#include "svariv/dataio.hpp"
#include "svariv/error.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace test {

inline Eigen::MatrixXd normal_matrix(int rows, int cols, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, scale);
    Eigen::MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = n(rng);
    return m;
}

// Kind of the svariv::Error thrown by f, if any.
inline std::optional<svariv::ErrorKind> error_kind(const std::function<void()>& f) {
    try {
        f();
    } catch (const svariv::Error& e) {
        return e.kind();
    }
    return std::nullopt;
}

inline svariv::CountryData country(const std::string& name, const Eigen::MatrixXd& values,
                                   svariv::Quarter start = svariv::Quarter(2000, 1)) {
    svariv::CountryData c;
    c.country = name;
    c.start = start;
    c.values = values;
    return c;
}

inline svariv::ModelDataset dataset(std::vector<std::string> columns, std::vector<svariv::CountryData> countries) {
    svariv::ModelDataset d;
    d.columns = std::move(columns);
    d.countries = std::move(countries);
    return d;
}

// y_t = c + sum_j A_j y_{t-j} + u_t with Gaussian u (scale `sd`), 100 burn-in draws discarded.
inline Eigen::MatrixXd simulate_var(const std::vector<Eigen::MatrixXd>& A, const Eigen::VectorXd& c, int T,
                                    std::uint64_t seed, double sd = 1.0) {
    const int n = static_cast<int>(c.size());
    const int p = static_cast<int>(A.size());
    const int burn = 100;
    const Eigen::MatrixXd u = normal_matrix(T + burn, n, seed, sd);
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(T + burn, n);
    for (int t = 0; t < T + burn; ++t) {
        Eigen::VectorXd v = c + u.row(t).transpose();
        for (int j = 1; j <= p && t - j >= 0; ++j) v += A[j - 1] * y.row(t - j).transpose();
        y.row(t) = v.transpose();
    }
    return y.bottomRows(T);
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("svariv_" + tag + "_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace test
