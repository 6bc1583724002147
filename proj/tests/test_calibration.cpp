#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qhedge/calibration.hpp"
#include "qhedge/rng.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

using namespace qhedge;

namespace {

std::string iso_date(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", 2000 + i / 360, 1 + (i / 30) % 12,
                  1 + i % 30);
    return buf;
}

PriceSeries make_series(const std::vector<double>& close) {
    PriceSeries s;
    s.close = close;
    for (std::size_t i = 0; i < close.size(); ++i) s.dates.push_back(iso_date(static_cast<int>(i)));
    return s;
}

PriceSeries gbm_series(double mu, double sigma, int n_days, std::uint64_t seed) {
    Rng rng(seed, "test.gbm", 0);
    std::vector<double> close{100.0};
    double md = mu / kTradingDaysPerYear;
    double sd = sigma / std::sqrt(kTradingDaysPerYear);
    for (int i = 0; i < n_days; ++i)
        close.push_back(close.back() * std::exp(md - 0.5 * sd * sd + sd * rng.normal()));
    return make_series(close);
}

}  // namespace

TEST_CASE("price series parsing and validation") {
    std::istringstream csv("date,close\n2020-01-02,100.0\n2020-01-03,101.5\n2020-01-06,99.25\n");
    auto s = PriceSeries::from_csv(csv);
    REQUIRE(s.close.size() == 3);
    CHECK(s.dates[0] == "2020-01-02");
    CHECK(s.close[1] == 101.5);
    CHECK_NOTHROW(s.validate());

    auto r = s.log_returns();
    REQUIRE(r.size() == 2);
    CHECK(r[0] == doctest::Approx(std::log(101.5 / 100.0)).epsilon(1e-14));

    auto bad = s;
    bad.close[2] = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    auto unordered = s;
    unordered.dates[2] = "2019-12-31";
    CHECK_THROWS_AS(unordered.validate(), std::invalid_argument);
}

TEST_CASE("moment estimation") {
    // alternating up/down by the same factor: p = 1/2 and zero mean return
    std::vector<double> close{100.0};
    for (int i = 0; i < 200; ++i)
        close.push_back(i % 2 == 0 ? close.back() * 1.01 : close.back() / 1.01);
    auto est = estimate_ph(make_series(close));
    CHECK(est.p_hat == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(est.mu_hat == doctest::Approx(0.0).epsilon(1e-10));
    double a = std::log(1.01);
    CHECK(est.sigma_hat ==
          doctest::Approx(a * std::sqrt(200.0 / 199.0) * std::sqrt(252.0)).epsilon(1e-10));

    // estimates are invariant under rescaling the price level
    auto scaled = close;
    for (auto& c : scaled) c *= 7.0;
    auto est2 = estimate_ph(make_series(scaled));
    CHECK(est2.p_hat == est.p_hat);
    CHECK(est2.mu_hat == doctest::Approx(est.mu_hat).epsilon(1e-10));
    CHECK(est2.sigma_hat == doctest::Approx(est.sigma_hat).epsilon(1e-10));

    // a long simulated sample recovers its generating moments
    auto gbm = gbm_series(0.08, 0.2, 2520, 41);
    auto g = estimate_ph(gbm);
    CHECK(g.sigma_hat == doctest::Approx(0.2).epsilon(0.05));
    CHECK(std::abs(g.mu_hat - (0.08 - 0.5 * 0.04)) < 3.0 * 0.2 / std::sqrt(10.0));

    // degenerate direction and degenerate dispersion are rejected
    std::vector<double> rising;
    for (int i = 0; i < 50; ++i) rising.push_back(100.0 + i);
    CHECK_THROWS_WITH_AS(estimate_ph(make_series(rising)),
                         doctest::Contains("degenerate up-probability"), std::invalid_argument);
    CHECK_THROWS_AS(estimate_ph(make_series(std::vector<double>(50, 100.0))),
                    std::invalid_argument);
    CHECK_THROWS_AS(estimate_ph(make_series({100.0, 101.0, 100.0})), std::invalid_argument);
}

TEST_CASE("residual normal fit") {
    CHECK_THROWS_AS(fit_residual_normal(std::vector<double>(50, 0.1)), std::invalid_argument);

    std::vector<double> zeros(200, 0.0);
    auto z = fit_residual_normal(zeros);
    CHECK(z.mean == 0.0);
    CHECK(z.std == 0.0);

    Rng rng(3, "test.fit", 0);
    std::vector<double> xs;
    for (int i = 0; i < 5000; ++i) xs.push_back(0.3 + 0.7 * rng.normal());
    auto fit = fit_residual_normal(xs);
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= xs.size();
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= xs.size();  // maximum-likelihood: biased n
    CHECK(fit.mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(fit.std == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
    CHECK(fit.mean == doctest::Approx(0.3).epsilon(0.15));
    CHECK(fit.std == doctest::Approx(0.7).epsilon(0.05));
}

TEST_CASE("gamma calibration smoke and determinism") {
    auto series = gbm_series(0.10, 0.2, 1500, 7);
    TimeGrid grid(40, 40.0 / kTradingDaysPerYear);
    CalibOptions opt;
    opt.n_paths = 3000;
    opt.max_iter = 5;
    opt.seed = 9;
    opt.gamma_init = 0.5;
    opt.n_threads = 1;
    auto res = calibrate_gamma(series, PayoffSpec::call(series.close.back()), grid, opt);
    CHECK(res.gamma >= 0.0);
    CHECK(res.gamma <= 10.0);
    REQUIRE_FALSE(res.iterations.empty());
    CHECK(static_cast<int>(res.iterations.size()) <= opt.max_iter);
    CHECK(res.iterations.front().gamma_initial == 0.5);
    CHECK(res.tau_grid.size() == res.psi_at_grid.size());
    CHECK_FALSE(res.tau_grid.empty());
    for (double p : res.psi_at_grid) CHECK(p >= 0.0);
    CHECK_FALSE(res.to_json().empty());

    opt.n_threads = 3;
    auto res2 = calibrate_gamma(series, PayoffSpec::call(series.close.back()), grid, opt);
    CHECK(res.to_json() == res2.to_json());
}

TEST_CASE("psi surface of the exponential family") {
    auto grid = psi_surface({0.5, 1.0}, {40.0, 160.0}, 160.0 / kTradingDaysPerYear);
    CHECK(grid.axis1_name == "gamma");
    CHECK(grid.axis2_name == "tau_days");
    REQUIRE(grid.cells.size() == 2);
    REQUIRE(grid.cells[0].size() == 2);
    // gamma = 1 at tau = T: psi = 1 - e^{-1}
    CHECK(grid.cells[1][1] == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
    CHECK(grid.cells[1][0] == doctest::Approx(1.0 - std::exp(-0.25)).epsilon(1e-12));
    CHECK(grid.cells[0][1] == doctest::Approx(0.5 * (1.0 - std::exp(-0.5))).epsilon(1e-12));

    std::ostringstream os;
    write_surface_csv(os, grid);
    CHECK(os.str().rfind("gamma,tau_days,value\n", 0) == 0);
    CHECK(os.str().find("\n1,40,") != std::string::npos);
}

TEST_CASE("gamma surface totality") {
    auto series = gbm_series(0.10, 0.2, 1200, 13);
    CalibOptions opt;
    opt.n_paths = 1500;
    opt.max_iter = 3;
    opt.seed = 17;
    opt.n_threads = 2;
    auto grid = gamma_surface(series, {0.95, 1.0}, {20.0, 40.0}, opt);
    CHECK(grid.axis1_name == "moneyness");
    CHECK(grid.axis2_name == "maturity_days");
    REQUIRE(grid.cells.size() == 2);
    REQUIRE(grid.cells[0].size() == 2);
    for (const auto& row : grid.cells)
        for (double v : row) CHECK((std::isnan(v) || (v >= 0.0 && v <= 10.0)));

    auto again = gamma_surface(series, {0.95, 1.0}, {20.0, 40.0}, opt);
    for (std::size_t i = 0; i < grid.cells.size(); ++i)
        for (std::size_t j = 0; j < grid.cells[i].size(); ++j) {
            bool both_nan = std::isnan(grid.cells[i][j]) && std::isnan(again.cells[i][j]);
            CHECK((both_nan || grid.cells[i][j] == again.cells[i][j]));
        }
}
