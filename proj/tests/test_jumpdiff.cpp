#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qhedge/jumpdiff.hpp"
#include "qhedge/rng.hpp"

#include <cmath>
#include <string>

using namespace qhedge;

namespace {

JumpModel base_model() {
    return JumpModel{0.08, 0.07, 0.2, 0.25, -0.1, 0.15, 3.0, 0.01, 100.0, 50.0, 2.0};
}

// smooth analytic claim for hedge-residual scaling tests
JumpClaimFn analytic_geometric_claim(const JumpModel& model, double horizon) {
    return [model, horizon](double s1, double s2, double t) {
        double value = std::sqrt(s1 * s2) * std::exp(0.05 * (horizon - t));
        auto [j1, j2] = model.displaced(s1, s2, t);
        return JumpClaimEval{value, 0.5 * value / s1, 0.5 * value / s2,
                             std::sqrt(j1 * j2) * std::exp(0.05 * (horizon - t))};
    };
}

}  // namespace

TEST_CASE("spanning condition and validation") {
    CHECK(base_model().span(0.0) == doctest::Approx(0.055).epsilon(1e-14));
    CHECK_NOTHROW(base_model().validate(0.5));

    auto flat = base_model();
    flat.gamma1 = 0.0;
    flat.gamma2 = 0.0;
    CHECK_THROWS_WITH_AS(flat.validate(0.5), doctest::Contains("co-linear risk loadings"),
                         std::invalid_argument);
    auto prop = base_model();  // loadings proportional across assets
    prop.sigma2 = 0.4;
    prop.gamma2 = -0.2;
    CHECK_THROWS_WITH_AS(prop.validate(0.5), doctest::Contains("co-linear risk loadings"),
                         std::invalid_argument);
    auto short2 = base_model();
    short2.maturity2 = 0.3;
    CHECK_THROWS_AS(short2.validate(0.5), std::invalid_argument);
    auto crash = base_model();
    crash.gamma1 = -1.0;
    CHECK_THROWS_AS(crash.validate(0.5), std::invalid_argument);
    auto novol = base_model();
    novol.sigma2 = 0.0;
    CHECK_THROWS_AS(novol.validate(0.5), std::invalid_argument);
}

TEST_CASE("jump displacement") {
    auto m = base_model();
    auto [p1, p2] = m.displaced(100.0, 50.0, 0.0);
    CHECK(p1 == doctest::Approx(90.0).epsilon(1e-14));
    CHECK(p2 == doctest::Approx(57.5).epsilon(1e-14));
    m.additive_jump_displacement = true;
    auto [a1, a2] = m.displaced(100.0, 50.0, 0.0);
    CHECK(a1 == doctest::Approx(99.9).epsilon(1e-14));
    CHECK(a2 == doctest::Approx(50.15).epsilon(1e-14));
}

TEST_CASE("riskless deltas eliminate both risk loadings") {
    auto model = base_model();
    // holding the asset itself hedges it one-for-one
    JumpClaimEval asset1{100.0, 1.0, 0.0, 90.0};
    auto d = rn_deltas_jump(model, asset1, 100.0, 50.0, 0.0);
    CHECK(d.d1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.d2 == doctest::Approx(0.0).epsilon(1e-12));
    JumpClaimEval asset2{50.0, 0.0, 1.0, 57.5};
    auto e = rn_deltas_jump(model, asset2, 100.0, 50.0, 0.0);
    CHECK(e.d1 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(e.d2 == doctest::Approx(1.0).epsilon(1e-12));

    Rng rng(17, "test.jump", 0);
    for (int i = 0; i < 1000; ++i) {
        double s1 = 50.0 + 100.0 * rng.uniform();
        double s2 = 20.0 + 60.0 * rng.uniform();
        JumpClaimEval c{10.0 * rng.uniform(), rng.normal(), rng.normal(),
                        10.0 * rng.uniform()};
        auto rn = rn_deltas_jump(model, c, s1, s2, 0.0);
        double db = c.d1 * s1 * 0.2 + c.d2 * s2 * 0.25;
        double jmp = c.jumped - c.value;
        // the hedge matches the claim's Brownian and Poisson coefficients
        CHECK(rn.d1 * s1 * 0.2 + rn.d2 * s2 * 0.25 == doctest::Approx(db).epsilon(1e-10));
        CHECK(rn.d1 * s1 * (-0.1) + rn.d2 * s2 * 0.15 == doctest::Approx(jmp).epsilon(1e-10));
    }
}

TEST_CASE("corrections satisfy the first-order conditions") {
    auto model = base_model();
    double s1 = 100.0, s2 = 50.0, R = 4.0, lambda = 3.0;
    auto corr = jump_corrections(model, R, s1, s2, 0.0);
    double e1 = corr.d1 * s1, e2 = corr.d2 * s2;  // dollar tilts
    double sg1 = 0.2, sg2 = 0.25, g1 = -0.1, g2 = 0.15;
    double brown = e1 * sg1 + e2 * sg2;
    double pois = e1 * g1 + e2 * g2;
    // stationarity of mean - R * quadratic risk in each dollar tilt
    double grad1 = (0.08 + lambda * g1) - 2.0 * R * (sg1 * brown + lambda * g1 * pois);
    double grad2 = (0.07 + lambda * g2) - 2.0 * R * (sg2 * brown + lambda * g2 * pois);
    CHECK(std::abs(grad1) < 1e-6);
    CHECK(std::abs(grad2) < 1e-6);

    // numeric gradient of the objective itself
    auto objective = [&](double x1, double x2) {
        double b = x1 * sg1 + x2 * sg2;
        double p = x1 * g1 + x2 * g2;
        return (0.08 + lambda * g1) * x1 + (0.07 + lambda * g2) * x2 -
               R * (b * b + lambda * p * p);
    };
    double eps = 1e-6;
    CHECK(std::abs(objective(e1 + eps, e2) - objective(e1 - eps, e2)) / (2.0 * eps) < 1e-6);
    CHECK(std::abs(objective(e1, e2 + eps) - objective(e1, e2 - eps)) / (2.0 * eps) < 1e-6);
}

TEST_CASE("correction scaling and the printed variant") {
    auto model = base_model();
    auto c4 = jump_corrections(model, 4.0, 100.0, 50.0, 0.0);
    auto c8 = jump_corrections(model, 8.0, 100.0, 50.0, 0.0);
    CHECK(c4.d1 == doctest::Approx(2.0 * c8.d1).epsilon(1e-12));
    CHECK(c4.d2 == doctest::Approx(2.0 * c8.d2).epsilon(1e-12));

    for (double t : {0.0, 0.2}) {
        auto used = jump_corrections(model, 3.0, 100.0, 50.0, t);
        auto printed = jump_corrections_printed(model, 3.0, 100.0, 50.0, t);
        CHECK(printed.d1 == doctest::Approx(2.0 * used.d1).epsilon(1e-12));
        CHECK(printed.d2 == doctest::Approx(2.0 * used.d2).epsilon(1e-12));
    }

    JumpClaimEval claim{8.0, 0.6, 0.1, 7.0};
    auto rn = rn_deltas_jump(model, claim, 100.0, 50.0, 0.0);
    auto inf = optimal_deltas_jump(model, claim, 100.0, 50.0, RiskAversion::infinite(), 0.0);
    CHECK(inf.d1 == rn.d1);
    CHECK(inf.d2 == rn.d2);
    auto fin = optimal_deltas_jump(model, claim, 100.0, 50.0, RiskAversion::finite(4.0), 0.0);
    CHECK(fin.d1 - rn.d1 == doctest::Approx(c4.d1).epsilon(1e-12));
    CHECK(fin.d2 - rn.d2 == doctest::Approx(c4.d2).epsilon(1e-12));
}

TEST_CASE("risk-neutral pricer") {
    auto model = base_model();
    McPriceModel pricing;
    pricing.n_paths = 20000;
    pricing.n_steps = 32;
    pricing.seed = 5;

    auto flat = jump_price(model, [](double, double) { return 2.0; }, pricing, 100.0, 50.0,
                           0.0, 0.5);
    CHECK(flat.value == doctest::Approx(2.0 * std::exp(-0.01 * 0.5)).epsilon(1e-10));
    CHECK(flat.std_err < 1e-8);
    CHECK(flat.jumped == doctest::Approx(flat.value).epsilon(1e-10));

    // each discounted asset is a martingale under the pricing measure
    auto m1 = jump_price(model, [](double s1, double) { return s1; }, pricing, 100.0, 50.0,
                         0.0, 0.5);
    CHECK(std::abs(m1.value - 100.0) < 3.0 * m1.std_err);
    CHECK(m1.d1 == doctest::Approx(1.0).epsilon(0.02));
    auto m2 = jump_price(model, [](double, double s2) { return s2; }, pricing, 100.0, 50.0,
                         0.0, 0.5);
    CHECK(std::abs(m2.value - 50.0) < 3.0 * m2.std_err);
}

TEST_CASE("hedged residual variance shrinks quadratically with the step") {
    auto model = base_model();
    const double horizon = 0.25;
    auto claim = analytic_geometric_claim(model, horizon);
    auto zero = RiskAversionSchedule::zero(horizon);
    std::vector<double> log_h, log_var;
    for (int n : {4, 8, 16, 32}) {
        TimeGrid grid(n, horizon);
        auto res = simulate_hedge_jump(model, claim, zero, grid, 4000, 31, 0, 0);
        double var = 0.0;
        for (const auto& s : res.summary.steps)
            var += s.residual_std * s.residual_std;
        var /= static_cast<double>(res.summary.steps.size());
        log_h.push_back(std::log(grid.step()));
        log_var.push_back(std::log(var));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    auto n = static_cast<double>(log_h.size());
    for (std::size_t i = 0; i < log_h.size(); ++i) {
        sx += log_h[i];
        sy += log_var[i];
        sxx += log_h[i] * log_h[i];
        sxy += log_h[i] * log_var[i];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("hedge simulation reporting and determinism") {
    auto model = base_model();
    const double horizon = 0.25;
    auto claim = analytic_geometric_claim(model, horizon);
    TimeGrid grid(10, horizon);
    auto schedule = RiskAversionSchedule::exponential(0.7, horizon);
    auto a = simulate_hedge_jump(model, claim, schedule, grid, 1500, 19, 10, 1);
    auto b = simulate_hedge_jump(model, claim, schedule, grid, 1500, 19, 10, 4);
    CHECK(a.summary.to_json() == b.summary.to_json());
    auto c = simulate_hedge_jump(model, claim, schedule, grid, 1500, 20, 10, 1);
    CHECK(a.summary.to_json() != c.summary.to_json());

    CHECK(a.summary.oracle_check.find("textbook_over_used") != std::string::npos);
    CHECK(a.summary.oracle_check.find("2.0") != std::string::npos);
    REQUIRE_FALSE(a.ledgers.empty());
    const auto& led = a.ledgers.front();
    CHECK_FALSE(led.spot2.empty());
    CHECK_FALSE(led.delta2.empty());
    CHECK(led.jumps_count.size() == led.spot.size());
}
