#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qhedge/binomial.hpp"
#include "qhedge/diffusion.hpp"
#include "qhedge/rng.hpp"

#include <cmath>

using namespace qhedge;

namespace {

const MarketParams kMarket{0.08, 0.2, 0.01, 100.0};

}  // namespace

TEST_CASE("ksrf step factors") {
    double h = 1.0 / 252.0, p = 0.55;
    auto m = KsrfStepModel::from_market(kMarket, h, p);
    double sq = std::sqrt(h);
    CHECK(m.up_factor ==
          doctest::Approx(1.0 + 0.08 * h + std::sqrt(0.45 / 0.55) * 0.2 * sq).epsilon(1e-14));
    CHECK(m.down_factor ==
          doctest::Approx(1.0 + 0.08 * h - std::sqrt(0.55 / 0.45) * 0.2 * sq).epsilon(1e-14));
    // structural identities of the parameterization
    CHECK(p * m.up_factor + (1.0 - p) * m.down_factor == doctest::Approx(1.0 + 0.08 * h));
    CHECK(m.up_factor - m.down_factor ==
          doctest::Approx(0.2 * sq / std::sqrt(p * (1.0 - p))).epsilon(1e-12));

    CHECK_THROWS_AS(KsrfStepModel::from_market(kMarket, h, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(KsrfStepModel::from_market(kMarket, h, 1.0), std::invalid_argument);
    // h too large: down factor goes non-positive
    CHECK_THROWS_AS(KsrfStepModel::from_market(kMarket, 30.0, 0.5), std::invalid_argument);
    // arbitrage guard: e^{rh} must sit inside (d, u)
    KsrfStepModel bad{0.5, 1.0005, 0.9995, 1.0 / 252.0};
    CHECK_THROWS_AS(bad.validate(0.5), std::invalid_argument);
}

TEST_CASE("crr footnote probability") {
    double h = 1.0 / 1000.0;
    CHECK(crr_probability(kMarket, h) ==
          doctest::Approx(0.5 + (0.08 - 0.02) / 0.4 * std::sqrt(h)).epsilon(1e-14));
}

TEST_CASE("one-step lattice matches hand evaluation") {
    // S=100, u=1.2, d=0.8, call K=100, r=0: f_u=20, f_d=0, q=0.5, f0=10
    KsrfStepModel m{0.5, 1.2, 0.8, 1.0};
    CHECK(m.q(0.0) == doctest::Approx(0.5));
    CHECK(delta_one_step(100.0, m, 20.0, 0.0, RiskAversion::infinite()) == doctest::Approx(0.5));
    CHECK(delta_one_step(100.0, m, 20.0, 0.0, RiskAversion::finite(1.0)) ==
          doctest::Approx(0.625).epsilon(1e-14));
    CHECK(delta_one_step(100.0, m, 20.0, 0.0, RiskAversion::finite(2.0)) ==
          doctest::Approx(0.5625).epsilon(1e-14));
}

TEST_CASE("lattice structure and risk-neutral pricing") {
    TimeGrid grid(4, 4.0 / 252.0);
    auto lattice = build_lattice(kMarket, grid, 0.5, PayoffSpec::call(100.0));
    auto m = lattice.step_model();
    // recombination S(k,j) = S0 u^j d^{k-j}
    for (int k = 0; k <= 4; ++k)
        for (int j = 0; j <= k; ++j)
            CHECK(lattice.node_price(k, j) ==
                  doctest::Approx(100.0 * std::pow(m.up_factor, j) *
                                  std::pow(m.down_factor, k - j))
                      .epsilon(1e-12));
    // terminal values equal the payoff exactly
    for (int j = 0; j <= 4; ++j)
        CHECK(lattice.option_value(4, j) == std::max(lattice.node_price(4, j) - 100.0, 0.0));
    // one-step backward induction identity and Eq. 2 deltas
    double q = m.q(kMarket.riskless_rate);
    double disc = std::exp(-kMarket.riskless_rate * grid.step());
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j <= k; ++j) {
            double fu = lattice.option_value(k + 1, j + 1);
            double fd = lattice.option_value(k + 1, j);
            CHECK(lattice.option_value(k, j) ==
                  doctest::Approx(disc * (q * fu + (1.0 - q) * fd)).epsilon(1e-13));
            CHECK(lattice.rn_delta(k, j) ==
                  doctest::Approx((fu - fd) / (lattice.node_price(k, j) *
                                               (m.up_factor - m.down_factor)))
                      .epsilon(1e-13));
        }
    CHECK_THROWS_AS(lattice.node_price(5, 0), std::out_of_range);
    CHECK_THROWS_AS(lattice.node_price(2, 3), std::out_of_range);
}

TEST_CASE("zero payoff gives zero values and deltas") {
    TimeGrid grid(16, 16.0 / 252.0);
    auto lattice = build_lattice(kMarket, grid, 0.5,
                               PayoffSpec::custom([](double) { return 0.0; }));
    CHECK(lattice.price() == 0.0);
    for (int k = 0; k < 16; ++k)
        for (int j = 0; j <= k; ++j) CHECK(lattice.rn_delta(k, j) == 0.0);
}

TEST_CASE("crr limit converges to the closed form") {
    double bs = bs_price(100.0, 100.0, 0.2, 0.01, 1.0, PayoffKind::Call).value;
    auto price_at = [&](int n) {
        TimeGrid grid(n, 1.0);
        return build_lattice(kMarket, grid, crr_probability(kMarket, grid.step()),
                             PayoffSpec::call(100.0))
            .price();
    };
    double e250 = std::abs(price_at(250) - bs);
    double e500 = std::abs(price_at(500) - bs);
    double e1000 = std::abs(price_at(1000) - bs);
    CHECK(e1000 / bs < 0.005);
    // first-order convergence: error halves when n doubles (within 20%)
    CHECK(e500 / e250 == doctest::Approx(0.5).epsilon(0.2));
    CHECK(e1000 / e500 == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("delta tilt form equals the risk-aversion form") {
    // psi + rn_delta vs mu/(2 R S sigma^2) + rn_delta with R from the
    // inversion; the net one-step mean excess over variance collapses to the
    // same expression under the step-model identities
    TimeGrid grid(64, 0.25);
    auto lattice = build_lattice(kMarket, grid, 0.55, PayoffSpec::call(100.0));
    auto schedule = RiskAversionSchedule::exponential(1.3, grid.horizon);
    auto m = lattice.step_model();
    Rng rng(7, "nodes", 0);
    for (int draw = 0; draw < 100; ++draw) {
        int k = static_cast<int>(rng.next_u64() % 64);
        int j = static_cast<int>(rng.next_u64() % (k + 1));
        double spot = lattice.node_price(k, j);
        double psi = psi_eval(schedule, grid.tau_at(k));
        auto r = risk_aversion_from_psi(psi, spot, kMarket.drift, kMarket.volatility);
        double direct = kMarket.drift /
                            (2.0 * r.value() * spot * kMarket.volatility * kMarket.volatility) +
                        lattice.rn_delta(k, j);
        double tilt = delta_at_node(lattice, k, j, schedule);
        CHECK(direct == doctest::Approx(tilt).epsilon(1e-10));
        // net-mean reading of the one-step form: (pu+(1-p)d-1) over the
        // one-step variance equals mu/sigma^2 exactly
        double net = (m.p_up * m.up_factor + (1.0 - m.p_up) * m.down_factor - 1.0) /
                     (2.0 * r.value() * m.p_up * (1.0 - m.p_up) * spot *
                      (m.up_factor - m.down_factor) * (m.up_factor - m.down_factor));
        CHECK(net + lattice.rn_delta(k, j) == doctest::Approx(tilt).epsilon(1e-10));
    }
}

TEST_CASE("delta at node: zero family and adjustment scaling") {
    TimeGrid grid(32, 32.0 / 252.0);
    auto lattice = build_lattice(kMarket, grid, 0.5, PayoffSpec::call(100.0));
    auto zero = RiskAversionSchedule::zero(grid.horizon);
    CHECK(delta_at_node(lattice, 10, 4, zero) == lattice.rn_delta(10, 4));
    CHECK_THROWS_AS(delta_at_node(lattice, 32, 0, zero), std::out_of_range);

    // exact 1/R scaling of the adjustment term
    auto m = lattice.step_model();
    double spot = 100.0;
    double a1 = delta_one_step(spot, m, 2.0, 0.5, RiskAversion::finite(1.0)) -
                delta_one_step(spot, m, 2.0, 0.5, RiskAversion::infinite());
    double a4 = delta_one_step(spot, m, 2.0, 0.5, RiskAversion::finite(4.0)) -
                delta_one_step(spot, m, 2.0, 0.5, RiskAversion::infinite());
    CHECK(a1 == doctest::Approx(4.0 * a4).epsilon(1e-12));
    CHECK(a1 > 0.0);  // tilt is long the asset when mu > 0
}

TEST_CASE("zero family replicates exactly") {
    TimeGrid grid(64, 0.25);
    auto lattice = build_lattice(kMarket, grid, 0.5, PayoffSpec::call(100.0));
    auto result = simulate_hedge(lattice, RiskAversionSchedule::zero(grid.horizon), 2000, 5);
    CHECK(result.summary.max_abs_residual <= 1e-9 * result.summary.premium);
    for (const auto& ledger : result.ledgers)
        CHECK(std::abs(ledger.cumulative_hedge_error) <= 1e-9 * result.summary.premium);
}

TEST_CASE("delayed family: exact zeros through the dead zone") {
    TimeGrid grid(100, 100.0 / 252.0);
    double h = grid.step();
    double a = 10.0 * h;  // dead zone spans the last 10 steps
    auto schedule = RiskAversionSchedule::delayed(a, 2.0, grid.horizon);
    auto lattice = build_lattice(kMarket, grid, 0.5, PayoffSpec::call(100.0));
    auto result = simulate_hedge(lattice, schedule, 500, 11);
    for (const auto& ledger : result.ledgers) {
        bool tilted = false;
        for (std::size_t k = 0; k < ledger.residual.size(); ++k) {
            if (ledger.tau[k] <= a + 1e-12)
                CHECK(std::abs(ledger.residual[k]) <= 1e-9 * result.summary.premium);
            else
                tilted = true;
        }
        CHECK(tilted);
    }
}

TEST_CASE("residual law moments, exponential family") {
    TimeGrid grid(40, 40.0 / 252.0);
    auto lattice = build_lattice(kMarket, grid, 0.5, PayoffSpec::call(100.0));
    auto schedule = RiskAversionSchedule::exponential(1.0, grid.horizon);
    const std::size_t paths = 20000;
    auto result = simulate_hedge(lattice, schedule, paths, 3);
    int ok = 0, total = 0;
    for (const auto& s : result.summary.steps) {
        if (s.theory_std <= 0.0) continue;
        ++total;
        double se_mean = s.residual_std / std::sqrt(static_cast<double>(paths));
        double se_std = s.residual_std / std::sqrt(2.0 * static_cast<double>(paths));
        bool mean_ok = std::abs(s.residual_mean - s.theory_mean) <= 3.0 * se_mean;
        bool std_ok = std::abs(s.residual_std - s.theory_std) <= 3.0 * se_std;
        if (mean_ok && std_ok) ++ok;
    }
    CHECK(total > 0);
    CHECK(static_cast<double>(ok) >= 0.95 * total);
}

TEST_CASE("terminal error shrinks first order in h") {
    auto rms_at = [&](int n) {
        TimeGrid grid(n, 0.25);
        auto lattice = build_lattice(kMarket, grid, 0.5, PayoffSpec::call(100.0));
        auto schedule = RiskAversionSchedule::exponential(1.0, grid.horizon);
        return simulate_hedge(lattice, schedule, 5000, 17).summary.terminal_error_rms;
    };
    CHECK(rms_at(400) <= 0.55 * rms_at(100));
}

TEST_CASE("simulation is deterministic and thread-count independent") {
    TimeGrid grid(32, 32.0 / 252.0);
    auto lattice = build_lattice(kMarket, grid, 0.5, PayoffSpec::call(100.0));
    auto schedule = RiskAversionSchedule::exponential(0.8, grid.horizon);
    auto a = simulate_hedge(lattice, schedule, 4000, 9, 10, 1);
    auto b = simulate_hedge(lattice, schedule, 4000, 9, 10, 4);
    auto c = simulate_hedge(lattice, schedule, 4000, 9, 10, 3);
    CHECK(a.summary.to_json() == b.summary.to_json());
    CHECK(a.summary.to_json() == c.summary.to_json());
    auto d = simulate_hedge(lattice, schedule, 4000, 10, 10, 2);
    CHECK(a.summary.to_json() != d.summary.to_json());
}
