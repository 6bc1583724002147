#include "qhedge/binomial.hpp"

#include "qhedge/detail/parallel.hpp"
#include "qhedge/rng.hpp"

#include <algorithm>
#include <cmath>

namespace qhedge {

KsrfStepModel KsrfStepModel::from_market(const MarketParams& market, double h, double p_up) {
    if (!(p_up > 0.0 && p_up < 1.0))
        throw std::invalid_argument("KsrfStepModel: p_up must lie in (0,1)");
    double sqh = std::sqrt(h);
    double u = 1.0 + market.drift * h + std::sqrt((1.0 - p_up) / p_up) * market.volatility * sqh;
    double d = 1.0 + market.drift * h - std::sqrt(p_up / (1.0 - p_up)) * market.volatility * sqh;
    KsrfStepModel m{p_up, u, d, h};
    m.validate(market.riskless_rate);
    return m;
}

void KsrfStepModel::validate(double riskless_rate) const {
    if (!(p_up > 0.0 && p_up < 1.0))
        throw std::invalid_argument("KsrfStepModel: p_up must lie in (0,1)");
    if (!(down_factor > 0.0))
        throw std::invalid_argument("KsrfStepModel: degenerate down factor");
    if (!(down_factor < up_factor))
        throw std::invalid_argument("KsrfStepModel: down_factor must be < up_factor");
    double growth = std::exp(riskless_rate * step);
    if (!(down_factor < growth && growth < up_factor))
        throw std::invalid_argument("KsrfStepModel: arbitrage step model");
}

double KsrfStepModel::q(double riskless_rate) const {
    return (std::exp(riskless_rate * step) - down_factor) / (up_factor - down_factor);
}

double crr_probability(const MarketParams& market, double h) {
    double s = market.volatility;
    return 0.5 + (market.drift - 0.5 * s * s) / (2.0 * s) * std::sqrt(h);
}

std::size_t BinomialLattice::index(int k, int j) const {
    if (k < 0 || k > grid_.n_steps || j < 0 || j > k)
        throw std::out_of_range("BinomialLattice: node index out of range");
    return static_cast<std::size_t>(k) * (k + 1) / 2 + j;
}

BinomialLattice::BinomialLattice(const MarketParams& market, const TimeGrid& grid, double p_up,
                                 const PayoffSpec& payoff)
    : market_(market),
      grid_(grid),
      step_(KsrfStepModel::from_market(market, grid.step(), p_up)),
      payoff_(payoff) {
    market_.validate();
    int n = grid_.n_steps;
    if (n > kMaxSteps) throw std::invalid_argument("BinomialLattice: n_steps exceeds guard");

    std::size_t total = static_cast<std::size_t>(n + 1) * (n + 2) / 2;
    prices_.resize(total);
    values_.resize(total);
    rn_deltas_.assign(total, 0.0);

    double u = step_.up_factor, d = step_.down_factor;
    for (int k = 0; k <= n; ++k)
        for (int j = 0; j <= k; ++j)
            prices_[index(k, j)] = market_.spot * std::pow(u, j) * std::pow(d, k - j);

    for (int j = 0; j <= n; ++j) values_[index(n, j)] = payoff_(prices_[index(n, j)]);

    double q = step_.q(market_.riskless_rate);
    double disc = std::exp(-market_.riskless_rate * grid_.step());
    for (int k = n - 1; k >= 0; --k) {
        for (int j = 0; j <= k; ++j) {
            double fu = values_[index(k + 1, j + 1)];
            double fd = values_[index(k + 1, j)];
            values_[index(k, j)] = disc * (q * fu + (1.0 - q) * fd);
            rn_deltas_[index(k, j)] = (fu - fd) / (prices_[index(k, j)] * (u - d));
        }
    }
}

double delta_one_step(double spot, const KsrfStepModel& model, double f_up, double f_down,
                      const RiskAversion& risk_aversion) {
    if (!(spot > 0.0)) throw std::invalid_argument("delta_one_step: spot must be > 0");
    double u = model.up_factor, d = model.down_factor, p = model.p_up;
    double rn = (f_up - f_down) / (spot * (u - d));
    if (risk_aversion.is_infinite()) return rn;
    double adj = (p * u + (1.0 - p) * d) /
                 (2.0 * risk_aversion.value() * p * (1.0 - p) * spot * (u - d) * (u - d));
    return adj + rn;
}

double delta_at_node(const BinomialLattice& lattice, int k, int j,
                     const RiskAversionSchedule& schedule) {
    if (k < 0 || k >= lattice.grid().n_steps || j < 0 || j > k)
        throw std::out_of_range("delta_at_node: index out of range");
    return psi_eval(schedule, lattice.grid().tau_at(k)) + lattice.rn_delta(k, j);
}

namespace {

struct ChunkAccum {
    std::vector<double> sum_u, sum_u2, sum_tm, sum_ts2;
    double sum_term = 0.0, sum_term2 = 0.0, sum_abs_term = 0.0;
    double sum_cum = 0.0, sum_cum2 = 0.0;
    double max_abs_res = 0.0;
    std::vector<HedgeLedger> kept;

    explicit ChunkAccum(std::size_t n_steps = 0)
        : sum_u(n_steps, 0.0), sum_u2(n_steps, 0.0), sum_tm(n_steps, 0.0), sum_ts2(n_steps, 0.0) {}
};

}  // namespace

HedgeSimResult simulate_hedge(const BinomialLattice& lattice, const RiskAversionSchedule& schedule,
                              std::size_t n_paths, std::uint64_t seed,
                              std::size_t keep_ledgers, unsigned n_threads) {
    if (n_paths < 1) throw std::invalid_argument("simulate_hedge: n_paths must be >= 1");
    const auto& grid = lattice.grid();
    const auto& market = lattice.market();
    const int n = grid.n_steps;
    const double h = grid.step();
    const double sqh = std::sqrt(h);
    const double growth = std::exp(market.riskless_rate * h);
    const double p_up = lattice.step_model().p_up;

    std::vector<double> psi(n);
    for (int k = 0; k < n; ++k) psi[k] = psi_eval(schedule, grid.tau_at(k));

    auto run_chunk = [&](std::size_t, std::size_t begin, std::size_t end) {
        ChunkAccum acc(static_cast<std::size_t>(n));
        for (std::size_t path = begin; path < end; ++path) {
            Rng rng(seed, "binomial.hedge", path);
            bool keep = path < keep_ledgers;
            HedgeLedger ledger;
            if (keep) {
                ledger.t.reserve(n);
                ledger.residual.reserve(n);
            }
            int j = 0;
            double cum = 0.0;
            double last_u = 0.0;
            for (int k = 0; k < n; ++k) {
                double spot = lattice.node_price(k, j);
                double f = lattice.option_value(k, j);
                double delta = psi[k] + lattice.rn_delta(k, j);
                double portfolio = delta * spot - f;

                int j_next = rng.bernoulli(p_up) ? j + 1 : j;
                double spot_next = lattice.node_price(k + 1, j_next);
                double f_next = lattice.option_value(k + 1, j_next);
                double u_res = delta * (spot_next - spot) - (f_next - f) -
                               (growth - 1.0) * portfolio;

                cum = cum * growth + u_res;
                last_u = u_res;
                acc.sum_u[k] += u_res;
                acc.sum_u2[k] += u_res * u_res;
                double tm = psi[k] * (market.drift - market.riskless_rate) * spot * h;
                double ts = psi[k] * market.volatility * spot * sqh;
                acc.sum_tm[k] += tm;
                acc.sum_ts2[k] += ts * ts;
                acc.max_abs_res = std::max(acc.max_abs_res, std::abs(u_res));

                if (keep) {
                    ledger.t.push_back(grid.time_at(k));
                    ledger.tau.push_back(grid.tau_at(k));
                    ledger.spot.push_back(spot);
                    ledger.delta.push_back(delta);
                    ledger.option.push_back(f);
                    ledger.portfolio.push_back(portfolio);
                    ledger.residual.push_back(u_res);
                }
                j = j_next;
            }
            acc.sum_term += last_u;
            acc.sum_term2 += last_u * last_u;
            acc.sum_abs_term += std::abs(last_u);
            acc.sum_cum += cum;
            acc.sum_cum2 += cum * cum;
            if (keep) {
                ledger.terminal_spot = lattice.node_price(n, j);
                ledger.terminal_option = lattice.option_value(n, j);
                ledger.terminal_hedge_error = last_u;
                ledger.cumulative_hedge_error = cum;
                acc.kept.push_back(std::move(ledger));
            }
        }
        return acc;
    };

    auto chunks = detail::parallel_chunks<ChunkAccum>(n_paths, 1024, run_chunk, n_threads);

    HedgeSimResult result;
    result.summary.model = "binomial";
    result.summary.seed = seed;
    result.summary.n_paths = n_paths;
    result.summary.premium = lattice.price();
    result.summary.steps.resize(n);

    ChunkAccum total(static_cast<std::size_t>(n));
    for (auto& c : chunks) {
        for (int k = 0; k < n; ++k) {
            total.sum_u[k] += c.sum_u[k];
            total.sum_u2[k] += c.sum_u2[k];
            total.sum_tm[k] += c.sum_tm[k];
            total.sum_ts2[k] += c.sum_ts2[k];
        }
        total.sum_term += c.sum_term;
        total.sum_term2 += c.sum_term2;
        total.sum_abs_term += c.sum_abs_term;
        total.sum_cum += c.sum_cum;
        total.sum_cum2 += c.sum_cum2;
        total.max_abs_res = std::max(total.max_abs_res, c.max_abs_res);
        for (auto& l : c.kept) result.ledgers.push_back(std::move(l));
    }

    double inv = 1.0 / static_cast<double>(n_paths);
    for (int k = 0; k < n; ++k) {
        auto& s = result.summary.steps[k];
        s.t = grid.time_at(k);
        s.tau = grid.tau_at(k);
        s.residual_mean = total.sum_u[k] * inv;
        double var = std::max(0.0, total.sum_u2[k] * inv - s.residual_mean * s.residual_mean);
        s.residual_std = std::sqrt(var);
        s.theory_mean = total.sum_tm[k] * inv;
        s.theory_std = std::sqrt(total.sum_ts2[k] * inv);
    }
    result.summary.terminal_error_mean = total.sum_term * inv;
    result.summary.terminal_error_rms = std::sqrt(total.sum_term2 * inv);
    result.summary.terminal_abs_error_mean = total.sum_abs_term * inv;
    result.summary.cumulative_error_mean = total.sum_cum * inv;
    result.summary.cumulative_error_rms = std::sqrt(total.sum_cum2 * inv);
    result.summary.max_abs_residual = total.max_abs_res;
    return result;
}

}  // namespace qhedge
