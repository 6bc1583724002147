#include "qhedge/calibration.hpp"

#include "qhedge/detail/parallel.hpp"
#include "qhedge/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace qhedge {

namespace {

constexpr std::size_t kMinObservations = 30;
constexpr std::size_t kMinResiduals = 100;

}  // namespace

PriceSeries PriceSeries::from_csv(std::istream& is) {
    PriceSeries series;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string date, close_str;
        if (!std::getline(ls, date, ',') || !std::getline(ls, close_str, ','))
            throw std::invalid_argument("PriceSeries: malformed CSV line: " + line);
        if (first && close_str.find_first_not_of("0123456789.eE+-") != std::string::npos) {
            first = false;  // header row
            continue;
        }
        first = false;
        series.dates.push_back(date);
        series.close.push_back(std::stod(close_str));
    }
    series.validate();
    return series;
}

void PriceSeries::validate() const {
    if (dates.size() != close.size())
        throw std::invalid_argument("PriceSeries: date/price length mismatch");
    for (std::size_t i = 0; i < close.size(); ++i) {
        if (!(close[i] > 0.0)) throw std::invalid_argument("PriceSeries: prices must be > 0");
        if (i > 0 && !(dates[i] > dates[i - 1]))
            throw std::invalid_argument("PriceSeries: dates must be strictly increasing");
    }
}

std::vector<double> PriceSeries::log_returns() const {
    std::vector<double> r;
    r.reserve(close.size() > 0 ? close.size() - 1 : 0);
    for (std::size_t i = 1; i < close.size(); ++i) r.push_back(std::log(close[i] / close[i - 1]));
    return r;
}

PhEstimate estimate_ph(const PriceSeries& series) {
    series.validate();
    if (series.close.size() < kMinObservations)
        throw std::invalid_argument("estimate_ph: need at least 30 observations");
    auto rets = series.log_returns();
    std::size_t up = 0;
    double sum = 0.0, sum2 = 0.0;
    for (double r : rets) {
        if (r > 0.0) ++up;
        sum += r;
        sum2 += r * r;
    }
    double n = static_cast<double>(rets.size());
    double mean = sum / n;
    double var = (sum2 - n * mean * mean) / (n - 1.0);
    if (!(var > 0.0)) throw std::invalid_argument("estimate_ph: zero-variance series");
    double p_hat = static_cast<double>(up) / n;
    if (!(p_hat > 0.0 && p_hat < 1.0))
        throw std::invalid_argument("degenerate up-probability");
    return {p_hat, mean * kTradingDaysPerYear, std::sqrt(var * kTradingDaysPerYear)};
}

NormalFit fit_residual_normal(const std::vector<double>& residuals) {
    if (residuals.size() < kMinResiduals)
        throw std::invalid_argument("fit_residual_normal: need at least 100 samples");
    double sum = 0.0;
    for (double u : residuals) sum += u;
    double mean = sum / static_cast<double>(residuals.size());
    double ss = 0.0;
    for (double u : residuals) ss += (u - mean) * (u - mean);
    return {mean, std::sqrt(ss / static_cast<double>(residuals.size()))};
}

namespace {

/// Option value and rn delta at an off-lattice spot, linear in spot across
/// the level-k nodes (clamped at the edges).
void interp_node(const BinomialLattice& lattice, int k, double spot, bool want_delta,
                 double& value, double& rn_delta) {
    int lo = 0, hi = k;
    if (spot <= lattice.node_price(k, 0)) {
        value = lattice.option_value(k, 0);
        if (want_delta) rn_delta = lattice.rn_delta(k, 0);
        return;
    }
    if (spot >= lattice.node_price(k, k)) {
        value = lattice.option_value(k, k);
        if (want_delta) rn_delta = lattice.rn_delta(k, k);
        return;
    }
    while (hi - lo > 1) {
        int mid = (lo + hi) / 2;
        if (lattice.node_price(k, mid) <= spot) lo = mid; else hi = mid;
    }
    double s0 = lattice.node_price(k, lo), s1 = lattice.node_price(k, hi);
    double w = (spot - s0) / (s1 - s0);
    value = (1.0 - w) * lattice.option_value(k, lo) + w * lattice.option_value(k, hi);
    if (want_delta) rn_delta = (1.0 - w) * lattice.rn_delta(k, lo) + w * lattice.rn_delta(k, hi);
}

struct EmpAccum {
    // per-step residual samples, their tilt components (residual in excess
    // of the matched riskless hedge on the same path) and squared spots
    std::vector<std::vector<double>> residuals;
    std::vector<std::vector<double>> tilts;
    std::vector<double> sum_s2;

    explicit EmpAccum(std::size_t n = 0) : residuals(n), tilts(n), sum_s2(n, 0.0) {}

    void merge(EmpAccum& o) {
        for (std::size_t k = 0; k < residuals.size(); ++k) {
            residuals[k].insert(residuals[k].end(), o.residuals[k].begin(),
                                o.residuals[k].end());
            tilts[k].insert(tilts[k].end(), o.tilts[k].begin(), o.tilts[k].end());
            sum_s2[k] += o.sum_s2[k];
        }
    }
};

/// Hedge simulation along bootstrap-resampled empirical returns, marking the
/// book to the lattice by interpolation.
EmpAccum simulate_empirical(const BinomialLattice& lattice, const RiskAversionSchedule& schedule,
                            const std::vector<double>& returns, double rate,
                            std::size_t n_paths, std::uint64_t seed, unsigned n_threads) {
    const auto& grid = lattice.grid();
    const int n = grid.n_steps;
    const double h = grid.step();
    const double growth = std::exp(rate * h);
    std::vector<double> psi(n);
    for (int k = 0; k < n; ++k) psi[k] = psi_eval(schedule, grid.tau_at(k));

    auto run_chunk = [&](std::size_t, std::size_t begin, std::size_t end) {
        EmpAccum acc(static_cast<std::size_t>(n));
        for (std::size_t path = begin; path < end; ++path) {
            Rng rng(seed, "calibration.bootstrap", path);
            double spot = lattice.market().spot;
            double value, rn;
            interp_node(lattice, 0, spot, true, value, rn);
            for (int k = 0; k < n; ++k) {
                double delta = psi[k] + rn;
                double portfolio = delta * spot - value;
                double ret = returns[rng.next_u64() % returns.size()];
                double spot_next = spot * std::exp(ret);
                double value_next, rn_next = 0.0;
                interp_node(lattice, k + 1, spot_next, k + 1 < n, value_next, rn_next);
                double u = delta * (spot_next - spot) - (value_next - value) -
                           (growth - 1.0) * portfolio;
                // tilt component: what the psi overlay earns on this path in
                // excess of the riskless hedge, free of interpolation noise
                double tilt = psi[k] * ((spot_next - spot) - (growth - 1.0) * spot);
                acc.residuals[static_cast<std::size_t>(k)].push_back(u);
                acc.tilts[static_cast<std::size_t>(k)].push_back(tilt);
                acc.sum_s2[static_cast<std::size_t>(k)] += spot * spot;
                spot = spot_next;
                value = value_next;
                rn = rn_next;
            }
        }
        return acc;
    };

    auto chunks = detail::parallel_chunks<EmpAccum>(n_paths, 1024, run_chunk, n_threads);
    EmpAccum total(static_cast<std::size_t>(n));
    for (auto& c : chunks) total.merge(c);
    return total;
}

/// Least-squares fit of gamma in psi(tau) = gamma (1 - e^{-gamma tau / T})
/// to an implied psi curve; coarse scan plus ternary refinement.
double fit_gamma_ls(const std::vector<double>& taus, const std::vector<double>& psis,
                    double horizon, double lo, double hi) {
    auto sse = [&](double g) {
        double s = 0.0;
        for (std::size_t i = 0; i < taus.size(); ++i) {
            double m = g * (1.0 - std::exp(-g * taus[i] / horizon));
            s += (psis[i] - m) * (psis[i] - m);
        }
        return s;
    };
    const int scan = 200;
    double best = lo, best_sse = sse(lo);
    for (int i = 1; i <= scan; ++i) {
        double g = lo + (hi - lo) * i / scan;
        double v = sse(g);
        if (v < best_sse) {
            best_sse = v;
            best = g;
        }
    }
    double a = std::max(lo, best - (hi - lo) / scan);
    double b = std::min(hi, best + (hi - lo) / scan);
    for (int it = 0; it < 60; ++it) {
        double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
        if (sse(m1) < sse(m2)) b = m2; else a = m1;
    }
    return 0.5 * (a + b);
}

}  // namespace

CalibrationResult calibrate_gamma(const PriceSeries& series, const PayoffSpec& payoff,
                                  const TimeGrid& grid, const CalibOptions& options) {
    PhEstimate est = estimate_ph(series);
    if (!(est.mu_hat > 0.0))
        throw std::invalid_argument("calibrate_gamma: estimated drift must be > 0");
    // keep the estimated market arbitrage-consistent: r strictly below mu
    double rate = std::min(options.rate, 0.5 * est.mu_hat);
    if (!(rate > 0.0)) rate = 0.5 * est.mu_hat;

    MarketParams market{est.mu_hat, est.sigma_hat, rate, series.close.back()};
    BinomialLattice lattice(market, grid, est.p_hat, payoff);
    auto returns = series.log_returns();

    const int n = grid.n_steps;
    const double h = grid.step();
    CalibrationResult result;
    for (int k = 0; k < n; ++k) result.tau_grid.push_back(grid.tau_at(k));

    double gamma = std::clamp(options.gamma_init, options.gamma_min, options.gamma_max);
    for (int iter = 0; iter < options.max_iter; ++iter) {
        RiskAversionSchedule schedule =
            gamma > 0.0 ? RiskAversionSchedule::exponential(gamma, grid.horizon)
                        : RiskAversionSchedule::zero(grid.horizon);
        EmpAccum sim = simulate_empirical(lattice, schedule, returns, rate, options.n_paths,
                                          hash_combine(options.seed, static_cast<std::uint64_t>(iter)),
                                          options.n_threads);

        std::vector<double> psis(n);
        double mean_acc = 0.0, std2_acc = 0.0;
        bool any_positive = false;
        for (int k = 0; k < n; ++k) {
            NormalFit fit = fit_residual_normal(sim.residuals[static_cast<std::size_t>(k)]);
            NormalFit tilt = fit_residual_normal(sim.tilts[static_cast<std::size_t>(k)]);
            double rms_s = std::sqrt(sim.sum_s2[static_cast<std::size_t>(k)] /
                                     static_cast<double>(options.n_paths));
            // invert the residual-std law on the tilt component so the
            // off-lattice marking noise does not inflate the implied psi
            psis[static_cast<std::size_t>(k)] =
                tilt.std / (est.sigma_hat * rms_s * std::sqrt(h));
            if (psis[static_cast<std::size_t>(k)] > 1e-12) any_positive = true;
            mean_acc += fit.mean;
            std2_acc += fit.std * fit.std;
        }
        double fit_mean = mean_acc / n;
        double fit_std = std::sqrt(std2_acc / n);

        double gamma_end;
        if (!any_positive) {
            gamma_end = 0.0;  // degenerate fixed point: no residual risk
        } else {
            gamma_end = fit_gamma_ls(result.tau_grid, psis, grid.horizon, options.gamma_min,
                                     options.gamma_max);
        }
        result.iterations.push_back({gamma, gamma_end, fit_mean, fit_std});
        result.psi_at_grid = std::move(psis);

        if (std::abs(gamma_end - gamma) <= options.tol_gamma) {
            result.gamma = gamma_end;
            result.converged = true;
            return result;
        }
        gamma = std::clamp(gamma + options.damping * (gamma_end - gamma), options.gamma_min,
                           options.gamma_max);
    }
    result.gamma = gamma;
    result.converged = false;
    return result;
}

std::string CalibrationResult::to_json() const {
    nlohmann::json j;
    j["gamma"] = gamma;
    j["converged"] = converged;
    j["iterations"] = nlohmann::json::array();
    for (const auto& it : iterations)
        j["iterations"].push_back({{"gamma_initial", it.gamma_initial},
                                   {"gamma_end", it.gamma_end},
                                   {"fit_mean", it.fit_mean},
                                   {"fit_std", it.fit_std}});
    j["tau_grid"] = tau_grid;
    j["psi_at_grid"] = psi_at_grid;
    return j.dump(2);
}

SurfaceGrid gamma_surface(const PriceSeries& series, const std::vector<double>& moneyness,
                          const std::vector<double>& maturity_days,
                          const CalibOptions& options) {
    if (moneyness.empty() || maturity_days.empty())
        throw std::invalid_argument("gamma_surface: empty axis");
    for (std::size_t i = 1; i < moneyness.size(); ++i)
        if (!(moneyness[i] > moneyness[i - 1]))
            throw std::invalid_argument("gamma_surface: moneyness must be strictly increasing");
    for (std::size_t i = 1; i < maturity_days.size(); ++i)
        if (!(maturity_days[i] > maturity_days[i - 1]))
            throw std::invalid_argument("gamma_surface: maturities must be strictly increasing");
    series.validate();

    SurfaceGrid grid;
    grid.axis1_name = "moneyness";
    grid.axis2_name = "maturity_days";
    grid.axis1 = moneyness;
    grid.axis2 = maturity_days;
    grid.cells.assign(moneyness.size(),
                      std::vector<double>(maturity_days.size(),
                                          std::numeric_limits<double>::quiet_NaN()));
    std::vector<std::string> logs(moneyness.size() * maturity_days.size());

    double spot = series.close.back();
    std::size_t n_cells = moneyness.size() * maturity_days.size();

    auto run_chunk = [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t cell = begin; cell < end; ++cell) {
            std::size_t i = cell / maturity_days.size();
            std::size_t j = cell % maturity_days.size();
            try {
                int days = static_cast<int>(std::lround(maturity_days[j]));
                TimeGrid cell_grid(days, days / kTradingDaysPerYear);
                CalibOptions cell_opts = options;
                cell_opts.seed = hash_combine(options.seed, cell);
                cell_opts.n_threads = 1;  // cells already run in parallel
                auto result = calibrate_gamma(series, PayoffSpec::call(spot / moneyness[i]),
                                              cell_grid, cell_opts);
                grid.cells[i][j] = result.gamma;
                if (!result.converged)
                    logs[cell] = "cell (" + std::to_string(moneyness[i]) + ", " +
                                 std::to_string(maturity_days[j]) + "): not converged after " +
                                 std::to_string(options.max_iter) + " iterations";
            } catch (const std::exception& e) {
                logs[cell] = "cell (" + std::to_string(moneyness[i]) + ", " +
                             std::to_string(maturity_days[j]) + "): " + e.what();
            }
        }
        return 0;
    };
    detail::parallel_chunks<int>(n_cells, 1, run_chunk, options.n_threads);

    for (auto& entry : logs)
        if (!entry.empty()) grid.log.push_back(std::move(entry));

    // soft shape check: gamma non-decreasing in moneyness per maturity row
    for (std::size_t j = 0; j < maturity_days.size(); ++j)
        for (std::size_t i = 1; i < moneyness.size(); ++i)
            if (grid.cells[i][j] + 1e-9 < grid.cells[i - 1][j])
                grid.log.push_back("moneyness monotonicity violated at maturity " +
                                   std::to_string(maturity_days[j]));
    return grid;
}

SurfaceGrid psi_surface(const std::vector<double>& gammas, const std::vector<double>& tau_days,
                        double horizon_years) {
    if (gammas.empty() || tau_days.empty())
        throw std::invalid_argument("psi_surface: empty axis");
    SurfaceGrid grid;
    grid.axis1_name = "gamma";
    grid.axis2_name = "tau_days";
    grid.axis1 = gammas;
    grid.axis2 = tau_days;
    grid.cells.assign(gammas.size(), std::vector<double>(tau_days.size(), 0.0));
    for (std::size_t i = 0; i < gammas.size(); ++i) {
        auto schedule = RiskAversionSchedule::exponential(gammas[i], horizon_years);
        for (std::size_t j = 0; j < tau_days.size(); ++j)
            grid.cells[i][j] = psi_eval(schedule, tau_days[j] / kTradingDaysPerYear);
    }
    return grid;
}

void write_surface_csv(std::ostream& os, const SurfaceGrid& grid) {
    os << grid.axis1_name << ',' << grid.axis2_name << ",value\n";
    char buf[80];
    for (std::size_t i = 0; i < grid.axis1.size(); ++i)
        for (std::size_t j = 0; j < grid.axis2.size(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g\n", grid.axis1[i], grid.axis2[j],
                          grid.cells[i][j]);
            os << buf;
        }
}

}  // namespace qhedge
