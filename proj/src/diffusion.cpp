#include "qhedge/diffusion.hpp"

#include "qhedge/detail/parallel.hpp"
#include "qhedge/detail/sim_accum.hpp"
#include "qhedge/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace qhedge {

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

/// Integral of f over [a, b] for a piecewise-constant-left schedule.
double schedule_integral(const ParamSchedule& sched, double a, double b,
                         const std::function<double(double)>& f) {
    if (b <= a) return 0.0;
    double total = 0.0;
    const auto& knots = sched.knots();
    for (std::size_t i = 0; i < knots.size(); ++i) {
        double seg_start = std::max(a, knots[i].first);
        double seg_end = (i + 1 < knots.size()) ? std::min(b, knots[i + 1].first) : b;
        if (seg_end > seg_start) total += f(knots[i].second) * (seg_end - seg_start);
    }
    return total;
}

}  // namespace

void DiffusionModel::validate() const {
    if (!(spot > 0.0)) throw std::invalid_argument("DiffusionModel: spot must be > 0");
    std::set<double> times;
    for (const auto& [t, v] : drift.knots()) times.insert(t);
    for (const auto& [t, v] : volatility.knots()) times.insert(t);
    for (const auto& [t, v] : rate.knots()) times.insert(t);
    for (double t : times) {
        if (!(drift(t) > rate(t)) || !(rate(t) > 0.0))
            throw std::invalid_argument("DiffusionModel: require drift > rate > 0 at every knot");
        if (!(volatility(t) > 0.0))
            throw std::invalid_argument("DiffusionModel: volatility must be > 0 at every knot");
    }
}

BsGreeks bs_price(double spot, double strike, double vol, double rate, double tau,
                  PayoffKind kind) {
    if (!(spot > 0.0) || !(strike > 0.0))
        throw std::invalid_argument("bs_price: spot and strike must be > 0");
    if (tau < 0.0) throw std::domain_error("bs_price: tau < 0");
    if (kind == PayoffKind::Custom) throw std::invalid_argument("bs_price: vanilla kinds only");
    bool call = kind == PayoffKind::Call;

    if (tau == 0.0) {
        double value = call ? std::max(spot - strike, 0.0) : std::max(strike - spot, 0.0);
        double delta;
        if (spot == strike) delta = call ? 0.5 : -0.5;
        else if (call) delta = spot > strike ? 1.0 : 0.0;
        else delta = spot < strike ? -1.0 : 0.0;
        return {value, delta, 0.0, 0.0};
    }

    double sqt = std::sqrt(tau);
    double d1 = (std::log(spot / strike) + (rate + 0.5 * vol * vol) * tau) / (vol * sqt);
    double d2 = d1 - vol * sqt;
    double df = std::exp(-rate * tau);
    double gamma = norm_pdf(d1) / (spot * vol * sqt);
    if (call) {
        double value = spot * norm_cdf(d1) - strike * df * norm_cdf(d2);
        double theta = -spot * vol * norm_pdf(d1) / (2.0 * sqt) - rate * strike * df * norm_cdf(d2);
        return {value, norm_cdf(d1), gamma, theta};
    }
    double value = strike * df * norm_cdf(-d2) - spot * norm_cdf(-d1);
    double theta = -spot * vol * norm_pdf(d1) / (2.0 * sqt) + rate * strike * df * norm_cdf(-d2);
    return {value, norm_cdf(d1) - 1.0, gamma, theta};
}

namespace {

class ClosedFormSurface final : public PricingSurface {
public:
    ClosedFormSurface(DiffusionModel model, PayoffSpec payoff, double horizon)
        : model_(std::move(model)), payoff_(std::move(payoff)), horizon_(horizon) {
        if (payoff_.kind == PayoffKind::Custom)
            throw std::invalid_argument("closed_form_surface: vanilla payoffs only");
    }

    SurfaceEval operator()(double spot, double t) const override {
        double tau = horizon_ - t;
        if (tau < 0.0) throw std::domain_error("PricingSurface: t beyond horizon");
        if (tau == 0.0) {
            auto g = bs_price(spot, payoff_.strike, 1.0, 0.01, 0.0, payoff_.kind);
            return {g.value, g.delta, g.gamma, g.theta};
        }
        double var = schedule_integral(model_.volatility, t, horizon_,
                                       [](double s) { return s * s; });
        double rint = schedule_integral(model_.rate, t, horizon_, [](double r) { return r; });
        auto g = bs_price(spot, payoff_.strike, std::sqrt(var / tau), rint / tau, tau,
                          payoff_.kind);
        return {g.value, g.delta, g.gamma, g.theta};
    }

    Method method() const override { return Method::ClosedForm; }
    double horizon() const override { return horizon_; }

private:
    DiffusionModel model_;
    PayoffSpec payoff_;
    double horizon_;
};

class GridSurface final : public PricingSurface {
public:
    GridSurface(const DiffusionModel& model, const PayoffSpec& payoff, double horizon,
                const PdeGridParams& params)
        : horizon_(horizon), n_space_(params.n_space), n_time_(params.n_time) {
        if (n_space_ < 3 || n_time_ < 1)
            throw std::invalid_argument("pde_price_grid: grid too small");
        if (!(params.x_max_mult >= 5.0))
            throw std::invalid_argument("pde_price_grid: x_max must be >= 5 * spot");
        model.validate();
        x_max_ = params.x_max_mult * model.spot;
        dx_ = x_max_ / n_space_;
        dt_ = horizon_ / n_time_;

        slices_.assign(static_cast<std::size_t>(n_time_ + 1) * (n_space_ + 1), 0.0);
        // cell-averaged terminal condition: tames the O(dx^2) error a payoff
        // kink injects when it lands on or near a node
        for (int i = 0; i <= n_space_; ++i) {
            double lo = std::max(i * dx_ - 0.5 * dx_, 0.0);
            double hi = std::min(i * dx_ + 0.5 * dx_, x_max_);
            const int quad = 64;
            double sum = 0.0;
            for (int q = 0; q < quad; ++q)
                sum += payoff(lo + (q + 0.5) * (hi - lo) / quad);
            at(n_time_, i) = sum / quad;
        }

        // backward march, Crank-Nicolson with a Rannacher start (the two
        // steps at maturity fully implicit to damp the payoff kink):
        //   (I - theta dt L) V^j = (I + (1-theta) dt L) V^{j+1}
        std::vector<double> lower(n_space_ + 1), diag(n_space_ + 1), upper(n_space_ + 1),
            rhs(n_space_ + 1), work(n_space_ + 1);
        for (int j = n_time_ - 1; j >= 0; --j) {
            double t = j * dt_;
            double r = model.rate(t);
            double sig = model.volatility(t);
            double theta = j >= n_time_ - 2 ? 1.0 : 0.5;
            for (int i = 1; i < n_space_; ++i) {
                double x = i * dx_;
                double a = 0.5 * sig * sig * x * x / (dx_ * dx_);
                double b = r * x / (2.0 * dx_);
                lower[i] = -theta * dt_ * (a - b);
                diag[i] = 1.0 + theta * dt_ * (2.0 * a + r);
                upper[i] = -theta * dt_ * (a + b);
                double explicit_l = (a - b) * at(j + 1, i - 1) + (a + b) * at(j + 1, i + 1) -
                                    (2.0 * a + r) * at(j + 1, i);
                rhs[i] = at(j + 1, i) + (1.0 - theta) * dt_ * explicit_l;
            }
            // x = 0: pure discounting
            lower[0] = 0.0;
            diag[0] = 1.0 + dt_ * r;
            upper[0] = 0.0;
            rhs[0] = at(j + 1, 0);
            // x = x_max: zero convexity, one-sided first derivative
            double xm = x_max_;
            lower[n_space_] = -dt_ * r * xm / dx_;
            diag[n_space_] = 1.0 + dt_ * r + dt_ * r * xm / dx_;
            upper[n_space_] = 0.0;
            rhs[n_space_] = at(j + 1, n_space_);

            // Thomas solve
            work[0] = upper[0] / diag[0];
            rhs[0] /= diag[0];
            for (int i = 1; i <= n_space_; ++i) {
                double m = diag[i] - lower[i] * work[i - 1];
                work[i] = upper[i] / m;
                rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / m;
            }
            at(j, n_space_) = rhs[n_space_];
            for (int i = n_space_ - 1; i >= 0; --i) at(j, i) = rhs[i] - work[i] * at(j, i + 1);
        }
    }

    SurfaceEval operator()(double spot, double t) const override {
        if (t < 0.0 || t > horizon_ * (1.0 + 1e-12))
            throw std::domain_error("PricingSurface: t outside [0, horizon]");
        double s = std::min(t, horizon_) / dt_;
        int j0 = std::min(static_cast<int>(s), n_time_ - 1);
        double wt = s - j0;
        SurfaceEval a = eval_slice(j0, spot);
        SurfaceEval b = eval_slice(j0 + 1, spot);
        double theta = (slice_value(j0 + 1, spot) - slice_value(j0, spot)) / dt_;
        return {a.value * (1.0 - wt) + b.value * wt, a.delta * (1.0 - wt) + b.delta * wt,
                a.gamma * (1.0 - wt) + b.gamma * wt, theta};
    }

    Method method() const override { return Method::Grid; }
    double horizon() const override { return horizon_; }

private:
    double& at(int j, int i) {
        return slices_[static_cast<std::size_t>(j) * (n_space_ + 1) + i];
    }
    double at(int j, int i) const {
        return slices_[static_cast<std::size_t>(j) * (n_space_ + 1) + i];
    }

    double slice_value(int j, double x) const {
        double s = std::clamp(x, 0.0, x_max_) / dx_;
        int i = std::min(static_cast<int>(s), n_space_ - 1);
        double w = s - i;
        return at(j, i) * (1.0 - w) + at(j, i + 1) * w;
    }

    SurfaceEval eval_slice(int j, double x) const {
        double s = std::clamp(x, 0.0, x_max_) / dx_;
        int i = std::clamp(static_cast<int>(s), 1, n_space_ - 2);
        double w = s - i;
        auto delta_at = [&](int ii) { return (at(j, ii + 1) - at(j, ii - 1)) / (2.0 * dx_); };
        auto gamma_at = [&](int ii) {
            return (at(j, ii + 1) - 2.0 * at(j, ii) + at(j, ii - 1)) / (dx_ * dx_);
        };
        double w1 = std::clamp(w, 0.0, 1.0);
        return {slice_value(j, x), delta_at(i) * (1.0 - w1) + delta_at(i + 1) * w1,
                gamma_at(i) * (1.0 - w1) + gamma_at(i + 1) * w1, 0.0};
    }

    double horizon_;
    int n_space_, n_time_;
    double x_max_, dx_, dt_;
    std::vector<double> slices_;
};

}  // namespace

std::unique_ptr<PricingSurface> closed_form_surface(const DiffusionModel& model,
                                                    const PayoffSpec& payoff, double horizon) {
    model.validate();
    return std::make_unique<ClosedFormSurface>(model, payoff, horizon);
}

std::unique_ptr<PricingSurface> pde_price_grid(const DiffusionModel& model,
                                               const PayoffSpec& payoff, double horizon,
                                               const PdeGridParams& params) {
    return std::make_unique<GridSurface>(model, payoff, horizon, params);
}

double delta_optimal_diffusion(const PricingSurface& surface, const DiffusionModel& model,
                               const RiskAversionSchedule& schedule, double spot, double t) {
    (void)model;
    double tau = surface.horizon() - t;
    return psi_eval(schedule, tau) + surface(spot, t).delta;
}

HedgeSimResult simulate_hedge_diffusion(const DiffusionModel& model,
                                        const PricingSurface& surface,
                                        const RiskAversionSchedule& schedule, const TimeGrid& grid,
                                        std::size_t n_paths, std::uint64_t seed,
                                        std::size_t keep_ledgers, unsigned n_threads) {
    if (n_paths < 1) throw std::invalid_argument("simulate_hedge_diffusion: n_paths must be >= 1");
    model.validate();
    const int n = grid.n_steps;
    const double h = grid.step();
    const double sqh = std::sqrt(h);

    std::vector<double> times(n), taus(n), psi(n);
    for (int k = 0; k < n; ++k) {
        times[k] = grid.time_at(k);
        taus[k] = grid.tau_at(k);
        psi[k] = psi_eval(schedule, taus[k]);
    }

    auto run_chunk = [&](std::size_t, std::size_t begin, std::size_t end) {
        detail::SimAccum acc(static_cast<std::size_t>(n));
        for (std::size_t path = begin; path < end; ++path) {
            Rng rng(seed, "diffusion.hedge", path);
            bool keep = path < keep_ledgers;
            HedgeLedger ledger;
            double spot = model.spot;
            double cum = 0.0, last_u = 0.0;
            for (int k = 0; k < n; ++k) {
                double t = times[k];
                double mu = model.drift(t), sig = model.volatility(t), r = model.rate(t);
                double growth = std::exp(r * h);
                SurfaceEval ev = surface(spot, t);
                double delta = psi[k] + ev.delta;
                double portfolio = delta * spot - ev.value;

                double spot_next = spot * (1.0 + mu * h + sig * sqh * rng.normal());
                spot_next = std::max(spot_next, 1e-12);
                double f_next = surface(spot_next, times[k] + h).value;
                double u_res = delta * (spot_next - spot) - (f_next - ev.value) -
                               (growth - 1.0) * portfolio;

                cum = cum * growth + u_res;
                last_u = u_res;
                acc.add_step(k, u_res, psi[k] * (mu - r) * spot * h, psi[k] * sig * spot * sqh);

                if (keep) {
                    ledger.t.push_back(t);
                    ledger.tau.push_back(taus[k]);
                    ledger.spot.push_back(spot);
                    ledger.delta.push_back(delta);
                    ledger.option.push_back(ev.value);
                    ledger.portfolio.push_back(portfolio);
                    ledger.residual.push_back(u_res);
                }
                spot = spot_next;
            }
            acc.add_terminal(last_u, cum);
            if (keep) {
                ledger.terminal_spot = spot;
                ledger.terminal_option = surface(spot, grid.horizon).value;
                ledger.terminal_hedge_error = last_u;
                ledger.cumulative_hedge_error = cum;
                acc.kept.push_back(std::move(ledger));
            }
        }
        return acc;
    };

    auto chunks = detail::parallel_chunks<detail::SimAccum>(n_paths, 512, run_chunk, n_threads);

    HedgeSimResult result;
    detail::SimAccum total(static_cast<std::size_t>(n));
    for (auto& c : chunks) total.merge(c);
    result.summary.model = "diffusion";
    result.summary.seed = seed;
    result.summary.premium = surface(model.spot, 0.0).value;
    total.finalize(result.summary, n_paths, times, taus);
    result.ledgers = std::move(total.kept);
    return result;
}

}  // namespace qhedge
