#include "qhedge/multifactor.hpp"

#include "qhedge/detail/parallel.hpp"
#include "qhedge/detail/sim_accum.hpp"
#include "qhedge/rng.hpp"

#include <cmath>

namespace qhedge {

namespace {

constexpr double kRhoGuard = 0.999;
constexpr double kDetGuard = 1e-6;

double det3(const std::array<std::array<double, 3>, 3>& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

void check_rho(double rho) {
    if (!(std::abs(rho) <= kRhoGuard))
        throw std::invalid_argument("near-singular correlation");
}

}  // namespace

StateFn StateFn::power(double a) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("StateFn: exponent must be in (0,1)");
    return {Kind::Power, a};
}

StateFn StateFn::log() { return {Kind::Log, 0.0}; }

double StateFn::operator()(double x) const {
    if (!(x > 0.0)) throw std::domain_error("StateFn: state must be > 0");
    switch (kind) {
        case Kind::Sqrt:
            return std::sqrt(x);
        case Kind::Power:
            return std::pow(x, exponent);
        case Kind::Log:
            if (!(x > 1.0)) throw std::domain_error("StateFn: log map requires state > 1");
            return std::log(x);
    }
    throw std::logic_error("StateFn: unknown kind");
}

void SvModel::validate() const {
    check_rho(rho);
    if (!(spot > 0.0) || !(vol_state0 > 0.0))
        throw std::invalid_argument("SvModel: spot and vol_state0 must be > 0");
    if (!rate.all_satisfy([](double r) { return r > 0.0; }))
        throw std::invalid_argument("SvModel: rate must be > 0");
    if (!vol_vol.all_satisfy([](double b) { return b > 0.0; }))
        throw std::invalid_argument("SvModel: vol_vol must be > 0");
}

void VovModel::validate() const {
    check_rho(rho_v);
    check_rho(rho_w);
    check_rho(rho_vw);
    if (!(spot > 0.0) || !(vol_state0 > 0.0) || !(vov_state0 > 0.0))
        throw std::invalid_argument("VovModel: states must be > 0");
    if (!rate.all_satisfy([](double r) { return r > 0.0; }))
        throw std::invalid_argument("VovModel: rate must be > 0");
    if (!vov_vol.all_satisfy([](double d) { return d > 0.0; }))
        throw std::invalid_argument("VovModel: vov_vol must be > 0");
    auto corr = correlation();
    if (!(det3(corr) > kDetGuard) || !(1.0 - rho_v * rho_v > 0.0))
        throw std::invalid_argument("near-singular correlation");
}

std::array<std::array<double, 3>, 3> VovModel::correlation() const {
    return {{{1.0, rho_v, rho_w}, {rho_v, 1.0, rho_vw}, {rho_w, rho_vw, 1.0}}};
}

Holdings2 sv_holdings(const SvModel& model, double dC_dx, double dC_dy, double spot,
                      double vol_state, const RiskAversion& risk_aversion, double t) {
    model.validate();
    if (!(spot > 0.0) || !(vol_state > 0.0))
        throw std::invalid_argument("sv_holdings: state must be > 0");
    if (risk_aversion.is_infinite()) return {dC_dx, dC_dy};

    double mu = model.drift(t), alpha = model.vol_drift(t), beta = model.vol_vol(t);
    double hv = model.h_fn(vol_state);
    double rho = model.rho;
    double one_m = 1.0 - rho * rho;
    double w = risk_aversion.half_inverse();  // 1/(2R)
    double a = dC_dx + w / one_m * (mu / (hv * hv * spot) - rho * alpha / (beta * hv * spot));
    double b = dC_dy + w / one_m * (alpha / (beta * beta * vol_state) -
                                    rho * mu / (hv * beta * vol_state));
    return {a, b};
}

double sv_risk_premium(const SvModel& model, double vol_state,
                       const RiskAversion& risk_aversion, double t) {
    model.validate();
    if (risk_aversion.is_infinite()) return 0.0;
    double mu = model.drift(t), alpha = model.vol_drift(t), beta = model.vol_vol(t);
    double hv = model.h_fn(vol_state);
    double rho = model.rho;
    return risk_aversion.half_inverse() / (1.0 - rho * rho) *
           (mu / (hv * hv) + alpha / (beta * beta) - rho * (mu + alpha) / (hv * beta));
}

double sv_tilt_drift(const SvModel& model, double vol_state, const RiskAversion& risk_aversion,
                     double t) {
    model.validate();
    if (risk_aversion.is_infinite()) return 0.0;
    double mu = model.drift(t), alpha = model.vol_drift(t), beta = model.vol_vol(t);
    double hv = model.h_fn(vol_state);
    double rho = model.rho;
    return risk_aversion.half_inverse() / (1.0 - rho * rho) *
           (mu * mu / (hv * hv) + alpha * alpha / (beta * beta) -
            2.0 * rho * mu * alpha / (hv * beta));
}

VovDeterminants vov_determinants(const VovModel& model, double vol_state, double vov_state,
                                 double t, const VovDeterminantOptions& options) {
    model.validate();
    double m1 = model.drift(t) / model.h_fn(vol_state);
    double m2 = model.vol_drift(t) / model.g_fn(vov_state);
    double m3 = model.vov_drift(t) / model.vov_vol(t);

    auto corr = model.correlation();
    double d = det3(corr);
    if (!(d > kDetGuard)) throw std::invalid_argument("near-singular correlation");

    auto with_column = [&](int col, double c1, double c2, double c3) {
        auto m = corr;
        m[0][col] = c1;
        m[1][col] = c2;
        m[2][col] = c3;
        return det3(m);
    };

    double dc_top = options.literal_dc ? (1.0 - options.relative_risk_aversion) * m1 : m1;
    return {d, with_column(0, m1, m2, m3), with_column(1, m1, m2, m3),
            with_column(2, dc_top, m2, m3)};
}

Holdings3 vov_holdings(const VovModel& model, double dC_dx, double dC_dy, double dC_dz,
                       double spot, double vol_state, double vov_state,
                       const RiskAversion& risk_aversion, double t) {
    if (!(spot > 0.0) || !(vol_state > 0.0) || !(vov_state > 0.0))
        throw std::invalid_argument("vov_holdings: states must be > 0");
    if (risk_aversion.is_infinite()) {
        model.validate();
        return {dC_dx, dC_dy, dC_dz};
    }
    auto det = vov_determinants(model, vol_state, vov_state, t);
    double w = risk_aversion.half_inverse();
    double a = dC_dx + w / (model.h_fn(vol_state) * spot) * det.d_a / det.d;
    double b = dC_dy + w / (model.g_fn(vov_state) * vol_state) * det.d_b / det.d;
    double c = dC_dz + w / (model.vov_vol(t) * vov_state) * det.d_c / det.d;
    return {a, b, c};
}

namespace {

struct McAccum {
    double sum = 0.0, sum2 = 0.0;
    double sum_su = 0.0, sum_sd = 0.0;  // spot bumps
    double sum_vu = 0.0, sum_vd = 0.0;  // vol bumps
    double sum_wu = 0.0, sum_wd = 0.0;  // vov bumps
};

}  // namespace

McPrice mc_price_and_partials(const SvModel& model, const PayoffSpec& payoff,
                              const McPriceModel& pricing, double spot, double vol_state,
                              double t, double horizon) {
    model.validate();
    double tau = horizon - t;
    if (tau < 0.0) throw std::domain_error("mc_price_and_partials: t beyond horizon");
    if (tau == 0.0) {
        double g = payoff(spot);
        return {g, 0.0, 0.0, 0.0, 0.0};
    }
    int n = pricing.n_steps;
    double dt = tau / n;
    double sq = std::sqrt(dt);
    double rho = model.rho;
    double rho_c = std::sqrt(1.0 - rho * rho);
    double bs = pricing.bump_rel_spot, bv = pricing.bump_rel_vol;

    auto run_chunk = [&](std::size_t, std::size_t begin, std::size_t end) {
        McAccum acc;
        for (std::size_t path = begin; path < end; ++path) {
            Rng rng(pricing.seed, "mc.sv", path);
            // common random numbers across the five bumped starts
            double ls[5] = {std::log(spot), std::log(spot * (1.0 + bs)),
                            std::log(spot * (1.0 - bs)), std::log(spot), std::log(spot)};
            double lv[5] = {std::log(vol_state), std::log(vol_state), std::log(vol_state),
                            std::log(vol_state * (1.0 + bv)), std::log(vol_state * (1.0 - bv))};
            double disc = 0.0;
            for (int i = 0; i < n; ++i) {
                double ts = t + i * dt;
                double r = model.rate(ts);
                double beta = model.vol_vol(ts);
                double z1 = rng.normal(), z2 = rng.normal();
                double zs = z1, zv = rho * z1 + rho_c * z2;
                disc += r * dt;
                for (int m = 0; m < 5; ++m) {
                    double hv = model.h_fn(std::exp(lv[m]));
                    ls[m] += (r - 0.5 * hv * hv) * dt + hv * sq * zs;
                    lv[m] += (r - 0.5 * beta * beta) * dt + beta * sq * zv;
                }
            }
            double df = std::exp(-disc);
            double p0 = df * payoff(std::exp(ls[0]));
            acc.sum += p0;
            acc.sum2 += p0 * p0;
            acc.sum_su += df * payoff(std::exp(ls[1]));
            acc.sum_sd += df * payoff(std::exp(ls[2]));
            acc.sum_vu += df * payoff(std::exp(ls[3]));
            acc.sum_vd += df * payoff(std::exp(ls[4]));
        }
        return acc;
    };

    auto chunks = detail::parallel_chunks<McAccum>(pricing.n_paths, 4096, run_chunk);
    McAccum total;
    for (auto& c : chunks) {
        total.sum += c.sum;
        total.sum2 += c.sum2;
        total.sum_su += c.sum_su;
        total.sum_sd += c.sum_sd;
        total.sum_vu += c.sum_vu;
        total.sum_vd += c.sum_vd;
    }
    double inv = 1.0 / static_cast<double>(pricing.n_paths);
    double value = total.sum * inv;
    double var = std::max(0.0, total.sum2 * inv - value * value);
    return {value, (total.sum_su - total.sum_sd) * inv / (2.0 * spot * bs),
            (total.sum_vu - total.sum_vd) * inv / (2.0 * vol_state * bv), 0.0,
            std::sqrt(var * inv)};
}

McPrice mc_price_and_partials(const VovModel& model, const PayoffSpec& payoff,
                              const McPriceModel& pricing, double spot, double vol_state,
                              double vov_state, double t, double horizon) {
    model.validate();
    double tau = horizon - t;
    if (tau < 0.0) throw std::domain_error("mc_price_and_partials: t beyond horizon");
    if (tau == 0.0) {
        double g = payoff(spot);
        return {g, 0.0, 0.0, 0.0, 0.0};
    }
    int n = pricing.n_steps;
    double dt = tau / n;
    double sq = std::sqrt(dt);
    // Cholesky factor of the 3x3 correlation matrix
    double l21 = model.rho_v, l22 = std::sqrt(1.0 - l21 * l21);
    double l31 = model.rho_w, l32 = (model.rho_vw - model.rho_v * model.rho_w) / l22;
    double l33s = 1.0 - l31 * l31 - l32 * l32;
    if (!(l33s > 0.0)) throw std::invalid_argument("near-singular correlation");
    double l33 = std::sqrt(l33s);
    double bs = pricing.bump_rel_spot, bv = pricing.bump_rel_vol, bw = pricing.bump_rel_vov;

    auto run_chunk = [&](std::size_t, std::size_t begin, std::size_t end) {
        McAccum acc;
        for (std::size_t path = begin; path < end; ++path) {
            Rng rng(pricing.seed, "mc.vov", path);
            double ls[7], lv[7], lw[7];
            for (int m = 0; m < 7; ++m) {
                ls[m] = std::log(spot);
                lv[m] = std::log(vol_state);
                lw[m] = std::log(vov_state);
            }
            ls[1] = std::log(spot * (1.0 + bs));
            ls[2] = std::log(spot * (1.0 - bs));
            lv[3] = std::log(vol_state * (1.0 + bv));
            lv[4] = std::log(vol_state * (1.0 - bv));
            lw[5] = std::log(vov_state * (1.0 + bw));
            lw[6] = std::log(vov_state * (1.0 - bw));
            double disc = 0.0;
            for (int i = 0; i < n; ++i) {
                double ts = t + i * dt;
                double r = model.rate(ts);
                double delta = model.vov_vol(ts);
                double z1 = rng.normal(), z2 = rng.normal(), z3 = rng.normal();
                double zs = z1;
                double zv = l21 * z1 + l22 * z2;
                double zw = l31 * z1 + l32 * z2 + l33 * z3;
                disc += r * dt;
                for (int m = 0; m < 7; ++m) {
                    double hv = model.h_fn(std::exp(lv[m]));
                    double gw = model.g_fn(std::exp(lw[m]));
                    ls[m] += (r - 0.5 * hv * hv) * dt + hv * sq * zs;
                    lv[m] += (r - 0.5 * gw * gw) * dt + gw * sq * zv;
                    lw[m] += (r - 0.5 * delta * delta) * dt + delta * sq * zw;
                }
            }
            double df = std::exp(-disc);
            double p0 = df * payoff(std::exp(ls[0]));
            acc.sum += p0;
            acc.sum2 += p0 * p0;
            acc.sum_su += df * payoff(std::exp(ls[1]));
            acc.sum_sd += df * payoff(std::exp(ls[2]));
            acc.sum_vu += df * payoff(std::exp(ls[3]));
            acc.sum_vd += df * payoff(std::exp(ls[4]));
            acc.sum_wu += df * payoff(std::exp(ls[5]));
            acc.sum_wd += df * payoff(std::exp(ls[6]));
        }
        return acc;
    };

    auto chunks = detail::parallel_chunks<McAccum>(pricing.n_paths, 4096, run_chunk);
    McAccum total;
    for (auto& c : chunks) {
        total.sum += c.sum;
        total.sum2 += c.sum2;
        total.sum_su += c.sum_su;
        total.sum_sd += c.sum_sd;
        total.sum_vu += c.sum_vu;
        total.sum_vd += c.sum_vd;
        total.sum_wu += c.sum_wu;
        total.sum_wd += c.sum_wd;
    }
    double inv = 1.0 / static_cast<double>(pricing.n_paths);
    double value = total.sum * inv;
    double var = std::max(0.0, total.sum2 * inv - value * value);
    return {value, (total.sum_su - total.sum_sd) * inv / (2.0 * spot * bs),
            (total.sum_vu - total.sum_vd) * inv / (2.0 * vol_state * bv),
            (total.sum_wu - total.sum_wd) * inv / (2.0 * vov_state * bw), std::sqrt(var * inv)};
}

SvClaimFn make_mc_claim(const SvModel& model, const PayoffSpec& payoff,
                        const McPriceModel& pricing, double horizon) {
    return [=](double spot, double vol_state, double t) {
        auto p = mc_price_and_partials(model, payoff, pricing, spot, vol_state, t, horizon);
        return ClaimEval2{p.value, p.d_spot, p.d_vol};
    };
}

VovClaimFn make_mc_claim(const VovModel& model, const PayoffSpec& payoff,
                         const McPriceModel& pricing, double horizon) {
    return [=](double spot, double vol_state, double vov_state, double t) {
        auto p = mc_price_and_partials(model, payoff, pricing, spot, vol_state, vov_state, t,
                                       horizon);
        return ClaimEval3{p.value, p.d_spot, p.d_vol, p.d_vov};
    };
}

HedgeSimResult simulate_hedge_sv(const SvModel& model, const SvClaimFn& claim,
                                 const RiskAversionSchedule& schedule, const TimeGrid& grid,
                                 std::size_t n_paths, std::uint64_t seed,
                                 std::size_t keep_ledgers, unsigned n_threads) {
    if (n_paths < 1) throw std::invalid_argument("simulate_hedge_sv: n_paths must be >= 1");
    model.validate();
    const int n = grid.n_steps;
    const double h = grid.step();
    const double sq = std::sqrt(h);
    const double rho = model.rho;
    const double rho_c = std::sqrt(1.0 - rho * rho);

    std::vector<double> times(n), taus(n), psi(n);
    for (int k = 0; k < n; ++k) {
        times[k] = grid.time_at(k);
        taus[k] = grid.tau_at(k);
        psi[k] = psi_eval(schedule, taus[k]);
    }

    auto run_chunk = [&](std::size_t, std::size_t begin, std::size_t end) {
        detail::SimAccum acc(static_cast<std::size_t>(n));
        for (std::size_t path = begin; path < end; ++path) {
            Rng rng(seed, "sv.hedge", path);
            bool keep = path < keep_ledgers;
            HedgeLedger ledger;
            double spot = model.spot, vol = model.vol_state0;
            double cum = 0.0, last_u = 0.0;
            for (int k = 0; k < n; ++k) {
                double t = times[k];
                double mu = model.drift(t), alpha = model.vol_drift(t), beta = model.vol_vol(t);
                double r = model.rate(t);
                double growth = std::exp(r * h);
                double hv = model.h_fn(vol);
                ClaimEval2 c = claim(spot, vol, t);
                // psi -> R via the asset leg, sigma_eff = h(v)
                RiskAversion ra = risk_aversion_from_psi(psi[k], spot, mu, hv);
                Holdings2 pos = sv_holdings(model, c.d_spot, c.d_vol, spot, vol, ra, t);
                double portfolio = pos.a * spot + pos.b * vol - c.value;

                double z1 = rng.normal(), z2 = rng.normal();
                double zs = z1, zv = rho * z1 + rho_c * z2;
                double spot_next = spot * std::exp((mu - 0.5 * hv * hv) * h + hv * sq * zs);
                double vol_next = vol * std::exp((alpha - 0.5 * beta * beta) * h + beta * sq * zv);
                ClaimEval2 c_next = claim(spot_next, vol_next, times[k] + h);

                double u_res = pos.a * (spot_next - spot) + pos.b * (vol_next - vol) -
                               (c_next.value - c.value) - (growth - 1.0) * portfolio;
                cum = cum * growth + u_res;
                last_u = u_res;

                double ta = pos.a - c.d_spot, tb = pos.b - c.d_vol;
                double e1 = ta * hv * spot, e2 = tb * beta * vol;
                double tm = (ta * spot * (mu - r) + tb * vol * (alpha - r)) * h;
                double ts = std::sqrt(std::max(0.0, e1 * e1 + e2 * e2 + 2.0 * rho * e1 * e2)) * sq;
                acc.add_step(k, u_res, tm, ts);

                if (keep) {
                    ledger.t.push_back(t);
                    ledger.tau.push_back(taus[k]);
                    ledger.spot.push_back(spot);
                    ledger.delta.push_back(pos.a);
                    ledger.option.push_back(c.value);
                    ledger.portfolio.push_back(portfolio);
                    ledger.residual.push_back(u_res);
                    ledger.vol_state.push_back(vol);
                    ledger.b_holding.push_back(pos.b);
                }
                spot = spot_next;
                vol = vol_next;
            }
            acc.add_terminal(last_u, cum);
            if (keep) {
                ledger.terminal_spot = spot;
                ledger.terminal_hedge_error = last_u;
                ledger.cumulative_hedge_error = cum;
                acc.kept.push_back(std::move(ledger));
            }
        }
        return acc;
    };

    auto chunks = detail::parallel_chunks<detail::SimAccum>(n_paths, 256, run_chunk, n_threads);
    HedgeSimResult result;
    detail::SimAccum total(static_cast<std::size_t>(n));
    for (auto& c : chunks) total.merge(c);
    result.summary.model = "sv";
    result.summary.seed = seed;
    result.summary.premium = claim(model.spot, model.vol_state0, 0.0).value;
    total.finalize(result.summary, n_paths, times, taus);
    result.ledgers = std::move(total.kept);
    return result;
}

HedgeSimResult simulate_hedge_vov(const VovModel& model, const VovClaimFn& claim,
                                  const RiskAversionSchedule& schedule, const TimeGrid& grid,
                                  std::size_t n_paths, std::uint64_t seed,
                                  std::size_t keep_ledgers, unsigned n_threads) {
    if (n_paths < 1) throw std::invalid_argument("simulate_hedge_vov: n_paths must be >= 1");
    model.validate();
    const int n = grid.n_steps;
    const double h = grid.step();
    const double sq = std::sqrt(h);
    double l21 = model.rho_v, l22 = std::sqrt(1.0 - l21 * l21);
    double l31 = model.rho_w, l32 = (model.rho_vw - model.rho_v * model.rho_w) / l22;
    double l33 = std::sqrt(1.0 - l31 * l31 - l32 * l32);

    std::vector<double> times(n), taus(n), psi(n);
    for (int k = 0; k < n; ++k) {
        times[k] = grid.time_at(k);
        taus[k] = grid.tau_at(k);
        psi[k] = psi_eval(schedule, taus[k]);
    }

    auto run_chunk = [&](std::size_t, std::size_t begin, std::size_t end) {
        detail::SimAccum acc(static_cast<std::size_t>(n));
        for (std::size_t path = begin; path < end; ++path) {
            Rng rng(seed, "vov.hedge", path);
            bool keep = path < keep_ledgers;
            HedgeLedger ledger;
            double spot = model.spot, vol = model.vol_state0, vov = model.vov_state0;
            double cum = 0.0, last_u = 0.0;
            for (int k = 0; k < n; ++k) {
                double t = times[k];
                double mu = model.drift(t), alpha = model.vol_drift(t);
                double gam = model.vov_drift(t), del = model.vov_vol(t);
                double r = model.rate(t);
                double growth = std::exp(r * h);
                double hv = model.h_fn(vol), gw = model.g_fn(vov);
                ClaimEval3 c = claim(spot, vol, vov, t);
                RiskAversion ra = risk_aversion_from_psi(psi[k], spot, mu, hv);
                Holdings3 pos =
                    vov_holdings(model, c.d_spot, c.d_vol, c.d_vov, spot, vol, vov, ra, t);
                double portfolio = pos.a * spot + pos.b * vol + pos.c * vov - c.value;

                double z1 = rng.normal(), z2 = rng.normal(), z3 = rng.normal();
                double zs = z1, zv = l21 * z1 + l22 * z2, zw = l31 * z1 + l32 * z2 + l33 * z3;
                double spot_next = spot * std::exp((mu - 0.5 * hv * hv) * h + hv * sq * zs);
                double vol_next = vol * std::exp((alpha - 0.5 * gw * gw) * h + gw * sq * zv);
                double vov_next = vov * std::exp((gam - 0.5 * del * del) * h + del * sq * zw);
                ClaimEval3 c_next = claim(spot_next, vol_next, vov_next, times[k] + h);

                double u_res = pos.a * (spot_next - spot) + pos.b * (vol_next - vol) +
                               pos.c * (vov_next - vov) - (c_next.value - c.value) -
                               (growth - 1.0) * portfolio;
                cum = cum * growth + u_res;
                last_u = u_res;

                double ta = pos.a - c.d_spot, tb = pos.b - c.d_vol, tc = pos.c - c.d_vov;
                double e1 = ta * hv * spot, e2 = tb * gw * vol, e3 = tc * del * vov;
                double tm =
                    (ta * spot * (mu - r) + tb * vol * (alpha - r) + tc * vov * (gam - r)) * h;
                double var = e1 * e1 + e2 * e2 + e3 * e3 + 2.0 * model.rho_v * e1 * e2 +
                             2.0 * model.rho_w * e1 * e3 + 2.0 * model.rho_vw * e2 * e3;
                acc.add_step(k, u_res, tm, std::sqrt(std::max(0.0, var)) * sq);

                if (keep) {
                    ledger.t.push_back(t);
                    ledger.tau.push_back(taus[k]);
                    ledger.spot.push_back(spot);
                    ledger.delta.push_back(pos.a);
                    ledger.option.push_back(c.value);
                    ledger.portfolio.push_back(portfolio);
                    ledger.residual.push_back(u_res);
                    ledger.vol_state.push_back(vol);
                    ledger.b_holding.push_back(pos.b);
                    ledger.vov_state.push_back(vov);
                    ledger.c_holding.push_back(pos.c);
                }
                spot = spot_next;
                vol = vol_next;
                vov = vov_next;
            }
            acc.add_terminal(last_u, cum);
            if (keep) {
                ledger.terminal_spot = spot;
                ledger.terminal_hedge_error = last_u;
                ledger.cumulative_hedge_error = cum;
                acc.kept.push_back(std::move(ledger));
            }
        }
        return acc;
    };

    auto chunks = detail::parallel_chunks<detail::SimAccum>(n_paths, 256, run_chunk, n_threads);
    HedgeSimResult result;
    detail::SimAccum total(static_cast<std::size_t>(n));
    for (auto& c : chunks) total.merge(c);
    result.summary.model = "vov";
    result.summary.seed = seed;
    result.summary.premium = claim(model.spot, model.vol_state0, model.vov_state0, 0.0).value;
    total.finalize(result.summary, n_paths, times, taus);
    result.ledgers = std::move(total.kept);
    return result;
}

}  // namespace qhedge
