// qhedge command-line front end: scenario configs in, CSV/JSON out.
//
// Exit codes: 0 success, 2 config/input validation failure, 3 numerical
// failure, 4 total calibration failure.

#include "CLI11.hpp"

#include "qhedge/binomial.hpp"
#include "qhedge/calibration.hpp"
#include "qhedge/core.hpp"
#include "qhedge/diffusion.hpp"
#include "qhedge/jumpdiff.hpp"
#include "qhedge/multifactor.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;
using namespace qhedge;

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitCalibrationFailed = 4;

/// Validation failure that can name the offending config field.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& field, const std::string& what)
        : std::runtime_error("config field `" + field + "`: " + what) {}
};

/// key=value scenario file; `#` starts a comment, blank lines ignored.
class Config {
public:
    static Config from_file(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw ConfigError("config", "cannot open " + path);
        Config cfg;
        std::string line;
        int line_no = 0;
        while (std::getline(is, line)) {
            ++line_no;
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos) continue;
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config", "line " + std::to_string(line_no) +
                                                " is not key=value: " + line);
            auto trim = [](std::string s) {
                auto b = s.find_first_not_of(" \t\r");
                auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            cfg.kv_[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
        }
        return cfg;
    }

    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    std::string str(const std::string& key) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) throw ConfigError(key, "required key missing");
        return it->second;
    }
    std::string str(const std::string& key, const std::string& fallback) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? fallback : it->second;
    }

    double num(const std::string& key) const { return parse_num(key, str(key)); }
    double num(const std::string& key, double fallback) const {
        return has(key) ? num(key) : fallback;
    }
    int integer(const std::string& key) const { return static_cast<int>(num(key)); }
    int integer(const std::string& key, int fallback) const {
        return has(key) ? integer(key) : fallback;
    }

    std::vector<double> num_list(const std::string& key) const {
        std::vector<double> out;
        std::istringstream ss(str(key));
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(parse_num(key, item));
        if (out.empty()) throw ConfigError(key, "empty list");
        return out;
    }

private:
    static double parse_num(const std::string& key, const std::string& value) {
        try {
            std::size_t pos = 0;
            double v = std::stod(value, &pos);
            if (pos != value.size()) throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception&) {
            throw ConfigError(key, "not a number: " + value);
        }
    }

    std::map<std::string, std::string> kv_;
};

/// Re-raises engine validation exceptions naming a config field.
template <typename Fn>
auto named(const std::string& field, Fn fn) {
    try {
        return fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(field, e.what());
    }
}

PayoffSpec make_payoff(const Config& cfg) {
    std::string kind = cfg.str("payoff", "call");
    double strike = cfg.num("strike");
    if (!(strike > 0.0)) throw ConfigError("strike", "must be > 0");
    if (kind == "call") return PayoffSpec::call(strike);
    if (kind == "put") return PayoffSpec::put(strike);
    throw ConfigError("payoff", "expected call or put, got " + kind);
}

TimeGrid make_grid(const Config& cfg) {
    return named("maturity_years", [&] {
        return TimeGrid(cfg.integer("n_steps"), cfg.num("maturity_years"));
    });
}

RiskAversionSchedule make_schedule(const Config& cfg, double horizon) {
    std::string family = cfg.str("psi_family", "zero");
    if (family == "zero") return RiskAversionSchedule::zero(horizon);
    if (family == "exponential")
        return named("gamma", [&] {
            return RiskAversionSchedule::exponential(cfg.num("gamma"), horizon);
        });
    if (family == "delayed")
        return named("gamma", [&] {
            return RiskAversionSchedule::delayed(cfg.num("delay_years"), cfg.num("gamma"),
                                                 horizon);
        });
    throw ConfigError("psi_family", "expected zero, exponential or delayed, got " + family);
}

MarketParams make_market(const Config& cfg) {
    MarketParams m{cfg.num("drift_per_year"), cfg.num("volatility_per_sqrt_year"),
                   cfg.num("rate_per_year"), cfg.num("spot")};
    named("volatility_per_sqrt_year", [&] {
        m.validate();
        return 0;
    });
    return m;
}

StateFn make_state_fn(const Config& cfg, const std::string& key) {
    std::string kind = cfg.str(key, "sqrt");
    if (kind == "sqrt") return StateFn::sqrt();
    if (kind == "log") return StateFn::log();
    if (kind == "power")
        return named(key + "_exponent",
                     [&] { return StateFn::power(cfg.num(key + "_exponent")); });
    throw ConfigError(key, "expected sqrt, power or log, got " + kind);
}

SvModel make_sv_model(const Config& cfg) {
    SvModel m{cfg.num("drift_per_year"),
              cfg.num("vol_drift_per_year"),
              cfg.num("vol_vol_per_sqrt_year"),
              cfg.num("rate_per_year"),
              cfg.num("rho"),
              make_state_fn(cfg, "state_fn"),
              cfg.num("spot"),
              cfg.num("vol_state0")};
    named("rho", [&] {
        m.validate();
        return 0;
    });
    return m;
}

VovModel make_vov_model(const Config& cfg) {
    VovModel m{cfg.num("drift_per_year"),
               cfg.num("vol_drift_per_year"),
               cfg.num("vov_drift_per_year"),
               cfg.num("vov_vol_per_sqrt_year"),
               cfg.num("rate_per_year"),
               cfg.num("rho"),
               cfg.num("rho_w"),
               cfg.num("rho_vw"),
               make_state_fn(cfg, "state_fn"),
               make_state_fn(cfg, "g_fn"),
               cfg.num("spot"),
               cfg.num("vol_state0"),
               cfg.num("vov_state0")};
    named("rho", [&] {
        m.validate();
        return 0;
    });
    return m;
}

JumpModel make_jump_model(const Config& cfg, double horizon) {
    JumpModel m{cfg.num("drift_per_year"),
                cfg.num("drift2_per_year"),
                cfg.num("volatility_per_sqrt_year"),
                cfg.num("volatility2_per_sqrt_year"),
                cfg.num("jump_size1"),
                cfg.num("jump_size2"),
                cfg.num("intensity_per_year"),
                cfg.num("rate_per_year"),
                cfg.num("spot"),
                cfg.num("spot2"),
                cfg.num("maturity2_years")};
    named("jump_size1", [&] {
        m.validate(horizon);
        return 0;
    });
    return m;
}

McPriceModel make_mc_params(const Config& cfg, std::uint64_t seed) {
    McPriceModel p;
    p.n_paths = static_cast<std::size_t>(cfg.integer("mc_paths", 20000));
    p.n_steps = cfg.integer("mc_steps", 64);
    p.seed = seed;
    return p;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << content;
}

struct CommonFlags {
    std::string config_path;
    std::string out_dir = ".";
    std::string model;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
};

std::uint64_t pick_seed(const Config& cfg, const CommonFlags& flags) {
    if (flags.seed) return *flags.seed;
    return static_cast<std::uint64_t>(cfg.num("seed", 1));
}

std::size_t pick_paths(const Config& cfg, const CommonFlags& flags, std::size_t fallback) {
    if (flags.paths) return *flags.paths;
    return static_cast<std::size_t>(cfg.num("n_paths", static_cast<double>(fallback)));
}

std::string pick_model(const Config& cfg, const CommonFlags& flags) {
    std::string m = flags.model.empty() ? cfg.str("model", "") : flags.model;
    if (m.empty()) throw ConfigError("model", "required key missing");
    if (m != "binomial" && m != "diffusion" && m != "sv" && m != "vov" && m != "jump")
        throw ConfigError("model", "unknown model " + m);
    return m;
}

std::unique_ptr<PricingSurface> make_surface(const Config& cfg, const DiffusionModel& model,
                                             const PayoffSpec& payoff, double horizon) {
    std::string method = cfg.str("method", "closed_form");
    if (method == "closed_form") return closed_form_surface(model, payoff, horizon);
    if (method == "grid") {
        PdeGridParams p;
        p.n_space = cfg.integer("grid_n_space", p.n_space);
        p.n_time = cfg.integer("grid_n_time", p.n_time);
        return pde_price_grid(model, payoff, horizon, p);
    }
    throw ConfigError("method", "expected closed_form or grid, got " + method);
}

int cmd_price(const CommonFlags& flags) {
    Config cfg = Config::from_file(flags.config_path);
    std::string model = pick_model(cfg, flags);
    std::uint64_t seed = pick_seed(cfg, flags);
    TimeGrid grid = make_grid(cfg);
    PayoffSpec payoff = make_payoff(cfg);

    json table;
    table["model"] = model;
    if (model == "binomial") {
        MarketParams market = make_market(cfg);
        double p_up = cfg.has("p_up") ? cfg.num("p_up") : crr_probability(market, grid.step());
        auto lattice = named("p_up", [&] { return build_lattice(market, grid, p_up, payoff); });
        table["value"] = lattice.price();
        table["delta"] = lattice.rn_delta(0, 0);
        table["p_up"] = p_up;
    } else if (model == "diffusion") {
        DiffusionModel dmodel{cfg.num("drift_per_year"), cfg.num("volatility_per_sqrt_year"),
                              cfg.num("rate_per_year"), cfg.num("spot")};
        named("volatility_per_sqrt_year", [&] {
            dmodel.validate();
            return 0;
        });
        auto surface = make_surface(cfg, dmodel, payoff, grid.horizon);
        SurfaceEval eval = (*surface)(dmodel.spot, 0.0);
        table["value"] = eval.value;
        table["delta"] = eval.delta;
        table["gamma"] = eval.gamma;
        table["theta"] = eval.theta;
    } else if (model == "sv") {
        SvModel svm = make_sv_model(cfg);
        auto p = mc_price_and_partials(svm, payoff, make_mc_params(cfg, seed), svm.spot,
                                       svm.vol_state0, 0.0, grid.horizon);
        table["value"] = p.value;
        table["delta"] = p.d_spot;
        table["d_vol"] = p.d_vol;
        table["std_err"] = p.std_err;
    } else if (model == "vov") {
        VovModel vm = make_vov_model(cfg);
        auto p = mc_price_and_partials(vm, payoff, make_mc_params(cfg, seed), vm.spot,
                                       vm.vol_state0, vm.vov_state0, 0.0, grid.horizon);
        table["value"] = p.value;
        table["delta"] = p.d_spot;
        table["d_vol"] = p.d_vol;
        table["d_vov"] = p.d_vov;
        table["std_err"] = p.std_err;
    } else {  // jump
        JumpModel jm = make_jump_model(cfg, grid.horizon);
        auto terminal = [payoff](double s1, double) { return payoff(s1); };
        auto p = jump_price(jm, terminal, make_mc_params(cfg, seed), jm.spot1, jm.spot2, 0.0,
                            grid.horizon);
        table["value"] = p.value;
        table["delta"] = p.d1;
        table["delta2"] = p.d2;
        table["jumped_value"] = p.jumped;
        table["std_err"] = p.std_err;
    }

    write_file(flags.out_dir + "/price.json", table.dump(2) + "\n");
    for (auto& [key, value] : table.items())
        if (value.is_number()) std::printf("%-14s %.10g\n", key.c_str(), value.get<double>());
    return 0;
}

int cmd_hedge(const CommonFlags& flags) {
    Config cfg = Config::from_file(flags.config_path);
    std::string model = pick_model(cfg, flags);
    std::uint64_t seed = pick_seed(cfg, flags);
    std::size_t n_paths = pick_paths(cfg, flags, 10000);
    TimeGrid grid = make_grid(cfg);
    PayoffSpec payoff = make_payoff(cfg);
    RiskAversionSchedule schedule = make_schedule(cfg, grid.horizon);

    HedgeSimResult result;
    if (model == "binomial") {
        MarketParams market = make_market(cfg);
        double p_up = cfg.has("p_up") ? cfg.num("p_up") : crr_probability(market, grid.step());
        auto lattice = named("p_up", [&] { return build_lattice(market, grid, p_up, payoff); });
        result = simulate_hedge(lattice, schedule, n_paths, seed);
    } else if (model == "diffusion") {
        DiffusionModel dmodel{cfg.num("drift_per_year"), cfg.num("volatility_per_sqrt_year"),
                              cfg.num("rate_per_year"), cfg.num("spot")};
        named("volatility_per_sqrt_year", [&] {
            dmodel.validate();
            return 0;
        });
        auto surface = make_surface(cfg, dmodel, payoff, grid.horizon);
        result = simulate_hedge_diffusion(dmodel, *surface, schedule, grid, n_paths, seed);
    } else if (model == "sv") {
        SvModel svm = make_sv_model(cfg);
        auto claim = make_mc_claim(svm, payoff, make_mc_params(cfg, seed + 1), grid.horizon);
        result = simulate_hedge_sv(svm, claim, schedule, grid, n_paths, seed);
    } else if (model == "vov") {
        VovModel vm = make_vov_model(cfg);
        auto claim = make_mc_claim(vm, payoff, make_mc_params(cfg, seed + 1), grid.horizon);
        result = simulate_hedge_vov(vm, claim, schedule, grid, n_paths, seed);
    } else {  // jump
        JumpModel jm = make_jump_model(cfg, grid.horizon);
        auto terminal = [payoff](double s1, double) { return payoff(s1); };
        auto claim = make_mc_claim(jm, terminal, make_mc_params(cfg, seed + 1), grid.horizon);
        result = simulate_hedge_jump(jm, claim, schedule, grid, n_paths, seed);
    }

    write_file(flags.out_dir + "/summary.json", result.summary.to_json() + "\n");
    std::ofstream ledger(flags.out_dir + "/ledger.csv", std::ios::binary);
    if (!ledger) throw std::runtime_error("cannot write ledger.csv");
    write_ledgers_csv(ledger, result.ledgers);

    std::printf("model          %s\n", result.summary.model.c_str());
    std::printf("premium        %.10g\n", result.summary.premium);
    std::printf("terminal_rms   %.10g\n", result.summary.terminal_error_rms);
    std::printf("cumulative_rms %.10g\n", result.summary.cumulative_error_rms);
    std::printf("max_residual   %.10g\n", result.summary.max_abs_residual);
    return 0;
}

CalibOptions make_calib_options(const Config& cfg, const CommonFlags& flags) {
    CalibOptions opts;
    opts.gamma_init = cfg.num("gamma_initial", opts.gamma_init);
    opts.tol_gamma = cfg.num("tol_gamma", opts.tol_gamma);
    opts.max_iter = cfg.integer("max_iter", opts.max_iter);
    opts.damping = cfg.num("damping", opts.damping);
    opts.rate = cfg.num("rate_per_year", opts.rate);
    opts.n_paths = pick_paths(cfg, flags, opts.n_paths);
    opts.seed = pick_seed(cfg, flags);
    return opts;
}

PriceSeries load_series(const Config& cfg) {
    std::string path = cfg.str("data_csv");
    std::ifstream is(path);
    if (!is) throw ConfigError("data_csv", "cannot open " + path);
    try {
        return PriceSeries::from_csv(is);
    } catch (const std::exception& e) {
        throw ConfigError("data_csv", e.what());
    }
}

int cmd_calibrate(const CommonFlags& flags) {
    Config cfg = Config::from_file(flags.config_path);
    PriceSeries series = load_series(cfg);
    CalibOptions opts = make_calib_options(cfg, flags);

    int days = cfg.integer("maturity_days");
    if (days < 1) throw ConfigError("maturity_days", "must be >= 1");
    TimeGrid grid(days, days / kTradingDaysPerYear);

    double strike;
    if (cfg.has("strike")) {
        strike = cfg.num("strike");
    } else {
        double m = cfg.num("moneyness", 1.0);
        if (!(m > 0.0)) throw ConfigError("moneyness", "must be > 0");
        strike = series.close.back() / m;
    }
    // estimation preconditions count as input validation
    named("data_csv", [&] { return estimate_ph(series); });

    CalibrationResult result = calibrate_gamma(series, PayoffSpec::call(strike), grid, opts);
    write_file(flags.out_dir + "/calibration.json", result.to_json() + "\n");
    std::printf("gamma      %.10g\n", result.gamma);
    std::printf("converged  %s\n", result.converged ? "true" : "false");
    std::printf("iterations %zu\n", result.iterations.size());
    return 0;
}

int cmd_surface(const CommonFlags& flags) {
    Config cfg = Config::from_file(flags.config_path);
    std::string type = cfg.str("surface", "gamma");

    SurfaceGrid grid;
    if (type == "psi") {
        double horizon_days = cfg.num("horizon_days");
        grid = named("horizon_days", [&] {
            return psi_surface(cfg.num_list("gamma_grid"), cfg.num_list("tau_days_grid"),
                               horizon_days / kTradingDaysPerYear);
        });
    } else if (type == "gamma") {
        PriceSeries series = load_series(cfg);
        named("data_csv", [&] { return estimate_ph(series); });
        CalibOptions opts = make_calib_options(cfg, flags);
        grid = gamma_surface(series, cfg.num_list("moneyness_grid"),
                             cfg.num_list("maturity_days_grid"), opts);
    } else {
        throw ConfigError("surface", "expected gamma or psi, got " + type);
    }

    std::ostringstream os;
    write_surface_csv(os, grid);
    write_file(flags.out_dir + "/surface.csv", os.str());
    for (const auto& entry : grid.log) std::fprintf(stderr, "note: %s\n", entry.c_str());

    bool any_finite = false;
    for (const auto& row : grid.cells)
        for (double v : row)
            if (std::isfinite(v)) any_finite = true;
    if (!any_finite) {
        std::fprintf(stderr, "error: every surface cell failed\n");
        return kExitCalibrationFailed;
    }
    std::printf("cells      %zu\n", grid.axis1.size() * grid.axis2.size());
    return 0;
}

int dispatch(int (*cmd)(const CommonFlags&), const CommonFlags& flags) {
    // configuration and input validation failures exit 2; anything raised
    // once the engines are running counts as a numerical failure, exit 3
    try {
        return cmd(flags);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerical;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mean-variance option hedging toolkit"};
    app.require_subcommand(1);

    CommonFlags flags;
    int (*selected)(const CommonFlags&) = nullptr;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", flags.config_path, "scenario config file (key=value)")
            ->required();
        sub->add_option("--out", flags.out_dir, "output directory");
        sub->add_option("--model", flags.model, "engine: binomial|diffusion|sv|vov|jump");
        sub->add_option_function<std::uint64_t>(
            "--seed", [&](std::uint64_t s) { flags.seed = s; }, "top-level RNG seed");
        sub->add_option_function<std::size_t>(
            "--paths", [&](std::size_t p) { flags.paths = p; }, "simulation path count");
    };

    auto* price = app.add_subcommand("price", "value a claim and print partials");
    add_common(price);
    price->callback([&] { selected = cmd_price; });

    auto* hedge = app.add_subcommand("hedge", "simulate a hedging strategy");
    add_common(hedge);
    hedge->callback([&] { selected = cmd_hedge; });

    auto* calibrate = app.add_subcommand("calibrate", "fit the intensity to a price series");
    add_common(calibrate);
    calibrate->callback([&] { selected = cmd_calibrate; });

    auto* surface = app.add_subcommand("surface", "gamma or psi surface grid");
    add_common(surface);
    surface->callback([&] { selected = cmd_surface; });

    CLI11_PARSE(app, argc, argv);
    return dispatch(selected, flags);
}
