// qotto: spectra, ideal and finite-time Otto cycles, and phase diagrams from a config file

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "qotto/config.hpp"
#include "qotto/csv.hpp"
#include "qotto/otto_finite.hpp"
#include "qotto/spectrum.hpp"
#include "qotto/sweep.hpp"

using namespace qotto;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kFailedPoints = 1, kUsage = 2, kOutput = 3, kRuntime = 4 };

struct RunOptions {
    std::string config_path;
    std::string out_dir = ".";
    int workers = 1;
    bool force = false;
    std::vector<std::string> overrides;
    std::string command_line;
};

Config load_config(const RunOptions& opt) {
    Config cfg;
    if (!opt.config_path.empty()) {
        std::ifstream in(opt.config_path);
        if (!in) throw ConfigError("cannot read config file " + opt.config_path);
        std::stringstream ss;
        ss << in.rdbuf();
        cfg = Config::parse(ss.str(), opt.config_path);
    }
    for (const auto& s : opt.overrides) cfg.apply_override(s);
    return cfg;
}

std::string output_name(const Config& cfg, const std::string& fallback) {
    return cfg.has("output", "name") ? cfg.text("output", "name") : fallback;
}

std::string meta_text(const std::string& subcommand, const RunOptions& opt, const Config& cfg,
                      const std::vector<std::pair<std::string, std::string>>& extra) {
    std::ostringstream os;
    os << "# qotto " << kVersion << "\n";
    os << "# subcommand = " << subcommand << "\n";
    os << "# command = " << opt.command_line << "\n";
    os << "# config_file = " << (opt.config_path.empty() ? "(none)" : opt.config_path) << "\n";
    for (const auto& s : opt.overrides) os << "# override = " << s << "\n";
    os << "# workers = " << opt.workers << "\n";
    for (const auto& [k, v] : extra) os << "# " << k << " = " << v << "\n";
    os << "# effective configuration follows; it can be fed back with --config\n";
    os << cfg.render();
    return os.str();
}

// Fails before any computation when a target exists and --force is absent.
void preflight(const RunOptions& opt, const std::string& file) {
    if (opt.force) return;
    fs::path path = fs::path(opt.out_dir) / file;
    fs::path meta = path;
    meta += ".meta";
    for (const auto& p : {path, meta}) {
        if (fs::exists(p)) throw OutputError(p.string() + " exists (use --force to overwrite)");
    }
}

void write(const CsvTable& table, const RunOptions& opt, const std::string& file, const std::string& meta) {
    const fs::path path = fs::path(opt.out_dir) / file;
    emit_csv(table, path, meta, opt.force);
    std::printf("wrote %s (%zu rows)\n", path.string().c_str(), table.rows.size());
}

// ---------------------------------- tables ------------------------------------

std::vector<std::string> input_columns() {
    return {"omega_h", "omega_c", "delta_h", "delta_c", "u", "lambda1", "lambda2", "T_h", "T_c"};
}

std::vector<std::string> input_fields(const PointInputs& in) {
    return {format_double(in.hot.omega), format_double(in.cold.omega), format_double(in.hot.delta),
            format_double(in.cold.delta), format_double(in.hot.u), format_double(in.hot.lambda1),
            format_double(in.hot.lambda2), format_double(in.t_hot), format_double(in.t_cold)};
}

CsvTable sweep_table(const SweepSpec& spec, const std::vector<SweepRow>& rows) {
    CsvTable t;
    t.header = input_columns();
    switch (spec.mode) {
        case SweepMode::spectrum:
            t.header.push_back("E0");
            for (int k = 1; k < spec.n_levels; ++k) t.header.push_back("dE" + std::to_string(k));
            for (int k = 0; k < spec.n_levels; ++k) t.header.push_back("parity" + std::to_string(k));
            break;
        case SweepMode::ideal_cycle:
            for (const char* c : {"Q_h", "Q_c", "W", "eta", "cop", "regime", "W_normalized", "pairing_ambiguous"})
                t.header.push_back(c);
            break;
        case SweepMode::finite_cycle:
            for (const char* c : {"tau_ad", "tau_th", "W", "eta", "P", "Sigma", "W_fric_comp", "W_fric_exp",
                                  "tur_bound", "cycles_to_limit", "Q_h", "Q_c", "fidelity", "regime",
                                  "friction_overflow"})
                t.header.push_back(c);
            break;
    }
    t.header.push_back("status");
    t.header.push_back("message");

    for (const auto& r : rows) {
        auto f = input_fields(r.inputs);
        const std::size_t n_out = t.header.size() - f.size() - 2;
        if (r.spectrum) {
            f.push_back(format_double(r.spectrum->ground_energy));
            for (int k = 1; k < spec.n_levels; ++k) f.push_back(format_double(r.spectrum->relative_energies(k)));
            for (int p : r.spectrum->parities) f.push_back(std::to_string(p));
        } else if (r.ideal) {
            const auto& x = *r.ideal;
            for (auto s : {format_double(x.q_hot), format_double(x.q_cold), format_double(x.work),
                           format_optional(x.efficiency), format_optional(x.cop), std::string(to_string(x.regime)),
                           format_double(x.normalized_work), std::string(x.pairing_ambiguous ? "1" : "0")})
                f.push_back(s);
        } else if (r.finite) {
            const auto& x = *r.finite;
            for (auto s : {format_double(r.inputs.tau_adiabatic), format_double(r.inputs.tau_thermal),
                           format_double(x.work), format_optional(x.efficiency), format_double(x.power),
                           format_double(x.entropy_production), format_double(x.friction_work_compression),
                           format_double(x.friction_work_expansion), format_optional(x.tur_bound),
                           std::to_string(x.cycles_to_limit), format_double(x.q_hot), format_double(x.q_cold),
                           format_double(x.fidelity_to_previous), std::string(to_string(x.regime)),
                           std::string(x.friction_overflow ? "1" : "0")})
                f.push_back(s);
        } else {
            f.resize(f.size() + n_out);
            if (spec.mode == SweepMode::finite_cycle) {
                f[input_columns().size()] = format_double(r.inputs.tau_adiabatic);
                f[input_columns().size() + 1] = format_double(r.inputs.tau_thermal);
            }
        }
        f.push_back(to_string(r.status));
        f.push_back(r.message);
        t.add_row(std::move(f));
    }
    return t;
}

std::vector<std::pair<std::string, std::string>> sweep_meta(const SweepSpec& spec,
                                                            const std::vector<SweepRow>& rows) {
    std::string axes;
    for (const auto& a : spec.axes) {
        axes += (axes.empty() ? "" : ",") + std::string(to_string(a.axis)) + "[" + format_double(a.start) + ":" +
                format_double(a.stop) + ":" + std::to_string(a.count) + "]";
    }
    return {{"mode", to_string(spec.mode)},
            {"axes", axes.empty() ? "(single point)" : axes},
            {"row_order", "row-major, last axis fastest"},
            {"points", std::to_string(rows.size())},
            {"failed_points", std::to_string(failed_points(rows))},
            {"n_max", std::to_string(spec.n_max)},
            {"truncation_tolerance", format_double(spec.solve.tolerance)},
            {"limit_cycle_tolerance", format_double(spec.limit_cycle_tolerance)},
            {"regime_zero", format_double(kRegimeZero)},
            {"degeneracy_threshold", format_double(kDegeneracyThreshold)},
            {"channel_degeneracy", format_double(kChannelDegeneracy)}};
}

int report_failures(const std::vector<SweepRow>& rows) {
    const auto failed = failed_points(rows);
    if (failed == 0) return kOk;
    std::fprintf(stderr, "%zu of %zu points failed\n", failed, rows.size());
    for (const auto& r : rows) {
        if (r.status != PointStatus::ok) {
            std::fprintf(stderr, "  first failure [%s]: %s\n", to_string(r.status), r.message.c_str());
            break;
        }
    }
    return kFailedPoints;
}

// -------------------------------- subcommands ---------------------------------

int cmd_spectrum(const RunOptions& opt) {
    const Config cfg = load_config(opt);
    cfg.require({{"spectrum", "axis"}, {"spectrum", "range"}});
    const auto axis_name = cfg.text("spectrum", "axis");
    ScanAxis axis;
    if (axis_name == "lambda1") axis = ScanAxis::lambda1;
    else if (axis_name == "lambda2") axis = ScanAxis::lambda2;
    else if (axis_name == "u") axis = ScanAxis::u;
    else cfg.fail("spectrum", "axis", "expected lambda1, lambda2 or u");
    const auto r = cfg.range("spectrum", "range");
    const auto grid = linspace(r.start, r.stop, r.count);
    preflight(opt, output_name(cfg, "spectrum") + ".csv");

    SystemParams base;
    base.omega = cfg.number("spectrum", "omega");
    base.delta = base.omega + cfg.number("system", "detuning");
    base.u = cfg.number("system", "u");
    base.lambda1 = cfg.number("system", "lambda1");
    base.lambda2 = cfg.number("system", "lambda2");
    base.n_max = cfg.integer("system", "n_max");
    const int n_levels = cfg.integer("spectrum", "n_levels");

    SpectrumScanOptions so;
    so.workers = opt.workers;
    so.solve = solve_from(cfg);
    if (cfg.has("system", "ratio")) {
        const bool target_ok = (axis == ScanAxis::lambda1 && cfg.text("system", "ratio_target") == "lambda2") ||
                               (axis == ScanAxis::lambda2 && cfg.text("system", "ratio_target") == "lambda1");
        if (!target_ok) cfg.fail("system", "ratio", "ratio lock must target the coupling that is not scanned");
        so.ratio = cfg.number("system", "ratio");
    }
    const auto rows = spectrum_scan(base, axis, grid, n_levels, so);

    CsvTable t;
    t.header = {"axis_value", "level_index", "energy_minus_E0", "parity", "crossing_flag"};
    for (const auto& row : rows) {
        for (int k = 0; k < n_levels; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            t.add_row({format_double(row.axis_value), std::to_string(k), format_double(row.relative_energies(k)),
                       std::to_string(row.parities[ku]), row.crossing[ku] ? "1" : "0"});
        }
    }
    std::string flips;
    for (double x : ground_parity_flips(rows)) flips += (flips.empty() ? "" : ",") + format_double(x);
    std::vector<std::pair<std::string, std::string>> extra = {
        {"axis", axis_name},
        {"ground_parity_flips", flips.empty() ? "(none)" : flips},
        {"crossing_gap", format_double(kCrossingGap)},
        {"n_max", std::to_string(base.n_max)}};
    const double r21 = base.lambda1 != 0.0 ? base.lambda2 / base.lambda1 : 0.0;
    const double ratio = so.ratio ? *so.ratio : r21;
    if (axis == ScanAxis::lambda1 && base.omega == 1.0) {
        if (auto c = first_order_critical_coupling(base.delta, base.u, ratio)) {
            extra.push_back({"first_order_critical_lambda1", format_double(*c)});
        }
    }
    write(t, opt, output_name(cfg, "spectrum") + ".csv", meta_text("spectrum", opt, cfg, extra));
    if (!flips.empty()) std::printf("ground-state parity flips at %s = %s\n", axis_name.c_str(), flips.c_str());
    return kOk;
}

int cmd_sweep(const RunOptions& opt, const std::string& subcommand) {
    Config cfg = load_config(opt);
    std::vector<std::pair<std::string, std::string>> required = {{"system", "omega_h"}, {"system", "omega_c"},
                                                                 {"bath", "T_h"},       {"bath", "T_c"}};
    if (subcommand == "phase-diagram") {
        required.push_back({"sweep", "axis1"});
        required.push_back({"sweep", "range1"});
    }
    cfg.require(required);
    if (subcommand == "finite-cycle") {
        if (cfg.given("sweep", "mode") && cfg.text("sweep", "mode") != "finite_cycle") {
            cfg.fail("sweep", "mode", "finite-cycle runs mode finite_cycle");
        }
        cfg.apply_override("sweep.mode=finite_cycle");
    }
    if (subcommand == "ideal-cycle") cfg.apply_override("sweep.mode=ideal_cycle");

    SweepSpec spec = sweep_spec_from(cfg, subcommand != "ideal-cycle");
    spec.workers = opt.workers;
    const std::string stem = output_name(cfg, subcommand == "phase-diagram" ? "phase_diagram"
                                              : subcommand == "ideal-cycle" ? "ideal_cycle"
                                                                            : "finite_cycle");
    preflight(opt, stem + ".csv");
    const int stride = cfg.integer("output", "trajectory_stride");
    if (subcommand == "finite-cycle" && stride > 0) preflight(opt, stem + "_trajectory.csv");
    const auto rows = run_sweep(spec);
    auto extra = sweep_meta(spec, rows);
    if (spec.mode != SweepMode::spectrum) {
        std::string fr;
        for (const auto& [reg, f] : regime_fraction(rows)) fr += std::string(fr.empty() ? "" : ",") + to_string(reg) + ":" + format_double(f);
        extra.push_back({"regime_fraction", fr.empty() ? "(none)" : fr});
        if (!fr.empty()) std::printf("regime fractions: %s\n", fr.c_str());
    }
    write(sweep_table(spec, rows), opt, stem + ".csv", meta_text(subcommand, opt, cfg, extra));

    if (subcommand == "ideal-cycle" && rows.front().ideal) {
        const auto& x = *rows.front().ideal;
        std::printf("W = %.10g  Q_h = %.10g  Q_c = %.10g  regime = %s", x.work, x.q_hot, x.q_cold, to_string(x.regime));
        if (x.efficiency) std::printf("  eta = %.10g", *x.efficiency);
        std::printf("\n");
    }

    if (subcommand == "finite-cycle" && stride > 0) {
        if (!spec.axes.empty()) cfg.fail("output", "trajectory_stride", "trajectory dumps need a single-point run");
        const OttoEngine engine(cycle_config_for(spec, rows.front().inputs));
        const auto lc = engine.find_limit_cycle();
        CsvTable traj;
        traj.header = {"t", "stage", "energy", "purity", "trace_error", "power"};
        engine.run_cycle(lc.state, [&](const CycleSample& s) {
            traj.add_row({format_double(s.t), to_string(s.stage), format_double(s.energy), format_double(s.purity),
                          format_double(s.trace_error), format_double(s.power)});
        }, stride);
        write(traj, opt, stem + "_trajectory.csv",
              meta_text(subcommand, opt, cfg, {{"content", "one cycle started from the limit-cycle state"},
                                               {"limit_cycle_converged", lc.converged ? "true" : "false"},
                                               {"sample_stride", std::to_string(stride)}}));
    }
    return report_failures(rows);
}

int cmd_limit_cycle(const RunOptions& opt) {
    Config cfg = load_config(opt);
    cfg.require({{"system", "omega_h"}, {"system", "omega_c"}, {"bath", "T_h"}, {"bath", "T_c"}});
    cfg.apply_override("sweep.mode=finite_cycle");
    const SweepSpec spec = sweep_spec_from(cfg, false);
    preflight(opt, output_name(cfg, "limit_cycle") + ".csv");
    const OttoEngine engine(cycle_config_for(spec, point_inputs(spec, 0)));

    CsvTable t;
    t.header = {"cycle", "fidelity", "one_minus_fidelity", "Q_h", "Q_c", "W", "eta", "P", "Sigma",
                "W_fric_comp", "W_fric_exp", "tur_bound", "regime"};
    const auto lc = engine.find_limit_cycle(std::nullopt, [&](int n, const CycleResult& res) {
        const auto& x = res.record;
        t.add_row({std::to_string(n), format_double(x.fidelity_to_previous), format_double(1.0 - x.fidelity_to_previous),
                   format_double(x.q_hot), format_double(x.q_cold), format_double(x.work), format_optional(x.efficiency),
                   format_double(x.power), format_double(x.entropy_production),
                   format_double(x.friction_work_compression), format_double(x.friction_work_expansion),
                   format_optional(x.tur_bound), to_string(x.regime)});
    });
    write(t, opt, output_name(cfg, "limit_cycle") + ".csv",
          meta_text("limit-cycle", opt, cfg,
                    {{"converged", lc.converged ? "true" : "false"},
                     {"cycles", std::to_string(lc.fidelity_trace.size())},
                     {"fidelity_definition", "F(rho^(N-1)(tau0), rho^(N)(tau0)), Uhlmann"}}));
    std::printf("%s after %zu cycles, 1 - F = %.3g, W = %.10g\n", lc.converged ? "converged" : "NOT converged",
                lc.fidelity_trace.size(), 1.0 - lc.fidelity_trace.back(), lc.last.record.work);
    if (!lc.converged) {
        std::fprintf(stderr, "1 of 1 points failed: limit cycle not reached\n");
        return kFailedPoints;
    }
    return kOk;
}

int cmd_tur(const RunOptions& opt) {
    const Config cfg = load_config(opt);
    const auto r = cfg.range("tur", "sigma");
    if (!(r.start > 0.0)) cfg.fail("tur", "sigma", "entropy production must be > 0");
    CsvTable t;
    preflight(opt, output_name(cfg, "tur") + ".csv");
    t.header = {"sigma", "g_half_sigma", "tur_bound"};
    for (double s : linspace(r.start, r.stop, r.count)) {
        t.add_row({format_double(s), format_double(inverse_x_tanh_x(0.5 * s)), format_double(tur_bound(s))});
    }
    write(t, opt, output_name(cfg, "tur") + ".csv",
          meta_text("tur", opt, cfg, {{"definition", "f(Sigma) = csch^2(g(Sigma/2)), g inverse of x tanh x"}}));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qotto: quantum Otto cycles with an anisotropic Rabi-Stark working medium"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.fallthrough();

    RunOptions opt;
    opt.workers = default_worker_count();
    for (int i = 0; i < argc; ++i) opt.command_line += (i ? " " : "") + std::string(argv[i]);

    app.add_option("-c,--config", opt.config_path, "configuration file")->check(CLI::ExistingFile);
    app.add_option("-o,--out", opt.out_dir, "output directory (created if absent)");
    app.add_option("-w,--workers", opt.workers, "parallel workers (default: QOTTO_WORKERS or all cores)")
        ->check(CLI::PositiveNumber);
    app.add_flag("-f,--force", opt.force, "overwrite existing output files");
    app.add_option("-s,--set", opt.overrides, "override a config value: section.key=value")->take_all();

    struct Sub {
        const char* name;
        const char* help;
    };
    const Sub subs[] = {
        {"spectrum", "lowest levels along one coupling axis"},
        {"ideal-cycle", "quasistatic Otto cycle at one parameter point"},
        {"phase-diagram", "ideal (or other mode) cycle over a 1D/2D parameter grid"},
        {"finite-cycle", "finite-time limit cycles at one point or over a grid"},
        {"limit-cycle", "cycle-by-cycle convergence to the limit cycle"},
        {"tur", "thermodynamic uncertainty bound f(Sigma)"},
    };
    for (const auto& s : subs) app.add_subcommand(s.name, s.help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        if (sub == "spectrum") return cmd_spectrum(opt);
        if (sub == "limit-cycle") return cmd_limit_cycle(opt);
        if (sub == "tur") return cmd_tur(opt);
        return cmd_sweep(opt, sub);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kUsage;
    } catch (const OutputError& e) {
        std::fprintf(stderr, "output error: %s\n", e.what());
        return kOutput;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kRuntime;
    }
}
