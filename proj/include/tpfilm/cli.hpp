/// @file cli.hpp
/// @brief Command-line front end. Exit codes: 0 success, 1 a checked property
///        failed or the integration broke down, 2 usage or configuration error.

#pragma once

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tpfilm/closures.hpp"
#include "tpfilm/errors.hpp"
#include "tpfilm/mollifier.hpp"
#include "tpfilm/regularization.hpp"
#include "tpfilm/scenarios/config.hpp"
#include "tpfilm/scenarios/io.hpp"
#include "tpfilm/scenarios/run.hpp"
#include "tpfilm/scenarios/studies.hpp"

namespace tpfilm {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr const char* kOutputRootEnv = "TPFILM_OUTPUT_ROOT";

struct CliOptions {
    std::string command;
    std::string config;
    std::string out;
    int jobs = 1;
    int verbosity = 0;
};

/// --out, then the environment variable, then the config's output_dir.
inline fs::path resolve_output_dir(const CliOptions& o, const ScenarioConfig& cfg) {
    if (!o.out.empty()) return o.out;
    if (const char* env = std::getenv(kOutputRootEnv); env && *env) return env;
    return cfg.output_dir;
}

namespace cli_detail {

inline std::string sci(double x) {
    std::ostringstream os;
    os << std::setprecision(6) << std::scientific << x;
    return os.str();
}

inline const char* verdict(bool pass) { return pass ? "PASS" : "FAIL"; }

inline int cmd_run(const CliOptions& o, std::ostream& out) {
    const ScenarioConfig cfg = load_config(o.config);
    const fs::path dir = resolve_output_dir(o, cfg);
    RunOptions opt;
    opt.keep_states = false;
    const RunOutcome r = run_scenario(cfg, dir, opt);
    if (o.verbosity > 0) {
        for (const auto& rec : r.records) {
            out << "t=" << sci(rec.t) << " energy=" << sci(rec.energy) << " residual=" << sci(rec.energy_residual)
                << " min_f=" << sci(rec.min_f) << " chi_f=" << sci(rec.chi_f) << '\n';
        }
    }
    out << "run: " << (r.ok ? "completed" : "FAILED") << " samples=" << r.records.size() << " steps=" << r.steps
        << " rejections=" << r.rejections << " output=" << dir.string() << '\n';
    if (!r.ok) out << "failure: " << r.failure << '\n';
    if (!r.records.empty()) {
        const auto& last = r.records.back();
        out << "final: t=" << sci(last.t) << " energy=" << sci(last.energy)
            << " energy_residual=" << sci(last.energy_residual) << " min_f=" << sci(last.min_f)
            << " min_gamma=" << sci(last.min_gamma) << '\n';
    }
    if (!cfg.params().r_exceeds_s()) out << "note: R > S does not hold for these constants\n";
    return r.ok ? kExitOk : kExitFailed;
}

inline int cmd_resume(const CliOptions& o, std::ostream& out) {
    const ScenarioConfig cfg = load_config(o.config);
    const fs::path dir = resolve_output_dir(o, cfg);
    const CheckpointFile cf = checkpoint_from_json(read_json(dir / "checkpoint.json"));
    if (cf.config_text != config_to_text(cfg)) {
        throw UsageError("checkpoint in " + dir.string() + " was written for a different configuration");
    }
    RunOptions opt;
    opt.keep_states = false;
    const RunOutcome r = resume_scenario(dir, opt);
    out << "resume: from t=" << sci(cf.stepper.t) << " " << (r.ok ? "completed" : "FAILED")
        << " new_samples=" << r.records.size() << " steps=" << r.steps << " output=" << dir.string() << '\n';
    if (!r.ok) out << "failure: " << r.failure << '\n';
    return r.ok ? kExitOk : kExitFailed;
}

inline int cmd_sweep_eps(const CliOptions& o, std::ostream& out) {
    const ScenarioConfig cfg = load_config(o.config);
    const fs::path dir = resolve_output_dir(o, cfg);
    const EpsSweepReport rep = sweep_eps(cfg, dir, o.jobs);
    for (std::size_t i = 0; i < rep.members.size(); ++i) {
        const auto& m = rep.members[i];
        out << "eps=" << sci(m.eps) << " max_chi_f=" << sci(m.max_chi_f) << " max_neg_f=" << sci(m.max_neg_f)
            << " min_gamma=" << sci(m.min_gamma) << (m.ok ? "" : " FAILED: " + m.failure) << '\n';
        if (i < rep.cauchy.size()) out << "  sup|f_i - f_i+1| = " << sci(rep.cauchy[i]) << '\n';
    }
    out << verdict(rep.slope_pass()) << " chi slope=" << sci(rep.slope) << " (need >= " << kEpsSlopeThreshold
        << ") monotone=" << (rep.monotone ? "yes" : "no") << '\n';
    out << verdict(rep.gamma_pass()) << " min gamma=" << sci(rep.min_gamma) << " (need >= " << sci(kGammaFloor)
        << ")\n";
    out << "report: " << (dir / "eps_sweep.json").string() << '\n';
    return rep.slope_pass() && rep.gamma_pass() ? kExitOk : kExitFailed;
}

inline int cmd_sweep_n(const CliOptions& o, std::ostream& out) {
    const ScenarioConfig cfg = load_config(o.config);
    const fs::path dir = resolve_output_dir(o, cfg);
    const NSweepReport rep = sweep_n(cfg, dir, o.jobs);
    for (std::size_t i = 0; i < rep.members.size(); ++i) {
        const auto& m = rep.members[i];
        out << "n=" << m.n << " oversample=" << m.oversample << " rel_tol=" << sci(m.rel_tol)
            << " max|residual|=" << sci(m.max_abs_residual) << " max_energy_increase=" << sci(m.max_energy_increase)
            << (m.ok ? "" : " FAILED: " + m.failure) << '\n';
        if (i < rep.distances.size()) out << "  sup|f_n - f_next| = " << sci(rep.distances[i]) << '\n';
    }
    out << verdict(rep.pass()) << " distances non-increasing=" << (rep.distances_non_increasing ? "yes" : "no")
        << " residuals non-increasing=" << (rep.residuals_non_increasing ? "yes" : "no")
        << " energy monotone=" << (rep.energy_monotone ? "yes" : "no") << '\n';
    out << "report: " << (dir / "n_sweep.json").string() << '\n';
    return rep.pass() ? kExitOk : kExitFailed;
}

inline int cmd_reduce(const CliOptions& o, std::ostream& out) {
    const ScenarioConfig cfg = load_config(o.config);
    const fs::path dir = resolve_output_dir(o, cfg);
    const ReductionReport rep = reduction_thinfilm(cfg, dir);
    out << verdict(rep.pass()) << " max relative sup distance=" << sci(rep.max_rel_distance)
        << " (need <= " << sci(kReductionTolerance) << ")\n";
    out << "max |gamma - gamma0| = " << sci(rep.max_gamma_deviation) << ", max |g - g0| = " << sci(rep.max_g_deviation)
        << '\n';
    if (!rep.ok) out << "failure: " << rep.failure << '\n';
    out << "report: " << (dir / "reduction.json").string() << '\n';
    return rep.pass() ? kExitOk : kExitFailed;
}

inline int cmd_dispersion(const CliOptions& o, std::ostream& out) {
    const ScenarioConfig cfg = load_config(o.config);
    const fs::path dir = resolve_output_dir(o, cfg);
    const DispersionReport rep = dispersion_study(cfg, dir);
    for (const auto& e : rep.entries) {
        out << "k=" << e.k << " branch=" << e.branch << " eigenvalue=" << sci(e.eig_re);
        if (e.skipped) {
            out << " skipped (" << e.reason << ")\n";
        } else {
            out << " fitted=" << sci(e.fitted) << " rel_error=" << sci(e.rel_error) << '\n';
        }
    }
    out << verdict(rep.coupled_pass()) << " max relative error=" << sci(rep.max_rel_error)
        << " (need <= " << kDispersionTolerance << ")\n";
    out << verdict(rep.mu0_pass()) << " mu=0 closed form=" << sci(rep.mu0_closed_form)
        << " fitted=" << sci(rep.mu0_fitted) << " rel_error=" << sci(rep.mu0_rel_error) << '\n';
    if (!rep.ok) out << "failure: " << rep.failure << '\n';
    out << "report: " << (dir / "dispersion.json").string() << '\n';
    return rep.coupled_pass() && rep.mu0_pass() ? kExitOk : kExitFailed;
}

inline constexpr double kClosureRange = 50.0;
inline constexpr std::size_t kClosureSamples = 100001;
inline constexpr std::int64_t kRegularizationSamples = 100000;

inline int cmd_validate_closure(const CliOptions& o, std::ostream& out) {
    const ScenarioConfig cfg = load_config(o.config);
    const SurfactantClosure c = cfg.make_closure();
    const ValidationReport v = validate_closure(c, kClosureRange, kClosureSamples);
    for (const auto& chk : v.checks) {
        out << verdict(chk.pass) << ' ' << chk.name << " worst=" << sci(chk.worst) << '\n';
    }
    const RegularizationReport r = regularization_property_check(c, kRegularizationSamples);
    for (const auto& p : r.properties) {
        out << verdict(p.pass) << " regularization." << p.name << " tested=" << p.tested
            << " violations=" << p.violations << '\n';
    }
    const PhysicalParams p = cfg.params();
    out << "R=" << sci(p.R()) << " S=" << sci(p.S()) << " R>S: " << (p.r_exceeds_s() ? "yes" : "no") << '\n';
    return v.all_pass() && r.all_pass() ? kExitOk : kExitFailed;
}

inline constexpr std::int64_t kMollifierSamples = 10000;

inline int cmd_check_mollifier(const CliOptions& o, std::ostream& out) {
    KernelKind kind = KernelKind::polynomial;
    if (!o.config.empty()) kind = load_config(o.config).kernel;
    const MollifierKernel k = MollifierKernel::make(kind);
    bool all = true;
    for (double delta : {1.0, 1e-1, 1e-2, 1e-3}) {
        const MollifierReport rep = mollifier_lemma_check(k, delta, kMollifierSamples);
        for (const auto& p : rep.properties) {
            out << verdict(p.pass) << " delta=" << sci(delta) << ' ' << p.name << " violations=" << p.violations
                << " worst_excess=" << sci(p.worst) << '\n';
        }
        all = all && rep.all_pass();
    }
    return all ? kExitOk : kExitFailed;
}

}  // namespace cli_detail

/// Parses argv and dispatches. Never throws.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Two-phase thin film with insoluble surfactant: spectral Galerkin simulator"};
    app.require_subcommand(1, 1);
    CliOptions o;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"run", "integrate one scenario and write its artifacts"},
        {"sweep-eps", "run the scenario for every eps in sweep.eps"},
        {"sweep-n", "run the scenario for every n in sweep.n"},
        {"reduce-thinfilm", "compare mu = 0 runs with the single-equation reference"},
        {"dispersion", "fit modal rates against the linearization"},
        {"validate-closure", "check the closure assumptions and the regularization properties"},
        {"check-mollifier", "check the mollifier properties"},
        {"resume", "continue a run from its checkpoint"}};
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        auto* cfg = sub->add_option("--config", o.config, "scenario config file");
        if (name != "check-mollifier") cfg->required();
        sub->add_option("--out", o.out, "output directory (overrides $TPFILM_OUTPUT_ROOT and output_dir)");
        sub->add_option("--jobs", o.jobs, "maximum concurrent sweep members")->check(CLI::PositiveNumber);
        sub->add_flag("-v,--verbose", o.verbosity, "print per-sample lines");
        sub->callback([&o, name = name]() { o.command = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    }
    try {
        using namespace cli_detail;
        if (o.command == "run") return cmd_run(o, out);
        if (o.command == "resume") return cmd_resume(o, out);
        if (o.command == "sweep-eps") return cmd_sweep_eps(o, out);
        if (o.command == "sweep-n") return cmd_sweep_n(o, out);
        if (o.command == "reduce-thinfilm") return cmd_reduce(o, out);
        if (o.command == "dispersion") return cmd_dispersion(o, out);
        if (o.command == "validate-closure") return cmd_validate_closure(o, out);
        if (o.command == "check-mollifier") return cmd_check_mollifier(o, out);
        err << "usage error: unknown command\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "failed: " << e.what() << '\n';
        return kExitFailed;
    }
}

}  // namespace tpfilm
