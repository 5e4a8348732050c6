/// @file config.hpp
/// @brief Scenario configuration: a flat `key = value` text format with a fixed
///        key list. Unknown keys, malformed numbers and duplicates are rejected.
///
/// Lines are `key = value`; `#` starts a comment. Lists are comma separated.
/// Initial data is given per field (prefix f., g., gamma.):
///   <field>.type      constant | cosine | clipped | random
///   <field>.value     constant value (type constant)
///   <field>.mean      mean level c
///   <field>.modes     "k:a, k:a, ..." cosine amplitudes (type cosine)
///   <field>.amplitude a (types clipped, random)
///   <field>.mode      k (type clipped): max(0, c + a cos(k pi x / L))
///   <field>.max_mode  highest mode of a random field
///   <field>.floor     lower bound enforced on a random field by shifting
/// Study keys: sweep.eps, sweep.n, sweep.coupled, dispersion.k, dispersion.amplitude.

#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "tpfilm/closures.hpp"
#include "tpfilm/diagnostics.hpp"
#include "tpfilm/errors.hpp"
#include "tpfilm/mollifier.hpp"
#include "tpfilm/timestepper.hpp"

namespace tpfilm {

enum class FieldKind { constant, cosine, clipped, random };

struct FieldSpec {
    FieldKind kind = FieldKind::constant;
    double value = 0.0;
    double mean = 0.0;
    std::vector<std::pair<int, double>> modes;
    double amplitude = 0.0;
    int mode = 1;
    int max_mode = 4;
    double floor = 0.0;

    static FieldSpec constant_value(double c) {
        FieldSpec s;
        s.value = c;
        return s;
    }
};

/// How a non band-limited initial field is mapped to n+1 coefficients.
enum class Projection { l2, fejer, jackson };

struct ScenarioConfig {
    // fluid
    double mu = 1.0;
    double sigma1c = 1.0;
    double sigma2c = 1.0;
    double diffusivity = 1.0;
    double length = 1.0;
    // closure
    std::string closure = "quadratic";
    double closure_beta = 1.0;
    double closure_kappa = 0.0;
    double closure_r = 0.5;
    // discretization
    double eps = 1e-2;
    int n = 32;
    double oversample = 4.0;
    StepControl control;
    double t_end = 1e-3;
    double sample_every = 1e-4;
    // initial data
    FieldSpec f = FieldSpec::constant_value(1.0);
    FieldSpec g = FieldSpec::constant_value(1.0);
    FieldSpec gamma = FieldSpec::constant_value(1.0);
    Projection projection = Projection::l2;
    std::uint64_t seed = 1;
    // diagnostics
    KernelKind kernel = KernelKind::polynomial;
    int chi_refine = 4;
    DissipationAccumulation dissipation = DissipationAccumulation::stepper;
    bool write_snapshots = true;
    // studies
    std::vector<double> sweep_eps{1e-1, 1e-2, 1e-3, 1e-4};
    std::vector<int> sweep_n{8, 16, 32};
    bool sweep_coupled = false;  ///< n-sweep also scales oversample with n and divides tolerances by 10 per member
    std::vector<int> dispersion_k{1, 2, 3, 4};
    double dispersion_amplitude = 1e-5;
    // output
    std::string output_dir = "out";

    PhysicalParams params() const { return PhysicalParams(mu, sigma1c, sigma2c, diffusivity, length); }

    SurfactantClosure make_closure() const {
        if (closure == "quadratic") return quadratic_closure(closure_beta, closure_r);
        if (closure == "arctan") return arctan_closure(closure_beta, closure_kappa, closure_r);
        throw UsageError("unknown closure '" + closure + "' (expected quadratic or arctan)");
    }

    /// Throws on any inconsistent setting.
    void validate() const {
        (void)params();
        (void)make_closure();
        if (!(eps > 0.0 && eps <= 1.0)) throw ParameterDomainError("config: eps must lie in (0, 1]");
        if (n < 1) throw ParameterDomainError("config: n must be >= 1");
        if (!(oversample >= 1.0)) throw ParameterDomainError("config: oversample must be >= 1");
        control.validate();
        if (!(t_end >= 0.0)) throw ParameterDomainError("config: t_end must be >= 0");
        if (!(sample_every > 0.0)) throw ParameterDomainError("config: sample_every must be positive");
        if (chi_refine < 1) throw ParameterDomainError("config: chi_refine must be >= 1");
        for (double e : sweep_eps) {
            if (!(e > 0.0 && e <= 1.0)) throw ParameterDomainError("config: sweep.eps entries must lie in (0, 1]");
        }
        for (int m : sweep_n) {
            if (m < 1) throw ParameterDomainError("config: sweep.n entries must be >= 1");
        }
        if (!(dispersion_amplitude > 0.0)) throw ParameterDomainError("config: dispersion.amplitude must be > 0");
    }
};

namespace config_detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        throw UsageError("config: key '" + key + "' expects a number, got '" + v + "'");
    }
    if (used != v.size()) throw UsageError("config: key '" + key + "' expects a number, got '" + v + "'");
    return x;
}

inline long long to_int(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    long long x = 0;
    try {
        x = std::stoll(v, &used);
    } catch (const std::exception&) {
        throw UsageError("config: key '" + key + "' expects an integer, got '" + v + "'");
    }
    if (used != v.size()) throw UsageError("config: key '" + key + "' expects an integer, got '" + v + "'");
    return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw UsageError("config: key '" + key + "' expects true/false, got '" + v + "'");
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline FieldKind to_field_kind(const std::string& key, const std::string& v) {
    if (v == "constant") return FieldKind::constant;
    if (v == "cosine") return FieldKind::cosine;
    if (v == "clipped") return FieldKind::clipped;
    if (v == "random") return FieldKind::random;
    throw UsageError("config: key '" + key + "' expects constant|cosine|clipped|random, got '" + v + "'");
}

inline void set_field(FieldSpec& fs, const std::string& key, const std::string& sub, const std::string& v) {
    if (sub == "type") {
        fs.kind = to_field_kind(key, v);
    } else if (sub == "value") {
        fs.value = to_double(key, v);
    } else if (sub == "mean") {
        fs.mean = to_double(key, v);
    } else if (sub == "amplitude") {
        fs.amplitude = to_double(key, v);
    } else if (sub == "mode") {
        fs.mode = static_cast<int>(to_int(key, v));
    } else if (sub == "max_mode") {
        fs.max_mode = static_cast<int>(to_int(key, v));
    } else if (sub == "floor") {
        fs.floor = to_double(key, v);
    } else if (sub == "modes") {
        fs.modes.clear();
        for (const auto& item : split_list(v)) {
            const auto colon = item.find(':');
            if (colon == std::string::npos) throw UsageError("config: key '" + key + "' expects k:a pairs");
            const int k = static_cast<int>(to_int(key, trim(item.substr(0, colon))));
            if (k < 0) throw UsageError("config: key '" + key + "' has a negative mode index");
            fs.modes.emplace_back(k, to_double(key, trim(item.substr(colon + 1))));
        }
    } else {
        throw UsageError("config: unknown key '" + key + "'");
    }
}

}  // namespace config_detail

/// Applies one key/value pair; throws UsageError on unknown keys.
inline void apply_config_key(ScenarioConfig& c, const std::string& key, const std::string& v) {
    using namespace config_detail;
    const std::map<std::string, double*> reals{
        {"mu", &c.mu}, {"sigma1c", &c.sigma1c}, {"sigma2c", &c.sigma2c}, {"diffusivity", &c.diffusivity},
        {"length", &c.length}, {"closure.beta", &c.closure_beta}, {"closure.kappa", &c.closure_kappa},
        {"closure.r", &c.closure_r}, {"eps", &c.eps}, {"oversample", &c.oversample},
        {"rel_tol", &c.control.rel_tol}, {"abs_tol", &c.control.abs_tol}, {"dt_init", &c.control.dt_init},
        {"dt_max", &c.control.dt_max}, {"dt_min", &c.control.dt_min}, {"safety", &c.control.safety},
        {"c_stab", &c.control.c_stab}, {"t_end", &c.t_end}, {"sample_every", &c.sample_every},
        {"dispersion.amplitude", &c.dispersion_amplitude}};
    if (auto it = reals.find(key); it != reals.end()) {
        *it->second = to_double(key, v);
        return;
    }
    if (key == "n") {
        c.n = static_cast<int>(to_int(key, v));
    } else if (key == "max_steps") {
        c.control.max_steps = to_int(key, v);
    } else if (key == "stability_cap") {
        c.control.stability_cap = to_bool(key, v);
    } else if (key == "closure") {
        c.closure = v;
    } else if (key == "seed") {
        c.seed = static_cast<std::uint64_t>(to_int(key, v));
    } else if (key == "projection") {
        if (v == "l2") c.projection = Projection::l2;
        else if (v == "fejer") c.projection = Projection::fejer;
        else if (v == "jackson") c.projection = Projection::jackson;
        else throw UsageError("config: projection expects l2|fejer|jackson, got '" + v + "'");
    } else if (key == "kernel") {
        c.kernel = parse_kernel_kind(v);
    } else if (key == "chi_refine") {
        c.chi_refine = static_cast<int>(to_int(key, v));
    } else if (key == "dissipation") {
        if (v == "stepper") c.dissipation = DissipationAccumulation::stepper;
        else if (v == "trapezoid") c.dissipation = DissipationAccumulation::trapezoid;
        else throw UsageError("config: dissipation expects stepper|trapezoid, got '" + v + "'");
    } else if (key == "write_snapshots") {
        c.write_snapshots = to_bool(key, v);
    } else if (key == "sweep.eps") {
        c.sweep_eps.clear();
        for (const auto& s : split_list(v)) c.sweep_eps.push_back(to_double(key, s));
    } else if (key == "sweep.n") {
        c.sweep_n.clear();
        for (const auto& s : split_list(v)) c.sweep_n.push_back(static_cast<int>(to_int(key, s)));
    } else if (key == "sweep.coupled") {
        c.sweep_coupled = to_bool(key, v);
    } else if (key == "dispersion.k") {
        c.dispersion_k.clear();
        for (const auto& s : split_list(v)) c.dispersion_k.push_back(static_cast<int>(to_int(key, s)));
    } else if (key == "output_dir") {
        c.output_dir = v;
    } else if (key.rfind("f.", 0) == 0) {
        set_field(c.f, key, key.substr(2), v);
    } else if (key.rfind("g.", 0) == 0) {
        set_field(c.g, key, key.substr(2), v);
    } else if (key.rfind("gamma.", 0) == 0) {
        set_field(c.gamma, key, key.substr(6), v);
    } else {
        throw UsageError("config: unknown key '" + key + "'");
    }
}

inline ScenarioConfig parse_config(std::istream& in) {
    using config_detail::trim;
    ScenarioConfig c;
    std::set<std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw UsageError("config line " + std::to_string(lineno) + ": empty key");
        if (!seen.insert(key).second) throw UsageError("config: duplicate key '" + key + "'");
        apply_config_key(c, key, value);
    }
    c.validate();
    return c;
}

inline ScenarioConfig parse_config_string(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    return parse_config(in);
}

namespace config_detail {

inline std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

template <class T>
std::string join(const std::vector<T>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        if constexpr (std::is_floating_point_v<T>) out += num(xs[i]);
        else out += std::to_string(xs[i]);
    }
    return out;
}

inline const char* kind_name(FieldKind k) {
    switch (k) {
        case FieldKind::constant: return "constant";
        case FieldKind::cosine: return "cosine";
        case FieldKind::clipped: return "clipped";
        case FieldKind::random: return "random";
    }
    return "constant";
}

inline void field_lines(std::ostream& os, const std::string& prefix, const FieldSpec& fs) {
    os << prefix << "type = " << kind_name(fs.kind) << '\n';
    os << prefix << "value = " << num(fs.value) << '\n';
    os << prefix << "mean = " << num(fs.mean) << '\n';
    os << prefix << "amplitude = " << num(fs.amplitude) << '\n';
    os << prefix << "mode = " << fs.mode << '\n';
    os << prefix << "max_mode = " << fs.max_mode << '\n';
    os << prefix << "floor = " << num(fs.floor) << '\n';
    if (!fs.modes.empty()) {
        os << prefix << "modes = ";
        for (std::size_t i = 0; i < fs.modes.size(); ++i) {
            if (i) os << ", ";
            os << fs.modes[i].first << ':' << num(fs.modes[i].second);
        }
        os << '\n';
    }
}

}  // namespace config_detail

/// Full key list with values; parse_config_string(config_to_text(c)) reproduces c exactly.
inline std::string config_to_text(const ScenarioConfig& c) {
    using namespace config_detail;
    std::ostringstream os;
    os << "mu = " << num(c.mu) << '\n'
       << "sigma1c = " << num(c.sigma1c) << '\n'
       << "sigma2c = " << num(c.sigma2c) << '\n'
       << "diffusivity = " << num(c.diffusivity) << '\n'
       << "length = " << num(c.length) << '\n'
       << "closure = " << c.closure << '\n'
       << "closure.beta = " << num(c.closure_beta) << '\n'
       << "closure.kappa = " << num(c.closure_kappa) << '\n'
       << "closure.r = " << num(c.closure_r) << '\n'
       << "eps = " << num(c.eps) << '\n'
       << "n = " << c.n << '\n'
       << "oversample = " << num(c.oversample) << '\n'
       << "rel_tol = " << num(c.control.rel_tol) << '\n'
       << "abs_tol = " << num(c.control.abs_tol) << '\n'
       << "dt_init = " << num(c.control.dt_init) << '\n'
       << "dt_max = " << num(c.control.dt_max) << '\n'
       << "dt_min = " << num(c.control.dt_min) << '\n'
       << "safety = " << num(c.control.safety) << '\n'
       << "c_stab = " << num(c.control.c_stab) << '\n'
       << "stability_cap = " << (c.control.stability_cap ? "true" : "false") << '\n'
       << "max_steps = " << c.control.max_steps << '\n'
       << "t_end = " << num(c.t_end) << '\n'
       << "sample_every = " << num(c.sample_every) << '\n';
    field_lines(os, "f.", c.f);
    field_lines(os, "g.", c.g);
    field_lines(os, "gamma.", c.gamma);
    os << "projection = "
       << (c.projection == Projection::l2 ? "l2" : c.projection == Projection::fejer ? "fejer" : "jackson") << '\n'
       << "seed = " << c.seed << '\n'
       << "kernel = " << (c.kernel == KernelKind::polynomial ? "polynomial" : "bump") << '\n'
       << "chi_refine = " << c.chi_refine << '\n'
       << "dissipation = " << (c.dissipation == DissipationAccumulation::stepper ? "stepper" : "trapezoid") << '\n'
       << "write_snapshots = " << (c.write_snapshots ? "true" : "false") << '\n'
       << "sweep.eps = " << join(c.sweep_eps) << '\n'
       << "sweep.n = " << join(c.sweep_n) << '\n'
       << "sweep.coupled = " << (c.sweep_coupled ? "true" : "false") << '\n'
       << "dispersion.k = " << join(c.dispersion_k) << '\n'
       << "dispersion.amplitude = " << num(c.dispersion_amplitude) << '\n'
       << "output_dir = " << c.output_dir << '\n';
    return os.str();
}

}  // namespace tpfilm
