#pragma once

// Batch orchestration: JSON run configurations, named presets, the
// validate -> data norms -> run -> analysis pipeline, and artifact output.
//
// Exit statuses: 0 ok, 2 configuration error, 3 structural violation,
// 4 bound violation, 5 analysis failure.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "plate/decay_analysis.hpp"
#include "plate/errors.hpp"
#include "plate/field_io.hpp"
#include "plate/linear_symbols.hpp"
#include "plate/material_model.hpp"
#include "plate/nonlinear_solver.hpp"
#include "plate/spectral_grid.hpp"

namespace plate {

using nlohmann::json;
namespace fs = std::filesystem;

enum ExitStatus : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitStructure = 3,
    kExitBound = 4,
    kExitAnalysis = 5,
};

/// 17 significant digits.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Configuration

namespace config_detail {

inline void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <class T>
T get(const json& j, const char* key, const std::string& where, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

template <class T>
T require(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + "." + key + ": missing");
    return get<T>(j, key, where, T{});
}

}  // namespace config_detail

struct CheckpointSpec {
    int count = 40;
    std::string spacing = "log";  // log | linear
    double first = 1.0;           // first positive time for log spacing
    std::vector<double> times;    // explicit list, overrides count
};

struct AnalysisConfig {
    int s = 8;
    std::vector<std::pair<double, double>> fit_windows;  // empty: [t_end/10, t_end]
    std::optional<double> d;                              // default n/8 + 0.55
    std::vector<int> orders{0, 1, 2};
    std::vector<std::string> norms;  // extra descriptors recorded in norms.csv
    std::optional<std::vector<std::string>> rates;  // descriptors to fit; unset: defaults
    bool profile = true;
    bool weighted_norms = true;
    bool linfty = true;
    bool energy = true;
    bool envelope = false;
    bool symbols = false;
    std::string fields = "all";  // all | final | none
};

struct RunConfig {
    std::string name = "custom";
    std::string description;
    int dim = 2;
    double half_length = 16.0 * std::numbers::pi;
    int points = 128;
    std::string model = "linear_isotropic";
    json model_params = json::object();
    json u0 = {{"type", "zero"}};
    json u1 = {{"type", "zero"}};
    IntegratorConfig integrator;
    double t_end = 10.0;
    CheckpointSpec checkpoints;
    bool allow_long_time = false;
    AnalysisConfig analysis;
    std::uint64_t seed = 0;
    std::string output;

    GridSpec grid() const { return GridSpec(dim, half_length, points); }

    /// (L / pi)^4 / 100: beyond this the periodic images reach the origin.
    double validity_limit() const { return std::pow(half_length / std::numbers::pi, 4) / 100.0; }

    json to_json() const {
        json windows = json::array();
        for (auto [lo, hi] : analysis.fit_windows) windows.push_back({lo, hi});
        json cp{{"count", checkpoints.count}, {"spacing", checkpoints.spacing}, {"first", checkpoints.first}};
        if (!checkpoints.times.empty()) cp["times"] = checkpoints.times;
        json an{{"s", analysis.s},
                {"fit_windows", windows},
                {"orders", analysis.orders},
                {"norms", analysis.norms},
                {"profile", analysis.profile},
                {"weighted_norms", analysis.weighted_norms},
                {"linfty", analysis.linfty},
                {"energy", analysis.energy},
                {"envelope", analysis.envelope},
                {"symbols", analysis.symbols},
                {"fields", analysis.fields}};
        if (analysis.d) an["d"] = *analysis.d;
        if (analysis.rates) an["rates"] = *analysis.rates;
        return {{"name", name},
                {"description", description},
                {"grid", {{"dim", dim}, {"half_length", half_length}, {"points_per_axis", points}}},
                {"model", {{"name", model}, {"params", model_params}}},
                {"initial_data", {{"u0", u0}, {"u1", u1}}},
                {"integrator", integrator.to_json()},
                {"t_end", t_end},
                {"checkpoints", cp},
                {"allow_long_time", allow_long_time},
                {"analysis", an},
                {"seed", seed},
                {"output", output}};
    }

    static RunConfig from_json(const json& j) {
        using namespace config_detail;
        reject_unknown(j,
                       {"name", "description", "grid", "model", "initial_data", "integrator", "t_end", "checkpoints",
                        "allow_long_time", "analysis", "seed", "output"},
                       "config");
        RunConfig c;
        c.name = get<std::string>(j, "name", "config", c.name);
        c.description = get<std::string>(j, "description", "config", "");
        c.t_end = require<double>(j, "t_end", "config");
        c.allow_long_time = get<bool>(j, "allow_long_time", "config", false);
        c.seed = get<std::uint64_t>(j, "seed", "config", 0);
        c.output = get<std::string>(j, "output", "config", "");

        const json& g = j.contains("grid") ? j.at("grid") : throw ConfigError("config.grid: missing");
        reject_unknown(g, {"dim", "half_length", "half_length_over_pi", "points_per_axis"}, "grid");
        c.dim = require<int>(g, "dim", "grid");
        c.points = require<int>(g, "points_per_axis", "grid");
        if (g.contains("half_length") == g.contains("half_length_over_pi"))
            throw ConfigError("grid: give exactly one of half_length, half_length_over_pi");
        c.half_length = g.contains("half_length") ? get<double>(g, "half_length", "grid", 0.0)
                                                  : std::numbers::pi * get<double>(g, "half_length_over_pi", "grid", 0.0);

        const json& m = j.contains("model") ? j.at("model") : throw ConfigError("config.model: missing");
        reject_unknown(m, {"name", "params"}, "model");
        c.model = require<std::string>(m, "name", "model");
        c.model_params = m.contains("params") ? m.at("params") : json::object();

        if (j.contains("initial_data")) {
            const json& d = j.at("initial_data");
            reject_unknown(d, {"u0", "u1"}, "initial_data");
            if (d.contains("u0")) c.u0 = d.at("u0");
            if (d.contains("u1")) c.u1 = d.at("u1");
        }

        if (j.contains("integrator")) {
            const json& i = j.at("integrator");
            reject_unknown(i,
                           {"dt", "scheme", "quadrature_substeps", "picard_iters", "picard_tol", "dealias_fraction",
                            "hessian_bound", "max_halvings"},
                           "integrator");
            auto& ic = c.integrator;
            ic.dt = get<double>(i, "dt", "integrator", ic.dt);
            ic.quadrature_substeps = get<int>(i, "quadrature_substeps", "integrator", ic.quadrature_substeps);
            ic.picard_iters = get<int>(i, "picard_iters", "integrator", ic.picard_iters);
            ic.picard_tol = get<double>(i, "picard_tol", "integrator", ic.picard_tol);
            ic.dealias_fraction = get<double>(i, "dealias_fraction", "integrator", ic.dealias_fraction);
            ic.hessian_bound = get<double>(i, "hessian_bound", "integrator", ic.hessian_bound);
            ic.max_halvings = get<int>(i, "max_halvings", "integrator", ic.max_halvings);
            try {
                ic.scheme = scheme_from_string(get<std::string>(i, "scheme", "integrator", to_string(ic.scheme)));
            } catch (const InvalidInput& e) {
                throw ConfigError(std::string("integrator.scheme: ") + e.what());
            }
        }

        if (j.contains("checkpoints")) {
            const json& cp = j.at("checkpoints");
            reject_unknown(cp, {"count", "spacing", "first", "times"}, "checkpoints");
            c.checkpoints.count = get<int>(cp, "count", "checkpoints", c.checkpoints.count);
            c.checkpoints.spacing = get<std::string>(cp, "spacing", "checkpoints", c.checkpoints.spacing);
            c.checkpoints.first = get<double>(cp, "first", "checkpoints", c.checkpoints.first);
            c.checkpoints.times = get<std::vector<double>>(cp, "times", "checkpoints", {});
        }

        if (j.contains("analysis")) {
            const json& a = j.at("analysis");
            reject_unknown(a,
                           {"s", "fit_windows", "d", "orders", "norms", "rates", "profile", "weighted_norms", "linfty",
                            "energy", "envelope", "symbols", "fields"},
                           "analysis");
            auto& ac = c.analysis;
            ac.s = get<int>(a, "s", "analysis", ac.s);
            if (a.contains("fit_windows")) {
                auto w = get<std::vector<std::vector<double>>>(a, "fit_windows", "analysis", {});
                for (const auto& p : w) {
                    if (p.size() != 2) throw ConfigError("analysis.fit_windows: each window is [t_lo, t_hi]");
                    ac.fit_windows.emplace_back(p[0], p[1]);
                }
            }
            if (a.contains("d") && !a.at("d").is_null()) ac.d = get<double>(a, "d", "analysis", 0.0);
            ac.orders = get<std::vector<int>>(a, "orders", "analysis", ac.orders);
            ac.norms = get<std::vector<std::string>>(a, "norms", "analysis", {});
            if (a.contains("rates")) ac.rates = get<std::vector<std::string>>(a, "rates", "analysis", {});
            ac.profile = get<bool>(a, "profile", "analysis", ac.profile);
            ac.weighted_norms = get<bool>(a, "weighted_norms", "analysis", ac.weighted_norms);
            ac.linfty = get<bool>(a, "linfty", "analysis", ac.linfty);
            ac.energy = get<bool>(a, "energy", "analysis", ac.energy);
            ac.envelope = get<bool>(a, "envelope", "analysis", ac.envelope);
            ac.symbols = get<bool>(a, "symbols", "analysis", ac.symbols);
            ac.fields = get<std::string>(a, "fields", "analysis", ac.fields);
        }
        c.validate();
        return c;
    }

    void validate() const {
        try {
            (void)grid();
            integrator.validate();
        } catch (const InvalidInput& e) {
            throw ConfigError(e.what());
        }
        if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
        if (t_end > validity_limit() && !allow_long_time)
            throw ConfigError("t_end = " + fmt17(t_end) + " exceeds the torus validity window (L/pi)^4/100 = " +
                              fmt17(validity_limit()) + "; set allow_long_time to override");
        if (checkpoints.times.empty()) {
            if (checkpoints.count < 1) throw ConfigError("checkpoints.count must be positive");
            if (checkpoints.spacing != "log" && checkpoints.spacing != "linear")
                throw ConfigError("checkpoints.spacing must be 'log' or 'linear'");
            if (checkpoints.spacing == "log" && !(checkpoints.first > 0.0 && checkpoints.first <= t_end))
                throw ConfigError("checkpoints.first must lie in (0, t_end]");
        } else {
            if (!std::is_sorted(checkpoints.times.begin(), checkpoints.times.end()))
                throw ConfigError("checkpoints.times must be sorted");
            if (checkpoints.times.front() < 0.0 || checkpoints.times.back() > t_end)
                throw ConfigError("checkpoints.times must lie in [0, t_end]");
        }
        if (analysis.s < 2) throw ConfigError("analysis.s must be at least 2");
        for (auto [lo, hi] : analysis.fit_windows)
            if (!(lo < hi)) throw ConfigError("analysis.fit_windows: t_lo must be below t_hi");
        for (int k : analysis.orders)
            if (k < 0) throw ConfigError("analysis.orders must be nonnegative");
        if (analysis.d && !(*analysis.d > dim / 8.0 + 0.5))
            throw ConfigError("analysis.d must exceed n/8 + 1/2");
        if (analysis.fields != "all" && analysis.fields != "final" && analysis.fields != "none")
            throw ConfigError("analysis.fields must be all, final or none");
        for (const auto& n : analysis.norms) descriptor_or_throw(n);
        if (analysis.rates)
            for (const auto& n : *analysis.rates) descriptor_or_throw(n);
        for (const json* d : {&u0, &u1})
            if (!d->is_object() || !d->contains("type")) throw ConfigError("initial data entries need a 'type'");
    }

    static Descriptor descriptor_or_throw(const std::string& s) {
        try {
            return parse_descriptor(s);
        } catch (const InvalidInput& e) {
            throw ConfigError(std::string("analysis: ") + e.what());
        }
    }
};

/// Parses a JSON document, reporting the byte offset of syntax errors.
inline json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1 + static_cast<std::size_t>(
                                   std::count(text.begin(), text.begin() + std::min(e.byte, text.size()), '\n'));
        throw ConfigError(origin + ": line " + std::to_string(line) + ": " + e.what());
    }
}

inline json load_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str(), path.string());
}

/// Applies KEY=VALUE with a dotted key; VALUE is read as JSON when it parses,
/// otherwise as a string. Intermediate objects must already exist or are created.
inline void apply_override(json& doc, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not KEY=VALUE");
    std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    json* node = &doc;
    std::size_t pos = 0;
    while (true) {
        auto dot = key.find('.', pos);
        std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
        json* next;
        if (node->is_array()) {
            std::size_t idx;
            try {
                idx = std::stoul(part);
            } catch (const std::exception&) {
                throw ConfigError("override key '" + key + "': '" + part + "' is not an array index");
            }
            if (idx >= node->size()) throw ConfigError("override key '" + key + "': index out of range");
            next = &(*node)[idx];
        } else {
            if (!node->is_object() && !node->is_null())
                throw ConfigError("override key '" + key + "' descends into a scalar");
            next = &(*node)[part];
        }
        if (dot == std::string::npos) {
            *next = value;
            return;
        }
        node = next;
        pos = dot + 1;
    }
}

// ---------------------------------------------------------------------------
// Presets

inline std::vector<std::string> preset_names() {
    return {"linear_decay_n1",    "linear_decay_n2",        "regularity_loss_envelope", "moment_zero_gain",
            "profile_convergence_linear", "nonlinear_smalldata_n2", "energy_identity",  "symbol_validation"};
}

inline json gaussian_data(double amplitude, double width) {
    return {{"type", "gaussian"}, {"amplitude", amplitude}, {"width", width}};
}

inline RunConfig preset(const std::string& name) {
    RunConfig c;
    c.name = name;
    auto linear_defaults = [&c](int dim, double l_over_pi, int n, double t_end) {
        c.dim = dim;
        c.half_length = l_over_pi * std::numbers::pi;
        c.points = n;
        c.model = "linear_isotropic";
        c.t_end = t_end;
        c.integrator.dt = 0.5;
        c.integrator.dealias_fraction = 1.0;  // no products to alias
        c.checkpoints = {60, "log", 1.0, {}};
        c.analysis.fit_windows = {{t_end / 10.0, t_end}};
        c.u0 = gaussian_data(0.05, 1.0);
    };
    if (name == "linear_decay_n1") {
        c.description = "Decay rates (1+t)^{-n/8-k/4} of the linearized problem, n = 1.";
        linear_defaults(1, 64.0, 1024, 500.0);
        c.analysis.s = 4;
    } else if (name == "linear_decay_n2") {
        c.description = "Decay rates (1+t)^{-n/8-k/4} of u and (1+t)^{-n/8-k/4-1} of u_t, linearized problem, n = 2.";
        linear_defaults(2, 32.0, 256, 500.0);
    } else if (name == "regularity_loss_envelope") {
        c.description = "High-frequency data decays at the slow regularity-loss rate; envelope of sup |G|/(1+|xi|^2).";
        linear_defaults(2, 16.0, 128, 200.0);
        c.u0 = {{"type", "mode_sum"},
                {"modes",
                 {{{"mode", {40, 0}}, {"amplitude", 1e-3}, {"phase", 0.0}},
                  {{"mode", {0, 48}}, {"amplitude", 1e-3}, {"phase", 0.5}},
                  {{"mode", {3, 1}}, {"amplitude", 1e-2}, {"phase", 0.0}}}}};
        c.analysis.envelope = true;
        c.analysis.profile = false;
        c.analysis.orders = {0, 1, 2, 3};
        c.analysis.rates = {"u:k=0:L2"};
        c.analysis.fit_windows = {{20.0, 200.0}};
    } else if (name == "moment_zero_gain") {
        c.description = "Zero-mean data gains (1+t)^{-1/4} over the generic rate.";
        linear_defaults(2, 32.0, 256, 500.0);
        c.u0 = {{"type", "derivative_of_gaussian"}, {"axis", 0}, {"amplitude", 0.05}, {"width", 1.0},
                {"zero_mean", true}};
        c.analysis.profile = false;
    } else if (name == "profile_convergence_linear") {
        c.description = "Linear solution approaches G0(t)*(u0+u1) and M G0(t+1).";
        linear_defaults(2, 32.0, 256, 500.0);
        c.checkpoints = {60, "log", 10.0, {}};
        c.analysis.rates = {"u:k=0:L2", "u-MG0(t+1):k=0:L2", "u_bar-G0*(u0+u1):k=0:L2"};
    } else if (name == "nonlinear_smalldata_n2") {
        c.description = "Small data for the quartic model: linear rates persist, u - u_bar decays faster.";
        c.dim = 2;
        c.half_length = 16.0 * std::numbers::pi;
        c.points = 128;
        c.model = "quartic";
        c.model_params = {{"beta", 1.0}};
        c.t_end = 500.0;
        c.integrator.dt = 0.1;
        c.u0 = gaussian_data(0.01, 2.0);
        c.checkpoints = {60, "log", 1.0, {}};
        c.analysis.fit_windows = {{50.0, 500.0}};
        c.analysis.rates = {"u:k=0:L2", "u:k=1:L2", "u_t:k=0:L2", "u-MG0(t+1):k=0:L2"};
    } else if (name == "energy_identity") {
        c.description = "Discrete energy balance dE/dt + ||u_t||^2 = 0 for the quartic model.";
        c.dim = 2;
        c.half_length = 16.0 * std::numbers::pi;
        c.points = 128;
        c.model = "quartic";
        c.model_params = {{"beta", 1.0}};
        c.t_end = 50.0;
        c.integrator.dt = 0.1;
        c.u0 = gaussian_data(0.01, 2.0);
        c.checkpoints = {50, "linear", 1.0, {}};
        c.analysis.profile = false;
        c.analysis.rates = std::vector<std::string>{};
        c.analysis.orders = {0};
        c.analysis.norms = {};
        c.analysis.fields = "final";
    } else if (name == "symbol_validation") {
        c.description = "Characteristic residuals, initial values, root swap and semigroup of the symbols.";
        c.dim = 2;
        c.half_length = 32.0 * std::numbers::pi;
        c.points = 256;
        c.model = "anisotropic";
        c.model_params = {{"strength", 0.5}};
        c.t_end = 1.0;
        c.integrator.dt = 0.5;
        c.integrator.dealias_fraction = 1.0;
        c.u0 = gaussian_data(0.05, 1.0);
        c.checkpoints = {2, "linear", 1.0, {}};
        c.analysis.symbols = true;
        c.analysis.rates = std::vector<std::string>{};
        c.analysis.profile = false;
        c.analysis.weighted_norms = false;
        c.analysis.linfty = false;
        c.analysis.fields = "none";
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Initial data

inline SpectralField build_initial_field(const json& spec, const GridSpec& grid, const SymbolTable& table,
                                         std::uint64_t seed, const std::string& where) {
    using namespace config_detail;
    const std::string type = require<std::string>(spec, "type", where);
    const int dim = grid.dim();
    auto center_of = [&](const json& s) {
        Vec3 c{0.0, 0.0, 0.0};
        auto v = get<std::vector<double>>(s, "center", where, {});
        if (!v.empty() && static_cast<int>(v.size()) != dim) throw ConfigError(where + ".center: wrong length");
        for (std::size_t i = 0; i < v.size(); ++i) c[i] = v[i];
        return c;
    };
    SpectralField out(grid);
    if (type == "zero") {
        reject_unknown(spec, {"type"}, where);
    } else if (type == "gaussian" || type == "derivative_of_gaussian") {
        const bool deriv = type == "derivative_of_gaussian";
        if (deriv) reject_unknown(spec, {"type", "amplitude", "width", "center", "axis", "zero_mean"}, where);
        else reject_unknown(spec, {"type", "amplitude", "width", "center"}, where);
        const double a = get<double>(spec, "amplitude", where, 1.0);
        const double w = get<double>(spec, "width", where, 1.0);
        const int axis = get<int>(spec, "axis", where, 0);
        if (!(w > 0.0)) throw ConfigError(where + ".width must be positive");
        if (axis < 0 || axis >= dim) throw ConfigError(where + ".axis out of range");
        const Vec3 c = center_of(spec);
        out = forward_transform(PhysicalField::sample(grid, [&](const Vec3& x) {
            Vec3 y{x[0] - c[0], x[1] - c[1], x[2] - c[2]};
            double g = a * std::exp(-0.5 * norm_squared(y) / (w * w));
            return deriv ? -y[axis] / (w * w) * g : g;
        }));
        // Sampled odd data carries a round-off mean; the flag makes it exact.
        if (deriv && get<bool>(spec, "zero_mean", where, false)) out[0] = 0.0;
    } else if (type == "mode_sum") {
        reject_unknown(spec, {"type", "modes"}, where);
        if (!spec.contains("modes") || !spec.at("modes").is_array()) throw ConfigError(where + ".modes: missing");
        PhysicalField f(grid);
        for (const auto& m : spec.at("modes")) {
            reject_unknown(m, {"mode", "amplitude", "phase"}, where + ".modes[]");
            auto idx = require<std::vector<int>>(m, "mode", where + ".modes[]");
            if (static_cast<int>(idx.size()) != dim) throw ConfigError(where + ".modes[].mode: wrong length");
            for (int v : idx)
                if (std::abs(v) >= grid.points_per_axis() / 2)
                    throw ConfigError(where + ".modes[].mode: beyond the resolved band");
            const double a = get<double>(m, "amplitude", where, 1.0), ph = get<double>(m, "phase", where, 0.0);
            for (std::size_t p = 0; p < grid.size(); ++p) {
                Vec3 x = grid.position(p);
                double arg = ph;
                for (int i = 0; i < dim; ++i) arg += idx[i] * grid.wavenumber_step() * x[i];
                f.values[p] += a * std::cos(arg);
            }
        }
        out = forward_transform(f);
    } else if (type == "random_modes") {
        reject_unknown(spec, {"type", "count", "max_mode", "amplitude"}, where);
        const int count = get<int>(spec, "count", where, 8);
        const int max_mode = get<int>(spec, "max_mode", where, 4);
        const double a = get<double>(spec, "amplitude", where, 1.0);
        if (count < 1 || max_mode < 1 || max_mode >= grid.points_per_axis() / 2)
            throw ConfigError(where + ": count and max_mode must be positive and resolved");
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<int> mode(-max_mode, max_mode);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        json modes = json::array();
        for (int i = 0; i < count; ++i) {
            std::vector<int> m(dim);
            for (int& v : m) v = mode(rng);
            modes.push_back({{"mode", m}, {"amplitude", a * unit(rng)}, {"phase", 2.0 * std::numbers::pi * unit(rng)}});
        }
        return build_initial_field({{"type", "mode_sum"}, {"modes", modes}}, grid, table, seed, where);
    } else if (type == "g0_profile") {
        reject_unknown(spec, {"type", "mass", "time"}, where);
        const double mass = get<double>(spec, "mass", where, 1.0), t = get<double>(spec, "time", where, 1.0);
        if (!(t > 0.0)) throw ConfigError(where + ".time must be positive");
        out = g0_field(table, t, mass);
    } else if (type == "file") {
        reject_unknown(spec, {"type", "path"}, where);
        PhysicalField f;
        try {
            f = read_field(require<std::string>(spec, "path", where));
        } catch (const InvalidInput& e) {
            throw ConfigError(where + ": " + e.what());
        }
        if (!(f.grid == grid)) throw ConfigError(where + ": file grid differs from the run grid");
        out = forward_transform(f);
    } else {
        throw ConfigError(where + ": unknown initial data type '" + type + "'");
    }
    return out;
}

/// Checkpoint times including 0 and t_end, snapped to the step grid.
inline std::vector<double> checkpoint_times(const RunConfig& c) {
    std::vector<double> raw;
    if (!c.checkpoints.times.empty()) {
        raw = c.checkpoints.times;
    } else if (c.checkpoints.spacing == "linear") {
        for (int i = 1; i <= c.checkpoints.count; ++i) raw.push_back(c.t_end * i / c.checkpoints.count);
    } else {
        const int n = c.checkpoints.count;
        const double r = std::log(c.t_end / c.checkpoints.first);
        for (int i = 0; i < n; ++i) raw.push_back(c.checkpoints.first * std::exp(n > 1 ? r * i / (n - 1) : r));
    }
    std::set<double> snapped{0.0, c.t_end};
    const double dt = c.integrator.dt;
    for (double t : raw) {
        double s = std::round(t / dt) * dt;
        if (s > 0.0 && s < c.t_end) snapped.insert(s);
    }
    return {snapped.begin(), snapped.end()};
}

// ---------------------------------------------------------------------------
// Pipeline

struct Simulation {
    RunConfig config;
    MaterialModel model;
    ValidationReport validation;
    SymbolTable table;
    SpectralField u0;
    SpectralField u1;
    DataNorms data;
    Trajectory trajectory;
    double seconds = 0.0;
};

inline MaterialModel build_model(const RunConfig& c) {
    try {
        return models::make(c.model, c.dim, c.model_params);
    } catch (const InvalidInput& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
}

/// Validates the model and integrates. Throws ConfigError, StructureViolation
/// or StepFailure; bound violations are recorded in the trajectory.
inline Simulation simulate(const RunConfig& c) {
    c.validate();
    MaterialModel model = build_model(c);
    ValidationReport rep = validate_structure(model);
    if (!rep.passed())
        throw StructureViolation("model '" + c.model + "' fails the structural checks: " + rep.to_json().dump());
    GridSpec grid = c.grid();
    SymbolTable table(grid, model);
    SpectralField u0 = build_initial_field(c.u0, grid, table, c.seed, "initial_data.u0");
    SpectralField u1 = build_initial_field(c.u1, grid, table, c.seed + 1, "initial_data.u1");
    for (const auto& [spec, f] : {std::pair{&c.u0, &u0}, std::pair{&c.u1, &u1}})
        if (spec->value("zero_mean", false) && std::abs((*f)[0]) > 1e-14)
            throw ConfigError("initial data flagged zero_mean has mean " + fmt17(std::abs((*f)[0])));
    DataNorms dn = data_norms(u0, u1, c.analysis.s);
    auto start = std::chrono::steady_clock::now();
    Trajectory traj = run(u0, u1, model, c.integrator, c.t_end, checkpoint_times(c));
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {c, std::move(model), rep, std::move(table), std::move(u0), std::move(u1), dn, std::move(traj), secs};
}

struct AnalysisResult {
    NormSeries series;
    std::vector<std::pair<std::string, RateFit>> rates;
    json summary = json::object();
    std::vector<std::string> failures;
};

/// Per-interval energy balance over consecutive checkpoints.
inline json energy_summary(const std::vector<SimulationState>& states) {
    json out = json::object();
    if (states.size() < 2) return out;
    const double e0 = states.front().diagnostics.energy;
    double worst = 0.0, worst_trap = 0.0;
    bool monotone = true;
    json rows = json::array();
    for (std::size_t i = 1; i < states.size(); ++i) {
        EnergyReport r = energy_monitor(states[i - 1], states[i], e0);
        const double dt = states[i].t - states[i - 1].t;
        const double per_time = r.relative_residual / dt;
        worst = std::max(worst, per_time);
        worst_trap = std::max(worst_trap, (e0 > 0.0 ? r.trapezoid_residual / e0 : r.trapezoid_residual) / dt);
        monotone = monotone && r.energy_after <= r.energy_before;
        rows.push_back({{"t", states[i].t}, {"energy", r.energy_after}, {"dissipation", r.dissipation},
                        {"residual_per_time", per_time}, {"lyapunov", r.lyapunov_after}});
    }
    out["initial_energy"] = e0;
    out["max_relative_residual_per_time"] = worst;
    out["max_trapezoid_residual_per_time"] = worst_trap;
    out["energy_nonincreasing"] = monotone;
    out["intervals"] = rows;
    return out;
}

/// Symbol-level identities on the run grid.
inline json symbol_checks(const SymbolTable& table) {
    double residual = 0.0, g0 = 0.0, h0 = 0.0, swap = 0.0, semigroup = 0.0;
    const double t = 1.7, s = 2.3;
    for (std::size_t p = 0; p < table.size(); ++p) {
        const double r2 = table.r2(p), gamma = table.gamma(p);
        residual = std::max(residual, characteristic_residual(r2, gamma, table.lambda_plus()[p]));
        residual = std::max(residual, characteristic_residual(r2, gamma, table.lambda_minus()[p]));
        Propagator z = propagator(r2, gamma, 0.0);
        g0 = std::max(g0, std::abs(z.g));
        h0 = std::max(h0, std::abs(z.h - 1.0));
        Propagator a = propagator_from_roots(table.lambda_plus()[p], table.lambda_minus()[p], t);
        Propagator b = propagator_from_roots(table.lambda_minus()[p], table.lambda_plus()[p], t);
        swap = std::max({swap, std::abs(a.g - b.g), std::abs(a.h - b.h)});
        ModeFlow ab = ModeFlow::at(r2, gamma, s) * ModeFlow::at(r2, gamma, t);
        ModeFlow direct = ModeFlow::at(r2, gamma, t + s);
        for (int i = 0; i < 4; ++i) semigroup = std::max(semigroup, std::abs(ab.m[i] - direct.m[i]));
    }
    return {{"characteristic_residual", residual},
            {"g_at_zero", g0},
            {"h_at_zero_minus_one", h0},
            {"root_swap", swap},
            {"semigroup", semigroup},
            {"passed", residual < 1e-12 && g0 < 1e-12 && h0 < 1e-12 && swap < 1e-12 && semigroup < 1e-10}};
}

inline std::vector<Descriptor> default_rate_descriptors(const RunConfig& c) {
    std::vector<Descriptor> out;
    for (int k : c.analysis.orders) out.push_back({Quantity::U, k, NormType::L2});
    out.push_back({Quantity::Ut, 0, NormType::L2});
    if (c.analysis.profile) {
        out.push_back({Quantity::ProfileError, 0, NormType::L2});
        out.push_back({Quantity::LinearMinusG0, 0, NormType::L2});
    }
    return out;
}

inline AnalysisResult analyze(const Simulation& sim) {
    const RunConfig& c = sim.config;
    const auto& states = sim.trajectory.states;
    AnalysisResult res;
    if (states.empty()) return res;

    std::vector<Descriptor> ds;
    auto want = [&ds](const Descriptor& d) {
        if (std::find(ds.begin(), ds.end(), d) == ds.end()) ds.push_back(d);
    };
    for (int k : c.analysis.orders) {
        want({Quantity::U, k, NormType::L2});
        want({Quantity::Ut, k, NormType::L2});
    }
    for (const auto& n : c.analysis.norms) want(parse_descriptor(n));
    std::vector<Descriptor> rate_ds;
    if (!c.analysis.rates) rate_ds = default_rate_descriptors(c);
    else
        for (const auto& r : *c.analysis.rates) rate_ds.push_back(parse_descriptor(r));
    for (const auto& d : rate_ds) want(d);

    std::optional<ProfileContext> ctx;
    bool needs_ctx = c.analysis.profile;
    for (const auto& d : ds) needs_ctx = needs_ctx || (d.quantity != Quantity::U && d.quantity != Quantity::Ut);
    if (needs_ctx) ctx.emplace(sim.table, states.front().u, states.front().ut);
    res.series = norm_series(states, ds, ctx ? &*ctx : nullptr);
    if (c.analysis.profile) res.series.merge(profile_error(states, *ctx, c.analysis.orders));
    if (ctx) res.summary["mass"] = ctx->mass();

    auto windows = c.analysis.fit_windows;
    if (windows.empty()) windows.emplace_back(c.t_end / 10.0, c.t_end);
    json rates = json::array();
    for (const auto& d : rate_ds) {
        for (auto [lo, hi] : windows) {
            try {
                RateFit f = fit_rate(res.series, d, lo, hi);
                res.rates.emplace_back(d.name(), f);
                rates.push_back({{"descriptor", d.name()}, {"exponent", f.exponent}, {"residual", f.residual},
                                 {"t_lo", lo}, {"t_hi", hi}, {"samples", f.samples}});
            } catch (const AnalysisError& e) {
                res.failures.push_back("rate " + d.name() + " on [" + fmt17(lo) + ", " + fmt17(hi) + "]: " + e.what());
            }
        }
    }
    res.summary["rates"] = rates;

    if (c.analysis.weighted_norms) {
        WeightedEnergy we = weighted_energy_norms(states, c.analysis.s);
        OptimalDecay od = optimal_decay_norms(states, c.analysis.s, c.dim);
        res.summary["weighted_norms"] = {
            {"s", c.analysis.s},      {"E_T", we.E},
            {"D_T", we.D},            {"M0_T", od.M0},
            {"M1_T", od.M1},          {"orders_M0", od.orders_m0},
            {"orders_M1", od.orders_m1},
            {"truncation_flagged", we.guard.flagged || od.guard.flagged},
            {"truncation_tail", std::max(we.guard.tail_fraction, od.guard.tail_fraction)}};
    }
    if (c.analysis.linfty) {
        const double d = c.analysis.d.value_or(default_decay_weight(c.dim));
        LinftyIntegrals li = linfty_integrals(states, d, c.dim);
        res.summary["linfty"] = {{"d", d}, {"L_T", li.L}, {"N_d_T", li.N_d}};
    }
    if (c.analysis.energy) res.summary["energy"] = energy_summary(states);
    if (c.analysis.symbols) {
        json sc = symbol_checks(sim.table);
        if (!sc["passed"].get<bool>()) res.failures.push_back("symbol identities out of tolerance");
        res.summary["symbols"] = sc;
    }
    if (c.analysis.envelope) {
        json env = json::array();
        for (const auto& s : states)
            env.push_back({{"t", s.t}, {"sup_smoothing_symbol_beyond_1", smoothing_envelope(sim.table, s.t, 1.0)}});
        res.summary["smoothing_envelope"] = env;
    }
    return res;
}

struct RunResult {
    int status = kExitOk;
    std::string message;
    fs::path directory;
    json manifest;
};

inline std::string sanitize(const std::string& s) {
    std::string out;
    for (char ch : s) out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-') ? ch : '_';
    return out;
}

inline void write_outputs(const Simulation& sim, const AnalysisResult& res, const fs::path& dir, json& manifest) {
    fs::create_directories(dir);
    const RunConfig& c = sim.config;
    const auto& states = sim.trajectory.states;
    {
        std::ofstream out(dir / "norms.csv");
        out << "t,descriptor,value\n";
        for (const auto& r : res.series.records())
            for (const auto& [name, v] : r.values) out << fmt17(r.t) << ",\"" << name << "\"," << fmt17(v) << "\n";
    }
    {
        std::ofstream out(dir / "rates.csv");
        out << "descriptor,exponent,residual,window\n";
        for (const auto& [name, f] : res.rates)
            out << "\"" << name << "\"," << fmt17(f.exponent) << "," << fmt17(f.residual) << "," << fmt17(f.t_lo)
                << ":" << fmt17(f.t_hi) << "\n";
    }
    {
        std::ofstream out(dir / "diagnostics.csv");
        out << "t,energy,dissipation_accum,max_hessian\n";
        for (const auto& s : states)
            out << fmt17(s.t) << "," << fmt17(s.diagnostics.energy) << "," << fmt17(s.diagnostics.dissipation_accum)
                << "," << fmt17(s.diagnostics.max_hessian) << "\n";
    }
    fs::create_directories(dir / "plots");
    for (const auto& name : res.series.descriptors()) {
        std::ofstream out(dir / "plots" / (sanitize(name) + ".dat"));
        out << "# log(1+t) log(" << name << ")\n";
        for (auto [t, v] : res.series.samples(name))
            if (v > 0.0) out << fmt17(std::log1p(t)) << " " << fmt17(std::log(v)) << "\n";
    }
    if (c.analysis.envelope) {
        std::ofstream out(dir / "envelope.csv");
        out << "t,k,norm,fitted_rate\n";
        for (int k : c.analysis.orders) {
            Descriptor d{Quantity::U, k, NormType::L2};
            double rate = std::nan("");
            auto windows = c.analysis.fit_windows;
            if (windows.empty()) windows.emplace_back(c.t_end / 10.0, c.t_end);
            try {
                rate = fit_rate(res.series, d, windows.front().first, windows.front().second).exponent;
            } catch (const PlateError&) {
            }
            for (auto [t, v] : res.series.samples(d))
                out << fmt17(t) << "," << k << "," << fmt17(v) << "," << fmt17(rate) << "\n";
        }
    }
    json fields = json::array();
    if (c.analysis.fields != "none" && !states.empty()) {
        fs::create_directories(dir / "fields");
        for (std::size_t i = 0; i < states.size(); ++i) {
            if (c.analysis.fields == "final" && i + 1 != states.size()) continue;
            char stem[32];
            std::snprintf(stem, sizeof stem, "%04zu", i);
            json extra{{"t", states[i].t}};
            write_field(dir / "fields" / (std::string("u_") + stem), inverse_transform(states[i].u), extra);
            write_field(dir / "fields" / (std::string("ut_") + stem), inverse_transform(states[i].ut), extra);
            fields.push_back({{"t", states[i].t}, {"u", std::string("fields/u_") + stem},
                              {"ut", std::string("fields/ut_") + stem}});
        }
    }
    manifest["fields"] = fields;
    json diag = json::array();
    for (const auto& s : states)
        diag.push_back({{"t", s.t}, {"energy", s.diagnostics.energy},
                        {"dissipation_accum", s.diagnostics.dissipation_accum},
                        {"max_hessian", s.diagnostics.max_hessian}});
    manifest["checkpoints"] = diag;
    std::ofstream(dir / "manifest.json") << manifest.dump(2) << "\n";
}

/// The whole pipeline with artifacts under `dir`. Never throws for run-level
/// failures; they map onto the exit statuses.
inline RunResult run_experiment(const RunConfig& config, const fs::path& dir) {
    RunResult result;
    result.directory = dir;
    json manifest{{"config", config.to_json()}, {"grid", grid_to_json(config.grid())}};
    auto fail = [&](int status, const std::string& msg) {
        result.status = status;
        result.message = msg;
        manifest["status"] = status;
        manifest["error"] = msg;
        fs::create_directories(dir);
        std::ofstream(dir / "manifest.json") << manifest.dump(2) << "\n";
        result.manifest = manifest;
        return result;
    };
    std::optional<Simulation> sim;
    try {
        sim.emplace(simulate(config));
    } catch (const ConfigError& e) {
        return fail(kExitConfig, e.what());
    } catch (const StructureViolation& e) {
        return fail(kExitStructure, e.what());
    } catch (const InvalidInput& e) {
        return fail(kExitConfig, e.what());
    } catch (const StepFailure& e) {
        return fail(kExitAnalysis, e.what());
    }
    manifest["validation"] = sim->validation.to_json();
    manifest["data_norms"] = sim->data.to_json();
    manifest["checkpoint_times"] = checkpoint_times(config);
    manifest["nonlinear_evaluations"] = sim->trajectory.nonlinear_evaluations;
    if (sim->trajectory.abort) {
        const auto& a = *sim->trajectory.abort;
        manifest["bound_violation"] = {{"time", a.time}, {"hessian", a.hessian}, {"bound", a.bound}};
    }
    AnalysisResult res;
    try {
        res = analyze(*sim);
    } catch (const PlateError& e) {
        res.failures.push_back(e.what());
    }
    manifest["analysis"] = res.summary;
    manifest["analysis_failures"] = res.failures;
    if (sim->trajectory.abort) {
        result.status = kExitBound;
        result.message = sim->trajectory.abort->reason;
    } else if (!res.failures.empty()) {
        result.status = kExitAnalysis;
        result.message = res.failures.front();
    }
    manifest["status"] = result.status;
    if (!result.message.empty()) manifest["error"] = result.message;
    write_outputs(*sim, res, dir, manifest);
    result.manifest = manifest;
    return result;
}

/// Parses, applies overrides and runs. Configuration errors become status 2.
inline RunResult run_from_json(json doc, const std::vector<std::string>& overrides, const fs::path& out_dir) {
    RunConfig c;
    try {
        for (const auto& o : overrides) apply_override(doc, o);
        c = RunConfig::from_json(doc);
    } catch (const ConfigError& e) {
        RunResult r;
        r.status = kExitConfig;
        r.message = e.what();
        return r;
    }
    fs::path dir = !out_dir.empty() ? out_dir : (!c.output.empty() ? fs::path(c.output) : fs::path("runs") / c.name);
    return run_experiment(c, dir);
}

// ---------------------------------------------------------------------------
// Comparison and sweeps

inline json read_manifest(const fs::path& dir) {
    try {
        return load_json_file(dir / "manifest.json");
    } catch (const ConfigError& e) {
        throw InvalidInput(e.what());
    }
}

/// Field L^2 differences at common checkpoints and exponent differences per
/// common descriptor and window.
inline json compare_runs(const fs::path& a, const fs::path& b) {
    json ma = read_manifest(a), mb = read_manifest(b);
    if (ma.at("grid") != mb.at("grid")) throw InvalidInput("runs use different grids");
    auto times = [](const json& m) {
        std::map<double, json> out;
        if (m.contains("fields"))
            for (const auto& f : m.at("fields")) out[f.at("t").get<double>()] = f;
        return out;
    };
    auto fa = times(ma), fb = times(mb);
    json fields = json::array();
    double worst = 0.0;
    for (const auto& [t, ea] : fa) {
        auto it = fb.find(t);
        if (it == fb.end()) continue;
        json row{{"t", t}};
        for (const char* key : {"u", "ut"}) {
            PhysicalField x = read_field(a / ea.at(key).get<std::string>());
            PhysicalField y = read_field(b / it->second.at(key).get<std::string>());
            PhysicalField diff(x.grid);
            for (std::size_t p = 0; p < diff.values.size(); ++p) diff.values[p] = x.values[p] - y.values[p];
            double d = l2_norm(diff), ref = l2_norm(x);
            row[std::string(key) + "_l2_diff"] = d;
            row[std::string(key) + "_relative"] = ref > 0.0 ? d / ref : d;
            worst = std::max(worst, d);
        }
        fields.push_back(row);
    }
    if (!fa.empty() && !fb.empty() && fields.empty()) throw InvalidInput("runs share no checkpoint times");
    json rates = json::array();
    auto rate_list = [](const json& m) {
        std::map<std::string, double> out;
        if (m.contains("analysis") && m.at("analysis").contains("rates"))
            for (const auto& r : m.at("analysis").at("rates"))
                out[r.at("descriptor").get<std::string>() + "@" + fmt17(r.at("t_lo").get<double>()) + ":" +
                    fmt17(r.at("t_hi").get<double>())] = r.at("exponent").get<double>();
        return out;
    };
    auto ra = rate_list(ma), rb = rate_list(mb);
    for (const auto& [k, v] : ra)
        if (auto it = rb.find(k); it != rb.end())
            rates.push_back({{"descriptor", k}, {"a", v}, {"b", it->second}, {"difference", v - it->second}});
    return {{"a", a.string()}, {"b", b.string()}, {"fields", fields}, {"max_field_l2_diff", worst}, {"rates", rates}};
}

struct SweepEntry {
    std::string value;
    RunResult result;
};

/// One run per value of `key`, spread over `jobs` threads; each run writes to
/// its own subdirectory of `out_dir`.
inline std::vector<SweepEntry> sweep(const json& base, const std::vector<std::string>& overrides,
                                     const std::string& key, const std::vector<std::string>& values,
                                     const fs::path& out_dir, int jobs) {
    std::vector<SweepEntry> entries(values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < values.size(); i = next++) {
            std::vector<std::string> ov = overrides;
            ov.push_back(key + "=" + values[i]);
            entries[i].value = values[i];
            entries[i].result = run_from_json(base, ov, out_dir / sanitize(key + "=" + values[i]));
        }
    };
    std::vector<std::thread> pool;
    for (int j = 0; j < std::max(1, jobs); ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return entries;
}

}  // namespace plate
