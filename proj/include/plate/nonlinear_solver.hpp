#pragma once

// Time integration of
//     u_tt - Delta u_tt + b_{ab}(O) d^4 u + sum_ij d_i d_j g^{ij}(d^2 u) + u_t = 0
// through the Duhamel form
//     u(t0 + h) = [flow(h) (u, u_t)(t0)]_u - int_0^h G(h - s) (1 - Delta)^{-1} N(u(t0 + s)) ds,
// N = sum_ij d_i d_j g^{ij}(d^2 u). The linear flow is exact (closed-form
// symbols); the integral uses Gauss-Legendre collocation whose node values are
// the fixed point of the local Duhamel map, found by Picard iteration.
// A Crank-Nicolson / extrapolated-forcing scheme is kept for cross-checks.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "plate/errors.hpp"
#include "plate/gauss_legendre.hpp"
#include "plate/linear_symbols.hpp"
#include "plate/material_model.hpp"
#include "plate/spectral_grid.hpp"

namespace plate {

enum class Scheme { DuhamelEtd, SemiImplicitCn };

inline std::string to_string(Scheme s) { return s == Scheme::DuhamelEtd ? "duhamel_etd" : "semi_implicit_cn"; }

inline Scheme scheme_from_string(const std::string& s) {
    if (s == "duhamel_etd") return Scheme::DuhamelEtd;
    if (s == "semi_implicit_cn") return Scheme::SemiImplicitCn;
    throw InvalidInput("unknown integrator scheme '" + s + "'");
}

struct IntegratorConfig {
    double dt = 0.1;
    Scheme scheme = Scheme::DuhamelEtd;
    int quadrature_substeps = 3;
    int picard_iters = 3;
    double picard_tol = 1e-10;
    double dealias_fraction = kTwoThirds;
    double hessian_bound = 0.1;
    int max_halvings = 6;

    void validate() const {
        if (!(dt > 0.0)) throw InvalidInput("dt must be positive");
        if (!(picard_tol > 0.0)) throw InvalidInput("picard_tol must be positive");
        if (quadrature_substeps < 1 || quadrature_substeps > 8)
            throw InvalidInput("quadrature_substeps must lie in [1, 8]");
        if (picard_iters < 1) throw InvalidInput("picard_iters must be at least 1");
        if (!(dealias_fraction > 0.0) || dealias_fraction > 1.0)
            throw InvalidInput("dealias_fraction must lie in (0, 1]");
        if (!(hessian_bound > 0.0)) throw InvalidInput("hessian_bound must be positive");
        if (max_halvings < 0) throw InvalidInput("max_halvings must be nonnegative");
    }

    nlohmann::json to_json() const {
        return {{"dt", dt},
                {"scheme", to_string(scheme)},
                {"quadrature_substeps", quadrature_substeps},
                {"picard_iters", picard_iters},
                {"picard_tol", picard_tol},
                {"dealias_fraction", dealias_fraction},
                {"hessian_bound", hessian_bound},
                {"max_halvings", max_halvings}};
    }
};

struct Diagnostics {
    double energy = 0.0;             // 1/2 ||u_t||_{H^1}^2 + int phi(d^2 u)
    double dissipation_accum = 0.0;  // int_0^t ||u_t||_{L^2}^2
    double max_hessian = 0.0;        // running max of ||d^2 u||_inf seen by the integrator
};

struct SimulationState {
    double t = 0.0;
    SpectralField u;
    SpectralField ut;
    Diagnostics diagnostics;
};

/// Squared L^2 norm by Plancherel.
inline double l2_squared(const SpectralField& f) {
    double acc = 0.0;
    for (std::size_t p = 0; p < f.size(); ++p) acc += std::norm(f[p]);
    return acc * f.grid().spectral_weight();
}

class Integrator {
public:
    Integrator(const MaterialModel& model, const GridSpec& grid, IntegratorConfig cfg)
        : model_(model), grid_(grid), cfg_(cfg), table_(grid, model),
          eval_(model, grid, NonlinearOptions{cfg.hessian_bound, cfg.dealias_fraction, FluxForm::Residual}) {
        cfg_.validate();
        // Modes sharing (|xi|^2, gamma) share every symbol; weights are stored per class.
        std::map<std::pair<double, double>, std::uint32_t> classes;
        mode_class_.resize(grid.size());
        for (std::size_t p = 0; p < grid.size(); ++p) {
            auto key = std::make_pair(table_.r2(p), table_.gamma(p));
            auto [it, inserted] = classes.emplace(key, static_cast<std::uint32_t>(class_r2_.size()));
            if (inserted) {
                class_r2_.push_back(key.first);
                class_gamma_.push_back(key.second);
            }
            mode_class_[p] = it->second;
        }
    }

    const GridSpec& grid() const { return grid_; }
    const IntegratorConfig& config() const { return cfg_; }
    const SymbolTable& symbols() const { return table_; }
    const MaterialModel& model() const { return model_; }
    NonlinearEvaluator& evaluator() { return eval_; }

    /// Dealiased data at t = 0 with diagnostics filled in.
    SimulationState initial_state(const SpectralField& u0, const SpectralField& u1) {
        if (!(u0.grid() == grid_) || !(u1.grid() == grid_)) throw InvalidInput("initial data on wrong grid");
        SimulationState s{0.0, dealias(u0, cfg_.dealias_fraction), dealias(u1, cfg_.dealias_fraction), {}};
        s.diagnostics.max_hessian = eval_.hessian_linf(s.u);
        s.diagnostics.energy = energy(s);
        last_forcing_.reset();
        return s;
    }

    double energy(const SimulationState& s) const {
        return 0.5 * std::pow(sobolev_norm(s.ut, 1), 2) + eval_.potential_integral(s.u);
    }

    /// One step of size h with the configured scheme.
    SimulationState step(const SimulationState& s, double h) {
        if (!(h > 0.0)) throw InvalidInput("step size must be positive");
        try {
            return cfg_.scheme == Scheme::DuhamelEtd ? step_etd(s, h) : step_cn(s, h);
        } catch (const BoundViolation& bv) {
            throw bv.at_time(s.t);
        }
    }

    /// Advances by h, halving the step on Picard failure up to max_halvings times.
    SimulationState advance(const SimulationState& s, double h, int depth = 0) {
        try {
            return step(s, h);
        } catch (const StepFailure& e) {
            if (depth >= cfg_.max_halvings)
                throw StepFailure(std::string(e.what()) + " (after " + std::to_string(depth) + " halvings, t = " +
                                  std::to_string(s.t) + ")");
            SimulationState mid = advance(s, 0.5 * h, depth + 1);
            return advance(mid, 0.5 * h, depth + 1);
        }
    }

    /// Number of nonlinear-term evaluations so far.
    long evaluations() const { return evaluations_; }

private:
    struct StepWeights {
        int q = 0;
        std::vector<double> nodes;    // c_k in (0, 1)
        std::vector<double> qweights; // Gauss weights on [0, 1]
        // Per class: flow_end(4), flow_nodes(4q), w_nodes(q*q), wt_nodes(q*q), w_end(q), wt_end(q).
        std::vector<double> data;
        std::size_t stride = 0;

        const double* at(std::uint32_t cls) const { return data.data() + cls * stride; }
    };

    const StepWeights& weights_for(double h) {
        auto it = weights_.find(h);
        if (it != weights_.end()) return it->second;
        if (weights_.size() > 8) weights_.clear();
        return weights_.emplace(h, build_weights(h)).first->second;
    }

    StepWeights build_weights(double h) const {
        const int q = cfg_.quadrature_substeps;
        const GaussRule& rule = gauss_legendre(q);
        StepWeights w;
        w.q = q;
        for (int k = 0; k < q; ++k) {
            w.nodes.push_back(0.5 * (rule.nodes[k] + 1.0));
            w.qweights.push_back(0.5 * rule.weights[k]);
        }
        w.stride = 4 + 4 * q + 2 * q * q + 2 * q;
        w.data.assign(class_r2_.size() * w.stride, 0.0);

        auto lagrange = [&](int j, double x) {
            double v = 1.0;
            for (int m = 0; m < q; ++m)
                if (m != j) v *= (x - w.nodes[m]) / (w.nodes[j] - w.nodes[m]);
            return v;
        };
        // Integrals int_0^a K(a - s) l_j(s/h) ds for K = G^ and G^_t.
        auto kernel_integrals = [&](double r2, double gamma, double a, double* wg, double* wgt) {
            const int order = std::clamp(16 + 4 * static_cast<int>(std::ceil(std::sqrt(gamma * r2) * a)), 16, 200);
            const GaussRule& inner = gauss_legendre(order);
            for (int j = 0; j < q; ++j) wg[j] = wgt[j] = 0.0;
            for (int i = 0; i < order; ++i) {
                double s = 0.5 * a * (inner.nodes[i] + 1.0);
                double ws = 0.5 * a * inner.weights[i];
                Propagator p = propagator(r2, gamma, a - s);
                for (int j = 0; j < q; ++j) {
                    double l = lagrange(j, s / h) * ws;
                    wg[j] += p.g * l;
                    wgt[j] += p.gt * l;
                }
            }
        };

        std::vector<double> wg(q), wgt(q);
        for (std::size_t c = 0; c < class_r2_.size(); ++c) {
            const double r2 = class_r2_[c], gamma = class_gamma_[c];
            const double inv = 1.0 / (1.0 + r2);
            double* d = w.data.data() + c * w.stride;
            ModeFlow end = ModeFlow::at(r2, gamma, h);
            std::copy(end.m.begin(), end.m.end(), d);
            for (int k = 0; k < q; ++k) {
                ModeFlow f = ModeFlow::at(r2, gamma, w.nodes[k] * h);
                std::copy(f.m.begin(), f.m.end(), d + 4 + 4 * k);
            }
            if (model_.is_linear()) continue;
            double* wn = d + 4 + 4 * q;
            double* wtn = wn + q * q;
            double* we = wtn + q * q;
            double* wte = we + q;
            for (int k = 0; k < q; ++k) {
                kernel_integrals(r2, gamma, w.nodes[k] * h, wg.data(), wgt.data());
                for (int j = 0; j < q; ++j) {
                    wn[k * q + j] = wg[j] * inv;
                    wtn[k * q + j] = wgt[j] * inv;
                }
            }
            kernel_integrals(r2, gamma, h, wg.data(), wgt.data());
            for (int j = 0; j < q; ++j) {
                we[j] = wg[j] * inv;
                wte[j] = wgt[j] * inv;
            }
        }
        return w;
    }

    SpectralField nonlinear(const SpectralField& u, double& max_hessian) {
        ++evaluations_;
        SpectralField n = eval_(u);
        max_hessian = std::max(max_hessian, eval_.last_hessian_linf());
        return n;
    }

    static double spectral_norm(const SpectralField& f) { return std::sqrt(l2_squared(f)); }

    SimulationState step_etd(const SimulationState& s, double h) {
        const StepWeights& w = weights_for(h);
        const int q = w.q;
        const std::size_t size = grid_.size();
        const bool linear = model_.is_linear();

        std::vector<SpectralField> lin_u(q, SpectralField(grid_)), lin_ut(q, SpectralField(grid_));
        for (std::size_t p = 0; p < size; ++p) {
            const double* d = w.at(mode_class_[p]);
            for (int k = 0; k < q; ++k) {
                const double* f = d + 4 + 4 * k;
                lin_u[k][p] = f[0] * s.u[p] + f[1] * s.ut[p];
                lin_ut[k][p] = f[2] * s.u[p] + f[3] * s.ut[p];
            }
        }

        SimulationState out{s.t + h, SpectralField(grid_), SpectralField(grid_), s.diagnostics};
        std::vector<SpectralField> forcing;
        std::vector<SpectralField> nodes = lin_u;
        if (!linear) {
            double scale = 0.0;
            for (const auto& f : lin_u) scale = std::max(scale, spectral_norm(f));
            auto node_values = [&](const std::vector<SpectralField>& F) {
                std::vector<SpectralField> u = lin_u;
                for (std::size_t p = 0; p < size; ++p) {
                    const double* wn = w.at(mode_class_[p]) + 4 + 4 * q;
                    for (int k = 0; k < q; ++k)
                        for (int j = 0; j < q; ++j) u[k][p] -= wn[k * q + j] * F[j][p];
                }
                return u;
            };
            forcing.assign(q, nonlinear(s.u, out.diagnostics.max_hessian));
            nodes = node_values(forcing);
            bool converged = false;
            double change = 0.0;
            for (int it = 0; it < cfg_.picard_iters; ++it) {
                for (int j = 0; j < q; ++j) forcing[j] = nonlinear(nodes[j], out.diagnostics.max_hessian);
                std::vector<SpectralField> next = node_values(forcing);
                change = 0.0;
                for (int k = 0; k < q; ++k) change = std::max(change, spectral_norm(next[k] - nodes[k]));
                nodes = std::move(next);
                if (change <= cfg_.picard_tol * scale) {
                    converged = true;
                    break;
                }
            }
            if (!converged)
                throw StepFailure("Picard iteration did not converge (relative change " +
                                  std::to_string(scale > 0.0 ? change / scale : change) + ")");
        }

        double diss = 0.0;
        std::vector<SpectralField> node_ut = lin_ut;
        for (std::size_t p = 0; p < size; ++p) {
            const double* d = w.at(mode_class_[p]);
            Complex u = d[0] * s.u[p] + d[1] * s.ut[p];
            Complex ut = d[2] * s.u[p] + d[3] * s.ut[p];
            if (!linear) {
                const double* wtn = d + 4 + 4 * q + q * q;
                const double* we = wtn + q * q;
                const double* wte = we + q;
                for (int j = 0; j < q; ++j) {
                    u -= we[j] * forcing[j][p];
                    ut -= wte[j] * forcing[j][p];
                    for (int k = 0; k < q; ++k) node_ut[k][p] -= wtn[k * q + j] * forcing[j][p];
                }
            }
            out.u[p] = u;
            out.ut[p] = ut;
        }
        for (int k = 0; k < q; ++k) diss += w.qweights[k] * l2_squared(node_ut[k]);
        out.diagnostics.dissipation_accum += h * diss;
        return out;
    }

    SimulationState step_cn(const SimulationState& s, double h) {
        SimulationState out{s.t + h, SpectralField(grid_), SpectralField(grid_), s.diagnostics};
        SpectralField forcing(grid_);
        if (!model_.is_linear()) {
            SpectralField now = nonlinear(s.u, out.diagnostics.max_hessian);
            forcing = now;
            if (last_forcing_ && std::abs(last_forcing_->first - (s.t - h)) < 1e-9 * std::max(1.0, s.t))
                forcing = 1.5 * now - 0.5 * last_forcing_->second;
            last_forcing_ = std::make_pair(s.t, std::move(now));
        }
        for (std::size_t p = 0; p < grid_.size(); ++p) {
            const double r2 = table_.r2(p), a = 1.0 + r2;
            const double k = table_.gamma(p) * r2 * r2 / a;  // stiffness / inertia
            const double d = 1.0 / a;                        // damping / inertia
            // y' = [[0, 1], [-k, -d]] y + [0, -N/a]
            const double hh = 0.5 * h;
            // (I - hh A) y1 = (I + hh A) y0 + h f
            const Complex u0 = s.u[p], v0 = s.ut[p];
            const Complex rhs_u = u0 + hh * v0;
            const Complex rhs_v = v0 + hh * (-k * u0 - d * v0) - h * forcing[p] / a;
            // [[1, -hh], [hh k, 1 + hh d]]
            const double det = (1.0 + hh * d) + hh * hh * k;
            out.u[p] = ((1.0 + hh * d) * rhs_u + hh * rhs_v) / det;
            out.ut[p] = (-hh * k * rhs_u + rhs_v) / det;
        }
        out.diagnostics.dissipation_accum += 0.5 * h * (l2_squared(s.ut) + l2_squared(out.ut));
        return out;
    }

    MaterialModel model_;
    GridSpec grid_;
    IntegratorConfig cfg_;
    SymbolTable table_;
    NonlinearEvaluator eval_;
    std::vector<std::uint32_t> mode_class_;
    std::vector<double> class_r2_;
    std::vector<double> class_gamma_;
    std::map<double, StepWeights> weights_;
    std::optional<std::pair<double, SpectralField>> last_forcing_;
    long evaluations_ = 0;
};

/// One step of size cfg.dt.
inline SimulationState step_duhamel(const SimulationState& state, const MaterialModel& model,
                                    const IntegratorConfig& cfg) {
    IntegratorConfig c = cfg;
    c.scheme = Scheme::DuhamelEtd;
    Integrator integ(model, state.u.grid(), c);
    SimulationState out = integ.step(state, c.dt);
    out.diagnostics.energy = integ.energy(out);
    return out;
}

struct AbortInfo {
    double time = 0.0;
    double hessian = 0.0;
    double bound = 0.0;
    std::string reason;
};

struct Trajectory {
    std::vector<SimulationState> states;
    std::optional<AbortInfo> abort;
    long nonlinear_evaluations = 0;

    bool completed() const { return !abort.has_value(); }
};

/// Integrates to t_end recording states at the (sorted) checkpoint times. A
/// bound violation ends the run cleanly with `abort` set; exhausted step
/// halvings propagate as StepFailure.
inline Trajectory run(const SpectralField& u0, const SpectralField& u1, const MaterialModel& model,
                      const IntegratorConfig& cfg, double t_end, std::vector<double> checkpoints) {
    if (!(t_end > 0.0)) throw InvalidInput("t_end must be positive");
    if (!std::is_sorted(checkpoints.begin(), checkpoints.end()))
        throw InvalidInput("checkpoints must be sorted");
    for (double c : checkpoints)
        if (c < 0.0 || c > t_end * (1.0 + 1e-12)) throw InvalidInput("checkpoint outside [0, t_end]");
    if (checkpoints.empty() || checkpoints.back() < t_end) checkpoints.push_back(t_end);

    Integrator integ(model, u0.grid(), cfg);
    Trajectory traj;
    SimulationState state;
    try {
        state = integ.initial_state(u0, u1);
        if (state.diagnostics.max_hessian > cfg.hessian_bound)
            throw BoundViolation(state.diagnostics.max_hessian, cfg.hessian_bound, 0.0);
    } catch (const BoundViolation& bv) {
        traj.abort = AbortInfo{0.0, bv.value(), bv.bound(), bv.what()};
        return traj;
    }

    const double snap = 1e-9 * cfg.dt;
    try {
        for (double target : checkpoints) {
            while (target - state.t > snap) {
                double h = std::min(cfg.dt, target - state.t);
                if (target - (state.t + h) < snap) h = target - state.t;
                state = integ.advance(state, h);
                if (std::abs(state.t - target) <= snap) state.t = target;
            }
            if (model.is_linear()) {
                state.diagnostics.max_hessian =
                    std::max(state.diagnostics.max_hessian, integ.evaluator().hessian_linf(state.u));
                if (state.diagnostics.max_hessian > cfg.hessian_bound)
                    throw BoundViolation(state.diagnostics.max_hessian, cfg.hessian_bound, state.t);
            }
            state.diagnostics.energy = integ.energy(state);
            if (traj.states.empty() || traj.states.back().t < state.t || target == 0.0)
                if (traj.states.empty() || traj.states.back().t != state.t) traj.states.push_back(state);
        }
    } catch (const BoundViolation& bv) {
        traj.abort = AbortInfo{bv.time(), bv.value(), bv.bound(), bv.what()};
    }
    traj.nonlinear_evaluations = integ.evaluations();
    return traj;
}

struct EnergyReport {
    double energy_before = 0.0;
    double energy_after = 0.0;
    double dissipation = 0.0;           // from the integrator's accumulated quadrature
    double residual = 0.0;              // |dE + dissipation|
    double relative_residual = 0.0;     // residual / E(0)
    double trapezoid_residual = 0.0;    // same with the trapezoid rule on the two endpoints
    double lyapunov_before = 0.0;       // 1/2 ||u||^2 + <u_t, u - Delta u>
    double lyapunov_after = 0.0;
};

inline double lyapunov_functional(const SpectralField& u, const SpectralField& ut) {
    const GridSpec& g = u.grid();
    double cross = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p)
        cross += (1.0 + norm_squared(g.wavevector(p))) * std::real(std::conj(ut[p]) * u[p]);
    return 0.5 * l2_squared(u) + cross * g.spectral_weight();
}

/// Discrete check of d/dt {1/2 ||u_t||_{H^1}^2 + int phi(d^2 u)} + ||u_t||^2 = 0
/// between two states; energies must already be filled in.
inline EnergyReport energy_monitor(const SimulationState& before, const SimulationState& after,
                                   std::optional<double> initial_energy = std::nullopt) {
    EnergyReport r;
    r.energy_before = before.diagnostics.energy;
    r.energy_after = after.diagnostics.energy;
    r.dissipation = after.diagnostics.dissipation_accum - before.diagnostics.dissipation_accum;
    const double de = r.energy_after - r.energy_before;
    r.residual = std::abs(de + r.dissipation);
    const double e0 = initial_energy.value_or(r.energy_before);
    r.relative_residual = e0 > 0.0 ? r.residual / e0 : r.residual;
    const double trap = 0.5 * (after.t - before.t) * (l2_squared(before.ut) + l2_squared(after.ut));
    r.trapezoid_residual = std::abs(de + trap);
    r.lyapunov_before = lyapunov_functional(before.u, before.ut);
    r.lyapunov_after = lyapunov_functional(after.u, after.ut);
    return r;
}

/// int phi(d^2 u) / ||d^2 u||^2_{L^2}; requires ||d^2 u||_inf <= hessian_bound.
inline double positivity_check(const MaterialModel& model, const SpectralField& u, double hessian_bound = 0.1) {
    NonlinearEvaluator eval(model, u.grid(), NonlinearOptions{hessian_bound, 1.0, FluxForm::Residual});
    double linf = eval.hessian_linf(u);
    if (linf > hessian_bound) throw BoundViolation(linf, hessian_bound);
    const double d2 = std::pow(homogeneous_norm(u, 2), 2);
    if (d2 == 0.0) return 0.0;
    return eval.potential_integral(u) / d2;
}

}  // namespace plate
