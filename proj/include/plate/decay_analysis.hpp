#pragma once

// Post-processing of trajectories: regularity-loss indices, norm time series,
// power-law fits and the time-weighted norms E(T), D(T), M0(T), M1(T), L(T),
// N_d(T). Sups and integrals are taken over the recorded checkpoints only, so
// every value is a lower bound of its continuum counterpart.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "plate/errors.hpp"
#include "plate/linear_symbols.hpp"
#include "plate/nonlinear_solver.hpp"
#include "plate/spectral_grid.hpp"

namespace plate {

struct RegularityIndices {
    int k = 0;
    int n = 1;
    int sigma0 = 0;
    int sigma1 = 0;
    int sigma = 0;
    std::optional<int> s_min;  // s(n), defined for n >= 2
};

inline int floor_div(int a, int b) {
    int q = a / b;
    return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

inline RegularityIndices regularity_indices(int k, int n) {
    if (k < 0) throw InvalidInput("derivative order k must be nonnegative");
    if (n < 1) throw InvalidInput("dimension n must be positive");
    RegularityIndices r;
    r.k = k;
    r.n = n;
    r.sigma0 = k + floor_div(k + 1, 2);
    r.sigma1 = k + floor_div(n + 2 * k - 1, 4);
    r.sigma = std::max(r.sigma0, r.sigma1);
    if (n == 2) r.s_min = 8;
    else if (n == 3) r.s_min = 6;
    else if (n >= 4) r.s_min = 3 * (n / 4) + 5;
    return r;
}

// ---------------------------------------------------------------------------
// Norm descriptors and series

enum class Quantity {
    U,                 // u
    Ut,                // u_t
    ProfileError,      // u - M G0(., t + 1)
    LinearSolution,    // u_bar, the solution of the linearized problem
    NonlinearPart,     // u - u_bar
    LinearMinusG0,     // u_bar - G0(t) * (u0 + u1)
    G0MinusProfile,    // G0(t) * (u0 + u1 - M phi0)
};

enum class NormType { L2, Hs, Linf, L1 };

struct Descriptor {
    Quantity quantity = Quantity::U;
    int k = 0;
    NormType norm = NormType::L2;
    int s = 0;  // Sobolev order for NormType::Hs

    std::string name() const {
        static const char* q[] = {"u", "u_t", "u-MG0(t+1)", "u_bar", "u-u_bar", "u_bar-G0*(u0+u1)",
                                  "G0*(u0+u1-Mphi0)"};
        std::string out = std::string(q[static_cast<int>(quantity)]) + ":k=" + std::to_string(k) + ":";
        switch (norm) {
        case NormType::L2: return out + "L2";
        case NormType::Hs: return out + "H" + std::to_string(s);
        case NormType::Linf: return out + "Linf";
        case NormType::L1: return out + "L1";
        }
        return out;
    }

    bool operator==(const Descriptor&) const = default;
};

inline Descriptor parse_descriptor(const std::string& text) {
    for (int q = 0; q <= static_cast<int>(Quantity::G0MinusProfile); ++q) {
        Descriptor d{static_cast<Quantity>(q)};
        std::string prefix = d.name();
        prefix = prefix.substr(0, prefix.find(":k="));
        if (text.rfind(prefix + ":k=", 0) != 0) continue;
        std::string rest = text.substr(prefix.size() + 3);
        auto colon = rest.find(':');
        if (colon == std::string::npos) break;
        try {
            d.k = std::stoi(rest.substr(0, colon));
        } catch (const std::exception&) {
            break;
        }
        std::string norm = rest.substr(colon + 1);
        if (norm == "L2") d.norm = NormType::L2;
        else if (norm == "Linf") d.norm = NormType::Linf;
        else if (norm == "L1") d.norm = NormType::L1;
        else if (norm.size() > 1 && norm[0] == 'H') {
            d.norm = NormType::Hs;
            try {
                d.s = std::stoi(norm.substr(1));
            } catch (const std::exception&) {
                break;
            }
        } else break;
        if (d.name() == text) return d;
        break;
    }
    throw InvalidInput("unrecognized norm descriptor '" + text + "'");
}

class NormSeries {
public:
    struct Record {
        double t = 0.0;
        std::map<std::string, double> values;
    };

    /// Appends a value; t must not decrease, equal t merges into the last record.
    void add(double t, const std::string& descriptor, double value) {
        if (!std::isfinite(value) || value < 0.0)
            throw AnalysisError("norm value for " + descriptor + " is negative or not finite");
        if (records_.empty() || t > records_.back().t) records_.push_back({t, {}});
        else if (t < records_.back().t) throw InvalidInput("norm series times must increase");
        records_.back().values[descriptor] = value;
    }
    void add(double t, const Descriptor& d, double value) { add(t, d.name(), value); }

    const std::vector<Record>& records() const { return records_; }
    bool empty() const { return records_.empty(); }

    std::vector<std::string> descriptors() const {
        std::vector<std::string> out;
        for (const auto& r : records_)
            for (const auto& [name, v] : r.values)
                if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
        return out;
    }

    /// (t, value) pairs for one descriptor.
    std::vector<std::pair<double, double>> samples(const std::string& descriptor) const {
        std::vector<std::pair<double, double>> out;
        for (const auto& r : records_)
            if (auto it = r.values.find(descriptor); it != r.values.end()) out.emplace_back(r.t, it->second);
        return out;
    }
    std::vector<std::pair<double, double>> samples(const Descriptor& d) const { return samples(d.name()); }

    void merge(const NormSeries& other) {
        for (const auto& r : other.records_)
            for (const auto& [name, v] : r.values) insert(r.t, name, v);
    }

private:
    void insert(double t, const std::string& name, double v) {
        auto it = std::lower_bound(records_.begin(), records_.end(), t,
                                   [](const Record& r, double x) { return r.t < x; });
        if (it == records_.end() || it->t != t) it = records_.insert(it, Record{t, {}});
        it->values[name] = v;
    }

    std::vector<Record> records_;
};

struct RateFit {
    double exponent = 0.0;
    double intercept = 0.0;
    double t_lo = 0.0;
    double t_hi = 0.0;
    double residual = 0.0;  // max |log value - fit|
    int samples = 0;
};

/// Least-squares slope of log v against log(1 + t) over samples with t in [lo, hi].
inline RateFit fit_rate(std::span<const std::pair<double, double>> samples, double t_lo, double t_hi) {
    if (!(t_lo < t_hi)) throw InvalidInput("fit window must satisfy t_lo < t_hi");
    std::vector<double> x, y;
    for (auto [t, v] : samples) {
        if (t < t_lo || t > t_hi) continue;
        if (!(v > 0.0)) throw AnalysisError("cannot fit a power law to nonpositive values");
        x.push_back(std::log1p(t));
        y.push_back(std::log(v));
    }
    if (x.size() < 8) throw AnalysisError("fit window holds " + std::to_string(x.size()) + " samples, need 8");
    const double m = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    RateFit fit;
    fit.exponent = sxy / sxx;
    fit.intercept = my - fit.exponent * mx;
    fit.t_lo = t_lo;
    fit.t_hi = t_hi;
    fit.samples = static_cast<int>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        fit.residual = std::max(fit.residual, std::abs(y[i] - fit.intercept - fit.exponent * x[i]));
    return fit;
}

inline RateFit fit_rate(const NormSeries& series, const std::string& descriptor, double t_lo, double t_hi) {
    auto s = series.samples(descriptor);
    return fit_rate(s, t_lo, t_hi);
}

inline RateFit fit_rate(const NormSeries& series, const Descriptor& d, double t_lo, double t_hi) {
    return fit_rate(series, d.name(), t_lo, t_hi);
}

// ---------------------------------------------------------------------------
// Field norms

/// Multi-indices with |alpha| = k in `dim` variables.
inline std::vector<std::vector<int>> multi_indices(int dim, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(dim, 0);
    auto rec = [&](auto&& self, int axis, int left) -> void {
        if (axis == dim - 1) {
            cur[axis] = left;
            out.push_back(cur);
            return;
        }
        for (int a = left; a >= 0; --a) {
            cur[axis] = a;
            self(self, axis + 1, left - a);
        }
    };
    rec(rec, 0, k);
    return out;
}

/// max over |alpha| = k of the grid L^inf (or L^1) norm of d^alpha f.
inline double derivative_lp_norm(const SpectralField& f, int k, LpKind kind) {
    if (k == 0) return lp_norm(f, kind);
    double worst = 0.0;
    for (const auto& alpha : multi_indices(f.grid().dim(), k))
        worst = std::max(worst, lp_norm(spectral_derivative(f, alpha), kind));
    return worst;
}

inline double field_norm(const SpectralField& f, const Descriptor& d) {
    switch (d.norm) {
    case NormType::L2: return homogeneous_norm(f, d.k);
    case NormType::Hs: return derivative_sobolev_norm(f, d.k, d.s);
    case NormType::Linf: return derivative_lp_norm(f, d.k, LpKind::Linf);
    case NormType::L1: return derivative_lp_norm(f, d.k, LpKind::L1);
    }
    return 0.0;
}

/// Everything needed to form the derived quantities at time t.
class ProfileContext {
public:
    /// u0, u1 should be the data the trajectory actually started from (dealiased).
    ProfileContext(const SymbolTable& table, SpectralField u0, SpectralField u1)
        : table_(&table), u0_(std::move(u0)), u1_(std::move(u1)) {
        u0_.require_same_grid(u1_);
        if (!(u0_.grid() == table.grid())) throw InvalidInput("symbol table grid differs from data grid");
        mass_ = std::real(u0_[0] + u1_[0]);
    }

    /// M = int (u0 + u1) dx.
    double mass() const { return mass_; }

    SpectralField linear_solution(double t) const { return apply_linear_solution(*table_, u0_, u1_, t); }
    SpectralField g0_data(double t) const { return apply_g0(*table_, u0_ + u1_, t); }
    SpectralField profile(double t) const { return g0_field(*table_, t + 1.0, mass_); }

    struct Pieces {
        SpectralField nonlinear;    // u - u_bar
        SpectralField linear_g0;    // u_bar - G0(t)*(u0+u1)
        SpectralField data_profile; // G0(t)*(u0+u1-M phi0) = G0(t)*(u0+u1) - M G0(t+1)
        SpectralField total;        // u - M G0(t+1)
        SpectralField linear;       // u_bar
    };

    Pieces pieces(const SpectralField& u, double t) const {
        SpectralField ub = linear_solution(t);
        SpectralField gd = g0_data(t);
        SpectralField prof = profile(t);
        return {u - ub, ub - gd, gd - prof, u - prof, ub};
    }

private:
    const SymbolTable* table_;
    SpectralField u0_;
    SpectralField u1_;
    double mass_ = 0.0;
};

/// Evaluates the descriptors on every state. Descriptors that need the linear
/// solution or the profile require `context`.
inline NormSeries norm_series(const std::vector<SimulationState>& states, const std::vector<Descriptor>& descriptors,
                              const ProfileContext* context = nullptr) {
    NormSeries series;
    for (const auto& s : states) {
        std::optional<ProfileContext::Pieces> pieces;
        for (const auto& d : descriptors) {
            const SpectralField* f = nullptr;
            if (d.quantity == Quantity::U) f = &s.u;
            else if (d.quantity == Quantity::Ut) f = &s.ut;
            else {
                if (!context) throw InvalidInput("descriptor " + d.name() + " needs the initial data");
                if (!pieces) pieces = context->pieces(s.u, s.t);
                switch (d.quantity) {
                case Quantity::ProfileError: f = &pieces->total; break;
                case Quantity::LinearSolution: f = &pieces->linear; break;
                case Quantity::NonlinearPart: f = &pieces->nonlinear; break;
                case Quantity::LinearMinusG0: f = &pieces->linear_g0; break;
                case Quantity::G0MinusProfile: f = &pieces->data_profile; break;
                default: break;
                }
            }
            series.add(s.t, d, field_norm(*f, d));
        }
    }
    return series;
}

/// L^2 norms of the decomposition u - MG0(t+1) = (u - u_bar) + (u_bar - G0*(u0+u1))
/// + G0*(u0+u1-M phi0), together with u and u_bar, for each order in `orders`.
inline NormSeries profile_error(const std::vector<SimulationState>& states, const ProfileContext& context,
                                const std::vector<int>& orders = {0}) {
    std::vector<Descriptor> ds;
    for (int k : orders)
        for (Quantity q : {Quantity::U, Quantity::LinearSolution, Quantity::NonlinearPart, Quantity::LinearMinusG0,
                           Quantity::G0MinusProfile, Quantity::ProfileError})
            ds.push_back({q, k, NormType::L2});
    return norm_series(states, ds, &context);
}

// ---------------------------------------------------------------------------
// Time-weighted norms

struct TruncationGuard {
    int order = 0;            // highest derivative order used
    double tail_fraction = 0; // largest truncation_fraction seen
    bool flagged = false;
};

inline void update_guard(TruncationGuard& g, const SpectralField& f, int order, double threshold = 1e-6) {
    g.order = std::max(g.order, order);
    double frac = truncation_fraction(f, order);
    g.tail_fraction = std::max(g.tail_fraction, frac);
    g.flagged = g.flagged || frac > threshold;
}

/// Trapezoid rule over the checkpoint times.
inline double trapezoid(std::span<const double> t, std::span<const double> v) {
    double acc = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) acc += 0.5 * (t[i] - t[i - 1]) * (v[i] + v[i - 1]);
    return acc;
}

struct WeightedEnergy {
    double E = 0.0;
    double D = 0.0;
    double T = 0.0;
    TruncationGuard guard;
};

inline WeightedEnergy weighted_energy_norms(const std::vector<SimulationState>& states, int s) {
    if (s < 2) throw InvalidInput("weighted energy norms need s >= 2");
    WeightedEnergy out;
    if (states.empty()) return out;
    const int ju = floor_div(s + 1, 3), jt = floor_div(s - 2, 3);
    std::vector<double> sup_u(ju + 1, 0.0), sup_t(jt + 1, 0.0);
    double sup_ut = 0.0;
    std::vector<double> times, integrand;
    for (const auto& st : states) {
        const double w = 1.0 + st.t;
        double dens = 0.0;
        for (int j = 0; j <= ju; ++j) {
            double v = std::pow(derivative_sobolev_norm(st.u, 2 * j, s - 3 * j + 1), 2);
            sup_u[j] = std::max(sup_u[j], std::pow(w, j) * v);
            if (j >= 1) dens += std::pow(w, j - 1) * v;
        }
        sup_ut = std::max(sup_ut, std::pow(sobolev_norm(st.ut, s), 2));
        dens += std::pow(sobolev_norm(st.ut, s - 1), 2);
        for (int j = 0; j <= jt; ++j) {
            sup_t[j] = std::max(sup_t[j], std::pow(w, j + 1) * std::pow(derivative_sobolev_norm(st.ut, 2 * j, s - 3 * j - 1), 2));
            dens += std::pow(w, j + 1) * std::pow(derivative_sobolev_norm(st.ut, 2 * j, s - 3 * j - 2), 2);
        }
        update_guard(out.guard, st.u, s + 1);
        update_guard(out.guard, st.ut, s);
        times.push_back(st.t);
        integrand.push_back(dens);
    }
    double e2 = sup_ut;
    for (double v : sup_u) e2 += v;
    for (double v : sup_t) e2 += v;
    out.E = std::sqrt(e2);
    out.D = std::sqrt(trapezoid(times, integrand));
    out.T = states.back().t;
    return out;
}

struct OptimalDecay {
    double M0 = 0.0;
    double M1 = 0.0;
    std::vector<int> orders_m0;  // admissible k for M0
    std::vector<int> orders_m1;
    TruncationGuard guard;
};

inline OptimalDecay optimal_decay_norms(const std::vector<SimulationState>& states, int s, int n) {
    if (n < 1) throw InvalidInput("dimension must be positive");
    OptimalDecay out;
    for (int k = 0;; ++k) {
        int sig = regularity_indices(k, n).sigma;
        if (sig > s - 1) break;
        out.orders_m0.push_back(k);
        if (sig <= s - 4) out.orders_m1.push_back(k);
    }
    for (int k : out.orders_m0) {
        const int sig = regularity_indices(k, n).sigma;
        double sup0 = 0.0, sup1 = 0.0;
        const bool m1 = std::find(out.orders_m1.begin(), out.orders_m1.end(), k) != out.orders_m1.end();
        for (const auto& st : states) {
            const double base = std::pow(1.0 + st.t, n / 8.0 + k / 4.0);
            sup0 = std::max(sup0, base * derivative_sobolev_norm(st.u, k, s - 1 - sig));
            update_guard(out.guard, st.u, k + s - 1 - sig);
            if (m1) {
                sup1 = std::max(sup1, base * (1.0 + st.t) * derivative_sobolev_norm(st.ut, k, s - 4 - sig));
                update_guard(out.guard, st.ut, k + s - 4 - sig);
            }
        }
        out.M0 += sup0;
        out.M1 += sup1;
    }
    return out;
}

struct LinftyIntegrals {
    double L = 0.0;   // int_0^T ||(d^2 u_t, d^3 u)||_inf
    double N_d = 0.0; // sup (1 + t)^d ||d^2 u||_inf
    double d = 0.0;
};

inline double default_decay_weight(int n) { return n / 8.0 + 0.55; }

/// From sampled values: lsum[i] = ||(d^2 u_t, d^3 u)(t_i)||_inf, hess[i] = ||d^2 u(t_i)||_inf.
inline LinftyIntegrals linfty_integrals(std::span<const double> t, std::span<const double> lsum,
                                       std::span<const double> hess, double d) {
    if (t.size() != lsum.size() || t.size() != hess.size()) throw InvalidInput("sample arrays differ in length");
    LinftyIntegrals out;
    out.d = d;
    out.L = trapezoid(t, lsum);
    for (std::size_t i = 0; i < t.size(); ++i) out.N_d = std::max(out.N_d, std::pow(1.0 + t[i], d) * hess[i]);
    return out;
}

inline LinftyIntegrals linfty_integrals(const std::vector<SimulationState>& states, double d, int n) {
    if (!(d > n / 8.0 + 0.5)) throw InvalidInput("d must exceed n/8 + 1/2");
    std::vector<double> t, lsum, hess;
    for (const auto& st : states) {
        t.push_back(st.t);
        lsum.push_back(derivative_lp_norm(st.ut, 2, LpKind::Linf) + derivative_lp_norm(st.u, 3, LpKind::Linf));
        hess.push_back(derivative_lp_norm(st.u, 2, LpKind::Linf));
    }
    return linfty_integrals(t, lsum, hess, d);
}

// ---------------------------------------------------------------------------
// Data norms

struct DataNorms {
    int s = 0;
    double sobolev = 0.0;  // ||u0||_{H^{s+1}} + ||u1||_{H^s}
    double l1 = 0.0;       // ||u0||_{L^1} + ||u1||_{L^1}
    double l1_1 = 0.0;     // same with weight 1 + |x|
    double E0 = 0.0;
    double E1 = 0.0;
    double E2 = 0.0;

    nlohmann::json to_json() const {
        return {{"s", s}, {"sobolev", sobolev}, {"l1", l1}, {"l1_1", l1_1}, {"E0", E0}, {"E1", E1}, {"E2", E2}};
    }
};

inline DataNorms data_norms(const SpectralField& u0, const SpectralField& u1, int s) {
    if (s < 0) throw InvalidInput("data norm order s must be nonnegative");
    u0.require_same_grid(u1);
    PhysicalField p0 = inverse_transform(u0), p1 = inverse_transform(u1);
    DataNorms r;
    r.s = s;
    r.sobolev = sobolev_norm(u0, s + 1) + sobolev_norm(u1, s);
    r.l1 = lp_norm(p0, LpKind::L1) + lp_norm(p1, LpKind::L1);
    r.l1_1 = lp_norm(p0, LpKind::L1, true) + lp_norm(p1, LpKind::L1, true);
    r.E0 = r.sobolev;
    r.E1 = r.sobolev + r.l1;
    r.E2 = r.sobolev + r.l1_1;
    return r;
}

}  // namespace plate
