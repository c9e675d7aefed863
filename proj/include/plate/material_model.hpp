#pragma once

// Quasi-linear flux b^{ij}(V) = d phi / d V_ij on symmetric n x n matrices V,
// its Jacobian b^{ij}_{ab}(V), the residual g(V) = b(V) - b_{..}(O) V, and the
// structural checks: normalization, index symmetry, gradient consistency and
// positivity of gamma(omega) = b^{ij}_{ab}(O) w_i w_j w_a w_b on the sphere.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "plate/errors.hpp"
#include "plate/spectral_grid.hpp"

namespace plate {

/// Dense 3x3 storage; only the leading dim x dim block is used.
struct Matrix3 {
    std::array<double, 9> a{};

    double& operator()(int i, int j) { return a[3 * i + j]; }
    double operator()(int i, int j) const { return a[3 * i + j]; }

    double frobenius_squared() const {
        double s = 0.0;
        for (double v : a) s += v * v;
        return s;
    }
    double trace() const { return a[0] + a[4] + a[8]; }
};

/// b^{ij}_{ab}, indexed ((i*3 + j)*3 + a)*3 + b.
struct Tensor4 {
    std::array<double, 81> a{};

    double& operator()(int i, int j, int k, int l) { return a[((3 * i + j) * 3 + k) * 3 + l]; }
    double operator()(int i, int j, int k, int l) const { return a[((3 * i + j) * 3 + k) * 3 + l]; }
};

class MaterialModel {
public:
    using Potential = std::function<double(const Matrix3&)>;
    using Flux = std::function<Matrix3(const Matrix3&)>;
    using FluxDerivative = std::function<Tensor4(const Matrix3&)>;

    /// Step of the central differences used when no analytic Jacobian is given.
    static constexpr double kDerivativeStep = 1e-5;

    MaterialModel(std::string name, int dim, Potential phi, Flux flux, FluxDerivative flux_derivative = {},
                  bool linear = false, nlohmann::json params = nlohmann::json::object())
        : name_(std::move(name)), dim_(dim), phi_(std::move(phi)), flux_(std::move(flux)),
          flux_derivative_(std::move(flux_derivative)), linear_(linear), params_(std::move(params)) {
        if (dim_ < 1 || dim_ > 3) throw InvalidInput("model dimension must be 1, 2 or 3");
        if (!phi_ || !flux_) throw InvalidInput("model needs a potential and a flux");
        linearization_ = this->flux_derivative(Matrix3{});
    }

    const std::string& name() const { return name_; }
    int dim() const { return dim_; }
    bool is_linear() const { return linear_; }
    const nlohmann::json& params() const { return params_; }
    bool has_analytic_derivative() const { return static_cast<bool>(flux_derivative_); }

    double potential(const Matrix3& v) const { return phi_(v); }
    Matrix3 flux(const Matrix3& v) const { return flux_(v); }

    Tensor4 flux_derivative(const Matrix3& v) const {
        return flux_derivative_ ? flux_derivative_(v) : finite_difference_derivative(v);
    }

    /// Central differences of b along the symmetric direction (e_ab + e_ba)/2.
    Tensor4 finite_difference_derivative(const Matrix3& v) const {
        Tensor4 t;
        const double h = kDerivativeStep;
        for (int a = 0; a < dim_; ++a) {
            for (int b = 0; b < dim_; ++b) {
                Matrix3 plus = v, minus = v;
                double step = (a == b) ? h : 0.5 * h;
                plus(a, b) += step;
                minus(a, b) -= step;
                if (a != b) {
                    plus(b, a) += step;
                    minus(b, a) -= step;
                }
                Matrix3 fp = flux_(plus), fm = flux_(minus);
                for (int i = 0; i < dim_; ++i)
                    for (int j = 0; j < dim_; ++j) t(i, j, a, b) = (fp(i, j) - fm(i, j)) / (2.0 * h);
            }
        }
        return t;
    }

    /// b^{ij}_{ab}(O).
    const Tensor4& linearization() const { return linearization_; }

    /// g(V) = b(V) - sum_ab b_ab(O) V_ab.
    Matrix3 residual(const Matrix3& v) const {
        Matrix3 g = flux_(v);
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j) {
                double lin = 0.0;
                for (int a = 0; a < dim_; ++a)
                    for (int b = 0; b < dim_; ++b) lin += linearization_(i, j, a, b) * v(a, b);
                g(i, j) -= lin;
            }
        return g;
    }

private:
    std::string name_;
    int dim_;
    Potential phi_;
    Flux flux_;
    FluxDerivative flux_derivative_;
    bool linear_;
    nlohmann::json params_;
    Tensor4 linearization_;
};

namespace models {

namespace detail {

inline double param(const nlohmann::json& params, const char* key, double fallback) {
    return params.contains(key) ? params.at(key).get<double>() : fallback;
}

inline void reject_unknown(const nlohmann::json& params, std::initializer_list<const char*> known,
                           const std::string& model) {
    if (params.is_null()) return;
    if (!params.is_object()) throw InvalidInput("model parameters must be an object");
    for (auto& [key, value] : params.items()) {
        if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end())
            throw InvalidInput("unknown parameter '" + key + "' for model '" + model + "'");
        if (!value.is_number()) throw InvalidInput("parameter '" + key + "' must be numeric");
    }
}

}  // namespace detail

/// phi = (c/2) (tr V)^2, b^{ij} = c delta_ij tr V, b^{ij}_{ab} = c delta_ij delta_ab.
/// With c = 1 this is the plate operator Delta^2 (gamma = 1).
inline MaterialModel linear_isotropic(int dim, double stiffness = 1.0) {
    auto phi = [stiffness](const Matrix3& v) { return 0.5 * stiffness * v.trace() * v.trace(); };
    auto flux = [stiffness, dim](const Matrix3& v) {
        Matrix3 b;
        double tr = v.trace();
        for (int i = 0; i < dim; ++i) b(i, i) = stiffness * tr;
        return b;
    };
    auto jac = [stiffness, dim](const Matrix3&) {
        Tensor4 t;
        for (int i = 0; i < dim; ++i)
            for (int a = 0; a < dim; ++a) t(i, i, a, a) = stiffness;
        return t;
    };
    return MaterialModel("linear_isotropic", dim, phi, flux, jac, true, {{"stiffness", stiffness}});
}

/// phi = |V|^2/2 + beta |V|^4/4 (Frobenius norm); b = V (1 + beta |V|^2), g = beta |V|^2 V.
inline MaterialModel quartic(int dim, double beta = 1.0) {
    auto phi = [beta](const Matrix3& v) {
        double s = v.frobenius_squared();
        return 0.5 * s + 0.25 * beta * s * s;
    };
    auto flux = [beta](const Matrix3& v) {
        Matrix3 b = v;
        double f = 1.0 + beta * v.frobenius_squared();
        for (double& x : b.a) x *= f;
        return b;
    };
    auto jac = [beta, dim](const Matrix3& v) {
        Tensor4 t;
        double f = 1.0 + beta * v.frobenius_squared();
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                for (int a = 0; a < dim; ++a)
                    for (int b = 0; b < dim; ++b) {
                        double sym = 0.5 * ((i == a && j == b ? 1.0 : 0.0) + (i == b && j == a ? 1.0 : 0.0));
                        t(i, j, a, b) = sym * f + 2.0 * beta * v(i, j) * v(a, b);
                    }
        return t;
    };
    return MaterialModel("quartic", dim, phi, flux, jac, beta == 0.0, {{"beta", beta}});
}

/// Isotropic plate plus (s/2) V_11^2: gamma(omega) = 1 + s omega_1^4.
inline MaterialModel anisotropic(int dim, double strength = 1.0) {
    auto phi = [strength](const Matrix3& v) {
        return 0.5 * v.trace() * v.trace() + 0.5 * strength * v(0, 0) * v(0, 0);
    };
    auto flux = [strength, dim](const Matrix3& v) {
        Matrix3 b;
        double tr = v.trace();
        for (int i = 0; i < dim; ++i) b(i, i) = tr;
        b(0, 0) += strength * v(0, 0);
        return b;
    };
    auto jac = [strength, dim](const Matrix3&) {
        Tensor4 t;
        for (int i = 0; i < dim; ++i)
            for (int a = 0; a < dim; ++a) t(i, i, a, a) = 1.0;
        t(0, 0, 0, 0) += strength;
        return t;
    };
    return MaterialModel("anisotropic", dim, phi, flux, jac, true, {{"strength", strength}});
}

inline std::vector<std::string> names() { return {"linear_isotropic", "quartic", "anisotropic"}; }

/// Looks a built-in model up by name; unknown names and parameter keys are rejected.
inline MaterialModel make(const std::string& name, int dim, const nlohmann::json& params = {}) {
    using detail::param;
    if (name == "linear_isotropic") {
        detail::reject_unknown(params, {"stiffness"}, name);
        return linear_isotropic(dim, param(params, "stiffness", 1.0));
    }
    if (name == "quartic") {
        detail::reject_unknown(params, {"beta"}, name);
        return quartic(dim, param(params, "beta", 1.0));
    }
    if (name == "anisotropic") {
        detail::reject_unknown(params, {"strength"}, name);
        return anisotropic(dim, param(params, "strength", 1.0));
    }
    throw InvalidInput("unknown material model '" + name + "'");
}

}  // namespace models

inline double contract_quartic(const Tensor4& t, int dim, const Vec3& w) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            for (int a = 0; a < dim; ++a)
                for (int b = 0; b < dim; ++b) s += t(i, j, a, b) * w[i] * w[j] * w[a] * w[b];
    return s;
}

/// gamma(omega) for a unit vector omega.
inline double gamma_of_direction(const MaterialModel& model, std::span<const double> omega) {
    if (static_cast<int>(omega.size()) != model.dim())
        throw InvalidInput("direction has wrong dimension");
    double n2 = 0.0;
    Vec3 w{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < omega.size(); ++i) {
        w[i] = omega[i];
        n2 += omega[i] * omega[i];
    }
    if (std::abs(std::sqrt(n2) - 1.0) > 1e-12) throw InvalidInput("direction is not a unit vector");
    return contract_quartic(model.linearization(), model.dim(), w);
}

/// gamma at the direction of a nonzero wavevector; the caller handles xi = 0.
inline double gamma_of_wavevector(const MaterialModel& model, const Vec3& xi) {
    double r = std::sqrt(norm_squared(xi));
    Vec3 w{xi[0] / r, xi[1] / r, xi[2] / r};
    return contract_quartic(model.linearization(), model.dim(), w);
}

namespace detail {

inline Vec3 sphere_point(int dim, double theta, double phi) {
    if (dim == 2) return {std::cos(theta), std::sin(theta), 0.0};
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

}  // namespace detail

/// Minimum of gamma over a quasi-uniform sphere sample (uniform angles in 2D, a
/// Fibonacci lattice in 3D) followed by a local pattern-search refinement.
/// Throws StructureViolation when the minimum is not positive.
inline double gamma_min(const MaterialModel& model, int samples = 2000) {
    if (samples < 100) throw InvalidInput("gamma_min needs at least 100 samples");
    const int dim = model.dim();
    const Tensor4& lin = model.linearization();
    double best = std::numeric_limits<double>::infinity();

    if (dim == 1) {
        best = std::min(contract_quartic(lin, 1, {1.0, 0.0, 0.0}), contract_quartic(lin, 1, {-1.0, 0.0, 0.0}));
    } else {
        double bt = 0.0, bp = 0.0;
        auto eval = [&](double th, double ph) { return contract_quartic(lin, dim, detail::sphere_point(dim, th, ph)); };
        if (dim == 2) {
            for (int k = 0; k < samples; ++k) {
                double th = 2.0 * std::numbers::pi * k / samples;
                double v = eval(th, 0.0);
                if (v < best) best = v, bt = th;
            }
        } else {
            const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
            for (int k = 0; k < samples; ++k) {
                double z = 1.0 - 2.0 * (k + 0.5) / samples;
                double th = std::acos(z), ph = golden * k;
                double v = eval(th, ph);
                if (v < best) best = v, bt = th, bp = ph;
            }
        }
        double step = (dim == 2 ? 2.0 * std::numbers::pi / samples : std::sqrt(4.0 * std::numbers::pi / samples));
        while (step > 1e-10) {
            bool moved = false;
            for (int dt : {-1, 1}) {
                double v = eval(bt + dt * step, bp);
                if (v < best) best = v, bt += dt * step, moved = true;
            }
            if (dim == 3) {
                for (int dp : {-1, 1}) {
                    double v = eval(bt, bp + dp * step);
                    if (v < best) best = v, bp += dp * step, moved = true;
                }
            }
            if (!moved) step *= 0.5;
        }
    }
    if (!(best > 0.0))
        throw StructureViolation("gamma(omega) has nonpositive minimum " + std::to_string(best) +
                                 " on the unit sphere for model '" + model.name() + "'");
    return best;
}

struct ValidationReport {
    double phi_at_zero = 0.0;
    double flux_at_zero = 0.0;
    double symmetry_residual = 0.0;
    double gradient_residual = 0.0;
    std::optional<double> derivative_residual;  // analytic Jacobian vs finite differences
    double residual_growth = 0.0;                // |g(eV)|/|eV|^2 at the smallest e over the largest
    std::optional<double> gamma_min;
    double ellipticity_constant = 0.0;
    double tolerance = 0.0;

    bool normalization_ok() const { return std::abs(phi_at_zero) <= tolerance && flux_at_zero <= tolerance; }
    bool symmetry_ok() const { return symmetry_residual <= tolerance; }
    bool gradient_ok() const { return gradient_residual <= tolerance; }
    bool derivative_ok() const { return !derivative_residual || *derivative_residual <= tolerance; }
    bool residual_quadratic_ok() const { return residual_growth <= 10.0; }
    bool ellipticity_ok() const { return gamma_min.has_value() && *gamma_min > 0.0; }
    bool passed() const {
        return normalization_ok() && symmetry_ok() && gradient_ok() && derivative_ok() &&
               residual_quadratic_ok() && ellipticity_ok();
    }

    nlohmann::json to_json() const {
        nlohmann::json j{{"phi_at_zero", phi_at_zero},
                         {"flux_at_zero", flux_at_zero},
                         {"normalization_ok", normalization_ok()},
                         {"symmetry_residual", symmetry_residual},
                         {"symmetry_ok", symmetry_ok()},
                         {"gradient_residual", gradient_residual},
                         {"gradient_ok", gradient_ok()},
                         {"residual_growth", residual_growth},
                         {"residual_quadratic_ok", residual_quadratic_ok()},
                         {"ellipticity_ok", ellipticity_ok()},
                         {"ellipticity_constant", ellipticity_constant},
                         {"tolerance", tolerance},
                         {"passed", passed()}};
        j["derivative_residual"] = derivative_residual ? nlohmann::json(*derivative_residual) : nlohmann::json();
        j["gamma_min"] = gamma_min ? nlohmann::json(*gamma_min) : nlohmann::json();
        return j;
    }
};

/// Runs every structural check on a fixed pseudo-random sample of small
/// symmetric matrices. Never throws on a failed check; flags carry the outcome.
inline ValidationReport validate_structure(const MaterialModel& model, double tol = 1e-6, int samples = 16) {
    const int dim = model.dim();
    ValidationReport rep;
    rep.tolerance = tol;
    rep.phi_at_zero = model.potential(Matrix3{});
    Matrix3 b0 = model.flux(Matrix3{});
    for (double v : b0.a) rep.flux_at_zero = std::max(rep.flux_at_zero, std::abs(v));

    std::mt19937_64 rng(20240917);
    std::uniform_real_distribution<double> uni(-0.05, 0.05);
    std::vector<Matrix3> sample_set{Matrix3{}};
    for (int s = 0; s < samples; ++s) {
        Matrix3 v;
        for (int i = 0; i < dim; ++i)
            for (int j = i; j < dim; ++j) v(i, j) = v(j, i) = uni(rng);
        sample_set.push_back(v);
    }

    const double h = 1e-5;
    for (const Matrix3& v : sample_set) {
        Tensor4 t = model.flux_derivative(v);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                for (int a = 0; a < dim; ++a)
                    for (int b = 0; b < dim; ++b) {
                        double x = t(i, j, a, b);
                        rep.symmetry_residual = std::max({rep.symmetry_residual, std::abs(x - t(j, i, a, b)),
                                                          std::abs(x - t(i, j, b, a)), std::abs(x - t(a, b, i, j))});
                    }
        if (model.has_analytic_derivative()) {
            Tensor4 fd = model.finite_difference_derivative(v);
            double worst = rep.derivative_residual.value_or(0.0);
            for (std::size_t k = 0; k < t.a.size(); ++k) worst = std::max(worst, std::abs(t.a[k] - fd.a[k]));
            rep.derivative_residual = worst;
        }
        Matrix3 b = model.flux(v);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) {
                Matrix3 plus = v, minus = v;
                double step = (i == j) ? h : 0.5 * h;
                plus(i, j) += step;
                minus(i, j) -= step;
                if (i != j) {
                    plus(j, i) += step;
                    minus(j, i) -= step;
                }
                double dphi = (model.potential(plus) - model.potential(minus)) / (2.0 * h);
                double sym_b = 0.5 * (b(i, j) + b(j, i));
                rep.gradient_residual = std::max(rep.gradient_residual, std::abs(dphi - sym_b));
            }
    }

    // g(V) = O(|V|^2): the ratio |g(eV)| / |eV|^2 must not grow as e -> 0.
    Matrix3 probe = sample_set.back();
    auto ratio = [&](double e) {
        Matrix3 v = probe;
        for (double& x : v.a) x *= e;
        double g = std::sqrt(model.residual(v).frobenius_squared());
        return g / v.frobenius_squared();
    };
    double big = ratio(1.0), small = ratio(1e-3);
    rep.residual_growth = big > 1e-300 ? small / big : (small > 1e-8 ? std::numeric_limits<double>::infinity() : 0.0);

    try {
        rep.gamma_min = gamma_min(model, dim == 3 ? 4000 : 2000);
        rep.ellipticity_constant = *rep.gamma_min;
    } catch (const StructureViolation&) {
        rep.gamma_min.reset();
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Pseudo-spectral evaluation of sum_ij d_i d_j g^{ij}(d^2 u).

enum class FluxForm { Residual, Full };

struct NonlinearOptions {
    double hessian_bound = 0.1;  // a-priori ceiling on ||d^2 u||_inf
    double dealias_fraction = kTwoThirds;
    FluxForm form = FluxForm::Residual;
};

/// Reusable workspace for repeated evaluations on one grid.
class NonlinearEvaluator {
public:
    NonlinearEvaluator(const MaterialModel& model, const GridSpec& grid, NonlinearOptions options = {})
        : model_(model), grid_(grid), options_(options) {
        if (model.dim() != grid.dim()) throw InvalidInput("model and grid dimensions differ");
        xi_.resize(grid.size());
        nyquist_.resize(grid.size());
        keep_.resize(grid.size());
        const double cut = options.dealias_fraction * grid.points_per_axis() / 2.0;
        for (std::size_t p = 0; p < grid.size(); ++p) {
            xi_[p] = grid.wavevector(p);
            Index3 m = grid.mode(p);
            unsigned mask = 0;
            bool keep = true;
            for (int a = 0; a < grid.dim(); ++a) {
                if (m[a] == -grid.points_per_axis() / 2) mask |= 1u << a;
                if (options.dealias_fraction < 1.0 && std::abs(m[a]) >= cut) keep = false;
            }
            nyquist_[p] = mask;
            keep_[p] = keep;
        }
        for (int i = 0; i < grid.dim(); ++i)
            for (int j = i; j < grid.dim(); ++j) pairs_.emplace_back(i, j);
    }

    const GridSpec& grid() const { return grid_; }
    const NonlinearOptions& options() const { return options_; }

    /// Physical samples of d_i d_j u for i <= j, in pairs() order.
    std::vector<PhysicalField> hessian(const SpectralField& u) const {
        std::vector<PhysicalField> out;
        out.reserve(pairs_.size());
        for (auto [i, j] : pairs_) {
            SpectralField d(grid_);
            for (std::size_t p = 0; p < grid_.size(); ++p) {
                bool odd_nyq = (i != j) && (nyquist_[p] & ((1u << i) | (1u << j)));
                d[p] = odd_nyq ? Complex{} : -xi_[p][i] * xi_[p][j] * u[p];
            }
            out.push_back(inverse_transform(d));
        }
        return out;
    }

    Matrix3 hessian_at(const std::vector<PhysicalField>& h, std::size_t p) const {
        Matrix3 v;
        for (std::size_t k = 0; k < pairs_.size(); ++k) {
            auto [i, j] = pairs_[k];
            v(i, j) = v(j, i) = h[k].values[p];
        }
        return v;
    }

    /// Grid max of the Frobenius norm of d^2 u.
    double hessian_linf(const std::vector<PhysicalField>& h) const {
        double worst = 0.0;
        for (std::size_t p = 0; p < grid_.size(); ++p)
            worst = std::max(worst, hessian_at(h, p).frobenius_squared());
        return std::sqrt(worst);
    }

    double hessian_linf(const SpectralField& u) const { return hessian_linf(hessian(u)); }

    /// Lattice quadrature of phi(d^2 u).
    double potential_integral(const SpectralField& u) const {
        auto h = hessian(u);
        double acc = 0.0;
        for (std::size_t p = 0; p < grid_.size(); ++p) acc += model_.potential(hessian_at(h, p));
        return acc * grid_.cell_volume();
    }

    /// sum_ij d_i d_j g^{ij}(d^2 u), dealiased. Throws BoundViolation when the
    /// Hessian exceeds the configured ceiling.
    SpectralField operator()(const SpectralField& u) {
        if (!(u.grid() == grid_)) throw InvalidInput("field grid differs from evaluator grid");
        SpectralField out(grid_);
        if (model_.is_linear() && options_.form == FluxForm::Residual) {
            last_hessian_linf_ = hessian_linf(u);
            check_bound();
            return out;
        }
        auto h = hessian(u);
        std::vector<PhysicalField> flux(pairs_.size(), PhysicalField(grid_));
        double worst = 0.0;
        for (std::size_t p = 0; p < grid_.size(); ++p) {
            Matrix3 v = hessian_at(h, p);
            worst = std::max(worst, v.frobenius_squared());
            Matrix3 g = options_.form == FluxForm::Residual ? model_.residual(v) : model_.flux(v);
            for (std::size_t k = 0; k < pairs_.size(); ++k) {
                auto [i, j] = pairs_[k];
                flux[k].values[p] = (i == j) ? g(i, i) : 0.5 * (g(i, j) + g(j, i));
            }
        }
        last_hessian_linf_ = std::sqrt(worst);
        check_bound();
        for (std::size_t k = 0; k < pairs_.size(); ++k) {
            auto [i, j] = pairs_[k];
            SpectralField gh = forward_transform(flux[k]);
            const double mult = (i == j) ? 1.0 : 2.0;
            for (std::size_t p = 0; p < grid_.size(); ++p) {
                bool odd_nyq = (i != j) && (nyquist_[p] & ((1u << i) | (1u << j)));
                if (!odd_nyq) out[p] -= mult * xi_[p][i] * xi_[p][j] * gh[p];
            }
        }
        for (std::size_t p = 0; p < grid_.size(); ++p)
            if (!keep_[p]) out[p] = 0.0;
        return out;
    }

    double last_hessian_linf() const { return last_hessian_linf_; }
    const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }

private:
    void check_bound() const {
        if (last_hessian_linf_ > options_.hessian_bound)
            throw BoundViolation(last_hessian_linf_, options_.hessian_bound);
    }

    MaterialModel model_;
    GridSpec grid_;
    NonlinearOptions options_;
    std::vector<Vec3> xi_;
    std::vector<unsigned> nyquist_;
    std::vector<bool> keep_;
    std::vector<std::pair<int, int>> pairs_;
    double last_hessian_linf_ = 0.0;
};

inline SpectralField evaluate_nonlinear_term(const MaterialModel& model, const SpectralField& u,
                                             NonlinearOptions options = {}) {
    NonlinearEvaluator eval(model, u.grid(), options);
    return eval(u);
}

}  // namespace plate
