#pragma once

// Fourier symbols of the linearised plate equation
//     (1 + |xi|^2) u'' + u' + gamma(omega) |xi|^4 u = 0,
// its propagators G, H (u^ = G (u0^ + u1^) + H u0^), their time derivatives,
// the parabolic-limit kernel G0 = exp(-gamma |xi|^4 t) and the self-similar
// profile phi0 = G0(., 1).
//
// With a = 1 + |xi|^2, c = gamma |xi|^4, D = 1 - 4ac, the roots are
// lambda_-+ = m -+ delta with m = -1/(2a), delta = sqrt(D)/(2a). Writing
//     A = e^{mt} cosh(delta t),   B = e^{mt} t sinh(delta t)/(delta t),
// the propagators are
//     G = B,  H = A - (1+m) B,  G_t = A + m B,  H_t = -A - (P + m) B,
// with P = lambda_+ lambda_- = c/a. A and B are real and even in delta, so the
// root labelling never matters and the confluent case delta -> 0 is a power
// series rather than a 0/0 quotient.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

#include "plate/gauss_legendre.hpp"
#include "plate/material_model.hpp"
#include "plate/spectral_grid.hpp"

namespace plate {

struct Eigenpair {
    Complex plus;   // larger real part; +sqrt branch on ties
    Complex minus;
};

/// Roots of (1 + r2) l^2 + l + gamma r2^2 = 0 with r2 = |xi|^2, computed
/// without cancellation (lambda_+ = c/q, lambda_- = q/a, q = -(1 + sqrt D)/2).
inline Eigenpair eigenvalues(double r2, double gamma) {
    const double a = 1.0 + r2;
    const double c = gamma * r2 * r2;
    const double disc = 1.0 - 4.0 * a * c;
    if (disc >= 0.0) {
        const double q = -0.5 * (1.0 + std::sqrt(disc));
        return {Complex{c / q, 0.0}, Complex{q / a, 0.0}};
    }
    const double s = std::sqrt(-disc) / (2.0 * a);
    const double m = -0.5 / a;
    return {Complex{m, s}, Complex{m, -s}};
}

inline Eigenpair eigenvalues(const Vec3& xi, double gamma) { return eigenvalues(norm_squared(xi), gamma); }

/// Residual of the characteristic polynomial at a candidate root.
inline double characteristic_residual(double r2, double gamma, Complex lambda) {
    return std::abs((1.0 + r2) * lambda * lambda + lambda + gamma * r2 * r2);
}

struct Propagator {
    double g = 0.0;    // G^
    double h = 0.0;    // H^
    double gt = 0.0;   // d/dt G^
    double ht = 0.0;   // d/dt H^
};

/// G^, H^ and their time derivatives at |xi|^2 = r2. Valid for any real t.
inline Propagator propagator(double r2, double gamma, double t) {
    const double a = 1.0 + r2;
    const double c = gamma * r2 * r2;
    const double disc = 1.0 - 4.0 * a * c;
    const double m = -0.5 / a;
    const double delta2 = disc / (4.0 * a * a);  // delta^2, real
    const double z2 = delta2 * t * t;

    double A, B;
    if (std::abs(z2) < 0.25) {
        // cosh z = sum z^{2k}/(2k)!, sinh z / z = sum z^{2k}/(2k+1)!
        double ch = 0.0, sc = 0.0, term = 1.0;
        for (int k = 0; k < 12; ++k) {
            ch += term;
            term /= (2.0 * k + 1.0);
            sc += term;
            term *= z2 / (2.0 * k + 2.0);
        }
        const double e = std::exp(m * t);
        A = e * ch;
        B = e * t * sc;
    } else if (disc >= 0.0) {
        const double q = -0.5 * (1.0 + std::sqrt(disc));
        const double lp = c / q, lm = q / a;
        const double ep = std::exp(lp * t), em = std::exp(lm * t);
        const double delta = std::sqrt(disc) / (2.0 * a);
        A = 0.5 * (ep + em);
        B = (ep - em) / (2.0 * delta);
    } else {
        const double s = std::sqrt(-delta2);
        const double e = std::exp(m * t);
        A = e * std::cos(s * t);
        B = e * std::sin(s * t) / s;
    }
    const double p = c / a;
    return {B, A - (1.0 + m) * B, A + m * B, -A - (p + m) * B};
}

/// The closed forms written directly in the two roots, with the confluent limit
/// used when |lambda_+ - lambda_-| < 1e-8. Kept as an independent route to the
/// same values (and for root-swap checks).
inline Propagator propagator_from_roots(Complex lp, Complex lm, double t) {
    const Complex diff = lp - lm;
    if (std::abs(diff) < 1e-8) {
        const Complex l = 0.5 * (lp + lm);
        const Complex e = std::exp(l * t);
        Complex g = t * e;
        Complex h = (1.0 - (1.0 + l) * t) * e;
        Complex gt = (1.0 + l * t) * e;
        Complex ht = -(1.0 + (l + l * l) * t) * e;
        return {g.real(), h.real(), gt.real(), ht.real()};
    }
    const Complex ep = std::exp(lp * t), em = std::exp(lm * t);
    Complex g = (ep - em) / diff;
    Complex h = ((1.0 + lp) * em - (1.0 + lm) * ep) / diff;
    Complex gt = (lp * ep - lm * em) / diff;
    Complex ht = ((1.0 + lp) * lm * em - (1.0 + lm) * lp * ep) / diff;
    return {g.real(), h.real(), gt.real(), ht.real()};
}

/// Parabolic-limit symbol exp(-gamma |xi|^4 t).
inline double g0_symbol(const Vec3& xi, double gamma, double t) {
    if (t < 0.0) throw InvalidInput("g0_symbol needs t >= 0");
    double r2 = norm_squared(xi);
    return std::exp(-gamma * r2 * r2 * t);
}

/// 2x2 solution operator of one Fourier mode: (u, u_t)(0) -> (u, u_t)(t).
struct ModeFlow {
    std::array<double, 4> m{1.0, 0.0, 0.0, 1.0};  // row-major

    static ModeFlow at(double r2, double gamma, double t) {
        Propagator p = propagator(r2, gamma, t);
        return {{p.g + p.h, p.g, p.gt + p.ht, p.gt}};
    }

    template <class T>
    std::pair<T, T> apply(const T& u, const T& ut) const {
        return {m[0] * u + m[1] * ut, m[2] * u + m[3] * ut};
    }

    friend ModeFlow operator*(const ModeFlow& x, const ModeFlow& y) {
        return {{x.m[0] * y.m[0] + x.m[1] * y.m[2], x.m[0] * y.m[1] + x.m[1] * y.m[3],
                 x.m[2] * y.m[0] + x.m[3] * y.m[2], x.m[2] * y.m[1] + x.m[3] * y.m[3]}};
    }
};

/// Per-lattice-point gamma(xi/|xi|) and eigenvalues. gamma at xi = 0 is
/// irrelevant (it multiplies |xi|^4) and is stored as gamma(e_1).
class SymbolTable {
public:
    SymbolTable(const GridSpec& grid, const std::function<double(const Vec3&)>& gamma_of_xi)
        : grid_(grid), r2_(grid.size()), gamma_(grid.size()), lambda_plus_(grid.size()),
          lambda_minus_(grid.size()) {
        for (std::size_t p = 0; p < grid.size(); ++p) {
            Vec3 xi = grid.wavevector(p);
            r2_[p] = norm_squared(xi);
            gamma_[p] = (r2_[p] == 0.0) ? gamma_of_xi({1.0, 0.0, 0.0}) : gamma_of_xi(xi);
            Eigenpair e = eigenvalues(r2_[p], gamma_[p]);
            lambda_plus_[p] = e.plus;
            lambda_minus_[p] = e.minus;
        }
    }

    SymbolTable(const GridSpec& grid, const MaterialModel& model)
        : SymbolTable(grid, [&model](const Vec3& xi) { return gamma_of_wavevector(model, xi); }) {
        if (model.dim() != grid.dim()) throw InvalidInput("model and grid dimensions differ");
    }

    SymbolTable(const GridSpec& grid, double gamma)
        : SymbolTable(grid, [gamma](const Vec3&) { return gamma; }) {}

    const GridSpec& grid() const { return grid_; }
    std::size_t size() const { return r2_.size(); }
    double r2(std::size_t p) const { return r2_[p]; }
    double gamma(std::size_t p) const { return gamma_[p]; }
    const std::vector<double>& gamma_at_xi() const { return gamma_; }
    const std::vector<Complex>& lambda_plus() const { return lambda_plus_; }
    const std::vector<Complex>& lambda_minus() const { return lambda_minus_; }

    Propagator propagator_at(std::size_t p, double t) const { return propagator(r2_[p], gamma_[p], t); }

private:
    GridSpec grid_;
    std::vector<double> r2_;
    std::vector<double> gamma_;
    std::vector<Complex> lambda_plus_;
    std::vector<Complex> lambda_minus_;
};

/// Elementwise G^(xi, t) and H^(xi, t).
inline std::pair<std::vector<double>, std::vector<double>> propagator_symbols(const SymbolTable& table, double t) {
    if (t < 0.0) throw InvalidInput("propagator_symbols needs t >= 0");
    std::vector<double> g(table.size()), h(table.size());
    for (std::size_t p = 0; p < table.size(); ++p) {
        Propagator pr = table.propagator_at(p, t);
        g[p] = pr.g;
        h[p] = pr.h;
    }
    return {std::move(g), std::move(h)};
}

struct LinearState {
    SpectralField u;
    SpectralField ut;
};

/// u_bar(t) and u_bar_t(t) = G(t)*(u0 + u1) + H(t)*u0 and its time derivative.
inline LinearState apply_linear_flow(const SymbolTable& table, const SpectralField& u0, const SpectralField& u1,
                                     double t) {
    u0.require_same_grid(u1);
    if (!(u0.grid() == table.grid())) throw InvalidInput("symbol table grid differs from data grid");
    LinearState out{SpectralField(u0.grid()), SpectralField(u0.grid())};
    for (std::size_t p = 0; p < table.size(); ++p) {
        Propagator pr = table.propagator_at(p, t);
        Complex sum = u0[p] + u1[p];
        out.u[p] = pr.g * sum + pr.h * u0[p];
        out.ut[p] = pr.gt * sum + pr.ht * u0[p];
    }
    return out;
}

inline SpectralField apply_linear_solution(const SymbolTable& table, const SpectralField& u0,
                                           const SpectralField& u1, double t) {
    return apply_linear_flow(table, u0, u1, t).u;
}

inline SpectralField apply_linear_solution_rate(const SymbolTable& table, const SpectralField& u0,
                                                const SpectralField& u1, double t) {
    return apply_linear_flow(table, u0, u1, t).ut;
}

/// G(t) * (1 - Delta)^{-1} phi.
inline SpectralField apply_smoothing_propagator(const SymbolTable& table, const SpectralField& phi, double t) {
    if (t < 0.0) throw InvalidInput("apply_smoothing_propagator needs t >= 0");
    SpectralField out = phi;
    for (std::size_t p = 0; p < table.size(); ++p) out[p] *= table.propagator_at(p, t).g / (1.0 + table.r2(p));
    return out;
}

/// sup over the lattice of |G^(xi, t)| / (1 + |xi|^2) restricted to |xi| >= r_min.
inline double smoothing_envelope(const SymbolTable& table, double t, double r_min = 0.0) {
    double worst = 0.0;
    for (std::size_t p = 0; p < table.size(); ++p)
        if (table.r2(p) >= r_min * r_min)
            worst = std::max(worst, std::abs(table.propagator_at(p, t).g) / (1.0 + table.r2(p)));
    return worst;
}

/// mass * G0(., t) as a spectral field.
inline SpectralField g0_field(const SymbolTable& table, double t, double mass = 1.0) {
    if (t < 0.0) throw InvalidInput("g0_field needs t >= 0");
    SpectralField out(table.grid());
    for (std::size_t p = 0; p < table.size(); ++p)
        out[p] = mass * std::exp(-table.gamma(p) * table.r2(p) * table.r2(p) * t);
    return out;
}

/// G0(t) * f.
inline SpectralField apply_g0(const SymbolTable& table, const SpectralField& f, double t) {
    if (t < 0.0) throw InvalidInput("apply_g0 needs t >= 0");
    SpectralField out = f;
    for (std::size_t p = 0; p < table.size(); ++p) out[p] *= std::exp(-table.gamma(p) * table.r2(p) * table.r2(p) * t);
    return out;
}

/// phi0(x) = F^{-1}[exp(-gamma |xi|^4)](x) on R^n for a direction-independent
/// gamma, by a radial (Hankel-type) integral evaluated with composite
/// Gauss-Legendre quadrature.
inline double phi0_isotropic(double radius, int dim, double gamma = 1.0) {
    if (dim < 1 || dim > 3) throw InvalidInput("phi0 dimension must be 1, 2 or 3");
    if (!(gamma > 0.0)) throw InvalidInput("phi0 needs gamma > 0");
    const double r_max = std::pow(45.0 / gamma, 0.25);
    const int panels = std::max(8, static_cast<int>(std::ceil(r_max * radius / std::numbers::pi * 2.0)) + 8);
    auto decay = [gamma](double r) { return std::exp(-gamma * r * r * r * r); };
    const double pi = std::numbers::pi;
    switch (dim) {
    case 1:
        return integrate([&](double r) { return std::cos(r * radius) * decay(r); }, 0.0, r_max, panels) / pi;
    case 2:
        return integrate([&](double r) { return std::cyl_bessel_j(0.0, r * radius) * decay(r) * r; }, 0.0, r_max,
                         panels) /
               (2.0 * pi);
    default:
        return integrate(
                   [&](double r) {
                       double z = r * radius;
                       double sinc = (z < 1e-8) ? 1.0 - z * z / 6.0 : std::sin(z) / z;
                       return sinc * decay(r) * r * r;
                   },
                   0.0, r_max, panels) /
               (2.0 * pi * pi);
    }
}

}  // namespace plate
