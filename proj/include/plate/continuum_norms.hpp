#pragma once

// R^n L^2 norms of d^k (operator symbol x data symbol) by Plancherel,
//     || d^k S(t) phi ||^2 = (2 pi)^{-n} int |xi|^{2k} |S(xi, t)|^2 |phi^(xi)|^2 dxi,
// evaluated in polar coordinates: composite Gauss-Legendre in radius (mapped to
// [0, inf) by r = s x / (1 - x)) times trapezoid (2D) or Gauss x trapezoid (3D)
// in angle. The radial rule is refined until the relative change drops below
// tol, then the angular rule.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <string>

#include "plate/errors.hpp"
#include "plate/gauss_legendre.hpp"
#include "plate/linear_symbols.hpp"

namespace plate {

/// Analytic Fourier transforms of built-in initial data.
struct DataSymbol {
    enum class Kind { Gaussian, DerivativeOfGaussian };

    Kind kind = Kind::Gaussian;
    double amplitude = 1.0;
    double width = 1.0;
    int axis = 0;

    /// A exp(-|x|^2 / (2 w^2)).
    static DataSymbol gaussian(double amplitude = 1.0, double width = 1.0) {
        return {Kind::Gaussian, amplitude, width, 0};
    }
    /// d/dx_axis of the Gaussian above; zero mean.
    static DataSymbol derivative_of_gaussian(int axis, double amplitude = 1.0, double width = 1.0) {
        return {Kind::DerivativeOfGaussian, amplitude, width, axis};
    }

    Complex operator()(const Vec3& xi, int dim) const {
        const double w2 = width * width;
        double base = amplitude * std::pow(2.0 * std::numbers::pi * w2, 0.5 * dim) *
                      std::exp(-0.5 * w2 * norm_squared(xi));
        if (kind == Kind::Gaussian) return {base, 0.0};
        return {0.0, xi[axis] * base};
    }
};

enum class SymbolOperator {
    G,
    H,
    Gt,
    Ht,
    G0,
    G0t,
    LinearSolution,      // G + H, i.e. u0 = data, u1 = 0
    LinearSolutionRate,  // G_t + H_t
    LinearMinusG0,       // G + H - G0
};

inline double operator_symbol(SymbolOperator op, double r2, double gamma, double t) {
    const double g0 = std::exp(-gamma * r2 * r2 * t);
    switch (op) {
    case SymbolOperator::G0: return g0;
    case SymbolOperator::G0t: return -gamma * r2 * r2 * g0;
    default: break;
    }
    Propagator p = propagator(r2, gamma, t);
    switch (op) {
    case SymbolOperator::G: return p.g;
    case SymbolOperator::H: return p.h;
    case SymbolOperator::Gt: return p.gt;
    case SymbolOperator::Ht: return p.ht;
    case SymbolOperator::LinearSolution: return p.g + p.h;
    case SymbolOperator::LinearSolutionRate: return p.gt + p.ht;
    case SymbolOperator::LinearMinusG0: return p.g + p.h - g0;
    default: return 0.0;
    }
}

struct QuadratureResult {
    double value = 0.0;
    double relative_change = 0.0;
    int radial_nodes = 0;
    int angular_nodes = 0;
};

/// || d^k S(t) phi ||_{L^2(R^n)}. gamma_of_direction receives unit vectors.
inline QuadratureResult continuum_norm_quadrature(const DataSymbol& data, SymbolOperator op, int k, double t, int dim,
                                                  const std::function<double(const Vec3&)>& gamma_of_direction,
                                                  double tol = 1e-8) {
    if (dim < 1 || dim > 3) throw InvalidInput("continuum quadrature dimension must be 1, 2 or 3");
    if (k < 0) throw InvalidInput("derivative order must be nonnegative");
    const double scale = std::min(1.0, std::pow(1.0 + std::abs(t), -0.25));
    const int order = 16;
    const GaussRule& rule = gauss_legendre(order);

    auto evaluate = [&](int panels, int angular) {
        // Directions and their weights.
        std::vector<Vec3> dirs;
        std::vector<double> dw;
        if (dim == 1) {
            dirs = {{1.0, 0.0, 0.0}, {-1.0, 0.0, 0.0}};
            dw = {1.0, 1.0};
        } else if (dim == 2) {
            for (int j = 0; j < angular; ++j) {
                double th = 2.0 * std::numbers::pi * j / angular;
                dirs.push_back({std::cos(th), std::sin(th), 0.0});
                dw.push_back(2.0 * std::numbers::pi / angular);
            }
        } else {
            const GaussRule& polar = gauss_legendre(std::max(2, angular / 2));
            for (std::size_t i = 0; i < polar.nodes.size(); ++i) {
                double ct = polar.nodes[i], st = std::sqrt(1.0 - ct * ct);
                for (int j = 0; j < angular; ++j) {
                    double ph = 2.0 * std::numbers::pi * j / angular;
                    dirs.push_back({st * std::cos(ph), st * std::sin(ph), ct});
                    dw.push_back(polar.weights[i] * 2.0 * std::numbers::pi / angular);
                }
            }
        }
        std::vector<double> gam(dirs.size());
        for (std::size_t d = 0; d < dirs.size(); ++d) gam[d] = gamma_of_direction(dirs[d]);

        const double hx = 1.0 / panels;
        double acc = 0.0;
        for (int pnl = 0; pnl < panels; ++pnl) {
            const double mid = (pnl + 0.5) * hx;
            for (int i = 0; i < order; ++i) {
                const double x = mid + 0.5 * hx * rule.nodes[i];
                const double r = scale * x / (1.0 - x);
                const double jac = scale / ((1.0 - x) * (1.0 - x));
                const double r2 = r * r;
                double shell = 0.0;
                for (std::size_t d = 0; d < dirs.size(); ++d) {
                    Vec3 xi{r * dirs[d][0], r * dirs[d][1], r * dirs[d][2]};
                    double s = operator_symbol(op, r2, gam[d], t);
                    shell += dw[d] * s * s * std::norm(data(xi, dim));
                }
                acc += 0.5 * hx * rule.weights[i] * jac * std::pow(r, dim - 1) * std::pow(r2, k) * shell;
            }
        }
        return std::sqrt(acc / std::pow(2.0 * std::numbers::pi, dim));
    };

    // Radius first at a fixed angular rule, then angle at the converged radial rule.
    const int max_angular = dim == 2 ? 512 : 64;
    int panels = 8, angular = dim == 1 ? 2 : 16;
    double prev = evaluate(panels, angular);
    double change = 1.0;
    auto rel = [](double cur, double old) {
        return (cur == 0.0 && old == 0.0) ? 0.0 : std::abs(cur - old) / std::max(std::abs(cur), 1e-300);
    };
    bool radial_ok = false;
    for (int level = 0; level < 10 && !radial_ok; ++level) {
        panels *= 2;
        double cur = evaluate(panels, angular);
        change = rel(cur, prev);
        prev = cur;
        radial_ok = change < tol;
    }
    if (radial_ok) {
        if (dim == 1) return {prev, change, panels * order, angular};
        while (angular < max_angular) {
            angular *= 2;
            double cur = evaluate(panels, angular);
            change = rel(cur, prev);
            prev = cur;
            if (change < tol) return {cur, change, panels * order, angular};
        }
    }
    throw QuadratureError("continuum norm quadrature did not converge", change);
}

inline QuadratureResult continuum_norm_quadrature(const DataSymbol& data, SymbolOperator op, int k, double t, int dim,
                                                  double gamma = 1.0, double tol = 1e-8) {
    return continuum_norm_quadrature(data, op, k, t, dim, [gamma](const Vec3&) { return gamma; }, tol);
}

}  // namespace plate
