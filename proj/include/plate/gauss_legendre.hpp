#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

#include "plate/errors.hpp"

namespace plate {

struct GaussRule {
    std::vector<double> nodes;    // on [-1, 1], ascending
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule by Newton iteration on P_n; cached per n.
inline const GaussRule& gauss_legendre(int n) {
    if (n < 1) throw InvalidInput("Gauss-Legendre rule needs at least one node");
    static std::mutex mutex;
    static std::map<int, GaussRule> cache;
    std::lock_guard lock(mutex);
    if (auto it = cache.find(n); it != cache.end()) return it->second;

    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return cache.emplace(n, std::move(rule)).first->second;
}

/// Integrates f over [a, b] with `panels` equal panels of an n-point rule.
template <class F>
double integrate(F&& f, double a, double b, int panels = 1, int n = 16) {
    const GaussRule& rule = gauss_legendre(n);
    const double h = (b - a) / panels;
    double acc = 0.0;
    for (int p = 0; p < panels; ++p) {
        double mid = a + (p + 0.5) * h;
        for (int i = 0; i < n; ++i) acc += rule.weights[i] * f(mid + 0.5 * h * rule.nodes[i]);
    }
    return 0.5 * h * acc;
}

}  // namespace plate
