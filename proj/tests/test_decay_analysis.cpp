#include <cmath>
#include <numbers>
#include <vector>

#include "catch_amalgamated.hpp"

#include "plate/decay_analysis.hpp"

using namespace plate;
using Catch::Approx;

namespace {

constexpr double pi = std::numbers::pi;

std::vector<std::pair<double, double>> synthetic(double lo, double hi, int count, auto&& f) {
    std::vector<std::pair<double, double>> s;
    for (int i = 0; i < count; ++i) {
        double t = lo * std::pow(hi / lo, double(i) / (count - 1));
        s.emplace_back(t, f(t));
    }
    return s;
}

SpectralField gaussian(const GridSpec& g, double amplitude, double width) {
    return forward_transform(PhysicalField::sample(g, [&](const Vec3& x) {
        return amplitude * std::exp(-0.5 * norm_squared(x) / (width * width));
    }));
}

// Exact linear trajectory on log-spaced checkpoints (the linear flow needs no stepping).
std::vector<SimulationState> linear_trajectory(const SymbolTable& table, const SpectralField& u0,
                                               const SpectralField& u1, double t_end, int count) {
    std::vector<SimulationState> out;
    out.push_back({0.0, u0, u1, {}});
    for (int i = 0; i < count; ++i) {
        double t = std::pow(t_end, double(i) / (count - 1));
        LinearState s = apply_linear_flow(table, u0, u1, t);
        out.push_back({t, s.u, s.ut, {}});
    }
    return out;
}

}  // namespace

TEST_CASE("regularity index examples", "[indices]") {
    RegularityIndices a = regularity_indices(0, 2);
    CHECK(a.sigma0 == 0);
    CHECK(a.sigma1 == 0);
    CHECK(a.sigma == 0);
    CHECK(a.s_min == 8);
    RegularityIndices b = regularity_indices(2, 2);
    CHECK(b.sigma0 == 3);
    CHECK(b.sigma1 == 3);
    CHECK(b.sigma == 3);
    RegularityIndices c = regularity_indices(3, 3);
    CHECK(c.sigma0 == 5);
    CHECK(c.sigma1 == 5);
    CHECK(c.sigma == 5);
    CHECK(c.s_min == 6);
    CHECK(regularity_indices(0, 4).s_min == 8);
    CHECK(regularity_indices(0, 8).s_min == 11);
    CHECK_FALSE(regularity_indices(0, 1).s_min.has_value());
    CHECK_THROWS_AS(regularity_indices(-1, 2), InvalidInput);
    CHECK_THROWS_AS(regularity_indices(0, 0), InvalidInput);
}

TEST_CASE("sigma branches", "[indices][property]") {
    for (int k = 0; k <= 20; ++k) {
        RegularityIndices r = regularity_indices(k, 3);
        CHECK(r.sigma0 == r.sigma1);
        for (int n = 1; n <= 3; ++n) CHECK(regularity_indices(k, n).sigma == regularity_indices(k, n).sigma0);
        for (int n = 3; n <= 12; ++n) CHECK(regularity_indices(k, n).sigma == regularity_indices(k, n).sigma1);
    }
    CHECK(floor_div(-3, 2) == -2);
    CHECK(floor_div(3, 2) == 1);
}

TEST_CASE("descriptor names round-trip", "[series]") {
    for (const char* text : {"u:k=0:L2", "u_t:k=0:L2", "u-MG0(t+1):k=1:L2", "u_bar:k=2:H3", "u-u_bar:k=0:Linf",
                             "u_bar-G0*(u0+u1):k=0:L1", "G0*(u0+u1-Mphi0):k=0:L2"}) {
        CHECK(parse_descriptor(text).name() == text);
    }
    CHECK(parse_descriptor("u:k=2:H4") == Descriptor{Quantity::U, 2, NormType::Hs, 4});
    for (const char* bad : {"v:k=0:L2", "u:k=x:L2", "u:k=0:L3", "u:k=0", "u:L2"})
        CHECK_THROWS_AS(parse_descriptor(bad), InvalidInput);
}

TEST_CASE("norm series bookkeeping", "[series]") {
    NormSeries s;
    s.add(0.0, "u:k=0:L2", 1.0);
    s.add(0.0, "u_t:k=0:L2", 2.0);
    s.add(1.0, "u:k=0:L2", 0.5);
    CHECK(s.records().size() == 2u);
    CHECK(s.samples("u_t:k=0:L2").size() == 1u);
    CHECK(s.descriptors().size() == 2u);
    CHECK_THROWS_AS(s.add(0.5, "u:k=0:L2", 1.0), InvalidInput);
    CHECK_THROWS_AS(s.add(2.0, "u:k=0:L2", -1.0), AnalysisError);
    CHECK_THROWS_AS(s.add(2.0, "u:k=0:L2", std::nan("")), AnalysisError);
    NormSeries other;
    other.add(0.5, "u:k=1:L2", 3.0);
    s.merge(other);
    CHECK(s.records().size() == 3u);
    CHECK(s.records()[1].t == 0.5);
}

TEST_CASE("fit_rate on synthetic series", "[fit]") {
    auto exact = synthetic(1.0, 1e4, 40, [](double t) { return std::pow(1.0 + t, -0.25); });
    RateFit f = fit_rate(exact, 1.0, 1e4);
    CHECK(std::abs(f.exponent + 0.25) < 1e-12);
    CHECK(f.residual < 1e-12);
    CHECK(f.samples == 40);

    auto wobble = synthetic(1.0, 1e4, 60, [](double t) {
        return std::pow(1.0 + t, -0.5) * (2.0 + 0.01 * std::sin(std::log1p(t)));
    });
    CHECK(fit_rate(wobble, 1.0, 1e4).exponent == Approx(-0.5).margin(0.01));

    for (double p : {-2.0, -1.25, -0.1, 0.3}) {
        auto s = synthetic(0.5, 300.0, 12, [p](double t) { return 3.0 * std::pow(1.0 + t, p); });
        CHECK(std::abs(fit_rate(s, 0.5, 300.0).exponent - p) < 1e-10);
    }

    CHECK_THROWS_AS(fit_rate(exact, 5e3, 1e4), AnalysisError);  // too few samples
    CHECK_THROWS_AS(fit_rate(exact, 2.0, 1.0), InvalidInput);
    auto zero = synthetic(1.0, 10.0, 10, [](double) { return 0.0; });
    CHECK_THROWS_AS(fit_rate(zero, 1.0, 10.0), AnalysisError);
}

TEST_CASE("field norms", "[norms]") {
    CHECK(multi_indices(2, 2).size() == 3u);
    CHECK(multi_indices(3, 2).size() == 6u);
    GridSpec g(1, pi, 32);
    SpectralField f = forward_transform(PhysicalField::sample(g, [](const Vec3& x) { return std::sin(4 * x[0]); }));
    CHECK(field_norm(f, {Quantity::U, 0, NormType::Linf}) == Approx(1.0).epsilon(1e-12));
    CHECK(field_norm(f, {Quantity::U, 1, NormType::Linf}) == Approx(4.0).epsilon(1e-12));
    CHECK(field_norm(f, {Quantity::U, 2, NormType::L1}) == Approx(16.0 * field_norm(f, {Quantity::U, 0, NormType::L1})).epsilon(1e-12));
    CHECK(field_norm(f, {Quantity::U, 1, NormType::L2}) == Approx(4.0 * std::sqrt(pi)).epsilon(1e-12));
}

TEST_CASE("zero trajectories", "[weighted]") {
    GridSpec g(2, 8.0, 16);
    SpectralField z(g);
    std::vector<SimulationState> states{{0.0, z, z, {}}, {1.0, z, z, {}}, {2.0, z, z, {}}};
    WeightedEnergy w = weighted_energy_norms(states, 8);
    CHECK(w.E == 0.0);
    CHECK(w.D == 0.0);
    OptimalDecay m = optimal_decay_norms(states, 8, 2);
    CHECK(m.M0 == 0.0);
    CHECK(m.M1 == 0.0);
    LinftyIntegrals l = linfty_integrals(states, 0.8, 2);
    CHECK(l.L == 0.0);
    CHECK(l.N_d == 0.0);
    DataNorms d = data_norms(z, z, 8);
    CHECK(d.E0 == 0.0);
    CHECK(d.E1 == 0.0);
    CHECK(d.E2 == 0.0);
    CHECK_THROWS_AS(weighted_energy_norms(states, 1), InvalidInput);
    CHECK_THROWS_AS(linfty_integrals(states, 0.7, 2), InvalidInput);
}

TEST_CASE("weighted norms at a single checkpoint", "[weighted]") {
    GridSpec g(2, 8.0, 32);
    SpectralField u = gaussian(g, 0.1, 2.0), ut = gaussian(g, 0.05, 2.0);
    const int s = 4;
    WeightedEnergy w = weighted_energy_norms({{0.0, u, ut, {}}}, s);
    // j = 0, 1 for u and j = 0 for u_t, all with weight 1 at t = 0.
    double e2 = std::pow(derivative_sobolev_norm(u, 0, s + 1), 2) + std::pow(derivative_sobolev_norm(u, 2, s - 2), 2) +
                std::pow(sobolev_norm(ut, s), 2) + std::pow(derivative_sobolev_norm(ut, 0, s - 1), 2);
    CHECK(w.E == Approx(std::sqrt(e2)).epsilon(1e-12));
    CHECK(w.D == 0.0);
}

TEST_CASE("L-infinity integral of a synthetic power law", "[weighted]") {
    std::vector<double> t, l, h;
    const int count = 200000;
    for (int i = 0; i < count; ++i) {
        double x = 60.0 * i / (count - 1);  // log(1 + t) up to 60
        t.push_back(std::expm1(x));
        l.push_back(std::exp(-1.1 * x));
        h.push_back(std::exp(-x));
    }
    LinftyIntegrals r = linfty_integrals(t, l, h, 0.8);
    CHECK(r.L == Approx(10.0).margin(0.1));
    CHECK(r.N_d == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("data norms", "[data]") {
    GridSpec g(1, 30.0, 1024);
    SpectralField u0 = gaussian(g, 1.0, 1.0), z(g);
    DataNorms d = data_norms(u0, z, 0);
    CHECK(d.l1 == Approx(std::sqrt(2.0 * pi)).margin(1e-5));
    CHECK(d.sobolev == Approx(sobolev_norm(u0, 1)).epsilon(1e-14));
    DataNorms d2 = data_norms(2.0 * u0, z, 0);
    CHECK(d2.sobolev == Approx(2.0 * d.sobolev).epsilon(1e-14));
    CHECK(d2.l1 == Approx(2.0 * d.l1).epsilon(1e-14));
    CHECK(d2.l1_1 == Approx(2.0 * d.l1_1).epsilon(1e-14));
    CHECK(d2.E1 == Approx(2.0 * d.E1).epsilon(1e-14));
    CHECK(d2.E2 == Approx(2.0 * d.E2).epsilon(1e-14));
    CHECK(d.E1 == Approx(d.E0 + d.l1).epsilon(1e-14));
}

TEST_CASE("profile of exact G0 data", "[profile]") {
    GridSpec g(2, 16.0, 64);
    SymbolTable table(g, models::linear_isotropic(2));
    SpectralField z(g);
    SpectralField u1 = g0_field(table, 1.0, 2.5);
    ProfileContext ctx(table, z, u1);
    CHECK(ctx.mass() == Approx(2.5).epsilon(1e-14));
    for (double t : {0.0, 1.0, 10.0, 100.0}) {
        auto p = ctx.pieces(u1, t);
        CHECK(homogeneous_norm(p.data_profile, 0) <= 1e-13 * homogeneous_norm(ctx.profile(t), 0));
    }
}

TEST_CASE("linear decay on the torus", "[rates][property]") {
    GridSpec g(2, 32.0 * pi, 256);
    SymbolTable table(g, models::linear_isotropic(2));
    SpectralField u0 = gaussian(g, 0.05, 2.0), u1(g);
    auto states = linear_trajectory(table, u0, u1, 500.0, 60);

    std::vector<Descriptor> ds;
    for (int k = 0; k <= 2; ++k) ds.push_back({Quantity::U, k, NormType::L2});
    ds.push_back({Quantity::LinearMinusG0, 0, NormType::L2});
    ds.push_back({Quantity::LinearSolution, 0, NormType::L2});
    ProfileContext ctx(table, u0, u1);
    NormSeries series = norm_series(states, ds, &ctx);

    CHECK(fit_rate(series, ds[0], 20.0, 500.0).exponent == Approx(-0.25).margin(0.05));
    double e[3];
    for (int k = 0; k <= 2; ++k) e[k] = fit_rate(series, ds[k], 50.0, 500.0).exponent;
    for (int k = 1; k <= 2; ++k) {
        INFO("k = " << k << " exponents " << e[k - 1] << " " << e[k]);
        CHECK(e[k] - e[k - 1] == Approx(-0.25).margin(0.07));
    }

    // The linear solution approaches the parabolic one.
    std::vector<std::pair<double, double>> ratio;
    auto num = series.samples(ds[3]), den = series.samples(ds[4]);
    for (std::size_t i = 0; i < num.size(); ++i)
        if (num[i].first >= 10.0) ratio.emplace_back(num[i].first, num[i].second / den[i].second);
    for (std::size_t i = 1; i < ratio.size(); ++i) CHECK(ratio[i].second < ratio[i - 1].second);
    CHECK(fit_rate(ratio, 10.0, 500.0).exponent <= -0.2);

    // Triangle identity for the decomposition.
    NormSeries pe = profile_error(states, ctx, {0});
    for (const auto& r : pe.records()) {
        double total = r.values.at("u-MG0(t+1):k=0:L2");
        double sum = r.values.at("u-u_bar:k=0:L2") + r.values.at("u_bar-G0*(u0+u1):k=0:L2") +
                     r.values.at("G0*(u0+u1-Mphi0):k=0:L2");
        CHECK(total <= sum + 1e-10);
        CHECK(r.values.at("u-u_bar:k=0:L2") == 0.0);
    }

    // E(T) does not grow and M0(T) settles.
    std::vector<SimulationState> head(states.begin(), states.begin() + 30);
    double e_head = weighted_energy_norms(head, 4).E, e_all = weighted_energy_norms(states, 4).E;
    CHECK(e_all <= e_head * (1.0 + 1e-12));
    auto upto = [&](double T) {
        std::vector<SimulationState> out;
        for (const auto& s : states)
            if (s.t <= T) out.push_back(s);
        return optimal_decay_norms(out, 8, 2).M0;
    };
    CHECK(upto(500.0) / upto(100.0) == Approx(1.0).margin(0.5));
    CHECK(upto(500.0) >= upto(100.0));
}
