#include <cmath>
#include <numbers>
#include <random>

#include "catch_amalgamated.hpp"

#include "plate/spectral_grid.hpp"

using namespace plate;
using Catch::Approx;

namespace {

constexpr double pi = std::numbers::pi;

PhysicalField random_field(const GridSpec& g, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> nd;
    PhysicalField f(g);
    for (double& v : f.values) v = nd(rng);
    return f;
}

// Direct O(size^2) sum of exp(-i x.xi) f(x) h^n.
Complex naive_coefficient(const PhysicalField& f, const Vec3& xi) {
    Complex acc{};
    for (std::size_t p = 0; p < f.grid.size(); ++p) {
        Vec3 x = f.grid.position(p);
        acc += std::polar(f.values[p], -(x[0] * xi[0] + x[1] * xi[1] + x[2] * xi[2]));
    }
    return acc * f.grid.cell_volume();
}

double max_abs_diff(const PhysicalField& a, const PhysicalField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

}  // namespace

TEST_CASE("grid geometry", "[grid]") {
    GridSpec g(2, 3.0, 8);
    CHECK(g.size() == 64u);
    CHECK(g.spacing() == Approx(0.75));
    CHECK(g.cell_volume() == Approx(0.5625));
    CHECK(g.wavenumber_step() == Approx(pi / 3.0));
    CHECK(g.position(0)[0] == Approx(-3.0));
    for (std::size_t p = 0; p < g.size(); ++p) {
        Index3 m = g.mode(p);
        CHECK(m[0] >= -4);
        CHECK(m[0] < 4);
        CHECK(g.flat_index(m) == p);
    }
}

TEST_CASE("grid rejects bad parameters", "[grid]") {
    CHECK_THROWS_AS(GridSpec(0, 1.0, 8), InvalidInput);
    CHECK_THROWS_AS(GridSpec(4, 1.0, 8), InvalidInput);
    CHECK_THROWS_AS(GridSpec(1, -1.0, 8), InvalidInput);
    CHECK_THROWS_AS(GridSpec(1, 1.0, 7), InvalidInput);
    CHECK_THROWS_AS(PhysicalField(GridSpec(1, 1.0, 8), std::vector<double>(7)), InvalidInput);
    std::vector<double> samples(9);
    CHECK_THROWS_AS(forward_transform(samples, GridSpec(1, 1.0, 8)), InvalidInput);
}

TEST_CASE("forward transform of a constant and of cos x", "[transform]") {
    GridSpec g(1, pi, 8);
    SpectralField one = forward_transform(PhysicalField::sample(g, [](const Vec3&) { return 1.0; }));
    for (std::size_t p = 0; p < g.size(); ++p) {
        Complex expect = g.mode(p)[0] == 0 ? Complex{2.0 * pi, 0.0} : Complex{};
        CHECK(std::abs(one[p] - expect) < 1e-12);
    }
    SpectralField c = forward_transform(PhysicalField::sample(g, [](const Vec3& x) { return std::cos(x[0]); }));
    for (std::size_t p = 0; p < g.size(); ++p) {
        Complex expect = std::abs(g.mode(p)[0]) == 1 ? Complex{pi, 0.0} : Complex{};
        CHECK(std::abs(c[p] - expect) < 1e-12);
    }
}

TEST_CASE("forward transform matches the direct lattice sum", "[transform][oracle]") {
    for (int dim = 1; dim <= 3; ++dim) {
        GridSpec g(dim, 2.5, dim == 3 ? 6 : 10);
        PhysicalField f = random_field(g, 7 + dim);
        SpectralField fh = forward_transform(f);
        double worst = 0.0;
        for (std::size_t p = 0; p < g.size(); ++p)
            worst = std::max(worst, std::abs(fh[p] - naive_coefficient(f, g.wavevector(p))));
        CHECK(worst < 1e-12 * g.size());
    }
}

TEST_CASE("round trip and Hermitian symmetry", "[transform][property]") {
    for (int dim = 1; dim <= 3; ++dim) {
        for (unsigned seed = 0; seed < 5; ++seed) {
            GridSpec g(dim, 1.0 + seed, dim == 3 ? 8 : 32);
            PhysicalField f = random_field(g, seed);
            SpectralField fh = forward_transform(f);
            CHECK(fh.hermitian_defect() < 1e-12 * g.size());
            PhysicalField back = inverse_transform(fh);
            CHECK(max_abs_diff(back, f) < 1e-12 * 10);
        }
    }
}

TEST_CASE("Parseval", "[transform][property]") {
    for (unsigned seed = 0; seed < 10; ++seed) {
        GridSpec g(2, 0.5 + seed, 16);
        PhysicalField f = random_field(g, 100 + seed);
        SpectralField fh = forward_transform(f);
        CHECK(homogeneous_norm(fh, 0) == Approx(l2_norm(f)).epsilon(1e-12));
        CHECK(sobolev_norm(fh, 0) == Approx(l2_norm(f)).epsilon(1e-12));
    }
}

TEST_CASE("spectral derivatives", "[derivative]") {
    GridSpec g(1, pi, 32);
    SpectralField c = forward_transform(PhysicalField::sample(g, [](const Vec3& x) { return std::cos(x[0]); }));
    PhysicalField d = inverse_transform(spectral_derivative(c, {1}));
    CHECK(max_abs_diff(d, PhysicalField::sample(g, [](const Vec3& x) { return -std::sin(x[0]); })) < 1e-12);

    GridSpec g2(2, pi, 16);
    SpectralField e = forward_transform(PhysicalField::sample(g2, [](const Vec3& x) { return std::cos(2.0 * x[0]); }));
    SpectralField lap = laplacian(e);
    for (std::size_t p = 0; p < g2.size(); ++p) CHECK(std::abs(lap[p] + 4.0 * e[p]) < 1e-12);

    CHECK_THROWS_AS(spectral_derivative(e, {1, 0, 0}), InvalidInput);
    CHECK_THROWS_AS(spectral_derivative(e, {-1, 0}), InvalidInput);
}

TEST_CASE("fourth derivative of a Gaussian against central differences", "[derivative][oracle]") {
    GridSpec g(1, 20.0, 512);
    auto gauss = [](double x) { return std::exp(-0.5 * x * x); };
    SpectralField f = forward_transform(PhysicalField::sample(g, [&](const Vec3& x) { return gauss(x[0]); }));
    PhysicalField d4 = inverse_transform(spectral_derivative(f, {4}));
    const double h = 1e-2;
    double err = 0.0, ref = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        double x = g.position(p)[0];
        double fd = (gauss(x - 2 * h) - 4 * gauss(x - h) + 6 * gauss(x) - 4 * gauss(x + h) + gauss(x + 2 * h)) /
                    std::pow(h, 4);
        err = std::max(err, std::abs(fd - d4.values[p]));
        ref = std::max(ref, std::abs(fd));
    }
    CHECK(err / ref < 1e-4);
}

TEST_CASE("odd derivatives vanish on the Nyquist mode", "[derivative]") {
    GridSpec g(1, pi, 8);
    SpectralField f = forward_transform(PhysicalField::sample(g, [](const Vec3& x) { return std::cos(4.0 * x[0]); }));
    SpectralField d = spectral_derivative(f, {1});
    for (std::size_t p = 0; p < g.size(); ++p) CHECK(std::abs(d[p]) < 1e-12);
    SpectralField d2 = spectral_derivative(f, {2});
    CHECK(std::abs(d2.at_mode({-4, 0, 0}) + 16.0 * f.at_mode({-4, 0, 0})) < 1e-9);
}

TEST_CASE("Sobolev norms", "[norms]") {
    GridSpec g(1, pi, 32);
    SpectralField zero(g);
    for (int s = 0; s < 5; ++s) CHECK(sobolev_norm(zero, s) == 0.0);
    // ||sin 3x||^2_{H^1} = (1 + 9) pi on [-pi, pi)
    SpectralField f = forward_transform(PhysicalField::sample(g, [](const Vec3& x) { return std::sin(3.0 * x[0]); }));
    CHECK(sobolev_norm(f, 1) == Approx(std::sqrt(10.0 * pi)).epsilon(1e-12));
    CHECK(homogeneous_norm(f, 2) == Approx(std::sqrt(81.0 * pi)).epsilon(1e-12));
    CHECK(derivative_sobolev_norm(f, 2, 1) == Approx(std::sqrt((81.0 + 729.0) * pi)).epsilon(1e-12));
    CHECK_THROWS_AS(sobolev_norm(f, -1), InvalidInput);

    // Sum over all k-th derivatives equals the isotropic |xi|^k form.
    GridSpec g2(2, 2.0, 16);
    SpectralField r = dealias(forward_transform(random_field(g2, 3)), 0.5);
    double sum = 0.0;
    for (auto alpha : {std::vector<int>{2, 0}, {1, 1}, {1, 1}, {0, 2}})
        sum += std::pow(homogeneous_norm(spectral_derivative(r, alpha), 0), 2);
    CHECK(std::sqrt(sum) == Approx(homogeneous_norm(r, 2)).epsilon(1e-12));
}

TEST_CASE("L1 and Linf norms", "[norms]") {
    GridSpec g(1, 30.0, 1024);
    PhysicalField f = PhysicalField::sample(g, [](const Vec3& x) { return std::exp(-0.5 * x[0] * x[0]); });
    CHECK(lp_norm(f, LpKind::L1) == Approx(std::sqrt(2.0 * pi)).epsilon(1e-10));
    CHECK(lp_norm(f, LpKind::Linf) == Approx(1.0));
    // int (1 + |x|) e^{-x^2/2} = sqrt(2 pi) + 2; the kink of |x| costs O(h^2).
    GridSpec fine(1, 30.0, 16384);
    PhysicalField ff = PhysicalField::sample(fine, [](const Vec3& x) { return std::exp(-0.5 * x[0] * x[0]); });
    CHECK(lp_norm(ff, LpKind::L1, true) == Approx(std::sqrt(2.0 * pi) + 2.0).epsilon(1e-6));
    CHECK(lp_norm(forward_transform(f), LpKind::L1) == Approx(std::sqrt(2.0 * pi)).epsilon(1e-10));
}

TEST_CASE("dealiasing", "[dealias][property]") {
    GridSpec g(2, pi, 24);
    SpectralField f = forward_transform(random_field(g, 11));
    SpectralField d = dealias(f, kTwoThirds);
    for (std::size_t p = 0; p < g.size(); ++p) {
        Index3 m = g.mode(p);
        bool kept = std::abs(m[0]) < 8 && std::abs(m[1]) < 8;
        CHECK(std::abs(d[p] - (kept ? f[p] : Complex{})) < 1e-15);
    }
    SpectralField same = dealias(f, 1.0);
    for (std::size_t p = 0; p < g.size(); ++p) CHECK(same[p] == f[p]);
    CHECK_THROWS_AS(dealias(f, 0.0), InvalidInput);
    CHECK_THROWS_AS(dealias(f, 1.5), InvalidInput);

    // Differentiation commutes with the cutoff and the result stays real.
    SpectralField a = dealias(spectral_derivative(f, {1, 2}), kTwoThirds);
    SpectralField b = spectral_derivative(dealias(f, kTwoThirds), {1, 2});
    for (std::size_t p = 0; p < g.size(); ++p) CHECK(std::abs(a[p] - b[p]) < 1e-12);
    CHECK(d.hermitian_defect() < 1e-12);
}

TEST_CASE("truncation fraction flags unresolved orders", "[norms]") {
    GridSpec g(1, 10.0, 256);
    SpectralField smooth = forward_transform(PhysicalField::sample(g, [](const Vec3& x) { return std::exp(-x[0] * x[0]); }));
    CHECK(truncation_fraction(smooth, 0) < 1e-12);
    SpectralField rough = forward_transform(random_field(g, 5));
    CHECK(truncation_fraction(rough, 4) > 0.1);
}

TEST_CASE("mixing grids is rejected", "[grid]") {
    SpectralField a(GridSpec(1, 1.0, 8)), b(GridSpec(1, 2.0, 8));
    CHECK_THROWS_AS(a += b, InvalidInput);
}
