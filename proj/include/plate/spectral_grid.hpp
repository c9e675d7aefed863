#pragma once

// Periodic lattice on [-L, L)^n, continuum-normalised Fourier transform, spectral
// differentiation and norm evaluation.
//
// Transform convention: f^(xi) = sum_x exp(-i x.xi) f(x) h^n, the lattice
// quadrature of the R^n integral, so that L^1/L^2 values on compactly supported
// data match their R^n counterparts. Wavenumbers are xi = (pi/L) m with
// -N/2 <= m_i < N/2; storage is FFT order (m = i for i < N/2, i - N otherwise),
// row-major with axis 0 slowest.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "plate/errors.hpp"

namespace plate {

using Complex = std::complex<double>;
using Vec3 = std::array<double, 3>;
using Index3 = std::array<int, 3>;

class GridSpec {
public:
    GridSpec() = default;

    GridSpec(int dim, double half_length, int points_per_axis)
        : dim_(dim), half_length_(half_length), points_(points_per_axis) {
        if (dim < 1 || dim > 3) throw InvalidInput("grid dimension must be 1, 2 or 3");
        if (!(half_length > 0.0) || !std::isfinite(half_length))
            throw InvalidInput("grid half_length must be positive");
        if (points_per_axis < 4 || points_per_axis % 2 != 0)
            throw InvalidInput("points_per_axis must be even and >= 4");
    }

    int dim() const { return dim_; }
    double half_length() const { return half_length_; }
    int points_per_axis() const { return points_; }

    std::size_t size() const {
        std::size_t s = 1;
        for (int a = 0; a < dim_; ++a) s *= static_cast<std::size_t>(points_);
        return s;
    }

    double spacing() const { return 2.0 * half_length_ / points_; }
    double cell_volume() const { return std::pow(spacing(), dim_); }
    /// Lattice spacing in Fourier space, pi / L.
    double wavenumber_step() const { return std::numbers::pi / half_length_; }
    /// Volume element of the dual lattice divided by (2 pi)^n.
    double spectral_weight() const {
        return std::pow(wavenumber_step() / (2.0 * std::numbers::pi), dim_);
    }

    Index3 axis_indices(std::size_t flat) const {
        Index3 idx{0, 0, 0};
        for (int a = dim_ - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(flat % points_);
            flat /= points_;
        }
        return idx;
    }

    std::size_t flat_index(const Index3& idx) const {
        std::size_t flat = 0;
        for (int a = 0; a < dim_; ++a) {
            int i = ((idx[a] % points_) + points_) % points_;
            flat = flat * points_ + static_cast<std::size_t>(i);
        }
        return flat;
    }

    /// Integer lattice coordinates m of the mode stored at `flat`.
    Index3 mode(std::size_t flat) const {
        Index3 m = axis_indices(flat);
        for (int a = 0; a < dim_; ++a)
            if (m[a] >= points_ / 2) m[a] -= points_;
        return m;
    }

    Vec3 wavevector(std::size_t flat) const {
        Index3 m = mode(flat);
        Vec3 xi{0.0, 0.0, 0.0};
        for (int a = 0; a < dim_; ++a) xi[a] = wavenumber_step() * m[a];
        return xi;
    }

    Vec3 position(std::size_t flat) const {
        Index3 j = axis_indices(flat);
        Vec3 x{0.0, 0.0, 0.0};
        for (int a = 0; a < dim_; ++a) x[a] = -half_length_ + spacing() * j[a];
        return x;
    }

    friend bool operator==(const GridSpec& a, const GridSpec& b) {
        return a.dim_ == b.dim_ && a.half_length_ == b.half_length_ && a.points_ == b.points_;
    }

private:
    int dim_ = 1;
    double half_length_ = std::numbers::pi;
    int points_ = 8;
};

inline double norm_squared(const Vec3& v) { return v[0] * v[0] + v[1] * v[1] + v[2] * v[2]; }

/// Real samples on the lattice, row-major.
struct PhysicalField {
    GridSpec grid;
    std::vector<double> values;

    PhysicalField() = default;
    explicit PhysicalField(const GridSpec& g) : grid(g), values(g.size(), 0.0) {}
    PhysicalField(const GridSpec& g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.size())
            throw InvalidInput("sample count does not match grid size");
    }

    template <class F>
    static PhysicalField sample(const GridSpec& g, F&& fn) {
        PhysicalField out(g);
        for (std::size_t p = 0; p < g.size(); ++p) out.values[p] = fn(g.position(p));
        return out;
    }
};

/// Fourier coefficients of a real field; Hermitian symmetric by construction.
class SpectralField {
public:
    SpectralField() = default;
    explicit SpectralField(const GridSpec& g) : grid_(g), coeffs_(g.size(), Complex{0.0, 0.0}) {}
    SpectralField(const GridSpec& g, std::vector<Complex> c) : grid_(g), coeffs_(std::move(c)) {
        if (coeffs_.size() != grid_.size())
            throw InvalidInput("coefficient count does not match grid size");
    }

    const GridSpec& grid() const { return grid_; }
    std::size_t size() const { return coeffs_.size(); }
    std::span<Complex> coeffs() { return coeffs_; }
    std::span<const Complex> coeffs() const { return coeffs_; }
    Complex& operator[](std::size_t i) { return coeffs_[i]; }
    const Complex& operator[](std::size_t i) const { return coeffs_[i]; }

    Complex at_mode(const Index3& m) const { return coeffs_[grid_.flat_index(m)]; }

    SpectralField& operator+=(const SpectralField& o) {
        require_same_grid(o);
        for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
        return *this;
    }
    SpectralField& operator-=(const SpectralField& o) {
        require_same_grid(o);
        for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
        return *this;
    }
    SpectralField& operator*=(double s) {
        for (auto& c : coeffs_) c *= s;
        return *this;
    }
    friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
    friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
    friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

    /// Largest |c(-xi) - conj(c(xi))| over the lattice. The Nyquist planes are
    /// their own mirror images and are compared against themselves.
    double hermitian_defect() const {
        double worst = 0.0;
        for (std::size_t p = 0; p < coeffs_.size(); ++p) {
            Index3 m = grid_.mode(p);
            Index3 neg{-m[0], -m[1], -m[2]};
            worst = std::max(worst, std::abs(coeffs_[grid_.flat_index(neg)] - std::conj(coeffs_[p])));
        }
        return worst;
    }

    void require_same_grid(const SpectralField& o) const {
        if (!(grid_ == o.grid_)) throw InvalidInput("spectral fields live on different grids");
    }

private:
    GridSpec grid_;
    std::vector<Complex> coeffs_;
};

namespace detail {

// FFTW planning is not thread-safe; plans are created once per (dim, N) under a
// lock and executed through the thread-safe new-array interface.
class FftPlans {
public:
    struct Pair {
        fftw_plan forward = nullptr;
        fftw_plan backward = nullptr;
    };

    static const Pair& get(const GridSpec& g) {
        static FftPlans cache;
        std::lock_guard lock(cache.mutex_);
        auto key = std::make_pair(g.dim(), g.points_per_axis());
        auto it = cache.plans_.find(key);
        if (it != cache.plans_.end()) return it->second;
        std::vector<Complex> a(g.size()), b(g.size());
        int dims[3] = {g.points_per_axis(), g.points_per_axis(), g.points_per_axis()};
        auto* in = reinterpret_cast<fftw_complex*>(a.data());
        auto* out = reinterpret_cast<fftw_complex*>(b.data());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        Pair p;
        p.forward = fftw_plan_dft(g.dim(), dims, in, out, FFTW_FORWARD, flags);
        p.backward = fftw_plan_dft(g.dim(), dims, in, out, FFTW_BACKWARD, flags);
        return cache.plans_.emplace(key, p).first->second;
    }

    ~FftPlans() {
        for (auto& [key, p] : plans_) {
            fftw_destroy_plan(p.forward);
            fftw_destroy_plan(p.backward);
        }
    }

private:
    std::mutex mutex_;
    std::map<std::pair<int, int>, Pair> plans_;
};

inline void execute(fftw_plan plan, std::vector<Complex>& in, std::vector<Complex>& out) {
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
}

// exp(-i xi . x0) with x0 = (-L, ..., -L) equals (-1)^{sum m}.
inline double origin_phase(const GridSpec& g, std::size_t flat) {
    Index3 m = g.mode(flat);
    int s = 0;
    for (int a = 0; a < g.dim(); ++a) s += m[a];
    return (s % 2 == 0) ? 1.0 : -1.0;
}

}  // namespace detail

inline SpectralField forward_transform(const PhysicalField& f) {
    const GridSpec& g = f.grid;
    if (f.values.size() != g.size()) throw InvalidInput("sample count does not match grid size");
    std::vector<Complex> in(f.values.begin(), f.values.end());
    std::vector<Complex> out(g.size());
    detail::execute(detail::FftPlans::get(g).forward, in, out);
    const double h = g.cell_volume();
    for (std::size_t p = 0; p < out.size(); ++p) out[p] *= h * detail::origin_phase(g, p);
    return SpectralField(g, std::move(out));
}

inline SpectralField forward_transform(std::span<const double> samples, const GridSpec& grid) {
    if (samples.size() != grid.size())
        throw InvalidInput("sample count " + std::to_string(samples.size()) +
                           " does not match grid size " + std::to_string(grid.size()));
    return forward_transform(PhysicalField(grid, std::vector<double>(samples.begin(), samples.end())));
}

/// Inverse transform; the imaginary residue of a Hermitian field is discarded.
inline PhysicalField inverse_transform(const SpectralField& f) {
    const GridSpec& g = f.grid();
    std::vector<Complex> in(f.coeffs().begin(), f.coeffs().end());
    for (std::size_t p = 0; p < in.size(); ++p) in[p] *= detail::origin_phase(g, p);
    std::vector<Complex> out(g.size());
    detail::execute(detail::FftPlans::get(g).backward, in, out);
    PhysicalField r(g);
    const double scale = 1.0 / (g.cell_volume() * static_cast<double>(g.size()));
    for (std::size_t p = 0; p < out.size(); ++p) r.values[p] = out[p].real() * scale;
    return r;
}

/// Multiplies every coefficient by symbol(flat index, wavevector).
template <class Symbol>
SpectralField apply_multiplier(const SpectralField& f, Symbol&& symbol) {
    SpectralField out = f;
    const GridSpec& g = f.grid();
    for (std::size_t p = 0; p < g.size(); ++p) out[p] *= symbol(p, g.wavevector(p));
    return out;
}

/// Applies prod_j (i xi_j)^{k_j}. Odd-order derivatives along an axis zero that
/// axis' Nyquist plane, which has no real partner.
inline SpectralField spectral_derivative(const SpectralField& f, std::span<const int> multi_index) {
    const GridSpec& g = f.grid();
    if (static_cast<int>(multi_index.size()) > g.dim())
        throw InvalidInput("multi-index longer than grid dimension");
    for (int k : multi_index)
        if (k < 0) throw InvalidInput("negative derivative order");
    SpectralField out = f;
    const int nyq = -g.points_per_axis() / 2;
    for (std::size_t p = 0; p < g.size(); ++p) {
        Index3 m = g.mode(p);
        Vec3 xi = g.wavevector(p);
        Complex factor{1.0, 0.0};
        for (std::size_t a = 0; a < multi_index.size(); ++a) {
            int k = multi_index[a];
            if (k == 0) continue;
            if (k % 2 == 1 && m[a] == nyq) {
                factor = 0.0;
                break;
            }
            factor *= std::pow(Complex{0.0, xi[a]}, k);
        }
        out[p] *= factor;
    }
    return out;
}

inline SpectralField spectral_derivative(const SpectralField& f, std::initializer_list<int> multi_index) {
    std::vector<int> mi(multi_index);
    return spectral_derivative(f, std::span<const int>(mi));
}

inline SpectralField laplacian(const SpectralField& f) {
    return apply_multiplier(f, [](std::size_t, const Vec3& xi) { return Complex{-norm_squared(xi), 0.0}; });
}

/// || |xi|^k f^ ||_{L^2}: the L^2 norm of the isotropic k-th derivative.
inline double homogeneous_norm(const SpectralField& f, int k) {
    const GridSpec& g = f.grid();
    double acc = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        double r2 = norm_squared(g.wavevector(p));
        acc += std::pow(r2, k) * std::norm(f[p]);
    }
    return std::sqrt(acc * g.spectral_weight());
}

/// H^s norm, sum over k <= s of || |xi|^k f^ ||^2, by Plancherel.
inline double sobolev_norm(const SpectralField& f, int s) {
    if (s < 0) throw InvalidInput("Sobolev order must be nonnegative");
    const GridSpec& g = f.grid();
    double acc = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        double r2 = norm_squared(g.wavevector(p));
        double w = 0.0, term = 1.0;
        for (int k = 0; k <= s; ++k) {
            w += term;
            term *= r2;
        }
        acc += w * std::norm(f[p]);
    }
    return std::sqrt(acc * g.spectral_weight());
}

/// H^m norm of the isotropic j-th derivative: sum_{l<=m} || |xi|^{j+l} f^ ||^2.
inline double derivative_sobolev_norm(const SpectralField& f, int j, int m) {
    if (m < 0) return 0.0;
    const GridSpec& g = f.grid();
    double acc = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        double r2 = norm_squared(g.wavevector(p));
        double base = std::pow(r2, j), w = 0.0, term = 1.0;
        for (int l = 0; l <= m; ++l) {
            w += term;
            term *= r2;
        }
        acc += base * w * std::norm(f[p]);
    }
    return std::sqrt(acc * g.spectral_weight());
}

/// Physical-space L^2 norm by lattice quadrature.
inline double l2_norm(const PhysicalField& f) {
    double acc = 0.0;
    for (double v : f.values) acc += v * v;
    return std::sqrt(acc * f.grid.cell_volume());
}

enum class LpKind { L1, Linf };

inline double lp_norm(const PhysicalField& f, LpKind kind, bool weighted = false) {
    if (kind == LpKind::Linf) {
        double m = 0.0;
        for (double v : f.values) m = std::max(m, std::abs(v));
        return m;
    }
    double acc = 0.0;
    for (std::size_t p = 0; p < f.values.size(); ++p) {
        double w = 1.0;
        if (weighted) w += std::sqrt(norm_squared(f.grid.position(p)));
        acc += w * std::abs(f.values[p]);
    }
    return acc * f.grid.cell_volume();
}

inline double lp_norm(const SpectralField& f, LpKind kind, bool weighted = false) {
    return lp_norm(inverse_transform(f), kind, weighted);
}

/// Zeroes every mode with some |m_i| >= fraction * N / 2. fraction = 1 keeps all
/// modes, the Nyquist planes included.
inline SpectralField dealias(const SpectralField& f, double fraction) {
    if (!(fraction > 0.0) || fraction > 1.0) throw InvalidInput("dealias fraction must lie in (0, 1]");
    if (fraction == 1.0) return f;
    SpectralField out = f;
    const GridSpec& g = f.grid();
    const double cut = fraction * g.points_per_axis() / 2.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        Index3 m = g.mode(p);
        for (int a = 0; a < g.dim(); ++a) {
            if (std::abs(m[a]) >= cut) {
                out[p] = 0.0;
                break;
            }
        }
    }
    return out;
}

inline constexpr double kTwoThirds = 2.0 / 3.0;

/// Fraction of the weighted spectrum sum |xi|^{2k} |f^|^2 carried by modes in the
/// outer quarter of the retained band; large values mean order k is not resolved.
inline double truncation_fraction(const SpectralField& f, int k, double retained_fraction = kTwoThirds) {
    const GridSpec& g = f.grid();
    const double outer = 0.75 * retained_fraction * g.points_per_axis() / 2.0;
    double total = 0.0, tail = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        Index3 m = g.mode(p);
        double w = std::pow(norm_squared(g.wavevector(p)), k) * std::norm(f[p]);
        total += w;
        int mmax = 0;
        for (int a = 0; a < g.dim(); ++a) mmax = std::max(mmax, std::abs(m[a]));
        if (mmax >= outer) tail += w;
    }
    return total > 0.0 ? tail / total : 0.0;
}

}  // namespace plate
