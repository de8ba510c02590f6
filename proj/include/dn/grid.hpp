#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <istream>
#include <mutex>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <fftw3.h>

#include "dn/coefficient.hpp"
#include "dn/error.hpp"

namespace dn {

/// Periodic torus [0, L)^n sampled with M points per axis (M even, >= 4).
/// Frequencies are xi_k = 2 pi k / L, k in {-M/2, ..., M/2 - 1}^n.
class GridSpec {
public:
    GridSpec(int n, double L, int M) : n_(n), L_(L), M_(M) {
        if (n < 1) throw ValidationError("grid dimension must be at least 1", "/grid/n");
        if (M < 4 || M % 2 != 0) throw ValidationError("M must be even and >= 4", "/grid/M");
        if (!(L > 0.0) || !std::isfinite(L)) throw ValidationError("period must be positive", "/grid/L");
    }

    int dimension() const noexcept { return n_; }
    double period() const noexcept { return L_; }
    int points_per_axis() const noexcept { return M_; }
    std::size_t total() const noexcept {
        std::size_t t = 1;
        for (int a = 0; a < n_; ++a) t *= static_cast<std::size_t>(M_);
        return t;
    }
    /// Spacing L / M; the unit-measure quadrature weight is 1 / total().
    double spacing() const noexcept { return L_ / M_; }

    /// Signed wavenumber of FFT-order index i along one axis.
    int wavenumber(int i) const noexcept { return i < M_ / 2 ? i : i - M_; }
    /// FFT-order index of a signed wavenumber.
    int fft_index(int k) const noexcept { return k >= 0 ? k : k + M_; }

    /// Per-axis FFT-order indices of a flat (row-major) index.
    std::vector<int> unflatten(std::size_t flat) const {
        std::vector<int> idx(n_);
        for (int a = n_ - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(flat % M_);
            flat /= M_;
        }
        return idx;
    }
    std::size_t flatten(std::span<const int> idx) const {
        std::size_t f = 0;
        for (int a = 0; a < n_; ++a) f = f * M_ + static_cast<std::size_t>(idx[a]);
        return f;
    }

    std::vector<double> point(std::size_t flat) const {
        const auto idx = unflatten(flat);
        std::vector<double> x(n_);
        for (int a = 0; a < n_; ++a) x[a] = idx[a] * spacing();
        return x;
    }
    /// Angular frequency vector of FFT-order flat index.
    std::vector<double> frequency(std::size_t flat) const {
        const auto idx = unflatten(flat);
        std::vector<double> xi(n_);
        for (int a = 0; a < n_; ++a) xi[a] = 2.0 * std::numbers::pi * wavenumber(idx[a]) / L_;
        return xi;
    }
    /// Signed wavenumbers of FFT-order flat index.
    std::vector<int> wavenumbers(std::size_t flat) const {
        auto idx = unflatten(flat);
        for (auto& i : idx) i = wavenumber(i);
        return idx;
    }
    /// FFT-order flat index of the `natural`-th mode when modes are listed row-major
    /// with each wavenumber ascending from -M/2.
    std::size_t fft_from_natural(std::size_t natural) const {
        auto idx = unflatten(natural);
        for (auto& i : idx) i = fft_index(i - M_ / 2);
        return flatten(idx);
    }

    /// Same torus with twice the period and twice the points (fixed density).
    GridSpec doubled() const { return GridSpec(n_, 2.0 * L_, 2 * M_); }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;

private:
    int n_;
    double L_;
    int M_;
};

using ComplexArray = std::vector<cplx>;

/// N-component complex field sampled on a GridSpec (physical space, row-major).
struct GridField {
    GridSpec spec;
    std::vector<ComplexArray> components;

    GridField(GridSpec s, int N) : spec(s), components(N, ComplexArray(s.total(), cplx{0.0})) {}
    GridField(GridSpec s, std::vector<ComplexArray> c) : spec(s), components(std::move(c)) {
        for (const auto& a : components)
            if (a.size() != spec.total()) throw ValidationError("component has wrong length");
    }

    int size() const noexcept { return static_cast<int>(components.size()); }
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// Unnormalized n-D complex DFT of the given sign, in place.
inline void fftw_transform(int n, int M, std::span<cplx> data, int sign) {
    std::vector<int> dims(n, M);
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft(n, dims.data(), p, p, sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
}

} // namespace detail

/// Fourier coefficients c_k with u(x) = sum_k c_k exp(i xi_k . x): the forward transform
/// carries the 1 / M^n factor. Output in FFT order.
inline ComplexArray forward(const GridSpec& g, std::span<const cplx> u) {
    ComplexArray c(u.begin(), u.end());
    detail::fftw_transform(g.dimension(), g.points_per_axis(), c, FFTW_FORWARD);
    const double scale = 1.0 / static_cast<double>(g.total());
    for (auto& v : c) v *= scale;
    return c;
}

inline ComplexArray inverse(const GridSpec& g, std::span<const cplx> c) {
    ComplexArray u(c.begin(), c.end());
    detail::fftw_transform(g.dimension(), g.points_per_axis(), u, FFTW_BACKWARD);
    return u;
}

/// Re-embeds FFT-order coefficients of grid `from` into grid `to` (zero padding when
/// `to` is larger, truncation to the common band when smaller).
inline ComplexArray resample_spectrum(const GridSpec& from, std::span<const cplx> c,
                                      const GridSpec& to) {
    ComplexArray out(to.total(), cplx{0.0});
    const int Mt = to.points_per_axis();
    for (std::size_t f = 0; f < from.total(); ++f) {
        auto k = from.wavenumbers(f);
        bool inside = true;
        for (auto& v : k) {
            if (v < -Mt / 2 || v >= Mt / 2) inside = false;
            v = to.fft_index(v);
        }
        if (inside) out[to.flatten(k)] = c[f];
    }
    return out;
}

/// Samples of the periodized bump part of a coefficient on a grid.
inline ComplexArray sample_bumps(const GridSpec& g, const CoefficientFn& a) {
    ComplexArray v(g.total());
    for (std::size_t f = 0; f < g.total(); ++f) v[f] = a.periodic_bump_part(g.point(f), g.period());
    return v;
}

// ---- binary layout -------------------------------------------------------------
// header: n (u32), N (u32), M (u32), L (f64), all little-endian;
// payload: for each component, Fourier coefficients in natural row-major frequency
// order (each wavenumber ascending from -M/2), as interleaved (re, im) f64 pairs.

namespace detail {

template <class T>
void write_le(std::ostream& os, T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T read_le(std::istream& is) {
    unsigned char b[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(b), sizeof(T)))
        throw ValidationError("truncated grid field stream");
    if constexpr (std::endian::native == std::endian::big)
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

} // namespace detail

inline void write_field(std::ostream& os, const GridField& u) {
    const auto& g = u.spec;
    detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.dimension()));
    detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(u.size()));
    detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.points_per_axis()));
    detail::write_le<double>(os, g.period());
    for (const auto& comp : u.components) {
        const auto c = forward(g, comp);
        for (std::size_t nat = 0; nat < g.total(); ++nat) {
            const cplx v = c[g.fft_from_natural(nat)];
            detail::write_le<double>(os, v.real());
            detail::write_le<double>(os, v.imag());
        }
    }
}

inline GridField read_field(std::istream& is) {
    const auto n = detail::read_le<std::uint32_t>(is);
    const auto N = detail::read_le<std::uint32_t>(is);
    const auto M = detail::read_le<std::uint32_t>(is);
    const auto L = detail::read_le<double>(is);
    if (n < 1 || n > 8 || N < 1 || N > 64 || M > (1u << 16))
        throw ValidationError("implausible grid field header");
    GridSpec g(static_cast<int>(n), L, static_cast<int>(M));
    GridField u(g, static_cast<int>(N));
    for (auto& comp : u.components) {
        ComplexArray c(g.total());
        for (std::size_t nat = 0; nat < g.total(); ++nat) {
            const double re = detail::read_le<double>(is);
            const double im = detail::read_le<double>(is);
            c[g.fft_from_natural(nat)] = {re, im};
        }
        comp = inverse(g, c);
    }
    return u;
}

} // namespace dn
