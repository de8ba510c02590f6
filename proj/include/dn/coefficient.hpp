#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "dn/error.hpp"
#include "dn/orders.hpp"

namespace dn {

using cplx = std::complex<double>;

/// amplitude * d^gamma/dx^gamma exp(-|x - center|^2 / width^2), with gamma the
/// (real) partial-derivative multi-index. gamma = 0 is a plain Gaussian bump.
struct Bump {
    cplx amplitude{0.0};
    std::vector<double> center;
    double width = 1.0;
    MultiIndex derivative;

    friend bool operator==(const Bump&, const Bump&) = default;
};

namespace detail {

// Physicists' Hermite polynomial H_k(y).
inline double hermite(int k, double y) {
    if (k == 0) return 1.0;
    double h0 = 1.0, h1 = 2.0 * y;
    for (int q = 1; q < k; ++q) {
        const double h2 = 2.0 * y * h1 - 2.0 * q * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

// d^k/dx^k exp(-(x/w)^2) = (-1/w)^k H_k(x/w) exp(-(x/w)^2)
inline double gaussian_derivative_1d(int k, double dx, double w) {
    const double y = dx / w;
    return std::pow(-1.0 / w, k) * hermite(k, y) * std::exp(-y * y);
}

} // namespace detail

/// Coefficient a(x) = constant + sum of (derivatives of) Gaussian bumps.
/// Closed under differentiation and conjugation, so every smoothness class the
/// theory asks for holds by construction.
class CoefficientFn {
public:
    CoefficientFn() = default;
    CoefficientFn(cplx constant) : constant_(constant) {}  // NOLINT(implicit)
    CoefficientFn(cplx constant, std::vector<Bump> bumps)
        : constant_(constant), bumps_(std::move(bumps)) {}

    cplx constant() const noexcept { return constant_; }
    const std::vector<Bump>& bumps() const noexcept { return bumps_; }

    bool has_bumps() const noexcept { return !bumps_.empty(); }
    bool is_zero() const noexcept { return constant_ == cplx{0.0} && bumps_.empty(); }

    cplx operator()(std::span<const double> x) const {
        cplx v = constant_;
        for (const auto& b : bumps_) v += b.amplitude * bump_shape(b, x);
        return v;
    }
    cplx operator()(const std::vector<double>& x) const {
        return (*this)(std::span<const double>(x));
    }

    /// Value of the bump part only, periodized over the torus [0, L)^n.
    cplx periodic_bump_part(std::span<const double> x, double L) const {
        cplx v{0.0};
        for (const auto& b : bumps_) v += b.amplitude * periodic_shape(b, x, L);
        return v;
    }

    /// D^beta a with D = -i d/dx.
    CoefficientFn derivative(const MultiIndex& beta) const {
        if (beta.order() == 0) return *this;
        CoefficientFn out;
        cplx factor{1.0};
        for (int q = 0; q < beta.order(); ++q) factor *= cplx(0.0, -1.0);
        for (const auto& b : bumps_) {
            Bump d = b;
            d.amplitude *= factor;
            d.derivative = b.derivative + beta;
            out.bumps_.push_back(std::move(d));
        }
        return out;
    }

    CoefficientFn conj() const {
        CoefficientFn out(std::conj(constant_));
        for (auto b : bumps_) {
            b.amplitude = std::conj(b.amplitude);
            out.bumps_.push_back(std::move(b));
        }
        return out;
    }

    CoefficientFn scaled(cplx f) const {
        CoefficientFn out(constant_ * f);
        for (auto b : bumps_) {
            b.amplitude *= f;
            out.bumps_.push_back(std::move(b));
        }
        return out;
    }

    CoefficientFn& operator+=(const CoefficientFn& o) {
        constant_ += o.constant_;
        bumps_.insert(bumps_.end(), o.bumps_.begin(), o.bumps_.end());
        return *this;
    }

    /// Angular frequency beyond which the Fourier transform of every bump term is
    /// below `rel_tol` of its peak.
    double bandwidth(double rel_tol = 1e-17) const {
        double kmax = 0.0;
        for (const auto& b : bumps_) {
            const int g = b.derivative.order();
            // profile z^g exp(-z^2/4) in z = kappa * width, peak at z = sqrt(2g)
            const double zpk = std::sqrt(2.0 * g);
            const double peak = g == 0 ? 1.0 : std::pow(zpk, g) * std::exp(-zpk * zpk / 4.0);
            double z = std::max(zpk, 1.0);
            while (std::pow(z, g) * std::exp(-z * z / 4.0) > rel_tol * peak) z += 0.25;
            kmax = std::max(kmax, z / b.width);
        }
        return kmax;
    }

    void validate(int n, const std::string& path) const {
        for (std::size_t i = 0; i < bumps_.size(); ++i) {
            const auto& b = bumps_[i];
            const std::string p = path + "/bumps/" + std::to_string(i);
            if (static_cast<int>(b.center.size()) != n)
                throw ValidationError("bump center has wrong dimension", p + "/center");
            if (!(b.width > 0.0) || !std::isfinite(b.width))
                throw ValidationError("bump width must be positive", p + "/width");
            if (b.derivative.dimension() != n)
                throw ValidationError("bump derivative index has wrong dimension", p + "/deriv");
            if (!std::isfinite(b.amplitude.real()) || !std::isfinite(b.amplitude.imag()))
                throw ValidationError("bump amplitude must be finite", p);
        }
        if (!std::isfinite(constant_.real()) || !std::isfinite(constant_.imag()))
            throw ValidationError("constant part must be finite", path);
    }

    friend bool operator==(const CoefficientFn&, const CoefficientFn&) = default;

private:
    static double bump_shape(const Bump& b, std::span<const double> x) {
        double v = 1.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            v *= detail::gaussian_derivative_1d(b.derivative[i], x[i] - b.center[i], b.width);
        return v;
    }

    // Sum over periodic images; the 1-D factors separate.
    static double periodic_shape(const Bump& b, std::span<const double> x, double L) {
        const int images = static_cast<int>(std::ceil(7.0 * b.width / L)) + 1;
        double v = 1.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double dx = std::remainder(x[i] - b.center[i], L);
            double s = 0.0;
            for (int l = -images; l <= images; ++l)
                s += detail::gaussian_derivative_1d(b.derivative[i], dx + l * L, b.width);
            v *= s;
        }
        return v;
    }

    cplx constant_{0.0};
    std::vector<Bump> bumps_;
};

} // namespace dn
