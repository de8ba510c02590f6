#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <utility>
#include <span>
#include <vector>

#include <Eigen/SVD>

#include "dn/fourier.hpp"
#include "dn/grid.hpp"
#include "dn/parallel.hpp"
#include "dn/system.hpp"

namespace dn {

/// Order s, exponent p, and optionally the spectral parameter with the 1-based
/// component index j whose weight order m_j enters.
struct NormSpec {
    int s = 0;
    double p = 2.0;
    std::optional<cplx> lambda;
    std::optional<int> j;

    bool exact() const noexcept { return p == 2.0; }

    void validate(int N) const {
        if (!(p >= 1.0) || !std::isfinite(p)) throw ValidationError("p must be finite and >= 1", "/p");
        if (lambda.has_value() != j.has_value())
            throw ValidationError("lambda and j must be given together", "/j");
        if (j && (*j < 1 || *j > N)) throw ValidationError("j out of range", "/j");
        if (lambda && *lambda == cplx{0.0}) throw ValidationError("lambda must be nonzero", "/lambda");
    }
};

/// Discrete L_p norm on the unit-measure torus: (mean |u|^p)^{1/p}.
inline double lp_norm(std::span<const cplx> u, double p) {
    if (u.empty()) return 0.0;
    double s = 0.0;
    if (p == 2.0) {
        for (auto v : u) s += std::norm(v);
        return std::sqrt(s / static_cast<double>(u.size()));
    }
    for (auto v : u) s += std::pow(std::abs(v), p);
    return std::pow(s / static_cast<double>(u.size()), 1.0 / p);
}

/// || F^{-1} w(xi) F u ||_p for a real multiplier w given per FFT-order frequency.
template <class W>
double multiplier_norm(const GridSpec& g, std::span<const cplx> u, double p, W&& weight) {
    auto c = forward(g, u);
    for (std::size_t f = 0; f < g.total(); ++f) c[f] *= weight(g.frequency(f));
    return lp_norm(inverse(g, c), p);
}

/// Same as multiplier_norm for p = 2, computed as a frequency sum (Parseval).
template <class W>
double multiplier_norm_spectral(const GridSpec& g, std::span<const cplx> u, W&& weight) {
    const auto c = forward(g, u);
    double s = 0.0;
    for (std::size_t f = 0; f < g.total(); ++f) {
        const double w = weight(g.frequency(f));
        s += w * w * std::norm(c[f]);
    }
    return std::sqrt(s);
}

/// Bessel-potential norm ||F^{-1} <xi>^s F u||_p.
inline double bessel_norm(const GridSpec& g, std::span<const cplx> u, int s, double p) {
    return multiplier_norm(g, u, p, [s](const std::vector<double>& xi) {
        return std::pow(1.0 + norm2(xi), 0.5 * s);
    });
}

/// Sobolev norm (sum_{|alpha| <= s} ||D^alpha u||_p^p)^{1/p}, s >= 0.
inline double sobolev_norm(const GridSpec& g, std::span<const cplx> u, int s, double p) {
    if (s < 0) throw ValidationError("Sobolev norm needs s >= 0", "/s");
    const auto c = forward(g, u);
    double acc = 0.0;
    for (const auto& alpha : indices_up_to(g.dimension(), s)) {
        ComplexArray d(c);
        for (std::size_t f = 0; f < g.total(); ++f) d[f] *= alpha.monomial(g.frequency(f));
        acc += std::pow(lp_norm(inverse(g, d), p), p);
    }
    return std::pow(acc, 1.0 / p);
}

/// || F^{-1} <xi,lambda>_m^s F u ||_p, the multiplier form of the parameter norm.
inline double weighted_multiplier_norm(const GridSpec& g, std::span<const cplx> u, int s,
                                       double p, cplx lambda, int m) {
    return multiplier_norm(g, u, p, [&](const std::vector<double>& xi) {
        return std::pow(anisotropic_weight(xi, lambda, m), s);
    });
}

/// Parameter-dependent norm for weight order m:
///   s >= 0: ||u||_{s,p} + |lambda|^{s/m} ||u||_{0,p} with the Sobolev norm above;
///   s < 0:  ||F^{-1} <xi,lambda>_m^s F u||_p.
inline double param_norm(const GridSpec& g, std::span<const cplx> u, int s, double p,
                         cplx lambda, int m) {
    if (lambda == cplx{0.0}) throw ValidationError("lambda must be nonzero", "/lambda");
    if (s < 0) return weighted_multiplier_norm(g, u, s, p, lambda, m);
    return sobolev_norm(g, u, s, p) +
           std::pow(std::abs(lambda), static_cast<double>(s) / m) * lp_norm(u, p);
}

/// Dispatch on a NormSpec: with lambda, param_norm using m_j of `orders`; without,
/// the Bessel-potential norm.
inline double norm(const GridSpec& g, std::span<const cplx> u, const NormSpec& spec,
                   const DNOrders& orders) {
    spec.validate(orders.size());
    if (!spec.lambda) return bessel_norm(g, u, spec.s, spec.p);
    return param_norm(g, u, spec.s, spec.p, *spec.lambda, orders.m()[*spec.j - 1]);
}

struct ProductNorms {
    double t_norm = 0.0;        // sum_k |||u_k|||^{(k)}_{t_k}
    double minus_s_norm = 0.0;  // sum_k |||u_k|||^{(k)}_{-s_k}
};

inline ProductNorms product_norms(const GridField& u, double p, cplx lambda,
                                  const DNOrders& orders) {
    if (u.size() != orders.size())
        throw ValidationError("field component count does not match system size");
    ProductNorms out;
    for (int k = 0; k < u.size(); ++k) {
        const int m = orders.m()[k];
        out.t_norm += param_norm(u.spec, u.components[k], orders.t()[k], p, lambda, m);
        out.minus_s_norm += param_norm(u.spec, u.components[k], -orders.s()[k], p, lambda, m);
    }
    return out;
}

// ---- a-priori ratio functionals ------------------------------------------------------
//
// At p = 2 the ratios below use the Hilbert form of the product norms,
//   ||u||_(t)^2 = sum_k || <xi,lambda>_k^{t_k} u_k ||^2,
//   ||f||_(-s)^2 = sum_k || <xi,lambda>_k^{-s_k} f_k ||^2,
// which is equivalent to the displayed sum-of-norms form with constants depending
// only on N and the orders. With it the supremum over u is a largest singular value.

enum class AprioriMode { exact, sampled };

struct AprioriOptions {
    AprioriMode mode = AprioriMode::exact;
    int trials = 64;
    std::uint64_t seed = 42;
    double condition_ceiling = 1e14;
    int jobs = 1;
};

struct AprioriResult {
    double inverse_ratio = 0.0;  // sup |||u|||_(t) / |||(A - lambda) u|||_(-s)
    double forward_ratio = 0.0;  // sup |||(A - lambda) u|||_(-s) / |||u|||_(t)
    std::vector<double> witness_xi;  // exact mode, constant coefficients: maximizing frequency
};

namespace detail {

inline std::vector<double> order_weights(const DNOrders& o, std::span<const double> xi,
                                         cplx lambda, bool t_side) {
    std::vector<double> w(o.size());
    for (int k = 0; k < o.size(); ++k) {
        const double b = anisotropic_weight(xi, lambda, o.m()[k]);
        w[k] = t_side ? std::pow(b, o.t()[k]) : std::pow(b, -o.s()[k]);
    }
    return w;
}

inline double hilbert_norm(const GridField& u, cplx lambda, const DNOrders& o, bool t_side) {
    double s = 0.0;
    for (int k = 0; k < u.size(); ++k) {
        const auto c = forward(u.spec, u.components[k]);
        for (std::size_t f = 0; f < u.spec.total(); ++f) {
            const double w = t_side ? std::pow(anisotropic_weight(u.spec.frequency(f), lambda, o.m()[k]), o.t()[k])
                                    : std::pow(anisotropic_weight(u.spec.frequency(f), lambda, o.m()[k]), -o.s()[k]);
            s += w * w * std::norm(c[f]);
        }
    }
    return std::sqrt(s);
}

} // namespace detail

/// Hilbert-form product norm with weights t (t_side) or -s.
inline double hilbert_product_norm(const GridField& u, cplx lambda, const DNOrders& o,
                                   bool t_side) {
    return detail::hilbert_norm(u, lambda, o, t_side);
}

/// Largest and smallest singular values of W_{-s} B W_t^{-1}, with B a matrix in the
/// Galerkin basis of g (component-major, natural mode order) and W the diagonal order
/// weights at lambda.
inline std::pair<double, double> weighted_extreme_singular_values(CMatrix B, const GridSpec& g,
                                                                  const DNOrders& o, cplx lambda) {
    const std::size_t T = g.total();
    for (std::size_t nat = 0; nat < T; ++nat) {
        const auto xi = g.frequency(g.fft_from_natural(nat));
        const auto wt = detail::order_weights(o, xi, lambda, true);
        const auto ws = detail::order_weights(o, xi, lambda, false);
        for (int k = 0; k < o.size(); ++k) {
            const auto idx = static_cast<Eigen::Index>(k * T + nat);
            B.row(idx) *= ws[k];
            B.col(idx) /= wt[k];
        }
    }
    const auto sv = dense_singular_values(std::move(B));
    return {sv.front(), sv.back()};
}

/// Ratios testing the a-priori estimate and forward boundedness on the torus grid.
/// exact: per-frequency weighted singular values for constant coefficients, the
/// weighted Galerkin matrix otherwise; sampled: max over random band-limited fields.
inline AprioriResult apriori_ratio(const DNSystem& sys, cplx lambda, const GridSpec& g,
                                   const AprioriOptions& opt = {}) {
    if (lambda == cplx{0.0}) throw ValidationError("lambda must be nonzero", "/lambda");
    const auto& o = sys.orders();
    const int N = sys.size();
    AprioriResult res;

    if (opt.mode == AprioriMode::sampled) {
        const int jobs = resolve_jobs(opt.jobs);
        std::vector<double> inv(opt.trials, 0.0), fwd(opt.trials, 0.0);
        for_each_chunk(static_cast<std::size_t>(opt.trials), jobs,
                       [&](std::size_t, std::size_t b, std::size_t e) {
                           for (std::size_t r = b; r < e; ++r) {
                               const auto u = random_field(g, N, opt.seed + r, g.points_per_axis() / 2);
                               const auto f = apply_operator(sys, lambda, u);
                               const double nu = detail::hilbert_norm(u, lambda, o, true);
                               const double nf = detail::hilbert_norm(f, lambda, o, false);
                               inv[r] = nf > 0.0 ? nu / nf : std::numeric_limits<double>::infinity();
                               fwd[r] = nu > 0.0 ? nf / nu : 0.0;
                           }
                       });
        res.inverse_ratio = *std::max_element(inv.begin(), inv.end());
        res.forward_ratio = *std::max_element(fwd.begin(), fwd.end());
        return res;
    }

    if (!sys.has_variable_coefficients()) {
        const std::vector<double> x0(sys.dimension(), 0.0);
        const FrozenSymbol fs(sys, x0);
        for (std::size_t q = 0; q < g.total(); ++q) {
            const auto xi = g.frequency(q);
            const CMatrix a = fs.full(xi, lambda);
            const auto wt = detail::order_weights(o, xi, lambda, true);
            const auto ws = detail::order_weights(o, xi, lambda, false);
            // forward: W_{-s} (A - lambda) W_t^{-1};  inverse: W_t (A - lambda)^{-1} W_{-s}^{-1}
            CMatrix fw(N, N);
            for (int j = 0; j < N; ++j)
                for (int k = 0; k < N; ++k) fw(j, k) = ws[j] * a(j, k) / wt[k];
            Eigen::JacobiSVD<CMatrix> svd(fw);
            const auto& sv = svd.singularValues();
            const double smin = sv(N - 1);
            if (!(smin > 0.0) || sv(0) / smin > opt.condition_ceiling)
                throw SingularFrequencyError(xi, detail::nearest_eigenvalue(fs.full(xi, 0.0), lambda),
                                             smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity());
            res.forward_ratio = std::max(res.forward_ratio, sv(0));
            if (1.0 / smin > res.inverse_ratio) {
                res.inverse_ratio = 1.0 / smin;
                res.witness_xi = xi;
            }
        }
        return res;
    }

    // variable coefficients: the Galerkin discretization on the grid band
    CMatrix A = galerkin_matrix(sys, g, resolve_jobs(opt.jobs));
    for (Eigen::Index i = 0; i < A.rows(); ++i) A(i, i) -= lambda;
    const auto [smax, smin] = weighted_extreme_singular_values(std::move(A), g, o, lambda);
    if (!(smin > 0.0) || smax / smin > opt.condition_ceiling)
        throw ComputationError("discretized operator is numerically singular at this lambda");
    res.forward_ratio = smax;
    res.inverse_ratio = 1.0 / smin;
    return res;
}

} // namespace dn
