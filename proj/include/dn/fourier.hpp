#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "dn/grid.hpp"
#include "dn/linalg.hpp"
#include "dn/parallel.hpp"
#include "dn/system.hpp"

namespace dn {

/// How variable-coefficient products a(x) * v(x) are formed.
///  galerkin: exact product of the band-limited v with the coefficient, projected back to
///            the grid band (padded grid, alias-free up to the coefficient tail);
///  collocation: pointwise on the grid itself (classic pseudospectral, aliased);
///  collocation_dealiased: collocation followed by the 2/3 rule on the output.
enum class ProductRule { galerkin, collocation, collocation_dealiased };

struct ApplyOptions {
    ProductRule products = ProductRule::galerkin;
};

/// Padded grid used for Galerkin products: P >= 2M and large enough that the bump
/// spectra of every coefficient of `sys` are resolved.
inline GridSpec galerkin_grid(const DNSystem& sys, const GridSpec& g) {
    double kappa = 0.0;
    for (const auto& row : sys.entries())
        for (const auto& e : row)
            for (const auto& term : e) kappa = std::max(kappa, term.coeff.bandwidth());
    const double band = kappa * g.period() / (2.0 * std::numbers::pi);
    int P = 2 * g.points_per_axis();
    const int need = g.points_per_axis() + 2 * static_cast<int>(std::ceil(band)) + 2;
    while (P < need) P *= 2;
    return GridSpec(g.dimension(), g.period(), P);
}

namespace detail {

// xi^alpha per FFT-order frequency.
inline ComplexArray symbol_multiplier(const GridSpec& g, const MultiIndex& alpha) {
    ComplexArray w(g.total());
    for (std::size_t f = 0; f < g.total(); ++f) w[f] = alpha.monomial(g.frequency(f));
    return w;
}

inline void check_field(const DNSystem& sys, const GridField& u) {
    if (u.size() != sys.size())
        throw ValidationError("field component count does not match system size");
    if (u.spec.dimension() != sys.dimension())
        throw ValidationError("grid dimension does not match system dimension");
    for (const auto& c : u.components)
        for (const auto& v : c)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw ValidationError("field contains non-finite values");
}

} // namespace detail

/// f_j = sum_k sum_alpha a^{jk}_alpha(x) (D^alpha u_k)(x) - lambda u_j.
/// Derivatives are exact Fourier multipliers; constant coefficient parts act in
/// frequency space, bump parts through the selected product rule.
inline GridField apply_operator(const DNSystem& sys, cplx lambda, const GridField& u,
                                const ApplyOptions& opt = {}) {
    detail::check_field(sys, u);
    const GridSpec& g = u.spec;
    const int N = sys.size();
    const bool variable = sys.has_variable_coefficients();
    const GridSpec P = !variable || opt.products != ProductRule::galerkin ? g : galerkin_grid(sys, g);

    std::vector<ComplexArray> uh(N);
    for (int k = 0; k < N; ++k) uh[k] = forward(g, u.components[k]);

    std::map<MultiIndex, ComplexArray> multipliers;
    auto mult = [&](const MultiIndex& a) -> const ComplexArray& {
        auto it = multipliers.find(a);
        if (it == multipliers.end()) it = multipliers.emplace(a, detail::symbol_multiplier(g, a)).first;
        return it->second;
    };

    std::vector<ComplexArray> fh(N, ComplexArray(g.total(), cplx{0.0}));
    for (int j = 0; j < N; ++j) {
        ComplexArray physical_acc;  // bump products accumulated on P
        for (int k = 0; k < N; ++k)
            for (const auto& term : sys.entry(j, k)) {
                const auto& w = mult(term.alpha);
                ComplexArray dv(g.total());
                for (std::size_t f = 0; f < g.total(); ++f) dv[f] = w[f] * uh[k][f];
                const cplx a0 = term.coeff.constant();
                if (a0 != cplx{0.0})
                    for (std::size_t f = 0; f < g.total(); ++f) fh[j][f] += a0 * dv[f];
                if (!term.coeff.has_bumps()) continue;
                const auto vp = inverse(P, resample_spectrum(g, dv, P));
                const auto bp = sample_bumps(P, term.coeff);
                if (physical_acc.empty()) physical_acc.assign(P.total(), cplx{0.0});
                for (std::size_t f = 0; f < P.total(); ++f) physical_acc[f] += bp[f] * vp[f];
            }
        if (!physical_acc.empty()) {
            auto ph = resample_spectrum(P, forward(P, physical_acc), g);
            if (opt.products == ProductRule::collocation_dealiased) {
                const int M = g.points_per_axis();
                for (std::size_t f = 0; f < g.total(); ++f)
                    for (int kk : g.wavenumbers(f))
                        if (3 * std::abs(kk) > M) {
                            ph[f] = 0.0;
                            break;
                        }
            }
            for (std::size_t f = 0; f < g.total(); ++f) fh[j][f] += ph[f];
        }
        for (std::size_t f = 0; f < g.total(); ++f) fh[j][f] -= lambda * uh[j][f];
    }

    GridField out(g, N);
    for (int j = 0; j < N; ++j) out.components[j] = inverse(g, fh[j]);
    return out;
}

/// Fourier coefficients of a coefficient function on grid P (FFT order), from samples
/// of the periodized bumps plus the constant in the zero mode.
inline ComplexArray coefficient_spectrum(const GridSpec& P, const CoefficientFn& a) {
    ComplexArray c = a.has_bumps() ? forward(P, sample_bumps(P, a)) : ComplexArray(P.total(), cplx{0.0});
    c[0] += a.constant();
    return c;
}

/// Galerkin matrix of A(x, D) on the band of grid g: rows and columns indexed by
/// component * M^n + natural mode index (each wavenumber ascending from -M/2).
/// Entry (k-mode, l-mode) of block (j, k) is sum_alpha hat(a^{jk}_alpha)_{k-l} xi_l^alpha.
inline CMatrix galerkin_matrix(const DNSystem& sys, const GridSpec& g, int jobs = 1) {
    const int N = sys.size();
    const std::size_t T = g.total();
    const GridSpec P = galerkin_grid(sys, g);
    const int M = g.points_per_axis();
    const int n = g.dimension();

    struct TermData {
        int j, k;
        MultiIndex alpha;
        ComplexArray spec;  // on P, FFT order
        bool constant;
        cplx c0;
    };
    std::vector<TermData> terms;
    for (int j = 0; j < N; ++j)
        for (int k = 0; k < N; ++k)
            for (const auto& t : sys.entry(j, k))
                terms.push_back({j, k, t.alpha,
                                 t.coeff.has_bumps() ? coefficient_spectrum(P, t.coeff) : ComplexArray{},
                                 !t.coeff.has_bumps(), t.coeff.constant()});

    std::vector<std::vector<int>> wn(T);
    std::vector<std::vector<double>> xi(T);
    for (std::size_t a = 0; a < T; ++a) {
        auto idx = g.unflatten(a);
        for (auto& i : idx) i -= M / 2;
        wn[a] = idx;
        xi[a].resize(n);
        for (int d = 0; d < n; ++d) xi[a][d] = 2.0 * std::numbers::pi * idx[d] / g.period();
    }

    CMatrix A = CMatrix::Zero(static_cast<Eigen::Index>(N * T), static_cast<Eigen::Index>(N * T));
    for_each_chunk(T, jobs, [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<int> q(n);
        for (std::size_t l = begin; l < end; ++l)
            for (const auto& td : terms) {
                const cplx mono = td.alpha.monomial(xi[l]);
                const auto col = static_cast<Eigen::Index>(td.k * T + l);
                if (td.constant) {
                    A(static_cast<Eigen::Index>(td.j * T + l), col) += td.c0 * mono;
                    continue;
                }
                for (std::size_t r = 0; r < T; ++r) {
                    for (int d = 0; d < n; ++d) q[d] = P.fft_index(wn[r][d] - wn[l][d]);
                    A(static_cast<Eigen::Index>(td.j * T + r), col) += td.spec[P.flatten(q)] * mono;
                }
            }
    });
    return A;
}

// ---- frozen-coefficient resolvent ---------------------------------------------------

struct ResolventOptions {
    double condition_ceiling = 1e14;
    int jobs = 1;
};

namespace detail {

inline cplx nearest_eigenvalue(const CMatrix& a, cplx lambda) {
    Eigen::ComplexEigenSolver<CMatrix> es(a, false);
    cplx best = es.eigenvalues()(0);
    for (Eigen::Index i = 1; i < es.eigenvalues().size(); ++i)
        if (std::abs(es.eigenvalues()(i) - lambda) < std::abs(best - lambda)) best = es.eigenvalues()(i);
    return best;
}

inline double condition_number(const Eigen::JacobiSVD<CMatrix>& svd) {
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    return smin == 0.0 ? std::numeric_limits<double>::infinity() : sv(0) / smin;
}

} // namespace detail

/// Solves A0(x0, D) u - lambda u = f on the torus, with A0 the principal part frozen at x0,
/// one N x N solve per grid frequency. Throws SingularFrequencyError for the first
/// frequency (FFT order) whose matrix has condition number above the ceiling.
inline GridField frozen_resolvent_apply(const DNSystem& sys, std::span<const double> x0,
                                        cplx lambda, const GridField& f,
                                        const ResolventOptions& opt = {}) {
    detail::check_field(sys, f);
    if (static_cast<int>(x0.size()) != sys.dimension())
        throw ValidationError("x0 has wrong dimension", "/x0");
    const GridSpec& g = f.spec;
    const int N = sys.size();
    const FrozenSymbol fs(sys, x0);

    std::vector<ComplexArray> fh(N), uh(N, ComplexArray(g.total()));
    for (int k = 0; k < N; ++k) fh[k] = forward(g, f.components[k]);

    const int jobs = resolve_jobs(opt.jobs);
    std::vector<std::size_t> first_bad(std::max(1, jobs), g.total());
    for_each_chunk(g.total(), jobs, [&](std::size_t w, std::size_t begin, std::size_t end) {
        CVector rhs(N);
        for (std::size_t q = begin; q < end; ++q) {
            CMatrix a = fs.principal(g.frequency(q));
            for (int j = 0; j < N; ++j) a(j, j) -= lambda;
            Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
            if (!(detail::condition_number(svd) <= opt.condition_ceiling)) {
                first_bad[w] = q;
                return;
            }
            for (int k = 0; k < N; ++k) rhs(k) = fh[k][q];
            const CVector sol = svd.solve(rhs);
            for (int k = 0; k < N; ++k) uh[k][q] = sol(k);
        }
    });
    const std::size_t bad = *std::min_element(first_bad.begin(), first_bad.end());
    if (bad < g.total()) {
        const auto xi = g.frequency(bad);
        const CMatrix a0 = fs.principal(xi);
        CMatrix a = a0;
        for (int j = 0; j < N; ++j) a(j, j) -= lambda;
        Eigen::JacobiSVD<CMatrix> svd(a);
        throw SingularFrequencyError(xi, detail::nearest_eigenvalue(a0, lambda),
                                     detail::condition_number(svd));
    }

    GridField out(g, N);
    for (int k = 0; k < N; ++k) out.components[k] = inverse(g, uh[k]);
    return out;
}

/// Largest condition number of A0(x0, xi) - lambda I over the grid frequencies.
inline double max_frequency_condition(const DNSystem& sys, std::span<const double> x0,
                                      cplx lambda, const GridSpec& g) {
    const FrozenSymbol fs(sys, x0);
    double worst = 0.0;
    for (std::size_t q = 0; q < g.total(); ++q) {
        CMatrix a = fs.principal(g.frequency(q));
        for (int j = 0; j < a.rows(); ++j) a(j, j) -= lambda;
        worst = std::max(worst, detail::condition_number(Eigen::JacobiSVD<CMatrix>(a)));
    }
    return worst;
}

// ---- symbol-inverse bounds ----------------------------------------------------------

/// max over samples of |xi^alpha d_xi^alpha ainv_jk| <xi,lambda>_k^{s_k} <xi,lambda>_j^{t_j}
/// for one alpha in {0,1}^n, with ainv = (A0(x0, xi) - lambda I)^{-1}.
struct MikhlinEntry {
    int j = 0;
    int k = 0;
    MultiIndex alpha;
    double max_ratio = 0.0;
};

struct MikhlinTable {
    std::vector<MikhlinEntry> entries;
    std::size_t samples = 0;
    std::size_t skipped = 0;  // stencils that touched a singular matrix

    const MikhlinEntry& at(int j, int k, const MultiIndex& alpha) const {
        for (const auto& e : entries)
            if (e.j == j && e.k == k && e.alpha == alpha) return e;
        throw ValidationError("no such (j, k, alpha) entry");
    }
};

/// All alpha in {0,1}^n in binary-counting order.
inline std::vector<MultiIndex> binary_indices(int n) {
    std::vector<MultiIndex> out;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        std::vector<int> a(n);
        for (int i = 0; i < n; ++i) a[i] = (mask >> i) & 1u;
        out.emplace_back(std::move(a));
    }
    return out;
}

/// Log-spaced radii in [r_min, r_max] times the sphere directions, plus xi = 0.
inline std::vector<std::vector<double>> default_xi_samples(int n, int radii = 61,
                                                           double r_min = 1e-3,
                                                           double r_max = 1e3) {
    std::vector<std::vector<double>> dirs;
    if (n == 1) {
        dirs = {{1.0}, {-1.0}};
    } else {
        // coordinate axes and normalized diagonals keep every alpha pattern nontrivial
        for (unsigned mask = 1; mask < (1u << n); ++mask) {
            std::vector<double> d(n, 0.0);
            int bits = 0;
            for (int i = 0; i < n; ++i)
                if ((mask >> i) & 1u) {
                    d[i] = 1.0;
                    ++bits;
                }
            for (auto& v : d) v /= std::sqrt(static_cast<double>(bits));
            dirs.push_back(d);
        }
    }
    std::vector<std::vector<double>> out{std::vector<double>(n, 0.0)};
    for (int i = 0; i < radii; ++i) {
        const double r = r_min * std::pow(r_max / r_min, radii == 1 ? 0.0 : double(i) / (radii - 1));
        for (const auto& d : dirs) {
            std::vector<double> x(n);
            for (int a = 0; a < n; ++a) x[a] = r * d[a];
            out.push_back(std::move(x));
        }
    }
    return out;
}

inline MikhlinTable symbol_inverse_bounds(const DNSystem& sys, std::span<const double> x0,
                                          const Sector& sector,
                                          const std::vector<cplx>& lambdas,
                                          const std::vector<std::vector<double>>& xis,
                                          double condition_ceiling = 1e14) {
    sector.validate();
    for (std::size_t i = 0; i < lambdas.size(); ++i)
        if (!sector.contains(lambdas[i]))
            throw ValidationError("lambda sample lies outside the sector",
                                  "/lambda/" + std::to_string(i));
    const int N = sys.size();
    const int n = sys.dimension();
    const auto& o = sys.orders();
    const FrozenSymbol fs(sys, x0);
    const auto alphas = binary_indices(n);

    MikhlinTable table;
    for (int j = 0; j < N; ++j)
        for (int k = 0; k < N; ++k)
            for (const auto& a : alphas) table.entries.push_back({j, k, a, 0.0});
    auto slot = [&](int j, int k, std::size_t ai) -> double& {
        return table.entries[(static_cast<std::size_t>(j) * N + k) * alphas.size() + ai].max_ratio;
    };

    auto inverse_at = [&](const std::vector<double>& xi, cplx lambda, CMatrix& out) {
        CMatrix a = fs.principal(xi);
        for (int j = 0; j < N; ++j) a(j, j) -= lambda;
        Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
        if (!(detail::condition_number(svd) <= condition_ceiling)) return false;
        out = svd.solve(CMatrix::Identity(N, N));
        return true;
    };

    for (cplx lambda : lambdas)
        for (const auto& xi : xis) {
            std::vector<double> wt(N), ws(N);
            for (int j = 0; j < N; ++j) {
                const double w = anisotropic_weight(xi, lambda, o.m()[j]);
                wt[j] = std::pow(w, o.t()[j]);
                ws[j] = std::pow(w, o.s()[j]);
            }
            ++table.samples;
            for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
                const auto& alpha = alphas[ai];
                // nested central differences over the axes with alpha_i = 1
                std::vector<int> axes;
                for (int i = 0; i < n; ++i)
                    if (alpha[i]) axes.push_back(i);
                CMatrix deriv = CMatrix::Zero(N, N);
                bool ok = true;
                const std::size_t corners = std::size_t{1} << axes.size();
                for (std::size_t c = 0; c < corners && ok; ++c) {
                    std::vector<double> p = xi;
                    double weight = 1.0;
                    for (std::size_t q = 0; q < axes.size(); ++q) {
                        const int i = axes[q];
                        const double h = 1e-4 * std::max(1.0, std::abs(xi[i]));
                        const bool plus = (c >> q) & 1u;
                        p[i] += plus ? h : -h;
                        weight *= (plus ? 1.0 : -1.0) / (2.0 * h);
                    }
                    CMatrix inv;
                    ok = inverse_at(p, lambda, inv);
                    if (ok) deriv += weight * inv;
                }
                if (!ok) {
                    ++table.skipped;
                    continue;
                }
                const double mono = std::abs(alpha.monomial(xi));
                for (int j = 0; j < N; ++j)
                    for (int k = 0; k < N; ++k) {
                        const double r = mono * std::abs(deriv(j, k)) * ws[k] * wt[j];
                        slot(j, k, ai) = std::max(slot(j, k, ai), r);
                    }
            }
        }
    return table;
}

// ---- random band-limited fields -----------------------------------------------------

/// Deterministic random field whose Fourier coefficients are nonzero only for
/// |k_i| <= band, with independent uniform real and imaginary parts in [-1, 1].
inline GridField random_field(const GridSpec& g, int N, std::uint64_t seed, int band) {
    std::mt19937_64 eng(seed);
    auto uni = [&eng] { return 2.0 * static_cast<double>(eng() >> 11) * 0x1.0p-53 - 1.0; };
    GridField u(g, N);
    for (int k = 0; k < N; ++k) {
        ComplexArray c(g.total(), cplx{0.0});
        for (std::size_t nat = 0; nat < g.total(); ++nat) {
            const std::size_t f = g.fft_from_natural(nat);
            bool inside = true;
            for (int w : g.wavenumbers(f)) inside = inside && std::abs(w) <= band;
            const double re = uni(), im = uni();
            if (inside) c[f] = {re, im};
        }
        u.components[k] = inverse(g, c);
    }
    return u;
}

} // namespace dn
