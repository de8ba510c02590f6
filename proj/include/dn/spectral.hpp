#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "dn/fourier.hpp"
#include "dn/norms.hpp"
#include "dn/system.hpp"

namespace dn {

/// Galerkin matrix of a system on a grid band. Basis vector b = k * M^n + natural mode
/// index (component-major; within a component row-major with each wavenumber ascending
/// from -M/2); coordinates are Fourier coefficients, so with the unit-measure torus the
/// discrete pairing is the plain Euclidean inner product.
struct AssembledOperator {
    GridSpec spec;
    DNOrders orders;
    CMatrix matrix;
    std::string provenance;

    int size() const noexcept { return orders.size(); }

    std::vector<double> frequency(std::size_t basis) const {
        return spec.frequency(spec.fft_from_natural(basis % spec.total()));
    }

    /// Fourier coefficients of u packed in basis order.
    CVector pack(const GridField& u) const {
        const std::size_t T = spec.total();
        CVector v(static_cast<Eigen::Index>(u.size() * T));
        for (int k = 0; k < u.size(); ++k) {
            const auto c = forward(spec, u.components[k]);
            for (std::size_t nat = 0; nat < T; ++nat)
                v(static_cast<Eigen::Index>(k * T + nat)) = c[spec.fft_from_natural(nat)];
        }
        return v;
    }

    GridField unpack(const CVector& v) const {
        const std::size_t T = spec.total();
        GridField u(spec, size());
        for (int k = 0; k < size(); ++k) {
            ComplexArray c(T);
            for (std::size_t nat = 0; nat < T; ++nat)
                c[spec.fft_from_natural(nat)] = v(static_cast<Eigen::Index>(k * T + nat));
            u.components[k] = inverse(spec, c);
        }
        return u;
    }

    GridField apply(const GridField& u) const {
        if (u.size() != size() || !(u.spec == spec))
            throw ValidationError("field does not match the assembled grid");
        return unpack(matrix * pack(u));
    }
};

inline constexpr std::size_t default_assembly_cap = 8192;

inline AssembledOperator assemble(const DNSystem& sys, const GridSpec& g,
                                  std::size_t cap = default_assembly_cap, int jobs = 1) {
    if (g.dimension() != sys.dimension())
        throw ValidationError("grid dimension does not match system dimension");
    const std::size_t dim = static_cast<std::size_t>(sys.size()) * g.total();
    if (dim > cap)
        throw ComputationError("assembled size " + std::to_string(dim) + " exceeds cap " +
                               std::to_string(cap));
    return {g, sys.orders(), galerkin_matrix(sys, g, resolve_jobs(jobs)),
            "galerkin n=" + std::to_string(g.dimension()) + " M=" +
                std::to_string(g.points_per_axis())};
}

// ---- spectrum -------------------------------------------------------------------------

struct SpectrumReport {
    GridSpec spec;
    std::vector<cplx> eigenvalues;  // sorted by (re, im)
};

inline void sort_spectrum(std::vector<cplx>& ev) {
    std::sort(ev.begin(), ev.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
}

inline SpectrumReport spectrum(const AssembledOperator& op) {
    SpectrumReport r{op.spec, dense_eigenvalues(op.matrix)};
    sort_spectrum(r.eigenvalues);
    return r;
}

/// Distance from z to the half-line [a, inf).
inline double distance_to_halfline(cplx z, double a) {
    return z.real() >= a ? std::abs(z.imag()) : std::abs(z - cplx(a));
}

/// Lower end of the essential spectrum of the constant-coefficient part: the smallest
/// real part of eigenvalues of A_const(xi) over a radial sweep of xi (bumps decay, so
/// they do not move it).
inline double essential_start_estimate(const DNSystem& sys) {
    const int n = sys.dimension();
    std::vector<std::vector<Entry>> e(sys.size(), std::vector<Entry>(sys.size()));
    for (int j = 0; j < sys.size(); ++j)
        for (int k = 0; k < sys.size(); ++k)
            for (const auto& t : sys.entry(j, k))
                detail::add_term(e[j][k], t.alpha, CoefficientFn(t.coeff.constant()));
    const DNSystem c(n, sys.orders(), e);
    const std::vector<double> x0(n, 0.0);
    const FrozenSymbol fs(c, x0);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& xi : default_xi_samples(n, 121, 1e-3, 1e3)) {
        Eigen::ComplexEigenSolver<CMatrix> es(fs.full(xi, 0.0), false);
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
            best = std::min(best, es.eigenvalues()(i).real());
    }
    return best;
}

// ---- refinement classification ----------------------------------------------------------

enum class SpectralClass { isolated_candidate, essential_approximant, unresolved };

inline const char* to_string(SpectralClass c) {
    switch (c) {
    case SpectralClass::isolated_candidate: return "isolated_candidate";
    case SpectralClass::essential_approximant: return "essential_approximant";
    case SpectralClass::unresolved: return "unresolved";
    }
    return "?";
}

struct RefinementOptions {
    std::optional<double> tol;              // default 1e-6 * max(1, |essential_start|)
    std::optional<double> essential_start;  // default essential_start_estimate
    double window_end = 10.0;
    double cluster_band = 0.5;    // eigenvalues within this distance of the half-line form clusters
    double shrink_threshold = 2.0;
    std::size_t cap = default_assembly_cap;
    int jobs = 1;
};

struct ClassifiedEigenvalue {
    cplx value;
    double moved = 0.0;     // distance to the nearest eigenvalue on the refined grid
    double distance = 0.0;  // distance to [essential_start, inf)
    bool stable = false;
    SpectralClass cls = SpectralClass::unresolved;
};

struct RefinementReport {
    GridSpec coarse, fine;
    double tol = 0.0;
    double essential_start = 0.0;
    double window_end = 0.0;
    std::vector<ClassifiedEigenvalue> eigenvalues;  // coarse spectrum, classified
    std::vector<cplx> fine_eigenvalues;
    double gap_coarse = 0.0;  // mean gap of the cluster in [essential_start, window_end]
    double gap_fine = 0.0;
    double gap_ratio = 0.0;
    bool essential_detected = false;

    std::vector<cplx> isolated() const {
        std::vector<cplx> out;
        for (const auto& e : eigenvalues)
            if (e.cls == SpectralClass::isolated_candidate) out.push_back(e.value);
        return out;
    }
};

/// Mean spacing of the distinct real parts (merged within `tol`) of the eigenvalues
/// lying within `band` of [a, inf) with real part in [a, b].
inline double cluster_mean_gap(const std::vector<cplx>& ev, double a, double b, double band,
                               double tol) {
    std::vector<double> re;
    for (auto z : ev)
        if (distance_to_halfline(z, a) <= band && z.real() >= a - tol && z.real() <= b)
            re.push_back(z.real());
    std::sort(re.begin(), re.end());
    std::vector<double> distinct;
    for (double r : re)
        if (distinct.empty() || r - distinct.back() > tol) distinct.push_back(r);
    if (distinct.size() < 2) return std::numeric_limits<double>::infinity();
    return (distinct.back() - distinct.front()) / static_cast<double>(distinct.size() - 1);
}

inline RefinementReport classify_refinement(const std::vector<cplx>& coarse_ev,
                                            const std::vector<cplx>& fine_ev,
                                            const GridSpec& coarse, const GridSpec& fine,
                                            double essential_start,
                                            const RefinementOptions& opt) {
    RefinementReport r{coarse, fine};
    r.essential_start = essential_start;
    r.tol = opt.tol.value_or(1e-6 * std::max(1.0, std::abs(essential_start)));
    r.window_end = opt.window_end;
    r.fine_eigenvalues = fine_ev;
    for (cplx z : coarse_ev) {
        ClassifiedEigenvalue c{z};
        c.moved = std::numeric_limits<double>::infinity();
        for (cplx w : fine_ev) c.moved = std::min(c.moved, std::abs(z - w));
        c.distance = distance_to_halfline(z, essential_start);
        c.stable = c.moved < r.tol || std::isinf(r.tol);
        if (c.stable && c.distance > 10.0 * r.tol)
            c.cls = SpectralClass::isolated_candidate;
        else if (c.distance <= opt.cluster_band)
            c.cls = SpectralClass::essential_approximant;
        else
            c.cls = SpectralClass::unresolved;
        r.eigenvalues.push_back(c);
    }
    const double merge = std::isinf(r.tol) ? 1e-9 : r.tol;
    r.gap_coarse = cluster_mean_gap(coarse_ev, essential_start, opt.window_end, opt.cluster_band, merge);
    r.gap_fine = cluster_mean_gap(fine_ev, essential_start, opt.window_end, opt.cluster_band, merge);
    r.gap_ratio = r.gap_coarse / r.gap_fine;
    r.essential_detected = std::isfinite(r.gap_ratio) && r.gap_ratio >= opt.shrink_threshold;
    return r;
}

/// Assembles on both grids, computes both spectra and classifies the coarse one.
inline RefinementReport compare_refinement(const DNSystem& sys, const GridSpec& coarse,
                                           const GridSpec& fine,
                                           const RefinementOptions& opt = {}) {
    const double a = opt.essential_start.value_or(essential_start_estimate(sys));
    const auto sc = spectrum(assemble(sys, coarse, opt.cap, opt.jobs));
    const auto sf = spectrum(assemble(sys, fine, opt.cap, opt.jobs));
    return classify_refinement(sc.eigenvalues, sf.eigenvalues, coarse, fine, a, opt);
}

// ---- resolvent and index probes ---------------------------------------------------------

struct ResolventProbeRow {
    cplx lambda;
    double sigma_min = 0.0;       // of matrix - lambda I
    double weighted_ratio = 0.0;  // sup |||u|||_(t) / |||(A - lambda) u|||_(-s), Hilbert form
    bool resolvent_evidence = false;
    bool spectrum_hit = false;
};

inline std::vector<ResolventProbeRow> resolvent_probe(const AssembledOperator& op,
                                                      const std::vector<cplx>& lambdas,
                                                      double floor = 1e-8) {
    std::vector<ResolventProbeRow> rows;
    for (cplx lambda : lambdas) {
        CMatrix B = op.matrix;
        for (Eigen::Index i = 0; i < B.rows(); ++i) B(i, i) -= lambda;
        ResolventProbeRow row{lambda};
        row.sigma_min = dense_singular_values(B).back();
        row.resolvent_evidence = row.sigma_min > floor;
        row.spectrum_hit = !row.resolvent_evidence;
        if (row.resolvent_evidence && lambda != cplx{0.0}) {
            const auto [smax, smin] = weighted_extreme_singular_values(std::move(B), op.spec, op.orders, lambda);
            (void)smax;
            row.weighted_ratio = 1.0 / smin;
        } else {
            row.weighted_ratio = std::numeric_limits<double>::infinity();
        }
        rows.push_back(row);
    }
    return rows;
}

struct IndexProbe {
    cplx lambda;
    int kernel = 0;
    int cokernel = 0;
    int index = 0;
    double tol = 0.0;
    bool ambiguous = false;
};

/// Kernel and cokernel dimensions as counts of singular values below `tol` (default
/// 1e-8 * ||matrix||_2). Flags ambiguity when a singular value lies within a factor 10
/// of the tolerance.
inline IndexProbe index_probe(const AssembledOperator& op, cplx lambda,
                              std::optional<double> tol = std::nullopt) {
    IndexProbe p{lambda};
    if (tol) {
        p.tol = *tol;
    } else {
        p.tol = 1e-8 * dense_singular_values(op.matrix).front();
    }
    CMatrix B = op.matrix;
    for (Eigen::Index i = 0; i < B.rows(); ++i) B(i, i) -= lambda;
    auto count = [&](const CMatrix& m) {
        int c = 0;
        for (double v : dense_singular_values(m)) {
            if (v < p.tol) ++c;
            if (v > 0.1 * p.tol && v < 10.0 * p.tol) p.ambiguous = true;
        }
        return c;
    };
    p.kernel = count(B);
    p.cokernel = count(B.adjoint());
    p.index = p.kernel - p.cokernel;
    return p;
}

} // namespace dn
