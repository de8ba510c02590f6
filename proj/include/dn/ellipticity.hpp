#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "dn/error.hpp"
#include "dn/linalg.hpp"
#include "dn/orders.hpp"
#include "dn/parallel.hpp"
#include "dn/system.hpp"

namespace dn {

/// Sample counts per axis of the constraint set <xi, lambda>_{k_r} = 1.
struct Resolution {
    int directions = 16;  // points on the unit xi-sphere (fixed at 2 when n = 1)
    int radial = 33;      // u = |lambda|^{1/m_{k_r}} in [0, 1]
    int args = 33;        // arg lambda across the sector
};

/// One point (xi, lambda) of the constraint set of level r, together with the
/// coordinates it was generated from (used by local refinement).
struct ConstraintSample {
    std::vector<double> xi;
    cplx lambda;
    int r = 1;
    double u = 0.0;
    double theta = 0.0;
    std::vector<double> direction;
    std::vector<double> direction_params;
};

struct MeshGap {
    double direction = 0.0;  // angular spacing on the sphere (radians)
    double radial = 0.0;
    double arg = 0.0;
};

struct ConstraintSet {
    std::vector<ConstraintSample> samples;
    MeshGap gap;
};

namespace detail {

constexpr double golden_angle = 2.399963229728653;  // pi (3 - sqrt 5)

inline std::vector<double> direction_from_params(int n, std::span<const double> p) {
    if (n == 2) return {std::cos(p[0]), std::sin(p[0])};
    // n == 3: (polar, azimuth)
    return {std::sin(p[0]) * std::cos(p[1]), std::sin(p[0]) * std::sin(p[1]), std::cos(p[0])};
}

inline double radical_inverse(unsigned i, unsigned base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= base;
        r += f * (i % base);
        i /= base;
    }
    return r;
}

struct Direction {
    std::vector<double> unit;
    std::vector<double> params;
};

/// Deterministic covering of the unit sphere in R^n.
inline std::vector<Direction> sphere_directions(int n, int count) {
    std::vector<Direction> out;
    if (n == 1) return {{{1.0}, {}}, {{-1.0}, {}}};
    if (n == 2) {
        for (int i = 0; i < count; ++i) {
            std::vector<double> p{2.0 * std::numbers::pi * i / count};
            out.push_back({direction_from_params(2, p), p});
        }
        return out;
    }
    if (n == 3) {
        for (int i = 0; i < count; ++i) {
            const double z = 1.0 - (2.0 * i + 1.0) / count;
            std::vector<double> p{std::acos(z), std::fmod(i * golden_angle, 2.0 * std::numbers::pi)};
            out.push_back({direction_from_params(3, p), p});
        }
        return out;
    }
    static constexpr unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    if (n > 12) throw ValidationError("direction sampling supports n <= 12");
    for (unsigned i = 1; static_cast<int>(out.size()) < count; ++i) {
        std::vector<double> v(n);
        double s = 0.0;
        for (int a = 0; a < n; ++a) {
            v[a] = 2.0 * radical_inverse(i, primes[a]) - 1.0;
            s += v[a] * v[a];
        }
        if (s < 1e-4) continue;
        for (auto& c : v) c /= std::sqrt(s);
        out.push_back({v, {}});
    }
    return out;
}

inline double direction_gap(int n, int count) {
    if (n == 1) return 0.0;
    if (n == 2) return 2.0 * std::numbers::pi / count;
    return std::sqrt(4.0 * std::numbers::pi / count);
}

inline std::vector<double> linspace(double a, double b, int count) {
    std::vector<double> v(count);
    for (int i = 0; i < count; ++i) v[i] = count == 1 ? a : a + (b - a) * i / (count - 1);
    return v;
}

inline ConstraintSample make_sample(int r, int m, double u, double theta,
                                    const std::vector<double>& dir,
                                    const std::vector<double>& params) {
    ConstraintSample s;
    s.r = r;
    s.u = u;
    s.theta = theta;
    s.direction = dir;
    s.direction_params = params;
    const double rho = std::sqrt(std::max(0.0, 1.0 - u * u));
    s.xi.resize(dir.size());
    for (std::size_t i = 0; i < dir.size(); ++i) s.xi[i] = rho * dir[i];
    s.lambda = u == 0.0 ? cplx{0.0} : std::polar(std::pow(u, m), theta);
    return s;
}

/// Golden-section search on [a, b]; returns the best point seen.
inline std::pair<double, double> golden_minimize(const std::function<double(double)>& f, double a,
                                                 double b, double x0, double f0) {
    constexpr double g = 0.6180339887498949;
    double bx = x0, bf = f0;
    auto consider = [&](double x, double fx) {
        if (fx < bf) {
            bx = x;
            bf = fx;
        }
    };
    consider(a, f(a));
    consider(b, f(b));
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    consider(c, fc);
    consider(d, fd);
    for (int it = 0; it < 200 && (b - a) > 1e-15 * std::max(1.0, std::abs(a) + std::abs(b));
         ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
            consider(c, fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
            consider(d, fd);
        }
    }
    return {bx, bf};
}

// Ordering for the deterministic min-reduction: value, then |xi|, arg lambda, index.
struct Candidate {
    double value = std::numeric_limits<double>::infinity();
    double xi_norm = 0.0;
    double arg = 0.0;
    std::size_t index = std::numeric_limits<std::size_t>::max();

    bool operator<(const Candidate& o) const {
        if (value != o.value) return value < o.value;
        if (xi_norm != o.xi_norm) return xi_norm < o.xi_norm;
        if (arg != o.arg) return arg < o.arg;
        return index < o.index;
    }
};

inline double positive_arg(cplx z) {
    double a = std::arg(z);
    return a < 0 ? a + 2.0 * std::numbers::pi : a;
}

} // namespace detail

/// Samples of {(xi, lambda) : lambda in sector, <xi, lambda>_{k_r} = 1}, parametrized by
/// a sphere direction, u = |lambda|^{1/m_{k_r}} (so |xi|^2 = 1 - u^2) and arg lambda.
/// The lambda = 0 slice is kept once per direction; the xi = 0 slice is kept once per
/// argument for r = 1 and replaced by the slice |xi| = xi_floor for r > 1.
inline ConstraintSet constraint_samples(const DNOrders& orders, int n, int r, const Sector& sector,
                                        const Resolution& res, double xi_floor = 1e-3) {
    if (r < 1 || r > orders.levels()) throw ValidationError("level index r out of range");
    if (res.directions < 2 || res.radial < 2 || res.args < 2)
        throw ComputationError("degenerate resolution: need at least 2 points per axis");
    sector.validate();
    const int m = orders.level_order(r);
    const auto dirs = detail::sphere_directions(n, res.directions);
    const auto thetas = detail::linspace(sector.theta_min, sector.theta_max, res.args);
    const double u_floor = std::sqrt(1.0 - xi_floor * xi_floor);

    ConstraintSet set;
    set.gap = {detail::direction_gap(n, res.directions), 1.0 / (res.radial - 1),
               (sector.theta_max - sector.theta_min) / (res.args - 1)};
    auto us = detail::linspace(0.0, 1.0, res.radial);
    if (r > 1) {
        us.back() = u_floor;
        std::erase_if(us, [&](double u) { return u > u_floor; });
    }
    for (double u : us) {
        if (u == 0.0) {
            for (const auto& d : dirs)
                set.samples.push_back(detail::make_sample(r, m, 0.0, thetas.front(), d.unit, d.params));
        } else if (u == 1.0) {
            for (double th : thetas)
                set.samples.push_back(
                    detail::make_sample(r, m, 1.0, th, dirs.front().unit, dirs.front().params));
        } else {
            for (const auto& d : dirs)
                for (double th : thetas)
                    set.samples.push_back(detail::make_sample(r, m, u, th, d.unit, d.params));
        }
    }
    return set;
}

/// |det(A^(r)_11(x, xi) - lambda I_{r,0})| / |xi|^{N_{r-1}}.
inline double constraint_ratio(const FrozenSymbol& fs, int r, std::span<const double> xi,
                               cplx lambda) {
    const auto& o = fs.orders();
    CMatrix a = fs.nested(xi, r);
    for (int j = o.k(r - 1); j < o.k(r); ++j) a(j, j) -= lambda;
    const double d = std::abs(determinant(a));
    const int power = o.partial_sum(r - 1);
    if (power == 0) return d;
    return d / std::pow(std::sqrt(norm2(xi)), power);
}

struct KappaWitness {
    std::vector<double> x;
    ConstraintSample sample;
};

struct KappaResult {
    int r = 1;
    double kappa = 0.0;       // after local refinement
    double grid_kappa = 0.0;  // minimum over the sample grid
    KappaWitness witness;
    std::size_t sample_count = 0;
    MeshGap gap;
};

struct KappaOptions {
    int refine_rounds = 3;
    double xi_floor = 1e-3;
    int jobs = 1;
};

/// Sampled upper bound on kappa_r: grid minimum of constraint_ratio over x_samples and
/// the constraint set, then coordinate-wise golden-section refinement around the best
/// grid point with a bracket that halves each round.
inline KappaResult kappa_estimate(const DNSystem& sys, int r, const Sector& sector,
                                  const std::vector<std::vector<double>>& x_samples,
                                  const Resolution& res, const KappaOptions& opt = {}) {
    if (x_samples.empty()) throw ValidationError("x_samples must not be empty");
    const int n = sys.dimension();
    const auto set = constraint_samples(sys.orders(), n, r, sector, res, opt.xi_floor);
    std::vector<FrozenSymbol> frozen;
    frozen.reserve(x_samples.size());
    for (const auto& x : x_samples) frozen.emplace_back(sys, x);

    const std::size_t S = set.samples.size();
    const std::size_t total = S * frozen.size();
    const int jobs = std::max(1, opt.jobs);
    std::vector<detail::Candidate> best(static_cast<std::size_t>(jobs));
    for_each_chunk(total, jobs, [&](std::size_t w, std::size_t begin, std::size_t end) {
        detail::Candidate b;
        for (std::size_t g = begin; g < end; ++g) {
            const auto& s = set.samples[g % S];
            const double v = constraint_ratio(frozen[g / S], r, s.xi, s.lambda);
            detail::Candidate c{v, std::sqrt(norm2(s.xi)), detail::positive_arg(s.lambda), g};
            if (c < b) b = c;
        }
        best[w] = b;
    });
    const detail::Candidate winner = *std::min_element(best.begin(), best.end());

    KappaResult out;
    out.r = r;
    out.sample_count = total;
    out.gap = set.gap;
    out.grid_kappa = winner.value;
    const std::size_t xi_index = winner.index / S;
    const FrozenSymbol& fs = frozen[xi_index];
    ConstraintSample cur = set.samples[winner.index % S];
    double fcur = winner.value;

    // coordinates: [direction params..., u, theta]
    const int m = sys.orders().level_order(r);
    const double u_max = r == 1 ? 1.0 : std::sqrt(1.0 - opt.xi_floor * opt.xi_floor);
    const int nd = static_cast<int>(cur.direction_params.size());
    std::vector<double> h(nd + 2);
    for (int i = 0; i < nd; ++i) h[i] = set.gap.direction;
    h[nd] = set.gap.radial;
    h[nd + 1] = set.gap.arg;

    auto rebuild = [&](const std::vector<double>& params, double u, double th) {
        std::vector<double> dir = nd ? detail::direction_from_params(n, params) : cur.direction;
        return detail::make_sample(r, m, u, th, dir, params);
    };
    for (int round = 0; round < opt.refine_rounds; ++round) {
        const double shrink = std::ldexp(1.0, -round);
        for (int c = 0; c < nd + 2; ++c) {
            const double step = h[c] * shrink;
            if (step <= 0.0) continue;
            double lo, hi, x0;
            if (c < nd) {
                x0 = cur.direction_params[c];
                lo = x0 - step;
                hi = x0 + step;
                if (n == 3 && c == 0) {
                    lo = std::max(lo, 0.0);
                    hi = std::min(hi, std::numbers::pi);
                }
            } else if (c == nd) {
                x0 = cur.u;
                lo = std::max(0.0, x0 - step);
                hi = std::min(u_max, x0 + step);
            } else {
                x0 = cur.theta;
                lo = std::max(sector.theta_min, x0 - step);
                hi = std::min(sector.theta_max, x0 + step);
            }
            auto f = [&](double v) {
                auto params = cur.direction_params;
                double u = cur.u, th = cur.theta;
                if (c < nd) params[c] = v;
                else if (c == nd) u = v;
                else th = v;
                const auto s = rebuild(params, u, th);
                return constraint_ratio(fs, r, s.xi, s.lambda);
            };
            const auto [xb, fb] = detail::golden_minimize(f, lo, hi, x0, fcur);
            if (fb < fcur) {
                auto params = cur.direction_params;
                double u = cur.u, th = cur.theta;
                if (c < nd) params[c] = xb;
                else if (c == nd) u = xb;
                else th = xb;
                cur = rebuild(params, u, th);
                fcur = fb;
            }
        }
    }
    out.kappa = fcur;
    out.witness = {x_samples[xi_index], cur};
    return out;
}

/// x-lattice covering each bump's 4-width ball (x_per_axis points per axis) plus one
/// far-field point where every bump has decayed. With no bumps, the origin alone.
inline std::vector<std::vector<double>> default_x_samples(int n, const std::vector<Bump>& bumps,
                                                          int x_per_axis = 9) {
    if (bumps.empty()) return {std::vector<double>(n, 0.0)};
    std::vector<std::vector<double>> out;
    double far = 0.0;
    for (const auto& b : bumps) {
        double c = 0.0;
        for (double v : b.center) c = std::max(c, std::abs(v));
        far = std::max(far, c + 100.0 * b.width + 100.0);
    }
    for (const auto& b : bumps) {
        const auto offs = detail::linspace(-4.0 * b.width, 4.0 * b.width, std::max(1, x_per_axis));
        std::vector<int> idx(n, 0);
        const int K = static_cast<int>(offs.size());
        while (true) {
            std::vector<double> x(n);
            for (int a = 0; a < n; ++a) x[a] = b.center[a] + offs[idx[a]];
            out.push_back(std::move(x));
            int a = n - 1;
            while (a >= 0 && idx[a] == K - 1) idx[a--] = 0;
            if (a < 0) break;
            ++idx[a];
        }
    }
    std::vector<double> xf(n, 0.0);
    xf[0] = far;
    out.push_back(std::move(xf));
    return out;
}

/// Sampling of the unconstrained (xi, lambda) region used for the global constants.
struct DeterminantSweep {
    int directions = 16;
    int shells = 41;      // log-spaced |xi| values (plus xi = 0)
    int args = 33;
    int magnitudes = 9;   // log-spaced |lambda| values across `decades`
    double decades = 4.0;
    double shell_span = 1e3;
};

struct DeterminantBound {
    double c0 = 0.0;
    std::vector<double> x;
    std::vector<double> xi;
    cplx lambda{0.0};
};

namespace detail {

struct SweepPoint {
    std::vector<double> xi;
    cplx lambda;
};

inline std::vector<SweepPoint> sweep_points(const DNOrders& o, int n, const Sector& sector,
                                            double lambda_floor, const DeterminantSweep& sw) {
    if (sw.directions < 2 || sw.shells < 2 || sw.args < 2 || sw.magnitudes < 2)
        throw ComputationError("degenerate sweep resolution: need at least 2 points per axis");
    const auto dirs = sphere_directions(n, sw.directions);
    const auto thetas = linspace(sector.theta_min, sector.theta_max, sw.args);
    const int m_max = *std::max_element(o.m().begin(), o.m().end());
    const int m_min = *std::min_element(o.m().begin(), o.m().end());
    std::vector<SweepPoint> out;
    for (int i = 0; i < sw.magnitudes; ++i) {
        const double mag = lambda_floor * std::pow(10.0, sw.decades * i / (sw.magnitudes - 1));
        const double a = std::pow(mag, 1.0 / m_max), b = std::pow(mag, 1.0 / m_min);
        const double lo = std::log(a / sw.shell_span), hi = std::log(b * sw.shell_span);
        for (double th : thetas) {
            const cplx lambda = std::polar(mag, th);
            out.push_back({std::vector<double>(n, 0.0), lambda});
            for (int q = 0; q < sw.shells; ++q) {
                const double rho = std::exp(lo + (hi - lo) * q / (sw.shells - 1));
                for (const auto& d : dirs) {
                    std::vector<double> xi(n);
                    for (int c = 0; c < n; ++c) xi[c] = rho * d.unit[c];
                    out.push_back({std::move(xi), lambda});
                }
            }
        }
    }
    return out;
}

inline double weight_product(const DNOrders& o, std::span<const double> xi, cplx lambda) {
    double p = 1.0;
    for (int j = 0; j < o.size(); ++j) p *= std::pow(anisotropic_weight(xi, lambda, o.m()[j]), o.m()[j]);
    return p;
}

} // namespace detail

/// Sampled C_0 with |det(A0(x, xi) - lambda I)| >= C_0 prod_j <xi, lambda>_j^{m_j} for
/// lambda in the sector, |lambda| >= lambda_floor.
inline DeterminantBound full_determinant_bound(const DNSystem& sys, const Sector& sector,
                                               double lambda_floor, const DeterminantSweep& sw,
                                               const std::vector<std::vector<double>>& x_samples,
                                               int jobs = 1) {
    if (!(lambda_floor > 0.0)) throw ValidationError("lambda floor must be positive");
    const auto pts = detail::sweep_points(sys.orders(), sys.dimension(), sector, lambda_floor, sw);
    std::vector<FrozenSymbol> frozen;
    for (const auto& x : x_samples) frozen.emplace_back(sys, x);
    const std::size_t P = pts.size(), total = P * frozen.size();
    std::vector<detail::Candidate> best(static_cast<std::size_t>(std::max(1, jobs)));
    for_each_chunk(total, jobs, [&](std::size_t w, std::size_t begin, std::size_t end) {
        detail::Candidate b;
        for (std::size_t g = begin; g < end; ++g) {
            const auto& p = pts[g % P];
            CMatrix a = frozen[g / P].principal(p.xi);
            for (int j = 0; j < a.rows(); ++j) a(j, j) -= p.lambda;
            const double v = std::abs(determinant(a)) /
                             detail::weight_product(sys.orders(), p.xi, p.lambda);
            detail::Candidate c{v, std::sqrt(norm2(p.xi)), detail::positive_arg(p.lambda), g};
            if (c < b) b = c;
        }
        best[w] = b;
    });
    const auto win = *std::min_element(best.begin(), best.end());
    const auto& p = pts[win.index % P];
    return {win.value, x_samples[win.index / P], p.xi, p.lambda};
}

struct PerturbationThreshold {
    double lambda_dagger = 0.0;
    bool converged = false;
    int doublings = 0;
};

/// Smallest radius R (doubling from `start`) such that on every sample with
/// |lambda| >= R, |det(A - lambda I) - det(A0 - lambda I)| <= (C_0 / 2) prod_j <xi,lambda>_j^{m_j}.
inline PerturbationThreshold perturbation_threshold(
    const DNSystem& sys, const Sector& sector, double c0, const DeterminantSweep& sw,
    const std::vector<std::vector<double>>& x_samples, double start = 1.0, double cap = 1e8) {
    if (!(c0 > 0.0)) throw ValidationError("C0 must be positive");
    std::vector<FrozenSymbol> frozen;
    for (const auto& x : x_samples) frozen.emplace_back(sys, x);
    PerturbationThreshold out;
    for (double R = start; R <= cap; R *= 2.0, ++out.doublings) {
        const auto pts = detail::sweep_points(sys.orders(), sys.dimension(), sector, R, sw);
        bool ok = true;
        for (const auto& fs : frozen) {
            for (const auto& p : pts) {
                CMatrix full = fs.full(p.xi, p.lambda);
                CMatrix a0 = fs.principal(p.xi);
                for (int j = 0; j < a0.rows(); ++j) a0(j, j) -= p.lambda;
                const double diff = std::abs(determinant(full) - determinant(a0));
                if (diff > 0.5 * c0 * detail::weight_product(sys.orders(), p.xi, p.lambda)) {
                    ok = false;
                    break;
                }
            }
            if (!ok) break;
        }
        if (ok) {
            out.lambda_dagger = R;
            out.converged = true;
            return out;
        }
    }
    out.lambda_dagger = cap;
    return out;
}

struct EllipticityConfig {
    Resolution resolution;
    double floor = 1e-6;
    double xi_floor = 1e-3;
    int refine_rounds = 3;
    std::optional<std::vector<std::vector<double>>> x_samples;
    int x_per_axis = 9;
    int jobs = 1;
    bool compute_constants = true;
    double lambda_floor = 1.0;
    DeterminantSweep sweep;
    double dagger_start = 1.0;
    double dagger_cap = 1e8;
};

struct LevelReport {
    KappaResult kappa;
    bool pass = false;
    std::optional<double> kappa_reduced_floor;  // r > 1: estimate at xi_floor / 10
    bool floor_stable = true;
};

struct EllipticityReport {
    ParityVerdict parity;
    std::vector<LevelReport> levels;
    bool pass = false;
    double floor = 0.0;
    Resolution resolution;
    std::size_t x_sample_count = 0;
    std::optional<DeterminantBound> c0;
    std::optional<PerturbationThreshold> lambda_dagger;
};

/// Parity prefilter, then kappa_r for every level; pass iff every kappa_r >= floor.
/// When requested and passing, also estimates C_0 and the threshold lambda_dagger.
inline EllipticityReport check_parameter_ellipticity(const DNSystem& sys, const Sector& sector,
                                                     const EllipticityConfig& cfg = {}) {
    sector.validate();
    EllipticityReport rep;
    rep.floor = cfg.floor;
    rep.resolution = cfg.resolution;
    rep.parity = parity_check(sys.orders(), sys.dimension());
    if (!rep.parity.pass) return rep;

    const int n = sys.dimension();
    const auto xs_principal =
        cfg.x_samples ? *cfg.x_samples : default_x_samples(n, sys.all_bumps(true), cfg.x_per_axis);
    rep.x_sample_count = xs_principal.size();
    const int jobs = resolve_jobs(cfg.jobs);
    bool all = true;
    for (int r = 1; r <= sys.orders().levels(); ++r) {
        LevelReport lv;
        lv.kappa = kappa_estimate(sys, r, sector, xs_principal, cfg.resolution,
                                  {cfg.refine_rounds, cfg.xi_floor, jobs});
        lv.pass = lv.kappa.kappa >= cfg.floor;
        if (r > 1) {
            const auto reduced = kappa_estimate(sys, r, sector, xs_principal, cfg.resolution,
                                                {cfg.refine_rounds, cfg.xi_floor / 10.0, jobs});
            lv.kappa_reduced_floor = reduced.kappa;
            lv.floor_stable = std::abs(reduced.kappa - lv.kappa.kappa) <=
                              0.1 * std::max(lv.kappa.kappa, reduced.kappa);
        }
        all = all && lv.pass;
        rep.levels.push_back(std::move(lv));
    }
    rep.pass = all;
    if (rep.pass && cfg.compute_constants) {
        rep.c0 = full_determinant_bound(sys, sector, cfg.lambda_floor, cfg.sweep, xs_principal, jobs);
        if (rep.c0->c0 > 0.0) {
            const auto xs_all = cfg.x_samples
                                    ? *cfg.x_samples
                                    : default_x_samples(n, sys.all_bumps(false), cfg.x_per_axis);
            rep.lambda_dagger = perturbation_threshold(sys, sector, rep.c0->c0, cfg.sweep, xs_all,
                                                       cfg.dagger_start, cfg.dagger_cap);
        }
    }
    return rep;
}

} // namespace dn
