#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "dn/example.hpp"
#include "dn/fourier.hpp"
#include "test_support.hpp"

using namespace dn;
using dn::test::Rng;

namespace {

constexpr double pi = std::numbers::pi;

double field_norm(const GridField& u) {
    double s = 0.0;
    for (const auto& c : u.components)
        for (auto v : c) s += std::norm(v);
    return std::sqrt(s);
}

double field_diff(const GridField& a, const GridField& b) {
    double s = 0.0;
    for (int k = 0; k < a.size(); ++k)
        for (std::size_t i = 0; i < a.components[k].size(); ++i)
            s += std::norm(a.components[k][i] - b.components[k][i]);
    return std::sqrt(s);
}

GridField plane_wave(const GridSpec& g, int N, int comp, const std::vector<int>& q) {
    GridField u(g, N);
    for (std::size_t f = 0; f < g.total(); ++f) {
        const auto x = g.point(f);
        double ph = 0.0;
        for (int a = 0; a < g.dimension(); ++a) ph += 2.0 * pi * q[a] / g.period() * x[a];
        u.components[comp][f] = std::polar(1.0, ph);
    }
    return u;
}

} // namespace

TEST(Grid, RejectsBadSpecs) {
    EXPECT_THROW(GridSpec(1, 2 * pi, 6 - 3), ValidationError);
    EXPECT_THROW(GridSpec(1, 2 * pi, 2), ValidationError);
    EXPECT_THROW(GridSpec(1, 0.0, 8), ValidationError);
    EXPECT_THROW(GridSpec(0, 1.0, 8), ValidationError);
}

TEST(Grid, FrequencyLayout) {
    GridSpec g(1, 4 * pi, 8);
    EXPECT_EQ(g.wavenumber(0), 0);
    EXPECT_EQ(g.wavenumber(3), 3);
    EXPECT_EQ(g.wavenumber(4), -4);
    EXPECT_EQ(g.wavenumber(7), -1);
    EXPECT_DOUBLE_EQ(g.frequency(1)[0], 0.5);
    EXPECT_EQ(g.fft_from_natural(0), 4u);  // k = -4
    EXPECT_EQ(g.fft_from_natural(4), 0u);  // k = 0
}

TEST(Grid, RoundTripAndParseval) {
    for (int n : {1, 2, 3}) {
        GridSpec g(n, 3.0, n == 3 ? 8 : 16);
        Rng rng(7 + n);
        ComplexArray u(g.total());
        for (auto& v : u) v = rng.complex();
        const auto c = forward(g, u);
        const auto back = inverse(g, c);
        double err = 0.0, nu = 0.0, nc = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            err = std::max(err, std::abs(back[i] - u[i]));
            nu += std::norm(u[i]);
            nc += std::norm(c[i]);
        }
        EXPECT_LT(err, 1e-13);
        // unit-measure quadrature: mean |u|^2 = sum |c_k|^2
        EXPECT_NEAR(nu / g.total(), nc, 1e-13 * nc);
    }
}

TEST(Grid, SingleModeCoefficientIsOne) {
    GridSpec g(2, 2 * pi, 8);
    const auto u = plane_wave(g, 1, 0, {2, -3});
    const auto c = forward(g, u.components[0]);
    for (std::size_t f = 0; f < g.total(); ++f) {
        const auto k = g.wavenumbers(f);
        const double expect = (k[0] == 2 && k[1] == -3) ? 1.0 : 0.0;
        EXPECT_NEAR(std::abs(c[f]), expect, 1e-14);
    }
}

TEST(Grid, BinaryRoundTripAndLayout) {
    GridSpec g(2, 5.0, 4);
    const auto u = random_field(g, 2, 11, 1);
    std::stringstream ss;
    write_field(ss, u);
    const std::string bytes = ss.str();
    ASSERT_EQ(bytes.size(), 3 * 4 + 8 + 2 * 16 * 16u);
    // header is little-endian n, N, M, L
    EXPECT_EQ(static_cast<unsigned char>(bytes[0]), 2);
    EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 2);
    EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 4);
    // payload starts at wavenumber (-2, -2), outside band 1
    double first_re;
    std::memcpy(&first_re, bytes.data() + 20, 8);
    EXPECT_EQ(first_re, 0.0);
    const auto v = read_field(ss);
    EXPECT_EQ(v.spec, g);
    EXPECT_LT(field_diff(u, v), 1e-14 * field_norm(u));
}

TEST(Grid, TruncatedStreamRejected) {
    std::stringstream ss;
    write_field(ss, GridField(GridSpec(1, 1.0, 4), 1));
    std::string s = ss.str();
    s.resize(s.size() - 3);
    std::stringstream cut(s);
    EXPECT_THROW(read_field(cut), ValidationError);
}

TEST(Grid, RandomFieldDeterministicAndBandLimited) {
    GridSpec g(1, 2 * pi, 16);
    const auto a = random_field(g, 1, 42, 3);
    const auto b = random_field(g, 1, 42, 3);
    EXPECT_EQ(a.components, b.components);
    const auto c = forward(g, a.components[0]);
    for (std::size_t f = 0; f < g.total(); ++f)
        if (std::abs(g.wavenumber(static_cast<int>(f))) > 3) EXPECT_LT(std::abs(c[f]), 1e-15);
}

TEST(Apply, ZeroFieldGivesZero) {
    const auto sys = example_system(1, 1.0, {.amplitude = 1.0});
    GridSpec g(1, 2 * pi, 16);
    const auto f = apply_operator(sys, 0.0, GridField(g, 2));
    EXPECT_EQ(field_norm(f), 0.0);
}

TEST(Apply, ModelOnUnitMode) {
    const auto sys = example_system(1, 0.0);
    GridSpec g(1, 2 * pi, 16);
    const auto u = plane_wave(g, 2, 0, {1});
    const auto f = apply_operator(sys, 0.0, u);
    EXPECT_LT(field_diff(f, u), 1e-12 * field_norm(u));
}

TEST(Apply, SingleModeMatchesSymbol) {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto sys = test::random_system(rng, {.bumps = false});
        const int n = sys.dimension(), N = sys.size();
        GridSpec g(n, rng.uniform(2.0, 7.0), n == 3 ? 8 : 16);
        std::vector<int> q(n);
        for (auto& v : q) v = rng.integer(-3, 3);
        const int k0 = rng.integer(0, N - 1);
        const cplx lambda = rng.complex(5.0);
        const auto u = plane_wave(g, N, k0, q);
        const auto f = apply_operator(sys, lambda, u);
        std::vector<double> xi(n), x0(n, 0.0);
        for (int a = 0; a < n; ++a) xi[a] = 2 * pi * q[a] / g.period();
        const CMatrix s = eval_symbol(sys, x0, xi, lambda);
        for (int j = 0; j < N; ++j)
            for (std::size_t p = 0; p < g.total(); ++p) {
                const cplx expect = s(j, k0) * u.components[k0][p];
                ASSERT_NEAR(std::abs(f.components[j][p] - expect), 0.0,
                            1e-12 * std::max(1.0, std::abs(s(j, k0))));
            }
    }
}

// Oracle: evaluate A u exactly at the points of a much finer grid (u is a trigonometric
// polynomial, so D^alpha u is exact), then project to the coarse band.
TEST(Apply, GalerkinMatchesProjectedExactProduct) {
    Rng rng(21);
    for (int trial = 0; trial < 6; ++trial) {
        const int n = trial < 4 ? 1 : 2;
        const auto sys = test::random_system(rng, {.n = n});
        const int N = sys.size();
        GridSpec g(n, 8.0, n == 1 ? 16 : 8);
        const auto u = random_field(g, N, 100 + trial, g.points_per_axis() / 2 - 1);
        const cplx lambda = rng.complex(2.0);
        const auto f = apply_operator(sys, lambda, u);

        GridSpec fine(n, g.period(), 8 * g.points_per_axis());
        std::vector<ComplexArray> uh(N);
        for (int k = 0; k < N; ++k) uh[k] = forward(g, u.components[k]);
        for (int j = 0; j < N; ++j) {
            ComplexArray vals(fine.total());
            for (std::size_t p = 0; p < fine.total(); ++p) {
                const auto x = fine.point(p);
                cplx acc = -lambda * cplx{0.0};
                for (std::size_t q = 0; q < g.total(); ++q) {
                    const auto xi = g.frequency(q);
                    double ph = 0.0;
                    for (int a = 0; a < n; ++a) ph += xi[a] * x[a];
                    const cplx e = std::polar(1.0, ph);
                    for (int k = 0; k < N; ++k) {
                        if (uh[k][q] == cplx{0.0}) continue;
                        for (const auto& term : sys.entry(j, k)) {
                            const cplx a = term.coeff.constant() +
                                           term.coeff.periodic_bump_part(x, g.period());
                            acc += a * term.alpha.monomial(xi) * uh[k][q] * e;
                        }
                        if (k == j) acc -= lambda * uh[k][q] * e;
                    }
                }
                vals[p] = acc;
            }
            const auto proj = inverse(g, resample_spectrum(fine, forward(fine, vals), g));
            double err = 0.0, scale = 0.0;
            for (std::size_t p = 0; p < g.total(); ++p) {
                err = std::max(err, std::abs(proj[p] - f.components[j][p]));
                scale = std::max(scale, std::abs(proj[p]));
            }
            EXPECT_LT(err, 1e-11 * std::max(1.0, scale)) << "trial " << trial << " row " << j;
        }
    }
}

TEST(Apply, CollocationAgreesForConstantCoefficients) {
    Rng rng(5);
    const auto sys = test::random_system(rng, {.n = 1, .bumps = false});
    GridSpec g(1, 4.0, 32);
    const auto u = random_field(g, sys.size(), 9, 10);
    const auto a = apply_operator(sys, 1.5, u);
    const auto b = apply_operator(sys, 1.5, u, {.products = ProductRule::collocation});
    EXPECT_LT(field_diff(a, b), 1e-12 * field_norm(a));
}

TEST(Apply, DealiasedCollocationClearsUpperThird) {
    const auto sys = example_system(1, 1.0, {.amplitude = 2.0});
    GridSpec g(1, 2 * pi, 24);
    const auto u = random_field(g, 2, 4, 11);
    const auto f = apply_operator(sys, 0.0, u, {.products = ProductRule::collocation_dealiased});
    // the constant-coefficient part is untouched, so compare against it
    const auto f0 = apply_operator(example_system(1, 1.0), 0.0, u);
    for (int j = 0; j < 2; ++j) {
        const auto c = forward(g, f.components[j]);
        const auto c0 = forward(g, f0.components[j]);
        for (std::size_t q = 0; q < g.total(); ++q)
            if (3 * std::abs(g.wavenumber(static_cast<int>(q))) > 24)
                EXPECT_NEAR(std::abs(c[q] - c0[q]), 0.0, 1e-9);
    }
}

TEST(Galerkin, MatrixMatchesApply) {
    Rng rng(8);
    for (int trial = 0; trial < 4; ++trial) {
        const int n = trial < 3 ? 1 : 2;
        const auto sys = test::random_system(rng, {.n = n});
        GridSpec g(n, 6.0, n == 1 ? 16 : 8);
        const CMatrix A = galerkin_matrix(sys, g, 2);
        const int N = sys.size();
        const std::size_t T = g.total();
        for (int r = 0; r < 3; ++r) {
            const auto u = random_field(g, N, 50 + r, g.points_per_axis() / 2);
            const auto f = apply_operator(sys, 0.0, u);
            CVector uv(N * T);
            for (int k = 0; k < N; ++k) {
                const auto c = forward(g, u.components[k]);
                for (std::size_t nat = 0; nat < T; ++nat) uv(k * T + nat) = c[g.fft_from_natural(nat)];
            }
            const CVector fv = A * uv;
            double err = 0.0, scale = 0.0;
            for (int j = 0; j < N; ++j) {
                const auto c = forward(g, f.components[j]);
                for (std::size_t nat = 0; nat < T; ++nat) {
                    err = std::max(err, std::abs(fv(j * T + nat) - c[g.fft_from_natural(nat)]));
                    scale = std::max(scale, std::abs(fv(j * T + nat)));
                }
            }
            EXPECT_LT(err, 1e-10 * scale);
        }
    }
}

TEST(Galerkin, JobsDoNotChangeMatrix) {
    const auto sys = example_system(1, 1.0, {.amplitude = 3.0});
    GridSpec g(1, 2 * pi, 16);
    EXPECT_EQ(galerkin_matrix(sys, g, 1), galerkin_matrix(sys, g, 4));
}

TEST(Resolvent, ModelSecondComponentHalves) {
    const auto sys = example_system(1, 0.0);
    GridSpec g(1, 2 * pi, 16);
    const auto f = plane_wave(g, 2, 1, {1});
    const std::vector<double> x0{0.0};
    const auto u = frozen_resolvent_apply(sys, x0, -1.0, f);
    for (std::size_t p = 0; p < g.total(); ++p) {
        EXPECT_NEAR(std::abs(u.components[0][p]), 0.0, 1e-14);
        EXPECT_NEAR(std::abs(u.components[1][p] - 0.5 * f.components[1][p]), 0.0, 1e-14);
    }
}

TEST(Resolvent, ZeroRhsGivesZero) {
    const auto sys = example_system(2, 1.0);
    GridSpec g(2, 2 * pi, 8);
    const std::vector<double> x0{0.0, 0.0};
    EXPECT_EQ(field_norm(frozen_resolvent_apply(sys, x0, -3.0, GridField(g, 2))), 0.0);
}

TEST(Resolvent, SingularFrequencyWitness) {
    const auto sys = example_system(1, 1.0);
    GridSpec g(1, 2 * pi, 16);
    const std::vector<double> x0{0.0};
    try {
        frozen_resolvent_apply(sys, x0, 1.0, random_field(g, 2, 1, 4), {.jobs = 3});
        FAIL() << "expected a singular frequency";
    } catch (const SingularFrequencyError& e) {
        ASSERT_EQ(e.xi().size(), 1u);
        EXPECT_DOUBLE_EQ(e.xi()[0], 1.0);
        EXPECT_NEAR(std::abs(e.eigenvalue() - 1.0), 0.0, 1e-12);
        EXPECT_GT(e.condition(), 1e14);
    }
}

TEST(Resolvent, RoundTripBothOrders) {
    Rng rng(99);
    for (int n : {1, 2}) {
        const auto sys = example_system(n, 1.0, {.amplitude = 1.0});
        const std::vector<double> x0(n, 0.7);
        const auto frozen = freeze_principal(sys, x0);
        GridSpec g(n, 2 * pi, n == 1 ? 64 : 16);
        for (cplx lambda : {cplx(-5.0), cplx(-1.0, 3.0), std::polar(40.0, 2.5)}) {
            const auto f = random_field(g, 2, rng.integer(1, 1000), g.points_per_axis() / 2);
            const auto u = frozen_resolvent_apply(sys, x0, lambda, f);
            EXPECT_LT(field_diff(apply_operator(frozen, lambda, u), f), 1e-10 * field_norm(f));
            const auto v = frozen_resolvent_apply(sys, x0, lambda, apply_operator(frozen, lambda, f));
            EXPECT_LT(field_diff(v, f), 1e-10 * field_norm(f));
        }
    }
}

TEST(Resolvent, ConditioningImprovesAlongRay) {
    const auto sys = example_system(1, 1.0);
    GridSpec g(1, 2 * pi, 32);
    const std::vector<double> x0{0.0};
    double prev = std::numeric_limits<double>::infinity();
    for (double r : {1.0, 10.0, 100.0, 1000.0, 1e4}) {
        const double c = max_frequency_condition(sys, x0, std::polar(r, 2.0), g);
        EXPECT_LE(c, prev * (1 + 1e-12));
        prev = c;
    }
}

TEST(Mikhlin, DiagonalClosedForm) {
    const auto sys = example_system(1, 1.0);
    const std::vector<double> x0{0.0};
    const Sector sec = Sector::avoiding_positive_axis(pi / 6);
    for (double R : {10.0, 1e3}) {
        const auto t = symbol_inverse_bounds(sys, x0, sec, {cplx(-R)}, {{0.0}});
        EXPECT_NEAR(t.at(1, 1, MultiIndex::zero(1)).max_ratio, 1.0, 1e-12);
        EXPECT_NEAR(t.at(0, 0, MultiIndex::zero(1)).max_ratio, 1.0, 1e-12);
        EXPECT_EQ(t.at(0, 1, MultiIndex::zero(1)).max_ratio, 0.0);
        EXPECT_EQ(t.at(1, 0, MultiIndex::unit(1, 0)).max_ratio, 0.0);
    }
}

// ainv_22 = 1/(xi^2 - lambda): xi d/dxi ainv_22 = -2 xi^2/(xi^2 - lambda)^2, weight xi^2 + |lambda|.
TEST(Mikhlin, FiniteDifferenceMatchesAnalyticDerivative) {
    const auto sys = example_system(1, 0.0);
    const std::vector<double> x0{0.0};
    const Sector sec = Sector::avoiding_positive_axis(pi / 6);
    const cplx lambda = std::polar(7.0, 2.0);
    for (double xi : {0.3, 2.0, 11.0}) {
        const auto t = symbol_inverse_bounds(sys, x0, sec, {lambda}, {{xi}});
        const cplx d = -2.0 * xi * xi / std::pow(xi * xi - lambda, 2);
        const double expect = std::abs(d) * (xi * xi + std::abs(lambda));
        EXPECT_NEAR(t.at(1, 1, MultiIndex::unit(1, 0)).max_ratio, expect, 1e-6 * expect);
    }
}

TEST(Mikhlin, LambdaOutsideSectorRejected) {
    const auto sys = example_system(1, 1.0);
    const std::vector<double> x0{0.0};
    EXPECT_THROW(symbol_inverse_bounds(sys, x0, Sector::avoiding_positive_axis(pi / 6),
                                       {cplx(2.0)}, {{0.0}}),
                 ValidationError);
}

TEST(Mikhlin, SingularStencilIsSkipped) {
    // lambda = e^{i pi/6} on the sector edge; xi chosen so a stencil point is singular
    // only for a system whose symbol has a real-axis root there
    const DNOrders o = validate_orders(std::vector<int>{0}, std::vector<int>{2});
    std::vector<std::vector<Entry>> e(1, std::vector<Entry>(1));
    e[0][0].push_back({MultiIndex(std::vector<int>{2}), CoefficientFn(cplx(0.0, 1.0))});
    const DNSystem sys(1, o, e);
    const std::vector<double> x0{0.0};
    const Sector sec{0.25 * pi, 0.75 * pi};
    // i xi^2 = i at xi = 1
    const auto t = symbol_inverse_bounds(sys, x0, sec, {cplx(0.0, 1.0)}, {{1.0}, {2.0}});
    EXPECT_EQ(t.samples, 2u);
    EXPECT_EQ(t.skipped, 1u);  // alpha = 0 at xi = 1
}

TEST(Mikhlin, RatiosUniformOverDecades) {
    const auto sys = example_system(2, 1.0, {.amplitude = 1.0});
    const std::vector<double> x0{0.5, -0.5};
    const Sector sec = Sector::avoiding_positive_axis(pi / 6);
    const auto xis = default_xi_samples(2, 41);
    std::vector<MikhlinTable> tables;
    for (double R : {10.0, 100.0, 1000.0}) tables.push_back(symbol_inverse_bounds(sys, x0, sec, {cplx(-R)}, xis));
    for (std::size_t e = 0; e < tables[0].entries.size(); ++e)
        for (std::size_t d = 1; d < tables.size(); ++d) {
            const double a = tables[d - 1].entries[e].max_ratio, b = tables[d].entries[e].max_ratio;
            if (a == 0.0 && b == 0.0) continue;
            EXPECT_LT(std::max(a, b) / std::min(a, b), 2.0);
        }
}
