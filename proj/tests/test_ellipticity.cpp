#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dn/ellipticity.hpp"
#include "dn/example.hpp"
#include "test_support.hpp"

using namespace dn;
using dn::test::Rng;

namespace {

constexpr double pi = std::numbers::pi;

// min over t in [0,1], theta in [a,b] of |t - (1-t) e^{i theta}|: the level-2 ratio of
// the model system on |xi|^2 + |lambda| = 1.
double level2_oracle(double a, double b, int grid = 2001) {
    double best = 1e300;
    for (int i = 0; i < grid; ++i) {
        const double t = static_cast<double>(i) / (grid - 1);
        for (int q = 0; q < grid; ++q) {
            const double th = a + (b - a) * q / (grid - 1);
            best = std::min(best, std::abs(t - (1 - t) * std::polar(1.0, th)));
        }
    }
    return best;
}

DNSystem scalar_order2_system() {
    const auto o = validate_orders(std::vector<int>{0}, std::vector<int>{2});
    return DNSystem(1, o, {{{{MultiIndex(std::vector<int>{2}), CoefficientFn(1.0)}}}});
}

} // namespace

TEST(ConstraintSamples, CountsAndConstraint) {
    const auto sys = scalar_order2_system();
    const Sector sector{pi / 2, 3 * pi / 2};
    const auto set = constraint_samples(sys.orders(), 1, 1, sector, {3, 3, 3});
    // u = 0: one per direction (2); u = 1/2: 2 x 3; u = 1: xi = 0, one per argument (3)
    EXPECT_EQ(set.samples.size(), 11u);
    for (const auto& s : set.samples) {
        EXPECT_NEAR(norm2(s.xi) + std::abs(s.lambda), 1.0, 1e-12);
        EXPECT_TRUE(sector.contains(s.lambda));
    }
    EXPECT_DOUBLE_EQ(set.gap.radial, 0.5);
    EXPECT_DOUBLE_EQ(set.gap.arg, pi / 2);
}

TEST(ConstraintSamples, UnitSliceRetainedOnlyAtFirstLevel) {
    const auto sys = example_system(1, 0.0);
    const Sector sector = Sector::avoiding_positive_axis(pi / 6);
    const auto l1 = constraint_samples(sys.orders(), 1, 1, sector, {3, 3, 3});
    int xi_zero = 0;
    for (const auto& s : l1.samples)
        if (norm2(s.xi) == 0.0) {
            ++xi_zero;
            EXPECT_NEAR(std::abs(s.lambda), 1.0, 1e-15);
        }
    EXPECT_EQ(xi_zero, 3);
    const auto l2 = constraint_samples(sys.orders(), 1, 2, sector, {3, 3, 3});
    // u = 1 slice becomes the |xi| = xi_floor slice: 2 + 6 + 6
    EXPECT_EQ(l2.samples.size(), 14u);
    for (const auto& s : l2.samples) {
        EXPECT_GE(std::sqrt(norm2(s.xi)), 1e-3 * (1 - 1e-8));
        EXPECT_NEAR(anisotropic_weight(s.xi, s.lambda, 2), 1.0, 1e-12);
    }
}

TEST(ConstraintSamples, CountFormula) {
    const auto sys = example_system(2, 0.0);
    const Sector sector = Sector::avoiding_positive_axis(0.3);
    const Resolution res{8, 6, 5};
    EXPECT_EQ(constraint_samples(sys.orders(), 2, 1, sector, res).samples.size(),
              static_cast<std::size_t>(8 + 4 * 8 * 5 + 5));
    EXPECT_EQ(constraint_samples(sys.orders(), 2, 2, sector, res).samples.size(),
              static_cast<std::size_t>(8 + 4 * 8 * 5 + 8 * 5));
}

TEST(ConstraintSamples, DegenerateResolution) {
    const auto sys = example_system(1, 0.0);
    EXPECT_THROW(constraint_samples(sys.orders(), 1, 1, Sector{}, {1, 3, 3}), ComputationError);
    EXPECT_THROW(constraint_samples(sys.orders(), 1, 1, Sector{}, {3, 1, 3}), ComputationError);
    EXPECT_THROW(constraint_samples(sys.orders(), 1, 1, Sector{}, {3, 3, 1}), ComputationError);
}

TEST(Kappa, ExampleLevelTwoLeftHalfPlane) {
    const auto sys = example_system(1, 0.0);
    const Sector sector{pi / 2, 3 * pi / 2};
    const auto res = kappa_estimate(sys, 2, sector, {{0.0}}, {16, 33, 33});
    EXPECT_GE(res.grid_kappa, 0.35);
    const double oracle = level2_oracle(pi / 2, 3 * pi / 2);
    EXPECT_NEAR(res.kappa, oracle, 1e-3 * oracle);
    EXPECT_LE(res.kappa, res.grid_kappa);
}

TEST(Kappa, FullPlaneFailsAtRealPositiveWitness) {
    const auto sys = example_system(1, 0.0);
    const auto res = kappa_estimate(sys, 1, Sector{0.0, 2 * pi}, {{0.0}}, {16, 33, 33});
    EXPECT_LE(res.kappa, 1e-10);
    const auto& w = res.witness.sample;
    EXPECT_NEAR(std::abs(w.lambda.imag()), 0.0, 1e-6);
    EXPECT_GT(w.lambda.real(), 0.0);
    EXPECT_NEAR(w.lambda.real(), std::pow(norm2(w.xi), 2), 1e-9);
}

TEST(Kappa, ZeroLambdaSliceIsClassicalEllipticity) {
    // scalar xi_1^4 + 2 xi_2^4: at lambda = 0 the ratio is the symbol on |xi| = 1
    const auto o = validate_orders(std::vector<int>{0}, std::vector<int>{4});
    const DNSystem sys(2, o,
                       {{{{MultiIndex(std::vector<int>{4, 0}), CoefficientFn(1.0)},
                          {MultiIndex(std::vector<int>{0, 4}), CoefficientFn(2.0)}}}});
    const auto set = constraint_samples(o, 2, 1, Sector{pi / 2, pi}, {32, 5, 5});
    const FrozenSymbol fs(sys, std::vector<double>{0.0, 0.0});
    int seen = 0;
    for (const auto& s : set.samples) {
        if (s.lambda != cplx(0.0)) continue;
        ++seen;
        const double c = s.xi[0], d = s.xi[1];
        EXPECT_NEAR(constraint_ratio(fs, 1, s.xi, s.lambda), c * c * c * c + 2 * d * d * d * d, 1e-14);
    }
    EXPECT_EQ(seen, 32);
}

TEST(Kappa, WitnessReproducesEstimate) {
    const auto sys = example_system(2, 0.0);
    const Sector sector = Sector::avoiding_positive_axis(pi / 6);
    for (int r = 1; r <= 2; ++r) {
        const auto res = kappa_estimate(sys, r, sector, {{0.0, 0.0}}, {12, 17, 17});
        const FrozenSymbol fs(sys, res.witness.x);
        EXPECT_NEAR(constraint_ratio(fs, r, res.witness.sample.xi, res.witness.sample.lambda),
                    res.kappa, 1e-10);
        EXPECT_NEAR(anisotropic_weight(res.witness.sample.xi, res.witness.sample.lambda,
                                       sys.orders().level_order(r)),
                    1.0, 1e-12);
        EXPECT_TRUE(sector.contains(res.witness.sample.lambda));
    }
}

TEST(Kappa, GridRefinementNeverIncreases) {
    Rng rng(41);
    for (int it = 0; it < 6; ++it) {
        test::RandomSystemOptions opt;
        opt.n = 1 + it % 2;
        const auto sys = test::random_system(rng, opt);
        const Sector sector{rng.uniform(0.0, 2.0), rng.uniform(3.0, 6.0)};
        const std::vector<std::vector<double>> xs{rng.point(opt.n)};
        for (int r = 1; r <= sys.orders().levels(); ++r) {
            KappaOptions no_refine{0, 1e-3, 1};
            const Resolution coarse{6, 5, 5}, fine{12, 9, 9};  // intervals doubled: nested grids
            const double a = kappa_estimate(sys, r, sector, xs, coarse, no_refine).kappa;
            const double b = kappa_estimate(sys, r, sector, xs, fine, no_refine).kappa;
            EXPECT_LE(b, a * (1 + 1e-14) + 1e-300);
        }
    }
}

TEST(Kappa, PartitionedEvaluationIsDeterministic) {
    const auto sys = example_system(2, 0.0, {1.0, {0.0, 0.0}, 0.6});
    const Sector sector = Sector::avoiding_positive_axis(0.4);
    const auto xs = default_x_samples(2, sys.all_bumps(), 3);
    const auto a = kappa_estimate(sys, 2, sector, xs, {8, 9, 9}, {3, 1e-3, 1});
    const auto b = kappa_estimate(sys, 2, sector, xs, {8, 9, 9}, {3, 1e-3, 4});
    EXPECT_EQ(a.kappa, b.kappa);
    EXPECT_EQ(a.grid_kappa, b.grid_kappa);
    EXPECT_EQ(a.witness.x, b.witness.x);
    EXPECT_EQ(a.witness.sample.xi, b.witness.sample.xi);
    EXPECT_EQ(a.witness.sample.lambda, b.witness.sample.lambda);
}

TEST(Kappa, ScaleConsistency) {
    // unconstrained ratio at (xi, lambda) equals the constrained ratio at the rescaled point
    Rng rng(43);
    for (int it = 0; it < 200; ++it) {
        const auto sys = test::random_system(rng);
        const int n = sys.dimension();
        const auto& o = sys.orders();
        const int r = rng.integer(1, o.levels());
        const auto x = rng.point(n), xi = rng.point(n, 3.0);
        const cplx lambda = rng.complex(4.0);
        const FrozenSymbol fs(sys, x);
        const int m = o.level_order(r);
        const double w = anisotropic_weight(xi, lambda, m);
        const double rho = std::sqrt(norm2(xi));
        const double lhs = std::abs(determinant(
                               fs.nested(xi, r) - lambda * lambda_mask(o, r))) /
                           (std::pow(w, o.partial_sum(r)) * std::pow(rho / w, o.partial_sum(r - 1)));
        std::vector<double> sxi(xi);
        for (auto& v : sxi) v /= w;
        const double rhs = constraint_ratio(fs, r, sxi, lambda / std::pow(w, m));
        EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(lhs, rhs) + 1e-300);
    }
}

TEST(Ellipticity, ExamplePassesInSector) {
    for (int n : {1, 2}) {
        const auto sys = example_system(n, 1.0, {1.0, {}, 0.5});
        EllipticityConfig cfg;
        cfg.compute_constants = false;
        const auto rep = check_parameter_ellipticity(sys, Sector::avoiding_positive_axis(pi / 6), cfg);
        EXPECT_TRUE(rep.parity.pass);
        ASSERT_EQ(rep.levels.size(), 2u);
        EXPECT_TRUE(rep.pass);
        EXPECT_GT(rep.levels[0].kappa.kappa, 0.0);
        EXPECT_GT(rep.levels[1].kappa.kappa, 0.0);
        EXPECT_TRUE(rep.levels[1].floor_stable);
        // principal part has constant coefficients: one x sample suffices
        EXPECT_EQ(rep.x_sample_count, 1u);
    }
}

TEST(Ellipticity, SectorWithPositiveAxisFails) {
    const auto sys = example_system(1, 1.0);
    EllipticityConfig cfg;
    cfg.compute_constants = false;
    const auto rep = check_parameter_ellipticity(sys, Sector{0.0, 2 * pi}, cfg);
    EXPECT_FALSE(rep.pass);
    EXPECT_FALSE(rep.levels[0].pass);
    EXPECT_LE(rep.levels[0].kappa.kappa, 1e-10);
    EXPECT_GT(rep.levels[0].kappa.witness.sample.lambda.real(), 0.0);
}

TEST(Ellipticity, ParityPrefilter) {
    const auto o = validate_orders(std::vector<int>{0}, std::vector<int>{3});
    const DNSystem sys(3, o, {{{{MultiIndex(std::vector<int>{3, 0, 0}), CoefficientFn(1.0)}}}});
    const auto rep = check_parameter_ellipticity(sys, Sector::avoiding_positive_axis(0.5));
    EXPECT_FALSE(rep.pass);
    EXPECT_FALSE(rep.parity.pass);
    EXPECT_EQ(rep.parity.failing_level, 1);
    EXPECT_TRUE(rep.levels.empty());
}

TEST(Ellipticity, VerdictFlipsOnlyAtPositiveAxis) {
    const auto sys = example_system(1, 0.0);
    EllipticityConfig cfg;
    cfg.compute_constants = false;
    cfg.resolution = {4, 33, 33};
    for (double eps : {1e-3, 1e-2, 0.1, 0.5, 1.0, 1.5})
        EXPECT_TRUE(check_parameter_ellipticity(sys, Sector::avoiding_positive_axis(eps), cfg).pass)
            << eps;
    EXPECT_FALSE(check_parameter_ellipticity(sys, Sector::avoiding_positive_axis(0.0), cfg).pass);
}

TEST(DeterminantBound, NegativeAxisAtZeroFrequency) {
    // at xi = 0 the model ratio is (|lambda|/|lambda|)(|lambda|/|lambda|) = 1
    const auto sys = example_system(1, 0.0);
    const FrozenSymbol fs(sys, std::vector<double>{0.0});
    const std::vector<double> xi{0.0};
    for (double R : {0.5, 3.0, 100.0}) {
        CMatrix a = fs.principal(xi);
        a(0, 0) += R;
        a(1, 1) += R;
        const double ratio = std::abs(determinant(a)) / (std::pow(anisotropic_weight(xi, -R, 4), 4) *
                                                       std::pow(anisotropic_weight(xi, -R, 2), 2));
        EXPECT_NEAR(ratio, 1.0, 1e-14);
    }
}

TEST(DeterminantBound, MatchesBruteForceOracle) {
    const auto sys = example_system(1, 0.0);
    const Sector sector{pi / 2, 3 * pi / 2};
    DeterminantSweep sw;
    const auto b = full_determinant_bound(sys, sector, 1.0, sw, {{0.0}});
    // oracle: min over rho >= 0, |lambda| in [1, 1e4], theta of the closed-form ratio
    double oracle = 1e300;
    for (int i = 0; i <= 200; ++i) {
        const double mag = std::pow(10.0, 4.0 * i / 200);
        for (int q = 0; q <= 200; ++q) {
            const cplx lam = std::polar(mag, pi / 2 + pi * q / 200);
            for (int k = 0; k <= 700; ++k) {
                const double rho2 = k == 0 ? 0.0 : std::pow(10.0, -6.0 + 14.0 * k / 700);
                const double f1 = std::abs(rho2 * rho2 - lam) / std::pow(rho2 + std::sqrt(mag), 2);
                const double f2 = std::abs(rho2 - lam) / (rho2 + mag);
                oracle = std::min(oracle, f1 * f2);
            }
        }
    }
    EXPECT_GT(b.c0, 0.0);
    EXPECT_GE(b.c0, oracle * (1 - 1e-12));
    EXPECT_NEAR(b.c0, oracle, 0.05 * oracle);
}

TEST(DeterminantBound, FloorScaleInvariance) {
    const auto sys = example_system(1, 0.0);
    const Sector sector = Sector::avoiding_positive_axis(pi / 6);
    DeterminantSweep sw;
    const double a = full_determinant_bound(sys, sector, 100.0, sw, {{0.0}}).c0;
    const double b = full_determinant_bound(sys, sector, 200.0, sw, {{0.0}}).c0;
    EXPECT_NEAR(a, b, 0.01 * a);
}

TEST(PerturbationThreshold, ZeroPerturbationReturnsStart) {
    const auto sys = example_system(1, 0.0);
    const Sector sector = Sector::avoiding_positive_axis(pi / 6);
    const auto t = perturbation_threshold(sys, sector, 0.1, DeterminantSweep{}, {{0.0}}, 4.0);
    EXPECT_TRUE(t.converged);
    EXPECT_EQ(t.lambda_dagger, 4.0);
    EXPECT_EQ(t.doublings, 0);
}

TEST(PerturbationThreshold, ShiftedExampleIsFiniteAndAboveShift) {
    const auto sys = example_system(1, 1.0);
    const Sector sector = Sector::avoiding_positive_axis(pi / 6);
    DeterminantSweep sw;
    const auto b = full_determinant_bound(sys, sector, 1.0, sw, {{0.0}});
    const auto t = perturbation_threshold(sys, sector, b.c0, sw, {{0.0}});
    EXPECT_TRUE(t.converged);
    EXPECT_GT(t.lambda_dagger, 1.0);
    EXPECT_LT(t.lambda_dagger, 1e3);
}

TEST(PerturbationThreshold, GrowsWithPerturbationStrength) {
    const Sector sector = Sector::avoiding_positive_axis(pi / 6);
    DeterminantSweep sw;
    sw.shells = 21;
    sw.args = 9;
    sw.magnitudes = 5;
    const auto base = example_system(1, 1.0);
    const double c0 = full_determinant_bound(base, sector, 1.0, sw, {{0.0}}).c0;
    double prev = 0.0;
    for (double amp : {0.5, 5.0, 50.0}) {
        const auto sys = example_system(1, 1.0, {amp, {0.0}, 0.5});
        const auto xs = default_x_samples(1, sys.all_bumps(), 9);
        const auto t = perturbation_threshold(sys, sector, c0, sw, xs);
        EXPECT_TRUE(t.converged);
        EXPECT_GE(t.lambda_dagger, prev);
        prev = t.lambda_dagger;
    }
}

TEST(XSamples, CoverBumpsAndFarField) {
    const Bump b{1.0, {1.0, -2.0}, 0.5, MultiIndex::zero(2)};
    const auto xs = default_x_samples(2, {b}, 5);
    ASSERT_EQ(xs.size(), 26u);
    EXPECT_EQ(xs.front(), (std::vector<double>{-1.0, -4.0}));
    EXPECT_GT(xs.back()[0], 100.0);
    EXPECT_EQ(default_x_samples(3, {}).size(), 1u);
}
