#pragma once

#include <numbers>
#include <vector>

#include "dn/system.hpp"

namespace dn {

/// Lower-order perturbation placed on the model system. All bumps share one
/// center and width; `amplitude` scales every term.
struct BumpPerturbation {
    double amplitude = 0.0;
    std::vector<double> center;  // empty: (pi, ..., pi)
    double width = 0.5;
};

/// diag(Delta^2, -Delta) - c I_2 + perturbation, with s = (0, 0), t = (4, 2).
/// The perturbation respects the order caps sigma_11 = 3, sigma_22 = 1 and
/// sigma_jk = 1 off the diagonal:
///   (1,1): -a g + 0.25 a g D_1 + 0.05 a g D_1^3
///   (2,2): -a g + 0.25 a g D_1
///   (1,2):  0.5 a g + 0.1 a g D_1
///   (2,1):  0.5 a g
/// with g the Gaussian bump.
inline DNSystem example_system(int n, double c, const BumpPerturbation& p = {}) {
    const DNOrders orders = validate_orders(std::vector<int>{0, 0}, std::vector<int>{4, 2});
    std::vector<std::vector<Entry>> e(2, std::vector<Entry>(2));

    auto idx = [n](std::vector<std::pair<int, int>> powers) {
        std::vector<int> a(n, 0);
        for (auto [axis, pw] : powers) a[axis] += pw;
        return MultiIndex(std::move(a));
    };

    // Delta^2 = sum_{i,l} D_i^2 D_l^2, -Delta = sum_i D_i^2
    for (int i = 0; i < n; ++i)
        for (int l = i; l < n; ++l)
            e[0][0].push_back({idx({{i, 2}, {l, 2}}), CoefficientFn(i == l ? 1.0 : 2.0)});
    for (int i = 0; i < n; ++i) e[1][1].push_back({idx({{i, 2}}), CoefficientFn(1.0)});

    std::vector<double> center = p.center;
    if (center.empty()) center.assign(n, std::numbers::pi);
    const bool bumps = p.amplitude != 0.0;
    auto bump = [&](double scale) {
        return Bump{cplx(scale * p.amplitude), center, p.width, MultiIndex::zero(n)};
    };
    auto with_bump = [&](cplx constant, double scale) {
        if (!bumps) return CoefficientFn(constant);
        return CoefficientFn(constant, {bump(scale)});
    };

    const MultiIndex zero = MultiIndex::zero(n);
    const MultiIndex d1 = MultiIndex::unit(n, 0);
    if (c != 0.0 || bumps) {
        e[0][0].push_back({zero, with_bump(-c, -1.0)});
        e[1][1].push_back({zero, with_bump(-c, -1.0)});
    }
    if (bumps) {
        e[0][0].push_back({d1, with_bump(0.0, 0.25)});
        e[0][0].push_back({idx({{0, 3}}), with_bump(0.0, 0.05)});
        e[1][1].push_back({d1, with_bump(0.0, 0.25)});
        e[0][1].push_back({zero, with_bump(0.0, 0.5)});
        e[0][1].push_back({d1, with_bump(0.0, 0.1)});
        e[1][0].push_back({zero, with_bump(0.0, 0.5)});
    }
    return DNSystem(n, orders, std::move(e));
}

} // namespace dn
