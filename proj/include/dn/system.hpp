#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "dn/coefficient.hpp"
#include "dn/error.hpp"
#include "dn/linalg.hpp"
#include "dn/orders.hpp"

namespace dn {

/// One monomial a(x) D^alpha of an operator entry.
struct Term {
    MultiIndex alpha;
    CoefficientFn coeff;

    friend bool operator==(const Term&, const Term&) = default;
};

using Entry = std::vector<Term>;

/// N x N matrix of differential operators A_jk(x, D) = sum_alpha a^jk_alpha(x) D^alpha,
/// with entry (j, k) of order at most s_j + t_k.
class DNSystem {
public:
    DNSystem(int n, DNOrders orders, std::vector<std::vector<Entry>> entries)
        : n_(n), orders_(std::move(orders)), entries_(std::move(entries)) {
        validate();
    }

    /// All-zero system with the given orders.
    static DNSystem zero(int n, DNOrders orders) {
        const int N = orders.size();
        return DNSystem(n, std::move(orders),
                        std::vector<std::vector<Entry>>(N, std::vector<Entry>(N)));
    }

    int dimension() const noexcept { return n_; }
    int size() const noexcept { return orders_.size(); }
    const DNOrders& orders() const noexcept { return orders_; }
    const Entry& entry(int j, int k) const { return entries_.at(j).at(k); }
    const std::vector<std::vector<Entry>>& entries() const noexcept { return entries_; }

    int order_cap(int j, int k) const { return orders_.s()[j] + orders_.t()[k]; }

    bool has_variable_coefficients() const {
        for (const auto& row : entries_)
            for (const auto& e : row)
                for (const auto& term : e)
                    if (term.coeff.has_bumps()) return true;
        return false;
    }

    bool principal_has_variable_coefficients() const {
        for (int j = 0; j < size(); ++j)
            for (int k = 0; k < size(); ++k)
                for (const auto& term : entries_[j][k])
                    if (term.alpha.order() == order_cap(j, k) && term.coeff.has_bumps())
                        return true;
        return false;
    }

    /// Every bump appearing anywhere in the system.
    std::vector<Bump> all_bumps(bool principal_only = false) const {
        std::vector<Bump> out;
        for (int j = 0; j < size(); ++j)
            for (int k = 0; k < size(); ++k)
                for (const auto& term : entries_[j][k]) {
                    if (principal_only && term.alpha.order() != order_cap(j, k)) continue;
                    out.insert(out.end(), term.coeff.bumps().begin(), term.coeff.bumps().end());
                }
        return out;
    }

    friend bool operator==(const DNSystem&, const DNSystem&) = default;

private:
    void validate() const {
        if (n_ < 1) throw ValidationError("dimension must be at least 1", "/n");
        const int N = orders_.size();
        if (static_cast<int>(entries_.size()) != N)
            throw ValidationError("entries must have N rows", "/entries");
        for (int j = 0; j < N; ++j) {
            if (static_cast<int>(entries_[j].size()) != N)
                throw ValidationError("entries must have N columns",
                                      "/entries/" + std::to_string(j));
            for (int k = 0; k < N; ++k) {
                const int cap = order_cap(j, k);
                const auto& e = entries_[j][k];
                for (std::size_t q = 0; q < e.size(); ++q) {
                    const std::string p = "/entries/" + std::to_string(j) + "/" +
                                          std::to_string(k) + "/" + std::to_string(q);
                    if (e[q].alpha.dimension() != n_)
                        throw ValidationError("alpha has wrong length", p + "/alpha");
                    if (cap < 0 || e[q].alpha.order() > cap)
                        throw ValidationError("term order " + std::to_string(e[q].alpha.order()) +
                                                  " exceeds s_j + t_k = " + std::to_string(cap),
                                              p + "/alpha");
                    e[q].coeff.validate(n_, p + "/coeff");
                }
            }
        }
    }

    int n_;
    DNOrders orders_;
    std::vector<std::vector<Entry>> entries_;
};

/// Closed sector {0} u {lambda : arg lambda in [theta_min, theta_max]}, angles in [0, 2pi].
struct Sector {
    double theta_min = 0.0;
    double theta_max = 2.0 * std::numbers::pi;

    /// epsilon <= arg lambda <= 2pi - epsilon: the sector avoiding the positive real axis.
    static Sector avoiding_positive_axis(double epsilon) {
        return {epsilon, 2.0 * std::numbers::pi - epsilon};
    }

    void validate() const {
        constexpr double two_pi = 2.0 * std::numbers::pi;
        if (!(theta_min >= 0.0 && theta_min <= theta_max && theta_max <= two_pi + 1e-15))
            throw ValidationError("sector angles must satisfy 0 <= theta_min <= theta_max <= 2pi",
                                  "/sector");
    }

    bool contains(std::complex<double> lambda, double tol = 1e-14) const {
        if (lambda == std::complex<double>{0.0}) return true;
        constexpr double two_pi = 2.0 * std::numbers::pi;
        double a = std::arg(lambda);
        if (a < 0) a += two_pi;
        auto in = [&](double v) { return v >= theta_min - tol && v <= theta_max + tol; };
        return in(a) || in(a + two_pi) || in(a - two_pi);
    }

    friend bool operator==(const Sector&, const Sector&) = default;
};

/// Coefficients of a system evaluated at one point x, for repeated symbol evaluation.
class FrozenSymbol {
public:
    FrozenSymbol(const DNSystem& sys, std::span<const double> x)
        : orders_(sys.orders()), N_(sys.size()), n_(sys.dimension()) {
        terms_.resize(static_cast<std::size_t>(N_) * N_);
        for (int j = 0; j < N_; ++j)
            for (int k = 0; k < N_; ++k)
                for (const auto& term : sys.entry(j, k)) {
                    const cplx v = term.coeff(x);
                    terms_[j * N_ + k].push_back(
                        {term.alpha, v, term.alpha.order() == sys.order_cap(j, k)});
                }
    }

    /// A(x, xi) - lambda I.
    CMatrix full(std::span<const double> xi, cplx lambda) const {
        CMatrix a = evaluate(xi, N_, false);
        for (int j = 0; j < N_; ++j) a(j, j) -= lambda;
        return a;
    }

    /// Principal symbol: only the terms of exact order s_j + t_k.
    CMatrix principal(std::span<const double> xi) const { return evaluate(xi, N_, true); }

    /// Leading k_r x k_r block of the principal symbol.
    CMatrix nested(std::span<const double> xi, int r) const {
        return evaluate(xi, orders_.k(r), true);
    }

    const DNOrders& orders() const noexcept { return orders_; }
    int size() const noexcept { return N_; }
    int dimension() const noexcept { return n_; }

private:
    struct Frozen {
        MultiIndex alpha;
        cplx value;
        bool principal;
    };

    CMatrix evaluate(std::span<const double> xi, int rows, bool principal_only) const {
        CMatrix a = CMatrix::Zero(rows, rows);
        for (int j = 0; j < rows; ++j)
            for (int k = 0; k < rows; ++k) {
                cplx v{0.0};
                for (const auto& f : terms_[j * N_ + k])
                    if (!principal_only || f.principal) v += f.value * f.alpha.monomial<double>(xi);
                a(j, k) = v;
            }
        return a;
    }

    DNOrders orders_;
    int N_;
    int n_;
    std::vector<std::vector<Frozen>> terms_;
};

/// A(x, xi) - lambda I_N.
inline CMatrix eval_symbol(const DNSystem& sys, std::span<const double> x,
                           std::span<const double> xi, cplx lambda) {
    return FrozenSymbol(sys, x).full(xi, lambda);
}

inline CMatrix principal_symbol(const DNSystem& sys, std::span<const double> x,
                                std::span<const double> xi) {
    return FrozenSymbol(sys, x).principal(xi);
}

/// Leading k_r x k_r block of the principal symbol, 1 <= r <= d.
inline CMatrix nested_principal(const DNSystem& sys, std::span<const double> x,
                                std::span<const double> xi, int r) {
    if (r < 1 || r > sys.orders().levels())
        throw ValidationError("level index r out of range");
    return FrozenSymbol(sys, x).nested(xi, r);
}

/// k_r x k_r diagonal 0/1 matrix selecting the components of level r.
inline CMatrix lambda_mask(const DNOrders& orders, int r) {
    if (r < 1 || r > orders.levels()) throw ValidationError("level index r out of range");
    const int kr = orders.k(r);
    CMatrix m = CMatrix::Zero(kr, kr);
    for (int j = orders.k(r - 1); j < kr; ++j) m(j, j) = 1.0;
    return m;
}

namespace detail {

inline void add_term(Entry& e, const MultiIndex& alpha, const CoefficientFn& c) {
    if (c.is_zero()) return;
    for (auto& t : e)
        if (t.alpha == alpha) {
            t.coeff += c;
            return;
        }
    e.push_back({alpha, c});
}

} // namespace detail

/// Formal adjoint: entry (j, k) is v -> sum_alpha D^alpha(conj(a^kj_alpha) v), expanded
/// by the Leibniz rule. Defined for s = 0, where the adjoint keeps orders s' = 0, t' = t.
inline DNSystem formal_adjoint(const DNSystem& sys) {
    const auto& o = sys.orders();
    for (int j = 0; j < o.size(); ++j)
        if (o.s()[j] != 0)
            throw ValidationError("formal adjoint is implemented only for s = 0",
                                  "/s/" + std::to_string(j));
    const int N = sys.size();
    std::vector<std::vector<Entry>> out(N, std::vector<Entry>(N));
    for (int j = 0; j < N; ++j)
        for (int k = 0; k < N; ++k)
            for (const auto& term : sys.entry(k, j)) {
                const CoefficientFn ca = term.coeff.conj();
                for (const auto& beta : sub_indices(term.alpha)) {
                    const double c = binomial(term.alpha, beta);
                    detail::add_term(out[j][k], beta,
                                     ca.derivative(term.alpha - beta).scaled(c));
                }
            }
    return DNSystem(sys.dimension(), o, std::move(out));
}

/// Constant-coefficient system holding only the principal terms evaluated at x0.
inline DNSystem freeze_principal(const DNSystem& sys, std::span<const double> x0) {
    const int N = sys.size();
    std::vector<std::vector<Entry>> out(N, std::vector<Entry>(N));
    for (int j = 0; j < N; ++j)
        for (int k = 0; k < N; ++k)
            for (const auto& term : sys.entry(j, k))
                if (term.alpha.order() == sys.order_cap(j, k))
                    detail::add_term(out[j][k], term.alpha, CoefficientFn(term.coeff(x0)));
    return DNSystem(sys.dimension(), sys.orders(), std::move(out));
}

} // namespace dn
