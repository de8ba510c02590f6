#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dn/error.hpp"

namespace dn {

/// Exponent vector alpha of a monomial xi^alpha (or derivative D^alpha).
class MultiIndex {
public:
    MultiIndex() = default;
    explicit MultiIndex(std::vector<int> entries) : entries_(std::move(entries)) {
        for (std::size_t i = 0; i < entries_.size(); ++i)
            if (entries_[i] < 0)
                throw ValidationError("multi-index entries must be nonnegative",
                                      "/" + std::to_string(i));
    }
    static MultiIndex zero(int n) { return MultiIndex(std::vector<int>(n, 0)); }
    static MultiIndex unit(int n, int axis) {
        std::vector<int> e(n, 0);
        e[axis] = 1;
        return MultiIndex(std::move(e));
    }

    int dimension() const noexcept { return static_cast<int>(entries_.size()); }
    int order() const noexcept { return std::accumulate(entries_.begin(), entries_.end(), 0); }
    int operator[](std::size_t i) const { return entries_[i]; }
    const std::vector<int>& entries() const noexcept { return entries_; }

    MultiIndex operator+(const MultiIndex& o) const {
        std::vector<int> e(entries_);
        for (std::size_t i = 0; i < e.size(); ++i) e[i] += o.entries_[i];
        return MultiIndex(std::move(e));
    }
    MultiIndex operator-(const MultiIndex& o) const {
        std::vector<int> e(entries_);
        for (std::size_t i = 0; i < e.size(); ++i) e[i] -= o.entries_[i];
        return MultiIndex(std::move(e));
    }
    /// Componentwise beta <= alpha.
    bool dominated_by(const MultiIndex& o) const {
        for (std::size_t i = 0; i < entries_.size(); ++i)
            if (entries_[i] > o.entries_[i]) return false;
        return true;
    }

    /// xi^alpha for a real or complex point.
    template <class T>
    T monomial(std::span<const T> xi) const {
        T v{1};
        for (std::size_t i = 0; i < entries_.size(); ++i)
            for (int p = 0; p < entries_[i]; ++p) v *= xi[i];
        return v;
    }
    double monomial(const std::vector<double>& xi) const {
        return monomial<double>(std::span<const double>(xi));
    }

    friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
    friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;

private:
    std::vector<int> entries_;
};

/// prod_i binom(alpha_i, beta_i).
inline double binomial(const MultiIndex& alpha, const MultiIndex& beta) {
    double c = 1.0;
    for (int i = 0; i < alpha.dimension(); ++i) {
        const int a = alpha[i], b = beta[i];
        double ci = 1.0;
        for (int q = 1; q <= b; ++q) ci = ci * (a - b + q) / q;
        c *= ci;
    }
    return c;
}

/// Every multi-index beta with beta <= alpha, in lexicographic order.
inline std::vector<MultiIndex> sub_indices(const MultiIndex& alpha) {
    std::vector<MultiIndex> out;
    std::vector<int> cur(alpha.dimension(), 0);
    while (true) {
        out.emplace_back(cur);
        int i = alpha.dimension() - 1;
        while (i >= 0 && cur[i] == alpha[i]) cur[i--] = 0;
        if (i < 0) break;
        ++cur[i];
    }
    return out;
}

/// Every multi-index of length n with order <= max_order.
inline std::vector<MultiIndex> indices_up_to(int n, int max_order) {
    std::vector<MultiIndex> out;
    std::vector<int> cur(n, 0);
    while (true) {
        if (std::accumulate(cur.begin(), cur.end(), 0) <= max_order) out.emplace_back(cur);
        int i = n - 1;
        while (i >= 0 && cur[i] == max_order) cur[i--] = 0;
        if (i < 0) break;
        ++cur[i];
    }
    return out;
}

/// Douglis-Nirenberg weights of an N x N system. Components are indexed from 0;
/// order groups (levels) are indexed r = 1..d so that N_0 = 0 keeps its meaning.
class DNOrders {
public:
    const std::vector<int>& s() const noexcept { return s_; }
    const std::vector<int>& t() const noexcept { return t_; }
    const std::vector<int>& m() const noexcept { return m_; }
    int size() const noexcept { return static_cast<int>(s_.size()); }
    int levels() const noexcept { return static_cast<int>(group_ends_.size()); }

    /// k_r: number of leading components in levels 1..r.
    int k(int r) const { return r == 0 ? 0 : group_ends_.at(r - 1); }
    /// N_r = sum_{j < k_r} m_j, with N_0 = 0.
    int partial_sum(int r) const { return r == 0 ? 0 : partial_sums_.at(r - 1); }
    /// Common order m_{k_r} of level r.
    int level_order(int r) const { return m_.at(k(r) - 1); }
    /// Level containing component j.
    int level_of(int j) const {
        for (int r = 1; r <= levels(); ++r)
            if (j < k(r)) return r;
        throw ValidationError("component index out of range");
    }
    const std::vector<int>& group_ends() const noexcept { return group_ends_; }
    const std::vector<int>& partial_sums() const noexcept { return partial_sums_; }

    friend DNOrders validate_orders(std::span<const int> s, std::span<const int> t);

    friend bool operator==(const DNOrders&, const DNOrders&) = default;

private:
    std::vector<int> s_, t_, m_, group_ends_, partial_sums_;
};

/// Checks s_1 >= ... >= s_N >= 0, t_1 >= ... >= t_N > 0 and derives m, k_r, N_r.
inline DNOrders validate_orders(std::span<const int> s, std::span<const int> t) {
    if (s.size() != t.size()) throw ValidationError("s and t must have equal length");
    if (s.empty()) throw ValidationError("system size must be at least 1");
    const std::size_t N = s.size();
    for (std::size_t j = 0; j < N; ++j) {
        if (t[j] <= 0)
            throw ValidationError("t_j must be positive (orders require t_j > 0, s_j >= 0)",
                                  "/t/" + std::to_string(j));
        if (s[j] < 0)
            throw ValidationError("s_j must be nonnegative (orders require t_j > 0, s_j >= 0)",
                                  "/s/" + std::to_string(j));
        if (j > 0 && s[j] > s[j - 1])
            throw ValidationError("s must be nonincreasing", "/s/" + std::to_string(j));
        if (j > 0 && t[j] > t[j - 1])
            throw ValidationError("t must be nonincreasing", "/t/" + std::to_string(j));
    }
    DNOrders o;
    o.s_.assign(s.begin(), s.end());
    o.t_.assign(t.begin(), t.end());
    o.m_.resize(N);
    for (std::size_t j = 0; j < N; ++j) o.m_[j] = s[j] + t[j];
    int acc = 0;
    for (std::size_t j = 0; j < N; ++j) {
        acc += o.m_[j];
        if (j + 1 == N || o.m_[j + 1] != o.m_[j]) {
            o.group_ends_.push_back(static_cast<int>(j + 1));
            o.partial_sums_.push_back(acc);
        }
    }
    return o;
}

inline DNOrders validate_orders(const std::vector<int>& s, const std::vector<int>& t) {
    return validate_orders(std::span<const int>(s), std::span<const int>(t));
}

enum class ParityStatus { pass, fail, not_applicable };

struct ParityLevel {
    int r;
    int partial_sum;
    ParityStatus status;
};

struct ParityVerdict {
    bool pass = true;
    std::optional<int> failing_level;
    std::vector<ParityLevel> levels;
};

/// Necessary condition for parameter-ellipticity: N_1 even, and N_r even for
/// r > 1 when n > 2 (not required for r > 1 in dimensions 1 and 2).
inline ParityVerdict parity_check(const DNOrders& orders, int n) {
    ParityVerdict v;
    for (int r = 1; r <= orders.levels(); ++r) {
        const int Nr = orders.partial_sum(r);
        ParityStatus st = ParityStatus::not_applicable;
        if (r == 1 || n > 2) st = (Nr % 2 == 0) ? ParityStatus::pass : ParityStatus::fail;
        if (st == ParityStatus::fail && v.pass) {
            v.pass = false;
            v.failing_level = r;
        }
        v.levels.push_back({r, Nr, st});
    }
    return v;
}

inline const char* to_string(ParityStatus s) {
    switch (s) {
    case ParityStatus::pass: return "pass";
    case ParityStatus::fail: return "fail";
    case ParityStatus::not_applicable: return "not_applicable";
    }
    return "?";
}

inline double norm2(std::span<const double> xi) {
    double s = 0.0;
    for (double v : xi) s += v * v;
    return s;
}

/// (|xi|^2 + |lambda|^{2/m})^{1/2}.
inline double anisotropic_weight(std::span<const double> xi, std::complex<double> lambda,
                                 int m) {
    return std::sqrt(norm2(xi) + std::pow(std::abs(lambda), 2.0 / m));
}

inline double anisotropic_weight(std::span<const double> xi, std::complex<double> lambda,
                                 int j, const DNOrders& orders) {
    return anisotropic_weight(xi, lambda, orders.m().at(j));
}

} // namespace dn
