#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dn {

/// Rejected input data. `path()` is a JSON-pointer-style location ("/t/0")
/// when the offending value can be named, empty otherwise.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what, std::string path = {})
        : std::invalid_argument(path.empty() ? what : path + ": " + what),
          path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// A numerical stage could not produce a result (degenerate sampling,
/// eigensolver failure, size caps).
class ComputationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Per-frequency matrix of a Fourier-multiplier solve is numerically singular.
class SingularFrequencyError : public ComputationError {
public:
    SingularFrequencyError(std::vector<double> xi, std::complex<double> eigenvalue,
                           double condition)
        : ComputationError(describe(xi, eigenvalue, condition)),
          xi_(std::move(xi)), eigenvalue_(eigenvalue), condition_(condition) {}

    const std::vector<double>& xi() const noexcept { return xi_; }
    /// Eigenvalue of the frequency matrix closest to the spectral parameter.
    std::complex<double> eigenvalue() const noexcept { return eigenvalue_; }
    double condition() const noexcept { return condition_; }

private:
    static std::string describe(const std::vector<double>& xi, std::complex<double> ev,
                                double cond) {
        std::string s = "singular frequency matrix at xi=(";
        for (std::size_t i = 0; i < xi.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(xi[i]);
        }
        s += "), nearest symbol eigenvalue " + std::to_string(ev.real()) + "+" +
             std::to_string(ev.imag()) + "i, condition " + std::to_string(cond);
        return s;
    }

    std::vector<double> xi_;
    std::complex<double> eigenvalue_;
    double condition_;
};

} // namespace dn
