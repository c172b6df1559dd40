#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace sts {

using cd = std::complex<double>;
using SparseMatrix = Eigen::SparseMatrix<cd>;
using DenseMatrix = Eigen::MatrixXcd;
using DenseVector = Eigen::VectorXcd;

inline constexpr double two_pi = 6.283185307179586476925286766559;

/// Failure categories; the CLI maps them onto exit codes.
enum class ErrorKind {
    degree,     ///< form degree out of range for the requested operator
    domain,     ///< invalid argument or precondition violation
    numerical,  ///< non-finite values, eigensolver failure, ill-conditioning
    config,     ///< configuration / schema violation
    check       ///< a verification check failed
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what)
{
    if (!condition) fail(kind, what);
}

inline int binomial(int n, int k)
{
    if (k < 0 || k > n) return 0;
    int r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace sts
