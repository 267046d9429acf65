#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

// Dense complex operator algebra on small truncated Hilbert spaces:
// ladder and Pauli operators, Kronecker products, and Lindblad
// superoperator assembly in the column-stacking convention.

namespace sapa {

template <typename Scalar = double>
using ComplexMatrix =
    Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar = double>
using ComplexVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

using CMatrix = ComplexMatrix<double>;
using CVector = ComplexVector<double>;

// Dense algebra stays tractable well past the 2-qubit, Fock<=30 oracle
// sizes; anything bigger is rejected rather than silently attempted.
inline constexpr Eigen::Index kMaxOperatorDim = 4096;

enum class Pauli { X, Y, Z, Plus, Minus };

/// Truncated annihilation operator on the (n_max+1)-dimensional Fock space.
template <typename Scalar = double>
ComplexMatrix<Scalar> fock_annihilation(int n_max)
{
    if (n_max < 1) {
        throw std::invalid_argument(
            "fock_annihilation: n_max must be >= 1 (no dynamics in a "
            "zero-photon truncation)");
    }
    const Eigen::Index dim = n_max + 1;
    ComplexMatrix<Scalar> a = ComplexMatrix<Scalar>::Zero(dim, dim);
    for (int k = 1; k <= n_max; ++k) {
        a(k - 1, k) = std::sqrt(Scalar(k));
    }
    return a;
}

/// Pauli operator in the ordered charge basis {|R>, |L>}, sigma_z|R> = +|R>.
template <typename Scalar = double>
ComplexMatrix<Scalar> pauli(Pauli kind)
{
    using C = std::complex<Scalar>;
    ComplexMatrix<Scalar> m = ComplexMatrix<Scalar>::Zero(2, 2);
    switch (kind) {
    case Pauli::X:
        m(0, 1) = C(1, 0);
        m(1, 0) = C(1, 0);
        break;
    case Pauli::Y:
        m(0, 1) = C(0, -1);
        m(1, 0) = C(0, 1);
        break;
    case Pauli::Z:
        m(0, 0) = C(1, 0);
        m(1, 1) = C(-1, 0);
        break;
    case Pauli::Plus:
        m(0, 1) = C(1, 0);
        break;
    case Pauli::Minus:
        m(1, 0) = C(1, 0);
        break;
    }
    return m;
}

template <typename Scalar>
ComplexMatrix<Scalar> identity(Eigen::Index dim)
{
    return ComplexMatrix<Scalar>::Identity(dim, dim);
}

/// Kronecker product; the result dimension is guarded against runaway sizes.
template <typename Scalar>
ComplexMatrix<Scalar> tensor(const ComplexMatrix<Scalar>& a,
                             const ComplexMatrix<Scalar>& b,
                             Eigen::Index max_dim = kMaxOperatorDim)
{
    const Eigen::Index rows = a.rows() * b.rows();
    const Eigen::Index cols = a.cols() * b.cols();
    if (rows > max_dim || cols > max_dim) {
        throw std::invalid_argument("tensor: product dimension " +
                                    std::to_string(rows) +
                                    " exceeds configured maximum " +
                                    std::to_string(max_dim));
    }
    ComplexMatrix<Scalar> out(rows, cols);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
                a(i, j) * b;
        }
    }
    return out;
}

template <typename Scalar>
bool is_hermitian(const ComplexMatrix<Scalar>& m, Scalar rel_tol = Scalar(1e-12))
{
    if (m.rows() != m.cols()) {
        return false;
    }
    const Scalar scale = std::max(m.template lpNorm<Eigen::Infinity>(), Scalar(1));
    return (m - m.adjoint()).template lpNorm<Eigen::Infinity>() <= rel_tol * scale;
}

/// Column-stacking vectorization, vec(rho) with rho column-major.
template <typename Scalar>
ComplexVector<Scalar> vectorize(const ComplexMatrix<Scalar>& m)
{
    return Eigen::Map<const ComplexVector<Scalar>>(m.data(), m.size());
}

template <typename Scalar>
ComplexMatrix<Scalar> unvectorize(const ComplexVector<Scalar>& v, Eigen::Index dim)
{
    if (v.size() != dim * dim) {
        throw std::invalid_argument("unvectorize: size mismatch");
    }
    return Eigen::Map<const ComplexMatrix<Scalar>>(v.data(), dim, dim);
}

/// Lindblad generator acting on column-stacked density matrices.
///
/// H is given in angular-frequency units (H/hbar); rates in rad/s. The
/// generated superoperator satisfies
///   d vec(rho)/dt = L vec(rho),
///   L(rho) = -i[H, rho] + sum_k rate_k (C rho C^dag - {C^dag C, rho}/2).
template <typename Scalar>
ComplexMatrix<Scalar> lindblad_superoperator(
    const ComplexMatrix<Scalar>& h,
    const std::vector<std::pair<Scalar, ComplexMatrix<Scalar>>>& collapse)
{
    using C = std::complex<Scalar>;
    if (!is_hermitian(h)) {
        throw std::invalid_argument(
            "lindblad_superoperator: Hamiltonian must be Hermitian");
    }
    const Eigen::Index d = h.rows();
    const ComplexMatrix<Scalar> id = identity<Scalar>(d);
    const C mi(0, -1);

    ComplexMatrix<Scalar> lsup =
        mi * (tensor(id, h, d * d) -
              tensor(ComplexMatrix<Scalar>(h.transpose()), id, d * d));
    for (const auto& [rate, c] : collapse) {
        if (rate < 0) {
            throw std::invalid_argument(
                "lindblad_superoperator: collapse rates must be >= 0");
        }
        if (c.rows() != d || c.cols() != d) {
            throw std::invalid_argument(
                "lindblad_superoperator: collapse operator dimension mismatch");
        }
        const ComplexMatrix<Scalar> cdc = c.adjoint() * c;
        lsup += rate * (tensor(ComplexMatrix<Scalar>(c.conjugate()), c, d * d) -
                        Scalar(0.5) * tensor(id, cdc, d * d) -
                        Scalar(0.5) *
                            tensor(ComplexMatrix<Scalar>(cdc.transpose()), id,
                                   d * d));
    }
    return lsup;
}

template <typename Scalar>
std::complex<Scalar> expectation(const ComplexMatrix<Scalar>& rho,
                                 const ComplexMatrix<Scalar>& op)
{
    return (op * rho).trace();
}

}  // namespace sapa
