#pragma once

#include <Eigen/Dense>

#include "mpedge/errors.hpp"

namespace mpedge {

// Eigenvalue/eigenvector view of a symmetric positive semidefinite matrix.
// Eigenvalues are stored in non-increasing order; eigenvectors(:, i) pairs
// with eigenvalues(i) and the columns form an orthonormal basis.
struct SymmetricSpectrum {
    int dim = 0;
    Eigen::VectorXd eigenvalues;   // lambda_1 >= ... >= lambda_n
    Eigen::MatrixXd eigenvectors;  // column i <-> eigenvalues(i)

    double lambda_max() const { return eigenvalues(0); }
    double lambda_min() const { return eigenvalues(dim - 1); }
    double trace() const { return eigenvalues.sum(); }

    // Sum lambda_i x_i x_i^T.
    Eigen::MatrixXd reconstruct() const;

    // Max absolute deviation of the eigenvector Gram matrix from identity.
    double gram_deviation() const;
};

// A vector together with its coordinates in the eigenbasis of some
// SymmetricSpectrum. projections(i) = <x, x_i> in the spectrum's order.
struct RankOneVector {
    Eigen::VectorXd entries;
    Eigen::VectorXd projections;

    double squared_norm() const { return entries.squaredNorm(); }
};

RankOneVector project_onto(const SymmetricSpectrum& spec, const Eigen::VectorXd& x);

enum class UpdateMode { full, incremental };

// Decompose a dense symmetric matrix. The input must be finite and symmetric
// to 1e-10 (relative to its largest entry).
SymmetricSpectrum eigendecompose(const Eigen::MatrixXd& matrix);

// Spectrum of A + x x^T.
//
// full: rebuild the matrix and re-decompose (reference path, O(n^3) with the
//   dense solver's constant).
// incremental: deflate, solve the rank-one secular equation on the projected
//   spectrum, and rotate the basis (O(n^2) roots plus one matrix product).
//   Agrees with `full` to 1e-8 on eigenvalues and preserves orthonormality.
SymmetricSpectrum rank_one_update(const SymmetricSpectrum& spec, const RankOneVector& x,
                                  UpdateMode mode);

// Lower Stieltjes potential sum_i 1/(lambda_i - u), positive and strictly
// increasing for u < lambda_min. Throws barrier_violation otherwise.
double stieltjes_lower(const SymmetricSpectrum& spec, double u);

// Upper Stieltjes potential sum_i 1/(u - lambda_i), positive and strictly
// decreasing for u > lambda_max. Throws barrier_violation otherwise.
double stieltjes_upper(const SymmetricSpectrum& spec, double u);

// tr((A - u + x x^T)^{-1}) evaluated through the rank-one trace identity
//   tr((A-u)^{-1}) - x^T (A-u)^{-2} x / (1 + x^T (A-u)^{-1} x).
// Requires u away from the spectrum and a denominator bounded away from 0
// (throws numeric_precondition_error within 1e-12 of zero).
double sherman_morrison_trace(const SymmetricSpectrum& spec, const RankOneVector& x, double u);

namespace detail {
// Eigenvalues of diag(d) + z z^T for ascending d; exposed for tests.
// Returns ascending eigenvalues only.
Eigen::VectorXd secular_eigenvalues(const Eigen::VectorXd& d_ascending,
                                    const Eigen::VectorXd& z);
}  // namespace detail

}  // namespace mpedge
