#pragma once

#include <cstdint>
#include <vector>

#include "shapelab/assembly.hpp"

namespace shapelab::eigensolve {

using assembly::SparseSymMatrix;
using assembly::Vector;

struct SolverOptions {
    double tol = 1e-9;           // relative residual ||K u - mu M u|| / ||K u||
    double shift = 0.0;          // <= 0: 1e-3 * trace(K) / trace(M)
    int max_restarts = 0;        // <= 0: 50 * count
    int block_size = 0;          // <= 0: clamp(2 count, 4, 10)
    int max_subspace = 0;        // <= 0: automatic
    std::uint64_t seed = 0x5eed5eedULL;  // start block
};

struct EigenPair {
    double mu = 0.0;
    Vector u;               // M-normalized, M-orthogonal to constants
    double residual = 0.0;  // relative residual
};

/// The `count` smallest eigenpairs of K u = mu M u on the M-orthogonal
/// complement of the constants, ascending.
///
/// Shift-invert block Lanczos: the operator (K + sigma M)^{-1} M is applied
/// through a sparse LDL^T factorization; Krylov blocks are kept M-orthonormal
/// by two passes of classical Gram-Schmidt and explicitly projected off the
/// constant vector (which would otherwise dominate at 1/sigma). A block start
/// captures degenerate eigenvalues up to the block size. When the subspace
/// fills up, the search restarts from the current best Ritz vectors.
///
/// Throws NoConvergence or IndefiniteMass.
std::vector<EigenPair> smallest_nonzero_eigenpairs(const SparseSymMatrix& K, const SparseSymMatrix& M,
                                                   int count, const SolverOptions& opts = {});

struct EigenCluster {
    double mu2 = 0.0;
    int multiplicity = 0;
    std::vector<Vector> basis;            // M-orthonormal
    std::vector<double> eigenvalues;      // discrete eigenvalues in the cluster
    std::vector<double> residual_norms;
    double cluster_gap = 0.0;             // next eigenvalue minus largest cluster member
    double next_eigenvalue = 0.0;
};

/// Groups the leading eigenvalues with mu_j <= mu_1 (1 + rtol). Throws
/// AmbiguousCluster when the group swallows every supplied pair or when the
/// relative gap to the next eigenvalue is below 2 * solver_tol.
EigenCluster detect_cluster(const std::vector<EigenPair>& eigs, const SparseSymMatrix& M, double rtol,
                            double solver_tol);

struct ClusterOptions {
    SolverOptions solver;
    double cluster_rtol = 1e-3;
    int count = 4;  // eigenpairs requested; grown automatically if the cluster fills it
};

/// Assemble, solve and detect the mu2 cluster on a mesh.
EigenCluster compute_cluster(const geometry::TriMesh& mesh, const ClusterOptions& opts = {});

/// Re-orthonormalize vectors in the M inner product after projecting out
/// constants.
std::vector<Vector> m_orthonormalize(std::vector<Vector> vs, const SparseSymMatrix& M);

}  // namespace shapelab::eigensolve
