#include "shapelab/eigensolve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

namespace shapelab::eigensolve {

namespace {

using Matrix = Eigen::MatrixXd;

// Portable uniform doubles in [-0.5, 0.5) from a fixed-seed engine.
Matrix deterministic_block(int n, int b, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Matrix x(n, b);
    for (int j = 0; j < b; ++j)
        for (int i = 0; i < n; ++i) x(i, j) = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
    return x;
}

void fix_sign(Vector& u) {
    Eigen::Index idx = 0;
    u.cwiseAbs().maxCoeff(&idx);
    if (u[idx] < 0.0) u = -u;
}

}  // namespace

std::vector<EigenPair> smallest_nonzero_eigenpairs(const SparseSymMatrix& K, const SparseSymMatrix& M, int count,
                                                   const SolverOptions& opts) {
    const int n = K.size();
    if (M.size() != n) throw Error(ErrorCode::InvalidArgument, "K and M differ in size");
    if (count < 1 || count > n - 1)
        throw Error(ErrorCode::InvalidArgument, "requested eigenpair count out of range");
    if (!(opts.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");

    {
        Eigen::SimplicialLLT<assembly::SparseMatrix> mass_chol(M.matrix);
        if (mass_chol.info() != Eigen::Success)
            throw Error(ErrorCode::IndefiniteMass, "mass matrix failed Cholesky factorization");
    }

    const double sigma = opts.shift > 0.0 ? opts.shift
                                          : 1e-3 * K.matrix.diagonal().sum() / M.matrix.diagonal().sum();
    const assembly::SparseMatrix shifted = K.matrix + sigma * M.matrix;
    Eigen::SimplicialLDLT<assembly::SparseMatrix> solver(shifted);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorCode::Internal, "factorization of K + sigma M failed");

    const Vector ones = Vector::Ones(n);
    const Vector m_ones = M.matrix * ones;
    const double ones_norm2 = ones.dot(m_ones);
    auto deflate = [&](auto&& x) { x -= ones * (m_ones.dot(x) / ones_norm2); };

    const int block = std::min(opts.block_size > 0 ? opts.block_size : std::clamp(2 * count, 4, 10), n - 1);
    const int full = n - 1;  // dimension of the complement of constants
    int max_dim = opts.max_subspace > 0 ? opts.max_subspace : std::max(40, 4 * (count + block));
    max_dim = std::min(std::max(max_dim, count + 2 * block), full);
    const int max_restarts = opts.max_restarts > 0 ? opts.max_restarts : 50 * count;

    Matrix Q(n, max_dim), MQ(n, max_dim), W(n, max_dim);
    Matrix H = Matrix::Zero(max_dim, max_dim);
    int dim = 0;
    int restarts = 0;
    std::uint64_t seed = opts.seed;
    Matrix next = deterministic_block(n, block, seed);

    for (;;) {
        // Orthonormalize the candidate block against the basis and append.
        const int first_new = dim;
        for (int j = 0; j < next.cols() && dim < max_dim; ++j) {
            Vector x = next.col(j);
            deflate(x);
            const double start_norm = std::sqrt(std::max(x.dot(M.matrix * x), 0.0));
            if (!(start_norm > 0.0)) continue;
            for (int pass = 0; pass < 2; ++pass) {
                if (dim > 0) x -= Q.leftCols(dim) * (MQ.leftCols(dim).transpose() * x);
                deflate(x);
            }
            const Vector mx = M.matrix * x;
            const double nrm = std::sqrt(std::max(x.dot(mx), 0.0));
            if (!(nrm > 1e-10 * start_norm)) continue;
            Q.col(dim) = x / nrm;
            MQ.col(dim) = mx / nrm;
            ++dim;
        }
        const int added = dim - first_new;

        if (added == 0 && dim < full) {
            // Krylov space became invariant; continue from a fresh block.
            if (++restarts > max_restarts)
                throw Error(ErrorCode::NoConvergence, "Krylov breakdown after " + std::to_string(restarts) + " restarts");
            next = deterministic_block(n, block, ++seed);
            continue;
        }

        for (int j = first_new; j < dim; ++j) {
            // One step of iterative refinement: smooth modes need the solve
            // accurate well below the factorization's rounding floor.
            const Vector rhs = MQ.col(j);
            Vector w = solver.solve(rhs);
            w += solver.solve(rhs - shifted * w);
            deflate(w);
            W.col(j) = w;
        }
        for (int j = first_new; j < dim; ++j) {
            for (int i = 0; i <= j; ++i) {
                const double hij = MQ.col(i).dot(W.col(j));
                H(i, j) = hij;
                H(j, i) = hij;
            }
        }

        const bool exhausted = dim >= full;
        if (dim >= std::min(count + block, full)) {
            Eigen::SelfAdjointEigenSolver<Matrix> ritz(H.topLeftCorner(dim, dim));
            const Matrix& Y = ritz.eigenvectors();
            std::vector<EigenPair> pairs;
            bool converged = true;
            int first_unconverged = count;
            for (int k = 0; k < count; ++k) {
                // W y = op(Q y): the image under the operator carries the same
                // Ritz direction with Gram-Schmidt rounding noise damped.
                Vector u = W.leftCols(dim) * Y.col(dim - 1 - k);
                deflate(u);
                const Vector ku = K.matrix * u;
                const Vector mu_vec = M.matrix * u;
                const double unorm2 = u.dot(mu_vec);
                const double mu = u.dot(ku) / unorm2;
                const double kn = ku.norm();
                const double res = kn > 0.0 ? (ku - mu * mu_vec).norm() / kn : 0.0;
                if (!(res <= opts.tol)) {
                    converged = false;
                    first_unconverged = std::min(first_unconverged, k);
                }
                u /= std::sqrt(unorm2);
                fix_sign(u);
                pairs.push_back({mu, std::move(u), res});
            }
            if (converged || exhausted) {
                if (!converged)
                    throw Error(ErrorCode::NoConvergence, "full subspace reached without meeting tolerance");
                std::stable_sort(pairs.begin(), pairs.end(),
                                 [](const EigenPair& a, const EigenPair& b) { return a.mu < b.mu; });
                return pairs;
            }

            if (dim + block > max_dim) {
                if (++restarts > max_restarts)
                    throw Error(ErrorCode::NoConvergence,
                                "no convergence after " + std::to_string(restarts - 1) + " restarts");
                // Keep the leading Ritz vectors; images under the operator are
                // linear in the basis, so no new solves are needed.
                const int keep = std::min(dim, count + block);
                const Matrix Yk = Y.rightCols(keep).rowwise().reverse();
                const Matrix q_new = Q.leftCols(dim) * Yk;
                const Matrix mq_new = MQ.leftCols(dim) * Yk;
                const Matrix w_new = W.leftCols(dim) * Yk;
                Q.leftCols(keep) = q_new;
                MQ.leftCols(keep) = mq_new;
                W.leftCols(keep) = w_new;
                H.setZero();
                for (int i = 0; i < keep; ++i)
                    for (int j = 0; j <= i; ++j) {
                        const double hij = MQ.col(j).dot(W.col(i));
                        H(i, j) = hij;
                        H(j, i) = hij;
                    }
                dim = keep;
                // Expand from the unconverged end of the wanted set.
                const int from = std::min(first_unconverged, keep - 1);
                next = W.middleCols(from, std::min(block, keep - from));
                continue;
            }
        }
        if (exhausted) throw Error(ErrorCode::NoConvergence, "subspace exhausted");
        next = W.middleCols(first_new, added);
    }
}

std::vector<Vector> m_orthonormalize(std::vector<Vector> vs, const SparseSymMatrix& M) {
    if (vs.empty()) return vs;
    const Eigen::Index n = vs.front().size();
    const Vector ones = Vector::Ones(n);
    const Vector m_ones = M.matrix * ones;
    const double ones_norm2 = ones.dot(m_ones);
    std::vector<Vector> out;
    for (auto& v : vs) {
        for (int pass = 0; pass < 2; ++pass) {
            v -= ones * (m_ones.dot(v) / ones_norm2);
            for (const auto& q : out) v -= q * q.dot(M.matrix * v);
        }
        const double nrm = std::sqrt(v.dot(M.matrix * v));
        if (!(nrm > 0.0)) throw Error(ErrorCode::Internal, "linearly dependent cluster basis");
        out.push_back(v / nrm);
    }
    return out;
}

EigenCluster detect_cluster(const std::vector<EigenPair>& eigs, const SparseSymMatrix& M, double rtol,
                            double solver_tol) {
    if (eigs.empty()) throw Error(ErrorCode::InvalidArgument, "no eigenpairs supplied");
    if (!(rtol > 0.0)) throw Error(ErrorCode::InvalidArgument, "cluster rtol must be positive");
    const double mu2 = eigs.front().mu;
    if (!(mu2 > 0.0)) throw Error(ErrorCode::Internal, "non-positive leading eigenvalue");
    std::size_t m = 0;
    while (m < eigs.size() && eigs[m].mu <= mu2 * (1.0 + rtol)) ++m;
    if (m == eigs.size())
        throw Error(ErrorCode::AmbiguousCluster,
                    "all " + std::to_string(m) + " computed eigenvalues fall in the cluster; request more");
    const double next = eigs[m].mu;
    const double gap = next - eigs[m - 1].mu;
    if (gap / next < 2.0 * solver_tol)
        throw Error(ErrorCode::AmbiguousCluster, "gap to next eigenvalue below solver resolution");

    EigenCluster c;
    c.mu2 = mu2;
    c.multiplicity = static_cast<int>(m);
    c.cluster_gap = gap;
    c.next_eigenvalue = next;
    std::vector<Vector> vs;
    for (std::size_t i = 0; i < m; ++i) {
        vs.push_back(eigs[i].u);
        c.eigenvalues.push_back(eigs[i].mu);
        c.residual_norms.push_back(eigs[i].residual);
    }
    c.basis = m_orthonormalize(std::move(vs), M);
    return c;
}

EigenCluster compute_cluster(const geometry::TriMesh& mesh, const ClusterOptions& opts) {
    const auto K = assembly::assemble_stiffness(mesh);
    const auto M = assembly::assemble_mass(mesh);
    int count = std::max(2, opts.count);
    for (;;) {
        count = std::min(count, mesh.num_vertices() - 1);
        const auto eigs = smallest_nonzero_eigenpairs(K, M, count, opts.solver);
        std::size_t m = 0;
        while (m < eigs.size() && eigs[m].mu <= eigs.front().mu * (1.0 + opts.cluster_rtol)) ++m;
        if (m == eigs.size() && count < 16 && count < mesh.num_vertices() - 1) {
            count *= 2;
            continue;
        }
        return detect_cluster(eigs, M, opts.cluster_rtol, opts.solver.tol);
    }
}

}  // namespace shapelab::eigensolve
