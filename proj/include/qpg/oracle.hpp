#pragma once

#include "qpg/numeric.hpp"
#include "qpg/potential.hpp"

#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace qpg {

// ---------------------------------------------------------------------------
// Hill equation -y'' + eps V y = lambda y for periodic V.

template <class T>
struct MonodromyResult {
    T lambda = 0;
    T m11 = 1, m12 = 0, m21 = 0, m22 = 1;
    T discriminant = 2;  // trace
    T derivative = 0;    // d(trace)/d(lambda), central difference; 0 unless requested
    // (m11-m22)^2 + 4 m12 m21 = trace^2 - 4 without the cancellation near |trace| = 2.
    T gap_indicator() const { return (m11 - m22) * (m11 - m22) + 4 * m12 * m21; }
};

template <class T>
class HillSolver {
public:
    // Frequencies must all be integer multiples of one generator omega; the period is pi/omega.
    // Step size is chosen for energies up to lambda_max.
    HillSolver(const PotentialSpec& V, T eps, T lambda_max, int order = -1);

    T omega() const { return omega_; }
    T period() const { return period_; }
    int steps() const { return steps_; }
    int order() const { return order_; }
    T eps() const { return eps_; }

    MonodromyResult<T> monodromy(T lambda, bool derivative = false) const;
    // Rotation-number IDS.
    T ids(T lambda) const;
    // Same with a different step count (self-consistency checks).
    HillSolver refined(int factor) const;

private:
    struct Mat2 {
        T a, b, c, d;
    };
    Mat2 step_matrix(int s, T lambda) const;
    std::vector<Mat2> path(T lambda) const;
    void tabulate();

    T eps_ = 0, lambda_max_ = 0, omega_ = 1, period_ = 0, h_ = 0;
    int steps_ = 0, order_ = 0;
    T tau_ = 0;
    std::vector<std::pair<T, Cplx<T>>> modes_;  // (2 k omega, V_k) for k > 0
    std::vector<T> taylor_;                      // steps_ x (order_+1), potential Taylor data
};

template <class T>
struct HillGap {
    T lower = 0, upper = 0;
    T center = 0;     // argmax of the gap indicator
    T indicator = 0;  // its value there
    bool open = false;
    T length() const { return open ? upper - lower : T(0); }
};

// Gap around (m omega)^2.
template <class T>
HillGap<T> hill_gap(const PotentialSpec& V, int m, T eps);
template <class T>
HillGap<T> hill_gap(const HillSolver<T>& solver, const PotentialSpec& V, int m);

template <class T>
T hill_ids(const PotentialSpec& V, T lambda, T eps);

// ---------------------------------------------------------------------------
// Dense Hermitian matrices.

template <class T>
struct HermitianMatrix {
    int n = 0;
    std::vector<Cplx<T>> a;  // row-major
    explicit HermitianMatrix(int n_ = 0) : n(n_), a(static_cast<size_t>(n_) * n_) {}
    Cplx<T>& operator()(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
    const Cplx<T>& operator()(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }
};

template <class T>
struct EigenResult {
    std::vector<T> values;         // ascending
    std::vector<Cplx<T>> vectors;  // column k holds the eigenvector of values[k]; row-major n x n
    int sweeps = 0;
    T off_norm = 0;
    Cplx<T> vec(int row, int k) const { return vectors[static_cast<size_t>(row) * values.size() + k]; }
};

// Cyclic Jacobi. tol bounds the off-diagonal Frobenius norm relative to the full norm;
// a negative tol selects 100 ulp. Throws a numeric error on non-convergence.
template <class T>
EigenResult<T> jacobi_eigen(HermitianMatrix<T> A, bool want_vectors, T tol = T(-1),
                            int max_sweeps = 80);

// Number of eigenvalues <= lambda via LDL^H inertia.
template <class T>
int count_at_most(const HermitianMatrix<T>& A, T lambda);

// ---------------------------------------------------------------------------
// Truncated plane-wave fiber: rows theta in Theta_M, diagonal (xi0+2theta)^2 + eps V_0,
// off-diagonal eps V_{theta-theta'}.

class TruncatedFiber {
public:
    TruncatedFiber(const PotentialSpec& V, int M);

    int M() const { return M_; }
    int size() const { return static_cast<int>(rows_.size()); }
    const std::vector<Freq>& rows() const { return rows_; }
    int center() const { return center_; }
    bool periodic() const { return periodic_; }
    quad omega() const { return omega_; }
    double max_abs_row() const;

    template <class T>
    HermitianMatrix<T> matrix(T xi0, T eps) const;
    // min over boundary rows of (xi0 + 2 theta)^2
    template <class T>
    T boundary_energy(T xi0) const;
    // min over boundary rows of |(xi0 + 2 theta)^2 - lambda|
    template <class T>
    T boundary_detuning(T xi0, T lambda) const;

private:
    int M_ = 0;
    quad tau_ = 0;
    bool periodic_ = false;
    quad omega_ = 1;
    std::vector<Freq> rows_;
    std::vector<quad> twice_q_;  // 2 theta per row
    std::vector<char> boundary_;
    int center_ = 0;
    struct Coupling {
        int i, j;
        Cplx<quad> v;
    };
    std::vector<Coupling> couplings_;
};

struct TruncatedIdsOptions {
    int M = 3;
    int gauss_nodes = 12;     // per adaptive panel (quasi-periodic route)
    double panel_tol = 1e-11;
    double margin = 1.0;      // periodic: lambda + margin < boundary energies; otherwise boundary detuning at the Fermi point
};

template <class T>
struct TruncatedIdsResult {
    T value = 0;
    bool periodic = false;
    long evaluations = 0;
};

// Periodic V: exact band counting over the Bloch cell with bisection for the crossing.
// Otherwise: mean of the central diagonal of the spectral projector over the base point.
template <class T>
TruncatedIdsResult<T> truncated_ids(const PotentialSpec& V, T lambda, T eps,
                                    const TruncatedIdsOptions& opt);

// Second-order perturbation coefficient of the eigenvalue branch through xi^2 at base xi,
// by Richardson extrapolation of (E - xi^2 - eps tau)/eps^2 over small eps.
quad rayleigh_schrodinger_f2(const PotentialSpec& V, quad xi, int M, quad eps0 = quad(1e-4));

// ---------------------------------------------------------------------------
// Persistent cache of oracle values keyed by (potential hash, lambda, eps, M, kind).

class OracleCache {
public:
    OracleCache() = default;
    explicit OracleCache(std::string path);

    bool enabled() const { return !path_.empty(); }
    bool lookup(const std::string& key, std::string& value) const;
    void store(const std::string& key, const std::string& value);
    static std::string key(uint64_t potential_hash, const std::string& kind, const std::string& lambda,
                           const std::string& eps, int M);

private:
    std::string path_;
    mutable std::mutex mu_;
    std::map<std::string, std::string> entries_;
};

}  // namespace qpg
