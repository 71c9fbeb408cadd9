#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "starkmbl/model.hpp"

namespace starkmbl {

// Pairs where either adjacent gap falls below this fraction of the spectral
// span are excluded from the ratio statistics and counted instead of being
// silently zeroed; weak disorder lifts the tilted-lattice degeneracies, so
// drops should stay rare.
inline constexpr double kDegenerateGapRel = 1e-12;

// Eigenpairs per energy-density target.
inline constexpr int kDefaultWindow = 50;

// Residual contract for returned eigenpairs: |H v - lambda v| <= bound * scale,
// where scale is the spectral radius estimate.
inline constexpr double kResidualBound = 1e-8;

struct EigenSystem {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXd vectors;  // column i pairs with values[i]; empty unless requested
};

// The k eigenpairs nearest a target energy density
// eps = (E - E_min) / (E_max - E_min), re-sorted ascending.
struct SpectrumWindow {
    double eps = 0.0;
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;  // empty when the source had no vectors
    double e_min = 0.0;
    double e_max = 0.0;
};

struct GapRatioSample {
    std::vector<double> ratios;  // each in [0, 1]
    std::size_t dropped = 0;     // near-degenerate pairs excluded
};

// Dense eigendecomposition of the full matrix, eigenvalues ascending.
// Throws ResourceError when dim exceeds `dim_cap`.
EigenSystem full_spectrum(const SparseHamiltonian& h, bool want_vectors,
                          std::size_t dim_cap = 16384);

// Select the k eigenpairs closest to E_target = E_min + eps*(E_max - E_min).
// The result is a contiguous, ascending run of the input spectrum; distance
// ties prefer the lower eigenvalue. Throws ParameterError if eps is outside
// [0, 1] or the spectrum holds fewer than k levels.
SpectrumWindow target_window(const EigenSystem& spectrum, double eps, int k = kDefaultWindow);

// Extremal eigenvalues by Lanczos with full reorthogonalization (dense solve
// for small matrices). Deterministic in the matrix alone.
std::pair<double, double> spectral_bounds(const SparseHamiltonian& h,
                                          double tol = 1e-11, int max_iter = 400);

struct ShiftInvertOptions {
    int initial_krylov = 0;     // 0 -> max(4k, 160)
    int max_krylov = 1200;      // then fall back to the dense path
    double residual_tol = kResidualBound;
};

// Interior eigenpairs around the energy-density target via the spectral
// transformation (H - sigma I)^-1: dense LU factorization once, then Lanczos
// in the transformed operator. Same observable semantics as
// target_window(full_spectrum(...)), validated against it in tests; falls
// back to the dense route if the iteration does not meet the residual
// contract. Always returns eigenvectors.
SpectrumWindow shift_invert_window(const SparseHamiltonian& h, double eps,
                                   int k = kDefaultWindow, const ShiftInvertOptions& opts = {});

// Adjacent-gap ratios r_n = min(d_{n+1}/d_n, d_n/d_{n+1}) of an ascending
// sequence, d_n = E_n - E_{n-1}. Needs at least 3 levels.
GapRatioSample gap_ratios(std::span<const double> ascending_energies);
GapRatioSample gap_ratios(const Eigen::VectorXd& ascending_energies);

inline double mean_ratio(const GapRatioSample& s) {
    double sum = 0.0;
    for (double r : s.ratios) sum += r;
    return s.ratios.empty() ? 0.0 : sum / static_cast<double>(s.ratios.size());
}

enum class RmtEnsemble { kPoisson, kGoe };

// Probability density of the folded gap ratio on [0, 1]. The Poisson branch
// is exactly 2/(1+r)^2; the orthogonal-ensemble branch is
// c*(r+r^2)/(1+r+r^2)^{5/2} with c fixed by normalizing the integral over
// [0, 1] to one.
double reference_r_pdf(RmtEnsemble ensemble, double r);

// Mean of the density above over [0, 1], by quadrature.
double reference_r_mean(RmtEnsemble ensemble);

}  // namespace starkmbl
