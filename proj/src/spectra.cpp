#include "starkmbl/spectra.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <string>

#include <Eigen/LU>

#include "starkmbl/errors.hpp"
#include "starkmbl/rng.hpp"

namespace starkmbl {

namespace {

Eigen::VectorXd deterministic_unit_vector(std::size_t dim, std::uint64_t tag) {
    SplitMix64 rng(tag);
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 2.0 * rng.next_double() - 1.0;
    v.normalize();
    return v;
}

// Lanczos tridiagonalization with full reorthogonalization (two MGS sweeps
// per step). Deterministic given the operator and the start vector.
class Lanczos {
public:
    Lanczos(std::size_t dim, int max_steps, Eigen::VectorXd start)
        : basis_(static_cast<Eigen::Index>(dim), max_steps + 1),
          alpha_(max_steps), beta_(max_steps), steps_(0) {
        basis_.col(0) = std::move(start);
    }

    int steps() const { return steps_; }

    // Returns false on breakdown (invariant subspace found).
    bool extend_to(int m, const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& op) {
        Eigen::VectorXd w(basis_.rows());
        for (; steps_ < m; ++steps_) {
            const int j = steps_;
            op(basis_.col(j), w);
            alpha_[j] = basis_.col(j).dot(w);
            w -= alpha_[j] * basis_.col(j);
            if (j > 0) w -= beta_[j - 1] * basis_.col(j - 1);
            for (int pass = 0; pass < 2; ++pass) {
                auto v = basis_.leftCols(j + 1);
                w.noalias() -= v * (v.transpose() * w);
            }
            const double norm = w.norm();
            scale_ = std::max({scale_, std::abs(alpha_[j]), norm});
            if (norm <= 1e-13 * scale_) {
                // Invariant subspace: keep alpha_[j] in the projection (its
                // subdiagonal is zero) and stop; the Ritz values are exact.
                beta_[j] = 0.0;
                ++steps_;
                return false;
            }
            beta_[j] = norm;
            basis_.col(j + 1) = w / norm;
        }
        return true;
    }

    // Eigen-decomposition of the current tridiagonal projection.
    void ritz(Eigen::VectorXd& values, Eigen::MatrixXd& vectors) const {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
        es.computeFromTridiagonal(alpha_.head(steps_), beta_.head(steps_ - 1),
                                  Eigen::ComputeEigenvectors);
        values = es.eigenvalues();
        vectors = es.eigenvectors();
    }

    double last_beta() const { return steps_ > 0 ? beta_[steps_ - 1] : 0.0; }
    const Eigen::MatrixXd& basis() const { return basis_; }

private:
    Eigen::MatrixXd basis_;
    Eigen::VectorXd alpha_, beta_;
    int steps_;
    double scale_ = 0.0;
};

EigenSystem dense_eigensystem(const Eigen::MatrixXd& m, bool want_vectors) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        m, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    EigenSystem out;
    out.values = solver.eigenvalues();
    if (want_vectors) out.vectors = solver.eigenvectors();
    return out;
}

}  // namespace

EigenSystem full_spectrum(const SparseHamiltonian& h, bool want_vectors, std::size_t dim_cap) {
    if (h.dim > dim_cap) {
        throw ResourceError("full_spectrum: dim " + std::to_string(h.dim) +
                            " exceeds the dense cap " + std::to_string(dim_cap));
    }
    if (h.dim == 0) throw ParameterError("full_spectrum: empty matrix");
    return dense_eigensystem(to_dense(h), want_vectors);
}

SpectrumWindow target_window(const EigenSystem& spectrum, double eps, int k) {
    const Eigen::Index n = spectrum.values.size();
    if (k < 1) throw ParameterError("target_window: k must be positive");
    if (n < k) {
        throw ParameterError("target_window: spectrum has " + std::to_string(n) +
                             " levels, window needs " + std::to_string(k));
    }
    if (!(eps >= 0.0 && eps <= 1.0)) {
        throw ParameterError("target_window: energy density must be in [0, 1]");
    }

    const double e_min = spectrum.values[0];
    const double e_max = spectrum.values[n - 1];
    const double target = e_min + eps * (e_max - e_min);

    // Nearest-k around the target is a contiguous run of the sorted values.
    // Expand from the insertion point; distance ties take the lower level.
    const double* begin = spectrum.values.data();
    Eigen::Index right = std::lower_bound(begin, begin + n, target) - begin;
    Eigen::Index left = right - 1;
    for (int taken = 0; taken < k; ++taken) {
        const bool left_ok = left >= 0;
        const bool right_ok = right < n;
        bool take_left;
        if (left_ok && right_ok) {
            take_left = (target - spectrum.values[left]) <= (spectrum.values[right] - target);
        } else {
            take_left = left_ok;
        }
        if (take_left) --left; else ++right;
    }

    const Eigen::Index lo = left + 1;
    SpectrumWindow w;
    w.eps = eps;
    w.e_min = e_min;
    w.e_max = e_max;
    w.values = spectrum.values.segment(lo, k);
    if (spectrum.vectors.size() > 0) w.vectors = spectrum.vectors.middleCols(lo, k);
    return w;
}

std::pair<double, double> spectral_bounds(const SparseHamiltonian& h, double tol, int max_iter) {
    if (h.dim == 0) throw ParameterError("spectral_bounds: empty matrix");
    if (h.dim <= 256) {
        EigenSystem es = dense_eigensystem(to_dense(h), false);
        return {es.values[0], es.values[es.values.size() - 1]};
    }

    const int max_m = std::min<int>(max_iter, static_cast<int>(h.dim) - 1);
    std::uint64_t tag = mix_u64(0xB04Dull ^ static_cast<std::uint64_t>(h.dim));
    Lanczos lanczos(h.dim, max_m, deterministic_unit_vector(h.dim, tag));
    auto op = [&h](const Eigen::VectorXd& x, Eigen::VectorXd& y) { h.apply(x, y); };

    Eigen::VectorXd ritz_values;
    Eigen::MatrixXd ritz_vectors;
    int m = std::min(48, max_m);
    while (true) {
        const bool ok = lanczos.extend_to(m, op);
        lanczos.ritz(ritz_values, ritz_vectors);
        const int steps = lanczos.steps();
        const double span = std::max(ritz_values[steps - 1] - ritz_values[0], 1e-300);
        const double res_lo = std::abs(lanczos.last_beta() * ritz_vectors(steps - 1, 0));
        const double res_hi = std::abs(lanczos.last_beta() * ritz_vectors(steps - 1, steps - 1));
        if (!ok || (res_lo <= tol * span && res_hi <= tol * span) || m >= max_m) {
            return {ritz_values[0], ritz_values[steps - 1]};
        }
        m = std::min(max_m, m + 32);
    }
}

SpectrumWindow shift_invert_window(const SparseHamiltonian& h, double eps, int k,
                                   const ShiftInvertOptions& opts) {
    if (k < 1) throw ParameterError("shift_invert_window: k must be positive");
    if (!(eps >= 0.0 && eps <= 1.0)) {
        throw ParameterError("shift_invert_window: energy density must be in [0, 1]");
    }
    const std::size_t dim = h.dim;
    // Too small for a meaningful Krylov ladder; the dense route is instant.
    if (static_cast<int>(dim) < std::max(4 * k, 64)) {
        return target_window(full_spectrum(h, true), eps, k);
    }

    const auto [e_min, e_max] = spectral_bounds(h);
    const double sigma = e_min + eps * (e_max - e_min);
    const double scale = std::max(std::abs(e_min), std::abs(e_max));

    Eigen::MatrixXd shifted = to_dense(h);
    shifted.diagonal().array() -= sigma;
    Eigen::PartialPivLU<Eigen::Ref<Eigen::MatrixXd>> lu(shifted);  // factors in place

    auto op = [&lu](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = lu.solve(x); };

    std::uint64_t tag = mix_u64(0x51F7ull ^ static_cast<std::uint64_t>(dim));
    tag = mix_u64(tag ^ std::bit_cast<std::uint64_t>(sigma));

    const int max_m = std::min<int>(opts.max_krylov, static_cast<int>(dim) - 1);
    int m = opts.initial_krylov > 0 ? opts.initial_krylov : std::max(4 * k, 160);
    m = std::min(m, max_m);

    Lanczos lanczos(dim, max_m, deterministic_unit_vector(dim, tag));
    Eigen::VectorXd y(static_cast<Eigen::Index>(dim));

    while (true) {
        const bool ok = lanczos.extend_to(m, op);
        const int steps = lanczos.steps();
        if (steps >= k) {
            Eigen::VectorXd nu;
            Eigen::MatrixXd s;
            lanczos.ritz(nu, s);

            // Largest |nu| (transformed spectrum) are the levels nearest sigma.
            std::vector<int> order(static_cast<std::size_t>(steps));
            for (int i = 0; i < steps; ++i) order[static_cast<std::size_t>(i)] = i;
            std::sort(order.begin(), order.end(),
                      [&nu](int a, int b) { return std::abs(nu[a]) > std::abs(nu[b]); });

            const int want = std::min(steps, k + std::max(8, k / 4));
            struct Pair { double value; Eigen::VectorXd vec; };
            std::vector<Pair> accepted;
            accepted.reserve(static_cast<std::size_t>(want));
            for (int idx = 0; idx < want; ++idx) {
                const int i = order[static_cast<std::size_t>(idx)];
                if (nu[i] == 0.0) continue;
                Eigen::VectorXd x = lanczos.basis().leftCols(steps) * s.col(i);
                x.normalize();
                const double lambda = sigma + 1.0 / nu[i];
                h.apply(x, y);
                const double resid = (y - lambda * x).norm();
                if (resid <= opts.residual_tol * scale) {
                    accepted.push_back({lambda, std::move(x)});
                }
            }
            if (static_cast<int>(accepted.size()) >= k) {
                std::sort(accepted.begin(), accepted.end(), [sigma](const Pair& a, const Pair& b) {
                    const double da = std::abs(a.value - sigma);
                    const double db = std::abs(b.value - sigma);
                    return da != db ? da < db : a.value < b.value;
                });
                accepted.resize(static_cast<std::size_t>(k));
                std::sort(accepted.begin(), accepted.end(),
                          [](const Pair& a, const Pair& b) { return a.value < b.value; });

                SpectrumWindow w;
                w.eps = eps;
                w.e_min = e_min;
                w.e_max = e_max;
                w.values.resize(k);
                w.vectors.resize(static_cast<Eigen::Index>(dim), k);
                for (int i = 0; i < k; ++i) {
                    w.values[i] = accepted[static_cast<std::size_t>(i)].value;
                    w.vectors.col(i) = accepted[static_cast<std::size_t>(i)].vec;
                }
                return w;
            }
        }
        if (!ok || m >= max_m) break;  // breakdown or ladder exhausted
        m = std::min(max_m, (m * 8) / 5);
    }

    // Iteration could not certify k pairs; the dense route is the backstop.
    return target_window(full_spectrum(h, true), eps, k);
}

GapRatioSample gap_ratios(std::span<const double> energies) {
    const std::size_t n = energies.size();
    if (n < 3) throw ParameterError("gap_ratios: need at least 3 levels");
    for (std::size_t i = 1; i < n; ++i) {
        if (energies[i] < energies[i - 1]) {
            throw ParameterError("gap_ratios: input must be sorted ascending");
        }
    }

    const double span = energies[n - 1] - energies[0];
    const double floor = kDegenerateGapRel * span;

    GapRatioSample out;
    out.ratios.reserve(n - 2);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double gap_lo = energies[i] - energies[i - 1];
        const double gap_hi = energies[i + 1] - energies[i];
        if (gap_lo <= floor || gap_hi <= floor) {
            ++out.dropped;
            continue;
        }
        out.ratios.push_back(std::min(gap_lo / gap_hi, gap_hi / gap_lo));
    }
    return out;
}

GapRatioSample gap_ratios(const Eigen::VectorXd& energies) {
    return gap_ratios(std::span<const double>(energies.data(),
                                              static_cast<std::size_t>(energies.size())));
}

namespace {

double goe_shape(double r) { return (r + r * r) / std::pow(1.0 + r + r * r, 2.5); }

// Composite Simpson on [0, 1].
double simpson01(const std::function<double(double)>& f, int panels) {
    const double h = 1.0 / panels;
    double sum = f(0.0) + f(1.0);
    for (int i = 1; i < panels; ++i) sum += f(i * h) * (i % 2 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

double goe_norm_constant() {
    static const double c = 1.0 / simpson01([](double r) { return goe_shape(r); }, 1 << 14);
    return c;
}

}  // namespace

double reference_r_pdf(RmtEnsemble ensemble, double r) {
    if (!(r >= 0.0 && r <= 1.0)) {
        throw ParameterError("reference_r_pdf: folded ratio must be in [0, 1]");
    }
    if (ensemble == RmtEnsemble::kPoisson) {
        const double q = 1.0 + r;
        return 2.0 / (q * q);
    }
    return goe_norm_constant() * goe_shape(r);
}

double reference_r_mean(RmtEnsemble ensemble) {
    auto compute = [](RmtEnsemble e) {
        return simpson01([e](double r) { return r * reference_r_pdf(e, r); }, 1 << 14);
    };
    if (ensemble == RmtEnsemble::kPoisson) {
        static const double m = compute(RmtEnsemble::kPoisson);
        return m;
    }
    static const double m = compute(RmtEnsemble::kGoe);
    return m;
}

}  // namespace starkmbl
