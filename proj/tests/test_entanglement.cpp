#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"

#include "starkmbl/entanglement.hpp"
#include "starkmbl/errors.hpp"
#include "starkmbl/model.hpp"
#include "starkmbl/spectra.hpp"

using namespace starkmbl;

namespace {

// Entropy of the mirror-image cut (sites L/2+1..L as subsystem A): reversing
// the lattice maps a fixed-N basis onto itself, so the swapped-subsystem
// entropy is the plain entropy of the reversed amplitudes.
double mirrored_entropy(const Eigen::VectorXd& state, const FockBasis& basis) {
    Eigen::VectorXd permuted(state.size());
    for (std::size_t i = 0; i < basis.dim(); ++i) {
        std::uint32_t m = basis.states[i];
        std::uint32_t rev = 0;
        for (int b = 0; b < basis.sites; ++b) {
            if (m & (1u << b)) rev |= 1u << (basis.sites - 1 - b);
        }
        permuted[static_cast<Eigen::Index>(state_index(basis, rev))] =
            state[static_cast<Eigen::Index>(i)];
    }
    return HalfChainCut(basis).entropy(permuted);
}

}  // namespace

TEST_SUITE("entanglement") {

TEST_CASE("product states carry zero entropy") {
    const FockBasis basis = enumerate_basis(6, 3);
    const HalfChainCut cut(basis);
    for (std::size_t i = 0; i < basis.dim(); ++i) {
        Eigen::VectorXd state = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.dim()));
        state[static_cast<Eigen::Index>(i)] = 1.0;
        CHECK(cut.entropy(state) == doctest::Approx(0.0).epsilon(1e-14));
    }
}

TEST_CASE("equal superposition of one particle on two sites gives ln 2") {
    const FockBasis basis = enumerate_basis(2, 1);
    Eigen::VectorXd state(2);
    state << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    CHECK(half_chain_entropy(state, basis) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("schmidt route equals the explicit reduced-density-matrix route") {
    for (int sites : {6, 8}) {
        const FockBasis basis = enumerate_basis(sites, sites / 2);
        const HalfChainCut cut(basis);
        for (int trial = 0; trial < 25; ++trial) {
            const Eigen::VectorXd state =
                oracles::random_state(basis.dim(), 100 + static_cast<std::uint64_t>(trial));
            const double schmidt = cut.entropy(state);
            const double dense = oracles::rho_a_entropy(state, basis);
            CHECK(schmidt == doctest::Approx(dense).epsilon(1e-10));
        }
    }
}

TEST_CASE("schmidt weights sum to one and the cut is symmetric") {
    const FockBasis basis = enumerate_basis(8, 4);
    const HalfChainCut cut(basis);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::VectorXd state =
            oracles::random_state(basis.dim(), 500 + static_cast<std::uint64_t>(trial));
        const std::vector<double> values = cut.schmidt_values(state);
        double total = 0.0;
        for (double v : values) total += v * v;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-10));

        const double s = cut.entropy(state);
        CHECK(s == doctest::Approx(mirrored_entropy(state, basis)).epsilon(1e-10));
        CHECK(s >= 0.0);
        CHECK(s < 4.0 * std::log(2.0));  // (L/2) ln 2 ceiling
    }
}

TEST_CASE("eigenstate entropies respect the half-chain ceiling strictly") {
    const FockBasis basis = enumerate_basis(8, 4);
    const HalfChainCut cut(basis);
    LatticeParams p;
    p.sites = 8;
    p.particles = 4;
    p.field = 0.5;
    p.disorder = 0.5;
    const SparseHamiltonian h = build_hamiltonian(p, sample_disorder(0.5, 8, 44), basis);
    const EigenSystem es = full_spectrum(h, true);
    for (Eigen::Index i = 0; i < es.vectors.cols(); ++i) {
        const double s = cut.entropy(es.vectors.col(i));
        CHECK(s >= 0.0);
        CHECK(s < 4.0 * std::log(2.0));
    }
}

TEST_CASE("validation: norm and parity") {
    const FockBasis basis = enumerate_basis(4, 2);
    Eigen::VectorXd bad = Eigen::VectorXd::Zero(6);
    bad[0] = 0.7;
    CHECK_THROWS_AS(half_chain_entropy(bad, basis), ParameterError);
    CHECK_THROWS_AS(HalfChainCut(enumerate_basis(5, 2)), ParameterError);
}

TEST_CASE("entropy_stats: closed-form cases") {
    const std::vector<double> constant = {0.4, 0.4, 0.4};
    const auto [mc, vc] = entropy_stats(constant);
    CHECK(mc == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(vc == doctest::Approx(0.0).epsilon(1e-15));

    const double ln2 = std::log(2.0);
    const std::vector<double> two_point = {0.0, ln2};
    const auto [mt, vt] = entropy_stats(two_point);
    CHECK(mt == doctest::Approx(ln2 / 2.0).epsilon(1e-15));
    CHECK(vt == doctest::Approx(ln2 * ln2 / 4.0).epsilon(1e-15));

    const std::vector<double> empty;
    CHECK_THROWS_AS(entropy_stats(empty), ParameterError);
}

TEST_CASE("entropy_stats: pooled variance tracks a known distribution") {
    // Uniform on [0, 2]: mean 1, variance 1/3.
    SplitMix64 rng(9);
    std::vector<double> samples(10000);
    for (double& s : samples) s = 2.0 * rng.next_double();
    const auto [mean, var] = entropy_stats(samples);
    const double n = static_cast<double>(samples.size());
    const double se_mean = std::sqrt((1.0 / 3.0) / n);
    CHECK(std::abs(mean - 1.0) < 3.0 * se_mean);
    // Var of the pooled variance ~ (mu4 - sigma^4)/n; E[(x-1)^4] = 1/5 here.
    const double mu4 = 0.2;
    const double se_var = std::sqrt((mu4 - 1.0 / 9.0) / n);
    CHECK(std::abs(var - 1.0 / 3.0) < 3.0 * se_var);
}

}  // TEST_SUITE
