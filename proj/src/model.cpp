#include "starkmbl/model.hpp"

#include <bit>
#include <cstdio>
#include <ostream>
#include <string>

#include "starkmbl/errors.hpp"
#include "starkmbl/rng.hpp"

namespace starkmbl {

void SparseHamiltonian::apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
    y.setZero(static_cast<Eigen::Index>(dim));
    for (const Triplet& t : entries) {
        y[t.row] += t.value * x[t.col];
        if (t.row != t.col) y[t.col] += t.value * x[t.row];
    }
}

DisorderRealization sample_disorder(double disorder, int sites, std::uint64_t seed) {
    if (disorder < 0.0) throw ParameterError("sample_disorder: disorder strength W must be >= 0");
    if (sites < 0) throw ParameterError("sample_disorder: negative site count");
    DisorderRealization r;
    r.seed = seed;
    r.onsite.resize(static_cast<std::size_t>(sites));
    SplitMix64 rng(seed);
    for (double& h : r.onsite) h = rng.next_symmetric(disorder);
    return r;
}

SparseHamiltonian build_hamiltonian(const LatticeParams& params,
                                    const DisorderRealization& disorder,
                                    const FockBasis& basis) {
    const int sites = params.sites;
    if (basis.sites != sites || basis.particles != params.particles) {
        throw ParameterError("build_hamiltonian: basis is for (L=" + std::to_string(basis.sites) +
                             ", N=" + std::to_string(basis.particles) + "), params want (L=" +
                             std::to_string(sites) + ", N=" + std::to_string(params.particles) + ")");
    }
    if (static_cast<int>(disorder.onsite.size()) != sites) {
        throw ParameterError("build_hamiltonian: disorder has " +
                             std::to_string(disorder.onsite.size()) + " fields, lattice has " +
                             std::to_string(sites) + " sites");
    }

    // V_j = h_j - F*j with the 1-based site index.
    std::vector<double> potential(static_cast<std::size_t>(sites));
    for (int j = 1; j <= sites; ++j) {
        potential[static_cast<std::size_t>(j - 1)] =
            disorder.onsite[static_cast<std::size_t>(j - 1)] - params.field * static_cast<double>(j);
    }

    SparseHamiltonian h;
    h.dim = basis.dim();
    h.entries.reserve(h.dim * (2 + static_cast<std::size_t>(sites) / 2));

    const double hop = 0.5 * params.tunneling;
    for (std::size_t a = 0; a < basis.dim(); ++a) {
        const std::uint32_t mask = basis.states[a];

        double diag = 0.0;
        for (int b = 0; b < sites; ++b) {
            if (mask & (1u << b)) diag += potential[static_cast<std::size_t>(b)];
        }
        for (int b = 0; b + 1 < sites; ++b) {
            const std::uint32_t pair = 3u << b;
            if ((mask & pair) == pair) diag += params.interaction;
        }
        h.entries.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a), diag});

        // One particle moved right: bit b set, bit b+1 clear. The partner mask
        // is larger, so each unordered pair is stored once with row < col.
        for (int b = 0; b + 1 < sites; ++b) {
            const std::uint32_t lo = 1u << b;
            const std::uint32_t hi = 1u << (b + 1);
            if ((mask & lo) && !(mask & hi)) {
                const std::uint32_t moved = (mask ^ lo) | hi;
                const std::size_t other = state_index(basis, moved);
                h.entries.push_back({static_cast<std::uint32_t>(a),
                                     static_cast<std::uint32_t>(other), hop});
            }
        }
    }
    return h;
}

Eigen::MatrixXd to_dense(const SparseHamiltonian& h) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(h.dim),
                                              static_cast<Eigen::Index>(h.dim));
    for (const Triplet& t : h.entries) {
        m(t.row, t.col) = t.value;
        m(t.col, t.row) = t.value;
    }
    return m;
}

void dump_coordinate_text(const SparseHamiltonian& h, std::ostream& out) {
    char line[80];
    for (const Triplet& t : h.entries) {
        std::snprintf(line, sizeof(line), "%u %u %.17g\n", t.row, t.col, t.value);
        out << line;
    }
}

}  // namespace starkmbl
