#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "starkmbl/fock.hpp"

namespace starkmbl {

// Chain of interacting spinless fermions in a disordered, uniformly tilted
// potential, open boundary:
//
//   H = sum_{j=1}^{L-1} [ (J/2)(c^+_j c_{j+1} + c^+_{j+1} c_j) + U n_j n_{j+1} ]
//       + sum_{j=1}^{L} V_j n_j,        V_j = h_j - F*j,  h_j uniform in [-W, W].
//
// The energy unit is J = U = 1. Site index j is 1-based inside V_j; any
// global offset cancels in gaps, ratios and energy densities.
struct LatticeParams {
    int sites = 0;              // L
    int particles = 0;          // N
    double tunneling = 1.0;     // J
    double interaction = 1.0;   // U
    double field = 0.0;         // F, >= 0
    double disorder = 0.0;      // W, >= 0
};

// On-site random fields for one realization. Reconstruction from
// (seed, W, L) is bit-identical on every platform.
struct DisorderRealization {
    std::uint64_t seed = 0;
    std::vector<double> onsite;  // h_1..h_L
};

struct Triplet {
    std::uint32_t row;
    std::uint32_t col;  // row <= col
    double value;
};

// Real symmetric matrix in upper-triangle triplet form. Diagonal entries are
// sum_j V_j n_j + U sum_j n_j n_{j+1}; each off-diagonal J/2 entry connects a
// pair of states that differ by one nearest-neighbour particle move. With
// sites ordered 1..L and nearest-neighbour hops only, the Jordan-Wigner
// string is empty and no fermionic sign appears.
struct SparseHamiltonian {
    std::size_t dim = 0;
    std::vector<Triplet> entries;

    // y = H x with the symmetric completion of the stored triangle.
    void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;
};

// L i.i.d. uniform draws on [-W, W], deterministic in the seed.
// Throws ParameterError if W < 0 or L < 0.
DisorderRealization sample_disorder(double disorder, int sites, std::uint64_t seed);

// Assemble H on the given basis. Throws ParameterError when the basis or the
// disorder vector does not match params.
SparseHamiltonian build_hamiltonian(const LatticeParams& params,
                                    const DisorderRealization& disorder,
                                    const FockBasis& basis);

Eigen::MatrixXd to_dense(const SparseHamiltonian& h);

// Debug dump, one "row col value" line per stored triplet.
void dump_coordinate_text(const SparseHamiltonian& h, std::ostream& out);

}  // namespace starkmbl
