#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace starkmbl {

// Occupation basis of N spinless fermions on L sites with fixed particle
// number. Bit j-1 of a mask is the occupation of site j (sites are 1-based
// in the potential convention, bits are 0-based). States are stored in
// increasing integer order, which makes ranking deterministic.
//
// Immutable after construction; safe to share across threads.
struct FockBasis {
    int sites = 0;      // L
    int particles = 0;  // N
    std::vector<std::uint32_t> states;

    std::size_t dim() const { return states.size(); }
};

// Hard cap on L: dense spectra at half filling beyond this are out of reach
// on a workstation, and masks must fit comfortably in 32 bits.
inline constexpr int kMaxSites = 28;

// All L-site masks with exactly N bits set, ascending.
// Throws ParameterError unless 0 <= N <= L <= kMaxSites.
FockBasis enumerate_basis(int sites, int particles);

// Position of `mask` in basis.states (binary search, O(log dim)).
// Throws NotFoundError if the mask is not part of the basis.
std::size_t state_index(const FockBasis& basis, std::uint32_t mask);

// n-choose-k in unsigned 64-bit arithmetic; used for dimension checks.
std::uint64_t binomial(int n, int k);

}  // namespace starkmbl
