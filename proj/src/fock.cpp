#include "starkmbl/fock.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "starkmbl/errors.hpp"

namespace starkmbl {

std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    if (k > n - k) k = n - k;
    std::uint64_t result = 1;
    for (int i = 1; i <= k; ++i) {
        result = result * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    }
    return result;
}

FockBasis enumerate_basis(int sites, int particles) {
    if (sites < 0 || sites > kMaxSites || particles < 0 || particles > sites) {
        throw ParameterError("enumerate_basis: need 0 <= N <= L <= " + std::to_string(kMaxSites) +
                             ", got L=" + std::to_string(sites) + " N=" + std::to_string(particles));
    }
    FockBasis basis;
    basis.sites = sites;
    basis.particles = particles;
    basis.states.reserve(binomial(sites, particles));

    if (particles == 0) {
        basis.states.push_back(0u);
        return basis;
    }

    // Gosper's hack walks same-popcount masks in increasing order.
    const std::uint32_t limit = (sites == 32) ? ~0u : ((1u << sites) - 1u);
    std::uint32_t mask = (1u << particles) - 1u;
    while (mask <= limit) {
        basis.states.push_back(mask);
        std::uint32_t lowest = mask & (~mask + 1u);
        std::uint32_t ripple = mask + lowest;
        std::uint32_t ones = mask ^ ripple;
        ones = (ones >> 2) / lowest;
        if (ripple > limit || ripple == 0) break;
        mask = ripple | ones;
    }
    return basis;
}

std::size_t state_index(const FockBasis& basis, std::uint32_t mask) {
    auto it = std::lower_bound(basis.states.begin(), basis.states.end(), mask);
    if (it == basis.states.end() || *it != mask) {
        throw NotFoundError("state_index: mask " + std::to_string(mask) + " not in basis (L=" +
                            std::to_string(basis.sites) + ", N=" + std::to_string(basis.particles) + ")");
    }
    return static_cast<std::size_t>(it - basis.states.begin());
}

}  // namespace starkmbl
