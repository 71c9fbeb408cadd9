#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "starkmbl/fock.hpp"

namespace starkmbl {

// Singular values below this are zero for entropy purposes (0*ln 0 -> 0).
inline constexpr double kSchmidtCutoff = 1e-12;

// Half-chain bipartition of a fixed-N Fock basis: subsystem A is the block of
// sites 1..L/2. Amplitudes of a state form one matrix per left particle
// number (left configurations x right configurations); the Schmidt values
// are the singular values pooled over those blocks, and
// S = -sum_k l_k^2 ln l_k^2 equals -Tr(rho_A ln rho_A) without ever forming
// the reduced density matrix.
//
// Construction is O(dim); instances are immutable and shared across threads.
class HalfChainCut {
public:
    // Throws ParameterError when L is odd.
    explicit HalfChainCut(const FockBasis& basis);

    // Schmidt values (descending not guaranteed) of a unit vector.
    // Throws ParameterError if the norm deviates from 1 by more than 1e-10.
    std::vector<double> schmidt_values(const Eigen::VectorXd& state) const;

    // Von Neumann entropy in natural-log units.
    double entropy(const Eigen::VectorXd& state) const;

private:
    struct Block {
        int left_dim;
        int right_dim;
    };
    struct Slot {
        std::uint32_t block;
        std::uint32_t row;
        std::uint32_t col;
    };
    std::vector<Block> blocks_;
    std::vector<Slot> slots_;  // one per basis state
    std::size_t dim_;
};

// Convenience wrapper: build the cut and evaluate one state.
double half_chain_entropy(const Eigen::VectorXd& state, const FockBasis& basis);

// Pooled mean and population variance <S^2> - <S>^2 over all
// (eigenstate, realization) entropy samples. Throws ParameterError on empty
// input.
std::pair<double, double> entropy_stats(std::span<const double> samples);

}  // namespace starkmbl
