#include "starkmbl/entanglement.hpp"

#include <bit>
#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "starkmbl/errors.hpp"

namespace starkmbl {

HalfChainCut::HalfChainCut(const FockBasis& basis) : dim_(basis.dim()) {
    if (basis.sites % 2 != 0) {
        throw ParameterError("HalfChainCut: half-chain cut needs even L, got " +
                             std::to_string(basis.sites));
    }
    const int half = basis.sites / 2;
    const int n = basis.particles;
    const int nl_min = std::max(0, n - half);
    const int nl_max = std::min(n, half);

    // Rank each half-chain mask inside its particle-number class by a
    // counting pass over all 2^(L/2) masks in increasing order.
    const std::uint32_t half_count = 1u << half;
    std::vector<std::uint32_t> rank(half_count);
    std::vector<std::uint32_t> filled(static_cast<std::size_t>(half) + 1, 0);
    for (std::uint32_t m = 0; m < half_count; ++m) {
        rank[m] = filled[static_cast<std::size_t>(std::popcount(m))]++;
    }

    blocks_.resize(static_cast<std::size_t>(nl_max - nl_min + 1));
    for (int nl = nl_min; nl <= nl_max; ++nl) {
        blocks_[static_cast<std::size_t>(nl - nl_min)] = {
            static_cast<int>(binomial(half, nl)),
            static_cast<int>(binomial(half, n - nl))};
    }

    const std::uint32_t left_mask = half_count - 1u;
    slots_.resize(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
        const std::uint32_t state = basis.states[i];
        const std::uint32_t lm = state & left_mask;
        const std::uint32_t rm = state >> half;
        const int nl = std::popcount(lm);
        slots_[i] = {static_cast<std::uint32_t>(nl - nl_min), rank[lm], rank[rm]};
    }
}

std::vector<double> HalfChainCut::schmidt_values(const Eigen::VectorXd& state) const {
    if (static_cast<std::size_t>(state.size()) != dim_) {
        throw ParameterError("schmidt_values: state has wrong dimension");
    }
    if (std::abs(state.norm() - 1.0) > 1e-10) {
        throw ParameterError("schmidt_values: state is not normalized");
    }

    std::vector<Eigen::MatrixXd> mats(blocks_.size());
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        mats[b] = Eigen::MatrixXd::Zero(blocks_[b].left_dim, blocks_[b].right_dim);
    }
    for (std::size_t i = 0; i < dim_; ++i) {
        const Slot& s = slots_[i];
        mats[s.block](s.row, s.col) = state[static_cast<Eigen::Index>(i)];
    }

    std::vector<double> values;
    values.reserve(64);
    for (const Eigen::MatrixXd& m : mats) {
        if (m.size() == 0) continue;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        const auto& sv = svd.singularValues();
        for (Eigen::Index j = 0; j < sv.size(); ++j) values.push_back(sv[j]);
    }
    return values;
}

double HalfChainCut::entropy(const Eigen::VectorXd& state) const {
    double s = 0.0;
    for (double v : schmidt_values(state)) {
        if (v <= kSchmidtCutoff) continue;
        const double p = v * v;
        s -= p * std::log(p);
    }
    return s;
}

double half_chain_entropy(const Eigen::VectorXd& state, const FockBasis& basis) {
    return HalfChainCut(basis).entropy(state);
}

std::pair<double, double> entropy_stats(std::span<const double> samples) {
    if (samples.empty()) throw ParameterError("entropy_stats: empty sample list");
    double sum = 0.0;
    double sum_sq = 0.0;
    for (double s : samples) {
        sum += s;
        sum_sq += s * s;
    }
    const double n = static_cast<double>(samples.size());
    const double mean = sum / n;
    const double var = std::max(0.0, sum_sq / n - mean * mean);
    return {mean, var};
}

}  // namespace starkmbl
