#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "starkmbl/entanglement.hpp"
#include "starkmbl/model.hpp"
#include "starkmbl/spectra.hpp"

namespace starkmbl {

// Which diagonalization route a grid point uses. Dimensions at or below
// dense_cutoff take the full dense decomposition; larger ones go through the
// shift-invert window, which only pays for the eigenpairs it returns.
struct SolverPolicy {
    std::size_t dense_cutoff = 2000;
    std::size_t dim_cap = 16384;
    ShiftInvertOptions shift_invert{};
};

// Per-realization sufficient statistics; everything downstream (pooled means,
// standard errors, both pooling conventions) reduces from these.
struct RealizationStats {
    double ratio_sum = 0.0;
    std::size_t ratio_count = 0;
    std::size_t dropped = 0;
    double entropy_sum = 0.0;
    double entropy_sq_sum = 0.0;
    std::size_t entropy_count = 0;

    double mean_ratio() const {
        return ratio_count ? ratio_sum / static_cast<double>(ratio_count) : 0.0;
    }
};

// Disorder-averaged observables at one (L, eps, F) grid point.
struct EnsembleRecord {
    int sites = 0;
    double eps = 0.0;
    double field = 0.0;
    double mean_r = 0.0;    // pooled over all ratios of all realizations
    double stderr_r = 0.0;  // std of per-realization means / sqrt(n)
    double mean_entropy = 0.0;
    double var_entropy = 0.0;  // pooled <S^2> - <S>^2
    std::size_t n_realizations = 0;
    std::size_t n_eigenpairs = 0;
    std::size_t dropped_ratios = 0;
    std::uint64_t master_seed = 0;
};

struct PointResult {
    EnsembleRecord record;
    std::vector<RealizationStats> realizations;  // in realization-index order
};

// Stable per-realization seed: any grid point is recomputable in isolation.
std::uint64_t realization_seed(std::uint64_t master_seed, int sites, int eps_index,
                               int field_index, int realization_index);

// One disorder realization end to end: sample fields, assemble H, take the
// k-eigenpair window at eps, pool gap ratios and half-chain entropies.
RealizationStats run_realization(const LatticeParams& params, const FockBasis& basis,
                                 const HalfChainCut& cut, double eps, int k,
                                 std::uint64_t seed, const SolverPolicy& policy);

// n_samples realizations at one grid point, reduced in realization order.
PointResult run_point(const LatticeParams& params, double eps, int n_samples,
                      std::uint64_t master_seed, int k = kDefaultWindow,
                      const SolverPolicy& policy = {}, int eps_index = 0, int field_index = 0);

EnsembleRecord reduce_point(const std::vector<RealizationStats>& stats, int sites, double eps,
                            double field, int k, std::uint64_t master_seed);

struct SweepConfig {
    std::vector<int> sizes;                    // L values, even (half filling)
    std::vector<double> fields;                // F grid
    std::vector<double> energy_densities;      // eps grid, inside [0.15, 0.85]
    double disorder = 0.5;                     // W
    double tunneling = 1.0;                    // J
    double interaction = 1.0;                  // U
    std::map<int, int> samples;                // realizations per L
    std::uint64_t master_seed = 1;
    int window = kDefaultWindow;               // k
    std::string output;                        // results CSV path
    std::string checkpoint_dir;                // default: <output>.ckpt
    int threads = 1;
    SolverPolicy policy{};
};

// Workstation-scale realization counts used when `samples` has no entry for
// a size. Full publication-scale counts go in the config instead.
int default_sample_count(int sites);

// Parse + validate; errors name the offending field. Grids are canonically
// sorted and deduplicated so permuted configs yield identical sweeps.
SweepConfig sweep_config_from_json(const std::string& json_text);
SweepConfig load_sweep_config(const std::string& path);
std::string sweep_config_to_json(const SweepConfig& config);  // canonical form

// FNV-1a of the canonical config serialization, as 16 hex digits.
std::string config_hash(const SweepConfig& config);

struct SweepResult {
    std::vector<EnsembleRecord> records;  // canonical (L, eps, F) order
    std::vector<std::string> warnings;
    std::string hash;
};

// Run the full grid. Each completed grid point is checkpointed; when
// `resume` is set, valid checkpoints (matching config hash and sample count)
// are reused instead of recomputed, otherwise stale ones are discarded.
// Output is a pure function of the config, independent of thread count.
SweepResult run_sweep(const SweepConfig& config, bool resume = false);

// Results CSV (header + one line per record) and the JSON metadata sidecar.
void write_records_csv(const std::vector<EnsembleRecord>& records, const std::string& hash,
                       const std::string& path);
std::vector<EnsembleRecord> read_records_csv(const std::string& path);
void write_manifest(const SweepConfig& config, const std::string& hash, const std::string& path);

// Manifest hash referenced by a results file ("" when absent); downstream
// outputs echo it so every artifact traces back to the sweep that made it.
std::string read_manifest_reference(const std::string& path);

}  // namespace starkmbl
