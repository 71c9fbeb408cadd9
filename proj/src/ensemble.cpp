#include "starkmbl/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "starkmbl/errors.hpp"
#include "starkmbl/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace starkmbl {

namespace {

constexpr const char* kCsvHeader =
    "L,eps,F,mean_r,stderr_r,mean_S,var_S,n_realizations,n_eigenpairs,dropped_ratios,master_seed";

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string utc_now_iso() {
    std::time_t t = std::time(nullptr);
    std::tm g{};
    gmtime_r(&t, &g);
    char buf[40];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &g);
    return buf;
}

}  // namespace

std::uint64_t realization_seed(std::uint64_t master_seed, int sites, int eps_index,
                               int field_index, int realization_index) {
    std::uint64_t h = mix_u64(master_seed ^ 0x5741524B4D424CULL);
    h = mix_u64(h ^ static_cast<std::uint64_t>(sites));
    h = mix_u64(h ^ static_cast<std::uint64_t>(eps_index));
    h = mix_u64(h ^ static_cast<std::uint64_t>(field_index));
    h = mix_u64(h ^ static_cast<std::uint64_t>(realization_index));
    return h;
}

RealizationStats run_realization(const LatticeParams& params, const FockBasis& basis,
                                 const HalfChainCut& cut, double eps, int k,
                                 std::uint64_t seed, const SolverPolicy& policy) {
    const DisorderRealization disorder = sample_disorder(params.disorder, params.sites, seed);
    const SparseHamiltonian h = build_hamiltonian(params, disorder, basis);
    if (h.dim > policy.dim_cap) {
        throw ResourceError("run_realization: dim " + std::to_string(h.dim) +
                            " exceeds the configured cap " + std::to_string(policy.dim_cap));
    }

    SpectrumWindow window;
    if (h.dim <= policy.dense_cutoff) {
        window = target_window(full_spectrum(h, true, policy.dim_cap), eps, k);
    } else {
        window = shift_invert_window(h, eps, k, policy.shift_invert);
    }

    RealizationStats stats;
    const GapRatioSample ratios = gap_ratios(window.values);
    stats.dropped = ratios.dropped;
    stats.ratio_count = ratios.ratios.size();
    for (double r : ratios.ratios) stats.ratio_sum += r;

    for (Eigen::Index c = 0; c < window.vectors.cols(); ++c) {
        const double s = cut.entropy(window.vectors.col(c));
        stats.entropy_sum += s;
        stats.entropy_sq_sum += s * s;
        ++stats.entropy_count;
    }
    return stats;
}

EnsembleRecord reduce_point(const std::vector<RealizationStats>& stats, int sites, double eps,
                            double field, int k, std::uint64_t master_seed) {
    EnsembleRecord rec;
    rec.sites = sites;
    rec.eps = eps;
    rec.field = field;
    rec.master_seed = master_seed;
    rec.n_realizations = stats.size();

    double ratio_sum = 0.0;
    std::size_t ratio_count = 0;
    double s_sum = 0.0, s_sq_sum = 0.0;
    std::size_t s_count = 0;
    for (const RealizationStats& st : stats) {
        ratio_sum += st.ratio_sum;
        ratio_count += st.ratio_count;
        rec.dropped_ratios += st.dropped;
        s_sum += st.entropy_sum;
        s_sq_sum += st.entropy_sq_sum;
        s_count += st.entropy_count;
    }
    rec.n_eigenpairs = rec.n_realizations * static_cast<std::size_t>(k);
    rec.mean_r = ratio_count ? ratio_sum / static_cast<double>(ratio_count) : 0.0;
    if (s_count) {
        rec.mean_entropy = s_sum / static_cast<double>(s_count);
        rec.var_entropy =
            std::max(0.0, s_sq_sum / static_cast<double>(s_count) - rec.mean_entropy * rec.mean_entropy);
    }

    // Spread of per-realization means; honest even when ratios are pooled.
    std::size_t used = 0;
    double mean_of_means = 0.0;
    for (const RealizationStats& st : stats) {
        if (st.ratio_count) {
            mean_of_means += st.mean_ratio();
            ++used;
        }
    }
    if (used >= 2) {
        mean_of_means /= static_cast<double>(used);
        double ss = 0.0;
        for (const RealizationStats& st : stats) {
            if (st.ratio_count) {
                const double d = st.mean_ratio() - mean_of_means;
                ss += d * d;
            }
        }
        rec.stderr_r = std::sqrt(ss / static_cast<double>(used - 1)) /
                       std::sqrt(static_cast<double>(used));
    }
    return rec;
}

PointResult run_point(const LatticeParams& params, double eps, int n_samples,
                      std::uint64_t master_seed, int k, const SolverPolicy& policy,
                      int eps_index, int field_index) {
    if (n_samples < 1) throw ParameterError("run_point: n_samples must be >= 1");
    const FockBasis basis = enumerate_basis(params.sites, params.particles);
    const HalfChainCut cut(basis);

    PointResult out;
    out.realizations.reserve(static_cast<std::size_t>(n_samples));
    for (int i = 0; i < n_samples; ++i) {
        const std::uint64_t seed =
            realization_seed(master_seed, params.sites, eps_index, field_index, i);
        try {
            out.realizations.push_back(
                run_realization(params, basis, cut, eps, k, seed, policy));
        } catch (const std::exception& e) {
            throw std::runtime_error("realization " + std::to_string(i) + " at (L=" +
                                     std::to_string(params.sites) + ", eps=" + fmt_double(eps) +
                                     ", F=" + fmt_double(params.field) + "): " + e.what());
        }
    }
    out.record = reduce_point(out.realizations, params.sites, eps, params.field, k, master_seed);
    return out;
}

int default_sample_count(int sites) {
    if (sites <= 10) return 400;
    if (sites <= 12) return 200;
    if (sites <= 14) return 100;
    if (sites <= 16) return 50;
    return 25;
}

namespace {

template <typename T>
T field_as(const json& j, const char* key, const T& fallback, bool required) {
    if (!j.contains(key)) {
        if (required) throw ParameterError(std::string("config field '") + key + "' is missing");
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParameterError(std::string("config field '") + key + "': " + e.what());
    }
}

void canonicalize_grid(std::vector<double>& grid) {
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
}

json config_to_json_impl(const SweepConfig& c, bool for_hash) {
    json samples = json::object();
    for (int l : c.sizes) {
        auto it = c.samples.find(l);
        samples[std::to_string(l)] = it != c.samples.end() ? it->second : default_sample_count(l);
    }
    json j{
        {"sizes", c.sizes},
        {"fields", c.fields},
        {"energy_densities", c.energy_densities},
        {"disorder", c.disorder},
        {"tunneling", c.tunneling},
        {"interaction", c.interaction},
        {"samples", samples},
        {"master_seed", c.master_seed},
        {"window", c.window},
        {"dense_cutoff", c.policy.dense_cutoff},
        {"dim_cap", c.policy.dim_cap},
        {"max_krylov", c.policy.shift_invert.max_krylov},
    };
    if (!for_hash) {
        j["output"] = c.output;
        j["checkpoint_dir"] = c.checkpoint_dir;
        j["threads"] = c.threads;
    }
    return j;
}

void validate_config(const SweepConfig& c) {
    if (c.sizes.empty()) throw ParameterError("config field 'sizes': must be nonempty");
    for (int l : c.sizes) {
        if (l < 2 || l > kMaxSites || l % 2 != 0) {
            throw ParameterError("config field 'sizes': L=" + std::to_string(l) +
                                 " must be even and in [2, " + std::to_string(kMaxSites) + "]");
        }
    }
    if (c.fields.empty()) throw ParameterError("config field 'fields': must be nonempty");
    for (double f : c.fields) {
        if (f < 0.0) throw ParameterError("config field 'fields': F must be >= 0");
    }
    if (c.energy_densities.empty()) {
        throw ParameterError("config field 'energy_densities': must be nonempty");
    }
    for (double e : c.energy_densities) {
        if (!(e >= 0.15 && e <= 0.85)) {
            throw ParameterError(
                "config field 'energy_densities': eps must lie in [0.15, 0.85] "
                "(the spectral tails carry too few states)");
        }
    }
    if (c.disorder < 0.0) throw ParameterError("config field 'disorder': W must be >= 0");
    if (c.window < 3) throw ParameterError("config field 'window': need k >= 3");
    for (const auto& [l, n] : c.samples) {
        if (n < 1) {
            throw ParameterError("config field 'samples': count for L=" + std::to_string(l) +
                                 " must be >= 1");
        }
    }
    if (c.threads < 1) throw ParameterError("config field 'threads': must be >= 1");
    if (c.output.empty()) throw ParameterError("config field 'output': must be set");
}

}  // namespace

SweepConfig sweep_config_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParameterError(std::string("config is not valid JSON: ") + e.what());
    }
    SweepConfig c;
    c.sizes = field_as<std::vector<int>>(j, "sizes", {}, true);
    c.fields = field_as<std::vector<double>>(j, "fields", {}, true);
    c.energy_densities = field_as<std::vector<double>>(j, "energy_densities", {}, true);
    c.disorder = field_as<double>(j, "disorder", 0.5, false);
    c.tunneling = field_as<double>(j, "tunneling", 1.0, false);
    c.interaction = field_as<double>(j, "interaction", 1.0, false);
    c.master_seed = field_as<std::uint64_t>(j, "master_seed", 1, false);
    c.window = field_as<int>(j, "window", kDefaultWindow, false);
    c.output = field_as<std::string>(j, "output", "", true);
    c.checkpoint_dir = field_as<std::string>(j, "checkpoint_dir", "", false);
    c.threads = field_as<int>(j, "threads", 1, false);
    c.policy.dense_cutoff = field_as<std::size_t>(j, "dense_cutoff", c.policy.dense_cutoff, false);
    c.policy.dim_cap = field_as<std::size_t>(j, "dim_cap", c.policy.dim_cap, false);
    c.policy.shift_invert.max_krylov =
        field_as<int>(j, "max_krylov", c.policy.shift_invert.max_krylov, false);

    if (j.contains("samples")) {
        if (!j["samples"].is_object()) {
            throw ParameterError("config field 'samples': must map size -> realization count");
        }
        for (const auto& [key, value] : j["samples"].items()) {
            int l = 0;
            try {
                l = std::stoi(key);
            } catch (...) {
                throw ParameterError("config field 'samples': key '" + key + "' is not a size");
            }
            if (!value.is_number_integer()) {
                throw ParameterError("config field 'samples': count for L=" + key +
                                     " must be an integer");
            }
            c.samples[l] = value.get<int>();
        }
    }

    std::sort(c.sizes.begin(), c.sizes.end());
    c.sizes.erase(std::unique(c.sizes.begin(), c.sizes.end()), c.sizes.end());
    canonicalize_grid(c.fields);
    canonicalize_grid(c.energy_densities);
    validate_config(c);
    return c;
}

SweepConfig load_sweep_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return sweep_config_from_json(ss.str());
}

std::string sweep_config_to_json(const SweepConfig& config) {
    return config_to_json_impl(config, false).dump(2);
}

std::string config_hash(const SweepConfig& config) {
    const std::string canonical = config_to_json_impl(config, true).dump();
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : canonical) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

struct GridPoint {
    int sites = 0;
    double eps = 0.0, field = 0.0;
    int eps_index = 0, field_index = 0;
    int n_samples = 0;
    std::shared_ptr<const FockBasis> basis;
    std::shared_ptr<const HalfChainCut> cut;
    std::vector<RealizationStats> slots;
    std::atomic<int> pending{0};
    bool complete = false;
};

fs::path checkpoint_path(const fs::path& dir, const GridPoint& p) {
    return dir / ("point_L" + std::to_string(p.sites) + "_e" + std::to_string(p.eps_index) +
                  "_F" + std::to_string(p.field_index) + ".json");
}

void write_checkpoint(const fs::path& dir, const GridPoint& p, const std::string& hash) {
    json reals = json::array();
    for (const RealizationStats& st : p.slots) {
        reals.push_back({st.ratio_sum, st.ratio_count, st.dropped, st.entropy_sum,
                         st.entropy_sq_sum, st.entropy_count});
    }
    json j{{"hash", hash},       {"sites", p.sites},
           {"eps", p.eps},       {"field", p.field},
           {"eps_index", p.eps_index}, {"field_index", p.field_index},
           {"realizations", reals}};
    const fs::path path = checkpoint_path(dir, p);
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw IoError("cannot write checkpoint " + tmp.string());
        out << j.dump();
    }
    fs::rename(tmp, path);
}

bool load_checkpoint(const fs::path& dir, GridPoint& p, const std::string& hash) {
    const fs::path path = checkpoint_path(dir, p);
    std::ifstream in(path);
    if (!in) return false;
    json j;
    try {
        in >> j;
        if (j.at("hash").get<std::string>() != hash) return false;
        if (j.at("sites").get<int>() != p.sites) return false;
        const auto& reals = j.at("realizations");
        if (static_cast<int>(reals.size()) != p.n_samples) return false;
        std::vector<RealizationStats> slots(reals.size());
        for (std::size_t i = 0; i < reals.size(); ++i) {
            const auto& r = reals[i];
            slots[i].ratio_sum = r.at(0).get<double>();
            slots[i].ratio_count = r.at(1).get<std::size_t>();
            slots[i].dropped = r.at(2).get<std::size_t>();
            slots[i].entropy_sum = r.at(3).get<double>();
            slots[i].entropy_sq_sum = r.at(4).get<double>();
            slots[i].entropy_count = r.at(5).get<std::size_t>();
        }
        p.slots = std::move(slots);
        return true;
    } catch (const json::exception&) {
        return false;
    }
}

}  // namespace

void write_records_csv(const std::vector<EnsembleRecord>& records, const std::string& hash,
                       const std::string& path) {
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw IoError("cannot write results file: " + path);
        out << "# manifest " << hash << "\n" << kCsvHeader << "\n";
        for (const EnsembleRecord& r : records) {
            out << r.sites << ',' << fmt_double(r.eps) << ',' << fmt_double(r.field) << ','
                << fmt_double(r.mean_r) << ',' << fmt_double(r.stderr_r) << ','
                << fmt_double(r.mean_entropy) << ',' << fmt_double(r.var_entropy) << ','
                << r.n_realizations << ',' << r.n_eigenpairs << ',' << r.dropped_ratios << ','
                << r.master_seed << "\n";
        }
        if (!out) throw IoError("write failed on " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::vector<EnsembleRecord> read_records_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read results file: " + path);

    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
        break;
    }
    const std::vector<std::string> expected = {
        "L", "eps", "F", "mean_r", "stderr_r", "mean_S", "var_S",
        "n_realizations", "n_eigenpairs", "dropped_ratios", "master_seed"};
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const std::string& name : expected) {
        if (!col.count(name)) throw IoError("results file lacks column '" + name + "': " + path);
    }

    std::vector<EnsembleRecord> records;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::vector<std::string> cells;
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < expected.size()) {
            throw IoError("short row in results file: " + line);
        }
        EnsembleRecord r;
        r.sites = std::stoi(cells[col["L"]]);
        r.eps = std::stod(cells[col["eps"]]);
        r.field = std::stod(cells[col["F"]]);
        r.mean_r = std::stod(cells[col["mean_r"]]);
        r.stderr_r = std::stod(cells[col["stderr_r"]]);
        r.mean_entropy = std::stod(cells[col["mean_S"]]);
        r.var_entropy = std::stod(cells[col["var_S"]]);
        r.n_realizations = std::stoull(cells[col["n_realizations"]]);
        r.n_eigenpairs = std::stoull(cells[col["n_eigenpairs"]]);
        r.dropped_ratios = std::stoull(cells[col["dropped_ratios"]]);
        r.master_seed = std::stoull(cells[col["master_seed"]]);
        records.push_back(r);
    }
    return records;
}

std::string read_manifest_reference(const std::string& path) {
    std::ifstream in(path);
    if (!in) return "";
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("# manifest ", 0) == 0) return line.substr(11);
        if (!line.empty() && line[0] != '#') break;
    }
    return "";
}

void write_manifest(const SweepConfig& config, const std::string& hash, const std::string& path) {
    json j{{"tool", "starkmbl"},
           {"tool_version", "0.1.0"},
           {"config_hash", hash},
           {"created_utc", utc_now_iso()},
           {"output", config.output},
           {"checkpoint_dir",
            config.checkpoint_dir.empty() ? config.output + ".ckpt" : config.checkpoint_dir},
           {"master_seed", config.master_seed},
           {"config", config_to_json_impl(config, false)}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << j.dump(2) << "\n";
}

SweepResult run_sweep(const SweepConfig& config, bool resume) {
    validate_config(config);
    const std::string hash = config_hash(config);

    const fs::path out_path(config.output);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    {
        // Fail on unwritable output before any compute starts.
        const fs::path probe = out_path.string() + ".tmp";
        std::ofstream test(probe);
        if (!test) throw IoError("output path is not writable: " + config.output);
        test.close();
        fs::remove(probe);
    }
    const fs::path ckpt_dir =
        config.checkpoint_dir.empty() ? fs::path(config.output + ".ckpt") : fs::path(config.checkpoint_dir);
    fs::create_directories(ckpt_dir);

    // Shared immutable per-size structures.
    std::map<int, std::shared_ptr<const FockBasis>> bases;
    std::map<int, std::shared_ptr<const HalfChainCut>> cuts;
    for (int l : config.sizes) {
        auto basis = std::make_shared<FockBasis>(enumerate_basis(l, l / 2));
        cuts[l] = std::make_shared<HalfChainCut>(*basis);
        bases[l] = std::move(basis);
    }

    std::deque<GridPoint> points;
    for (int l : config.sizes) {
        const auto sample_it = config.samples.find(l);
        const int n = sample_it != config.samples.end() ? sample_it->second : default_sample_count(l);
        for (std::size_t ei = 0; ei < config.energy_densities.size(); ++ei) {
            for (std::size_t fi = 0; fi < config.fields.size(); ++fi) {
                GridPoint& p = points.emplace_back();
                p.sites = l;
                p.eps = config.energy_densities[ei];
                p.field = config.fields[fi];
                p.eps_index = static_cast<int>(ei);
                p.field_index = static_cast<int>(fi);
                p.n_samples = n;
                p.basis = bases[l];
                p.cut = cuts[l];
            }
        }
    }

    // Checkpoints: reuse when resuming, discard otherwise.
    for (GridPoint& p : points) {
        if (resume && load_checkpoint(ckpt_dir, p, hash)) {
            p.complete = true;
        } else {
            std::error_code ec;
            fs::remove(checkpoint_path(ckpt_dir, p), ec);
            p.slots.assign(static_cast<std::size_t>(p.n_samples), RealizationStats{});
            p.pending.store(p.n_samples);
        }
    }

    struct Task {
        GridPoint* point;
        int realization;
    };
    std::vector<Task> tasks;
    for (GridPoint& p : points) {
        if (p.complete) continue;
        for (int i = 0; i < p.n_samples; ++i) tasks.push_back({&p, i});
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&]() {
        for (;;) {
            if (failed.load(std::memory_order_relaxed)) return;
            const std::size_t idx = next.fetch_add(1);
            if (idx >= tasks.size()) return;
            GridPoint& p = *tasks[idx].point;
            const int i = tasks[idx].realization;
            try {
                LatticeParams params;
                params.sites = p.sites;
                params.particles = p.sites / 2;
                params.tunneling = config.tunneling;
                params.interaction = config.interaction;
                params.field = p.field;
                params.disorder = config.disorder;
                const std::uint64_t seed = realization_seed(config.master_seed, p.sites,
                                                            p.eps_index, p.field_index, i);
                RealizationStats st = run_realization(params, *p.basis, *p.cut, p.eps,
                                                      config.window, seed, config.policy);
                p.slots[static_cast<std::size_t>(i)] = st;
                if (p.pending.fetch_sub(1) == 1) {
                    write_checkpoint(ckpt_dir, p, hash);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
            }
        }
    };

    const int n_threads =
        std::max(1, std::min<int>(config.threads, static_cast<int>(tasks.size())));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    SweepResult result;
    result.hash = hash;
    for (GridPoint& p : points) {
        EnsembleRecord rec =
            reduce_point(p.slots, p.sites, p.eps, p.field, config.window, config.master_seed);
        if (rec.mean_r < 0.35 || rec.mean_r > 0.55) {
            result.warnings.push_back("mean_r=" + fmt_double(rec.mean_r) + " at (L=" +
                                      std::to_string(p.sites) + ", eps=" + fmt_double(p.eps) +
                                      ", F=" + fmt_double(p.field) +
                                      ") is outside the physical band [0.35, 0.55]");
        }
        result.records.push_back(rec);
    }

    write_records_csv(result.records, hash, config.output);
    write_manifest(config, hash, config.output + ".meta.json");
    return result;
}

}  // namespace starkmbl
