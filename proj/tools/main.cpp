#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "starkmbl/collapse.hpp"
#include "starkmbl/ensemble.hpp"
#include "starkmbl/errors.hpp"

namespace fs = std::filesystem;
using namespace starkmbl;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Only the output directory may come from the environment; everything else
// is config or flags.
std::string resolve_output(const std::string& path) {
    const char* dir = std::getenv("STARKMBL_OUTPUT_DIR");
    if (dir == nullptr || *dir == '\0' || path.empty()) return path;
    const fs::path p(path);
    if (p.is_absolute()) return path;
    return (fs::path(dir) / p).string();
}

int cmd_spectrum(int sites, int particles, double tunneling, double interaction, double field,
                 double disorder, std::uint64_t seed, double eps, int k,
                 std::size_t dense_cutoff, const std::string& out_path,
                 const std::string& dump_path) {
    LatticeParams params;
    params.sites = sites;
    params.particles = particles >= 0 ? particles : sites / 2;
    params.tunneling = tunneling;
    params.interaction = interaction;
    params.field = field;
    params.disorder = disorder;

    const FockBasis basis = enumerate_basis(params.sites, params.particles);
    const DisorderRealization dis = sample_disorder(params.disorder, params.sites, seed);
    const SparseHamiltonian h = build_hamiltonian(params, dis, basis);

    if (!dump_path.empty()) {
        std::ofstream dump(resolve_output(dump_path));
        if (!dump) throw IoError("cannot write matrix dump: " + dump_path);
        dump_coordinate_text(h, dump);
    }

    const int k_eff = std::min<int>(k, static_cast<int>(h.dim));
    SpectrumWindow window;
    if (h.dim <= dense_cutoff) {
        window = target_window(full_spectrum(h, true), eps, k_eff);
    } else {
        window = shift_invert_window(h, eps, k_eff);
    }

    const bool have_cut = params.sites % 2 == 0;
    std::vector<double> entropies;
    if (have_cut) {
        const HalfChainCut cut(basis);
        for (Eigen::Index c = 0; c < window.vectors.cols(); ++c) {
            entropies.push_back(cut.entropy(window.vectors.col(c)));
        }
    }

    std::ostringstream body;
    body << "# starkmbl spectrum v" << kVersion << " L=" << params.sites
         << " N=" << params.particles << " J=" << fmt(params.tunneling)
         << " U=" << fmt(params.interaction) << " F=" << fmt(params.field)
         << " W=" << fmt(params.disorder) << " seed=" << seed << " eps=" << fmt(eps)
         << " k=" << k_eff << "\n";
    body << "# dim " << h.dim << " E_min " << fmt(window.e_min) << " E_max " << fmt(window.e_max)
         << "\n";
    body << "index,eigenvalue" << (have_cut ? ",entropy" : "") << "\n";
    for (Eigen::Index i = 0; i < window.values.size(); ++i) {
        body << i << ',' << fmt(window.values[i]);
        if (have_cut) body << ',' << fmt(entropies[static_cast<std::size_t>(i)]);
        body << "\n";
    }

    if (window.values.size() >= 3) {
        const GapRatioSample ratios = gap_ratios(window.values);
        body << "# gap_ratios dropped=" << ratios.dropped << "\n";
        for (std::size_t i = 0; i < ratios.ratios.size(); ++i) {
            body << fmt(ratios.ratios[i]) << (i + 1 < ratios.ratios.size() ? "," : "");
        }
        body << "\n# mean_r " << fmt(mean_ratio(ratios));
    } else {
        body << "# gap_ratios skipped (window smaller than 3 levels)";
    }
    if (have_cut && !entropies.empty()) {
        const auto [mean_s, var_s] = entropy_stats(entropies);
        body << "\n# mean_S " << fmt(mean_s) << " var_S " << fmt(var_s);
    }
    body << "\n";

    if (out_path.empty()) {
        std::cout << body.str();
    } else {
        const std::string resolved = resolve_output(out_path);
        std::ofstream out(resolved);
        if (!out) throw IoError("cannot write spectrum output: " + resolved);
        out << body.str();
    }
    return 0;
}

int cmd_sweep(const std::string& config_path, bool resume, int threads_override,
              const std::string& output_override) {
    SweepConfig config = load_sweep_config(config_path);
    if (!output_override.empty()) config.output = output_override;
    config.output = resolve_output(config.output);
    if (!config.checkpoint_dir.empty()) config.checkpoint_dir = resolve_output(config.checkpoint_dir);
    if (threads_override > 0) config.threads = threads_override;

    const SweepResult result = run_sweep(config, resume);
    for (const std::string& w : result.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "wrote " << result.records.size() << " records to " << config.output
              << " (manifest " << result.hash << ")\n";
    return 0;
}

int cmd_collapse(const std::string& input_path, double eps, std::vector<double> w_grid,
                 std::string report_path, std::string curves_path) {
    const std::vector<EnsembleRecord> records = read_records_csv(input_path);
    const std::string manifest = read_manifest_reference(input_path);
    CollapseInput input = collapse_input_from_records(records, eps);
    if (input.curves.size() < 2) {
        throw ParameterError("collapse: results at eps=" + fmt(eps) + " cover " +
                             std::to_string(input.curves.size()) +
                             " system sizes; need at least 2");
    }
    const CollapseResult result =
        fit_collapse(input, std::span<const double>(w_grid.data(), w_grid.size()));

    if (report_path.empty()) report_path = "collapse_eps" + std::to_string(eps) + ".json";
    if (curves_path.empty()) curves_path = "collapse_eps" + std::to_string(eps) + "_curves.csv";
    report_path = resolve_output(report_path);
    curves_path = resolve_output(curves_path);

    {
        const fs::path rp(report_path);
        if (rp.has_parent_path()) fs::create_directories(rp.parent_path());
        std::ofstream report(report_path);
        if (!report) throw IoError("cannot write collapse report: " + report_path);
        report << collapse_report_json(input, result, manifest) << "\n";
    }
    write_rescaled_curves_csv(input, result, curves_path, manifest);

    std::cout << "eps=" << fmt(eps) << " F_c=" << fmt(result.critical_field) << " +/- "
              << fmt(result.critical_field_err) << " nu=" << fmt(result.nu) << " +/- "
              << fmt(result.nu_err) << " min_cost=" << fmt(result.min_cost) << "\n";
    if (result.unidentifiable) {
        std::cout << "note: cost landscape is flat; the fit is unidentifiable\n";
    }
    if (result.boundary) {
        std::cout << "note: at least one window fit stopped at the search boundary\n";
    }
    std::cout << "report: " << report_path << "\ncurves: " << curves_path << "\n";
    return 0;
}

int cmd_phase_diagram(const std::string& input_path, std::string out_dir,
                      std::vector<double> eps_list, const std::vector<double>& w_grid) {
    const std::vector<EnsembleRecord> records = read_records_csv(input_path);
    const std::string manifest = read_manifest_reference(input_path);
    if (eps_list.empty()) {
        std::set<double> seen;
        for (const EnsembleRecord& r : records) seen.insert(r.eps);
        eps_list.assign(seen.begin(), seen.end());
    }

    const MobilityEdge edge =
        mobility_edge(records, std::span<const double>(eps_list.data(), eps_list.size()),
                      std::span<const double>(w_grid.data(), w_grid.size()));
    for (const std::string& w : edge.warnings) std::cerr << "warning: " << w << "\n";

    out_dir = resolve_output(out_dir);
    fs::create_directories(out_dir);
    const std::string csv_path = (fs::path(out_dir) / "mobility_edge.csv").string();
    {
        std::ofstream out(csv_path);
        if (!out) throw IoError("cannot write " + csv_path);
        if (!manifest.empty()) out << "# manifest " << manifest << "\n";
        out << "eps,F_c,F_c_err,nu,nu_err,min_cost,boundary,unidentifiable\n";
        for (const MobilityEdgePoint& p : edge.points) {
            out << fmt(p.eps) << ',' << fmt(p.fit.critical_field) << ','
                << fmt(p.fit.critical_field_err) << ',' << fmt(p.fit.nu) << ','
                << fmt(p.fit.nu_err) << ',' << fmt(p.fit.min_cost) << ','
                << (p.fit.boundary ? 1 : 0) << ',' << (p.fit.unidentifiable ? 1 : 0) << "\n";
        }
    }

    nlohmann::json j{{"eps_at_max", edge.eps_at_max},
                     {"asymmetry_low_minus_high", edge.asymmetry},
                     {"warnings", edge.warnings}};
    if (!manifest.empty()) j["input_manifest"] = manifest;
    nlohmann::json pts = nlohmann::json::array();
    for (const MobilityEdgePoint& p : edge.points) {
        pts.push_back({{"eps", p.eps},
                       {"F_c", p.fit.critical_field},
                       {"F_c_err", p.fit.critical_field_err},
                       {"nu", p.fit.nu},
                       {"nu_err", p.fit.nu_err},
                       {"min_cost", p.fit.min_cost},
                       {"boundary", p.fit.boundary},
                       {"unidentifiable", p.fit.unidentifiable}});
    }
    j["points"] = pts;
    const std::string json_path = (fs::path(out_dir) / "mobility_edge.json").string();
    std::ofstream jout(json_path);
    if (!jout) throw IoError("cannot write " + json_path);
    jout << j.dump(2) << "\n";

    std::cout << "fitted " << edge.points.size() << " energy densities";
    if (!edge.points.empty()) {
        std::cout << "; max F_c at eps=" << fmt(edge.eps_at_max)
                  << ", asymmetry=" << fmt(edge.asymmetry);
    }
    std::cout << "\nwrote " << csv_path << " and " << json_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Energy-resolved localization study of interacting fermions in a tilted, "
                 "disordered lattice: targeted diagonalization, spectral statistics, "
                 "entanglement entropy and finite-size-scaling collapse"};
    app.set_version_flag("--version", std::string("starkmbl ") + kVersion);
    app.require_subcommand(1);

    // spectrum
    auto* spectrum = app.add_subcommand(
        "spectrum", "Eigenvalue window, gap ratios and entropies for one disorder realization");
    int sp_L = 12, sp_N = -1, sp_k = kDefaultWindow;
    double sp_J = 1.0, sp_U = 1.0, sp_F = 0.0, sp_W = 0.5, sp_eps = 0.5;
    std::uint64_t sp_seed = 1;
    std::size_t sp_dense_cutoff = 2000;
    std::string sp_out, sp_dump;
    spectrum->add_option("--L", sp_L, "number of lattice sites")->required();
    spectrum->add_option("--N", sp_N, "particle number (default: half filling L/2)");
    spectrum->add_option("--J", sp_J, "tunneling scale");
    spectrum->add_option("--U", sp_U, "nearest-neighbor interaction");
    spectrum->add_option("--F", sp_F, "uniform field strength");
    spectrum->add_option("--W", sp_W, "disorder strength");
    spectrum->add_option("--seed", sp_seed, "disorder seed");
    spectrum->add_option("--eps", sp_eps, "target energy density in [0, 1]");
    spectrum->add_option("--k", sp_k, "eigenpairs per window");
    spectrum->add_option("--dense-cutoff", sp_dense_cutoff,
                         "largest dimension solved by full dense diagonalization");
    spectrum->add_option("--out", sp_out, "write the report here instead of stdout");
    spectrum->add_option("--dump-matrix", sp_dump, "debug dump of the Hamiltonian triplets");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Disorder-averaged sweep over an (L, eps, F) grid");
    std::string sw_config, sw_output;
    bool sw_resume = false;
    int sw_threads = 0;
    sweep->add_option("--config", sw_config, "JSON sweep configuration")
        ->required()
        ->check(CLI::ExistingFile);
    sweep->add_flag("--resume", sw_resume, "reuse valid checkpoints from an interrupted run");
    sweep->add_option("--threads", sw_threads, "worker count (output is independent of it)");
    sweep->add_option("--output", sw_output, "override the configured results path");

    // collapse
    auto* collapse =
        app.add_subcommand("collapse", "Finite-size-scaling collapse fit at one energy density");
    std::string cl_input, cl_report, cl_curves;
    double cl_eps = 0.5;
    std::vector<double> cl_w;
    collapse->add_option("--input", cl_input, "results CSV from a sweep")
        ->required()
        ->check(CLI::ExistingFile);
    collapse->add_option("--eps", cl_eps, "energy density to fit")->required();
    collapse->add_option("--w", cl_w, "fitting-window widths (default 0.1..1.0)");
    collapse->add_option("--report", cl_report, "collapse report JSON path");
    collapse->add_option("--curves", cl_curves, "rescaled-curve CSV path");

    // phase-diagram
    auto* phase = app.add_subcommand(
        "phase-diagram", "Collapse fits across energy densities: the mobility edge");
    std::string pd_input, pd_out_dir = "phase_diagram";
    std::vector<double> pd_eps, pd_w;
    phase->add_option("--input", pd_input, "results CSV from a sweep")
        ->required()
        ->check(CLI::ExistingFile);
    phase->add_option("--out-dir", pd_out_dir, "output directory");
    phase->add_option("--eps", pd_eps, "energy densities (default: all present in the input)");
    phase->add_option("--w", pd_w, "fitting-window widths (default 0.1..1.0)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (spectrum->parsed()) {
            return cmd_spectrum(sp_L, sp_N, sp_J, sp_U, sp_F, sp_W, sp_seed, sp_eps, sp_k,
                                sp_dense_cutoff, sp_out, sp_dump);
        }
        if (sweep->parsed()) {
            return cmd_sweep(sw_config, sw_resume, sw_threads, sw_output);
        }
        if (collapse->parsed()) {
            return cmd_collapse(cl_input, cl_eps, cl_w, cl_report, cl_curves);
        }
        if (phase->parsed()) {
            return cmd_phase_diagram(pd_input, pd_out_dir, pd_eps, pd_w);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
