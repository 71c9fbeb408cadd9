#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "starkmbl/ensemble.hpp"

namespace starkmbl {

// Pairs with no common rescaled support contribute this flat penalty to the
// collapse cost instead of an extrapolated integral.
inline constexpr double kOverlapPenalty = 1e3;

// Natural cubic spline through strictly increasing knots.
class CubicSpline {
public:
    CubicSpline(std::span<const double> x, std::span<const double> y);

    double operator()(double x) const;  // defined on [x_min, x_max]
    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }

private:
    std::vector<double> x_, y_, second_;
};

struct CurvePoint {
    double field = 0.0;   // F
    double value = 0.0;   // observable, e.g. mean gap ratio
    double stderr_ = 0.0; // optional per-point uncertainty
};

// Observable-vs-field curves for at least two system sizes at one energy
// density; each curve needs >= 5 points with strictly increasing F.
struct CollapseInput {
    std::map<int, std::vector<CurvePoint>> curves;  // keyed by L
    double eps = 0.0;
};

void validate_collapse_input(const CollapseInput& input);

// Pull the curves for one energy density out of sweep records.
CollapseInput collapse_input_from_records(const std::vector<EnsembleRecord>& records, double eps,
                                          double eps_match_tol = 1e-9);

// x_i = (F_i - F_c) * L^(1/nu); order preserving. Throws on nu <= 0.
std::vector<double> rescale(std::span<const double> fields, double critical_field, double nu,
                            int sites);

// Mean squared mismatch of the spline-interpolated, rescaled curves:
//   D = 1/(2wR) * sum_{i<j} Int_{-wR}^{wR} (y_i(x) - y_j(x))^2 dx,
// integrating each pair over the part of the window where both curves have
// data. R is the rescaled width of the smallest system size present; w in
// (0, 1] scales the fitting window. Empty-overlap pairs add kOverlapPenalty.
double collapse_cost(const CollapseInput& input, double critical_field, double nu, double w);

struct WindowFit {
    double w = 0.0;
    double critical_field = 0.0;
    double nu = 0.0;
    double cost = 0.0;
    bool boundary = false;  // optimum pinned to the search-range edge
};

struct CollapseResult {
    double critical_field = 0.0;
    double nu = 0.0;
    double critical_field_err = 0.0;  // std over the w sweep
    double nu_err = 0.0;
    double min_cost = 0.0;
    std::vector<WindowFit> per_window;
    bool boundary = false;        // any per-window fit hit the search edge
    bool unidentifiable = false;  // cost landscape flat (e.g. identical curves)
};

std::vector<double> default_w_grid();  // {0.1, 0.2, ..., 1.0}

// Per window width: exhaustive grid (F_c over the swept field range step
// 0.02, nu in [0.3, 2.0] step 0.02) then Nelder-Mead refinement; the final
// estimate averages the per-w optima and the error bars are their standard
// deviation.
CollapseResult fit_collapse(const CollapseInput& input,
                            std::span<const double> w_grid = {});

struct MobilityEdgePoint {
    double eps = 0.0;
    CollapseResult fit;
};

struct MobilityEdge {
    std::vector<MobilityEdgePoint> points;
    std::vector<std::string> warnings;  // energy densities skipped and why
    double eps_at_max = 0.0;            // where the critical field peaks
    // Mean critical field below vs above the spectrum center; positive means
    // the edge leans towards the ground-state side.
    double asymmetry = 0.0;
};

MobilityEdge mobility_edge(const std::vector<EnsembleRecord>& records,
                           std::span<const double> eps_grid,
                           std::span<const double> w_grid = {});

// Report + plot-ready exports used by the CLI. A nonempty `manifest` is the
// hash of the sweep whose records fed the fit; both outputs echo it.
std::string collapse_report_json(const CollapseInput& input, const CollapseResult& result,
                                 const std::string& manifest = "");
void write_rescaled_curves_csv(const CollapseInput& input, const CollapseResult& result,
                               const std::string& path, const std::string& manifest = "");

}  // namespace starkmbl
