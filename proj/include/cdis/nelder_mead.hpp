#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace cdis {

/// Simplex coefficients and stopping rules. Defaults are the standard
/// Nelder-Mead choices plus the common 5% / 0.00025 initial-step rule.
struct NmConfig {
    double alpha = 1.0;  // reflection
    double gamma = 2.0;  // expansion
    double beta = 0.5;   // contraction
    double sigma = 0.5;  // shrink
    double x_tol = 1e-4;
    double f_tol = 1e-4;
    std::size_t max_iter = 500;
    double init_step_rel = 0.05;
    double init_step_abs = 0.00025;  // for zero coordinates

    void validate() const;
};

void to_json(nlohmann::json& j, const NmConfig& config);
void from_json(const nlohmann::json& j, NmConfig& config);

/// Per-dimension box. Scalar entries broadcast to every coordinate.
struct Bounds {
    std::vector<double> lo;
    std::vector<double> hi;

    static Bounds box(double lo, double hi) { return Bounds{{lo}, {hi}}; }

    void validate(std::size_t dim) const;
    double low(std::size_t i) const { return lo.size() == 1 ? lo[0] : lo[i]; }
    double high(std::size_t i) const { return hi.size() == 1 ? hi[0] : hi[i]; }
    std::vector<double> clip(std::vector<double> x) const;
    bool contains(std::span<const double> x) const;
};

enum class NmStopReason { x_tol, f_tol, max_iter };

std::string to_string(NmStopReason reason);

struct NmTraceRecord {
    std::size_t iteration;
    double best_f;
    double simplex_diameter;
    std::size_t n_evals;
};

/// Convergence telemetry: one record per iteration (best_f is
/// non-increasing across records) plus why the loop stopped.
struct NmTrace {
    std::vector<NmTraceRecord> records;
    NmStopReason reason = NmStopReason::max_iter;

    std::string to_csv() const;
};

struct NmResult {
    std::vector<double> x;  // best point ever evaluated
    double f;
    NmTrace trace;
};

using Objective = std::function<double(std::span<const double>)>;

/// Box-constrained Nelder-Mead minimization. Every candidate point is
/// clipped coordinate-wise into the bounds before evaluation, so the
/// objective is only ever probed inside the box. Stops when the
/// simplex diameter (max pairwise Euclidean distance) drops below
/// x_tol, when the relative best-worst objective spread drops below
/// f_tol, or at max_iter. Returns the best point ever evaluated.
///
/// Throws ValidationError when x0 violates the bounds and
/// ObjectiveFaultError (naming the point) when the objective returns a
/// non-finite value.
NmResult nelder_mead(const Objective& objective, std::vector<double> x0, const Bounds& bounds,
                     const NmConfig& config = {});

} // namespace cdis
