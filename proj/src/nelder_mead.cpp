#include "cdis/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "cdis/errors.hpp"

namespace cdis {

void NmConfig::validate() const {
    if (!(alpha > 0.0))
        throw ValidationError("alpha must be > 0");
    if (!(gamma > 1.0))
        throw ValidationError("gamma must be > 1");
    if (!(beta > 0.0 && beta < 1.0))
        throw ValidationError("beta must be in (0, 1)");
    if (!(sigma > 0.0 && sigma < 1.0))
        throw ValidationError("sigma must be in (0, 1)");
    if (!(x_tol > 0.0) || !(f_tol > 0.0))
        throw ValidationError("tolerances must be > 0");
    if (max_iter < 1)
        throw ValidationError("max_iter must be >= 1");
    if (!(init_step_rel > 0.0) || !(init_step_abs > 0.0))
        throw ValidationError("initial simplex steps must be > 0");
}

void to_json(nlohmann::json& j, const NmConfig& config) {
    j = nlohmann::json{
        {"alpha", config.alpha},
        {"gamma", config.gamma},
        {"beta", config.beta},
        {"sigma", config.sigma},
        {"x_tol", config.x_tol},
        {"f_tol", config.f_tol},
        {"max_iter", config.max_iter},
        {"init_step_rel", config.init_step_rel},
        {"init_step_abs", config.init_step_abs},
    };
}

void from_json(const nlohmann::json& j, NmConfig& config) {
    NmConfig defaults;
    config.alpha = j.value("alpha", defaults.alpha);
    config.gamma = j.value("gamma", defaults.gamma);
    config.beta = j.value("beta", defaults.beta);
    config.sigma = j.value("sigma", defaults.sigma);
    config.x_tol = j.value("x_tol", defaults.x_tol);
    config.f_tol = j.value("f_tol", defaults.f_tol);
    config.max_iter = j.value("max_iter", defaults.max_iter);
    config.init_step_rel = j.value("init_step_rel", defaults.init_step_rel);
    config.init_step_abs = j.value("init_step_abs", defaults.init_step_abs);
    config.validate();
}

void Bounds::validate(std::size_t dim) const {
    if (lo.empty() || hi.empty())
        throw ValidationError("bounds must not be empty");
    if (lo.size() != 1 && lo.size() != dim)
        throw ValidationError("lower bound has " + std::to_string(lo.size()) +
                              " entries for dimension " + std::to_string(dim));
    if (hi.size() != 1 && hi.size() != dim)
        throw ValidationError("upper bound has " + std::to_string(hi.size()) +
                              " entries for dimension " + std::to_string(dim));
    for (std::size_t i = 0; i < dim; ++i) {
        if (!std::isfinite(low(i)) || !std::isfinite(high(i)))
            throw ValidationError("bounds must be finite");
        if (!(low(i) < high(i)))
            throw ValidationError("bounds require lo < hi in every dimension");
    }
}

std::vector<double> Bounds::clip(std::vector<double> x) const {
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = std::clamp(x[i], low(i), high(i));
    return x;
}

bool Bounds::contains(std::span<const double> x) const {
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < low(i) || x[i] > high(i))
            return false;
    return true;
}

std::string to_string(NmStopReason reason) {
    switch (reason) {
    case NmStopReason::x_tol: return "x_tol";
    case NmStopReason::f_tol: return "f_tol";
    case NmStopReason::max_iter: return "max_iter";
    }
    return "unknown";
}

std::string NmTrace::to_csv() const {
    std::string out = "iteration,best_f,simplex_diameter,n_evals\n";
    char line[160];
    for (const NmTraceRecord& r : records) {
        std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%zu\n", r.iteration, r.best_f,
                      r.simplex_diameter, r.n_evals);
        out += line;
    }
    out += "# termination: " + to_string(reason) + "\n";
    return out;
}

namespace {

std::string describe_point(std::span<const double> x) {
    std::string out = "[";
    char buf[48];
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s%.17g", i ? ", " : "", x[i]);
        out += buf;
    }
    return out + "]";
}

double distance(std::span<const double> a, std::span<const double> b) {
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sq += d * d;
    }
    return std::sqrt(sq);
}

struct Vertex {
    std::vector<double> x;
    double f;
};

double simplex_diameter(const std::vector<Vertex>& simplex) {
    double diameter = 0.0;
    for (std::size_t i = 0; i + 1 < simplex.size(); ++i)
        for (std::size_t j = i + 1; j < simplex.size(); ++j)
            diameter = std::max(diameter, distance(simplex[i].x, simplex[j].x));
    return diameter;
}

/// Relative best-worst spread; 0 when both objectives are 0 (e.g. a
/// constant-zero objective), so the loop still terminates via f_tol.
double relative_spread(double f_best, double f_worst) {
    const double denom = std::max(std::abs(f_best), std::abs(f_worst));
    if (denom == 0.0)
        return 0.0;
    return (f_worst - f_best) / denom;
}

} // namespace

NmResult nelder_mead(const Objective& objective, std::vector<double> x0, const Bounds& bounds,
                     const NmConfig& config) {
    config.validate();
    const std::size_t dim = x0.size();
    if (dim < 1)
        throw ValidationError("nelder_mead requires dimension >= 1");
    bounds.validate(dim);
    if (!bounds.contains(x0))
        throw ValidationError("x0 " + describe_point(x0) + " violates the bounds");

    std::size_t n_evals = 0;
    std::vector<double> best_x;
    double best_f = std::numeric_limits<double>::infinity();
    const auto evaluate = [&](const std::vector<double>& x) {
        const double f = objective(x);
        ++n_evals;
        if (!std::isfinite(f))
            throw ObjectiveFaultError("objective returned " + std::to_string(f) + " at " +
                                      describe_point(x));
        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
        return f;
    };

    // Initial simplex: x0 plus one perturbed vertex per coordinate.
    // When clipping would collapse a vertex back onto x0 (coordinate
    // at the upper bound), perturb downward instead.
    std::vector<Vertex> simplex;
    simplex.reserve(dim + 1);
    simplex.push_back({x0, evaluate(x0)});
    for (std::size_t i = 0; i < dim; ++i) {
        std::vector<double> v = x0;
        v[i] = x0[i] != 0.0 ? x0[i] * (1.0 + config.init_step_rel) : config.init_step_abs;
        v = bounds.clip(std::move(v));
        if (v[i] == x0[i]) {
            v[i] = x0[i] != 0.0 ? x0[i] * (1.0 - config.init_step_rel) : -config.init_step_abs;
            v = bounds.clip(std::move(v));
        }
        simplex.push_back({v, evaluate(v)});
    }

    NmTrace trace;
    const auto by_f = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };

    std::size_t iteration = 0;
    while (true) {
        std::stable_sort(simplex.begin(), simplex.end(), by_f);
        const double diameter = simplex_diameter(simplex);
        trace.records.push_back({iteration, simplex.front().f, diameter, n_evals});

        if (diameter < config.x_tol) {
            trace.reason = NmStopReason::x_tol;
            break;
        }
        if (relative_spread(simplex.front().f, simplex.back().f) < config.f_tol) {
            trace.reason = NmStopReason::f_tol;
            break;
        }
        if (iteration >= config.max_iter) {
            trace.reason = NmStopReason::max_iter;
            break;
        }
        ++iteration;

        // Centroid of all vertices but the worst.
        std::vector<double> centroid(dim, 0.0);
        for (std::size_t v = 0; v + 1 < simplex.size(); ++v)
            for (std::size_t i = 0; i < dim; ++i)
                centroid[i] += simplex[v].x[i];
        for (double& c : centroid)
            c /= static_cast<double>(dim);

        Vertex& worst = simplex.back();
        const auto towards = [&](double coeff, const std::vector<double>& from) {
            std::vector<double> p(dim);
            for (std::size_t i = 0; i < dim; ++i)
                p[i] = centroid[i] + coeff * (from[i] - centroid[i]);
            return bounds.clip(std::move(p));
        };

        std::vector<double> xr = towards(-config.alpha, worst.x);
        const double fr = evaluate(xr);

        if (fr < simplex.front().f) {
            std::vector<double> xe = towards(config.gamma, xr);
            const double fe = evaluate(xe);
            if (fe < fr)
                worst = {std::move(xe), fe};
            else
                worst = {std::move(xr), fr};
        } else if (fr < simplex[simplex.size() - 2].f) {
            worst = {std::move(xr), fr};
        } else {
            const bool outside = fr < worst.f;
            std::vector<double> xc =
                outside ? towards(config.beta, xr) : towards(config.beta, worst.x);
            const double fc = evaluate(xc);
            if (fc < std::min(fr, worst.f)) {
                worst = {std::move(xc), fc};
            } else {
                // Shrink toward the best vertex.
                for (std::size_t v = 1; v < simplex.size(); ++v) {
                    std::vector<double> p(dim);
                    for (std::size_t i = 0; i < dim; ++i)
                        p[i] = simplex[0].x[i] +
                               config.sigma * (simplex[v].x[i] - simplex[0].x[i]);
                    p = bounds.clip(std::move(p));
                    simplex[v] = {p, evaluate(p)};
                }
            }
        }
    }

    return NmResult{std::move(best_x), best_f, std::move(trace)};
}

} // namespace cdis
