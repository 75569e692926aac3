#include "wolbachia/sweep.hpp"

#include <omp.h>

#include <cstdlib>
#include <exception>
#include <limits>
#include <string>

namespace wolbachia::sweep {

int thread_count(int requested) {
    int n = requested > 0 ? requested : omp_get_max_threads();
    if (const char* env = std::getenv("WOLBACHIA_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && cap > 0) n = std::min<long>(n, cap);
    }
    return std::max(n, 1);
}

namespace {

bool past(const Deadline& d) { return d && std::chrono::steady_clock::now() > *d; }

void rethrow_first(const std::vector<std::exception_ptr>& errors) {
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

// Per-cell bodies shared by the parallel and serial kernels.

double mvw_cell(const ModelParameters& p, double n0, const ThresholdOptions& opts) {
    return minimal_viable_w(p, n0, opts);
}

PlanResult plan_cell(const ModelParameters& p, const PlanCell& c, const SeparatrixCurve& sep,
                     const PlannerOptions& opts) {
    try {
        return minimal_release_size(p, c.n0, c.tau, c.budget, sep, opts);
    } catch (const std::exception& e) {
        PlanResult r;
        r.n0 = c.n0;
        r.tau = c.tau;
        r.budget = c.budget;
        r.error = e.what();
        return r;
    }
}

}  // namespace

std::vector<double> minimal_viable_w_grid(const ModelParameters& p, std::span<const double> n0s,
                                          const ThresholdOptions& opts, int threads, Deadline deadline) {
    const auto count = static_cast<long>(n0s.size());
    std::vector<double> out(n0s.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<std::exception_ptr> errors(n0s.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count(threads))
    for (long i = 0; i < count; ++i) {
        if (past(deadline)) continue;
        try {
            out[i] = mvw_cell(p, n0s[i], opts);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    rethrow_first(errors);
    return out;
}

std::vector<double> minimal_viable_w_grid(const ModelParameters& p, std::span<const double> n0s,
                                          const ThresholdOptions& opts, int threads) {
    return minimal_viable_w_grid(p, n0s, opts, threads, std::nullopt);
}

std::vector<double> minimal_viable_w_grid_serial(const ModelParameters& p, std::span<const double> n0s,
                                                 const ThresholdOptions& opts) {
    std::vector<double> out;
    out.reserve(n0s.size());
    for (double n0 : n0s) out.push_back(mvw_cell(p, n0, opts));
    return out;
}

std::vector<BasinLabel> classify_grid(const ModelParameters& p, std::span<const PopulationState> starts,
                                      const IntegrationOptions& opts, int threads) {
    const auto count = static_cast<long>(starts.size());
    std::vector<BasinLabel> out(starts.size(), BasinLabel::undecided);
    std::vector<std::exception_ptr> errors(starts.size());
#pragma omp parallel for schedule(dynamic, 4) num_threads(thread_count(threads))
    for (long i = 0; i < count; ++i) {
        try {
            out[i] = classify_basin(p, starts[i], opts);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    rethrow_first(errors);
    return out;
}

std::vector<BasinLabel> classify_grid_serial(const ModelParameters& p, std::span<const PopulationState> starts,
                                             const IntegrationOptions& opts) {
    std::vector<BasinLabel> out;
    out.reserve(starts.size());
    for (const auto& s : starts) out.push_back(classify_basin(p, s, opts));
    return out;
}

std::vector<PlanResult> plan_grid(const ModelParameters& p, std::span<const PlanCell> cells,
                                  const SeparatrixCurve& sep, const PlannerOptions& opts, int threads,
                                  Deadline deadline) {
    const auto count = static_cast<long>(cells.size());
    std::vector<PlanResult> out(cells.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count(threads))
    for (long i = 0; i < count; ++i) {
        if (past(deadline)) {
            out[i].n0 = cells[i].n0;
            out[i].tau = cells[i].tau;
            out[i].budget = cells[i].budget;
            out[i].error = kSkippedCell;
            continue;
        }
        out[i] = plan_cell(p, cells[i], sep, opts);
    }
    return out;
}

std::vector<PlanResult> plan_grid_serial(const ModelParameters& p, std::span<const PlanCell> cells,
                                         const SeparatrixCurve& sep, const PlannerOptions& opts) {
    std::vector<PlanResult> out;
    out.reserve(cells.size());
    for (const auto& c : cells) out.push_back(plan_cell(p, c, sep, opts));
    return out;
}

}  // namespace wolbachia::sweep
