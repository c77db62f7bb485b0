// Closed-loop sensing simulation, synthetic panel generation and the
// sparsity / allocation experiment drivers.
#pragma once

#include "sparsesense/allocation.hpp"
#include "sparsesense/core.hpp"
#include "sparsesense/dsar.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sparsesense {

/// Forecaster used inside the loop. Ar is DSAR with identity weights
/// (per-location autoregression); Mean predicts the mean of the trailing
/// fitting window for every location.
enum class PredictorKind { Dsar, Ar, Persistence, Mean };

std::string_view to_string(PredictorKind k);
PredictorKind predictor_from_string(std::string_view name);

struct SimulationConfig {
    int cycles = 0; ///< 0 runs to the end of the panel
    int warmup = 0; ///< 0 selects the model window L
    std::uint64_t seed = 0;
    double sparsity = 0.0;
    PredictorKind predictor = PredictorKind::Dsar;
    DsarConfig model;
    AllocConfig alloc;
    bool pooled = false; ///< overall RMSE from pooled squared errors

    int resolve_warmup() const { return warmup > 0 ? warmup : model.window(); }
    void validate() const;
};

struct CycleReport {
    int t = 0;
    TaskAssignment assignment;
    double cycle_rmse = 0.0;
    /// False when no ground truth was available in the loss scope; such
    /// cycles are left out of overall RMSE.
    bool scored = false;
    double sse = 0.0;
    int scored_count = 0;
    Eigen::Vector3d lambdas = Eigen::Vector3d::Constant(1.0 / 3.0);
    Vector fused;
    Vector predicted;
};

struct Hotspot {
    bool enabled = false;
    double amplitude = 5.0;
    double width = 0.2;
    double step = 0.05; ///< std-dev of the centre's random-walk step
};

enum class SyntheticWeights { Kernel, Identity };

std::string_view to_string(SyntheticWeights k);
SyntheticWeights synthetic_weights_from_string(std::string_view name);

struct SyntheticSpec {
    int num_locations = 8;
    int num_cycles = 300;
    int p = 1;
    /// S x p coefficients. Empty draws phi_{i,s} uniformly from
    /// [phi_min, phi_max] / p.
    Matrix true_phi;
    double phi_min = 0.2;
    double phi_max = 0.8;
    SyntheticWeights weight_kind = SyntheticWeights::Kernel;
    double bandwidth = 0.3;
    double noise_sigma = 0.1;
    /// Stationary mean level; the source term keeps x at this level on average.
    double base_level = 0.0;
    Hotspot hotspot;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticResult {
    MeasurementPanel panel;
    DsarModel truth;
};

/// Iterates the autoregression from x(t <= 0) = 1 with Gaussian noise.
SyntheticResult generate_synthetic(const SyntheticSpec &spec);

/// Masks floor(fraction * S * T) observed cells uniformly at random while
/// keeping at least one observed cell per cycle.
MeasurementPanel apply_sparsity(const MeasurementPanel &panel, double fraction,
                                std::uint64_t seed);

std::vector<CycleReport> run_closed_loop(const MeasurementPanel &panel,
                                         const SimulationConfig &cfg);

/// Mean of scored cycle RMSEs, or pooled RMSE when `pooled`.
double overall_rmse(std::span<const CycleReport> reports, bool pooled = false);

struct ReportRow {
    std::string strategy;
    double param = 0.0;
    double mean_rmse = 0.0;
    double stddev = 0.0;
    int repeats = 0;
};

/// A single run kept for series output.
struct RunTrace {
    std::string strategy;
    double param = 0.0;
    int repeat = 0;
    std::vector<CycleReport> reports;
};

struct ExperimentResult {
    std::vector<ReportRow> rows;
    std::vector<RunTrace> runs;
};

/// Seed of repeat r; shared across predictors and strategies so runs are
/// paired.
std::uint64_t run_seed(std::uint64_t base, int repeat);

/// predictor x sparsity -> mean overall RMSE over repeats.
ExperimentResult sparsity_sweep(const MeasurementPanel &panel,
                                std::span<const double> sparsities,
                                std::span<const PredictorKind> predictors,
                                const SimulationConfig &cfg, int repeats,
                                bool keep_traces = false);

/// strategy x k -> mean overall RMSE over repeats.
ExperimentResult compare_allocations(const MeasurementPanel &panel,
                                     std::span<const AllocStrategy> strategies,
                                     std::span<const int> k_values,
                                     const SimulationConfig &cfg, int repeats,
                                     bool keep_traces = false);

} // namespace sparsesense
