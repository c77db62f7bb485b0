// Sensing-task allocation.
//
// Three experts score every location each cycle: temporal uncertainty (TU,
// variance of recent predictions), inference freshness (IF, cycles since the
// location was last sensed) and alertness (AT, predicted hazard severity).
// Their weighted sum orders the locations and the top k are sensed. After the
// cycle each expert is charged a loss proportional to the induced prediction
// error and to how closely its own ordering matched the combined one, and the
// expert weights are updated multiplicatively (exponential weights).
//
// Random, Static and Coverage baselines share the TaskAssignment output.
#pragma once

#include "sparsesense/core.hpp"
#include "sparsesense/rng.hpp"

#include <array>
#include <string_view>
#include <vector>

namespace sparsesense {

enum class Expert { TemporalUncertainty = 0, InferenceFreshness = 1, Alertness = 2 };

inline constexpr std::array<Expert, 3> kExperts = {
    Expert::TemporalUncertainty, Expert::InferenceFreshness, Expert::Alertness};

struct ExpertScores {
    Vector tu;
    Vector if_;
    Vector at;
    int t = 0;

    const Vector &of(Expert e) const;
};

struct ExpertWeights {
    Eigen::Vector3d lambdas = Eigen::Vector3d::Constant(1.0 / 3.0);
    double eta = 0.1;
};

struct PriorityOrder {
    std::vector<int> sequence; ///< highest priority first
    Vector scores;             ///< combined score per location id
};

struct TaskAssignment {
    std::vector<int> ids; ///< ascending
    int t = 0;
};

enum class AllocStrategy { Ewiem, Random, Static, Coverage };

std::string_view to_string(AllocStrategy s);
AllocStrategy alloc_strategy_from_string(std::string_view name);

/// Which locations the per-cycle error (and thus the expert loss) covers.
enum class LossScope { Unselected, All };

std::string_view to_string(LossScope s);
LossScope loss_scope_from_string(std::string_view name);

struct AllocConfig {
    AllocStrategy strategy = AllocStrategy::Ewiem;
    int k = 0; ///< 0 resolves to ceil(S/4) at run time
    double eta = 0.1;
    int tu_window = 10;
    double hazard_threshold = 150.0;
    std::vector<int> static_ids; ///< empty selects 0..k-1
    LossScope loss_scope = LossScope::Unselected;
    /// Weight agreement at position i by (k - i + 1) instead of i.
    bool sim_reversed = false;

    int resolve_k(int num_locations) const;
    void validate() const;
};

/// Min-max normalization to [0, 1]; an all-equal vector maps to zeros.
Vector min_max_normalize(const Vector &raw);

/// Population variance of each row of an S x w prediction window, normalized.
Vector temporal_uncertainty(const Matrix &prediction_window);

/// t - last_sensed[s] (never sensed = -1), normalized.
Vector inference_freshness(std::span<const int> last_sensed, int t);

/// max(predicted, 0) / threshold clamped to [0, 1].
Vector alertness(const Vector &predicted, double hazard_threshold);

/// Location ids sorted by score descending, ties by ascending id.
std::vector<int> argsort_descending(const Vector &scores);

PriorityOrder combined_order(const ExpertScores &scores, const ExpertWeights &weights);
PriorityOrder expert_order(const ExpertScores &scores, Expert which);

/// sum_{i=1..k} w_i [a_i == b_i] with w_i = i (or k - i + 1 when reversed).
long sequence_similarity(std::span<const int> a, std::span<const int> b, int k,
                         bool reversed = false);

/// RMSE(Order, k) * sim(Order, Order_i).
double expert_loss(double cycle_rmse, long similarity);

/// raw / (rmse_scale * k(k+1)/2); zero when rmse_scale is zero.
double rescale_loss(double raw_loss, double rmse_scale, int k);

/// lambda_i <- lambda_i exp(-eta loss_i), renormalized to sum 1.
ExpertWeights ewiem_update(const ExpertWeights &weights, const Eigen::Vector3d &losses);

TaskAssignment select_topk(const PriorityOrder &order, int k, int t = 0);

TaskAssignment baseline_random(int num_locations, int k, Rng &rng, int t = 0);
TaskAssignment baseline_static(std::span<const int> fixed_ids, int k,
                               int num_locations, int t = 0);
/// Greedy farthest-point selection seeded at the smallest id that attains
/// the maximum pairwise distance. Ties go to the smaller id.
TaskAssignment baseline_coverage(std::span<const Location> locations, int k, int t = 0);

} // namespace sparsesense
