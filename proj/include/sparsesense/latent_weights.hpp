// Dynamic spatial weight matrices.
//
// The primary strategy factorizes a min-shifted sliding window of the fused
// history with multiplicative-update NMF, treats each location's row of U as
// its latent feature vector, and row-normalizes the cosine similarity of
// those vectors. Correlation, Gaussian distance-kernel and identity weights
// are provided as alternatives and baselines.
//
// History matrices are S x T' with column t holding the fused vector of
// cycle t.
#pragma once

#include "sparsesense/core.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace sparsesense {

using HistoryRef = Eigen::Ref<const Matrix>;

/// Additive smoothing applied to NMF factors after extraction.
inline constexpr double kLatentSmoothing = 1e-9;

struct LatentFeatureMatrix {
    Matrix U; ///< S x r, nonnegative, no all-zero row
    int rank = 0;
    int window_end = 0;
};

/// Per-lag row-stochastic S x S matrices; matrices[i-1] is the lag-i weight.
struct SpatialWeightSet {
    std::vector<Matrix> matrices;
    int computed_at = 0;

    int lags() const { return static_cast<int>(matrices.size()); }
    const Matrix &lag(int i) const { return matrices.at(static_cast<std::size_t>(i - 1)); }
};

struct NmfResult {
    Matrix U; ///< S x r
    Matrix V; ///< r x L
    /// Frobenius reconstruction error before the first update and after
    /// every iteration (size iters + 1).
    std::vector<double> residuals;
};

enum class WeightStrategy { NmfCosine, Correlation, Distance, Identity };

std::string_view to_string(WeightStrategy s);
WeightStrategy weight_strategy_from_string(std::string_view name);

struct WeightsConfig {
    WeightStrategy strategy = WeightStrategy::NmfCosine;
    int window = 48;     ///< L, cycles feeding each refresh
    int rank = 0;        ///< 0 selects min(5, S-1)
    int nmf_iters = 200;
    double bandwidth = 0.3;
    /// Build lag i from a window shifted back by i-1 cycles instead of
    /// reusing one matrix for every lag.
    bool per_lag = false;
};

/// Last L fused columns before t, shifted by the global window minimum.
Matrix build_window_matrix(HistoryRef fused_history, int t, int window);

/// Lee-Seung multiplicative updates for min ||M - UV||_F. Deterministic for a
/// given seed.
NmfResult nmf(const Matrix &M, int rank, int iters, std::uint64_t seed);

/// NMF on the window ending at t, with kLatentSmoothing added to U.
LatentFeatureMatrix extract_latent_features(HistoryRef fused_history, int t,
                                            int window, int rank, int iters,
                                            std::uint64_t seed);

/// Cosine similarity of latent rows, clamped at 0, unit diagonal.
Matrix latent_similarity(const LatentFeatureMatrix &features);

/// Row-normalizes a similarity matrix and replicates it for `lags` lags.
SpatialWeightSet weights_from_similarity(const Matrix &similarity, int lags,
                                         int computed_at = 0);

/// Gaussian kernel exp(-d^2 / bandwidth^2), row-normalized.
SpatialWeightSet distance_weights(std::span<const Location> locations,
                                  double bandwidth, int lags,
                                  int computed_at = 0);

/// |Pearson correlation| over the last `window` columns, unit diagonal,
/// row-normalized. Zero-variance locations get an identity row.
SpatialWeightSet correlation_weights(HistoryRef fused_history, int window,
                                     int lags, int computed_at = 0);

SpatialWeightSet identity_weights(int num_locations, int lags,
                                  int computed_at = 0);

/// Divides each row by its sum. Throws NumericalError on a non-positive sum.
Matrix row_normalize(const Matrix &raw);

/// Computes the configured weight set at cycle t from history [.., t).
SpatialWeightSet compute_weights(const WeightsConfig &cfg, HistoryRef fused_history,
                                 int t, std::span<const Location> locations,
                                 int lags, std::uint64_t seed);

/// Resolved latent rank for S locations (cfg.rank or min(5, S-1), at least 1).
int resolve_rank(const WeightsConfig &cfg, int num_locations);

} // namespace sparsesense
