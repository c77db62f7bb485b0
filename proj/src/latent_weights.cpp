#include "sparsesense/latent_weights.hpp"

#include "sparsesense/rng.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <string>

namespace sparsesense {

namespace {

constexpr double kDenominatorFloor = std::numeric_limits<double>::min();

double reconstruction_error(const Matrix &M, const Matrix &U, const Matrix &V) {
    return (M - U * V).norm();
}

void check_lags(int lags) {
    if (lags < 1) {
        throw InputDomainError("weight set needs at least one lag");
    }
}

SpatialWeightSet replicate(const Matrix &W, int lags, int computed_at) {
    check_lags(lags);
    SpatialWeightSet out;
    out.matrices.assign(static_cast<std::size_t>(lags), W);
    out.computed_at = computed_at;
    return out;
}

} // namespace

std::string_view to_string(WeightStrategy s) {
    switch (s) {
    case WeightStrategy::NmfCosine:
        return "nmf_cosine";
    case WeightStrategy::Correlation:
        return "correlation";
    case WeightStrategy::Distance:
        return "distance";
    case WeightStrategy::Identity:
        return "identity";
    }
    return "unknown";
}

WeightStrategy weight_strategy_from_string(std::string_view name) {
    if (name == "nmf_cosine") return WeightStrategy::NmfCosine;
    if (name == "correlation") return WeightStrategy::Correlation;
    if (name == "distance") return WeightStrategy::Distance;
    if (name == "identity") return WeightStrategy::Identity;
    throw ConfigError("unknown weight strategy '" + std::string(name) + "'");
}

Matrix build_window_matrix(HistoryRef fused_history, int t, int window) {
    if (window < 1) {
        throw InputDomainError("window length must be positive");
    }
    if (t < window) {
        throw InsufficientHistoryError("window of " + std::to_string(window) +
                                       " cycles needs t >= L, got t = " +
                                       std::to_string(t));
    }
    if (t > fused_history.cols()) {
        throw InsufficientHistoryError("fused history ends before cycle t");
    }
    Matrix M = fused_history.middleCols(t - window, window);
    M.array() -= M.minCoeff();
    return M;
}

NmfResult nmf(const Matrix &M, int rank, int iters, std::uint64_t seed) {
    const auto rows = M.rows();
    const auto cols = M.cols();
    if (rank < 1 || rank > std::min(rows, cols)) {
        throw InputDomainError("nmf rank " + std::to_string(rank) +
                               " outside [1, min(S, L)]");
    }
    if (iters < 0) {
        throw InputDomainError("nmf iteration count must be nonnegative");
    }
    if ((M.array() < 0.0).any()) {
        throw InputDomainError("nmf input has negative entries");
    }

    const double mean = M.mean();
    const double scale = mean > 0.0 ? std::sqrt(mean / rank) : 1.0;
    Rng rng(seed);
    NmfResult out;
    out.U.resize(rows, rank);
    out.V.resize(rank, cols);
    for (Eigen::Index j = 0; j < rank; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            out.U(i, j) = scale * rng.uniform();
        }
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rank; ++i) {
            out.V(i, j) = scale * rng.uniform();
        }
    }

    Matrix &U = out.U;
    Matrix &V = out.V;
    out.residuals.reserve(static_cast<std::size_t>(iters) + 1);
    out.residuals.push_back(reconstruction_error(M, U, V));
    for (int it = 0; it < iters; ++it) {
        const Matrix UtM = U.transpose() * M;
        const Matrix UtUV = (U.transpose() * U) * V;
        V.array() *= UtM.array() / UtUV.array().max(kDenominatorFloor);

        const Matrix MVt = M * V.transpose();
        const Matrix UVVt = U * (V * V.transpose());
        U.array() *= MVt.array() / UVVt.array().max(kDenominatorFloor);

        const double err = reconstruction_error(M, U, V);
        assert(err <= out.residuals.back() * (1.0 + 1e-9) + 1e-12);
        out.residuals.push_back(err);
    }
    return out;
}

LatentFeatureMatrix extract_latent_features(HistoryRef fused_history, int t,
                                            int window, int rank, int iters,
                                            std::uint64_t seed) {
    const Matrix M = build_window_matrix(fused_history, t, window);
    NmfResult f = nmf(M, rank, iters, seed);
    LatentFeatureMatrix out;
    out.U = f.U.array() + kLatentSmoothing;
    out.rank = rank;
    out.window_end = t;
    return out;
}

Matrix latent_similarity(const LatentFeatureMatrix &features) {
    const Matrix &U = features.U;
    const auto S = U.rows();
    const Vector norms = U.rowwise().norm();
    Matrix sim = Matrix::Zero(S, S);
    for (Eigen::Index s = 0; s < S; ++s) {
        for (Eigen::Index j = s; j < S; ++j) {
            double c = 0.0;
            if (norms[s] > 0.0 && norms[j] > 0.0) {
                c = U.row(s).dot(U.row(j)) / (norms[s] * norms[j]);
                c = std::clamp(c, 0.0, 1.0);
            }
            sim(s, j) = c;
            sim(j, s) = c;
        }
    }
    for (Eigen::Index s = 0; s < S; ++s) {
        if (!(norms[s] > 0.0)) {
            // zero latent row: cosine is undefined, fall back to uniform
            sim.row(s).setOnes();
            sim.col(s).setOnes();
        }
        sim(s, s) = 1.0;
    }
    return sim;
}

Matrix row_normalize(const Matrix &raw) {
    Matrix W = raw;
    for (Eigen::Index s = 0; s < W.rows(); ++s) {
        const double sum = W.row(s).sum();
        if (!(sum > 0.0) || !std::isfinite(sum)) {
            throw NumericalError("weight row " + std::to_string(s) +
                                 " has non-positive sum");
        }
        W.row(s) /= sum;
    }
    return W;
}

SpatialWeightSet weights_from_similarity(const Matrix &similarity, int lags,
                                         int computed_at) {
    if (similarity.rows() != similarity.cols()) {
        throw InputDomainError("similarity matrix must be square");
    }
    return replicate(row_normalize(similarity), lags, computed_at);
}

SpatialWeightSet distance_weights(std::span<const Location> locations,
                                  double bandwidth, int lags, int computed_at) {
    if (!has_coords(locations)) {
        throw ConfigError("distance weights require coordinates for every location");
    }
    if (!(bandwidth > 0.0)) {
        throw ConfigError("weights.bandwidth must be positive");
    }
    const auto S = static_cast<Eigen::Index>(locations.size());
    Matrix raw(S, S);
    const double h2 = bandwidth * bandwidth;
    for (Eigen::Index s = 0; s < S; ++s) {
        for (Eigen::Index j = 0; j < S; ++j) {
            const double d2 = (*locations[s].coords - *locations[j].coords).squaredNorm();
            raw(s, j) = std::exp(-d2 / h2);
        }
    }
    return replicate(row_normalize(raw), lags, computed_at);
}

namespace {

Matrix correlation_matrix(const Matrix &window) {
    const auto S = window.rows();
    const auto L = window.cols();
    Matrix centered = window.colwise() - window.rowwise().mean();
    Vector ss = centered.rowwise().squaredNorm();
    std::vector<bool> flat(static_cast<std::size_t>(S));
    for (Eigen::Index s = 0; s < S; ++s) {
        const double level = std::max(1.0, window.row(s).cwiseAbs().maxCoeff());
        flat[static_cast<std::size_t>(s)] =
            ss[s] <= static_cast<double>(L) * (1e-12 * level) * (1e-12 * level);
    }
    Matrix raw = Matrix::Identity(S, S);
    for (Eigen::Index s = 0; s < S; ++s) {
        if (flat[static_cast<std::size_t>(s)]) {
            continue;
        }
        for (Eigen::Index j = 0; j < S; ++j) {
            if (j == s || flat[static_cast<std::size_t>(j)]) {
                continue;
            }
            const double r = centered.row(s).dot(centered.row(j)) /
                             std::sqrt(ss[s] * ss[j]);
            raw(s, j) = std::min(1.0, std::abs(r));
        }
    }
    return raw;
}

} // namespace

SpatialWeightSet correlation_weights(HistoryRef fused_history, int window,
                                     int lags, int computed_at) {
    if (window < 3) {
        throw InputDomainError("correlation weights need a window of at least 3");
    }
    if (fused_history.cols() < window) {
        throw InsufficientHistoryError("history shorter than correlation window");
    }
    const Matrix W = fused_history.rightCols(window);
    return replicate(row_normalize(correlation_matrix(W)), lags, computed_at);
}

SpatialWeightSet identity_weights(int num_locations, int lags, int computed_at) {
    return replicate(Matrix::Identity(num_locations, num_locations), lags,
                     computed_at);
}

int resolve_rank(const WeightsConfig &cfg, int num_locations) {
    int r = cfg.rank > 0 ? cfg.rank : std::min(5, num_locations - 1);
    r = std::max(1, std::min({r, num_locations, cfg.window}));
    return r;
}

SpatialWeightSet compute_weights(const WeightsConfig &cfg, HistoryRef fused_history,
                                 int t, std::span<const Location> locations,
                                 int lags, std::uint64_t seed) {
    check_lags(lags);
    const int S = static_cast<int>(fused_history.rows());
    switch (cfg.strategy) {
    case WeightStrategy::Identity:
        return identity_weights(S, lags, t);
    case WeightStrategy::Distance:
        return distance_weights(locations, cfg.bandwidth, lags, t);
    case WeightStrategy::Correlation:
    case WeightStrategy::NmfCosine:
        break;
    }

    const int shifts = cfg.per_lag ? lags : 1;
    SpatialWeightSet out;
    out.computed_at = t;
    for (int i = 0; i < shifts; ++i) {
        const int end = t - i;
        Matrix W;
        if (cfg.strategy == WeightStrategy::Correlation) {
            if (end < cfg.window) {
                throw InsufficientHistoryError("not enough history for correlation window");
            }
            W = correlation_weights(fused_history.leftCols(end), cfg.window, 1, t)
                    .matrices.front();
        } else {
            const auto features = extract_latent_features(
                fused_history, end, cfg.window, resolve_rank(cfg, S),
                cfg.nmf_iters, derive_seed(seed, static_cast<std::uint64_t>(i)));
            W = row_normalize(latent_similarity(features));
        }
        out.matrices.push_back(std::move(W));
    }
    while (out.lags() < lags) {
        out.matrices.push_back(out.matrices.front());
    }
    return out;
}

} // namespace sparsesense
