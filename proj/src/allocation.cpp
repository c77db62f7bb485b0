#include "sparsesense/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace sparsesense {

namespace {

void check_k(int k, int num_locations) {
    if (k < 1 || k > num_locations) {
        throw InputDomainError("k = " + std::to_string(k) + " outside [1, " +
                               std::to_string(num_locations) + "]");
    }
}

} // namespace

const Vector &ExpertScores::of(Expert e) const {
    switch (e) {
    case Expert::TemporalUncertainty:
        return tu;
    case Expert::InferenceFreshness:
        return if_;
    case Expert::Alertness:
        return at;
    }
    return tu;
}

std::string_view to_string(AllocStrategy s) {
    switch (s) {
    case AllocStrategy::Ewiem:
        return "ewiem";
    case AllocStrategy::Random:
        return "random";
    case AllocStrategy::Static:
        return "static";
    case AllocStrategy::Coverage:
        return "coverage";
    }
    return "unknown";
}

AllocStrategy alloc_strategy_from_string(std::string_view name) {
    if (name == "ewiem") return AllocStrategy::Ewiem;
    if (name == "random") return AllocStrategy::Random;
    if (name == "static") return AllocStrategy::Static;
    if (name == "coverage") return AllocStrategy::Coverage;
    throw ConfigError("unknown allocation strategy '" + std::string(name) + "'");
}

std::string_view to_string(LossScope s) {
    return s == LossScope::Unselected ? "unselected" : "all";
}

LossScope loss_scope_from_string(std::string_view name) {
    if (name == "unselected") return LossScope::Unselected;
    if (name == "all") return LossScope::All;
    throw ConfigError("unknown loss scope '" + std::string(name) + "'");
}

int AllocConfig::resolve_k(int num_locations) const {
    const int resolved = k > 0 ? k : (num_locations + 3) / 4;
    if (resolved > num_locations) {
        throw ConfigError("alloc.k = " + std::to_string(resolved) +
                          " exceeds the number of locations " +
                          std::to_string(num_locations));
    }
    return resolved;
}

void AllocConfig::validate() const {
    if (k < 0) {
        throw ConfigError("alloc.k must be >= 1");
    }
    if (!(eta >= 0.0) || !std::isfinite(eta)) {
        throw ConfigError("alloc.eta must be >= 0");
    }
    if (tu_window < 1) {
        throw ConfigError("alloc.tu_window must be >= 1");
    }
    if (!(hazard_threshold > 0.0)) {
        throw ConfigError("alloc.hazard_threshold must be positive");
    }
    for (int id : static_ids) {
        if (id < 0) {
            throw ConfigError("alloc.static_ids must be nonnegative");
        }
    }
}

Vector min_max_normalize(const Vector &raw) {
    if (raw.size() == 0) {
        return raw;
    }
    const double lo = raw.minCoeff();
    const double hi = raw.maxCoeff();
    if (!(hi > lo)) {
        return Vector::Zero(raw.size());
    }
    return (raw.array() - lo) / (hi - lo);
}

Vector temporal_uncertainty(const Matrix &prediction_window) {
    if (prediction_window.cols() < 1) {
        throw InputDomainError("temporal uncertainty needs at least one prediction");
    }
    const Matrix centered =
        prediction_window.colwise() - prediction_window.rowwise().mean();
    const Vector var = centered.rowwise().squaredNorm() /
                       static_cast<double>(prediction_window.cols());
    return min_max_normalize(var);
}

Vector inference_freshness(std::span<const int> last_sensed, int t) {
    Vector raw(static_cast<Eigen::Index>(last_sensed.size()));
    for (std::size_t s = 0; s < last_sensed.size(); ++s) {
        if (last_sensed[s] > t) {
            throw InputDomainError("location sensed after the current cycle");
        }
        raw[static_cast<Eigen::Index>(s)] = static_cast<double>(t - last_sensed[s]);
    }
    return min_max_normalize(raw);
}

Vector alertness(const Vector &predicted, double hazard_threshold) {
    if (!(hazard_threshold > 0.0)) {
        throw ConfigError("alloc.hazard_threshold must be positive");
    }
    return (predicted.array().max(0.0) / hazard_threshold).min(1.0);
}

std::vector<int> argsort_descending(const Vector &scores) {
    std::vector<int> ids(static_cast<std::size_t>(scores.size()));
    std::iota(ids.begin(), ids.end(), 0);
    std::stable_sort(ids.begin(), ids.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });
    return ids;
}

PriorityOrder combined_order(const ExpertScores &scores, const ExpertWeights &weights) {
    PriorityOrder out;
    out.scores = weights.lambdas[0] * scores.tu + weights.lambdas[1] * scores.if_ +
                 weights.lambdas[2] * scores.at;
    out.sequence = argsort_descending(out.scores);
    return out;
}

PriorityOrder expert_order(const ExpertScores &scores, Expert which) {
    PriorityOrder out;
    out.scores = scores.of(which);
    out.sequence = argsort_descending(out.scores);
    return out;
}

long sequence_similarity(std::span<const int> a, std::span<const int> b, int k,
                         bool reversed) {
    if (a.size() != b.size()) {
        throw InputDomainError("sequences differ in length");
    }
    check_k(k, static_cast<int>(a.size()));
    long sim = 0;
    for (int i = 1; i <= k; ++i) {
        if (a[static_cast<std::size_t>(i - 1)] == b[static_cast<std::size_t>(i - 1)]) {
            sim += reversed ? (k - i + 1) : i;
        }
    }
    return sim;
}

double expert_loss(double cycle_rmse, long similarity) {
    if (cycle_rmse < 0.0 || similarity < 0) {
        throw InputDomainError("expert loss inputs must be nonnegative");
    }
    return cycle_rmse * static_cast<double>(similarity);
}

double rescale_loss(double raw_loss, double rmse_scale, int k) {
    if (!(rmse_scale > 0.0)) {
        return 0.0;
    }
    const double norm = static_cast<double>(k) * (k + 1) / 2.0;
    return raw_loss / (rmse_scale * norm);
}

ExpertWeights ewiem_update(const ExpertWeights &weights, const Eigen::Vector3d &losses) {
    if (!losses.allFinite() || (losses.array() < 0.0).any()) {
        throw InputDomainError("expert losses must be finite and nonnegative");
    }
    // Shift by the smallest loss: the renormalization cancels it and the
    // exponent stays <= 0 so nothing overflows.
    const Eigen::Vector3d shifted = losses.array() - losses.minCoeff();
    ExpertWeights out = weights;
    out.lambdas = weights.lambdas.array() * (-weights.eta * shifted.array()).exp();
    const double floor = 1e-300;
    out.lambdas = out.lambdas.cwiseMax(floor);
    out.lambdas /= out.lambdas.sum();
    return out;
}

TaskAssignment select_topk(const PriorityOrder &order, int k, int t) {
    check_k(k, static_cast<int>(order.sequence.size()));
    TaskAssignment out;
    out.ids.assign(order.sequence.begin(), order.sequence.begin() + k);
    std::sort(out.ids.begin(), out.ids.end());
    out.t = t;
    return out;
}

TaskAssignment baseline_random(int num_locations, int k, Rng &rng, int t) {
    check_k(k, num_locations);
    std::vector<int> ids(static_cast<std::size_t>(num_locations));
    std::iota(ids.begin(), ids.end(), 0);
    // partial Fisher-Yates: the first k slots are a uniform k-subset
    for (int i = 0; i < k; ++i) {
        const auto j = static_cast<std::size_t>(i) +
                       rng.index(static_cast<std::uint64_t>(num_locations - i));
        std::swap(ids[static_cast<std::size_t>(i)], ids[j]);
    }
    TaskAssignment out;
    out.ids.assign(ids.begin(), ids.begin() + k);
    std::sort(out.ids.begin(), out.ids.end());
    out.t = t;
    return out;
}

TaskAssignment baseline_static(std::span<const int> fixed_ids, int k,
                               int num_locations, int t) {
    check_k(k, num_locations);
    TaskAssignment out;
    out.t = t;
    if (fixed_ids.empty()) {
        out.ids.resize(static_cast<std::size_t>(k));
        std::iota(out.ids.begin(), out.ids.end(), 0);
        return out;
    }
    if (static_cast<int>(fixed_ids.size()) != k) {
        throw ConfigError("alloc.static_ids has " + std::to_string(fixed_ids.size()) +
                          " entries but alloc.k = " + std::to_string(k));
    }
    out.ids.assign(fixed_ids.begin(), fixed_ids.end());
    std::sort(out.ids.begin(), out.ids.end());
    if (std::adjacent_find(out.ids.begin(), out.ids.end()) != out.ids.end()) {
        throw ConfigError("alloc.static_ids contains duplicates");
    }
    if (out.ids.front() < 0 || out.ids.back() >= num_locations) {
        throw ConfigError("alloc.static_ids contains an unknown location id");
    }
    return out;
}

TaskAssignment baseline_coverage(std::span<const Location> locations, int k, int t) {
    if (!has_coords(locations)) {
        throw ConfigError("coverage allocation requires coordinates for every location");
    }
    const int S = static_cast<int>(locations.size());
    check_k(k, S);
    auto dist = [&](int a, int b) {
        return (*locations[static_cast<std::size_t>(a)].coords -
                *locations[static_cast<std::size_t>(b)].coords)
            .norm();
    };

    double best = -1.0;
    int seed = 0;
    for (int a = 0; a < S; ++a) {
        for (int b = a + 1; b < S; ++b) {
            const double d = dist(a, b);
            if (d > best) {
                best = d;
                seed = a;
            } else if (d == best) {
                seed = std::min(seed, a);
            }
        }
    }

    std::vector<int> chosen{seed};
    std::vector<double> nearest(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s) {
        nearest[static_cast<std::size_t>(s)] = dist(s, seed);
    }
    std::vector<bool> taken(static_cast<std::size_t>(S), false);
    taken[static_cast<std::size_t>(seed)] = true;
    while (static_cast<int>(chosen.size()) < k) {
        int next = -1;
        for (int s = 0; s < S; ++s) {
            if (taken[static_cast<std::size_t>(s)]) {
                continue;
            }
            if (next < 0 || nearest[static_cast<std::size_t>(s)] >
                                nearest[static_cast<std::size_t>(next)]) {
                next = s;
            }
        }
        taken[static_cast<std::size_t>(next)] = true;
        chosen.push_back(next);
        for (int s = 0; s < S; ++s) {
            nearest[static_cast<std::size_t>(s)] =
                std::min(nearest[static_cast<std::size_t>(s)], dist(s, next));
        }
    }
    TaskAssignment out;
    out.ids = std::move(chosen);
    std::sort(out.ids.begin(), out.ids.end());
    out.t = t;
    return out;
}

} // namespace sparsesense
