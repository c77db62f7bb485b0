#include "sparsesense/simulate.hpp"

#include "sparsesense/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sparsesense {

namespace {

constexpr std::uint64_t kAllocStream = 1;
constexpr std::uint64_t kSparsityStream = 2;
constexpr std::uint64_t kWeightsStream = 1000;

// Owns whichever forecaster the loop was configured with and refits it on
// the refresh cadence.
class Forecaster {
  public:
    Forecaster(const SimulationConfig &cfg, std::span<const Location> locations,
               int num_locations)
        : cfg_(cfg), locations_(locations), num_locations_(num_locations) {}

    int min_lag() const {
        return cfg_.predictor == PredictorKind::Dsar || cfg_.predictor == PredictorKind::Ar
                   ? cfg_.model.p
                   : 1;
    }

    void refresh(HistoryRef history, int t) {
        const int L = cfg_.model.window();
        const auto window = history.middleCols(t - L, L);
        switch (cfg_.predictor) {
        case PredictorKind::Dsar: {
            const auto weights = compute_weights(
                cfg_.model.weights, history, t, locations_, cfg_.model.p,
                derive_seed(cfg_.seed, kWeightsStream + static_cast<std::uint64_t>(t)));
            adopt(fit(window, weights, cfg_.model.p, cfg_.model.ridge, t));
            break;
        }
        case PredictorKind::Ar:
            adopt(fit(window, identity_weights(num_locations_, cfg_.model.p, t), cfg_.model.p,
                      cfg_.model.ridge, t));
            break;
        case PredictorKind::Persistence:
            model_ = persistence_model(num_locations_);
            break;
        case PredictorKind::Mean:
            mean_ = window.mean();
            break;
        }
    }

    Vector predict(HistoryRef history, int t) const {
        if (cfg_.predictor == PredictorKind::Mean) {
            return Vector::Constant(num_locations_, mean_);
        }
        return predict_next(model_, history, t);
    }

  private:
    // A fit on mostly imputed or predicted history can come out explosive
    // and then feed on its own predictions; pull it back to the unit circle.
    void adopt(const DsarModel &candidate) { model_ = stabilize(candidate); }

    const SimulationConfig &cfg_;
    std::span<const Location> locations_;
    int num_locations_;
    DsarModel model_;
    double mean_ = 0.0;
};

// Warmup columns: observed values, gaps filled forward then backward per
// location, and the warmup-wide observed mean for locations never observed.
Matrix impute_warmup(const MeasurementPanel &panel, int warmup) {
    const int S = panel.num_locations();
    Matrix out(S, warmup);
    double total = 0.0;
    int count = 0;
    for (int t = 0; t < warmup; ++t) {
        for (int s = 0; s < S; ++s) {
            if (panel.observed(s, t)) {
                total += panel.value(s, t);
                ++count;
            }
        }
    }
    const double fallback = count > 0 ? total / count : 0.0;
    for (int s = 0; s < S; ++s) {
        int first = -1;
        std::optional<double> last;
        for (int t = 0; t < warmup; ++t) {
            if (panel.observed(s, t)) {
                last = panel.value(s, t);
                if (first < 0) {
                    first = t;
                }
            }
            out(s, t) = last.value_or(fallback);
        }
        if (first > 0) {
            out.row(s).head(first).setConstant(panel.value(s, first));
        }
    }
    return out;
}

double sample_stddev(std::span<const double> xs) {
    if (xs.size() < 2) {
        return 0.0;
    }
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    double ss = 0.0;
    for (double x : xs) {
        ss += (x - mean) * (x - mean);
    }
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

ReportRow summarize(std::string strategy, double param, std::span<const double> values) {
    ReportRow row;
    row.strategy = std::move(strategy);
    row.param = param;
    row.mean_rmse = std::accumulate(values.begin(), values.end(), 0.0) /
                    static_cast<double>(values.size());
    row.stddev = sample_stddev(values);
    row.repeats = static_cast<int>(values.size());
    return row;
}

} // namespace

std::string_view to_string(PredictorKind k) {
    switch (k) {
    case PredictorKind::Dsar:
        return "dsar";
    case PredictorKind::Ar:
        return "ar";
    case PredictorKind::Persistence:
        return "persistence";
    case PredictorKind::Mean:
        return "mean";
    }
    return "unknown";
}

PredictorKind predictor_from_string(std::string_view name) {
    if (name == "dsar") return PredictorKind::Dsar;
    if (name == "ar") return PredictorKind::Ar;
    if (name == "persistence") return PredictorKind::Persistence;
    if (name == "mean") return PredictorKind::Mean;
    throw ConfigError("unknown predictor '" + std::string(name) + "'");
}

std::string_view to_string(SyntheticWeights k) {
    return k == SyntheticWeights::Kernel ? "kernel" : "identity";
}

SyntheticWeights synthetic_weights_from_string(std::string_view name) {
    if (name == "kernel") return SyntheticWeights::Kernel;
    if (name == "identity") return SyntheticWeights::Identity;
    throw ConfigError("unknown synthetic weight kind '" + std::string(name) + "'");
}

void SimulationConfig::validate() const {
    model.validate();
    alloc.validate();
    if (cycles < 0) {
        throw ConfigError("sim.cycles must be >= 1");
    }
    if (warmup < 0) {
        throw ConfigError("sim.warmup must be >= model.window");
    }
    const int w = resolve_warmup();
    if (w < model.window()) {
        throw ConfigError("sim.warmup must be >= model.window");
    }
    if (model.weights.per_lag && w < model.window() + model.p - 1) {
        throw ConfigError("sim.warmup must be >= model.window + model.p - 1 with "
                          "weights.per_lag");
    }
    if (!(sparsity >= 0.0 && sparsity < 1.0)) {
        throw ConfigError("sim.sparsity must be in [0, 1)");
    }
}

void SyntheticSpec::validate() const {
    if (num_locations < 1 || num_cycles < 1) {
        throw ConfigError("synthetic panel needs S >= 1 and T >= 1");
    }
    if (p < 1) {
        throw ConfigError("synthetic p must be >= 1");
    }
    if (!(noise_sigma >= 0.0)) {
        throw ConfigError("noise_sigma must be >= 0");
    }
    if (!(bandwidth > 0.0)) {
        throw ConfigError("bandwidth must be positive");
    }
    if (true_phi.size() > 0) {
        if (true_phi.rows() != num_locations || true_phi.cols() != p) {
            throw ConfigError("true_phi must be S x p");
        }
        if (true_phi.cwiseAbs().colwise().maxCoeff().sum() > 1.0) {
            throw ConfigError("true_phi must satisfy sum_i max_s |phi_i,s| <= 1");
        }
    } else if (!(phi_min >= 0.0 && phi_min <= phi_max && phi_max <= 1.0)) {
        throw ConfigError("phi range must satisfy 0 <= phi_min <= phi_max <= 1");
    }
    if (hotspot.enabled && !(hotspot.width > 0.0 && hotspot.step >= 0.0)) {
        throw ConfigError("hotspot width must be positive and step nonnegative");
    }
}

SyntheticResult generate_synthetic(const SyntheticSpec &spec) {
    spec.validate();
    const int S = spec.num_locations;
    const int T = spec.num_cycles;
    const int p = spec.p;
    Rng rng(spec.seed);

    std::vector<Location> locations = make_locations(S);
    for (auto &loc : locations) {
        const double x = rng.uniform();
        const double y = rng.uniform();
        loc.coords = Point(x, y);
    }

    Matrix phi = spec.true_phi;
    if (phi.size() == 0) {
        phi.resize(S, p);
        for (int i = 0; i < p; ++i) {
            for (int s = 0; s < S; ++s) {
                phi(s, i) = rng.uniform(spec.phi_min, spec.phi_max) / p;
            }
        }
    }

    DsarModel truth;
    truth.phi = phi;
    truth.weights = spec.weight_kind == SyntheticWeights::Kernel
                        ? distance_weights(locations, spec.bandwidth, p)
                        : identity_weights(S, p);
    truth.noise_cov_diag = Vector::Constant(S, spec.noise_sigma * spec.noise_sigma);

    const Vector drift =
        spec.base_level * (Vector::Ones(S) - phi.rowwise().sum());
    Point center(rng.uniform(), rng.uniform());

    // p leading columns hold the pre-sample state x(t <= 0) = 1.
    Matrix x = Matrix::Ones(S, T + p - 1);
    for (int t = 1; t < T; ++t) {
        const int col = t + p - 1;
        Vector next = drift;
        for (int i = 1; i <= p; ++i) {
            next.array() += phi.col(i - 1).array() *
                            (truth.weights.lag(i) * x.col(col - i)).array();
        }
        if (spec.hotspot.enabled) {
            const double w2 = spec.hotspot.width * spec.hotspot.width;
            for (int s = 0; s < S; ++s) {
                const double d2 = (*locations[static_cast<std::size_t>(s)].coords - center)
                                      .squaredNorm();
                next[s] += spec.hotspot.amplitude * std::exp(-d2 / w2);
            }
            for (int a = 0; a < 2; ++a) {
                double c = center[a] + spec.hotspot.step * rng.normal();
                // reflect back into the unit square
                c = std::fmod(std::abs(c), 2.0);
                center[a] = c > 1.0 ? 2.0 - c : c;
            }
        }
        if (spec.noise_sigma > 0.0) {
            for (int s = 0; s < S; ++s) {
                next[s] += spec.noise_sigma * rng.normal();
            }
        }
        x.col(col) = next;
    }

    MeasurementPanel panel(std::move(locations), x.rightCols(T));
    return SyntheticResult{std::move(panel), std::move(truth)};
}

MeasurementPanel apply_sparsity(const MeasurementPanel &panel, double fraction,
                                std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction < 1.0)) {
        throw InputDomainError("sparsity fraction must be in [0, 1)");
    }
    const int S = panel.num_locations();
    const int T = panel.num_cycles();
    const auto target = static_cast<long>(
        std::floor(fraction * static_cast<double>(S) * T + 1e-9));
    if (target == 0) {
        return panel;
    }

    std::vector<std::pair<int, int>> cells;
    std::vector<int> per_cycle(static_cast<std::size_t>(T), 0);
    for (int t = 0; t < T; ++t) {
        for (int s = 0; s < S; ++s) {
            if (panel.observed(s, t)) {
                cells.emplace_back(s, t);
                ++per_cycle[static_cast<std::size_t>(t)];
            }
        }
    }
    Rng rng(seed);
    for (std::size_t i = cells.size(); i > 1; --i) {
        const auto j = rng.index(i);
        std::swap(cells[i - 1], cells[j]);
    }

    Mask mask = panel.mask();
    long masked = 0;
    for (const auto &[s, t] : cells) {
        if (masked == target) {
            break;
        }
        auto &left = per_cycle[static_cast<std::size_t>(t)];
        if (left > 1) {
            mask(s, t) = false;
            --left;
            ++masked;
        }
    }
    return panel.with_mask(std::move(mask));
}

std::vector<CycleReport> run_closed_loop(const MeasurementPanel &input,
                                         const SimulationConfig &cfg) {
    cfg.validate();
    const int S = input.num_locations();
    const int T = input.num_cycles();
    const int warmup = cfg.resolve_warmup();
    const int cycles = cfg.cycles > 0 ? cfg.cycles : T - warmup;
    if (cycles < 1 || warmup + cycles > T) {
        throw InsufficientHistoryError(
            "panel has " + std::to_string(T) + " cycles but warmup + cycles = " +
            std::to_string(warmup + std::max(cycles, 1)));
    }
    const int k = cfg.alloc.resolve_k(S);
    const AllocStrategy strategy = cfg.alloc.strategy;
    const bool needs_coords = strategy == AllocStrategy::Coverage ||
                              (cfg.predictor == PredictorKind::Dsar &&
                               cfg.model.weights.strategy == WeightStrategy::Distance);
    if (needs_coords && !has_coords(input.locations())) {
        throw ConfigError("configured strategy requires location coordinates");
    }

    const MeasurementPanel panel =
        cfg.sparsity > 0.0
            ? apply_sparsity(input, cfg.sparsity, derive_seed(cfg.seed, kSparsityStream))
            : input;
    Rng alloc_rng(derive_seed(cfg.seed, kAllocStream));

    const int total = warmup + cycles;
    Matrix fused(S, total);
    Matrix predictions = Matrix::Zero(S, total);
    fused.leftCols(warmup) = impute_warmup(panel, warmup);

    Forecaster forecaster(cfg, panel.locations(), S);
    forecaster.refresh(fused.leftCols(warmup), warmup);

    const int tu_window = cfg.alloc.tu_window;
    const int first_prediction = std::max(forecaster.min_lag(), warmup - tu_window);
    for (int t = first_prediction; t < warmup; ++t) {
        predictions.col(t) = forecaster.predict(fused.leftCols(t), t);
    }

    std::optional<TaskAssignment> fixed;
    if (strategy == AllocStrategy::Static) {
        fixed = baseline_static(cfg.alloc.static_ids, k, S);
    } else if (strategy == AllocStrategy::Coverage) {
        fixed = baseline_coverage(panel.locations(), k);
    }

    std::vector<int> last_sensed(static_cast<std::size_t>(S), warmup - 1);
    ExpertWeights weights;
    weights.eta = cfg.alloc.eta;
    double rmse_scale = 0.0;

    std::vector<CycleReport> reports;
    reports.reserve(static_cast<std::size_t>(cycles));
    for (int t = warmup; t < total; ++t) {
        // (1)-(2) expert scores and assignment
        std::optional<PriorityOrder> order;
        ExpertScores scores;
        TaskAssignment assignment;
        if (strategy == AllocStrategy::Ewiem) {
            const int from = std::max(first_prediction, t - tu_window);
            scores.tu = temporal_uncertainty(predictions.middleCols(from, t - from));
            scores.if_ = inference_freshness(last_sensed, t);
            scores.at = alertness(predictions.col(t - 1), cfg.alloc.hazard_threshold);
            scores.t = t;
            order = combined_order(scores, weights);
            assignment = select_topk(*order, k, t);
        } else if (strategy == AllocStrategy::Random) {
            assignment = baseline_random(S, k, alloc_rng, t);
        } else {
            assignment = *fixed;
            assignment.t = t;
        }

        // (3) reveal ground truth at the assigned, unmasked cells
        std::map<int, double> observations;
        for (int s : assignment.ids) {
            if (panel.observed(s, t)) {
                observations.emplace(s, panel.value(s, t));
            }
        }

        // (4) predict and fuse
        CycleState state;
        state.t = t;
        state.predicted = forecaster.predict(fused.leftCols(t), t);
        state.fused = fuse_observations(state.predicted, observations);
        for (const auto &entry : observations) {
            state.observed_ids.push_back(entry.first);
        }
        fused.col(t) = state.fused;
        predictions.col(t) = state.predicted;

        // (5) error over the loss scope, never over panel-masked cells
        CycleReport report;
        report.t = t;
        report.assignment = assignment;
        std::vector<int> subset;
        std::vector<bool> selected(static_cast<std::size_t>(S), false);
        for (int s : assignment.ids) {
            selected[static_cast<std::size_t>(s)] = true;
        }
        for (int s = 0; s < S; ++s) {
            const bool in_scope = cfg.alloc.loss_scope == LossScope::All ||
                                  !selected[static_cast<std::size_t>(s)];
            if (in_scope && panel.observed(s, t)) {
                subset.push_back(s);
            }
        }
        if (k == S && cfg.alloc.loss_scope == LossScope::Unselected) {
            report.scored = true;
        } else if (!subset.empty()) {
            Vector truth = Vector::Zero(S);
            for (int s : subset) {
                truth[s] = panel.value(s, t);
            }
            report.cycle_rmse = rmse(state.predicted, truth, subset);
            report.scored = true;
            report.scored_count = static_cast<int>(subset.size());
            report.sse = report.cycle_rmse * report.cycle_rmse * report.scored_count;
        }

        // (6) exponential-weights update of the experts
        if (order && report.scored && k < S) {
            rmse_scale = std::max(rmse_scale, report.cycle_rmse);
            Eigen::Vector3d losses;
            for (Expert e : kExperts) {
                const auto mine = expert_order(scores, e);
                const long sim = sequence_similarity(order->sequence, mine.sequence, k,
                                                     cfg.alloc.sim_reversed);
                losses[static_cast<int>(e)] =
                    rescale_loss(expert_loss(report.cycle_rmse, sim), rmse_scale, k);
            }
            weights = ewiem_update(weights, losses);
        }
        report.lambdas = weights.lambdas;

        for (int s : assignment.ids) {
            last_sensed[static_cast<std::size_t>(s)] = t;
        }

        // (7) refresh weights and refit on the cadence
        if ((t + 1 - warmup) % cfg.model.refresh_interval == 0 && t + 1 < total) {
            forecaster.refresh(fused.leftCols(t + 1), t + 1);
        }

        report.fused = std::move(state.fused);
        report.predicted = std::move(state.predicted);
        reports.push_back(std::move(report));
    }
    return reports;
}

double overall_rmse(std::span<const CycleReport> reports, bool pooled) {
    double sum = 0.0;
    long n = 0;
    double sse = 0.0;
    long count = 0;
    for (const auto &r : reports) {
        if (!r.scored) {
            continue;
        }
        sum += r.cycle_rmse;
        ++n;
        sse += r.sse;
        count += r.scored_count;
    }
    if (pooled) {
        return count > 0 ? std::sqrt(sse / static_cast<double>(count)) : 0.0;
    }
    return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

std::uint64_t run_seed(std::uint64_t base, int repeat) {
    return base ^ static_cast<std::uint64_t>(repeat);
}

ExperimentResult sparsity_sweep(const MeasurementPanel &panel,
                                std::span<const double> sparsities,
                                std::span<const PredictorKind> predictors,
                                const SimulationConfig &cfg, int repeats,
                                bool keep_traces) {
    if (repeats < 1) {
        throw ConfigError("repeats must be >= 1");
    }
    std::vector<double> sorted(sparsities.begin(), sparsities.end());
    std::sort(sorted.begin(), sorted.end());
    ExperimentResult out;
    for (double sparsity : sorted) {
        for (PredictorKind predictor : predictors) {
            std::vector<double> values;
            for (int r = 0; r < repeats; ++r) {
                SimulationConfig run = cfg;
                run.sparsity = sparsity;
                run.predictor = predictor;
                run.seed = run_seed(cfg.seed, r);
                auto reports = run_closed_loop(panel, run);
                values.push_back(overall_rmse(reports, cfg.pooled));
                if (keep_traces) {
                    out.runs.push_back(
                        RunTrace{std::string(to_string(predictor)), sparsity, r, std::move(reports)});
                }
            }
            out.rows.push_back(summarize(std::string(to_string(predictor)), sparsity, values));
        }
    }
    return out;
}

ExperimentResult compare_allocations(const MeasurementPanel &panel,
                                     std::span<const AllocStrategy> strategies,
                                     std::span<const int> k_values,
                                     const SimulationConfig &cfg, int repeats,
                                     bool keep_traces) {
    if (repeats < 1) {
        throw ConfigError("repeats must be >= 1");
    }
    ExperimentResult out;
    for (AllocStrategy strategy : strategies) {
        for (int k : k_values) {
            if (k < 1) {
                throw ConfigError("alloc.k must be >= 1");
            }
            std::vector<double> values;
            for (int r = 0; r < repeats; ++r) {
                SimulationConfig run = cfg;
                run.alloc.strategy = strategy;
                run.alloc.k = k;
                run.seed = run_seed(cfg.seed, r);
                auto reports = run_closed_loop(panel, run);
                values.push_back(overall_rmse(reports, cfg.pooled));
                if (keep_traces) {
                    out.runs.push_back(RunTrace{std::string(to_string(strategy)),
                                                static_cast<double>(k), r,
                                                std::move(reports)});
                }
            }
            out.rows.push_back(summarize(std::string(to_string(strategy)), k, values));
        }
    }
    return out;
}

} // namespace sparsesense
