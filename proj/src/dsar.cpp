#include "sparsesense/dsar.hpp"

#include <Eigen/Eigenvalues>

#include <string>

namespace sparsesense {

void DsarConfig::validate() const {
    if (p < 1) {
        throw ConfigError("model.p must be >= 1");
    }
    if (!(ridge >= 0.0)) {
        throw ConfigError("model.ridge must be >= 0");
    }
    if (refresh_interval < 1) {
        throw ConfigError("model.refresh must be >= 1");
    }
    if (weights.window < 3 * p || weights.window <= p) {
        throw ConfigError("model.window must be >= 3 * model.p");
    }
    if (weights.window < 3 && weights.strategy == WeightStrategy::Correlation) {
        throw ConfigError("model.window must be >= 3 for correlation weights");
    }
    if (weights.nmf_iters < 0) {
        throw ConfigError("weights.nmf_iters must be >= 0");
    }
    if (weights.rank < 0) {
        throw ConfigError("weights.rank must be >= 0");
    }
    if (!(weights.bandwidth > 0.0)) {
        throw ConfigError("weights.bandwidth must be positive");
    }
}

Vector regressor(const SpatialWeightSet &weights, HistoryRef history, int t, int lag) {
    if (lag < 1 || lag > weights.lags()) {
        throw InputDomainError("lag " + std::to_string(lag) + " outside weight set");
    }
    if (t - lag < 0 || t - lag >= history.cols()) {
        throw InputDomainError("lagged cycle " + std::to_string(t - lag) +
                               " outside history");
    }
    const Matrix &W = weights.lag(lag);
    if (W.cols() != history.rows()) {
        throw InputDomainError("weight matrix does not match location count");
    }
    return W * history.col(t - lag);
}

DsarModel fit(HistoryRef fused_history, const SpatialWeightSet &weights, int p,
              double ridge, int fitted_at) {
    if (p < 1 || p > weights.lags()) {
        throw InputDomainError("lag order must be in [1, weight set lags]");
    }
    if (ridge < 0.0) {
        throw InputDomainError("ridge must be nonnegative");
    }
    const int T = static_cast<int>(fused_history.cols());
    const auto S = fused_history.rows();
    if (T < 3 * p) {
        throw InsufficientHistoryError("fit needs at least " + std::to_string(3 * p) +
                                       " cycles of history, got " + std::to_string(T));
    }

    // Z[i-1] holds z_i(t) for every usable t as columns.
    const int n = T - p;
    std::vector<Matrix> Z;
    Z.reserve(static_cast<std::size_t>(p));
    for (int i = 1; i <= p; ++i) {
        Z.push_back(weights.lag(i) * fused_history.middleCols(p - i, n));
    }
    const auto targets = fused_history.middleCols(p, n);

    DsarModel model;
    model.phi.resize(S, p);
    model.weights = weights;
    model.noise_cov_diag = Vector::Zero(S);
    model.fitted_at = fitted_at;

    Matrix A(p, p);
    Vector b(p);
    Matrix design(n, p);
    for (Eigen::Index s = 0; s < S; ++s) {
        for (int i = 0; i < p; ++i) {
            design.col(i) = Z[static_cast<std::size_t>(i)].row(s).transpose();
        }
        A.noalias() = design.transpose() * design;
        A.diagonal().array() += ridge;
        b.noalias() = design.transpose() * targets.row(s).transpose();

        Eigen::LDLT<Matrix> ldlt(A);
        const bool singular = ldlt.info() != Eigen::Success ||
                              !(A.diagonal().minCoeff() > 0.0) ||
                              (ridge == 0.0 && ldlt.rcond() < 1e-14);
        if (singular) {
            throw NumericalError("normal matrix for location " + std::to_string(s) +
                                 " is singular; use a positive model.ridge");
        }
        model.phi.row(s) = ldlt.solve(b).transpose();
    }
    return model;
}

Vector predict_next(const DsarModel &model, HistoryRef fused_history, int t) {
    const int p = model.lags();
    if (t < p) {
        throw InsufficientHistoryError("prediction at cycle " + std::to_string(t) +
                                       " needs " + std::to_string(p) + " lags");
    }
    if (t > fused_history.cols()) {
        throw InsufficientHistoryError("history ends before cycle t-1");
    }
    if (fused_history.rows() != model.num_locations()) {
        throw InputDomainError("history does not match model location count");
    }
    Vector out = Vector::Zero(model.num_locations());
    for (int i = 1; i <= p; ++i) {
        out.array() += model.phi.col(i - 1).array() *
                       regressor(model.weights, fused_history, t, i).array();
    }
    return out;
}

DsarModel estimate_noise(const DsarModel &model, HistoryRef fused_history) {
    const int p = model.lags();
    const int T = static_cast<int>(fused_history.cols());
    if (T - p < 2) {
        throw InsufficientHistoryError("noise estimate needs at least two residuals");
    }
    const auto S = fused_history.rows();
    Matrix residuals(S, T - p);
    for (int t = p; t < T; ++t) {
        residuals.col(t - p) = fused_history.col(t) - predict_next(model, fused_history, t);
    }
    DsarModel out = model;
    const Matrix centered = residuals.colwise() - residuals.rowwise().mean();
    out.noise_cov_diag = centered.rowwise().squaredNorm() / static_cast<double>(T - p);
    return out;
}

DsarModel persistence_model(int num_locations, int p) {
    if (p < 1) {
        throw InputDomainError("lag order must be >= 1");
    }
    DsarModel model;
    model.phi = Matrix::Zero(num_locations, p);
    model.phi.col(0).setOnes();
    model.weights = identity_weights(num_locations, p);
    model.noise_cov_diag = Vector::Zero(num_locations);
    return model;
}

double spectral_radius(const DsarModel &model) {
    const auto S = model.phi.rows();
    const int p = model.lags();
    Matrix companion = Matrix::Zero(S * p, S * p);
    for (int i = 1; i <= p; ++i) {
        companion.block(0, S * (i - 1), S, S) =
            model.phi.col(i - 1).asDiagonal() * model.weights.lag(i);
    }
    if (p > 1) {
        companion.bottomLeftCorner(S * (p - 1), S * (p - 1)).setIdentity();
    }
    return companion.eigenvalues().cwiseAbs().maxCoeff();
}

DsarModel stabilize(const DsarModel &model, double limit) {
    if (!(limit > 0.0)) {
        throw InputDomainError("stability limit must be positive");
    }
    const double rho = spectral_radius(model);
    if (rho <= limit) {
        return model;
    }
    DsarModel out = model;
    for (int i = 1; i <= model.lags(); ++i) {
        out.phi.col(i - 1) *= std::pow(limit / rho, i);
    }
    return out;
}

} // namespace sparsesense
