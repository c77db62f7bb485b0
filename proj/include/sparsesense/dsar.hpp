// Order-p spatially constrained autoregression
//
//   x(t) = sum_{i=1..p} W_i phi_i x(t-i) + u_t
//
// with diagonal phi_i, evaluated per location as
//   xhat_s(t) = sum_i phi_{i,ss} * (W_i x(t-i))_s.
// The coefficients are fitted by ridge least squares per location with the
// weight set held fixed.
#pragma once

#include "sparsesense/core.hpp"
#include "sparsesense/latent_weights.hpp"

namespace sparsesense {

struct DsarConfig {
    int p = 2;
    double ridge = 1e-3;
    WeightsConfig weights;
    int refresh_interval = 24; ///< R, cycles between weight refresh and refit

    int window() const { return weights.window; }
    /// Throws ConfigError on p < 1, ridge < 0, R < 1, or L < 3p.
    void validate() const;
};

struct DsarModel {
    Matrix phi; ///< S x p; phi(s, i-1) is the lag-i coefficient of location s
    SpatialWeightSet weights;
    Vector noise_cov_diag; ///< diagonal of Q
    int fitted_at = 0;

    int lags() const { return static_cast<int>(phi.cols()); }
    int num_locations() const { return static_cast<int>(phi.rows()); }
};

/// z_i(t) = W_i x(t-i).
Vector regressor(const SpatialWeightSet &weights, HistoryRef history, int t, int lag);

/// Ridge fit of phi over every t in [p, T'). Needs T' >= 3p. With ridge = 0 a
/// singular normal matrix raises NumericalError.
DsarModel fit(HistoryRef fused_history, const SpatialWeightSet &weights, int p,
              double ridge, int fitted_at = 0);

/// One-step point prediction of x(t) from history columns [t-p, t).
Vector predict_next(const DsarModel &model, HistoryRef fused_history, int t);

/// Copy of `model` with noise_cov_diag set to the population variance of the
/// one-step residuals over [p, T').
DsarModel estimate_noise(const DsarModel &model, HistoryRef fused_history);

/// phi = 1 at lag 1, zero elsewhere, identity weights: xhat(t) = x(t-1).
DsarModel persistence_model(int num_locations, int p = 1);

/// Spectral radius of the companion matrix of x(t) = sum_i diag(phi_i) W_i x(t-i).
double spectral_radius(const DsarModel &model);

/// Copy of `model` whose companion spectral radius is at most `limit`: lag i
/// is scaled by (limit / rho)^i, which scales every eigenvalue by limit / rho.
DsarModel stabilize(const DsarModel &model, double limit = 1.0);

} // namespace sparsesense
