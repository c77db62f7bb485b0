// Domain types shared by every part of the sensing pipeline: locations,
// measurement panels with observation masks, per-cycle state and metrics.
#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sparsesense {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using Point = Eigen::Vector2d;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A caller passed an argument outside the operation's domain.
class InputDomainError : public Error {
  public:
    using Error::Error;
};

/// Not enough cycles of history for the requested window or lag order.
class InsufficientHistoryError : public Error {
  public:
    using Error::Error;
};

class NumericalError : public Error {
  public:
    using Error::Error;
};

/// Invalid configuration value; the message names the offending key.
class ConfigError : public Error {
  public:
    using Error::Error;
};

class ParseError : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct Location {
    int id = 0;
    std::string name;
    std::optional<Point> coords;
};

/// Builds locations 0..S-1 named "s<id>" without coordinates.
std::vector<Location> make_locations(int count);

/// True when every location carries coordinates.
bool has_coords(std::span<const Location> locations);

/// S x T matrix of measurements plus an observation mask.
///
/// Unobserved cells hold a quiet NaN. Numeric code must consult observed()
/// and never test the stored value.
class MeasurementPanel {
  public:
    MeasurementPanel(std::vector<Location> locations, Matrix values, Mask mask,
                     std::string cycle_period = "1h");

    /// Fully observed panel.
    MeasurementPanel(std::vector<Location> locations, Matrix values,
                     std::string cycle_period = "1h");

    int num_locations() const { return static_cast<int>(values_.rows()); }
    int num_cycles() const { return static_cast<int>(values_.cols()); }

    bool observed(int s, int t) const { return mask_(s, t); }
    double value(int s, int t) const { return values_(s, t); }

    const Matrix &values() const { return values_; }
    const Mask &mask() const { return mask_; }
    const std::vector<Location> &locations() const { return locations_; }
    const std::string &cycle_period() const { return cycle_period_; }

    int observed_count() const { return static_cast<int>(mask_.count()); }

    /// Copy of this panel with a different mask. Newly observed cells must
    /// already hold finite values.
    MeasurementPanel with_mask(Mask mask) const;

  private:
    std::vector<Location> locations_;
    Matrix values_;
    Mask mask_;
    std::string cycle_period_;
};

/// Per-cycle state of the closed loop: sensed ids, raw predictions, and the
/// fused vector (observed values where sensed, predictions elsewhere).
struct CycleState {
    int t = 0;
    std::vector<int> observed_ids;
    Vector fused;
    Vector predicted;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Replaces predicted[s] by observations[s] for each observed id.
Vector fuse_observations(const Vector &predicted,
                         const std::map<int, double> &observations);

/// Root mean squared error over `subset`. Throws InputDomainError on an
/// empty subset or an id out of range.
double rmse(const Vector &predicted, const Vector &actual,
            std::span<const int> subset);

} // namespace sparsesense
