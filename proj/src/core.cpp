#include "sparsesense/core.hpp"

#include <cmath>
#include <limits>

namespace sparsesense {

std::vector<Location> make_locations(int count) {
    std::vector<Location> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int s = 0; s < count; ++s) {
        out.push_back(Location{s, "s" + std::to_string(s), std::nullopt});
    }
    return out;
}

bool has_coords(std::span<const Location> locations) {
    if (locations.empty()) {
        return false;
    }
    for (const auto &loc : locations) {
        if (!loc.coords) {
            return false;
        }
    }
    return true;
}

MeasurementPanel::MeasurementPanel(std::vector<Location> locations,
                                   Matrix values, Mask mask,
                                   std::string cycle_period)
    : locations_(std::move(locations)), values_(std::move(values)),
      mask_(std::move(mask)), cycle_period_(std::move(cycle_period)) {
    const auto S = values_.rows();
    const auto T = values_.cols();
    if (S < 1 || T < 1) {
        throw InputDomainError("panel needs at least one location and one cycle");
    }
    if (mask_.rows() != S || mask_.cols() != T) {
        throw InputDomainError("panel mask shape does not match values");
    }
    if (static_cast<Eigen::Index>(locations_.size()) != S) {
        throw InputDomainError("panel location count does not match values");
    }
    bool any_coords = false;
    bool all_coords = true;
    for (std::size_t i = 0; i < locations_.size(); ++i) {
        if (locations_[i].id != static_cast<int>(i)) {
            throw InputDomainError("location ids must be dense 0..S-1 in order");
        }
        any_coords = any_coords || locations_[i].coords.has_value();
        all_coords = all_coords && locations_[i].coords.has_value();
    }
    if (any_coords && !all_coords) {
        throw InputDomainError("either all locations carry coordinates or none do");
    }
    const double sentinel = std::numeric_limits<double>::quiet_NaN();
    for (Eigen::Index t = 0; t < T; ++t) {
        for (Eigen::Index s = 0; s < S; ++s) {
            if (mask_(s, t)) {
                if (!std::isfinite(values_(s, t))) {
                    throw InputDomainError("observed panel cell is not finite");
                }
            } else {
                values_(s, t) = sentinel;
            }
        }
    }
}

MeasurementPanel::MeasurementPanel(std::vector<Location> locations,
                                   Matrix values, std::string cycle_period)
    : MeasurementPanel(std::move(locations), values,
                       Mask::Constant(values.rows(), values.cols(), true),
                       std::move(cycle_period)) {}

MeasurementPanel MeasurementPanel::with_mask(Mask mask) const {
    return MeasurementPanel(locations_, values_, std::move(mask), cycle_period_);
}

Vector fuse_observations(const Vector &predicted,
                         const std::map<int, double> &observations) {
    Vector out = predicted;
    for (const auto &[id, value] : observations) {
        if (id < 0 || id >= predicted.size()) {
            throw InputDomainError("observation for unknown location id " +
                                   std::to_string(id));
        }
        out[id] = value;
    }
    return out;
}

double rmse(const Vector &predicted, const Vector &actual,
            std::span<const int> subset) {
    if (subset.empty()) {
        throw InputDomainError("rmse over an empty subset");
    }
    if (predicted.size() != actual.size()) {
        throw InputDomainError("rmse vectors differ in length");
    }
    double sum = 0.0;
    for (int s : subset) {
        if (s < 0 || s >= predicted.size()) {
            throw InputDomainError("rmse subset id out of range");
        }
        const double d = predicted[s] - actual[s];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(subset.size()));
}

} // namespace sparsesense
