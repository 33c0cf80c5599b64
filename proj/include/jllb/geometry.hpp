#ifndef JLLB_GEOMETRY_HPP
#define JLLB_GEOMETRY_HPP

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>
#include <cstddef>
#include <utility>
#include <vector>

namespace jllb {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// An ordered list of points in R^dim. Order matters and duplicates are
// allowed: instances are sequences, not sets.
struct PointSequence {
    int dim = 0;
    std::vector<Vec> points;

    std::size_t size() const { return points.size(); }
    const Vec& operator[](std::size_t i) const { return points[i]; }
    Vec& operator[](std::size_t i) { return points[i]; }
};

void to_json(nlohmann::json& j, const PointSequence& ps);
void from_json(const nlohmann::json& j, PointSequence& ps);

// Extremal ratios of squared distances ||f(x)-f(y)||^2 / ||x-y||^2 over all
// pairs of distinct points. worst_pair is the pair whose ratio deviates most
// from 1 (on either side).
struct DistortionReport {
    double max_sq_ratio = 1.0;
    double min_sq_ratio = 1.0;
    std::pair<std::size_t, std::size_t> worst_pair{0, 0};
    bool passed = false;
};

void to_json(nlohmann::json& j, const DistortionReport& r);

// Absolute slack used when comparing squared-distance ratios against the
// closed interval [1-eps, 1+eps].
inline constexpr double kGuaranteeSlack = 1e-9;

double squared_distance(const Vec& x, const Vec& y);

// passed = true iff every pair ratio lies in [1-eps, 1+eps] (closed, with
// kGuaranteeSlack). Pairs coincident in X are excluded from the ratios but
// must stay coincident in Y; a separated image marks the report failed with
// an infinite max ratio.
DistortionReport check_jl_guarantee(const PointSequence& X, const PointSequence& Y, double eps);

// Recovers <x,y> from squared norms and the squared distance.
inline double polarization_inner(double nsq_x, double nsq_y, double dsq_xy) {
    return (nsq_x + nsq_y - dsq_xy) / 2.0;
}

// Subtract Y[anchor_index] from every point; pairwise distances unchanged.
PointSequence translate_to_origin(const PointSequence& Y, std::size_t anchor_index);

} // namespace jllb

#endif // JLLB_GEOMETRY_HPP
