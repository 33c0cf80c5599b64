#include "jllb/geometry.hpp"

#include <nlohmann/json.hpp>
#include <limits>
#include <stdexcept>

namespace jllb {

void to_json(nlohmann::json& j, const PointSequence& ps) {
    j = nlohmann::json::object();
    j["dim"] = ps.dim;
    auto pts = nlohmann::json::array();
    for (const Vec& p : ps.points) {
        auto row = nlohmann::json::array();
        for (int i = 0; i < p.size(); ++i) row.push_back(p[i]);
        pts.push_back(std::move(row));
    }
    j["points"] = std::move(pts);
}

void from_json(const nlohmann::json& j, PointSequence& ps) {
    ps.dim = j.at("dim").get<int>();
    if (ps.dim <= 0) throw std::invalid_argument("PointSequence: dim must be positive");
    ps.points.clear();
    for (const auto& row : j.at("points")) {
        Vec p(ps.dim);
        if (static_cast<int>(row.size()) != ps.dim)
            throw std::invalid_argument("PointSequence: point length differs from dim");
        for (int i = 0; i < ps.dim; ++i) p[i] = row.at(i).get<double>();
        ps.points.push_back(std::move(p));
    }
}

void to_json(nlohmann::json& j, const DistortionReport& r) {
    j = nlohmann::json{{"max_sq_ratio", r.max_sq_ratio},
                       {"min_sq_ratio", r.min_sq_ratio},
                       {"worst_pair", {r.worst_pair.first, r.worst_pair.second}},
                       {"passed", r.passed}};
}

double squared_distance(const Vec& x, const Vec& y) {
    if (x.size() != y.size())
        throw std::invalid_argument("squared_distance: dimension mismatch");
    return (x - y).squaredNorm();
}

DistortionReport check_jl_guarantee(const PointSequence& X, const PointSequence& Y, double eps) {
    if (eps <= 0.0 || eps >= 1.0)
        throw std::invalid_argument("check_jl_guarantee: eps must lie in (0,1)");
    if (X.size() != Y.size())
        throw std::invalid_argument("check_jl_guarantee: sequence length mismatch");

    DistortionReport rep;
    rep.passed = true;
    bool have_ratio = false;
    double worst_dev = -1.0;

    const std::size_t n = X.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = squared_distance(X[i], X[j]);
            const double dy = squared_distance(Y[i], Y[j]);
            if (dx == 0.0) {
                // Coincident inputs must stay coincident; the band at zero
                // distance collapses to [0, 0] up to slack.
                if (dy > kGuaranteeSlack) {
                    rep.passed = false;
                    rep.max_sq_ratio = std::numeric_limits<double>::infinity();
                    rep.worst_pair = {i, j};
                    worst_dev = std::numeric_limits<double>::infinity();
                }
                continue;
            }
            const double ratio = dy / dx;
            if (!have_ratio) {
                rep.max_sq_ratio = rep.min_sq_ratio = ratio;
                rep.worst_pair = {i, j};
                worst_dev = std::abs(ratio - 1.0);
                have_ratio = true;
            } else {
                rep.max_sq_ratio = std::max(rep.max_sq_ratio, ratio);
                rep.min_sq_ratio = std::min(rep.min_sq_ratio, ratio);
                if (std::abs(ratio - 1.0) > worst_dev) {
                    worst_dev = std::abs(ratio - 1.0);
                    rep.worst_pair = {i, j};
                }
            }
            if (ratio < 1.0 - eps - kGuaranteeSlack || ratio > 1.0 + eps + kGuaranteeSlack)
                rep.passed = false;
        }
    }
    if (!have_ratio && rep.passed) {
        // No separated pair at all (empty, singleton, or all-coincident
        // sequences): the guarantee holds vacuously with unit ratios.
        rep.max_sq_ratio = rep.min_sq_ratio = 1.0;
    }
    return rep;
}

PointSequence translate_to_origin(const PointSequence& Y, std::size_t anchor_index) {
    if (anchor_index >= Y.size())
        throw std::out_of_range("translate_to_origin: anchor index out of range");
    PointSequence out;
    out.dim = Y.dim;
    out.points.reserve(Y.size());
    const Vec anchor = Y[anchor_index];
    for (const Vec& p : Y.points) out.points.push_back(p - anchor);
    return out;
}

} // namespace jllb
