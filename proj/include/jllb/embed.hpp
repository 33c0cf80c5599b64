#ifndef JLLB_EMBED_HPP
#define JLLB_EMBED_HPP

#include "jllb/geometry.hpp"

#include <nlohmann/json_fwd.hpp>
#include <cstdint>
#include <optional>

namespace jllb {

enum class ProjectionKind { Gaussian, Isometry, IdentityPerturbed, Composed };

const char* to_string(ProjectionKind k);

// A linear map R^cols -> R^rows. Entries are a pure function of
// (kind, cols, rows, seed).
struct ProjectionMatrix {
    ProjectionKind kind = ProjectionKind::Gaussian;
    std::uint64_t seed = 0;
    Mat entries; // rows x cols

    int rows() const { return static_cast<int>(entries.rows()); }
    int cols() const { return static_cast<int>(entries.cols()); }
};

// Empirical estimate of the probability that a random projection distorts a
// fixed vector's norm by more than a (1 +/- eps) factor.
struct DJLEstimate {
    double eps = 0.0;
    int m = 0;
    int trials = 0;
    int failures = 0;
    double delta_hat = 0.0;
};

void to_json(nlohmann::json& j, const DJLEstimate& e);

// m x d matrix of independent N(0, 1/m) entries.
ProjectionMatrix gaussian_projection(int d, int m, std::uint64_t seed);

// m x d matrix with orthonormal rows (requires m <= d); for m == d this is a
// random rotation and preserves every distance exactly.
ProjectionMatrix isometry_projection(int d, int m, std::uint64_t seed);

// Diagonal map with entries drawn uniformly from [sqrt(1-eps), sqrt(1+eps)]:
// a linear embedding whose squared distortion stays inside the (1 +/- eps) band.
ProjectionMatrix perturbed_identity(int d, double eps, std::uint64_t seed);

PointSequence apply_embedding(const ProjectionMatrix& p, const PointSequence& X);

// Distance-preserving reduction onto the span of the differences X[i] - X[0].
// Output dimension is the rank of that span (at least 1; a single point maps
// to the 1-dimensional zero vector).
PointSequence span_isometry(const PointSequence& X);

// Scales each point radially by a factor drawn uniformly from
// [sqrt(1-eps_f), sqrt(1+eps_f)]. The factor is keyed per distinct point
// value, so repeated points stay coincident and the result is a well-defined
// (nonlinear) map on the underlying set.
PointSequence radial_scale_per_point(const PointSequence& Y, double eps_f, std::uint64_t seed);

// Fraction of independent Gaussian draws with | ||Pu|| - ||u|| | > eps ||u||.
// u defaults to the first standard basis vector; the Gaussian ensemble is
// rotation invariant so the direction does not matter.
DJLEstimate djl_failure_rate(double eps, int d, int m, int trials, std::uint64_t seed,
                             const std::optional<Vec>& u = std::nullopt);

// Matrix product f2 * f1 (f1 applied first).
ProjectionMatrix compose_embeddings(const ProjectionMatrix& f1, const ProjectionMatrix& f2);

} // namespace jllb

#endif // JLLB_EMBED_HPP
