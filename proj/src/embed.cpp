#include "jllb/embed.hpp"

#include "jllb/net_cover.hpp"
#include "jllb/rng.hpp"

#include <nlohmann/json.hpp>
#include <cstring>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace jllb {

const char* to_string(ProjectionKind k) {
    switch (k) {
        case ProjectionKind::Gaussian: return "gaussian";
        case ProjectionKind::Isometry: return "isometry";
        case ProjectionKind::IdentityPerturbed: return "identity_perturbed";
        case ProjectionKind::Composed: return "composed";
    }
    return "unknown";
}

void to_json(nlohmann::json& j, const DJLEstimate& e) {
    j = nlohmann::json{{"eps", e.eps},
                       {"m", e.m},
                       {"trials", e.trials},
                       {"failures", e.failures},
                       {"delta_hat", e.delta_hat}};
}

ProjectionMatrix gaussian_projection(int d, int m, std::uint64_t seed) {
    if (d < 1 || m < 1)
        throw std::invalid_argument("gaussian_projection: d and m must be >= 1");
    ProjectionMatrix p;
    p.kind = ProjectionKind::Gaussian;
    p.seed = seed;
    p.entries.resize(m, d);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < d; ++j)
            p.entries(i, j) = scale * rng::gaussian(seed, static_cast<std::uint64_t>(i) * d + j);
    return p;
}

ProjectionMatrix isometry_projection(int d, int m, std::uint64_t seed) {
    if (m < 1 || m > d)
        throw std::invalid_argument("isometry_projection: need 1 <= m <= d");
    // Orthonormalize the rows of a Gaussian draw; retry with a derived seed in
    // the (measure-zero) rank-deficient case so the result stays deterministic.
    for (std::uint64_t attempt = 0;; ++attempt) {
        const std::uint64_t key = rng::derive(seed, attempt);
        Mat g(d, m);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < m; ++j)
                g(i, j) = rng::gaussian(key, static_cast<std::uint64_t>(i) * m + j);
        SubspaceBasis basis = orthonormalize_columns(g);
        if (basis.intrinsic_dim == m) {
            ProjectionMatrix p;
            p.kind = ProjectionKind::Isometry;
            p.seed = seed;
            p.entries = basis.columns.transpose();
            return p;
        }
    }
}

ProjectionMatrix perturbed_identity(int d, double eps, std::uint64_t seed) {
    if (d < 1) throw std::invalid_argument("perturbed_identity: d must be >= 1");
    if (eps < 0.0 || eps >= 1.0)
        throw std::invalid_argument("perturbed_identity: eps must lie in [0,1)");
    ProjectionMatrix p;
    p.kind = ProjectionKind::IdentityPerturbed;
    p.seed = seed;
    p.entries = Mat::Zero(d, d);
    for (int i = 0; i < d; ++i)
        p.entries(i, i) = rng::uniform(seed, i, std::sqrt(1.0 - eps), std::sqrt(1.0 + eps));
    return p;
}

PointSequence apply_embedding(const ProjectionMatrix& p, const PointSequence& X) {
    if (p.cols() != X.dim)
        throw std::invalid_argument("apply_embedding: matrix columns differ from point dimension");
    PointSequence Y;
    Y.dim = p.rows();
    Y.points.reserve(X.size());
    for (const Vec& x : X.points) Y.points.push_back(p.entries * x);
    return Y;
}

PointSequence span_isometry(const PointSequence& X) {
    if (X.points.empty())
        throw std::invalid_argument("span_isometry: empty sequence");
    const std::size_t n = X.size();
    Mat diffs(X.dim, static_cast<int>(n > 1 ? n - 1 : 1));
    if (n == 1) {
        diffs.col(0).setZero();
    } else {
        for (std::size_t i = 1; i < n; ++i) diffs.col(static_cast<int>(i - 1)) = X[i] - X[0];
    }

    PointSequence Y;
    if (diffs.isZero(0.0)) {
        // Degenerate span: represent every point as the 1-dimensional zero vector.
        Y.dim = 1;
        Y.points.assign(n, Vec::Zero(1));
        return Y;
    }
    const SubspaceBasis basis = orthonormalize_columns(diffs);
    Y.dim = basis.intrinsic_dim;
    Y.points.reserve(n);
    for (const Vec& x : X.points) Y.points.push_back(basis.columns.transpose() * (x - X[0]));
    return Y;
}

PointSequence radial_scale_per_point(const PointSequence& Y, double eps_f, std::uint64_t seed) {
    if (eps_f < 0.0 || eps_f >= 1.0)
        throw std::invalid_argument("radial_scale_per_point: eps_f must lie in [0,1)");
    const double lo = std::sqrt(1.0 - eps_f);
    const double hi = std::sqrt(1.0 + eps_f);

    // Key the scale by the point's exact byte pattern: repeated points share a
    // factor, keeping the scaling a function of the point rather than its slot.
    std::map<std::string, double> scale_of;
    PointSequence out;
    out.dim = Y.dim;
    out.points.reserve(Y.size());
    for (const Vec& p : Y.points) {
        std::string bytes(reinterpret_cast<const char*>(p.data()), sizeof(double) * p.size());
        auto it = scale_of.find(bytes);
        if (it == scale_of.end()) {
            const double s = rng::uniform(seed, scale_of.size(), lo, hi);
            it = scale_of.emplace(std::move(bytes), s).first;
        }
        out.points.push_back(it->second * p);
    }
    return out;
}

DJLEstimate djl_failure_rate(double eps, int d, int m, int trials, std::uint64_t seed,
                             const std::optional<Vec>& u) {
    if (eps <= 0.0 || eps >= 1.0)
        throw std::invalid_argument("djl_failure_rate: eps must lie in (0,1)");
    if (d < 1 || m < 1 || trials < 1)
        throw std::invalid_argument("djl_failure_rate: d, m, trials must be >= 1");
    Vec probe;
    if (u) {
        if (u->size() != d) throw std::invalid_argument("djl_failure_rate: u has wrong dimension");
        probe = *u;
    } else {
        probe = Vec::Zero(d);
        probe[0] = 1.0;
    }
    const double norm_u = probe.norm();
    if (norm_u == 0.0) throw std::invalid_argument("djl_failure_rate: u must be nonzero");

    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    int failures = 0;
    for (int t = 0; t < trials; ++t) {
        // Each trial owns an independent counter stream, so trials could run
        // in any order (or concurrently) with identical results.
        const std::uint64_t key = rng::derive(seed, static_cast<std::uint64_t>(t));
        double sq = 0.0;
        for (int i = 0; i < m; ++i) {
            double row = 0.0;
            for (int j = 0; j < d; ++j)
                row += rng::gaussian(key, static_cast<std::uint64_t>(i) * d + j) * probe[j];
            sq += row * row;
        }
        const double norm_pu = scale * std::sqrt(sq);
        if (std::abs(norm_pu - norm_u) > eps * norm_u) ++failures;
    }

    DJLEstimate e;
    e.eps = eps;
    e.m = m;
    e.trials = trials;
    e.failures = failures;
    e.delta_hat = static_cast<double>(failures) / static_cast<double>(trials);
    return e;
}

ProjectionMatrix compose_embeddings(const ProjectionMatrix& f1, const ProjectionMatrix& f2) {
    if (f2.cols() != f1.rows())
        throw std::invalid_argument("compose_embeddings: inner dimensions do not match");
    ProjectionMatrix p;
    p.kind = ProjectionKind::Composed;
    p.seed = rng::derive(f1.seed, f2.seed);
    p.entries = f2.entries * f1.entries;
    return p;
}

} // namespace jllb
