#include "jllb/welch.hpp"

#include "jllb/hard_instance.hpp"

#include <cmath>
#include <stdexcept>

namespace jllb {

double welch_bound(int n, int m, int k) {
    if (n < 2 || m < 1 || k < 1)
        throw std::invalid_argument("welch_bound: need n >= 2, m >= 1, k >= 1");
    const double denom = binomial(static_cast<unsigned>(m + k - 1), static_cast<unsigned>(k))
                             .convert_to<double>();
    const double inner = (static_cast<double>(n) / denom - 1.0) / static_cast<double>(n - 1);
    if (inner <= 0.0) return 0.0;
    return std::pow(inner, 1.0 / (2.0 * static_cast<double>(k)));
}

double coherence(const PointSequence& X) {
    for (const Vec& x : X.points)
        if (std::abs(x.norm() - 1.0) > 1e-9)
            throw std::invalid_argument("coherence: all points must have unit norm");
    double worst = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i)
        for (std::size_t j = i + 1; j < X.size(); ++j)
            worst = std::max(worst, std::abs(X[i].dot(X[j])));
    return worst;
}

PointSequence regular_simplex(int m) {
    if (m < 1) throw std::invalid_argument("regular_simplex: m must be >= 1");
    // Vertices e_i of R^{m+1}, centered at their mean and normalized; they lie
    // in the m-dimensional hyperplane orthogonal to (1, ..., 1).
    PointSequence ps;
    ps.dim = m + 1;
    const double mean = 1.0 / static_cast<double>(m + 1);
    const double norm = std::sqrt(1.0 - mean); // ||e_i - mean*1||
    for (int i = 0; i <= m; ++i) {
        Vec v = Vec::Constant(m + 1, -mean / norm);
        v[i] = (1.0 - mean) / norm;
        ps.points.push_back(std::move(v));
    }
    return ps;
}

} // namespace jllb
