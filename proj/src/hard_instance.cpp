#include "jllb/hard_instance.hpp"

#include "jllb/rng.hpp"

#include <nlohmann/json.hpp>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace jllb {

BigInt binomial(unsigned n, unsigned k) {
    if (k > n) return 0;
    if (k > n - k) k = n - k;
    BigInt r = 1;
    for (unsigned i = 1; i <= k; ++i) {
        r *= n - k + i;
        r /= i; // exact: r holds binom(n-k+i, i) after each step
    }
    return r;
}

void to_json(nlohmann::json& j, const HardInstanceParams& p) {
    j = nlohmann::json{{"n", p.n}, {"d", p.d},     {"eps", p.eps}, {"k", p.k},
                       {"Q", p.Q}, {"gap", p.gap}, {"c_k", p.c_k}};
}

void from_json(const nlohmann::json& j, HardInstanceParams& p) {
    p.n = j.at("n").get<int>();
    p.d = j.at("d").get<int>();
    p.eps = j.at("eps").get<double>();
    p.k = j.at("k").get<int>();
    p.Q = j.at("Q").get<int>();
    p.gap = j.at("gap").get<double>();
    p.c_k = j.at("c_k").get<double>();
}

namespace {

void validate_params(const HardInstanceParams& p) {
    if (p.n < 2 || p.d < 1 || p.k < 1 || p.Q < 0)
        throw std::invalid_argument("HardInstanceParams: n >= 2, d >= 1, k >= 1, Q >= 0 required");
    if (p.Q != p.n - p.d - 1)
        throw std::invalid_argument("HardInstanceParams: Q must equal n - d - 1");
    if (p.k > p.d)
        throw std::invalid_argument("HardInstanceParams: k must not exceed d");
}

void validate_support(const SupportSet& s, int k, int d) {
    if (static_cast<int>(s.indices.size()) != k)
        throw std::invalid_argument("SupportSet: size differs from k");
    if (!std::is_sorted(s.indices.begin(), s.indices.end()))
        throw std::invalid_argument("SupportSet: indices must be sorted");
    if (std::adjacent_find(s.indices.begin(), s.indices.end()) != s.indices.end())
        throw std::invalid_argument("SupportSet: indices must be distinct");
    if (s.indices.front() < 1 || s.indices.back() > d)
        throw std::invalid_argument("SupportSet: index out of range [1, d]");
}

} // namespace

HardInstanceParams derive_params(int n, double eps, double c_k) {
    if (!(eps > 0.0 && eps < 0.5))
        throw std::invalid_argument("derive_params: eps must lie in (0, 1/2)");
    if (n < 2) throw std::invalid_argument("derive_params: n must be >= 2");
    if (!(c_k > 0.0)) throw std::invalid_argument("derive_params: c_k must be positive");

    HardInstanceParams p;
    p.n = n;
    p.eps = eps;
    p.c_k = c_k;
    p.d = static_cast<int>(std::llround(n / std::log2(1.0 / eps)));
    p.k = std::max(1, static_cast<int>(std::llround(1.0 / (eps * eps) / c_k)));
    p.Q = n - p.d - 1;
    p.gap = 1.0 / std::sqrt(static_cast<double>(p.k));
    if (p.d < 1 || p.Q < 0 || p.k > p.d)
        throw std::invalid_argument("derive_params: infeasible (need d >= k >= 1 and Q >= 0)");
    return p;
}

HardInstanceParams direct_params(int d, int k, int Q) {
    HardInstanceParams p;
    p.d = d;
    p.k = k;
    p.Q = Q;
    p.n = d + Q + 1;
    p.gap = 1.0 / std::sqrt(static_cast<double>(k));
    p.eps = p.gap / 16.0; // nominal distortion: k == eps^-2/256 exactly
    p.c_k = 256.0;
    validate_params(p);
    return p;
}

Vec make_support_vector(const SupportSet& s, int k, int d) {
    validate_support(s, k, d);
    Vec y = Vec::Zero(d);
    const double v = 1.0 / std::sqrt(static_cast<double>(k));
    for (int idx : s.indices) y[idx - 1] = v;
    return y;
}

HardInstance build_instance(const HardInstanceParams& params,
                            const std::vector<SupportSet>& supports) {
    validate_params(params);
    if (static_cast<int>(supports.size()) != params.Q)
        throw std::invalid_argument("build_instance: expected exactly Q supports");
    for (const SupportSet& s : supports) validate_support(s, params.k, params.d);

    HardInstance inst;
    inst.params = params;
    inst.supports = supports;
    inst.points.dim = params.d;
    inst.points.points.reserve(static_cast<std::size_t>(params.n));
    inst.points.points.push_back(Vec::Zero(params.d));
    for (int j = 0; j < params.d; ++j) {
        Vec e = Vec::Zero(params.d);
        e[j] = 1.0;
        inst.points.points.push_back(std::move(e));
    }
    for (const SupportSet& s : supports)
        inst.points.points.push_back(make_support_vector(s, params.k, params.d));
    return inst;
}

HardInstance build_instance(const HardInstanceParams& params, std::uint64_t seed) {
    validate_params(params);
    std::vector<SupportSet> supports;
    supports.reserve(static_cast<std::size_t>(params.Q));
    std::vector<int> pool(static_cast<std::size_t>(params.d));
    for (int ell = 0; ell < params.Q; ++ell) {
        // Uniform k-subset by a partial Fisher-Yates shuffle on its own
        // counter stream, so each slot is independent of the others.
        const std::uint64_t key = rng::derive(seed, static_cast<std::uint64_t>(ell));
        std::iota(pool.begin(), pool.end(), 1);
        SupportSet s;
        s.indices.reserve(static_cast<std::size_t>(params.k));
        for (int i = 0; i < params.k; ++i) {
            const auto j = i + static_cast<int>(rng::below(key, static_cast<std::uint64_t>(i),
                                                           static_cast<std::uint64_t>(params.d - i)));
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
            s.indices.push_back(pool[static_cast<std::size_t>(i)]);
        }
        std::sort(s.indices.begin(), s.indices.end());
        supports.push_back(std::move(s));
    }
    return build_instance(params, supports);
}

void to_json(nlohmann::json& j, const HardInstance& inst) {
    auto sup = nlohmann::json::array();
    for (const SupportSet& s : inst.supports) sup.push_back(s.indices);
    nlohmann::json pts;
    to_json(pts, inst.points);
    j = nlohmann::json{{"params", inst.params}, {"supports", std::move(sup)}, {"points", std::move(pts)}};
}

void from_json(const nlohmann::json& j, HardInstance& inst) {
    inst.params = j.at("params").get<HardInstanceParams>();
    std::vector<SupportSet> supports;
    for (const auto& arr : j.at("supports")) {
        SupportSet s;
        s.indices = arr.get<std::vector<int>>();
        supports.push_back(std::move(s));
    }
    HardInstance rebuilt = build_instance(inst.params, supports);
    // Accept the serialized points but insist they match the canonical form.
    PointSequence given;
    from_json(j.at("points"), given);
    if (given.size() != rebuilt.points.size() || given.dim != rebuilt.points.dim)
        throw std::invalid_argument("HardInstance: points do not match params/supports");
    for (std::size_t i = 0; i < given.size(); ++i)
        if ((given[i] - rebuilt.points[i]).lpNorm<Eigen::Infinity>() > 1e-12)
            throw std::invalid_argument("HardInstance: points do not match params/supports");
    inst.supports = std::move(supports);
    inst.points = std::move(rebuilt.points);
}

FamilySize family_size(int d, int k, int Q) {
    if (k < 0 || d < 0 || Q < 0)
        throw std::invalid_argument("family_size: arguments must be nonnegative");
    if (k > d) throw std::invalid_argument("family_size: k must not exceed d");

    const BigInt b = binomial(static_cast<unsigned>(d), static_cast<unsigned>(k));
    const auto uq = static_cast<unsigned>(Q);
    FamilySize f;
    f.size = boost::multiprecision::pow(b, uq);

    // binom^Q >= (binom/2)^Q  <=>  binom^Q * 2^Q >= binom^Q
    const BigInt two_q = boost::multiprecision::pow(BigInt(2), uq);
    f.chain_mid_ok = f.size * two_q >= f.size;

    // (binom/2)^Q >= (d/(2k))^(kQ)  <=>  binom^Q * (2k)^(kQ) >= 2^Q * d^(kQ)
    if (k == 0) {
        f.chain_low_ok = true; // both sides degenerate; the family is the single empty choice
    } else {
        const auto ukq = static_cast<unsigned>(static_cast<std::int64_t>(k) * Q);
        const BigInt lhs = f.size * boost::multiprecision::pow(BigInt(2 * k), ukq);
        const BigInt rhs = two_q * boost::multiprecision::pow(BigInt(d), ukq);
        f.chain_low_ok = lhs >= rhs;
    }
    return f;
}

double lower_bound_m(std::int64_t n, double eps) {
    if (n < 2) throw std::invalid_argument("lower_bound_m: n must be >= 2");
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("lower_bound_m: eps must lie in (0, 1)");
    const double arg = eps * eps * static_cast<double>(n);
    if (arg <= 1.0) return 0.0;
    return std::log2(arg) / (eps * eps);
}

} // namespace jllb
