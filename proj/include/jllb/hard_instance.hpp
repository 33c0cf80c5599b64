#ifndef JLLB_HARD_INSTANCE_HPP
#define JLLB_HARD_INSTANCE_HPP

#include "jllb/geometry.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json_fwd.hpp>
#include <cstdint>
#include <vector>

namespace jllb {

using BigInt = boost::multiprecision::cpp_int;

// Exact binomial coefficient.
BigInt binomial(unsigned n, unsigned k);

// Parameters of a hard instance family member. The instance sequence has
// length n = d + Q + 1 and every support has k of the d coordinates; gap is
// the inner-product separation 1/sqrt(k) between member and non-member
// coordinates.
struct HardInstanceParams {
    int n = 0;
    int d = 0;
    double eps = 0.0;
    int k = 0;
    int Q = 0;
    double gap = 0.0;
    double c_k = 256.0; // support-size constant: k ~ eps^-2 / c_k
};

void to_json(nlohmann::json& j, const HardInstanceParams& p);
void from_json(const nlohmann::json& j, HardInstanceParams& p);

// Sorted set of k distinct 1-based coordinate indices in [1, d].
struct SupportSet {
    std::vector<int> indices;

    bool operator==(const SupportSet&) const = default;
};

// d = round(n / lg(1/eps)), k = max(1, round(eps^-2 / c_k)), Q = n - d - 1.
// Requires 0 < eps < 1/2 and throws if the derived values are infeasible
// (Q < 0 or k > d).
HardInstanceParams derive_params(int n, double eps, double c_k = 256.0);

// Pins (d, k, Q) directly; n = d + Q + 1, gap = 1/sqrt(k), and eps is set to
// the nominal distortion gap/16 at which k equals eps^-2/256 exactly.
HardInstanceParams direct_params(int d, int k, int Q);

// Unit vector with value 1/sqrt(k) on the k support coordinates, 0 elsewhere.
Vec make_support_vector(const SupportSet& s, int k, int d);

struct HardInstance {
    HardInstanceParams params;
    std::vector<SupportSet> supports;
    PointSequence points; // (0, e_1, ..., e_d, y_{S_1}, ..., y_{S_Q})
};

void to_json(nlohmann::json& j, const HardInstance& inst);
void from_json(const nlohmann::json& j, HardInstance& inst);

// Materialize the sequence (0, e_1, ..., e_d, y_{S_1}, ..., y_{S_Q}) from
// explicitly supplied supports (exactly Q of them)...
HardInstance build_instance(const HardInstanceParams& params,
                            const std::vector<SupportSet>& supports);

// ...or from a seed: Q supports sampled uniformly over k-subsets of [1, d],
// independently per slot (repeats across slots are allowed).
HardInstance build_instance(const HardInstanceParams& params, std::uint64_t seed);

// Exact size binom(d,k)^Q of the family, together with the two exact
// inequalities binom(d,k)^Q >= (binom(d,k)/2)^Q >= (d/(2k))^(kQ) evaluated in
// integer cross-multiplied form.
struct FamilySize {
    BigInt size;
    bool chain_mid_ok = false;
    bool chain_low_ok = false;
};

FamilySize family_size(int d, int k, int Q);

// Reference quantity eps^-2 * lg(eps^2 n), with no hidden constant; 0 in the
// degenerate regime eps^2 n <= 1.
double lower_bound_m(std::int64_t n, double eps);

} // namespace jllb

#endif // JLLB_HARD_INSTANCE_HPP
