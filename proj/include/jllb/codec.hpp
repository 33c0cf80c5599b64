#ifndef JLLB_CODEC_HPP
#define JLLB_CODEC_HPP

#include "jllb/geometry.hpp"
#include "jllb/hard_instance.hpp"
#include "jllb/net_cover.hpp"

#include <nlohmann/json_fwd.hpp>
#include <cstdint>
#include <vector>

namespace jllb {

// Error accounting for the encode/decode pipeline in generalized constants:
// eps_f is the embedding distortion, eps_net the net covering radius, gap the
// inner-product separation of the instance. With eps_f = eps_net = eps and
// gap = 16*eps this reproduces the classical 6/7/8/22 corridor (lemma_bound
// 6e, total error 7e, threshold 8e, outer_scale 22e).
struct CodecBudget {
    double eps_f = 0.0;
    double eps_net = 0.0;
    double gap = 0.0;
    double lemma_bound = 0.0; // 4*eps_f + 2*eps_net
    double outer_scale = 0.0; // lemma_bound + gap
    double total_error = 0.0; // lemma_bound + eps_net, must stay below gap/2
    double threshold = 0.0;   // gap/2
};

void to_json(nlohmann::json& j, const CodecBudget& b);

// Computes the budget and rejects (throws) when total_error >= gap/2, i.e.
// when decoding is not guaranteed.
CodecBudget plan_budget(double eps_f, double eps_net, double gap);

// Header (66 bytes, little-endian) followed by d indices into the l2 net and
// Q indices into the slice net, packed MSB-first at fixed widths
// max(1, ceil(lg2 size)), zero-padded to a byte boundary.
struct Bitstream {
    std::vector<std::uint8_t> bytes;

    std::size_t bit_size() const { return bytes.size() * 8; }
};

struct BitstreamHeader {
    std::uint32_t n = 0, d = 0, Q = 0, k = 0, m = 0;
    std::uint8_t w = 0;
    double eps_f = 0.0, eps_net = 0.0, gap = 0.0;
    std::uint64_t c2_size = 0, cinf_size = 0;
};

void to_json(nlohmann::json& j, const BitstreamHeader& h);

inline constexpr std::size_t kHeaderBytes = 66;
inline constexpr std::size_t kHeaderBits = kHeaderBytes * 8;

BitstreamHeader parse_header(const Bitstream& bits);

// Total stream size in bits: header plus the packed index fields, rounded up
// to a whole byte. Index widths come from the actual net cardinalities.
std::size_t predict_bits(int d, int Q, std::uint64_t c2_size, std::uint64_t cinf_size);

// Compress an embedded instance. Y must be the image of instance.points under
// an embedding satisfying the distortion guarantee at budget.eps_f, with
// Y[0] = 0. Steps: cover the l2 ball of radius 1+eps_f by a net, record one
// index per embedded basis vector, assemble the matrix of located centers,
// cover the scaled slice of the l-infinity ball by that matrix's column
// space, and record one slice-net index per embedded support vector.
Bitstream encode(const HardInstance& instance, const PointSequence& Y, int m,
                 const CodecBudget& budget, const NetBuildOptions& net_opts = {});

// Everything decode recovers, including the reconstructed coordinate vectors
// (useful for error-budget diagnostics).
struct DecodeResult {
    BitstreamHeader header;
    std::vector<SupportSet> supports;
    std::vector<Vec> coord_vectors; // ambient d-vectors read from the slice net
};

// Self-contained inverse of encode: rebuilds both nets from header parameters
// alone and recovers every support set by thresholding coordinates at gap/2.
DecodeResult decode_detail(const Bitstream& bits, const NetBuildOptions& net_opts = {});

std::vector<SupportSet> decode(const Bitstream& bits, const NetBuildOptions& net_opts = {});

// Thresholding step of the decoder, exposed for classifier-level checks.
SupportSet supports_from_coords(const Vec& coords, double threshold);

struct CloseIPsCheck {
    bool passed = false;
    double measured = 0.0;
    double bound = 0.0;
};

// Checks |<fhat_e, f_y> - <e, y>| <= 4*eps_f + 2*eps_net (+1e-9) for a
// rounded embedded basis vector fhat_e against an embedded support vector.
CloseIPsCheck closeips_bound_check(const Vec& fhat_e, const Vec& f_y, const Vec& e, const Vec& y,
                                   double eps_f, double eps_net);

} // namespace jllb

#endif // JLLB_CODEC_HPP
