#include "jllb/codec.hpp"

#include <nlohmann/json.hpp>
#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace jllb {

namespace {

constexpr char kMagic[4] = {'J', 'L', 'L', 'B'};
constexpr std::uint8_t kVersion = 1;

int index_width(std::uint64_t size) {
    if (size == 0) throw std::invalid_argument("index_width: empty net");
    const int bits = (size == 1) ? 0 : std::bit_width(size - 1);
    return std::max(1, bits);
}

class ByteWriter {
public:
    explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        u64(bits);
    }

private:
    std::vector<std::uint8_t>& out_;
};

class ByteReader {
public:
    ByteReader(const std::vector<std::uint8_t>& in, std::size_t pos) : in_(in), pos_(pos) {}
    std::uint8_t u8() {
        need(1);
        return in_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }

private:
    void need(std::size_t n) const {
        if (pos_ + n > in_.size()) throw std::runtime_error("bitstream: truncated header");
    }
    const std::vector<std::uint8_t>& in_;
    std::size_t pos_;
};

class BitWriter {
public:
    explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}
    void put(std::uint64_t value, int width) {
        for (int b = width - 1; b >= 0; --b) {
            if (fill_ == 0) {
                out_.push_back(0);
                fill_ = 8;
            }
            --fill_;
            if ((value >> b) & 1ULL) out_.back() |= static_cast<std::uint8_t>(1U << fill_);
        }
    }

private:
    std::vector<std::uint8_t>& out_;
    int fill_ = 0; // unused bits remaining in the last byte
};

class BitReader {
public:
    BitReader(const std::vector<std::uint8_t>& in, std::size_t byte_pos)
        : in_(in), bitpos_(byte_pos * 8) {}
    std::uint64_t get(int width) {
        std::uint64_t v = 0;
        for (int b = 0; b < width; ++b) {
            const std::size_t byte = bitpos_ / 8;
            if (byte >= in_.size()) throw std::runtime_error("bitstream: truncated payload");
            const int shift = 7 - static_cast<int>(bitpos_ % 8);
            v = (v << 1) | ((in_[byte] >> shift) & 1U);
            ++bitpos_;
        }
        return v;
    }

private:
    const std::vector<std::uint8_t>& in_;
    std::size_t bitpos_;
};

void check_budget_consistency(const CodecBudget& b) {
    if (!(b.eps_f >= 0.0) || !(b.eps_net > 0.0) || !(b.gap > 0.0))
        throw std::invalid_argument("codec budget: eps_f >= 0, eps_net > 0, gap > 0 required");
    const double lemma = 4.0 * b.eps_f + 2.0 * b.eps_net;
    if (std::abs(b.lemma_bound - lemma) > 1e-12 ||
        std::abs(b.outer_scale - (lemma + b.gap)) > 1e-12 ||
        std::abs(b.total_error - (lemma + b.eps_net)) > 1e-12 ||
        std::abs(b.threshold - b.gap / 2.0) > 1e-12)
        throw std::invalid_argument("codec budget: fields inconsistent with (eps_f, eps_net, gap)");
    if (b.total_error >= b.gap / 2.0)
        throw std::invalid_argument("codec budget: infeasible, total error reaches gap/2");
}

} // namespace

void to_json(nlohmann::json& j, const CodecBudget& b) {
    j = nlohmann::json{{"eps_f", b.eps_f},
                       {"eps_net", b.eps_net},
                       {"gap", b.gap},
                       {"lemma_bound", b.lemma_bound},
                       {"outer_scale", b.outer_scale},
                       {"total_error", b.total_error},
                       {"threshold", b.threshold}};
}

CodecBudget plan_budget(double eps_f, double eps_net, double gap) {
    CodecBudget b;
    b.eps_f = eps_f;
    b.eps_net = eps_net;
    b.gap = gap;
    b.lemma_bound = 4.0 * eps_f + 2.0 * eps_net;
    b.outer_scale = b.lemma_bound + gap;
    b.total_error = b.lemma_bound + eps_net;
    b.threshold = gap / 2.0;
    check_budget_consistency(b);
    return b;
}

void to_json(nlohmann::json& j, const BitstreamHeader& h) {
    j = nlohmann::json{{"n", h.n},           {"d", h.d},
                       {"Q", h.Q},           {"k", h.k},
                       {"m", h.m},           {"w", h.w},
                       {"eps_f", h.eps_f},   {"eps_net", h.eps_net},
                       {"gap", h.gap},       {"c2_size", h.c2_size},
                       {"cinf_size", h.cinf_size}};
}

std::size_t predict_bits(int d, int Q, std::uint64_t c2_size, std::uint64_t cinf_size) {
    if (d < 0 || Q < 0) throw std::invalid_argument("predict_bits: negative counts");
    const std::size_t payload = static_cast<std::size_t>(d) * index_width(c2_size) +
                                static_cast<std::size_t>(Q) * index_width(cinf_size);
    const std::size_t total = kHeaderBits + payload;
    return (total + 7) / 8 * 8;
}

BitstreamHeader parse_header(const Bitstream& bits) {
    if (bits.bytes.size() < kHeaderBytes) throw std::runtime_error("bitstream: shorter than header");
    for (int i = 0; i < 4; ++i)
        if (bits.bytes[static_cast<std::size_t>(i)] != static_cast<std::uint8_t>(kMagic[i]))
            throw std::runtime_error("bitstream: bad magic");
    ByteReader r(bits.bytes, 4);
    if (r.u8() != kVersion) throw std::runtime_error("bitstream: unsupported version");
    BitstreamHeader h;
    h.n = r.u32();
    h.d = r.u32();
    h.Q = r.u32();
    h.k = r.u32();
    h.m = r.u32();
    h.w = r.u8();
    h.eps_f = r.f64();
    h.eps_net = r.f64();
    h.gap = r.f64();
    h.c2_size = r.u64();
    h.cinf_size = r.u64();
    if (h.n != h.d + h.Q + 1) throw std::runtime_error("bitstream: n != d + Q + 1");
    if (h.d == 0 || h.m == 0 || h.w == 0 || h.c2_size == 0 || h.cinf_size == 0)
        throw std::runtime_error("bitstream: degenerate header field");
    return h;
}

Bitstream encode(const HardInstance& instance, const PointSequence& Y, int m,
                 const CodecBudget& budget, const NetBuildOptions& net_opts) {
    check_budget_consistency(budget);
    const HardInstanceParams& p = instance.params;
    if (std::abs(budget.gap - p.gap) > 1e-12)
        throw std::invalid_argument("encode: budget gap differs from the instance gap");
    if (Y.dim != m) throw std::invalid_argument("encode: Y.dim differs from m");
    if (Y.size() != instance.points.size())
        throw std::invalid_argument("encode: embedded sequence has wrong length");
    if (Y[0].lpNorm<Eigen::Infinity>() > 1e-12)
        throw std::invalid_argument("encode: Y must be translated so Y[0] = 0");

    // Net over the l2 ball that contains every embedded unit vector.
    const BodyDescriptor ball = L2Ball{m, 1.0 + budget.eps_f};
    const auto c2 = build_net_cached(ball, budget.eps_net, net_opts);

    std::vector<std::uint64_t> c2_index(static_cast<std::size_t>(p.d));
    Mat a(p.d, m);
    for (int j = 0; j < p.d; ++j) {
        const int idx = locate(*c2, Y[static_cast<std::size_t>(j) + 1]);
        c2_index[static_cast<std::size_t>(j)] = static_cast<std::uint64_t>(idx);
        a.row(j) = c2->centers[static_cast<std::size_t>(idx)].transpose();
    }

    const SubspaceBasis basis = orthonormalize_columns(a);
    const BodyDescriptor slice = SliceBody{p.d, basis.columns, budget.outer_scale};
    const auto cinf = build_net_cached(slice, budget.eps_net / budget.outer_scale, net_opts);

    std::vector<std::uint64_t> cinf_index(static_cast<std::size_t>(p.Q));
    for (int ell = 0; ell < p.Q; ++ell) {
        const Vec v = a * Y[static_cast<std::size_t>(1 + p.d + ell)];
        const double nu = v.lpNorm<Eigen::Infinity>() / budget.outer_scale;
        if (nu > 1.0 + 1e-6)
            throw std::runtime_error("encode: coordinate vector escapes the outer slice body "
                                     "(embedding violated the distortion guarantee)");
        const Vec c = basis.columns.transpose() * v;
        cinf_index[static_cast<std::size_t>(ell)] =
            static_cast<std::uint64_t>(locate(*cinf, c));
    }

    Bitstream bits;
    bits.bytes.reserve(predict_bits(p.d, p.Q, c2->centers.size(), cinf->centers.size()) / 8);
    ByteWriter bw(bits.bytes);
    for (char ch : kMagic) bw.u8(static_cast<std::uint8_t>(ch));
    bw.u8(kVersion);
    bw.u32(static_cast<std::uint32_t>(p.n));
    bw.u32(static_cast<std::uint32_t>(p.d));
    bw.u32(static_cast<std::uint32_t>(p.Q));
    bw.u32(static_cast<std::uint32_t>(p.k));
    bw.u32(static_cast<std::uint32_t>(m));
    bw.u8(static_cast<std::uint8_t>(basis.intrinsic_dim));
    bw.f64(budget.eps_f);
    bw.f64(budget.eps_net);
    bw.f64(budget.gap);
    bw.u64(c2->centers.size());
    bw.u64(cinf->centers.size());

    BitWriter packer(bits.bytes);
    const int w2 = index_width(c2->centers.size());
    for (std::uint64_t idx : c2_index) packer.put(idx, w2);
    const int winf = index_width(cinf->centers.size());
    for (std::uint64_t idx : cinf_index) packer.put(idx, winf);

    return bits;
}

DecodeResult decode_detail(const Bitstream& bits, const NetBuildOptions& net_opts) {
    DecodeResult out;
    out.header = parse_header(bits);
    const BitstreamHeader& h = out.header;
    if (bits.bit_size() != predict_bits(static_cast<int>(h.d), static_cast<int>(h.Q),
                                        h.c2_size, h.cinf_size))
        throw std::runtime_error("bitstream: length differs from the header's implied size");

    const BodyDescriptor ball = L2Ball{static_cast<int>(h.m), 1.0 + h.eps_f};
    const auto c2 = build_net_cached(ball, h.eps_net, net_opts);
    if (c2->centers.size() != h.c2_size)
        throw std::runtime_error("bitstream: rebuilt l2 net size differs from header");

    BitReader reader(bits.bytes, kHeaderBytes);
    const int w2 = index_width(h.c2_size);
    Mat a(static_cast<int>(h.d), static_cast<int>(h.m));
    for (std::uint32_t j = 0; j < h.d; ++j) {
        const std::uint64_t idx = reader.get(w2);
        if (idx >= h.c2_size) throw std::runtime_error("bitstream: l2 net index out of range");
        a.row(static_cast<int>(j)) = c2->centers[static_cast<std::size_t>(idx)].transpose();
    }

    const SubspaceBasis basis = orthonormalize_columns(a);
    if (basis.intrinsic_dim != static_cast<int>(h.w))
        throw std::runtime_error("bitstream: reconstructed subspace rank differs from header");
    const double outer = 4.0 * h.eps_f + 2.0 * h.eps_net + h.gap;
    const BodyDescriptor slice = SliceBody{static_cast<int>(h.d), basis.columns, outer};
    const auto cinf = build_net_cached(slice, h.eps_net / outer, net_opts);
    if (cinf->centers.size() != h.cinf_size)
        throw std::runtime_error("bitstream: rebuilt slice net size differs from header");

    const double threshold = h.gap / 2.0;
    const int winf = index_width(h.cinf_size);
    out.supports.reserve(h.Q);
    out.coord_vectors.reserve(h.Q);
    for (std::uint32_t ell = 0; ell < h.Q; ++ell) {
        const std::uint64_t idx = reader.get(winf);
        if (idx >= h.cinf_size) throw std::runtime_error("bitstream: slice net index out of range");
        Vec coords = basis.columns * cinf->centers[static_cast<std::size_t>(idx)];
        out.supports.push_back(supports_from_coords(coords, threshold));
        out.coord_vectors.push_back(std::move(coords));
    }
    return out;
}

std::vector<SupportSet> decode(const Bitstream& bits, const NetBuildOptions& net_opts) {
    return decode_detail(bits, net_opts).supports;
}

SupportSet supports_from_coords(const Vec& coords, double threshold) {
    SupportSet s;
    for (int j = 0; j < coords.size(); ++j)
        if (coords[j] >= threshold) s.indices.push_back(j + 1);
    return s;
}

CloseIPsCheck closeips_bound_check(const Vec& fhat_e, const Vec& f_y, const Vec& e, const Vec& y,
                                   double eps_f, double eps_net) {
    if (fhat_e.size() != f_y.size() || e.size() != y.size())
        throw std::invalid_argument("closeips_bound_check: dimension mismatch");
    CloseIPsCheck c;
    c.measured = std::abs(fhat_e.dot(f_y) - e.dot(y));
    c.bound = 4.0 * eps_f + 2.0 * eps_net + 1e-9;
    c.passed = c.measured <= c.bound;
    return c;
}

} // namespace jllb
