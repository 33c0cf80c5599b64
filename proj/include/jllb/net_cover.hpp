#ifndef JLLB_NET_COVER_HPP
#define JLLB_NET_COVER_HPP

#include "jllb/geometry.hpp"

#include <nlohmann/json_fwd.hpp>
#include <cstdint>
#include <memory>
#include <unordered_map>
#include <variant>
#include <vector>

namespace jllb {

// Orthonormal basis of a column space, built left to right so the result is
// a deterministic function of the input matrix.
struct SubspaceBasis {
    int ambient_dim = 0;
    int intrinsic_dim = 0;
    Mat columns; // ambient_dim x intrinsic_dim, orthonormal
};

// Modified Gram-Schmidt with re-orthogonalization; columns whose residual
// falls below 1e-10 (relative to the input column) are dropped.
// Throws if the matrix has no nonzero column.
SubspaceBasis orthonormalize_columns(const Mat& a);

struct L2Ball {
    int dim = 0;
    double radius = 1.0;
};

// Intersection of a subspace with a scaled l_inf ball, parametrized in the
// subspace's intrinsic coordinates: c belongs to the body iff
// ||basis * c||_inf <= scale.
struct SliceBody {
    int ambient_dim = 0;
    Mat basis; // ambient_dim x w, orthonormal columns
    double scale = 1.0;
};

using BodyDescriptor = std::variant<L2Ball, SliceBody>;

int intrinsic_dim(const BodyDescriptor& body);
int ambient_dim(const BodyDescriptor& body);
double body_scale(const BodyDescriptor& body);

// Minkowski functional of the body: <= 1 iff c lies inside.
double body_norm(const BodyDescriptor& body, const Vec& c);

void to_json(nlohmann::json& j, const BodyDescriptor& body);

// Open-addressing table mapping spatial cell keys to chains of center
// indices. Lookup order never influences results (queries reduce with
// exists/min), so the table is purely an accelerator.
class CellTable {
public:
    void reset(std::size_t expected_cells);
    int head(std::uint64_t key) const; // first center id in the cell, -1 if none
    int next(int id) const { return next_[static_cast<std::size_t>(id)]; }
    void insert(std::uint64_t key, int id); // ids must arrive in increasing order

private:
    void grow();
    std::vector<std::uint64_t> keys_;
    std::vector<int> heads_;
    std::vector<int> next_;
    std::vector<std::uint64_t> id_key_;
    std::size_t used_ = 0;
    std::size_t mask_ = 0;
};

// Spatial index over integer cell coordinates: a direct-indexed grid when the
// bounding box is small enough, a hash table otherwise.
class CellIndex {
public:
    // lo/hi are inclusive per-axis cell bounds (with probe margin included).
    void init_box(const long long* lo, const long long* hi, int w,
                  std::size_t dense_cell_limit = 8'000'000);
    void insert(const long long* ci, int id); // ids must arrive in increasing order
    int head(const long long* ci) const;
    int next(int id) const;

    bool dense() const { return dense_; }
    // Dense-mode fast path: flat index arithmetic with precomputable strides.
    // Probes may fall outside the box only by the margin built into lo/hi.
    long long dense_flat(const long long* ci) const {
        long long f = 0;
        for (int j = 0; j < w_; ++j) f += (ci[j] - lo_[static_cast<std::size_t>(j)]) * strides_[static_cast<std::size_t>(j)];
        return f;
    }
    int dense_head_flat(long long flat) const { return heads_[static_cast<std::size_t>(flat)]; }
    long long dense_stride(int j) const { return strides_[static_cast<std::size_t>(j)]; }
    std::size_t dense_cell_count() const { return heads_.size(); }
    bool in_box(const long long* ci) const {
        for (int j = 0; j < w_; ++j)
            if (ci[j] < lo_[static_cast<std::size_t>(j)] || ci[j] > hi_[static_cast<std::size_t>(j)]) return false;
        return true;
    }

private:
    bool dense_ = false;
    int w_ = 0;
    std::vector<long long> lo_, hi_, strides_;
    std::vector<int> heads_;
    std::vector<int> next_;
    CellTable hash_;
};

// Deterministic covering of a body by metric balls of its own norm.
// eps_net is a fraction of the body scale: every body point lies within
// body-norm distance eps_net of some center, and centers are pairwise more
// than eps_net/2 apart. The construction is a pure function of
// (body, eps_net): an axis-aligned intrinsic lattice is filtered by
// membership (lattice points just outside are clamped radially onto the
// boundary), then scanned in lexicographic order keeping each candidate
// farther than eps_net/2 from everything kept so far.
struct Net {
    BodyDescriptor body;
    double eps_net = 0.0;
    double grid_spacing = 0.0;
    std::vector<Vec> centers; // intrinsic coordinates

    // Derived lookup structures (not part of the serialized form).
    std::vector<Vec> center_ambient;
    double cell_side = 0.0;
    CellIndex cells;

    // Body-norm distance between a query (by its ambient image) and a center.
    double center_distance(const Vec& query_ambient, int center_index) const;
};

void to_json(nlohmann::json& j, const Net& net);

struct NetBuildOptions {
    std::size_t candidate_budget = 100'000'000; // lattice points enumerated
};

Net build_net(const BodyDescriptor& body, double eps_net, const NetBuildOptions& opts = {});

// Memoized build keyed by the exact (body, eps_net) bytes; the returned net is
// shared and immutable. Used where the same net is rebuilt many times
// (the codec rebuilds nets from header parameters on every decode).
std::shared_ptr<const Net> build_net_cached(const BodyDescriptor& body, double eps_net,
                                            const NetBuildOptions& opts = {});

// Ambient image of an intrinsic point (basis * c for slices, identity for balls).
Vec to_ambient(const BodyDescriptor& body, const Vec& c);

// Smallest center index within body-norm distance eps_net (+1e-9 slack) of x
// (intrinsic coordinates). Throws if no center covers x, which signals a
// violated precondition upstream: every body point is covered by construction.
int locate(const Net& net, const Vec& x);

struct CoverBoundReport {
    std::size_t center_count = 0;
    double packing_bound = 0.0;   // (1 + 4/eps_net)^w, a hard bound
    double volume_bound = 0.0;    // (1 + 2/eps_net)^w, existential reference
    bool within_packing = false;
    double ratio_to_volume = 0.0; // center_count / volume_bound
};

void to_json(nlohmann::json& j, const CoverBoundReport& r);

// Compares the realized cardinality with the greedy packing bound (asserted)
// and the existential volume bound (reported only; a greedy net may
// legitimately exceed it).
CoverBoundReport verify_cover_bound(const Net& net);

// Deterministic low-discrepancy sample of body points in intrinsic
// coordinates (Halton sequence over the bounding box, filtered by membership).
std::vector<Vec> sample_body_points(const BodyDescriptor& body, int count,
                                    std::uint64_t scramble = 0);

} // namespace jllb

#endif // JLLB_NET_COVER_HPP
