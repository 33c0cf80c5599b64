#include "jllb/net_cover.hpp"

#include "jllb/rng.hpp"

#include <nlohmann/json.hpp>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace jllb {

namespace {

constexpr double kLocateSlack = 1e-9;
constexpr double kOrthoTol = 1e-9;

const L2Ball* as_ball(const BodyDescriptor& b) { return std::get_if<L2Ball>(&b); }
const SliceBody* as_slice(const BodyDescriptor& b) { return std::get_if<SliceBody>(&b); }

void validate_body(const BodyDescriptor& body) {
    if (const L2Ball* ball = as_ball(body)) {
        if (ball->dim < 1) throw std::invalid_argument("L2Ball: dim must be >= 1");
        if (!(ball->radius > 0.0)) throw std::invalid_argument("L2Ball: radius must be positive");
        return;
    }
    const SliceBody& s = std::get<SliceBody>(body);
    if (!(s.scale > 0.0)) throw std::invalid_argument("SliceBody: scale must be positive");
    if (s.basis.rows() != s.ambient_dim || s.basis.cols() < 1 || s.basis.cols() > s.ambient_dim)
        throw std::invalid_argument("SliceBody: basis shape invalid");
    const Mat gram = s.basis.transpose() * s.basis;
    const Mat eye = Mat::Identity(s.basis.cols(), s.basis.cols());
    if ((gram - eye).cwiseAbs().maxCoeff() > kOrthoTol)
        throw std::invalid_argument("SliceBody: basis columns are not orthonormal");
}

// Largest intrinsic l2 distance compatible with one unit of body norm.
double l2_per_bodynorm(const BodyDescriptor& body) {
    if (const L2Ball* ball = as_ball(body)) return ball->radius;
    const SliceBody& s = std::get<SliceBody>(body);
    return s.scale * std::sqrt(static_cast<double>(s.ambient_dim));
}

std::uint64_t cell_key(const long long* ci, int w) {
    std::uint64_t h = 1469598103934665603ULL;
    for (int j = 0; j < w; ++j)
        h = rng::mix64(h ^ static_cast<std::uint64_t>(ci[j] + (1LL << 62)));
    return h;
}

double radical_inverse(unsigned base, std::uint64_t i) {
    double f = 1.0, r = 0.0;
    while (i) {
        f /= base;
        r += f * static_cast<double>(i % base);
        i /= base;
    }
    return r;
}

constexpr std::array<unsigned, 8> kHaltonBases{2, 3, 5, 7, 11, 13, 17, 19};

} // namespace

void CellTable::reset(std::size_t expected_cells) {
    std::size_t cap = 64;
    while (cap < expected_cells * 2) cap <<= 1;
    keys_.assign(cap, 0);
    heads_.assign(cap, -1);
    next_.clear();
    id_key_.clear();
    used_ = 0;
    mask_ = cap - 1;
}

int CellTable::head(std::uint64_t key) const {
    if (heads_.empty()) return -1;
    std::size_t slot = key & mask_;
    while (heads_[slot] >= 0) {
        if (keys_[slot] == key) return heads_[slot];
        slot = (slot + 1) & mask_;
    }
    return -1;
}

void CellTable::insert(std::uint64_t key, int id) {
    if (heads_.empty()) reset(64);
    if (static_cast<std::size_t>(id) != next_.size())
        throw std::logic_error("CellTable: ids must be inserted consecutively");
    next_.push_back(-1);
    id_key_.push_back(key);
    std::size_t slot = key & mask_;
    while (heads_[slot] >= 0) {
        if (keys_[slot] == key) {
            next_.back() = heads_[slot];
            heads_[slot] = id;
            return;
        }
        slot = (slot + 1) & mask_;
    }
    keys_[slot] = key;
    heads_[slot] = id;
    if (++used_ * 10 > keys_.size() * 7) grow();
}

void CellTable::grow() {
    const std::size_t cap = keys_.size() * 2;
    keys_.assign(cap, 0);
    heads_.assign(cap, -1);
    mask_ = cap - 1;
    used_ = 0;
    const std::size_t count = next_.size();
    std::vector<std::uint64_t> saved_keys = std::move(id_key_);
    next_.clear();
    id_key_.clear();
    for (std::size_t id = 0; id < count; ++id) insert(saved_keys[id], static_cast<int>(id));
}

void CellIndex::init_box(const long long* lo, const long long* hi, int w,
                         std::size_t dense_cell_limit) {
    w_ = w;
    lo_.assign(lo, lo + w);
    hi_.assign(hi, hi + w);
    strides_.assign(static_cast<std::size_t>(w), 1);
    long double cells = 1.0L;
    for (int j = w - 1; j >= 0; --j) {
        const long long dim = hi[j] - lo[j] + 1;
        if (dim <= 0) throw std::logic_error("CellIndex: empty box");
        cells *= static_cast<long double>(dim);
    }
    dense_ = cells <= static_cast<long double>(dense_cell_limit);
    next_.clear();
    if (dense_) {
        long long stride = 1;
        for (int j = w - 1; j >= 0; --j) {
            strides_[static_cast<std::size_t>(j)] = stride;
            stride *= hi[j] - lo[j] + 1;
        }
        heads_.assign(static_cast<std::size_t>(stride), -1);
    } else {
        heads_.clear();
        hash_.reset(1 << 12);
    }
}

void CellIndex::insert(const long long* ci, int id) {
    if (static_cast<std::size_t>(id) != next_.size())
        throw std::logic_error("CellIndex: ids must be inserted consecutively");
    if (dense_) {
        next_.push_back(-1);
        const long long flat = dense_flat(ci);
        next_.back() = heads_[static_cast<std::size_t>(flat)];
        heads_[static_cast<std::size_t>(flat)] = id;
        return;
    }
    next_.push_back(0); // chain is owned by the hash table in this mode
    hash_.insert(cell_key(ci, w_), id);
}

int CellIndex::head(const long long* ci) const {
    if (dense_) {
        if (!in_box(ci)) return -1;
        return heads_[static_cast<std::size_t>(dense_flat(ci))];
    }
    return hash_.head(cell_key(ci, w_));
}

int CellIndex::next(int id) const { return dense_ ? next_[static_cast<std::size_t>(id)] : hash_.next(id); }

SubspaceBasis orthonormalize_columns(const Mat& a) {
    if (a.rows() == 0 || a.cols() == 0)
        throw std::invalid_argument("orthonormalize_columns: empty matrix");
    const double rank_tol = 1e-10;
    std::vector<Vec> kept;
    for (int j = 0; j < a.cols(); ++j) {
        Vec v = a.col(j);
        const double original = v.norm();
        if (original == 0.0) continue;
        // Two Gram-Schmidt passes keep the basis orthonormal to near machine
        // precision even for ill-conditioned inputs.
        for (int pass = 0; pass < 2; ++pass)
            for (const Vec& q : kept) v -= q.dot(v) * q;
        const double residual = v.norm();
        if (residual > rank_tol * original) kept.push_back(v / residual);
    }
    if (kept.empty())
        throw std::invalid_argument("orthonormalize_columns: matrix has rank zero");
    SubspaceBasis b;
    b.ambient_dim = static_cast<int>(a.rows());
    b.intrinsic_dim = static_cast<int>(kept.size());
    b.columns.resize(a.rows(), static_cast<int>(kept.size()));
    for (std::size_t j = 0; j < kept.size(); ++j) b.columns.col(static_cast<int>(j)) = kept[j];
    return b;
}

int intrinsic_dim(const BodyDescriptor& body) {
    if (const L2Ball* ball = as_ball(body)) return ball->dim;
    return static_cast<int>(std::get<SliceBody>(body).basis.cols());
}

int ambient_dim(const BodyDescriptor& body) {
    if (const L2Ball* ball = as_ball(body)) return ball->dim;
    return std::get<SliceBody>(body).ambient_dim;
}

double body_scale(const BodyDescriptor& body) {
    if (const L2Ball* ball = as_ball(body)) return ball->radius;
    return std::get<SliceBody>(body).scale;
}

double body_norm(const BodyDescriptor& body, const Vec& c) {
    if (c.size() != intrinsic_dim(body))
        throw std::invalid_argument("body_norm: dimension mismatch");
    if (const L2Ball* ball = as_ball(body)) return c.norm() / ball->radius;
    const SliceBody& s = std::get<SliceBody>(body);
    return (s.basis * c).lpNorm<Eigen::Infinity>() / s.scale;
}

Vec to_ambient(const BodyDescriptor& body, const Vec& c) {
    if (as_ball(body)) return c;
    return std::get<SliceBody>(body).basis * c;
}

void to_json(nlohmann::json& j, const BodyDescriptor& body) {
    if (const L2Ball* ball = as_ball(body)) {
        j = nlohmann::json{{"type", "l2_ball"}, {"dim", ball->dim}, {"radius", ball->radius}};
        return;
    }
    const SliceBody& s = std::get<SliceBody>(body);
    auto rows = nlohmann::json::array();
    for (int i = 0; i < s.basis.rows(); ++i) {
        auto row = nlohmann::json::array();
        for (int k = 0; k < s.basis.cols(); ++k) row.push_back(s.basis(i, k));
        rows.push_back(std::move(row));
    }
    j = nlohmann::json{{"type", "slice"},
                       {"ambient_dim", s.ambient_dim},
                       {"scale", s.scale},
                       {"basis", std::move(rows)}};
}

void to_json(nlohmann::json& j, const Net& net) {
    nlohmann::json body;
    to_json(body, net.body);
    auto centers = nlohmann::json::array();
    for (const Vec& c : net.centers) {
        auto row = nlohmann::json::array();
        for (int i = 0; i < c.size(); ++i) row.push_back(c[i]);
        centers.push_back(std::move(row));
    }
    j = nlohmann::json{{"body", std::move(body)},
                       {"eps_net", net.eps_net},
                       {"grid_spacing", net.grid_spacing},
                       {"centers", std::move(centers)}};
}

double Net::center_distance(const Vec& query_ambient, int center_index) const {
    const Vec& ca = center_ambient[static_cast<std::size_t>(center_index)];
    if (as_ball(body)) return (query_ambient - ca).norm() / body_scale(body);
    return (query_ambient - ca).lpNorm<Eigen::Infinity>() / body_scale(body);
}

namespace {

// Shared state of one greedy construction run. Works on flat coordinate
// buffers; the separation test compares against precomputed absolute
// thresholds with per-coordinate early exit. A short list of recently seen
// blockers is tried before any spatial lookup: rejection is the common case
// and consecutive lattice candidates usually share a blocker. None of this
// changes the result, since rejection tests existence, not identity.
struct GreedyState {
    Net* net;
    int w = 0;
    int adim = 0;
    bool is_ball = true;
    double sep_abs = 0.0;    // slice: l-infinity threshold on ambient diffs
    double sep_abs_sq = 0.0; // ball: squared l2 threshold
    double inv_cell = 0.0;
    int recent[4] = {-1, -1, -1, -1};
    std::vector<double> coords;   // intrinsic, w per center
    std::vector<double> ambients; // ambient, adim per center
    std::vector<int> cell_hint;   // last useful blocker per dense cell

    bool blocked_by(const double* a, int id) const {
        const double* ca = ambients.data() + static_cast<std::size_t>(id) * adim;
        if (is_ball) {
            double sq = 0.0;
            for (int i = 0; i < adim; ++i) {
                const double diff = a[i] - ca[i];
                sq += diff * diff;
                if (sq > sep_abs_sq) return false;
            }
            return true;
        }
        for (int i = 0; i < adim; ++i)
            if (std::abs(a[i] - ca[i]) > sep_abs) return false;
        return true;
    }

    void remember(int id) {
        if (recent[0] == id) return;
        recent[3] = recent[2];
        recent[2] = recent[1];
        recent[1] = recent[0];
        recent[0] = id;
    }

    // Returns the blocking center id, or -1 when the candidate was selected.
    // The cell side is twice the separation radius, so for each axis only one
    // of the two neighbors (picked by which half of the cell the candidate
    // occupies) can hold a blocker: 2^w cells to scan in total.
    int consider(const double* c, const double* a) {
        for (int slot = 0; slot < 4; ++slot)
            if (recent[slot] >= 0 && blocked_by(a, recent[slot])) {
                const int id = recent[slot];
                remember(id);
                return id;
            }
        long long ci[8];
        long long side[8];
        for (int j = 0; j < w; ++j) {
            const double scaled = c[j] * inv_cell;
            const double fl = std::floor(scaled);
            ci[j] = static_cast<long long>(fl);
            side[j] = (scaled - fl) < 0.5 ? -1 : 1;
        }
        const unsigned combos = 1U << w;
        if (net->cells.dense()) {
            const long long base = net->cells.dense_flat(ci);
            // The sweep re-enters each cell once per lattice row; the blocker
            // that worked there last time usually still blocks.
            const int hinted = cell_hint[static_cast<std::size_t>(base)];
            if (hinted >= 0 && blocked_by(a, hinted)) {
                remember(hinted);
                return hinted;
            }
            long long sd[8];
            for (int j = 0; j < w; ++j) sd[j] = side[j] * net->cells.dense_stride(j);
            for (unsigned mask = 0; mask < combos; ++mask) {
                long long flat = base;
                for (int j = 0; j < w; ++j)
                    if (mask & (1U << j)) flat += sd[j];
                for (int id = net->cells.dense_head_flat(flat); id >= 0; id = net->cells.next(id)) {
                    if (blocked_by(a, id)) {
                        remember(id);
                        cell_hint[static_cast<std::size_t>(base)] = id;
                        return id;
                    }
                }
            }
        } else {
            long long probe[8];
            for (unsigned mask = 0; mask < combos; ++mask) {
                for (int j = 0; j < w; ++j)
                    probe[j] = ci[j] + ((mask & (1U << j)) ? side[j] : 0);
                for (int id = net->cells.head(probe); id >= 0; id = net->cells.next(id)) {
                    if (blocked_by(a, id)) {
                        remember(id);
                        return id;
                    }
                }
            }
        }
        const int index = static_cast<int>(coords.size() / static_cast<std::size_t>(w));
        coords.insert(coords.end(), c, c + w);
        ambients.insert(ambients.end(), a, a + adim);
        net->cells.insert(ci, index);
        if (net->cells.dense())
            cell_hint[static_cast<std::size_t>(net->cells.dense_flat(ci))] = index;
        remember(index);
        return -1;
    }

    void finalize() {
        const std::size_t count = coords.size() / static_cast<std::size_t>(w);
        net->centers.reserve(count);
        net->center_ambient.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            net->centers.emplace_back(
                Eigen::Map<const Vec>(coords.data() + i * static_cast<std::size_t>(w), w));
            net->center_ambient.emplace_back(
                Eigen::Map<const Vec>(ambients.data() + i * static_cast<std::size_t>(adim), adim));
        }
    }
};

} // namespace

Net build_net(const BodyDescriptor& body, double eps_net, const NetBuildOptions& opts) {
    validate_body(body);
    if (!(eps_net > 0.0 && eps_net <= 1.0))
        throw std::invalid_argument("build_net: eps_net must lie in (0, 1]");

    const bool is_ball = as_ball(body) != nullptr;
    const int w = intrinsic_dim(body);
    const int adim = ambient_dim(body);
    const double scale = body_scale(body);
    const double r = eps_net;     // covering radius, body-norm units
    const double shell = r / 4.0; // lattice density target / clamp window

    const SliceBody* slice = as_slice(body);
    double h;
    std::vector<double> axis_cap(static_cast<std::size_t>(w));
    if (is_ball) {
        h = r * scale / (2.0 * std::sqrt(static_cast<double>(w)));
        std::fill(axis_cap.begin(), axis_cap.end(), scale * (1.0 + shell));
    } else {
        // The lattice must be (r/4)-dense in body norm; a step of h moves the
        // ambient image by at most (h/2) * max row l1 norm in l-infinity.
        double rho = 0.0;
        for (int i = 0; i < adim; ++i) rho = std::max(rho, slice->basis.row(i).lpNorm<1>());
        h = r * scale / (2.0 * rho);
        for (int j = 0; j < w; ++j)
            axis_cap[static_cast<std::size_t>(j)] =
                scale * (1.0 + shell) * slice->basis.col(j).lpNorm<1>();
    }

    // Everything kept (body plus clamp shell) fits inside this intrinsic ball.
    const double rcap = l2_per_bodynorm(body) * (1.0 + shell) * (1.0 + 1e-12);
    const double rcap_sq = rcap * rcap;

    std::vector<long long> nlim(static_cast<std::size_t>(w));
    long double lattice_total = 1.0L;
    for (int j = 0; j < w; ++j) {
        nlim[static_cast<std::size_t>(j)] =
            static_cast<long long>(std::floor(axis_cap[static_cast<std::size_t>(j)] / h)) + 1;
        lattice_total *= static_cast<long double>(2 * nlim[static_cast<std::size_t>(j)] + 1);
    }
    if (lattice_total > static_cast<long double>(opts.candidate_budget))
        throw std::runtime_error("build_net: candidate lattice exceeds the configured budget");

    Net net;
    net.body = body;
    net.eps_net = eps_net;
    net.grid_spacing = h;
    const double kappa = l2_per_bodynorm(body);
    net.cell_side = r * kappa * (1.0 + 1e-6); // twice the separation radius
    {
        // Cell box covering every possible candidate, with margin for the
        // +/-2 probe rings used by locate.
        long long clo[8], chi[8];
        for (int j = 0; j < w; ++j) {
            const long long span = static_cast<long long>(
                std::floor(axis_cap[static_cast<std::size_t>(j)] / net.cell_side));
            clo[j] = -span - 2;
            chi[j] = span + 2;
        }
        net.cells.init_box(clo, chi, w);
    }

    GreedyState greedy;
    greedy.net = &net;
    greedy.w = w;
    greedy.adim = adim;
    greedy.is_ball = is_ball;
    greedy.sep_abs = (r / 2.0) * scale;
    greedy.sep_abs_sq = greedy.sep_abs * greedy.sep_abs;
    greedy.inv_cell = 1.0 / net.cell_side;

    const double shell_bound = scale * (1.0 + shell) * (1.0 + 1e-12);
    const double body_bound = scale;

    std::vector<double> coord(static_cast<std::size_t>(w), 0.0);
    std::vector<double> psq(static_cast<std::size_t>(w) + 1, 0.0);
    Mat amb_prefix;
    std::vector<Vec> bcol;
    if (!is_ball) {
        amb_prefix.resize(adim, w + 1);
        amb_prefix.col(0).setZero();
        bcol.reserve(static_cast<std::size_t>(w));
        for (int j = 0; j < w; ++j) bcol.push_back(slice->basis.col(j));
    }
    std::vector<double> cand(static_cast<std::size_t>(w)), cand_amb(static_cast<std::size_t>(adim));

    // Innermost axis: the admissible lattice range is an interval because
    // every membership constraint is linear (slice) or quadratic (ball) in the
    // last coordinate. Points in the clamp shell but outside the body are
    // projected radially onto the boundary.
    auto leaf_row = [&](int level) {
        const double base_sq = psq[static_cast<std::size_t>(level)];
        double shell_lo, shell_hi, body_lo, body_hi;
        if (is_ball) {
            const double rem_shell = shell_bound * shell_bound - base_sq;
            if (rem_shell <= 0.0) return;
            shell_hi = std::sqrt(rem_shell);
            shell_lo = -shell_hi;
            const double rem_body = body_bound * body_bound - base_sq;
            body_hi = rem_body > 0.0 ? std::sqrt(rem_body) : -1.0;
            body_lo = -body_hi;
        } else {
            shell_lo = body_lo = -std::numeric_limits<double>::infinity();
            shell_hi = body_hi = std::numeric_limits<double>::infinity();
            const double* base = amb_prefix.col(level).data();
            const double* col = bcol[static_cast<std::size_t>(level)].data();
            for (int i = 0; i < adim; ++i) {
                const double b = base[i], c = col[i];
                if (c == 0.0) {
                    if (std::abs(b) > shell_bound) return;
                    if (std::abs(b) > body_bound) body_hi = -std::numeric_limits<double>::infinity();
                    continue;
                }
                const double s1 = (-shell_bound - b) / c, s2 = (shell_bound - b) / c;
                shell_lo = std::max(shell_lo, std::min(s1, s2));
                shell_hi = std::min(shell_hi, std::max(s1, s2));
                const double b1 = (-body_bound - b) / c, b2 = (body_bound - b) / c;
                body_lo = std::max(body_lo, std::min(b1, b2));
                body_hi = std::min(body_hi, std::max(b1, b2));
            }
        }

        const long long lim = nlim[static_cast<std::size_t>(level)];
        const long long ilo = std::max(-lim, static_cast<long long>(std::ceil(shell_lo / h)));
        const long long ihi = std::min(lim, static_cast<long long>(std::floor(shell_hi / h)));
        // Integer sub-range that is certainly inside the body.
        const bool has_body = body_hi >= body_lo;
        const long long blo = has_body ? static_cast<long long>(std::ceil(body_lo / h))
                                       : std::numeric_limits<long long>::max();
        const long long bhi = has_body ? static_cast<long long>(std::floor(body_hi / h))
                                       : std::numeric_limits<long long>::min();

        const double* base = is_ball ? nullptr : amb_prefix.col(level).data();
        const double* col = is_ball ? nullptr : bcol[static_cast<std::size_t>(level)].data();

        // Largest v still blocked by center b along this axis; every lattice
        // point strictly below it (minus a safety margin) is provably blocked,
        // so the sweep can jump there directly without changing the outcome.
        auto blocked_until = [&](int b) -> double {
            const double* cb = greedy.ambients.data() + static_cast<std::size_t>(b) * adim;
            if (is_ball) {
                double pre2 = 0.0;
                for (int j = 0; j + 1 < w; ++j) {
                    const double diff = coord[static_cast<std::size_t>(j)] - cb[j];
                    pre2 += diff * diff;
                }
                const double rem = greedy.sep_abs_sq - pre2;
                if (rem <= 0.0) return -std::numeric_limits<double>::infinity();
                return cb[w - 1] + std::sqrt(rem);
            }
            double hi = std::numeric_limits<double>::infinity();
            for (int t = 0; t < adim; ++t) {
                if (col[t] == 0.0) continue;
                const double a1 = (cb[t] - greedy.sep_abs - base[t]) / col[t];
                const double a2 = (cb[t] + greedy.sep_abs - base[t]) / col[t];
                hi = std::min(hi, std::max(a1, a2));
            }
            return hi;
        };

        for (long long i = ilo; i <= ihi; ++i) {
            const double v = static_cast<double>(i) * h;
            coord[static_cast<std::size_t>(level)] = v;
            if (!is_ball)
                for (int t = 0; t < adim; ++t) cand_amb[static_cast<std::size_t>(t)] = base[t] + v * col[t];
            if (i >= blo && i <= bhi) {
                const int b = greedy.consider(coord.data(), is_ball ? coord.data() : cand_amb.data());
                if (b >= 0 && i < bhi) {
                    const double until = blocked_until(b);
                    if (std::isfinite(until)) {
                        const long long jump =
                            static_cast<long long>(std::floor((until - 1e-9) / h));
                        if (jump > i + 1) i = std::min(jump, bhi) - 1;
                    }
                }
                continue;
            }
            double nu;
            if (is_ball) {
                nu = std::sqrt(base_sq + v * v) / scale;
            } else {
                double worst = 0.0;
                for (int t = 0; t < adim; ++t)
                    worst = std::max(worst, std::abs(cand_amb[static_cast<std::size_t>(t)]));
                nu = worst / scale;
            }
            if (nu <= 1.0) {
                greedy.consider(coord.data(), is_ball ? coord.data() : cand_amb.data());
            } else if (nu <= (1.0 + shell) * (1.0 + 1e-12)) {
                for (int j = 0; j < w; ++j) cand[static_cast<std::size_t>(j)] = coord[static_cast<std::size_t>(j)] / nu;
                if (is_ball) {
                    greedy.consider(cand.data(), cand.data());
                } else {
                    for (int t = 0; t < adim; ++t) cand_amb[static_cast<std::size_t>(t)] /= nu;
                    greedy.consider(cand.data(), cand_amb.data());
                }
            }
        }
    };

    std::function<void(int)> visit = [&](int level) {
        if (level == w - 1) {
            leaf_row(level);
            return;
        }
        const double rem = rcap_sq - psq[static_cast<std::size_t>(level)];
        if (rem <= 0.0) return;
        const long long lim = std::min<long long>(
            nlim[static_cast<std::size_t>(level)],
            static_cast<long long>(std::floor(std::sqrt(rem) / h + 1e-12)));
        for (long long i = -lim; i <= lim; ++i) {
            const double v = static_cast<double>(i) * h;
            coord[static_cast<std::size_t>(level)] = v;
            psq[static_cast<std::size_t>(level) + 1] = psq[static_cast<std::size_t>(level)] + v * v;
            if (!is_ball)
                amb_prefix.col(level + 1) =
                    amb_prefix.col(level) + v * bcol[static_cast<std::size_t>(level)];
            visit(level + 1);
        }
    };
    if (w == 1) {
        leaf_row(0);
    } else {
        visit(0);
    }
    greedy.finalize();
    return net;
}

std::shared_ptr<const Net> build_net_cached(const BodyDescriptor& body, double eps_net,
                                            const NetBuildOptions& opts) {
    static std::mutex mu;
    static std::unordered_map<std::string, std::shared_ptr<const Net>> cache;

    std::string key;
    auto put = [&key](const void* p, std::size_t n) {
        key.append(static_cast<const char*>(p), n);
    };
    put(&eps_net, sizeof eps_net);
    if (const L2Ball* ball = as_ball(body)) {
        key.push_back('B');
        put(&ball->dim, sizeof ball->dim);
        put(&ball->radius, sizeof ball->radius);
    } else {
        const SliceBody& s = std::get<SliceBody>(body);
        key.push_back('S');
        put(&s.ambient_dim, sizeof s.ambient_dim);
        put(&s.scale, sizeof s.scale);
        const auto cols = s.basis.cols();
        put(&cols, sizeof cols);
        put(s.basis.data(), sizeof(double) * static_cast<std::size_t>(s.basis.size()));
    }

    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    auto built = std::make_shared<const Net>(build_net(body, eps_net, opts));
    std::lock_guard<std::mutex> lock(mu);
    auto [it, inserted] = cache.emplace(std::move(key), built);
    return it->second;
}

int locate(const Net& net, const Vec& x) {
    if (x.size() != intrinsic_dim(net.body))
        throw std::invalid_argument("locate: dimension mismatch");
    const int w = intrinsic_dim(net.body);
    const Vec xa = to_ambient(net.body, x);
    const double radius = net.eps_net + kLocateSlack;

    long long base[8];
    for (int j = 0; j < w; ++j)
        base[j] = static_cast<long long>(std::floor(x[j] / net.cell_side));
    // cell_side is eps_net * kappa, so the query radius spans one cell (two
    // in degenerate tiny-eps cases).
    const double kappa = l2_per_bodynorm(net.body);
    const long long ring =
        static_cast<long long>(std::ceil(radius * kappa / net.cell_side - 1e-12));

    int best = -1;
    long long probe[8];
    std::function<void(int)> scan = [&](int level) {
        if (level == w) {
            for (int id = net.cells.head(probe); id >= 0; id = net.cells.next(id))
                if ((best < 0 || id < best) && net.center_distance(xa, id) <= radius) best = id;
            return;
        }
        for (long long d = -ring; d <= ring; ++d) {
            probe[level] = base[level] + d;
            scan(level + 1);
        }
    };
    scan(0);
    if (best < 0)
        throw std::runtime_error(
            "locate: no covering center within eps_net (query outside the covered region)");
    return best;
}

void to_json(nlohmann::json& j, const CoverBoundReport& r) {
    j = nlohmann::json{{"center_count", r.center_count},
                       {"packing_bound", r.packing_bound},
                       {"volume_bound", r.volume_bound},
                       {"within_packing", r.within_packing},
                       {"ratio_to_volume", r.ratio_to_volume}};
}

CoverBoundReport verify_cover_bound(const Net& net) {
    CoverBoundReport rep;
    rep.center_count = net.centers.size();
    const double w = static_cast<double>(intrinsic_dim(net.body));
    rep.packing_bound = std::pow(1.0 + 4.0 / net.eps_net, w);
    rep.volume_bound = std::pow(1.0 + 2.0 / net.eps_net, w);
    rep.within_packing = static_cast<double>(rep.center_count) <= rep.packing_bound;
    rep.ratio_to_volume = static_cast<double>(rep.center_count) / rep.volume_bound;
    return rep;
}

std::vector<Vec> sample_body_points(const BodyDescriptor& body, int count, std::uint64_t scramble) {
    validate_body(body);
    if (count < 0) throw std::invalid_argument("sample_body_points: negative count");
    const int w = intrinsic_dim(body);
    if (w > static_cast<int>(kHaltonBases.size()))
        throw std::invalid_argument("sample_body_points: intrinsic dimension too large");

    std::vector<double> cap(static_cast<std::size_t>(w));
    if (const L2Ball* ball = as_ball(body)) {
        std::fill(cap.begin(), cap.end(), ball->radius);
    } else {
        const SliceBody& s = std::get<SliceBody>(body);
        for (int j = 0; j < w; ++j)
            cap[static_cast<std::size_t>(j)] = s.scale * s.basis.col(j).lpNorm<1>();
    }

    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(count));
    Vec c(w);
    const std::uint64_t limit = 200000ULL + 20000ULL * static_cast<std::uint64_t>(count);
    for (std::uint64_t i = 1; static_cast<int>(out.size()) < count; ++i) {
        if (i > limit)
            throw std::runtime_error("sample_body_points: acceptance rate too low for this body");
        for (int j = 0; j < w; ++j) {
            const double u = radical_inverse(kHaltonBases[static_cast<std::size_t>(j)], i + scramble);
            c[j] = cap[static_cast<std::size_t>(j)] * (2.0 * u - 1.0);
        }
        if (body_norm(body, c) <= 1.0) out.push_back(c);
    }
    return out;
}

} // namespace jllb
