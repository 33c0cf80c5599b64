#ifndef JLLB_REPORT_HPP
#define JLLB_REPORT_HPP

#include "jllb/codec.hpp"
#include "jllb/net_cover.hpp"

#include <nlohmann/json.hpp>
#include <cstdint>
#include <string>

namespace jllb {

// One experiment request: a mode plus its mode-specific parameter map.
// Modes: roundtrip, djl_scan, net_audit, counting, welch.
struct ExperimentConfig {
    std::string mode;
    nlohmann::json params;
};

void to_json(nlohmann::json& j, const ExperimentConfig& cfg);
void from_json(const nlohmann::json& j, ExperimentConfig& cfg);

// Self-describing experiment output. The JSON document embeds the config and
// toolkit version, per-run results, and named verdicts; wall-clock numbers
// live only under the "timings" subtree so the rest diffs byte-for-byte.
struct Report {
    nlohmann::json doc;
    bool passed = false;
};

Report run_experiment(const ExperimentConfig& cfg);

// --- building blocks shared by the experiment modes, the CLI, and the
// --- acceptance suite

struct RoundtripSpec {
    int d = 4;
    int k = 1;
    int Q = 8;
    int m = 4;
    double eps_net = 0.15;
    double plan_eps_f = 0.0; // distortion the budget is planned for
    double jitter = 0.0;     // radial per-point perturbation applied to the embedding
    std::uint64_t seed = 1;
    NetBuildOptions net_opts{};
};

struct RoundtripOutcome {
    bool recovered = false;      // decoded supports equal the originals
    bool bits_exact = false;     // stream length matches predict_bits
    bool coord_error_ok = false; // per-coordinate error within the budget
    bool gap_ok = false;         // decoded in/out coordinate gap within bounds
    bool guarantee_ok = false;   // embedding passed the distortion check
    std::size_t bit_size = 0;
    std::uint64_t c2_size = 0, cinf_size = 0;
    int w = 0;
    double max_coord_error = 0.0;
    double gap_margin = 0.0; // min over supports of (min inside - max outside)
    double wall_seconds = 0.0;

    bool all_ok() const {
        return recovered && bits_exact && coord_error_ok && gap_ok && guarantee_ok;
    }
};

RoundtripOutcome run_roundtrip(const RoundtripSpec& spec);

struct NetAuditResult {
    nlohmann::json doc;
    bool passed = false;
};

// Covering / separation / cardinality / determinism audit of one net,
// including a rebuild on a separate thread to pin schedule independence.
NetAuditResult audit_net(const BodyDescriptor& body, double eps_net, int samples,
                         const NetBuildOptions& opts = {});

// Parses a body from JSON. Slices accept an explicit "basis" matrix, a list of
// 1-based ambient "axes", or a "basis_seed" for a random orthonormal basis of
// shape ambient_dim x slice_dim.
BodyDescriptor body_from_json(const nlohmann::json& j);

} // namespace jllb

#endif // JLLB_REPORT_HPP
