#include "jllb/report.hpp"

#include "jllb/embed.hpp"
#include "jllb/hard_instance.hpp"
#include "jllb/rng.hpp"
#include "jllb/version.hpp"
#include "jllb/welch.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace jllb {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double finite_or_cap(double v) { return std::isfinite(v) ? v : 1e308; }

nlohmann::json outcome_to_json(const RoundtripOutcome& o) {
    return nlohmann::json{{"recovered", o.recovered},
                          {"bits_exact", o.bits_exact},
                          {"coord_error_ok", o.coord_error_ok},
                          {"gap_ok", o.gap_ok},
                          {"guarantee_ok", o.guarantee_ok},
                          {"bit_size", o.bit_size},
                          {"c2_size", o.c2_size},
                          {"cinf_size", o.cinf_size},
                          {"w", o.w},
                          {"max_coord_error", o.max_coord_error},
                          {"gap_margin", finite_or_cap(o.gap_margin)}};
}

int require_int(const nlohmann::json& p, const char* key, int lo, int hi) {
    if (!p.contains(key)) throw std::invalid_argument(std::string("config: missing '") + key + "'");
    const auto v = p.at(key).get<std::int64_t>();
    if (v < lo || v > hi)
        throw std::invalid_argument(std::string("config: '") + key + "' out of range");
    return static_cast<int>(v);
}

double require_real(const nlohmann::json& p, const char* key, double lo, double hi) {
    if (!p.contains(key)) throw std::invalid_argument(std::string("config: missing '") + key + "'");
    const double v = p.at(key).get<double>();
    if (!(v >= lo && v <= hi))
        throw std::invalid_argument(std::string("config: '") + key + "' out of range");
    return v;
}

} // namespace

void to_json(nlohmann::json& j, const ExperimentConfig& cfg) {
    j = nlohmann::json{{"mode", cfg.mode}, {"params", cfg.params}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& cfg) {
    cfg.mode = j.at("mode").get<std::string>();
    cfg.params = j.value("params", nlohmann::json::object());
}

RoundtripOutcome run_roundtrip(const RoundtripSpec& spec) {
    const auto t0 = std::chrono::steady_clock::now();

    const HardInstanceParams params = direct_params(spec.d, spec.k, spec.Q);
    const HardInstance inst = build_instance(params, spec.seed);

    const ProjectionMatrix f = isometry_projection(spec.d, spec.m, rng::derive(spec.seed, 1));
    PointSequence y = apply_embedding(f, inst.points);
    if (spec.jitter > 0.0) y = radial_scale_per_point(y, spec.jitter, rng::derive(spec.seed, 2));
    y = translate_to_origin(y, 0);

    RoundtripOutcome out;
    const double check_eps = std::max({spec.jitter, spec.plan_eps_f, 1e-9});
    out.guarantee_ok = check_jl_guarantee(inst.points, y, check_eps).passed;

    const CodecBudget budget = plan_budget(spec.plan_eps_f, spec.eps_net, params.gap);
    const Bitstream bits = encode(inst, y, spec.m, budget, spec.net_opts);
    const BitstreamHeader hdr = parse_header(bits);
    out.bit_size = bits.bit_size();
    out.c2_size = hdr.c2_size;
    out.cinf_size = hdr.cinf_size;
    out.w = hdr.w;
    out.bits_exact =
        bits.bit_size() == predict_bits(spec.d, spec.Q, hdr.c2_size, hdr.cinf_size);

    const DecodeResult dec = decode_detail(bits, spec.net_opts);
    out.recovered = dec.supports == inst.supports;

    double max_err = 0.0;
    double min_margin = std::numeric_limits<double>::infinity();
    for (int ell = 0; ell < spec.Q; ++ell) {
        const Vec& coords = dec.coord_vectors[static_cast<std::size_t>(ell)];
        const SupportSet& s = inst.supports[static_cast<std::size_t>(ell)];
        double min_in = std::numeric_limits<double>::infinity();
        double max_out = -std::numeric_limits<double>::infinity();
        std::size_t next = 0;
        for (int j = 1; j <= spec.d; ++j) {
            const bool inside = next < s.indices.size() && s.indices[next] == j;
            if (inside) ++next;
            const double truth = inside ? params.gap : 0.0;
            max_err = std::max(max_err, std::abs(coords[j - 1] - truth));
            if (inside)
                min_in = std::min(min_in, coords[j - 1]);
            else
                max_out = std::max(max_out, coords[j - 1]);
        }
        min_margin = std::min(min_margin, min_in - max_out);
    }
    out.max_coord_error = max_err;
    out.gap_margin = spec.Q > 0 ? min_margin : std::numeric_limits<double>::infinity();
    out.coord_error_ok = max_err <= budget.total_error + 1e-9;
    out.gap_ok = spec.Q == 0 ||
                 out.gap_margin >= params.gap - 2.0 * budget.total_error - 1e-9;

    out.wall_seconds = seconds_since(t0);
    return out;
}

NetAuditResult audit_net(const BodyDescriptor& body, double eps_net, int samples,
                         const NetBuildOptions& opts) {
    NetAuditResult res;
    const auto t0 = std::chrono::steady_clock::now();

    const Net net = build_net(body, eps_net, opts);
    const Net net_again = build_net(body, eps_net, opts);
    Net net_threaded;
    std::thread worker([&] { net_threaded = build_net(body, eps_net, opts); });
    worker.join();

    auto identical = [](const Net& a, const Net& b) {
        if (a.centers.size() != b.centers.size()) return false;
        for (std::size_t i = 0; i < a.centers.size(); ++i)
            if (a.centers[i] != b.centers[i]) return false;
        return true;
    };
    const bool deterministic = identical(net, net_again) && identical(net, net_threaded);

    // Covering: every sampled body point must be within eps_net of a center.
    int covered = 0;
    double worst_cover = 0.0;
    const auto points = sample_body_points(body, samples);
    for (const Vec& x : points) {
        const int idx = locate(net, x);
        const double dist = net.center_distance(to_ambient(body, x), idx);
        worst_cover = std::max(worst_cover, dist);
        if (dist <= eps_net + 1e-9) ++covered;
    }
    const bool covering_ok = covered == static_cast<int>(points.size());

    // Separation: exhaustive up to 10^4 centers, sampled pairs beyond that.
    const double sep = eps_net / 2.0;
    bool separation_ok = true;
    double min_sep = std::numeric_limits<double>::infinity();
    const std::size_t nc = net.centers.size();
    if (nc >= 2) {
        if (nc <= 10000) {
            for (std::size_t i = 0; i < nc && separation_ok; ++i)
                for (std::size_t j = i + 1; j < nc; ++j) {
                    const double dist =
                        net.center_distance(net.center_ambient[i], static_cast<int>(j));
                    min_sep = std::min(min_sep, dist);
                    if (dist <= sep) {
                        separation_ok = false;
                        break;
                    }
                }
        } else {
            for (std::uint64_t t = 0; t < 100000; ++t) {
                const auto i = rng::below(7, 2 * t, nc);
                auto j = rng::below(7, 2 * t + 1, nc - 1);
                if (j >= i) ++j;
                const double dist =
                    net.center_distance(net.center_ambient[i], static_cast<int>(j));
                min_sep = std::min(min_sep, dist);
                if (dist <= sep) separation_ok = false;
            }
        }
    }

    const CoverBoundReport bounds = verify_cover_bound(net);

    res.passed = deterministic && covering_ok && separation_ok && bounds.within_packing;
    res.doc = nlohmann::json{{"body", nlohmann::json(net.body)},
                             {"eps_net", eps_net},
                             {"center_count", nc},
                             {"samples", samples},
                             {"covering_ok", covering_ok},
                             {"worst_covering_distance", worst_cover},
                             {"separation_ok", separation_ok},
                             {"min_separation", finite_or_cap(min_sep)},
                             {"deterministic", deterministic},
                             {"bounds", bounds},
                             {"passed", res.passed}};
    res.doc["timings"] = {{"seconds", seconds_since(t0)}};
    return res;
}

BodyDescriptor body_from_json(const nlohmann::json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "l2_ball") {
        L2Ball b;
        b.dim = require_int(j, "dim", 1, 64);
        b.radius = require_real(j, "radius", 1e-12, 1e12);
        return b;
    }
    if (type != "slice") throw std::invalid_argument("body: unknown type '" + type + "'");

    SliceBody s;
    s.ambient_dim = require_int(j, "ambient_dim", 1, 4096);
    s.scale = require_real(j, "scale", 1e-12, 1e12);
    if (j.contains("basis")) {
        const auto& rows = j.at("basis");
        const int w = static_cast<int>(rows.at(0).size());
        s.basis.resize(s.ambient_dim, w);
        for (int i = 0; i < s.ambient_dim; ++i)
            for (int c = 0; c < w; ++c) s.basis(i, c) = rows.at(i).at(c).get<double>();
    } else if (j.contains("axes")) {
        const auto axes = j.at("axes").get<std::vector<int>>();
        s.basis = Mat::Zero(s.ambient_dim, static_cast<int>(axes.size()));
        for (std::size_t c = 0; c < axes.size(); ++c) {
            if (axes[c] < 1 || axes[c] > s.ambient_dim)
                throw std::invalid_argument("body: slice axis out of range");
            s.basis(axes[c] - 1, static_cast<int>(c)) = 1.0;
        }
    } else if (j.contains("basis_seed")) {
        const int w = require_int(j, "slice_dim", 1, s.ambient_dim);
        const auto seed = j.at("basis_seed").get<std::uint64_t>();
        Mat g(s.ambient_dim, w);
        for (int i = 0; i < s.ambient_dim; ++i)
            for (int c = 0; c < w; ++c)
                g(i, c) = rng::gaussian(seed, static_cast<std::uint64_t>(i) * w + c);
        s.basis = orthonormalize_columns(g).columns;
        if (s.basis.cols() != w) throw std::invalid_argument("body: seeded basis rank deficient");
    } else {
        throw std::invalid_argument("body: slice needs 'basis', 'axes', or 'basis_seed'");
    }
    return s;
}

namespace {

nlohmann::json mode_roundtrip(const nlohmann::json& p, bool& passed) {
    RoundtripSpec spec;
    spec.d = require_int(p, "d", 1, 64);
    spec.k = require_int(p, "k", 1, spec.d);
    spec.Q = require_int(p, "Q", 0, 1 << 20);
    spec.m = require_int(p, "m", 1, spec.d);
    spec.eps_net = require_real(p, "eps_net", 1e-9, 1.0);
    spec.plan_eps_f = p.value("plan_eps_f", 0.0);
    spec.jitter = p.value("jitter", 0.0);
    spec.net_opts.candidate_budget =
        p.value("net_budget", static_cast<std::size_t>(1'000'000'000));
    const int seeds = p.contains("seeds") ? require_int(p, "seeds", 1, 10000) : 20;
    const auto seed0 = p.value("seed0", static_cast<std::uint64_t>(1));

    auto runs = nlohmann::json::array();
    auto timings = nlohmann::json::array();
    bool all = true;
    for (int i = 0; i < seeds; ++i) {
        spec.seed = seed0 + static_cast<std::uint64_t>(i);
        const RoundtripOutcome o = run_roundtrip(spec);
        all = all && o.all_ok();
        auto entry = outcome_to_json(o);
        entry["seed"] = spec.seed;
        runs.push_back(std::move(entry));
        timings.push_back(o.wall_seconds);
    }
    passed = all;
    nlohmann::json results{{"runs", std::move(runs)},
                           {"verdicts",
                            {{"all_recovered", all},
                             {"note", "per-run verdicts cover recovery, bit accounting, "
                                      "coordinate error, gap preservation, and the "
                                      "distortion guarantee"}}}};
    results["timings"] = {{"per_seed_seconds", std::move(timings)}};
    return results;
}

nlohmann::json mode_djl_scan(const nlohmann::json& p, bool& passed) {
    const double eps = require_real(p, "eps", 1e-6, 0.999999);
    const int d = p.contains("d") ? require_int(p, "d", 1, 1 << 20) : 8;
    const int trials = require_int(p, "trials", 1, 10'000'000);
    const auto seed = p.value("seed", static_cast<std::uint64_t>(1));
    std::vector<int> m_values;
    if (p.contains("m_values")) m_values = p.at("m_values").get<std::vector<int>>();

    auto estimates = nlohmann::json::array();
    bool monotone = true;
    double prev_rate = 0.0, prev_var = 0.0;
    bool have_prev = false;
    for (int m : m_values) {
        if (m < 1) throw std::invalid_argument("config: m_values must be positive");
        const DJLEstimate e = djl_failure_rate(eps, d, m, trials, seed);
        const double var = e.delta_hat * (1.0 - e.delta_hat);
        if (have_prev) {
            const double tol =
                2.0 * std::sqrt((prev_var + var) / static_cast<double>(trials)) +
                2.0 / static_cast<double>(trials);
            if (e.delta_hat > prev_rate + tol) monotone = false;
        }
        prev_rate = e.delta_hat;
        prev_var = var;
        have_prev = true;
        estimates.push_back(e);
    }

    nlohmann::json results{{"estimates", std::move(estimates)}};
    bool small_at_sufficient_m = true;
    if (p.contains("delta")) {
        const double delta = require_real(p, "delta", 1e-9, 0.999999);
        // Sufficient dimension for failure rate delta; the constant 8 is a
        // toolkit choice, not a derived value.
        const int m_star =
            static_cast<int>(std::ceil(8.0 / (eps * eps) * std::log(1.0 / delta)));
        const DJLEstimate at_star = djl_failure_rate(eps, d, m_star, trials, seed);
        small_at_sufficient_m = at_star.delta_hat < delta;
        results["sufficient_m"] = m_star;
        results["estimate_at_sufficient_m"] = at_star;
    }
    results["verdicts"] = {{"monotone_within_2se", monotone},
                           {"small_at_sufficient_m", small_at_sufficient_m}};
    passed = monotone && small_at_sufficient_m;
    return results;
}

nlohmann::json mode_net_audit(const nlohmann::json& p, bool& passed) {
    if (!p.contains("bodies")) throw std::invalid_argument("config: missing 'bodies'");
    const int samples = p.contains("samples") ? require_int(p, "samples", 1, 10'000'000) : 10000;
    NetBuildOptions opts;
    opts.candidate_budget = p.value("net_budget", opts.candidate_budget);

    auto audits = nlohmann::json::array();
    bool all = true;
    for (const auto& item : p.at("bodies")) {
        const BodyDescriptor body = body_from_json(item.at("body"));
        const double eps_net = require_real(item, "eps_net", 1e-9, 1.0);
        NetAuditResult a = audit_net(body, eps_net, samples, opts);
        all = all && a.passed;
        audits.push_back(std::move(a.doc));
    }
    passed = all;
    return nlohmann::json{{"audits", std::move(audits)}, {"verdicts", {{"all_passed", all}}}};
}

nlohmann::json mode_counting(const nlohmann::json& p, bool& passed) {
    const int d_from = p.contains("d_from") ? require_int(p, "d_from", 2, 512) : 4;
    const int d_to = p.contains("d_to") ? require_int(p, "d_to", d_from, 512) : 64;
    std::vector<int> q_values{1, 5, 50};
    if (p.contains("Q_values")) q_values = p.at("Q_values").get<std::vector<int>>();

    bool chain_all = true;
    long checked = 0;
    for (int d = d_from; d <= d_to; ++d)
        for (int k = 1; k <= d / 2; ++k)
            for (int q : q_values) {
                const FamilySize f = family_size(d, k, q);
                chain_all = chain_all && f.chain_mid_ok && f.chain_low_ok;
                ++checked;
            }

    nlohmann::json results{{"grid",
                            {{"d_from", d_from},
                             {"d_to", d_to},
                             {"Q_values", q_values},
                             {"triples_checked", checked}}}};
    if (p.contains("echo")) {
        const auto& e = p.at("echo");
        const int d = require_int(e, "d", 1, 512);
        const int k = require_int(e, "k", 0, d);
        const int q = require_int(e, "Q", 0, 100000);
        const FamilySize f = family_size(d, k, q);
        results["echo"] = {{"d", d},
                           {"k", k},
                           {"Q", q},
                           {"family_size", f.size.str()},
                           {"chain_mid_ok", f.chain_mid_ok},
                           {"chain_low_ok", f.chain_low_ok}};
    }
    if (p.contains("lower_bound_samples")) {
        auto samples = nlohmann::json::array();
        for (const auto& s : p.at("lower_bound_samples")) {
            const auto n = s.at("n").get<std::int64_t>();
            const double eps = s.at("eps").get<double>();
            samples.push_back({{"n", n}, {"eps", eps}, {"lower_bound_m", lower_bound_m(n, eps)}});
        }
        results["lower_bound_samples"] = std::move(samples);
    }
    results["verdicts"] = {{"chain_all", chain_all}};
    passed = chain_all;
    return results;
}

nlohmann::json mode_welch(const nlohmann::json& p, bool& passed) {
    const int m_from = p.contains("m_from") ? require_int(p, "m_from", 1, 64) : 2;
    const int m_to = p.contains("m_to") ? require_int(p, "m_to", m_from, 64) : 10;

    bool simplex_ok = true;
    auto simplex = nlohmann::json::array();
    for (int m = m_from; m <= m_to; ++m) {
        const double coh = coherence(regular_simplex(m));
        const double bound = welch_bound(m + 1, m, 1);
        const bool ok = std::abs(coh - bound) <= 1e-9;
        simplex_ok = simplex_ok && ok;
        simplex.push_back({{"m", m}, {"coherence", coh}, {"welch_bound", bound}, {"equal", ok}});
    }

    auto checks = nlohmann::json::array();
    if (p.contains("checks"))
        for (const auto& c : p.at("checks")) {
            const int n = c.at("n").get<int>();
            const int m = c.at("m").get<int>();
            const int k = c.at("k").get<int>();
            checks.push_back({{"n", n}, {"m", m}, {"k", k}, {"value", welch_bound(n, m, k)}});
        }

    bool random_ok = true;
    const int trials = p.contains("random_trials") ? require_int(p, "random_trials", 0, 1'000'000) : 1000;
    const auto seed = p.value("seed", static_cast<std::uint64_t>(1));
    for (int t = 0; t < trials; ++t) {
        const std::uint64_t key = rng::derive(seed, static_cast<std::uint64_t>(t));
        const int m = 2 + static_cast<int>(rng::below(key, 0, 5));
        const int n = m + 1 + static_cast<int>(rng::below(key, 1, 8));
        PointSequence x;
        x.dim = m;
        for (int i = 0; i < n; ++i) {
            Vec v(m);
            for (int c = 0; c < m; ++c)
                v[c] = rng::gaussian(key, 2 + static_cast<std::uint64_t>(i) * m + c);
            x.points.push_back(v / v.norm());
        }
        if (coherence(x) < welch_bound(n, m, 1) - 1e-9) random_ok = false;
    }

    passed = simplex_ok && random_ok;
    return nlohmann::json{{"simplex", std::move(simplex)},
                          {"checks", std::move(checks)},
                          {"random_trials", trials},
                          {"verdicts",
                           {{"simplex_equality", simplex_ok},
                            {"random_never_beat_bound", random_ok}}}};
}

} // namespace

Report run_experiment(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    bool passed = false;
    nlohmann::json results;
    if (cfg.mode == "roundtrip")
        results = mode_roundtrip(cfg.params, passed);
    else if (cfg.mode == "djl_scan")
        results = mode_djl_scan(cfg.params, passed);
    else if (cfg.mode == "net_audit")
        results = mode_net_audit(cfg.params, passed);
    else if (cfg.mode == "counting")
        results = mode_counting(cfg.params, passed);
    else if (cfg.mode == "welch")
        results = mode_welch(cfg.params, passed);
    else
        throw std::invalid_argument("run_experiment: unknown mode '" + cfg.mode + "'");

    // Quarantine timings under one subtree so the rest of the document is
    // byte-for-byte reproducible.
    nlohmann::json timings = nlohmann::json::object();
    if (results.contains("timings")) {
        timings = results.at("timings");
        results.erase("timings");
    }
    for (auto& item : results.items())
        if (item.value().is_object() && item.value().contains("timings")) {
            timings[item.key()] = item.value().at("timings");
            item.value().erase("timings");
        }
    if (results.contains("audits"))
        for (std::size_t i = 0; i < results.at("audits").size(); ++i) {
            auto& audit = results.at("audits").at(i);
            if (audit.contains("timings")) {
                timings["audit_" + std::to_string(i)] = audit.at("timings");
                audit.erase("timings");
            }
        }
    timings["total_seconds"] = seconds_since(t0);

    Report rep;
    rep.passed = passed;
    rep.doc = nlohmann::json{{"config", cfg},
                             {"toolkit_version", kToolkitVersion},
                             {"results", std::move(results)},
                             {"passed", passed},
                             {"timings", std::move(timings)}};
    return rep;
}

} // namespace jllb
