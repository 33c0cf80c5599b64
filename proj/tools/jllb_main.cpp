#include "jllb/codec.hpp"
#include "jllb/embed.hpp"
#include "jllb/geometry.hpp"
#include "jllb/hard_instance.hpp"
#include "jllb/net_cover.hpp"
#include "jllb/report.hpp"
#include "jllb/version.hpp"
#include "jllb/welch.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <string>

namespace {

using nlohmann::json;

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    in >> j;
    return j;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text << "\n";
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text << "\n";
}

void emit(const json& doc, const std::string& out_path) {
    write_text(out_path, doc.dump(2));
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>());
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"jllb: distortion checks, epsilon-net coverings, and the net-index codec"};
    app.set_version_flag("--version", jllb::kToolkitVersion);
    app.require_subcommand(1);

    std::string out_path = "-";
    app.add_option("--out", out_path, "output file (default: stdout)")->capture_default_str();

    // gen-instance
    auto* gen = app.add_subcommand("gen-instance", "generate a hard instance");
    int gen_n = 0;
    double gen_eps = 0.0, gen_ck = 256.0;
    std::uint64_t gen_seed = 1;
    gen->add_option("--n", gen_n, "sequence length")->required();
    gen->add_option("--eps", gen_eps, "distortion parameter in (0, 1/2)")->required();
    gen->add_option("--ck", gen_ck, "support-size constant")->capture_default_str();
    gen->add_option("--seed", gen_seed, "support sampling seed")->capture_default_str();

    // embed
    auto* embed = app.add_subcommand("embed", "apply a seeded embedding to a point sequence");
    std::string embed_kind = "gaussian", embed_in;
    int embed_m = 0;
    std::uint64_t embed_seed = 1;
    embed->add_option("--kind", embed_kind, "gaussian|isometry")->capture_default_str();
    embed->add_option("--in", embed_in, "input PointSequence JSON")->required();
    embed->add_option("--m", embed_m, "target dimension")->required();
    embed->add_option("--seed", embed_seed, "projection seed")->capture_default_str();

    // encode
    auto* enc = app.add_subcommand("encode", "compress an embedded instance into net indices");
    std::string enc_instance, enc_embedding;
    double enc_eps_net = 0.15, enc_eps_f = 0.0;
    std::size_t enc_budget = 1'000'000'000;
    enc->add_option("--instance", enc_instance, "instance JSON")->required();
    enc->add_option("--embedding", enc_embedding, "embedded PointSequence JSON")->required();
    enc->add_option("--eps-net", enc_eps_net, "net covering radius")->capture_default_str();
    enc->add_option("--eps-f", enc_eps_f, "embedding distortion budget")->capture_default_str();
    enc->add_option("--net-budget", enc_budget, "candidate lattice budget")->capture_default_str();

    // decode
    auto* dec = app.add_subcommand("decode", "recover support sets from a bitstream");
    std::string dec_in;
    std::size_t dec_budget = 1'000'000'000;
    dec->add_option("--in", dec_in, "bitstream file")->required();
    dec->add_option("--net-budget", dec_budget, "candidate lattice budget")->capture_default_str();

    // verify
    auto* ver = app.add_subcommand("verify", "check the distortion guarantee for an embedding");
    std::string ver_instance, ver_embedding;
    double ver_eps = 0.1;
    ver->add_option("--instance", ver_instance, "original PointSequence or instance JSON")->required();
    ver->add_option("--embedding", ver_embedding, "embedded PointSequence JSON")->required();
    ver->add_option("--eps", ver_eps, "distortion parameter")->capture_default_str();

    // welch
    auto* wel = app.add_subcommand("welch", "coherence lower bound for n unit vectors in R^m");
    int wel_n = 0, wel_m = 0, wel_k = 1;
    std::string wel_points;
    wel->add_option("--n", wel_n, "number of vectors");
    wel->add_option("--m", wel_m, "ambient dimension");
    wel->add_option("--k", wel_k, "bound order")->capture_default_str();
    wel->add_option("--points", wel_points, "optional PointSequence JSON to compare coherence");

    // djl-estimate
    auto* djl = app.add_subcommand("djl-estimate", "empirical norm-distortion failure rate");
    double djl_eps = 0.25;
    int djl_d = 8, djl_m = 16, djl_trials = 10000;
    std::uint64_t djl_seed = 1;
    std::string djl_u;
    djl->add_option("--eps", djl_eps)->capture_default_str();
    djl->add_option("--d", djl_d)->capture_default_str();
    djl->add_option("--m", djl_m)->capture_default_str();
    djl->add_option("--trials", djl_trials)->capture_default_str();
    djl->add_option("--seed", djl_seed)->capture_default_str();
    djl->add_option("--u", djl_u, "optional JSON array with a custom test vector");

    // report
    auto* rep = app.add_subcommand("report", "run an experiment config");
    std::string rep_config;
    rep->add_option("--config", rep_config, "ExperimentConfig JSON")->required();

    // net-audit
    auto* aud = app.add_subcommand("net-audit", "build and audit one covering net");
    std::string aud_body;
    double aud_eps = 0.5;
    int aud_samples = 10000;
    std::size_t aud_budget = 100'000'000;
    aud->add_option("--body", aud_body, "body JSON file")->required();
    aud->add_option("--eps-net", aud_eps, "covering radius")->capture_default_str();
    aud->add_option("--samples", aud_samples, "covering sample count")->capture_default_str();
    aud->add_option("--net-budget", aud_budget, "candidate lattice budget")->capture_default_str();

    for (CLI::App* sub : {gen, embed, enc, dec, ver, wel, djl, rep, aud}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            const auto params = jllb::derive_params(gen_n, gen_eps, gen_ck);
            const auto inst = jllb::build_instance(params, gen_seed);
            emit(json(inst), out_path);
            return 0;
        }
        if (embed->parsed()) {
            jllb::PointSequence x = read_json(embed_in).get<jllb::PointSequence>();
            jllb::ProjectionMatrix p;
            if (embed_kind == "gaussian")
                p = jllb::gaussian_projection(x.dim, embed_m, embed_seed);
            else if (embed_kind == "isometry")
                p = jllb::isometry_projection(x.dim, embed_m, embed_seed);
            else
                throw std::invalid_argument("embed: kind must be gaussian or isometry");
            emit(json(jllb::apply_embedding(p, x)), out_path);
            return 0;
        }
        if (enc->parsed()) {
            const auto inst = read_json(enc_instance).get<jllb::HardInstance>();
            const auto y = read_json(enc_embedding).get<jllb::PointSequence>();
            const auto budget = jllb::plan_budget(enc_eps_f, enc_eps_net, inst.params.gap);
            jllb::NetBuildOptions opts;
            opts.candidate_budget = enc_budget;
            const auto bits = jllb::encode(inst, y, y.dim, budget, opts);
            if (out_path.empty() || out_path == "-")
                throw std::invalid_argument("encode: --out file required for binary output");
            write_bytes(out_path, bits.bytes);
            std::cout << json{{"bits", bits.bit_size()},
                              {"header", jllb::parse_header(bits)}}
                             .dump(2)
                      << "\n";
            return 0;
        }
        if (dec->parsed()) {
            jllb::Bitstream bits;
            bits.bytes = read_bytes(dec_in);
            jllb::NetBuildOptions opts;
            opts.candidate_budget = dec_budget;
            const auto res = jllb::decode_detail(bits, opts);
            auto supports = json::array();
            for (const auto& s : res.supports) supports.push_back(s.indices);
            emit(json{{"header", res.header}, {"supports", supports}}, out_path);
            return 0;
        }
        if (ver->parsed()) {
            const json ij = read_json(ver_instance);
            jllb::PointSequence x = ij.contains("points")
                                        ? ij.at("points").get<jllb::PointSequence>()
                                        : ij.get<jllb::PointSequence>();
            const auto y = read_json(ver_embedding).get<jllb::PointSequence>();
            const auto repx = jllb::check_jl_guarantee(x, y, ver_eps);
            emit(json(repx), out_path);
            return repx.passed ? 0 : 1;
        }
        if (wel->parsed()) {
            json doc;
            if (wel_n > 0 && wel_m > 0) doc["welch_bound"] = jllb::welch_bound(wel_n, wel_m, wel_k);
            if (!wel_points.empty()) {
                const auto x = read_json(wel_points).get<jllb::PointSequence>();
                doc["coherence"] = jllb::coherence(x);
                doc["welch_bound"] =
                    jllb::welch_bound(static_cast<int>(x.size()), x.dim, wel_k);
                doc["meets_bound"] =
                    doc["coherence"].get<double>() >= doc["welch_bound"].get<double>() - 1e-9;
            }
            if (doc.empty()) throw std::invalid_argument("welch: give --n/--m or --points");
            emit(doc, out_path);
            return 0;
        }
        if (djl->parsed()) {
            std::optional<jllb::Vec> u;
            if (!djl_u.empty()) {
                const auto arr = json::parse(djl_u);
                jllb::Vec v(arr.size());
                for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<int>(i)] = arr.at(i);
                u = v;
            }
            emit(json(jllb::djl_failure_rate(djl_eps, djl_d, djl_m, djl_trials, djl_seed, u)),
                 out_path);
            return 0;
        }
        if (rep->parsed()) {
            const auto cfg = read_json(rep_config).get<jllb::ExperimentConfig>();
            const auto report = jllb::run_experiment(cfg);
            emit(report.doc, out_path);
            return report.passed ? 0 : 1;
        }
        if (aud->parsed()) {
            const auto body = jllb::body_from_json(read_json(aud_body));
            jllb::NetBuildOptions opts;
            opts.candidate_budget = aud_budget;
            const auto res = jllb::audit_net(body, aud_eps, aud_samples, opts);
            emit(res.doc, out_path);
            return res.passed ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
