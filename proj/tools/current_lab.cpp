// current-lab: command-line front end for the random-current laboratory.
//
// Every subcommand assembles a pipeline config (JSON object), runs it through
// a single dispatcher, and writes a deterministic report: identical
// (config, seed) pairs reproduce the output bytes exactly. Wall-clock timing
// goes to stdout only, never into report files.
//
// Exit codes: 0 all assertions pass, 2 statistical assertion beyond its
// sigma allowance, 3 exact identity violated (or replay mismatch),
// 4 config/usage error.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "currentlab/diagrams.hpp"
#include "currentlab/exact.hpp"
#include "currentlab/fourier.hpp"
#include "currentlab/geometry.hpp"
#include "currentlab/gs.hpp"
#include "currentlab/rng.hpp"
#include "currentlab/spin_mc.hpp"
#include "currentlab/table.hpp"
#include "currentlab/worm.hpp"

using json = nlohmann::ordered_json;
using namespace currentlab;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Assertion {
    std::string name;
    bool pass = true;
    bool exact = false;  // exact identities exit 3, statistical ones exit 2
    std::string detail;
};

struct PipelineResult {
    json payload;
    std::vector<Assertion> assertions;
};

int thread_cap() {
    const char* env = std::getenv("CURRENT_LAB_THREADS");
    if (!env) return 1;
    int n = std::atoi(env);
    return n >= 1 ? n : 1;
}

// --- config helpers --------------------------------------------------------

template <typename T>
T want(const json& cfg, const std::string& key) {
    if (!cfg.contains(key)) throw ConfigError("missing config field: " + key);
    try {
        return cfg.at(key).get<T>();
    } catch (const std::exception&) {
        throw ConfigError("bad value for config field: " + key);
    }
}

template <typename T>
T want(const json& cfg, const std::string& key, T fallback) {
    if (!cfg.contains(key)) return fallback;
    return want<T>(cfg, key);
}

Torus torus_from(const json& cfg) {
    auto dims = want<std::vector<int>>(cfg, "torus");
    if (dims.size() != 2) throw ConfigError("torus must be [d, side]");
    return Torus(dims[0], dims[1], want<double>(cfg, "coupling", 1.0));
}

TwoPointTable table_from(const json& cfg) {
    auto path = want<std::string>(cfg, "table");
    auto dims = want<std::vector<int>>(cfg, "torus");
    if (dims.size() != 2) throw ConfigError("torus must be [d, side]");
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open table: " + path);
    return read_table_csv(in, dims[0], dims[1], want<double>(cfg, "beta", 0.0));
}

spin::ModelSpec model_from(const json& cfg, const Torus& t, double beta) {
    auto model = want<std::string>(cfg, "model", "ising");
    if (model == "ising") return spin::ising(t, beta);
    if (model.rfind("gs:", 0) == 0) {
        double n = 0, lambda = 0, b = 0;
        if (std::sscanf(model.c_str(), "gs:%lf,%lf,%lf", &n, &lambda, &b) != 3)
            throw ConfigError("model gs wants gs:N,lambda,b");
        auto cal = gs::calibrate_block(lambda, b, std::int64_t(n));
        return spin::gs_block(t, beta, int(n), cal.alpha, cal.g);
    }
    throw ConfigError("unknown model: " + model);
}

json estimate_json(const Estimate& e) {
    return json{{"value", e.value}, {"stderr", e.stderr_}};
}

// tent profile: product over axes of max(0, 1 - |x_k| / w), support Lambda_w
std::vector<double> tent_profile(const Torus& t, int w) {
    std::vector<double> f(t.n_sites(), 0.0);
    for (int s = 0; s < t.n_sites(); ++s) {
        auto c = t.coords(s);
        double v = 1.0;
        for (int k = 0; k < t.dim(); ++k)
            v *= std::max(0.0, 1.0 - std::abs(t.min_image(c[k])) / double(w));
        f[s] = v;
    }
    return f;
}

std::vector<double> profile_from_csv(const Torus& t, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open profile: " + path);
    std::vector<double> f(t.n_sites(), 0.0);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'x') continue;
        std::stringstream row(line);
        std::array<int, 4> c{0, 0, 0, 0};
        std::string cell;
        for (int k = 0; k < t.dim(); ++k) {
            std::getline(row, cell, ',');
            c[k] = std::stoi(cell);
        }
        std::getline(row, cell, ',');
        f[t.index(c)] = std::stod(cell);
    }
    return f;
}

Graph random_graph(std::mt19937_64& rng, int max_vertices, int max_edges) {
    std::uniform_int_distribution<int> nv(3, max_vertices);
    std::uniform_real_distribution<double> jdist(0.2, 1.5);
    int v = nv(rng);
    Graph g(v);
    for (int i = 1; i < v; ++i) g.add_edge(i - 1, i, jdist(rng));  // spanning chain
    std::uniform_int_distribution<int> pick(0, v - 1);
    int extra = std::uniform_int_distribution<int>(0, max_edges - (v - 1))(rng);
    for (int i = 0; i < extra; ++i) {
        int a = pick(rng), b = pick(rng);
        if (a != b) g.add_edge(a, b, jdist(rng));
    }
    return g;
}

// --- pipelines -------------------------------------------------------------

PipelineResult run_exact_verify(const json& cfg) {
    auto suites = want<std::vector<std::string>>(cfg, "suite");
    int max_edges = want<int>(cfg, "max_edges", 8);
    int reps = want<int>(cfg, "reps", 50);
    std::uint64_t seed = want<std::uint64_t>(cfg, "seed", 1);
    if (max_edges > exact::kMaxEngineEdges) throw ConfigError("max_edges exceeds engine limit");

    PipelineResult res;
    double tol = 1e-12;
    for (const auto& suite : suites) {
        double worst = 0.0;
        bool inequalities_ok = true;
        for (int rep = 0; rep < reps; ++rep) {
            auto rng = make_stream(seed, "exact-verify-" + suite, rep);
            // four-current bucket products explode past 6 edges
            int edge_cap = suite == "disentangle" ? std::min(max_edges, 6) : max_edges;
            Graph g = random_graph(rng, 6, edge_cap);
            double beta = std::uniform_real_distribution<double>(0.1, 0.9)(rng);
            exact::CurrentEngine eng(g, beta);
            std::uniform_int_distribution<int> pick(0, g.n_vertices - 1);
            int x = pick(rng), y = pick(rng), z = pick(rng), t = pick(rng);
            if (suite == "switching") {
                exact::VertexMask a = exact::vertex_mask(std::vector<int>{x, y});
                exact::VertexMask b = exact::vertex_mask(std::vector<int>{z, t});
                auto chk = exact::verify_switching(
                    eng, a, b, [&](const exact::CurrentEngine& e, exact::CurrentView n) {
                        return e.connected(n.open, x, z);
                    });
                worst = std::max(worst, chk.deviation());
                worst = std::max(worst, exact::verify_correlation_ratio(eng, a, b).deviation());
            } else if (suite == "ursell") {
                double dual = exact::ursell4_current(eng, x, y, z, t);
                double spin = exact::ursell4_spin(g, beta, x, y, z, t);
                worst = std::max(worst, std::abs(dual - spin));
                if (dual > tol) inequalities_ok = false;  // Lebowitz sign
            } else if (suite == "tree") {
                auto chk = exact::verify_tree_bound(eng, x, y, z, t);
                if (chk.lhs > chk.rhs + tol) inequalities_ok = false;
            } else if (suite == "connectivity") {
                if (x == 0 || y == 0 || z == 0 || x == y || x == z || y == z) continue;
                auto rep2 = exact::verify_connectivity_identities(eng, x, y, z);
                worst = std::max(worst, rep2.through_point.deviation());
                for (const auto& ineq : {rep2.double_visit, rep2.sandwich_lower, rep2.sandwich_upper})
                    if (ineq.lhs > ineq.rhs * (1.0 + tol) + 1e-13) inequalities_ok = false;
                if (rep2.source_monotonicity.lhs + 1e-13 < rep2.source_monotonicity.rhs) inequalities_ok = false;
            } else if (suite == "disentangle") {
                if (g.n_vertices < 5) continue;
                auto dr = exact::verify_disentangling(eng, x, y, z, t, exact::VertexMask{1});
                for (const auto& ineq : {dr.first, dr.second})
                    if (ineq.lhs > ineq.rhs * (1.0 + tol) + 1e-13) inequalities_ok = false;
            } else if (suite == "simon") {
                // ring with a two-point cut through the origin
                Graph ring(6);
                auto jr = std::uniform_real_distribution<double>(0.3, 1.2);
                for (int i = 0; i < 6; ++i) ring.add_edge(i, (i + 1) % 6, jr(rng));
                exact::CurrentEngine reng(ring, beta);
                std::vector<int> cut{0, 1, 5};
                auto chk = exact::verify_simon(reng, cut, 3);
                if (chk.lhs > chk.rhs + tol) inequalities_ok = false;
            } else {
                throw ConfigError("unknown suite: " + suite);
            }
        }
        res.payload[suite] = json{{"reps", reps}, {"max_deviation", worst},
                                  {"inequalities_ok", inequalities_ok}};
        res.assertions.push_back({suite + "-identities", worst <= tol, true,
                                  "max deviation " + std::to_string(worst)});
        res.assertions.push_back({suite + "-inequalities", inequalities_ok, true, ""});
    }
    return res;
}

PipelineResult run_sample_currents(const json& cfg) {
    Torus t = torus_from(cfg);
    Graph g = t.as_graph();
    double beta = want<double>(cfg, "beta");
    auto sources = want<std::vector<int>>(cfg, "sources", {});
    int chains = want<int>(cfg, "chains", 8);
    long sweeps = want<long>(cfg, "sweeps", 2000);
    std::uint64_t seed = want<std::uint64_t>(cfg, "seed", 1);

    PipelineResult res;
    res.payload["torus"] = json{{"d", t.dim()}, {"side", t.side()}};
    res.payload["beta"] = beta;

    if (sources.size() == 2) {
        auto p = mc::estimate_connect_prob(g, beta, sources, sources[0], sources[1], chains,
                                             sweeps, seed);
        res.payload["connect_prob"] = estimate_json(p);
    } else if (sources.size() == 4) {
        auto lengths = want<std::vector<long>>(cfg, "lengths");
        int k = want<int>(cfg, "K", int(lengths.size()) - 1);
        double delta = want<double>(cfg, "delta", 0.5);
        auto st = mc::intersection_stats(t, beta, sources[0], sources[1], sources[2],
                                           sources[3], lengths, k, delta, chains, sweeps, seed);
        res.payload["intersection"] = json{
            {"p_nonempty", estimate_json(st.p_nonempty)},
            {"mean_size", estimate_json(st.mean_size)},
            {"clustering_tail", estimate_json(st.clustering_tail)},
            {"covering_violations", st.covering_violations},
            {"samples", st.samples},
            {"nonempty_samples", st.nonempty_samples}};
        res.assertions.push_back({"covering-recheck", st.covering_violations == 0, true, ""});
    } else if (!sources.empty()) {
        throw ConfigError("sources wants 0, 2 or 4 sites");
    }

    // occupancy trace from one dedicated chain, optionally dumped
    mc::ParitySampler sampler(g, beta, sources, make_stream(seed, "sample-dump", 0),
                                want<double>(cfg, "diag_bias", 1.0));
    long dump_n = want<long>(cfg, "dump_samples", 0);
    std::ofstream dump;
    if (cfg.contains("dump")) {
        dump.open(want<std::string>(cfg, "dump"));
        if (!dump) throw ConfigError("cannot open dump file");
        if (dump_n == 0) dump_n = 100;
    }
    auto act_rng = make_stream(seed, "sample-act", 0);
    long probe = std::max(dump_n, std::min(sweeps, 200L));
    KahanSum open_edges;
    for (long i = 0; i < probe / 10 + 1; ++i) sampler.sweep();
    for (long i = 0; i < probe; ++i) {
        sampler.sweep();
        auto cur = mc::activate_even(sampler.trace(), g, beta, act_rng);
        long open = 0;
        for (auto b : cur.open) open += b ? 1 : 0;
        open_edges.add(double(open));
        if (dump.is_open() && i < dump_n) {
            // open-edge bitset in hex, lowest edge index in the last digit
            std::string hex;
            for (int e = g.n_edges() - 1; e >= 0; e -= 4) {
                int nib = 0;
                for (int b = 0; b < 4; ++b)
                    if (e - b >= 0 && cur.open[e - b]) nib |= 1 << (3 - b);
                char c = nib < 10 ? char('0' + nib) : char('a' + nib - 10);
                hex.push_back(c);
            }
            dump << hex << "\n";
        }
    }
    res.payload["mean_open_edges"] = open_edges.value() / double(probe);
    return res;
}

PipelineResult run_spins(const json& cfg) {
    Torus t = torus_from(cfg);
    double beta = want<double>(cfg, "beta");
    auto m = model_from(cfg, t, beta);
    int chains = want<int>(cfg, "chains", 8);
    long sweeps = want<long>(cfg, "sweeps", 2000);
    std::uint64_t seed = want<std::uint64_t>(cfg, "seed", 1);
    auto measure = want<std::string>(cfg, "measure", "twopoint");

    PipelineResult res;
    res.payload["model"] = m.id();
    if (measure == "twopoint") {
        auto table = spin::two_point(m, chains, sweeps, seed);
        auto out = want<std::string>(cfg, "out");
        std::ofstream os(out);
        if (!os) throw ConfigError("cannot open out: " + out);
        write_table_csv(table, os);
        res.payload["xi"] = table.xi;
        res.payload["chi"] = diagrams::chi(table, diagrams::max_radius(table));
        res.payload["table"] = out;
    } else if (measure == "u4") {
        auto quad = want<std::vector<int>>(cfg, "quad", {});
        if (quad.empty()) {
            int h = t.side() / 4;
            quad = {t.index({0, 0, 0, 0}), t.index({h, 0, 0, 0})};
            quad.push_back(t.dim() >= 2 ? t.index({0, h, 0, 0}) : t.index({2 * h, 0, 0, 0}));
            quad.push_back(t.dim() >= 2 ? t.index({h, h, 0, 0}) : t.index({3 * h, 0, 0, 0}));
        }
        if (quad.size() != 4) throw ConfigError("quad wants 4 sites");
        auto u4 = spin::ursell4_mc(m, quad[0], quad[1], quad[2], quad[3], chains, sweeps, seed);
        res.payload["quad"] = quad;
        res.payload["u4"] = estimate_json(u4);
        res.assertions.push_back({"lebowitz-sign", u4.value <= 3.0 * u4.stderr_, false, ""});
    } else if (measure == "smeared") {
        std::vector<double> f = cfg.contains("f")
                                    ? profile_from_csv(t, want<std::string>(cfg, "f"))
                                    : tent_profile(t, std::max(1, t.side() / 4));
        int max_order = want<int>(cfg, "max_order", 4);
        auto sm = spin::smeared_moments(m, f, max_order, chains, sweeps, seed);
        json moments = json::array(), gaps = json::array();
        for (const auto& e : sm.t_moment) moments.push_back(estimate_json(e));
        for (const auto& e : sm.wick_gap) gaps.push_back(estimate_json(e));
        res.payload["t_moment"] = moments;
        res.payload["wick_gap"] = gaps;
        res.payload["sigma_l"] = estimate_json(sm.sigma_l);
        res.payload["r_f"] = sm.r_f;
    } else {
        throw ConfigError("unknown measure: " + measure);
    }
    return res;
}

PipelineResult run_gs_calibrate(const json& cfg) {
    double lambda = want<double>(cfg, "lambda");
    double b = want<double>(cfg, "b");
    auto ns = want<std::vector<std::int64_t>>(cfg, "N");
    PipelineResult res;
    auto rows = gs::convergence_report(lambda, b, ns);
    json out = json::array();
    for (const auto& row : rows)
        out.push_back(json{{"N", row.n},
                           {"alpha", row.cal.alpha},
                           {"g", row.cal.g},
                           {"residual", row.cal.residual},
                           {"exact_match", row.cal.exact_match},
                           {"moment_distance", row.distance},
                           {"tail_proxy", row.tail_proxy}});
    res.payload["lambda"] = lambda;
    res.payload["b"] = b;
    res.payload["rows"] = out;
    bool matched = true;
    for (const auto& row : rows) matched = matched && row.cal.exact_match;
    res.assertions.push_back({"calibration-converged", matched, false, ""});
    return res;
}

PipelineResult run_diagrams(const json& cfg) {
    TwoPointTable t = table_from(cfg);
    auto ops = want<std::vector<std::string>>(cfg, "ops");
    PipelineResult res;
    for (const auto& op : ops) {
        if (op == "bubble") {
            json rows = json::array();
            for (int l = 0; l <= diagrams::max_radius(t); ++l)
                rows.push_back(json{{"l", l},
                                    {"bubble", diagrams::bubble(t, l)},
                                    {"chi", diagrams::chi(t, l)},
                                    {"sigma", diagrams::sigma_box(t, l)}});
            res.payload["bubble"] = rows;
        } else if (op == "tree") {
            auto q = want<std::vector<std::vector<int>>>(cfg, "quad");
            if (q.size() != 4) throw ConfigError("quad wants 4 coordinate rows");
            auto pad = [&](const std::vector<int>& v) {
                std::array<int, 4> c{0, 0, 0, 0};
                for (std::size_t k = 0; k < v.size() && k < 4; ++k) c[k] = v[k];
                return c;
            };
            res.payload["tree"] = diagrams::tree_sum(t, pad(q[0]), pad(q[1]), pad(q[2]), pad(q[3]));
        } else if (op == "ratio") {
            auto q = want<std::vector<std::vector<int>>>(cfg, "quad");
            double u4 = want<double>(cfg, "u4");
            auto pad = [&](const std::vector<int>& v) {
                std::array<int, 4> c{0, 0, 0, 0};
                for (std::size_t k = 0; k < v.size() && k < 4; ++k) c[k] = v[k];
                return c;
            };
            auto row = diagrams::improved_ratio_row(
                t, {pad(q[0]), pad(q[1]), pad(q[2]), pad(q[3])}, u4);
            res.payload["ratio"] = json{{"u4", row.u4},
                                        {"tree", row.tree},
                                        {"ratio", row.ratio},
                                        {"degenerate", row.degenerate},
                                        {"bubble_factor", row.bubble_factor}};
        } else if (op == "scales") {
            auto seq = diagrams::scale_sequence(t, want<double>(cfg, "D", 2.0));
            res.payload["scales"] = json{{"growth", seq.growth},
                                         {"lengths", seq.lengths},
                                         {"k_max", seq.k_max}};
        } else if (op == "regular") {
            auto rep = diagrams::regular_scales(t, want<double>(cfg, "c", 0.1),
                                                want<double>(cfg, "C", 10.0));
            json rows = json::array();
            for (const auto& f : rep.flags)
                rows.push_back(json{{"n", f.n}, {"p1", f.p1}, {"p2", f.p2}, {"p3", f.p3},
                                    {"p4", f.p4}, {"p3_vacuous", f.p3_vacuous}});
            res.payload["regular"] = json{{"flags", rows}, {"count", rep.count},
                                          {"target", rep.target}};
        } else if (op == "gauss") {
            auto gb = diagrams::gaussianity_bound(t, want<int>(cfg, "r_sites", t.side / 4),
                                                  want<double>(cfg, "c_exp", 1.0),
                                                  want<int>(cfg, "bubble_scale", 1));
            res.payload["gauss"] = json{{"s_bound", gb.s_bound},
                                        {"sigma_l", gb.sigma_l},
                                        {"bubble_used", gb.bubble_used},
                                        {"r_f", gb.r_sites}};
        } else if (op == "g") {
            // renormalized coupling from a caller-supplied |U4| triple file:
            // CSV rows x,y,z,u4 over sites within the truncation radius
            auto path = want<std::string>(cfg, "u4_csv");
            std::ifstream in(path);
            if (!in) throw ConfigError("cannot open u4_csv: " + path);
            std::map<std::tuple<int, int, int>, double> u4map;
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty() || line[0] == '#' || line[0] == 'x') continue;
                int x, y, z;
                double v;
                if (std::sscanf(line.c_str(), "%d,%d,%d,%lf", &x, &y, &z, &v) == 4)
                    u4map[{x, y, z}] = v;
            }
            auto rc = diagrams::renormalized_coupling(
                t,
                [&](int x, int y, int z) {
                    auto it = u4map.find({x, y, z});
                    if (it == u4map.end()) throw ConfigError("u4_csv missing a triple");
                    return it->second;
                },
                want<int>(cfg, "radius", 1), t.xi,
                diagrams::chi(t, diagrams::max_radius(t)));
            res.payload["g"] = json{{"value", rc.g},
                                    {"truncation_radius", rc.truncation_radius},
                                    {"xi_reliable", rc.xi_reliable}};
        } else {
            throw ConfigError("unknown op: " + op);
        }
    }
    return res;
}

PipelineResult run_fourier(const json& cfg) {
    TwoPointTable t = table_from(cfg);
    auto checks = want<std::vector<std::string>>(cfg, "checks");
    double n_sigma = want<double>(cfg, "n_sigma", 3.0);
    auto sp = fourier::spectrum(t);
    PipelineResult res;
    auto report = [&](const fourier::CheckReport& r, bool exact_kind) {
        res.payload[r.label] = json{{"holds", r.holds},
                                    {"worst_slack", r.worst_slack},
                                    {"worst_err", r.worst_err},
                                    {"violations", r.violations}};
        res.assertions.push_back({r.label, r.holds, exact_kind, ""});
    };
    for (const auto& check : checks) {
        if (check == "ir") {
            report(fourier::infrared_check(sp, t.beta, want<double>(cfg, "j_edge", 1.0), n_sigma),
                   false);
        } else if (check == "sumrule") {
            double gap = fourier::sum_rule_gap(sp, t);
            res.payload["sumrule"] = json{{"gap", gap}};
            res.assertions.push_back({"sumrule", gap <= 1e-10, true, ""});
        } else if (check == "sliding") {
            std::vector<std::pair<int, int>> pairs;
            for (int l = 1; 2 * l <= diagrams::max_radius(t); l *= 2)
                pairs.emplace_back(l, 2 * l);
            auto rows = fourier::sliding_scale_check(t, pairs, want<double>(cfg, "C_slide", 4.0));
            json jr = json::array();
            bool ok = true;
            for (const auto& r : rows) {
                jr.push_back(json{{"ell", r.ell}, {"L", r.ell_big}, {"ratio", r.ratio},
                                  {"bound", r.bound}, {"naive_ratio", r.naive_ratio}});
                ok = ok && r.ratio <= r.bound && r.naive_ratio <= 1.0 + 1e-9;
            }
            res.payload["sliding"] = jr;
            res.assertions.push_back({"sliding", ok, false, ""});
        } else if (check == "mms") {
            report(fourier::mms_check(t, n_sigma), false);
        } else if (check == "logconvex") {
            report(fourier::log_convexity_check(t, want<int>(cfg, "window", -1), n_sigma), false);
        } else if (check == "gradient") {
            report(fourier::gradient_check(t, want<double>(cfg, "C_grad", 40.0), n_sigma), false);
        } else if (check == "monotone") {
            report(fourier::spectrum_axis_monotonicity(sp, n_sigma), false);
        } else {
            throw ConfigError("unknown check: " + check);
        }
    }
    return res;
}

PipelineResult run_gaussianity_study(const json& cfg) {
    int d = want<int>(cfg, "d", 4);
    auto sides = want<std::vector<int>>(cfg, "sides");
    auto betas = want<std::vector<double>>(cfg, "betas");
    if (sides.size() != betas.size()) throw ConfigError("sides and betas must align");
    int chains = want<int>(cfg, "chains", 8);
    long sweeps = want<long>(cfg, "sweeps", 2000);
    std::uint64_t seed = want<std::uint64_t>(cfg, "seed", 1);
    int max_order = want<int>(cfg, "max_order", 4);

    PipelineResult res;
    json rows = json::array();
    std::vector<double> gap_ratio, gap_err;
    for (std::size_t i = 0; i < sides.size(); ++i) {
        Torus t(d, sides[i], 1.0);
        json tmp = cfg;
        auto m = model_from(tmp, t, betas[i]);
        auto f = tent_profile(t, std::max(1, sides[i] / 4));
        auto sm = spin::smeared_moments(m, f, max_order, chains, sweeps, seed + sides[i]);
        auto table = spin::two_point(m, chains, sweeps, seed + sides[i]);
        double t2 = sm.t_moment[1].value;
        double ratio = sm.wick_gap[0].value / (t2 * t2);
        double ratio_err = sm.wick_gap[0].stderr_ / (t2 * t2);
        gap_ratio.push_back(ratio);
        gap_err.push_back(ratio_err);
        rows.push_back(json{{"L", sides[i]},
                            {"beta", betas[i]},
                            {"t2", estimate_json(sm.t_moment[1])},
                            {"gap4", estimate_json(sm.wick_gap[0])},
                            {"gap_ratio", ratio},
                            {"gap_ratio_err", ratio_err},
                            {"bubble", diagrams::bubble(table, diagrams::max_radius(table))},
                            {"xi", table.xi}});
    }
    res.payload["rows"] = rows;
    bool monotone = true;
    for (std::size_t i = 1; i < gap_ratio.size(); ++i)
        if (gap_ratio[i] > gap_ratio[i - 1] + 2.0 * (gap_err[i] + gap_err[i - 1]))
            monotone = false;
    res.assertions.push_back({"gap-ratio-nonincreasing", monotone, false, ""});
    return res;
}

PipelineResult dispatch(const json& cfg) {
    auto pipeline = want<std::string>(cfg, "pipeline");
    if (pipeline == "exact-verify") return run_exact_verify(cfg);
    if (pipeline == "sample-currents") return run_sample_currents(cfg);
    if (pipeline == "spins") return run_spins(cfg);
    if (pipeline == "gs-calibrate") return run_gs_calibrate(cfg);
    if (pipeline == "diagrams") return run_diagrams(cfg);
    if (pipeline == "fourier") return run_fourier(cfg);
    if (pipeline == "gaussianity-study") return run_gaussianity_study(cfg);
    throw ConfigError("unknown pipeline: " + pipeline);
}

std::string render_report(const json& cfg, const PipelineResult& res) {
    json assertions = json::array();
    for (const auto& a : res.assertions)
        assertions.push_back(json{{"name", a.name}, {"pass", a.pass},
                                  {"kind", a.exact ? "exact" : "statistical"},
                                  {"detail", a.detail}});
    json report = json{{"config", cfg},
                       {"config_hash", fnv1a(cfg.dump())},
                       {"payload", res.payload},
                       {"assertions", assertions}};
    return report.dump(2) + "\n";
}

int exit_code(const PipelineResult& res) {
    int code = 0;
    for (const auto& a : res.assertions)
        if (!a.pass) code = std::max(code, a.exact ? 3 : 2);
    return code;
}

int execute(json cfg, const std::string& report_path) {
    auto start = std::chrono::steady_clock::now();
    PipelineResult res = dispatch(cfg);
    std::string bytes = render_report(cfg, res);
    if (!report_path.empty()) {
        std::ofstream out(report_path, std::ios::binary);
        if (!out) throw ConfigError("cannot open report path: " + report_path);
        out << bytes;
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const auto& a : res.assertions)
        std::cout << (a.pass ? "PASS " : "FAIL ") << a.name
                  << (a.detail.empty() ? "" : "  (" + a.detail + ")") << "\n";
    std::cout << "wall time " << secs << " s, threads cap " << thread_cap() << "\n";
    return exit_code(res);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"random-current laboratory"};
    app.require_subcommand(1);

    // shared flag storage; each subcommand maps its flags into a config object
    std::string report_path, out_path, table_path, model = "ising", measure = "twopoint";
    std::string f_path, dump_path, config_path, u4_csv;
    std::vector<int> torus_dims, sources, quad_sites;
    std::vector<std::string> suites, ops, checks;
    std::vector<std::int64_t> n_list;
    std::vector<long> lengths;
    double beta = 0.0, lambda = 1.0, bcoef = 0.0, diag_bias = 1.0, delta = 0.5;
    double c_const = 0.1, cc_const = 10.0, growth = 2.0, j_edge = 1.0, c_slide = 4.0,
           c_grad = 40.0, u4_value = 0.0;
    int chains = 8, max_edges = 8, reps = 50, k_scale = -1, max_order = 4;
    long sweeps = 2000;
    std::uint64_t seed = 1;
    std::vector<int> sides;
    std::vector<double> betas;

    auto* exact_cmd = app.add_subcommand("exact-verify", "exhaustive small-graph identity checks");
    exact_cmd->add_option("--suite", suites, "switching,ursell,tree,simon,disentangle,connectivity")
        ->required()->delimiter(',');
    exact_cmd->add_option("--max-edges", max_edges);
    exact_cmd->add_option("--reps", reps);
    exact_cmd->add_option("--seed", seed);
    exact_cmd->add_option("--report", report_path);

    auto* sample_cmd = app.add_subcommand("sample-currents", "defect-pair worm sampling");
    sample_cmd->add_option("--torus", torus_dims, "d,L")->required()->delimiter(',');
    sample_cmd->add_option("--beta", beta)->required();
    sample_cmd->add_option("--sources", sources)->delimiter(',');
    sample_cmd->add_option("--chains", chains);
    sample_cmd->add_option("--sweeps", sweeps);
    sample_cmd->add_option("--seed", seed);
    sample_cmd->add_option("--diag-bias", diag_bias);
    sample_cmd->add_option("--lengths", lengths)->delimiter(',');
    sample_cmd->add_option("--K", k_scale);
    sample_cmd->add_option("--delta", delta);
    sample_cmd->add_option("--dump", dump_path);
    sample_cmd->add_option("--out", report_path);

    auto* spins_cmd = app.add_subcommand("spins", "spin Monte Carlo measurements");
    spins_cmd->add_option("--torus", torus_dims, "d,L")->required()->delimiter(',');
    spins_cmd->add_option("--beta", beta)->required();
    spins_cmd->add_option("--model", model, "ising or gs:N,lambda,b");
    spins_cmd->add_option("--measure", measure, "twopoint|u4|smeared");
    spins_cmd->add_option("--quad", quad_sites)->delimiter(',');
    spins_cmd->add_option("--f", f_path, "profile CSV x1..xd,f");
    spins_cmd->add_option("--max-order", max_order);
    spins_cmd->add_option("--chains", chains);
    spins_cmd->add_option("--sweeps", sweeps);
    spins_cmd->add_option("--seed", seed);
    spins_cmd->add_option("--out", out_path, "table CSV for twopoint")->required();
    spins_cmd->add_option("--report", report_path);

    auto* gs_cmd = app.add_subcommand("gs-calibrate", "block-law moment calibration");
    gs_cmd->add_option("--lambda", lambda)->required();
    gs_cmd->add_option("--b", bcoef)->required();
    gs_cmd->add_option("--N", n_list)->required()->delimiter(',');
    gs_cmd->add_option("--out", report_path);

    auto* diag_cmd = app.add_subcommand("diagrams", "diagrammatic sums over a two-point table");
    diag_cmd->add_option("--table", table_path)->required();
    diag_cmd->add_option("--torus", torus_dims, "d,L")->required()->delimiter(',');
    diag_cmd->add_option("--beta", beta);
    diag_cmd->add_option("--ops", ops, "bubble,tree,ratio,scales,regular,gauss,g")
        ->required()->delimiter(',');
    diag_cmd->add_option("--D", growth);
    diag_cmd->add_option("--c", c_const);
    diag_cmd->add_option("--C", cc_const);
    diag_cmd->add_option("--u4", u4_value);
    diag_cmd->add_option("--u4-csv", u4_csv);
    diag_cmd->add_option("--out", report_path);

    auto* four_cmd = app.add_subcommand("fourier", "momentum-space checks on a two-point table");
    four_cmd->add_option("--table", table_path)->required();
    four_cmd->add_option("--torus", torus_dims, "d,L")->required()->delimiter(',');
    four_cmd->add_option("--beta", beta)->required();
    four_cmd->add_option("--checks", checks, "ir,sumrule,sliding,mms,logconvex,gradient,monotone")
        ->required()->delimiter(',');
    four_cmd->add_option("--j-edge", j_edge);
    four_cmd->add_option("--C-slide", c_slide);
    four_cmd->add_option("--C-grad", c_grad);
    four_cmd->add_option("--out", report_path);

    auto* study_cmd = app.add_subcommand("gaussianity-study", "smeared-moment trend across sizes");
    study_cmd->add_option("--sides", sides)->required()->delimiter(',');
    study_cmd->add_option("--betas", betas)->required()->delimiter(',');
    study_cmd->add_option("--model", model);
    study_cmd->add_option("--d", max_edges)->default_val(4);  // reuse int slot
    study_cmd->add_option("--chains", chains);
    study_cmd->add_option("--sweeps", sweeps);
    study_cmd->add_option("--seed", seed);
    study_cmd->add_option("--max-order", max_order);
    study_cmd->add_option("--out", report_path);

    auto* run_cmd = app.add_subcommand("run", "run a pipeline from a config file");
    run_cmd->add_option("--config", config_path)->required();
    run_cmd->add_option("--report", report_path);

    auto* replay_cmd = app.add_subcommand("replay", "verify bit-reproducibility of a report");
    replay_cmd->add_option("--report", report_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 4;
    }

    try {
        json cfg;
        if (exact_cmd->parsed()) {
            cfg = json{{"pipeline", "exact-verify"}, {"suite", suites},
                       {"max_edges", max_edges}, {"reps", reps}, {"seed", seed}};
        } else if (sample_cmd->parsed()) {
            cfg = json{{"pipeline", "sample-currents"}, {"torus", torus_dims}, {"beta", beta},
                       {"sources", sources}, {"chains", chains}, {"sweeps", sweeps},
                       {"seed", seed}, {"diag_bias", diag_bias}, {"delta", delta}};
            if (!lengths.empty()) cfg["lengths"] = lengths;
            if (k_scale >= 0) cfg["K"] = k_scale;
            if (!dump_path.empty()) cfg["dump"] = dump_path;
        } else if (spins_cmd->parsed()) {
            cfg = json{{"pipeline", "spins"}, {"torus", torus_dims}, {"beta", beta},
                       {"model", model}, {"measure", measure}, {"chains", chains},
                       {"sweeps", sweeps}, {"seed", seed}, {"max_order", max_order},
                       {"out", out_path}};
            if (!quad_sites.empty()) cfg["quad"] = quad_sites;
            if (!f_path.empty()) cfg["f"] = f_path;
        } else if (gs_cmd->parsed()) {
            cfg = json{{"pipeline", "gs-calibrate"}, {"lambda", lambda}, {"b", bcoef},
                       {"N", n_list}};
        } else if (diag_cmd->parsed()) {
            cfg = json{{"pipeline", "diagrams"}, {"table", table_path}, {"torus", torus_dims},
                       {"beta", beta}, {"ops", ops}, {"D", growth}, {"c", c_const},
                       {"C", cc_const}};
            if (diag_cmd->count("--u4")) cfg["u4"] = u4_value;
            if (!u4_csv.empty()) cfg["u4_csv"] = u4_csv;
        } else if (four_cmd->parsed()) {
            cfg = json{{"pipeline", "fourier"}, {"table", table_path}, {"torus", torus_dims},
                       {"beta", beta}, {"checks", checks}, {"j_edge", j_edge},
                       {"C_slide", c_slide}, {"C_grad", c_grad}};
        } else if (study_cmd->parsed()) {
            cfg = json{{"pipeline", "gaussianity-study"}, {"d", max_edges}, {"sides", sides},
                       {"betas", betas}, {"model", model}, {"chains", chains},
                       {"sweeps", sweeps}, {"seed", seed}, {"max_order", max_order}};
        } else if (run_cmd->parsed()) {
            std::ifstream in(config_path);
            if (!in) throw ConfigError("cannot open config: " + config_path);
            try {
                cfg = json::parse(in);
            } catch (const std::exception& e) {
                throw ConfigError(std::string("config parse error: ") + e.what());
            }
        } else if (replay_cmd->parsed()) {
            std::ifstream in(report_path, std::ios::binary);
            if (!in) throw ConfigError("cannot open report: " + report_path);
            std::stringstream buf;
            buf << in.rdbuf();
            json old = json::parse(buf.str());
            PipelineResult res = dispatch(old.at("config"));
            std::string fresh = render_report(old.at("config"), res);
            if (fresh == buf.str()) {
                std::cout << "PASS replay byte-identical\n";
                return 0;
            }
            std::cout << "FAIL replay mismatch (nondeterminism)\n";
            return 3;
        }
        return execute(std::move(cfg), report_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
