#pragma once

// Experiment driver behind the command-line tool: config parsing, subcommand
// dispatch and report emission. Every report embeds the resolved config and
// seed so runs are self-describing.

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "io.hpp"
#include "jscc.hpp"

namespace racxpt::cli {

struct RunOptions {
    std::string subcommand;
    OrderedJson config;
    std::optional<std::uint64_t> seed_override;
    unsigned threads = default_thread_count();
    std::string out_dir = ".";
    bool verify = false;
    bool guard_override = false;  // RACXPT_GUARD_OVERRIDE: lifts size guards
};

namespace detail {

inline std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

inline std::uint64_t resolve_seed(const RunOptions& opt, std::uint64_t fallback) {
    if (opt.seed_override) return *opt.seed_override;
    return io_detail::get_or<std::uint64_t>(opt.config, "seed", fallback);
}

inline DecoderConfig decoder_from_config(const OrderedJson& j) {
    DecoderConfig cfg;
    if (!j.contains("decoder")) return cfg;
    const auto& d = j.at("decoder");
    cfg.eta_schedule = io_detail::get_or<std::string>(d, "eta_schedule", "default");
    cfg.eta = io_detail::get_or<double>(d, "eta", 0.05);
    return cfg;
}

inline SolverConfig solver_from_config(const OrderedJson& j, std::uint64_t seed) {
    SolverConfig cfg;
    cfg.seed = seed;
    if (!j.contains("solver")) return cfg;
    const auto& s = j.at("solver");
    cfg.restarts = io_detail::get_or<int>(s, "restarts", cfg.restarts);
    cfg.max_iterations = io_detail::get_or<int>(s, "max_iterations", cfg.max_iterations);
    cfg.tol_bits = io_detail::get_or<double>(s, "tol_bits", cfg.tol_bits);
    return cfg;
}

inline void write_report(const RunOptions& opt, const std::string& name, OrderedJson body,
                         std::uint64_t seed) {
    OrderedJson report;
    report["subcommand"] = opt.subcommand;
    report["seed"] = seed;
    report["threads"] = opt.threads;
    report["config"] = opt.config;
    report["results"] = std::move(body);
    std::filesystem::create_directories(opt.out_dir);
    write_text((std::filesystem::path(opt.out_dir) / name).string(), report.dump(2) + "\n");
}

inline void write_csv(const RunOptions& opt, const std::string& name, const std::string& text) {
    std::filesystem::create_directories(opt.out_dir);
    write_text((std::filesystem::path(opt.out_dir) / name).string(), text);
}

// Library input: either a serialized library file or params plus a build seed.
inline CodebookLibraryPair load_library(const OrderedJson& j, std::uint64_t seed,
                                        std::uint64_t guard) {
    const auto& spec = io_detail::require(j, "library", "config");
    if (spec.contains("file")) return library_from_json(load_json_file(spec.at("file")));
    LibraryParams params = params_from_json(io_detail::require(spec, "params", "library"));
    if (io_detail::get_or(spec, "resample", true)) {
        int tries = io_detail::get_or<int>(spec, "packing_tries", 10);
        return resample_until_packed(params, tries, seed, guard).library;
    }
    return build_library(params, seed);
}

// Module-level invariant checks on loaded objects (--verify).
inline bool verify_objects(const MacChannel* W, const CodebookLibraryPair* lib,
                           std::uint64_t seed) {
    bool ok = true;
    Rng rng(derive_seed(seed, 77));
    {  // multi-information two-block identity on random joints
        double worst = 0.0;
        for (int t = 0; t < 50; ++t) {
            JointDistribution P({Alphabet(2), Alphabet(3), Alphabet(2)},
                                rng.next_dirichlet(12));
            worst = std::max(worst, std::abs(multi_info_partition_identity_residual(
                                        P, {{0}, {1}, {2}}, {0}, {1, 2})));
        }
        std::cout << "[verify] multi-information identity residual " << worst
                  << (worst < 1e-10 ? " ok" : " FAIL") << "\n";
        ok = ok && worst < 1e-10;
    }
    if (W) {
        bool good = true;
        for (const auto& s : sample_aux_structures(*W, 5, seed)) {
            Pentagon p = pentagon(*W, s);
            good = good && p.r1_max >= -1e-12 && p.r2_max >= -1e-12 &&
                   std::max(p.r1_max, p.r2_max) <= p.sum_max + 1e-9 &&
                   p.sum_max <= p.r1_max + p.r2_max + 1e-9;
        }
        std::cout << "[verify] pentagon geometry " << (good ? "ok" : "FAIL") << "\n";
        ok = ok && good;
    }
    if (lib) {
        bool good = true;
        for (std::size_t i = 0; i < lib->A.size() && good; ++i) {
            std::set<std::vector<int>> seen;
            for (const auto& cw : lib->A[i]) {
                if (!(joint_type_of({lib->u, cw}) == lib->params.x_compositions[i])) good = false;
                if (!lib->params.iid_sampling && !seen.insert(cw.symbols).second) good = false;
            }
        }
        std::cout << "[verify] library composition/distinctness " << (good ? "ok" : "FAIL")
                  << "\n";
        ok = ok && good;
    }
    return ok;
}

// ----------------------------------- exponent -------------------------------

inline int run_exponent(const RunOptions& opt) {
    const auto& cfgj = opt.config;
    MacChannel W = channel_from_json(io_detail::require(cfgj, "channel", "config"));
    MarginalConstraint c = constraint_from_json(io_detail::require(cfgj, "constraint", "config"));
    std::uint64_t seed = resolve_seed(opt, 1);
    SolverConfig scfg = solver_from_config(cfgj, seed);
    const auto& rj = io_detail::require(cfgj, "rates", "config");
    RatePair r(io_detail::require(rj, "r1", "rates").get<double>(),
               io_detail::require(rj, "r2", "rates").get<double>());
    if (opt.verify && !verify_objects(&W, nullptr, seed)) return 2;

    ExponentResult ex = exponent_x_lh(r, W, c, scfg);
    ExponentResult ey = exponent_y_lh(r, W, c, scfg);
    ExponentResult exy = exponent_xy_lh(r, W, c, scfg);
    const ExponentResult& best =
        ex.value <= ey.value ? (ex.value <= exy.value ? ex : exy)
                             : (ey.value <= exy.value ? ey : exy);
    OrderedJson body;
    body["x"] = to_json(ex);
    body["y"] = to_json(ey);
    body["xy"] = to_json(exy);
    body["value"] = best.value;
    body["active_term"] = best.active_term;
    write_report(opt, "exponent.json", body, seed);

    if (cfgj.contains("sweep")) {
        int g1 = io_detail::get_or<int>(cfgj.at("sweep"), "grid1", 17);
        int g2 = io_detail::get_or<int>(cfgj.at("sweep"), "grid2", 17);
        LhRateProfile prof = build_lh_profile(
            W, c, io_detail::get_or<int>(cfgj.at("sweep"), "lambda_points", 129), scfg);
        std::ostringstream csv;
        csv << "r1,r2,exponent_x,exponent_y,exponent_xy,exponent\n";
        for (double rr1 : rate_grid(std::log2((double)W.in1.size), g1))
            for (double rr2 : rate_grid(std::log2((double)W.in2.size), g2)) {
                double px = prof.x.phi(rr1), py = prof.y.phi(rr2), pxy = prof.xy.phi(rr1 + rr2);
                csv << fmt(rr1) << "," << fmt(rr2) << "," << fmt(px) << "," << fmt(py) << ","
                    << fmt(pxy) << "," << fmt(std::min({px, py, pxy})) << "\n";
            }
        write_csv(opt, "exponent_sweep.csv", csv.str());
    }
    bool ok = ex.converged && ey.converged && exy.converged &&
              best.value >= -1e-9 && ex.marginal_violation < 1e-7;
    return ok ? 0 : 2;
}

// ----------------------------------- simulate -------------------------------

inline int run_simulate(const RunOptions& opt) {
    const auto& cfgj = opt.config;
    MacChannel W = channel_from_json(io_detail::require(cfgj, "channel", "config"));
    std::uint64_t seed = resolve_seed(opt, 7);
    DecoderConfig dcfg = decoder_from_config(cfgj);
    std::uint64_t trials = io_detail::get_or<std::uint64_t>(cfgj, "trials", 20000);
    int packing_tries = io_detail::get_or<int>(cfgj, "packing_tries", 10);
    double term_guard = opt.guard_override ? 1e10 : 1e8;
    std::vector<LibraryParams> family;
    for (const auto& pj : io_detail::require(cfgj, "family", "config"))
        family.push_back(params_from_json(pj));
    if (opt.verify && !verify_objects(&W, nullptr, seed)) return 2;

    auto rows_d = decay_profile(family, W, dcfg, trials, seed, opt.threads, packing_tries,
                                ErrorKind::Decode, term_guard);
    auto rows_c = decay_profile(family, W, dcfg, trials, seed, opt.threads, packing_tries,
                                ErrorKind::Collision, term_guard);
    std::ostringstream csv;
    csv << "n,r1,r2,interior,err_d,err_d_se,err_c,err_c_se,target_exponent,mode\n";
    OrderedJson table = OrderedJson::array();
    for (std::size_t i = 0; i < family.size(); ++i) {
        const LibraryParams& p = family[i];
        AuxStructure s;
        s.p_u.resize((std::size_t)p.u_alphabet.size);
        for (int u = 0; u < p.u_alphabet.size; ++u)
            s.p_u[(std::size_t)u] = (double)p.p_u.counts[(std::size_t)u] / (double)p.n;
        auto rows_of = [&](const EmpiricalType& comp, int width) {
            std::vector<std::vector<double>> rows;
            for (int u = 0; u < p.u_alphabet.size; ++u) {
                std::vector<double> r((std::size_t)width, 1.0 / width);
                if (p.p_u.counts[(std::size_t)u] > 0)
                    for (int x = 0; x < width; ++x)
                        r[(std::size_t)x] = (double)comp.counts[(std::size_t)u * width + x] /
                                            (double)p.p_u.counts[(std::size_t)u];
                rows.push_back(std::move(r));
            }
            return rows;
        };
        s.p_x_g_u = rows_of(p.x_compositions[0], p.x_alphabet.size);
        s.p_y_g_u = rows_of(p.y_compositions[0], p.y_alphabet.size);
        bool interior = in_interior(RatePair(p.rates1[0], p.rates2[0]), pentagon(W, s));
        csv << p.n << "," << fmt(p.rates1[0]) << "," << fmt(p.rates2[0]) << ","
            << (interior ? 1 : 0) << "," << fmt(rows_d[i].err) << "," << fmt(rows_d[i].std_err)
            << "," << fmt(rows_c[i].err) << "," << fmt(rows_c[i].std_err) << ","
            << fmt(rows_d[i].target_exponent) << "," << rows_d[i].mode << "\n";
        OrderedJson row;
        row["n"] = p.n;
        row["r1"] = p.rates1[0];
        row["r2"] = p.rates2[0];
        row["interior"] = interior;
        row["err_d"] = rows_d[i].err;
        row["err_d_se"] = rows_d[i].std_err;
        row["err_c"] = rows_c[i].err;
        row["err_c_se"] = rows_c[i].std_err;
        row["empirical_exponent"] = rows_d[i].empirical_exponent;
        row["target_exponent"] = rows_d[i].target_exponent;
        row["mode"] = rows_d[i].mode;
        table.push_back(row);
    }
    write_csv(opt, "simulate.csv", csv.str());
    OrderedJson body;
    body["rows"] = table;
    write_report(opt, "simulate.json", body, seed);
    return 0;
}

// ------------------------------------ decode --------------------------------

inline int run_decode(const RunOptions& opt) {
    const auto& cfgj = opt.config;
    std::uint64_t seed = resolve_seed(opt, 11);
    double guard = opt.guard_override ? 1e10 : 1e7;
    CodebookLibraryPair lib = load_library(cfgj, seed, (std::uint64_t)guard);
    DecoderConfig dcfg = decoder_from_config(cfgj);
    MacChannel W = cfgj.contains("channel") ? channel_from_json(cfgj.at("channel"))
                                            : make_noiseless_pair(lib.params.x_alphabet.size,
                                                                  lib.params.y_alphabet.size);
    if (opt.verify && !verify_objects(&W, &lib, seed)) return 2;

    Sequence z(W.out, {});
    const auto& zj = io_detail::require(cfgj, "z", "config");
    if (zj.is_array()) {
        z = Sequence(W.out, zj.get<std::vector<int>>());
    } else {
        const auto& mj = io_detail::require(zj, "message", "z");
        std::size_t i = io_detail::require(mj, "i", "message").get<std::size_t>();
        std::uint64_t a = io_detail::require(mj, "a", "message").get<std::uint64_t>();
        std::size_t jdx = io_detail::require(mj, "j", "message").get<std::size_t>();
        std::uint64_t b = io_detail::require(mj, "b", "message").get<std::uint64_t>();
        std::uint64_t zseed = io_detail::get_or<std::uint64_t>(zj, "sample_seed", seed);
        z = sample_output(W, lib.A.at(i).at((std::size_t)a), lib.B.at(jdx).at((std::size_t)b),
                          zseed);
    }
    DecoderOutput out = decode(lib, z, dcfg);
    OrderedJson body = to_json(out);
    body["z"] = z.symbols;
    write_report(opt, "decode.json", body, seed);
    // a message verdict must carry strictly positive margins
    if (!out.collision)
        for (double m : out.margins)
            if (m <= 0.0) return 2;
    return 0;
}

// ------------------------------------ packing -------------------------------

inline int run_packing(const RunOptions& opt) {
    const auto& cfgj = opt.config;
    std::uint64_t seed = resolve_seed(opt, 5);
    LibraryParams params = params_from_json(io_detail::require(cfgj, "params", "config"));
    int max_tries = io_detail::get_or<int>(cfgj, "max_tries", 10);
    std::uint64_t guard = opt.guard_override ? 1'000'000'000ULL : 10'000'000ULL;
    ResampleOutcome out = resample_until_packed(params, max_tries, seed, guard);
    OrderedJson body;
    body["tries_used"] = out.tries_used;
    body["audit"] = to_json(out.report);
    if (io_detail::get_or(cfgj, "write_library", true)) body["library"] = to_json(out.library);
    if (opt.verify && !verify_objects(nullptr, &out.library, seed)) return 2;
    write_report(opt, "packing.json", body, seed);
    return out.report.passes ? 0 : 2;
}

// ------------------------------------- jscc ---------------------------------

inline int run_jscc(const RunOptions& opt) {
    const auto& cfgj = opt.config;
    MacChannel W = channel_from_json(io_detail::require(cfgj, "channel", "config"));
    std::uint64_t seed = resolve_seed(opt, 13);
    const auto& sj = io_detail::require(cfgj, "sources", "config");
    auto q1p = io_detail::require(sj, "q1", "sources").get<std::vector<double>>();
    auto q2p = io_detail::require(sj, "q2", "sources").get<std::vector<double>>();
    SourceSpec q1(Alphabet((int)q1p.size()),
                  JointDistribution({Alphabet((int)q1p.size())}, q1p));
    SourceSpec q2(Alphabet((int)q2p.size()),
                  JointDistribution({Alphabet((int)q2p.size())}, q2p));
    std::string mode = io_detail::get_or<std::string>(cfgj, "mode", "classical");
    auto n_list = io_detail::require(cfgj, "n_list", "config").get<std::vector<std::int64_t>>();
    std::vector<double> p_u = io_detail::get_or(cfgj, "p_u", std::vector<double>{1.0});
    DecoderConfig dcfg = decoder_from_config(cfgj);
    std::uint64_t trials = io_detail::get_or<std::uint64_t>(cfgj, "trials", 30000);
    std::string err_mode = io_detail::get_or<std::string>(cfgj, "error_mode", "auto");
    double term_guard = opt.guard_override ? 1e10 : 1e8;
    if (opt.verify && !verify_objects(&W, nullptr, seed)) return 2;

    // composition map: a constant near-uniform kernel unless given explicitly
    Kernel base_kernel;
    if (cfgj.contains("composition")) {
        base_kernel = cfgj.at("composition").get<Kernel>();
    } else {
        base_kernel = Kernel(p_u.size(), std::vector<double>((std::size_t)W.in1.size,
                                                             1.0 / W.in1.size));
    }
    RateToCompositionMap g = RateToCompositionMap::constant(base_kernel);

    // target composed exponent (blocklength-independent)
    JsccExponentConfig ecfg;
    ecfg.seed = seed;
    if (cfgj.contains("exponent")) {
        const auto& ej = cfgj.at("exponent");
        ecfg.rate_grid_1 = ecfg.rate_grid_2 = io_detail::get_or<int>(ej, "rate_grid", 17);
        ecfg.lambda_points = io_detail::get_or<int>(ej, "lambda_points", 65);
    } else {
        ecfg.rate_grid_1 = ecfg.rate_grid_2 = 17;
        ecfg.lambda_points = 65;
    }
    double target =
        mode == "classical"
            ? ej_exponent(q1.Q, q2.Q, W, p_u, g, g, ecfg).value
            : ej0_exponent(q1.Q, q2.Q, W, p_u, RatePairToCompositionMap::from_first(g),
                           RatePairToCompositionMap::from_second(g), ecfg).value;

    std::ostringstream csv;
    csv << "n,mode,total_err,std_err,err_mode,target_exponent,"
           "top1_k,top1_l,top1_contribution,top2_k,top2_l,top2_contribution\n";
    OrderedJson table = OrderedJson::array();
    for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
        std::int64_t n = n_list[ni];
        JsccBuildConfig bc;
        bc.seed = derive_seed(seed, ni);
        bc.audit_guard = opt.guard_override ? 1'000'000'000ULL : 10'000'000ULL;
        JsccCode code =
            mode == "classical"
                ? build_classical(q1, q2, W, p_u, g, g, n, bc)
                : build_type_informed(q1, q2, W, p_u, RatePairToCompositionMap::from_first(g),
                                      RatePairToCompositionMap::from_second(g), n, bc);
        std::string em = err_mode;
        if (em == "auto")
            em = detail_sim::channel_deterministic(W) ||
                         std::pow((double)W.out.size, (double)n) * 64.0 <= term_guard
                     ? "exact"
                     : "mc";
        JsccErrorReport rep = jscc_error(code, W, em, trials, derive_seed(seed, 100 + ni), dcfg,
                                         opt.threads, term_guard);
        // dominant type-class contributions
        std::vector<JsccErrorCell> cells = rep.cells;
        std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) {
            return a.weight * a.err > b.weight * b.err;
        });
        csv << n << "," << mode << "," << fmt(rep.total.mean) << "," << fmt(rep.total.std_err)
            << "," << em << "," << fmt(target);
        for (int t = 0; t < 2; ++t) {
            if ((std::size_t)t < cells.size())
                csv << "," << cells[(std::size_t)t].k << "," << cells[(std::size_t)t].l << ","
                    << fmt(cells[(std::size_t)t].weight * cells[(std::size_t)t].err);
            else
                csv << ",,,";
        }
        csv << "\n";
        OrderedJson row;
        row["n"] = n;
        row["total_err"] = rep.total.mean;
        row["std_err"] = rep.total.std_err;
        row["err_mode"] = em;
        row["target_exponent"] = target;
        row["nu_prime"] = code.nu_prime;
        row["packing_audited"] = code.packing_audited;
        table.push_back(row);
    }
    write_csv(opt, "jscc.csv", csv.str());
    OrderedJson body;
    body["rows"] = table;
    write_report(opt, "jscc.json", body, seed);
    return 0;
}

// ------------------------------------- prop2 --------------------------------

inline int run_prop2(const RunOptions& opt) {
    const auto& cfgj = opt.config;
    MacChannel W = channel_from_json(io_detail::require(cfgj, "channel", "config"));
    std::uint64_t seed = resolve_seed(opt, 17);
    auto p_u = io_detail::require(cfgj, "p_u", "config").get<std::vector<double>>();
    auto p_x_i = io_detail::require(cfgj, "p_x_i", "config").get<Kernel>();
    auto p_x_k = io_detail::require(cfgj, "p_x_k", "config").get<Kernel>();
    auto p_y_j = io_detail::require(cfgj, "p_y_j", "config").get<Kernel>();
    double r1k = io_detail::require(cfgj, "r1k", "config").get<double>();
    double r2j = io_detail::require(cfgj, "r2j", "config").get<double>();
    double eta = io_detail::require(cfgj, "eta", "config").get<double>();
    SolverConfig scfg = solver_from_config(cfgj, seed);
    if (opt.verify && !verify_objects(&W, nullptr, seed)) return 2;

    MixtureWitness w = threshold_mixture_witness(W, p_u, p_x_i, p_x_k, p_y_j, r1k, r2j, eta, scfg);
    OrderedJson body;
    body["epsilon"] = w.epsilon;
    body["r_value"] = w.r_value;
    body["feasible"] = w.feasible;
    body["constraint_slack"] = w.constraint_slack;
    body["objective"] = w.objective;
    body["divergence_term"] = w.divergence_term;
    body["coupling_term"] = w.coupling_term;
    body["optimizer_value"] = w.optimizer_value;
    body["V_eps"] = to_json(w.V_eps);
    write_report(opt, "prop2.json", body, seed);
    bool ok = w.feasible && std::abs(w.objective - eta) <= 1e-3 && w.optimizer_value <= eta + 0.01;
    return ok ? 0 : 2;
}

// ------------------------------------ selftest ------------------------------

inline int run_selftest(const RunOptions& opt) {
    std::uint64_t seed = resolve_seed(opt, 23);
    int failures = 0;
    auto report = [&](const char* name, bool pass) {
        std::cout << (pass ? "[pass] " : "[FAIL] ") << name << "\n";
        if (!pass) ++failures;
    };
    {
        Rng rng(seed);
        double worst = 0.0;
        for (int t = 0; t < 200; ++t) {
            JointDistribution P({Alphabet(2), Alphabet(2), Alphabet(3)},
                                rng.next_dirichlet(12));
            worst = std::max(worst, std::abs(multi_info_partition_identity_residual(
                                        P, {{0}, {1}, {2}}, {0, 1}, {2})));
        }
        report("multi-information partition identity", worst <= 1e-10);
    }
    {
        bool ok = true;
        for (std::int64_t n = 1; n <= 8 && ok; ++n)
            for (const auto& t : enumerate_types(Alphabet(2), n)) {
                double H = entropy(t.to_distribution(), {0});
                double lg = type_class_size(t).log2();
                ok = ok && lg <= n * H + 1e-9 && lg >= n * H - 2 * std::log2((double)n + 1) - 1e-9;
            }
        report("type-class size sandwich", ok);
    }
    {
        MacChannel W = make_bsc_pair(0.1);
        Rng rng(derive_seed(seed, 2));
        bool ok = true;
        Alphabet bin(2);
        for (int t = 0; t < 10 && ok; ++t) {
            std::vector<int> xs, ys, zs;
            for (int k = 0; k < 8; ++k) {
                xs.push_back((int)rng.next_below(2));
                ys.push_back((int)rng.next_below(2));
                zs.push_back((int)rng.next_below(4));
            }
            Sequence sx(bin, xs), sy(bin, ys), sz(W.out, zs);
            double direct = nfold_log_prob(W, sx, sy, sz);
            EmpiricalType joint = joint_type_of({sx, sy, sz});
            JointDistribution V = joint.to_distribution();
            double via = -(8.0) * (conditional_divergence(condition_on(V, {0, 1}, {2}),
                                                          W.as_kernel(), V.marginal({0, 1})) +
                                   entropy(V, {2}, {0, 1}));
            ok = ok && std::abs(direct - via) < 1e-9;
        }
        report("n-fold law type identity", ok);
    }
    {
        MacChannel W = make_noiseless_pair();
        MarginalConstraint c{{1.0}, {{0.5, 0.5}}, {{0.5, 0.5}}, {}};
        SolverConfig scfg;
        scfg.restarts = 4;
        double v = exponent_lh(RatePair(0.4, 0.4), W, c, scfg).value;
        report("exponent solver at an interior rate pair", v > 1e-3 && v < 1.5);
    }
    {
        LibraryParams p;
        p.u_alphabet = Alphabet(1);
        p.x_alphabet = Alphabet(2);
        p.y_alphabet = Alphabet(2);
        p.n = 8;
        p.p_u = EmpiricalType({p.u_alphabet}, {8}, 8);
        EmpiricalType bal({p.u_alphabet, Alphabet(2)}, {4, 4}, 8);
        p.x_compositions = {bal};
        p.y_compositions = {bal};
        p.rates1 = {0.25};
        p.rates2 = {0.25};
        bool ok = false;
        try {
            ResampleOutcome out = resample_until_packed(p, 10, seed);
            ok = out.report.passes;
        } catch (...) {
        }
        report("packing resample", ok);
    }
    std::cout << (failures == 0 ? "selftest ok" : "selftest FAILED") << "\n";
    return failures == 0 ? 0 : 2;
}

}  // namespace detail

inline int run(const RunOptions& opt) {
    try {
        if (opt.subcommand == "exponent") return detail::run_exponent(opt);
        if (opt.subcommand == "simulate") return detail::run_simulate(opt);
        if (opt.subcommand == "decode") return detail::run_decode(opt);
        if (opt.subcommand == "packing") return detail::run_packing(opt);
        if (opt.subcommand == "jscc") return detail::run_jscc(opt);
        if (opt.subcommand == "prop2") return detail::run_prop2(opt);
        if (opt.subcommand == "selftest") return detail::run_selftest(opt);
        std::cerr << "unknown subcommand: " << opt.subcommand << "\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace racxpt::cli
