// Command-line driver: subcommand dispatch over JSON experiment configs.

#include <CLI11.hpp>
#include <cstdlib>
#include <racxpt/cli.hpp>

int main(int argc, char** argv) {
    CLI::App app{"racxpt: random-access MAC coding experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    unsigned threads = racxpt::default_thread_count();
    std::string out_dir = ".";
    bool verify = false;

    app.add_option("--config", config_path, "experiment config JSON");
    auto* seed_opt = app.add_option("--seed", seed, "seed override (u64)");
    app.add_option("--threads", threads, "worker thread cap");
    app.add_option("--out", out_dir, "report output directory");
    app.add_flag("--verify", verify, "run invariant checks on loaded objects first");

    const char* names[] = {"exponent", "simulate", "decode", "packing", "jscc", "prop2",
                           "selftest"};
    const char* descs[] = {
        "exponent family at a rate pair (optional rate-grid sweep CSV)",
        "per-blocklength error simulation over a library family (CSV)",
        "decode one received sequence against a library (JSON verdict)",
        "resample-until-packed library construction with exhaustive audit",
        "source-channel coding error sweep over blocklengths (CSV)",
        "threshold-complement mixture witness construction (JSON)",
        "quick module invariant checks"};
    for (int i = 0; i < 7; ++i) app.add_subcommand(names[i], descs[i])->fallthrough();

    CLI11_PARSE(app, argc, argv);

    racxpt::cli::RunOptions opt;
    opt.subcommand = app.get_subcommands().front()->get_name();
    opt.threads = threads == 0 ? 1 : threads;
    opt.out_dir = out_dir;
    opt.verify = verify;
    opt.guard_override = std::getenv("RACXPT_GUARD_OVERRIDE") != nullptr;
    if (seed_opt->count() > 0) opt.seed_override = seed;
    if (!config_path.empty()) {
        try {
            opt.config = racxpt::load_json_file(config_path);
        } catch (const std::exception& e) {
            std::cerr << e.what() << "\n";
            return 1;
        }
    } else if (opt.subcommand != "selftest") {
        std::cerr << "a --config file is required for '" << opt.subcommand << "'\n";
        return 1;
    }
    return racxpt::cli::run(opt);
}
