#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <racxpt/cli.hpp>

using namespace racxpt;

namespace {

std::filesystem::path temp_dir(const std::string& tag) {
    auto p = std::filesystem::temp_directory_path() / ("racxpt_test_" + tag);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

OrderedJson library_params_json(std::int64_t n, double r1, double r2) {
    OrderedJson p;
    p["n"] = n;
    p["u_size"] = 1;
    p["x_size"] = 2;
    p["y_size"] = 2;
    p["p_u"] = {{"axes", {1}}, {"counts", {n}}, {"n", n}};
    p["x_compositions"] = {{{"axes", {1, 2}}, {"counts", {n / 2, n - n / 2}}, {"n", n}}};
    p["y_compositions"] = {{{"axes", {1, 2}}, {"counts", {n / 3, n - n / 3}}, {"n", n}}};
    p["rates1"] = {r1};
    p["rates2"] = {r2};
    return p;
}

}  // namespace

TEST_CASE("exponent subcommand writes a self-describing report") {
    auto dir = temp_dir("exponent");
    cli::RunOptions opt;
    opt.subcommand = "exponent";
    opt.out_dir = dir.string();
    opt.config = OrderedJson{
        {"channel", "bsc-pair:0.1"},
        {"constraint",
         {{"p_u", {1.0}}, {"p_x_g_u", {{0.5, 0.5}}}, {"p_y_g_u", {{0.5, 0.5}}}}},
        {"rates", {{"r1", 0.3}, {"r2", 0.3}}},
        {"solver", {{"restarts", 4}}},
        {"seed", 9}};
    CHECK(cli::run(opt) == 0);
    OrderedJson rep = load_json_file((dir / "exponent.json").string());
    CHECK(rep["seed"] == 9);
    CHECK(rep["config"]["channel"] == "bsc-pair:0.1");
    CHECK(rep["results"]["value"].get<double>() > 0.0);
    CHECK(rep["results"]["x"]["converged"].get<bool>());
}

TEST_CASE("malformed kernel rows are rejected with a named row") {
    cli::RunOptions opt;
    opt.subcommand = "exponent";
    opt.out_dir = temp_dir("badchan").string();
    OrderedJson chan;
    chan["x"] = 2;
    chan["y"] = 2;
    chan["z"] = 2;
    chan["kernel"] = std::vector<double>{0.5, 0.6, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
    opt.config = OrderedJson{
        {"channel", chan},
        {"constraint",
         {{"p_u", {1.0}}, {"p_x_g_u", {{0.5, 0.5}}}, {"p_y_g_u", {{0.5, 0.5}}}}},
        {"rates", {{"r1", 0.1}, {"r2", 0.1}}}};
    CHECK(cli::run(opt) == 1);
    // the underlying validator names the offending row
    try {
        channel_from_json(chan);
        CHECK(false);
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("row (x=0, y=0)") != std::string::npos);
    }
    // missing fields are named too
    opt.config.erase("rates");
    CHECK(cli::run(opt) == 1);
}

TEST_CASE("packing subcommand is byte-identical across repeated runs") {
    auto dir1 = temp_dir("packing1");
    auto dir2 = temp_dir("packing2");
    OrderedJson config{{"params", library_params_json(8, 0.25, 0.25)},
                       {"max_tries", 10},
                       {"seed", 31}};
    for (const auto& dir : {dir1, dir2}) {
        cli::RunOptions opt;
        opt.subcommand = "packing";
        opt.out_dir = dir.string();
        opt.config = config;
        CHECK(cli::run(opt) == 0);
    }
    CHECK(slurp(dir1 / "packing.json") == slurp(dir2 / "packing.json"));
}

TEST_CASE("decode subcommand reports a verdict for a sampled message") {
    auto dir = temp_dir("decode");
    cli::RunOptions opt;
    opt.subcommand = "decode";
    opt.out_dir = dir.string();
    opt.config = OrderedJson{
        {"channel", "noiseless-pair"},
        {"library", {{"params", library_params_json(6, 0.3, 0.3)}, {"packing_tries", 10}}},
        {"decoder", {{"eta_schedule", "constant"}, {"eta", 0.05}}},
        {"z", {{"message", {{"i", 0}, {"a", 1}, {"j", 0}, {"b", 0}}}, {"sample_seed", 4}}},
        {"seed", 3}};
    CHECK(cli::run(opt) == 0);
    OrderedJson rep = load_json_file((dir / "decode.json").string());
    CHECK(rep["results"].contains("verdict"));
    CHECK(rep["results"]["margins"].size() == 3);
}

TEST_CASE("simulate subcommand emits the CSV schema") {
    auto dir = temp_dir("simulate");
    cli::RunOptions opt;
    opt.subcommand = "simulate";
    opt.out_dir = dir.string();
    opt.threads = 2;
    opt.config = OrderedJson{{"channel", "bsc-pair:0.1"},
                             {"family", {library_params_json(6, 0.25, 0.25)}},
                             {"decoder", {{"eta_schedule", "constant"}, {"eta", 0.05}}},
                             {"trials", 2000},
                             {"seed", 21}};
    CHECK(cli::run(opt) == 0);
    std::string csv = slurp(dir / "simulate.csv");
    CHECK(csv.rfind("n,r1,r2,interior,err_d,err_d_se,err_c,err_c_se,target_exponent,mode",
                    0) == 0);
    CHECK(csv.find("\n6,") != std::string::npos);
}

TEST_CASE("jscc subcommand emits totals and dominant contributions") {
    auto dir = temp_dir("jscc");
    cli::RunOptions opt;
    opt.subcommand = "jscc";
    opt.out_dir = dir.string();
    opt.threads = 2;
    opt.config = OrderedJson{{"channel", "noiseless-pair"},
                             {"sources", {{"q1", {0.89, 0.11}}, {"q2", {0.89, 0.11}}}},
                             {"mode", "classical"},
                             {"n_list", {4}},
                             {"decoder", {{"eta_schedule", "constant"}, {"eta", 0.05}}},
                             {"exponent", {{"rate_grid", 7}, {"lambda_points", 17}}},
                             {"seed", 3}};
    CHECK(cli::run(opt) == 0);
    std::string csv = slurp(dir / "jscc.csv");
    CHECK(csv.find("total_err") != std::string::npos);
    CHECK(csv.find("\n4,classical,") != std::string::npos);
}

TEST_CASE("library JSON round-trips bit-exactly") {
    LibraryParams p = params_from_json(library_params_json(8, 0.25, 0.25));
    CodebookLibraryPair lib = build_library(p, 77);
    OrderedJson j = to_json(lib);
    CodebookLibraryPair back = library_from_json(j);
    CHECK(back.u == lib.u);
    REQUIRE(back.A.size() == lib.A.size());
    for (std::size_t i = 0; i < lib.A.size(); ++i)
        for (std::size_t a = 0; a < lib.A[i].size(); ++a) CHECK(back.A[i][a] == lib.A[i][a]);
    CHECK(to_json(back).dump() == j.dump());
    // counts and types survive serialization exactly
    EmpiricalType t({Alphabet(2), Alphabet(3)}, {1, 2, 0, 3, 1, 1}, 8);
    CHECK(type_from_json(to_json(t), "t") == t);
}

TEST_CASE("selftest passes and unknown subcommands fail cleanly") {
    cli::RunOptions opt;
    opt.subcommand = "selftest";
    CHECK(cli::run(opt) == 0);

    cli::RunOptions bad;
    bad.subcommand = "nonsense";
    CHECK(cli::run(bad) == 1);
}
