#pragma once

// JSON schemas for the value types and the file formats used by the CLI.
// Keys are emitted in a fixed order so reports are byte-identical for
// identical inputs and seeds.

#include <fstream>
#include <json.hpp>

#include "codebooks.hpp"
#include "decoder.hpp"
#include "exponents.hpp"

namespace racxpt {

using OrderedJson = nlohmann::ordered_json;

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace io_detail {

inline const OrderedJson& require(const OrderedJson& j, const std::string& key,
                                  const std::string& context) {
    if (!j.contains(key))
        throw ConfigError("config: missing field '" + key + "' in " + context);
    return j.at(key);
}

template <typename T>
T get_or(const OrderedJson& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

}  // namespace io_detail

// ------------------------------- distributions ------------------------------

inline OrderedJson to_json(const JointDistribution& d) {
    OrderedJson j;
    std::vector<int> sizes;
    for (const auto& a : d.axes()) sizes.push_back(a.size);
    j["axes"] = sizes;
    j["probs"] = d.probs();
    return j;
}

inline JointDistribution distribution_from_json(const OrderedJson& j,
                                                const std::string& context) {
    auto sizes = io_detail::require(j, "axes", context).get<std::vector<int>>();
    auto probs = io_detail::require(j, "probs", context).get<std::vector<double>>();
    std::vector<Alphabet> axes;
    for (int s : sizes) axes.emplace_back(s);
    try {
        return JointDistribution(std::move(axes), std::move(probs));
    } catch (const std::exception& e) {
        throw ConfigError("config: invalid distribution in " + context + ": " + e.what());
    }
}

inline OrderedJson to_json(const EmpiricalType& t) {
    OrderedJson j;
    std::vector<int> sizes;
    for (const auto& a : t.axes) sizes.push_back(a.size);
    j["axes"] = sizes;
    j["counts"] = t.counts;
    j["n"] = t.n;
    return j;
}

inline EmpiricalType type_from_json(const OrderedJson& j, const std::string& context) {
    auto sizes = io_detail::require(j, "axes", context).get<std::vector<int>>();
    auto counts = io_detail::require(j, "counts", context).get<std::vector<std::int64_t>>();
    std::int64_t n = io_detail::require(j, "n", context).get<std::int64_t>();
    std::vector<Alphabet> axes;
    for (int s : sizes) axes.emplace_back(s);
    try {
        return EmpiricalType(std::move(axes), std::move(counts), n);
    } catch (const std::exception& e) {
        throw ConfigError("config: invalid type in " + context + ": " + e.what());
    }
}

// --------------------------------- channels ---------------------------------

inline OrderedJson to_json(const MacChannel& W) {
    OrderedJson j;
    j["x"] = W.in1.size;
    j["y"] = W.in2.size;
    j["z"] = W.out.size;
    j["kernel"] = W.kernel;
    return j;
}

inline MacChannel channel_from_json(const OrderedJson& j) {
    if (j.is_string()) return channel_from_preset(j.get<std::string>());
    if (j.contains("preset")) return channel_from_preset(j.at("preset").get<std::string>());
    int x = io_detail::require(j, "x", "channel").get<int>();
    int y = io_detail::require(j, "y", "channel").get<int>();
    int z = io_detail::require(j, "z", "channel").get<int>();
    auto kernel = io_detail::require(j, "kernel", "channel").get<std::vector<double>>();
    try {
        return MacChannel(Alphabet(x), Alphabet(y), Alphabet(z), std::move(kernel));
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: invalid channel: ") + e.what());
    }
}

// -------------------------------- libraries ---------------------------------

inline OrderedJson to_json(const LibraryParams& p) {
    OrderedJson j;
    j["n"] = p.n;
    j["u_size"] = p.u_alphabet.size;
    j["x_size"] = p.x_alphabet.size;
    j["y_size"] = p.y_alphabet.size;
    j["p_u"] = to_json(p.p_u);
    OrderedJson xc = OrderedJson::array(), yc = OrderedJson::array();
    for (const auto& c : p.x_compositions) xc.push_back(to_json(c));
    for (const auto& c : p.y_compositions) yc.push_back(to_json(c));
    j["x_compositions"] = xc;
    j["y_compositions"] = yc;
    j["rates1"] = p.rates1;
    j["rates2"] = p.rates2;
    j["iid_sampling"] = p.iid_sampling;
    return j;
}

inline LibraryParams params_from_json(const OrderedJson& j) {
    LibraryParams p;
    p.n = io_detail::require(j, "n", "library params").get<std::int64_t>();
    p.u_alphabet = Alphabet(io_detail::require(j, "u_size", "library params").get<int>());
    p.x_alphabet = Alphabet(io_detail::require(j, "x_size", "library params").get<int>());
    p.y_alphabet = Alphabet(io_detail::require(j, "y_size", "library params").get<int>());
    p.p_u = type_from_json(io_detail::require(j, "p_u", "library params"), "p_u");
    for (const auto& c : io_detail::require(j, "x_compositions", "library params"))
        p.x_compositions.push_back(type_from_json(c, "x_compositions"));
    for (const auto& c : io_detail::require(j, "y_compositions", "library params"))
        p.y_compositions.push_back(type_from_json(c, "y_compositions"));
    p.rates1 = io_detail::require(j, "rates1", "library params").get<std::vector<double>>();
    p.rates2 = io_detail::require(j, "rates2", "library params").get<std::vector<double>>();
    p.iid_sampling = io_detail::get_or(j, "iid_sampling", false);
    try {
        p.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: invalid library params: ") + e.what());
    }
    return p;
}

inline OrderedJson to_json(const CodebookLibraryPair& lib) {
    OrderedJson j;
    j["params"] = to_json(lib.params);
    j["u"] = lib.u.symbols;
    OrderedJson A = OrderedJson::array(), B = OrderedJson::array();
    for (const auto& book : lib.A) {
        OrderedJson cb = OrderedJson::array();
        for (const auto& cw : book) cb.push_back(cw.symbols);
        A.push_back(cb);
    }
    for (const auto& book : lib.B) {
        OrderedJson cb = OrderedJson::array();
        for (const auto& cw : book) cb.push_back(cw.symbols);
        B.push_back(cb);
    }
    j["A"] = A;
    j["B"] = B;
    j["notes"] = lib.notes;
    return j;
}

inline CodebookLibraryPair library_from_json(const OrderedJson& j) {
    CodebookLibraryPair lib;
    lib.params = params_from_json(io_detail::require(j, "params", "library"));
    lib.u = Sequence(lib.params.u_alphabet,
                     io_detail::require(j, "u", "library").get<std::vector<int>>());
    for (const auto& book : io_detail::require(j, "A", "library")) {
        lib.A.push_back({});
        for (const auto& cw : book)
            lib.A.back().emplace_back(lib.params.x_alphabet, cw.get<std::vector<int>>());
    }
    for (const auto& book : io_detail::require(j, "B", "library")) {
        lib.B.push_back({});
        for (const auto& cw : book)
            lib.B.back().emplace_back(lib.params.y_alphabet, cw.get<std::vector<int>>());
    }
    if (j.contains("notes")) lib.notes = j.at("notes").get<std::vector<std::string>>();
    return lib;
}

// --------------------------------- reports ----------------------------------

inline OrderedJson to_json(const PackingAuditReport& r) {
    OrderedJson j;
    j["S"] = (double)r.S;
    j["expected_bound"] = (double)r.expected_bound;
    j["delta_prime"] = r.delta_prime;
    j["passes"] = r.passes;
    j["tuple_evaluations"] = r.tuple_evaluations;
    OrderedJson fams = OrderedJson::array();
    const char* names[4] = {"pair", "competing_x", "competing_y", "competing_pair"};
    for (int f = 0; f < 4; ++f) {
        OrderedJson fj;
        fj["family"] = names[f];
        fj["entries"] = r.families[(std::size_t)f].entries;
        fj["worst_slack_bits"] = r.families[(std::size_t)f].worst_slack_bits;
        fams.push_back(fj);
    }
    j["families"] = fams;
    return j;
}

inline OrderedJson to_json(const DecoderOutput& o) {
    OrderedJson j;
    j["verdict"] = o.collision ? "collision" : "message";
    if (!o.collision) {
        j["i"] = o.i;
        j["a"] = o.a;
        j["j"] = o.j;
        j["b"] = o.b;
    }
    j["stage1_score"] = o.stage1_score;
    j["stage1_tie"] = o.stage1_tie;
    j["margins"] = o.margins;
    j["eta"] = o.eta;
    return j;
}

inline OrderedJson to_json(const ExponentResult& r) {
    OrderedJson j;
    j["value"] = r.value;
    j["divergence_bits"] = r.divergence_bits;
    j["coupling_bits"] = r.coupling_bits;
    j["positive_part_bits"] = r.positive_part_bits;
    j["converged"] = r.converged;
    j["feasible"] = r.feasible;
    j["marginal_violation"] = r.marginal_violation;
    if (!r.active_term.empty()) j["active_term"] = r.active_term;
    if (!r.constraint_values.empty()) j["constraint_values"] = r.constraint_values;
    j["argmin"] = to_json(r.argmin);
    return j;
}

inline MarginalConstraint constraint_from_json(const OrderedJson& j) {
    MarginalConstraint c;
    c.p_u = io_detail::require(j, "p_u", "constraint").get<std::vector<double>>();
    c.p_x_g_u = io_detail::require(j, "p_x_g_u", "constraint")
                    .get<std::vector<std::vector<double>>>();
    c.p_y_g_u = io_detail::require(j, "p_y_g_u", "constraint")
                    .get<std::vector<std::vector<double>>>();
    if (j.contains("p_xt_g_u"))
        c.p_xt_g_u = j.at("p_xt_g_u").get<std::vector<std::vector<double>>>();
    return c;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

inline OrderedJson load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open file " + path);
    OrderedJson j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("config: JSON parse failure in " + path + ": " + e.what());
    }
    return j;
}

}  // namespace racxpt
