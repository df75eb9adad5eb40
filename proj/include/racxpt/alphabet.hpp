#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace racxpt {

// Finite alphabet. Labels are for reports only; all computation is on indices.
struct Alphabet {
    int size = 1;
    std::vector<std::string> labels;

    Alphabet() = default;
    explicit Alphabet(int sz) : size(sz) {
        if (sz < 1) throw std::invalid_argument("Alphabet: size must be >= 1");
        labels.reserve(sz);
        for (int i = 0; i < sz; ++i) labels.push_back(std::to_string(i));
    }
    Alphabet(int sz, std::vector<std::string> names) : size(sz), labels(std::move(names)) {
        if (sz < 1) throw std::invalid_argument("Alphabet: size must be >= 1");
        if ((int)labels.size() != sz)
            throw std::invalid_argument("Alphabet: label count must equal size");
        std::unordered_set<std::string> seen(labels.begin(), labels.end());
        if ((int)seen.size() != sz) throw std::invalid_argument("Alphabet: labels must be distinct");
    }

    bool operator==(const Alphabet& o) const { return size == o.size; }
};

// Length-n sequence of symbol indices over one alphabet.
struct Sequence {
    Alphabet alphabet;
    std::vector<int> symbols;

    Sequence() = default;
    Sequence(Alphabet a, std::vector<int> syms) : alphabet(std::move(a)), symbols(std::move(syms)) {
        for (int s : symbols)
            if (s < 0 || s >= alphabet.size)
                throw std::invalid_argument("Sequence: symbol index out of range");
    }

    std::size_t length() const { return symbols.size(); }
    bool operator==(const Sequence& o) const {
        return alphabet.size == o.alphabet.size && symbols == o.symbols;
    }
};

// Row-major strides for a shape vector.
inline std::vector<std::size_t> make_strides(const std::vector<int>& shape) {
    std::vector<std::size_t> strides(shape.size());
    std::size_t acc = 1;
    for (std::size_t i = shape.size(); i-- > 0;) {
        strides[i] = acc;
        acc *= (std::size_t)shape[i];
    }
    return strides;
}

inline std::size_t shape_cells(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int s : shape) n *= (std::size_t)s;
    return n;
}

// Advances a row-major multi-index; returns false after the last one.
inline bool next_multi_index(std::vector<int>& idx, const std::vector<int>& shape) {
    for (std::size_t i = idx.size(); i-- > 0;) {
        if (++idx[i] < shape[i]) return true;
        idx[i] = 0;
    }
    return false;
}

}  // namespace racxpt
