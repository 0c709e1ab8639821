#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "orbitlab/scalar.hpp"

namespace orbitlab {

using Symbol = std::uint8_t;

/// Finite sequence of symbols; indexes cylinder sets [w].
/// Text form writes one digit per symbol ("0110"), so it needs alphabet <= 10.
class Word {
public:
    Word() = default;
    Word(std::initializer_list<Symbol> symbols) : symbols_(symbols) {}
    explicit Word(std::vector<Symbol> symbols) : symbols_(std::move(symbols)) {}

    static Word parse(std::string_view text) {
        std::vector<Symbol> s;
        s.reserve(text.size());
        for (char c : text) {
            if (c < '0' || c > '9') throw Error("word: invalid symbol character '" + std::string(1, c) + "'");
            s.push_back(static_cast<Symbol>(c - '0'));
        }
        return Word(std::move(s));
    }

    /// The word of length `length` whose lexicographic index (first symbol most
    /// significant) is `index`.
    static Word from_index(std::size_t index, std::size_t length, std::size_t alphabet) {
        std::vector<Symbol> s(length);
        for (std::size_t i = length; i-- > 0;) {
            s[i] = static_cast<Symbol>(index % alphabet);
            index /= alphabet;
        }
        return Word(std::move(s));
    }

    std::size_t size() const noexcept { return symbols_.size(); }
    bool empty() const noexcept { return symbols_.empty(); }
    Symbol operator[](std::size_t i) const { return symbols_[i]; }
    std::span<const Symbol> symbols() const noexcept { return symbols_; }
    auto begin() const noexcept { return symbols_.begin(); }
    auto end() const noexcept { return symbols_.end(); }

    /// Lexicographic index of the first `length` symbols.
    std::size_t index(std::size_t alphabet, std::size_t length) const {
        std::size_t idx = 0;
        for (std::size_t i = 0; i < length; ++i) idx = idx * alphabet + symbols_[i];
        return idx;
    }
    std::size_t index(std::size_t alphabet) const { return index(alphabet, size()); }

    Word prefix(std::size_t length) const {
        return Word(std::vector<Symbol>(symbols_.begin(), symbols_.begin() + static_cast<std::ptrdiff_t>(length)));
    }
    /// Word with the first `count` symbols removed (the shift applied `count` times).
    Word drop(std::size_t count) const {
        if (count >= size()) return {};
        return Word(std::vector<Symbol>(symbols_.begin() + static_cast<std::ptrdiff_t>(count), symbols_.end()));
    }
    Word concat(const Word& suffix) const {
        std::vector<Symbol> s = symbols_;
        s.insert(s.end(), suffix.symbols_.begin(), suffix.symbols_.end());
        return Word(std::move(s));
    }

    void validate(std::size_t alphabet) const {
        for (Symbol s : symbols_)
            if (s >= alphabet)
                throw Error("word: symbol " + std::to_string(s) + " out of range for alphabet " +
                            std::to_string(alphabet));
    }

    std::string str() const {
        std::string out;
        out.reserve(size());
        for (Symbol s : symbols_) out.push_back(static_cast<char>('0' + s));
        return out;
    }

    friend auto operator<=>(const Word&, const Word&) = default;
    friend bool operator==(const Word&, const Word&) = default;

private:
    std::vector<Symbol> symbols_;
};

inline std::size_t int_pow(std::size_t base, std::size_t exp) {
    std::size_t r = 1;
    while (exp-- > 0) r *= base;
    return r;
}

}  // namespace orbitlab
