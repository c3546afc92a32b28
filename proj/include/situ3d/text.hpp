#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "situ3d/errors.hpp"

namespace situ3d::net {

// Word-level vocabulary over the synthetic templates. Id 0 is padding,
// id 1 the unknown token.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;

    static Vocabulary standard();

    int size() const { return static_cast<int>(words_.size()); }
    const std::string& word(int id) const { return words_[static_cast<std::size_t>(id)]; }

    /// Lowercases, strips punctuation, splits on whitespace. In strict mode an
    /// out-of-vocabulary word raises UnknownToken; otherwise it maps to UNK.
    std::vector<int> tokenize(const std::string& text, bool strict) const;

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, int> index_;
};

enum class TextRole { Situation, Question };

// Fixed-length padded id buffer; mask marks the real tokens.
struct TextTokens {
    std::vector<int> ids;
    std::vector<std::uint8_t> mask;

    int length() const { return static_cast<int>(ids.size()); }
    int n_real() const;
    bool empty() const { return n_real() == 0; }

    static TextTokens encode(const Vocabulary& vocab, const std::string& text, int pad_length,
                             bool strict = true);
    static TextTokens empty_tokens(int pad_length);
};

} // namespace situ3d::net
