#include "situ3d/text.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "situ3d/scenegen.hpp"

namespace situ3d::net {

Vocabulary Vocabulary::standard() {
    Vocabulary v;
    v.words_ = {"<pad>", "<unk>"};
    for (const auto& w : scene::vocabulary_words()) v.words_.push_back(w);
    for (std::size_t i = 0; i < v.words_.size(); ++i) v.index_[v.words_[i]] = static_cast<int>(i);
    return v;
}

std::vector<int> Vocabulary::tokenize(const std::string& text, bool strict) const {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (const char ch : text) {
        if (ch == '.' || ch == '?' || ch == ',' || ch == '!') continue;
        cleaned.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
    std::istringstream ss(cleaned);
    std::vector<int> ids;
    std::string word;
    while (ss >> word) {
        const auto it = index_.find(word);
        if (it != index_.end()) {
            ids.push_back(it->second);
        } else if (strict) {
            throw UnknownToken("word not in vocabulary: '" + word + "'");
        } else {
            ids.push_back(kUnk);
        }
    }
    return ids;
}

int TextTokens::n_real() const {
    int n = 0;
    for (const auto m : mask) n += m ? 1 : 0;
    return n;
}

TextTokens TextTokens::encode(const Vocabulary& vocab, const std::string& text, int pad_length,
                              bool strict) {
    std::vector<int> ids = vocab.tokenize(text, strict);
    if (static_cast<int>(ids.size()) > pad_length)
        throw LengthMismatch("text longer than the padding length");
    TextTokens t = empty_tokens(pad_length);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        t.ids[i] = ids[i];
        t.mask[i] = 1;
    }
    return t;
}

TextTokens TextTokens::empty_tokens(int pad_length) {
    TextTokens t;
    t.ids.assign(static_cast<std::size_t>(pad_length), Vocabulary::kPad);
    t.mask.assign(static_cast<std::size_t>(pad_length), 0);
    return t;
}

} // namespace situ3d::net
