#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cfgevade/error.hpp"
#include "cfgevade/graph.hpp"

namespace cfgevade {

using TokenId = std::int32_t;

inline constexpr TokenId kClsId = 0;
inline constexpr TokenId kPadId = 1;
inline constexpr TokenId kUnkId = 2;
inline constexpr TokenId kNumSpecials = 3;
inline constexpr std::string_view kContinuation = "##";

// Splits UTF-8 text into code points. Invalid lead bytes are taken as single
// bytes so every input splits into something.
inline std::vector<std::string> utf8_chars(std::string_view s) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if ((c & 0xE0) == 0xC0) len = 2;
    else if ((c & 0xF0) == 0xE0) len = 3;
    else if ((c & 0xF8) == 0xF0) len = 4;
    len = std::min(len, s.size() - i);
    out.emplace_back(s.substr(i, len));
    i += len;
  }
  return out;
}

// Immutable token table. Ids 0..2 are [CLS], [PAD], [UNK]; every other entry
// is either a whole word, a single character, or a "##"-prefixed character.
class Vocab {
 public:
  Vocab() : Vocab(std::vector<std::string>{"[CLS]", "[PAD]", "[UNK]"}) {}

  explicit Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    if (tokens_.size() < static_cast<std::size_t>(kNumSpecials) || tokens_[0] != "[CLS]" ||
        tokens_[1] != "[PAD]" || tokens_[2] != "[UNK]") {
      throw CorruptFile("vocab must start with [CLS], [PAD], [UNK]");
    }
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (tokens_[i].empty() || tokens_[i].find('\n') != std::string::npos) {
        throw CorruptFile("vocab entry " + std::to_string(i) + " is empty or multi-line");
      }
      if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
        throw CorruptFile("duplicate vocab entry '" + tokens_[i] + "'");
      }
    }
  }

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Non-special id for `s`, if present.
  std::optional<TokenId> find(std::string_view s) const {
    auto it = index_.find(std::string(s));
    if (it == index_.end() || it->second < kNumSpecials) return std::nullopt;
    return it->second;
  }

  // One token per line, line number = id.
  std::string to_text() const {
    std::string out;
    for (const auto& t : tokens_) {
      out += t;
      out += '\n';
    }
    return out;
  }

  static Vocab from_text(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t start = 0;
    while (start < text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      tokens.emplace_back(text.substr(start, end - start));
      start = end + 1;
    }
    return Vocab(std::move(tokens));
  }

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Specials, then every character of the corpus (plus `extra_chars`) in bare
// and "##" form, then whole words by frequency (desc) and string (asc) until
// `size` entries.
inline Vocab build_vocab(const std::vector<FunctionSequence>& sequences, std::size_t size,
                         std::string_view extra_chars = {}) {
  std::set<std::string> chars;
  std::map<std::string, std::size_t> freq;
  for (const auto& seq : sequences) {
    for (const auto& w : seq.calls) {
      ++freq[w];
      for (auto& c : utf8_chars(w)) chars.insert(std::move(c));
    }
  }
  for (auto& c : utf8_chars(extra_chars)) chars.insert(std::move(c));

  const std::size_t required = kNumSpecials + 2 * chars.size();
  if (size < required) {
    throw SizeTooSmall("vocab size " + std::to_string(size) + " < " + std::to_string(required) +
                       " needed for specials and character fallback");
  }

  std::vector<std::string> tokens{"[CLS]", "[PAD]", "[UNK]"};
  for (const auto& c : chars) tokens.push_back(c);
  for (const auto& c : chars) tokens.push_back(std::string(kContinuation) + c);

  std::vector<std::pair<std::string, std::size_t>> words(freq.begin(), freq.end());
  std::stable_sort(words.begin(), words.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::set<std::string> present(tokens.begin(), tokens.end());
  for (const auto& [w, n] : words) {
    if (tokens.size() >= size) break;
    if (present.insert(w).second) tokens.push_back(w);
  }
  return Vocab(std::move(tokens));
}

// Whole-word id when the word is in the vocab; otherwise greedy longest match,
// "##"-forms after the first piece. Characters absent from the vocab become
// [UNK].
inline std::vector<TokenId> tokenize_word(const Vocab& v, std::string_view word) {
  if (auto id = v.find(word)) return {*id};

  const auto chars = utf8_chars(word);
  std::vector<TokenId> out;
  std::size_t pos = 0;
  while (pos < chars.size()) {
    const std::string prefix = pos == 0 ? std::string() : std::string(kContinuation);
    std::optional<TokenId> match;
    std::size_t match_len = 0;
    std::string candidate = prefix;
    std::vector<std::size_t> ends;  // candidate length after each char
    for (std::size_t k = pos; k < chars.size(); ++k) {
      candidate += chars[k];
      ends.push_back(candidate.size());
    }
    for (std::size_t len = chars.size() - pos; len >= 1; --len) {
      if (auto id = v.find(std::string_view(candidate).substr(0, ends[len - 1]))) {
        match = id;
        match_len = len;
        break;
      }
    }
    if (match) {
      out.push_back(*match);
      pos += match_len;
    } else {
      out.push_back(kUnkId);
      pos += 1;
    }
  }
  return out;
}

inline std::string detokenize(const Vocab& v, std::span<const TokenId> ids) {
  std::string out;
  for (const TokenId id : ids) {
    if (id < kNumSpecials) throw SpecialInSpan("span contains special id " + std::to_string(id));
    if (static_cast<std::size_t>(id) >= v.size()) {
      throw SpanOutOfRange("token id " + std::to_string(id) + " outside the vocab");
    }
    std::string_view t = v.token(id);
    if (t.starts_with(kContinuation)) t.remove_prefix(kContinuation.size());
    out += t;
  }
  return out;
}

struct WordSpan {
  std::string word;
  std::size_t start = 0;  // [start, end) into TokenizedSample::ids
  std::size_t end = 0;

  friend bool operator==(const WordSpan&, const WordSpan&) = default;
};

struct TokenizedSample {
  std::string name;
  std::optional<Label> label;
  std::vector<TokenId> ids;
  std::vector<std::uint8_t> mask;
  std::vector<WordSpan> word_map;

  std::size_t length() const { return ids.size(); }
  friend bool operator==(const TokenizedSample&, const TokenizedSample&) = default;
};

// [CLS] + word tokens + [PAD] fill, exactly `max_tokens` long. The first word
// that would not fit completely ends the encoding.
inline TokenizedSample encode_sequence(const Vocab& v, const FunctionSequence& seq,
                                       std::size_t max_tokens) {
  if (max_tokens < 2) throw ConfigError("max tokens must be >= 2");
  TokenizedSample s;
  s.name = seq.name;
  s.label = seq.label;
  s.ids.reserve(max_tokens);
  s.ids.push_back(kClsId);
  for (const auto& word : seq.calls) {
    const auto pieces = tokenize_word(v, word);
    if (s.ids.size() + pieces.size() > max_tokens) break;
    s.word_map.push_back({word, s.ids.size(), s.ids.size() + pieces.size()});
    s.ids.insert(s.ids.end(), pieces.begin(), pieces.end());
  }
  s.mask.assign(max_tokens, 0);
  std::fill(s.mask.begin(), s.mask.begin() + static_cast<std::ptrdiff_t>(s.ids.size()), 1);
  s.ids.resize(max_tokens, kPadId);
  return s;
}

}  // namespace cfgevade
