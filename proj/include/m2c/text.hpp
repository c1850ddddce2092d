// m2c/text.hpp

// Copyright 2026  m2c authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef M2C_TEXT_HPP_
#define M2C_TEXT_HPP_

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "m2c/common.hpp"

namespace m2c {

struct Comment {
  std::string text;
  int votes = 0;
  std::string audio_id;
};

// Fixed ids of the reserved vocabulary entries.
enum ReservedToken : int {
  kPad = 0,  // padding
  kBos = 1,  // sequence start
  kEos = 2,  // sequence end
  kUnk = 3,  // unseen token
  kNum = 4,  // any run of digits
  kEng = 5,  // foreign-script word (when enabled)
};
constexpr int kNumReserved = 6;

inline const char* reserved_token_string(int id) {
  static const char* names[kNumReserved] = {"<PAD>", "<BOS>", "<EOS>",
                                            "<UNK>", "<NUM>", "<ENG>"};
  M2C_CHECK(id >= 0 && id < kNumReserved, "not a reserved id: ", id);
  return names[id];
}

enum class TokenMode { kChar, kWord };

/// Splits text into tokens. Character mode walks UTF-8 codepoints
/// (whitespace runs collapse to a single " " token); word mode splits on
/// whitespace. Digit runs map to <NUM>. With `latin_to_eng` set, runs of
/// Latin letters map to <ENG> (for corpora whose main script is not Latin).
class Tokenizer {
 public:
  explicit Tokenizer(TokenMode mode = TokenMode::kChar,
                     bool latin_to_eng = false)
      : mode_(mode), latin_to_eng_(latin_to_eng) {}

  TokenMode mode() const { return mode_; }
  bool latin_to_eng() const { return latin_to_eng_; }

  std::vector<std::string> tokenize(const std::string& text) const {
    return mode_ == TokenMode::kChar ? tokenize_chars(text)
                                     : tokenize_words(text);
  }

 private:
  static bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r';
  }
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }
  static bool is_latin(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  }

  static std::size_t utf8_len(unsigned char b) {
    if ((b & 0x80) == 0x00) return 1;
    if ((b & 0xE0) == 0xC0) return 2;
    if ((b & 0xF0) == 0xE0) return 3;
    if ((b & 0xF8) == 0xF0) return 4;
    return 1;  // lenient: treat a stray byte as one unit
  }

  std::vector<std::string> tokenize_chars(const std::string& text) const {
    std::vector<std::string> out;
    std::size_t i = 0, n = text.size();
    while (i < n) {
      char c = text[i];
      if (is_space(c)) {
        while (i < n && is_space(text[i])) ++i;
        out.push_back(" ");
      } else if (is_digit(c)) {
        while (i < n && is_digit(text[i])) ++i;
        out.push_back(reserved_token_string(kNum));
      } else if (latin_to_eng_ && is_latin(c)) {
        while (i < n && is_latin(text[i])) ++i;
        out.push_back(reserved_token_string(kEng));
      } else {
        std::size_t len = std::min(utf8_len(static_cast<unsigned char>(c)),
                                   n - i);
        out.push_back(text.substr(i, len));
        i += len;
      }
    }
    return out;
  }

  std::vector<std::string> tokenize_words(const std::string& text) const {
    std::vector<std::string> out;
    std::size_t i = 0, n = text.size();
    while (i < n) {
      while (i < n && is_space(text[i])) ++i;
      std::size_t start = i;
      while (i < n && !is_space(text[i])) ++i;
      if (i == start) break;
      std::string tok = text.substr(start, i - start);
      bool all_digit = std::all_of(tok.begin(), tok.end(), is_digit);
      bool all_latin = std::all_of(tok.begin(), tok.end(), is_latin);
      if (all_digit)
        out.push_back(reserved_token_string(kNum));
      else if (latin_to_eng_ && all_latin)
        out.push_back(reserved_token_string(kEng));
      else
        out.push_back(std::move(tok));
    }
    return out;
  }

  TokenMode mode_;
  bool latin_to_eng_;
};

/// Bijective token<->id map over the corpus tokens, after six fixed
/// reserved ids. Unseen tokens encode to <UNK>.
class Vocabulary {
 public:
  Vocabulary() {
    for (int i = 0; i < kNumReserved; ++i)
      add_entry(reserved_token_string(i));
  }

  static Vocabulary build(const std::vector<std::vector<std::string>>& docs) {
    M2C_CHECK(!docs.empty(), "build_vocab: empty corpus");
    std::set<std::string> uniq;
    for (const auto& doc : docs)
      for (const auto& tok : doc) uniq.insert(tok);
    Vocabulary v;
    for (const auto& tok : uniq)
      if (!v.token_to_id_.count(tok)) v.add_entry(tok);
    return v;
  }

  std::size_t size() const { return id_to_token_.size(); }

  int id_of(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
  }

  const std::string& token_of(int id) const {
    M2C_CHECK(id >= 0 && static_cast<std::size_t>(id) < id_to_token_.size(),
              "token id ", id, " out of range");
    return id_to_token_[static_cast<std::size_t>(id)];
  }

  std::vector<int> encode(const std::vector<std::string>& tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id_of(t));
    return ids;
  }

  std::vector<std::string> decode(const std::vector<int>& ids) const {
    std::vector<std::string> tokens;
    tokens.reserve(ids.size());
    for (int id : ids) tokens.push_back(token_of(id));
    return tokens;
  }

  /// Joins decoded tokens for display. Character-mode vocabularies
  /// concatenate; word mode joins with spaces.
  std::string render(const std::vector<int>& ids, TokenMode mode) const {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] == kEos || ids[i] == kBos || ids[i] == kPad) continue;
      if (mode == TokenMode::kWord && !out.empty()) out += " ";
      out += token_of(ids[i]);
    }
    return out;
  }

  // Tokens joined by newline; no token may contain a newline (the
  // tokenizer collapses whitespace), so the round trip is exact.
  std::string serialize() const {
    std::string out;
    for (std::size_t i = kNumReserved; i < id_to_token_.size(); ++i) {
      out += id_to_token_[i];
      out += '\n';
    }
    return out;
  }

  static Vocabulary deserialize(const std::string& blob) {
    Vocabulary v;
    std::size_t start = 0;
    while (start < blob.size()) {
      std::size_t nl = blob.find('\n', start);
      if (nl == std::string::npos) nl = blob.size();
      std::string tok = blob.substr(start, nl - start);
      if (!tok.empty() || nl > start) {
        if (!v.token_to_id_.count(tok)) v.add_entry(tok);
      }
      start = nl + 1;
    }
    return v;
  }

  bool operator==(const Vocabulary& other) const {
    return id_to_token_ == other.id_to_token_;
  }

 private:
  void add_entry(std::string token) {
    token_to_id_[token] = static_cast<int>(id_to_token_.size());
    id_to_token_.push_back(std::move(token));
  }

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

inline Vocabulary build_vocab(const std::vector<Comment>& comments,
                              const Tokenizer& tok) {
  M2C_CHECK(!comments.empty(), "build_vocab: empty corpus");
  std::vector<std::vector<std::string>> docs;
  docs.reserve(comments.size());
  for (const auto& c : comments) docs.push_back(tok.tokenize(c.text));
  return Vocabulary::build(docs);
}

/// Length filter plus vote-weighted duplication: comments outside
/// [min_len, max_len] tokens are removed, and each comment with more than
/// `vote_threshold` votes appears `dup_factor` times.
inline std::vector<Comment> prepare_comments(const std::vector<Comment>& in,
                                             const Tokenizer& tok,
                                             int min_len = 10,
                                             int max_len = 50,
                                             int vote_threshold = 10,
                                             int dup_factor = 10) {
  M2C_CHECK(min_len >= 1 && max_len >= min_len, "bad length bounds");
  M2C_CHECK(dup_factor >= 1, "dup_factor must be >= 1");
  std::vector<Comment> out;
  for (const auto& c : in) {
    int n = static_cast<int>(tok.tokenize(c.text).size());
    if (n < min_len || n > max_len) continue;
    int copies = c.votes > vote_threshold ? dup_factor : 1;
    for (int k = 0; k < copies; ++k) out.push_back(c);
  }
  return out;
}

}  // namespace m2c

#endif  // M2C_TEXT_HPP_
