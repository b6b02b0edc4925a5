#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ivg/geometry.hpp"
#include "ivg/scene.hpp"

namespace ivg {

inline constexpr int kNumBins = 1000;
inline constexpr std::size_t kMaxTextTokens = 512;

struct TokenId {
  std::uint32_t value = 0;
  friend auto operator<=>(const TokenId&, const TokenId&) = default;
};

using TokenSequence = std::vector<TokenId>;

// bin = min(floor(x * 1000), 999). Throws RangeError outside [0, 1].
int quantize_coord(double x);
// Bin center, (bin + 0.5) / 1000. Throws RangeError outside [0, 999].
double dequantize_coord(int bin);

std::string bin_token_name(int bin);  // "<BIN_i>"
std::optional<int> parse_bin_token(std::string_view token);

// Lowercased word/punctuation split used by the tokenizer, the template
// grammar and the text metrics alike. ".,?!" become separate tokens; a
// literal "<BIN_i>" is kept intact.
std::vector<std::string> split_words(std::string_view text);

// Inverse rendering of split_words: tokens joined with single spaces,
// punctuation reattached to the preceding word.
std::string join_words(const std::vector<std::string>& words);

// join_words(split_words(s)).
std::string normalize_text(std::string_view text);

// Closed word-level vocabulary plus a contiguous block of 1000 bin tokens.
class Vocab {
 public:
  static constexpr std::string_view kBos = "<BOS>";
  static constexpr std::string_view kEos = "<EOS>";
  static constexpr std::string_view kUnk = "<UNK>";
  static constexpr std::string_view kSep = "<SEP>";

  // Specials, then the sorted closed word list derived from `attrs`, the
  // question templates and the prompt registry, then the bins.
  static Vocab build(const AttrVocab& attrs = {});

  // One token per line; line number is the TokenId. Throws ValidationError.
  static Vocab load(std::istream& in);
  void save(std::ostream& out) const;

  std::size_t size() const { return tokens_.size(); }
  std::size_t text_size() const { return first_bin_; }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view token) const;

  TokenId bos() const { return special(kBos); }
  TokenId eos() const { return special(kEos); }
  TokenId unk() const { return special(kUnk); }
  TokenId sep() const { return special(kSep); }

  TokenId bin(int index) const;
  bool is_bin(TokenId id) const;
  int bin_index(TokenId id) const;  // throws MalformedBoxError for text ids

  // Throws RangeError when the result exceeds kMaxTextTokens.
  TokenSequence tokenize_text(std::string_view text) const;
  std::string detokenize_text(const TokenSequence& tokens) const;

  // Four bin tokens in (x_min, y_min, x_max, y_max) order. Throws
  // MalformedBoxError when a side collapses into a single bin.
  TokenSequence encode_box(const BBox& box) const;
  // Throws MalformedBoxError on wrong arity, text tokens or inverted boxes.
  BBox decode_box(const TokenSequence& tokens) const;

 private:
  explicit Vocab(std::vector<std::string> tokens);
  TokenId special(std::string_view name) const;

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::uint32_t first_bin_ = 0;
};

// Box <-> bins without a vocabulary (bin indices only).
std::array<int, 4> box_to_bins(const BBox& box);
BBox box_from_bins(const std::array<int, 4>& bins);

// "<BIN_a> <BIN_b> <BIN_c> <BIN_d>", the textual form of a Guesser turn.
std::string box_to_text(const BBox& box);
std::optional<BBox> box_from_text(std::string_view text);

}  // namespace ivg
