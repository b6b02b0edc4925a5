#include "ivg/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "ivg/error.hpp"
#include "ivg/language.hpp"
#include "ivg/prompts.hpp"

namespace ivg {

namespace {

bool is_punct(char c) { return c == '.' || c == ',' || c == '?' || c == '!'; }

bool is_punct_token(std::string_view t) { return t.size() == 1 && is_punct(t[0]); }

}  // namespace

int quantize_coord(double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw RangeError(fmt::format("quantize_coord: {} outside [0, 1]", x));
  }
  return std::min(static_cast<int>(std::floor(x * kNumBins)), kNumBins - 1);
}

double dequantize_coord(int bin) {
  if (bin < 0 || bin >= kNumBins) {
    throw RangeError(fmt::format("dequantize_coord: bin {} outside [0, {}]", bin, kNumBins - 1));
  }
  return (bin + 0.5) / kNumBins;
}

std::string bin_token_name(int bin) { return fmt::format("<BIN_{}>", bin); }

std::optional<int> parse_bin_token(std::string_view token) {
  constexpr std::string_view prefix = "<BIN_";
  if (token.size() <= prefix.size() + 1 || !token.starts_with(prefix) || token.back() != '>') {
    return std::nullopt;
  }
  const std::string_view digits = token.substr(prefix.size(), token.size() - prefix.size() - 1);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return std::nullopt;
  if (value < 0 || value >= kNumBins) return std::nullopt;
  return value;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j == i) break;
    const std::string_view chunk = text.substr(i, j - i);
    i = j;
    if (parse_bin_token(chunk)) {
      words.emplace_back(chunk);
      continue;
    }
    std::string current;
    for (char c : chunk) {
      if (is_punct(c)) {
        if (!current.empty()) words.push_back(std::move(current));
        current.clear();
        words.emplace_back(1, c);
      } else {
        current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      }
    }
    if (!current.empty()) words.push_back(std::move(current));
  }
  return words;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty() && !is_punct_token(w)) out += ' ';
    out += w;
  }
  return out;
}

std::string normalize_text(std::string_view text) { return join_words(split_words(text)); }

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::uint32_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) {
      throw ValidationError(fmt::format("vocab: duplicate token '{}' at line {}", tokens_[i], i + 1));
    }
  }
  const auto first = index_.find(bin_token_name(0));
  if (first == index_.end()) throw ValidationError("vocab: missing bin block");
  first_bin_ = first->second;
  if (first_bin_ + kNumBins != tokens_.size()) {
    throw ValidationError("vocab: bin tokens must be the final contiguous block");
  }
  for (int b = 0; b < kNumBins; ++b) {
    if (tokens_[first_bin_ + b] != bin_token_name(b)) {
      throw ValidationError(fmt::format("vocab: expected {} at line {}", bin_token_name(b),
                                        first_bin_ + b + 1));
    }
  }
  for (std::uint32_t i = 0; i < first_bin_; ++i) {
    if (parse_bin_token(tokens_[i])) {
      throw ValidationError(fmt::format("vocab: bin token '{}' outside the bin block", tokens_[i]));
    }
  }
  for (std::string_view s : {kBos, kEos, kUnk, kSep}) {
    if (index_.find(std::string(s)) == index_.end()) {
      throw ValidationError(fmt::format("vocab: missing special token {}", s));
    }
  }
}

Vocab Vocab::build(const AttrVocab& attrs) {
  attrs.validate();
  std::set<std::string> words;
  auto add = [&](std::string_view text) {
    for (auto& w : split_words(text)) words.insert(std::move(w));
  };
  for (const auto& c : attrs.categories) add(c);
  for (const auto& c : attrs.colors) add(c);
  for (auto s : {SizeClass::kSmall, SizeClass::kMedium, SizeClass::kLarge}) add(to_string(s));
  for (auto q : kAllQuadrants) add(to_string(q));
  for (const auto& p : grammar_phrases()) add(p);
  for (auto p : PromptRegistry::all()) add(p);

  std::vector<std::string> tokens{std::string(kBos), std::string(kEos), std::string(kUnk),
                                  std::string(kSep)};
  tokens.insert(tokens.end(), words.begin(), words.end());
  for (int b = 0; b < kNumBins; ++b) tokens.push_back(bin_token_name(b));
  return Vocab(std::move(tokens));
}

Vocab Vocab::load(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return Vocab(std::move(tokens));
}

void Vocab::save(std::ostream& out) const {
  for (const auto& t : tokens_) out << t << '\n';
}

const std::string& Vocab::token(TokenId id) const {
  if (id.value >= tokens_.size()) {
    throw RangeError(fmt::format("token id {} outside vocabulary of {}", id.value, tokens_.size()));
  }
  return tokens_[id.value];
}

std::optional<TokenId> Vocab::find(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return TokenId{it->second};
}

TokenId Vocab::special(std::string_view name) const { return *find(name); }

TokenId Vocab::bin(int index) const {
  if (index < 0 || index >= kNumBins) throw RangeError(fmt::format("bin {} out of range", index));
  return TokenId{first_bin_ + static_cast<std::uint32_t>(index)};
}

bool Vocab::is_bin(TokenId id) const {
  return id.value >= first_bin_ && id.value < first_bin_ + kNumBins;
}

int Vocab::bin_index(TokenId id) const {
  if (!is_bin(id)) {
    throw MalformedBoxError(fmt::format("token {} ('{}') is not a bin token", id.value,
                                        id.value < tokens_.size() ? tokens_[id.value] : "?"));
  }
  return static_cast<int>(id.value - first_bin_);
}

TokenSequence Vocab::tokenize_text(std::string_view text) const {
  TokenSequence out;
  for (const auto& w : split_words(text)) {
    out.push_back(find(w).value_or(unk()));
  }
  if (out.size() > kMaxTextTokens) {
    throw RangeError(fmt::format("text of {} tokens exceeds the {}-token budget", out.size(),
                                 kMaxTextTokens));
  }
  return out;
}

std::string Vocab::detokenize_text(const TokenSequence& tokens) const {
  std::vector<std::string> words;
  words.reserve(tokens.size());
  for (TokenId id : tokens) words.push_back(token(id));
  return join_words(words);
}

std::array<int, 4> box_to_bins(const BBox& box) {
  const std::array<int, 4> bins = {quantize_coord(box.x_min()), quantize_coord(box.y_min()),
                                   quantize_coord(box.x_max()), quantize_coord(box.y_max())};
  if (bins[0] >= bins[2] || bins[1] >= bins[3]) {
    throw MalformedBoxError(fmt::format("box collapses under quantization to bins ({}, {}, {}, {})",
                                        bins[0], bins[1], bins[2], bins[3]));
  }
  return bins;
}

BBox box_from_bins(const std::array<int, 4>& bins) {
  for (int b : bins) {
    if (b < 0 || b >= kNumBins) throw MalformedBoxError(fmt::format("bin {} out of range", b));
  }
  if (bins[0] >= bins[2] || bins[1] >= bins[3]) {
    throw MalformedBoxError(fmt::format("inverted box bins ({}, {}, {}, {})", bins[0], bins[1],
                                        bins[2], bins[3]));
  }
  return BBox(dequantize_coord(bins[0]), dequantize_coord(bins[1]), dequantize_coord(bins[2]),
              dequantize_coord(bins[3]));
}

TokenSequence Vocab::encode_box(const BBox& box) const {
  const auto bins = box_to_bins(box);
  return {bin(bins[0]), bin(bins[1]), bin(bins[2]), bin(bins[3])};
}

BBox Vocab::decode_box(const TokenSequence& tokens) const {
  if (tokens.size() != 4) {
    throw MalformedBoxError(fmt::format("box needs exactly 4 bin tokens, got {}", tokens.size()));
  }
  return box_from_bins({bin_index(tokens[0]), bin_index(tokens[1]), bin_index(tokens[2]),
                        bin_index(tokens[3])});
}

std::string box_to_text(const BBox& box) {
  const auto bins = box_to_bins(box);
  return fmt::format("{} {} {} {}", bin_token_name(bins[0]), bin_token_name(bins[1]),
                     bin_token_name(bins[2]), bin_token_name(bins[3]));
}

std::optional<BBox> box_from_text(std::string_view text) {
  const auto words = split_words(text);
  if (words.size() != 4) return std::nullopt;
  std::array<int, 4> bins{};
  for (int i = 0; i < 4; ++i) {
    const auto b = parse_bin_token(words[i]);
    if (!b) return std::nullopt;
    bins[i] = *b;
  }
  try {
    return box_from_bins(bins);
  } catch (const MalformedBoxError&) {
    return std::nullopt;
  }
}

}  // namespace ivg
