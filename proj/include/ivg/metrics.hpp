#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ivg/geometry.hpp"
#include "ivg/jsonio.hpp"

namespace ivg {

using Tokens = std::vector<std::string>;

// Tokens for metric computation: split_words without punctuation tokens.
Tokens metric_tokens(std::string_view text);

// --- BLEU -----------------------------------------------------------------

// Sentence BLEU with clipped n-gram precisions for n = 1..max_n. A zero
// precision at n >= 2 is replaced by (clipped + 1) / (total + 1). The
// brevity penalty uses the reference length closest to the candidate
// (shorter wins ties). Empty candidate or no references: 0.
double bleu(const Tokens& candidate, const std::vector<Tokens>& references, int max_n);

// Corpus BLEU: clipped counts, totals and lengths summed over all items
// before the precisions and brevity penalty are formed.
double corpus_bleu(const std::vector<Tokens>& candidates,
                   const std::vector<std::vector<Tokens>>& references, int max_n);

// --- ROUGE-L --------------------------------------------------------------

inline constexpr double kRougeBeta = 1.2;

std::size_t lcs_length(const Tokens& a, const Tokens& b);
double rouge_l(const Tokens& candidate, const Tokens& reference);
// Maximum over references.
double rouge_l(const Tokens& candidate, const std::vector<Tokens>& references);

// --- METEOR (exact-match variant) -----------------------------------------

struct MeteorParams {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
};

struct Alignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
};

// Exact-match unigram alignment with the most matches and, among those,
// the fewest chunks (maximal runs contiguous in both sentences).
Alignment meteor_align(const Tokens& candidate, const Tokens& reference);

double meteor_simplified(const Tokens& candidate, const Tokens& reference,
                         const MeteorParams& params = {});
// Maximum over references.
double meteor_simplified(const Tokens& candidate, const std::vector<Tokens>& references,
                         const MeteorParams& params = {});

// --- CIDEr-D --------------------------------------------------------------

// Document frequencies over a reference corpus (one document per reference
// set). idf(g) = ln((N + 1) / max(1, df(g))) so that a singleton corpus
// still carries weight.
class CiderD {
 public:
  static constexpr int kMaxN = 4;
  static constexpr double kSigma = 6.0;

  // Throws ValidationError for an empty corpus.
  explicit CiderD(const std::vector<std::vector<Tokens>>& corpus);

  // 10 x mean over n of the mean over references of the clipped,
  // length-penalized cosine similarity.
  double score(const Tokens& candidate, const std::vector<Tokens>& references) const;

  double idf(const Tokens& ngram) const;
  std::size_t corpus_size() const { return corpus_size_; }

 private:
  std::map<Tokens, std::size_t> df_;
  std::size_t corpus_size_ = 0;
};

// Mean CIDEr-D over candidates, using `references` as the IDF corpus.
double cider_d(const std::vector<Tokens>& candidates,
               const std::vector<std::vector<Tokens>>& references);

// --- Multi-choice ---------------------------------------------------------

struct RankedChoice {
  std::vector<std::string> candidates;
  std::size_t truth_index = 0;
  // Candidate indices from best to worst.
  std::vector<std::size_t> ranking;

  // 1-based position of the ground truth in `ranking`.
  std::size_t truth_rank() const;
};

// Throws ValidationError for k < 1.
double recall_at_k(const std::vector<RankedChoice>& choices, std::size_t k);
// Throws ValidationError for an empty list.
double mean_rank(const std::vector<RankedChoice>& choices);

// --- Grounding ------------------------------------------------------------

inline constexpr double kSuccessThreshold = 0.5;

struct GuessPair {
  BBox guessed;
  BBox target;
};

// Fraction of pairs with IoU strictly above `threshold`. Throws
// ValidationError for a threshold outside (0, 1) or an empty list.
double success_rate(const std::vector<GuessPair>& pairs, double threshold = kSuccessThreshold);

// --- Report ---------------------------------------------------------------

struct MetricReport {
  std::optional<double> b1, b4, rouge, meteor, cider, r1, r5, rank, sr;
  std::size_t samples = 0;
  std::string corpus;

  // Metric keys in column order: B1 B4 R M C R1 R5 Rank SR.
  static const std::vector<std::string>& keys();
  std::optional<double> get(std::string_view key) const;
  // Keys with no value, plus SPICE which is never computed.
  std::vector<std::string> absent() const;
};

Json to_json_value(const MetricReport& report);
MetricReport report_from_json(const Json& j);
// Aligned plain-text table, one header row and one value row; absent
// metrics print as "-".
std::string format_table(const MetricReport& report);

}  // namespace ivg
