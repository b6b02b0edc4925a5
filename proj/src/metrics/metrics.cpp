#include "ivg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "ivg/error.hpp"
#include "ivg/tokenizer.hpp"

namespace ivg {

namespace {

using NgramCounts = std::map<Tokens, std::size_t>;

NgramCounts ngrams(const Tokens& tokens, int n) {
  NgramCounts out;
  if (static_cast<int>(tokens.size()) < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++out[Tokens(tokens.begin() + i, tokens.begin() + i + n)];
  }
  return out;
}

bool is_punct(const std::string& w) { return w == "." || w == "," || w == "?" || w == "!"; }

struct BleuStats {
  std::vector<std::size_t> clipped;
  std::vector<std::size_t> total;
  std::size_t cand_len = 0;
  std::size_t ref_len = 0;
};

std::size_t closest_ref_length(std::size_t c, const std::vector<Tokens>& refs) {
  std::size_t best = refs.front().size();
  for (const auto& r : refs) {
    const auto d = [c](std::size_t x) { return x > c ? x - c : c - x; };
    if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
  }
  return best;
}

void accumulate_bleu(BleuStats& s, const Tokens& cand, const std::vector<Tokens>& refs, int max_n) {
  s.cand_len += cand.size();
  s.ref_len += closest_ref_length(cand.size(), refs);
  for (int n = 1; n <= max_n; ++n) {
    const NgramCounts c = ngrams(cand, n);
    NgramCounts max_ref;
    for (const auto& r : refs) {
      for (const auto& [g, k] : ngrams(r, n)) max_ref[g] = std::max(max_ref[g], k);
    }
    for (const auto& [g, k] : c) {
      const auto it = max_ref.find(g);
      s.clipped[n - 1] += std::min(k, it == max_ref.end() ? 0 : it->second);
      s.total[n - 1] += k;
    }
  }
}

double bleu_from_stats(const BleuStats& s, int max_n) {
  if (s.cand_len == 0) return 0.0;
  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    double clipped = static_cast<double>(s.clipped[n - 1]);
    double total = static_cast<double>(s.total[n - 1]);
    if (clipped == 0.0) {
      if (n == 1) return 0.0;
      clipped += 1.0;
      total += 1.0;
    }
    log_sum += std::log(clipped / total);
  }
  const double c = static_cast<double>(s.cand_len);
  const double r = static_cast<double>(s.ref_len);
  const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum / max_n);
}

void check_max_n(int max_n) {
  if (max_n < 1 || max_n > 4) throw ValidationError(fmt::format("bleu: max_n = {} outside 1..4", max_n));
}

}  // namespace

Tokens metric_tokens(std::string_view text) {
  Tokens out;
  for (auto& w : split_words(text)) {
    if (!is_punct(w)) out.push_back(std::move(w));
  }
  return out;
}

double bleu(const Tokens& candidate, const std::vector<Tokens>& references, int max_n) {
  check_max_n(max_n);
  if (candidate.empty() || references.empty()) return 0.0;
  BleuStats s{std::vector<std::size_t>(max_n), std::vector<std::size_t>(max_n)};
  accumulate_bleu(s, candidate, references, max_n);
  return bleu_from_stats(s, max_n);
}

double corpus_bleu(const std::vector<Tokens>& candidates,
                   const std::vector<std::vector<Tokens>>& references, int max_n) {
  check_max_n(max_n);
  if (candidates.size() != references.size()) {
    throw ValidationError(fmt::format("corpus_bleu: {} candidates but {} reference sets",
                                      candidates.size(), references.size()));
  }
  BleuStats s{std::vector<std::size_t>(max_n), std::vector<std::size_t>(max_n)};
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].empty() || references[i].empty()) {
      // Still counts toward the brevity penalty.
      if (!references[i].empty()) s.ref_len += closest_ref_length(0, references[i]);
      continue;
    }
    accumulate_bleu(s, candidates[i], references[i], max_n);
  }
  return bleu_from_stats(s, max_n);
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const Tokens& candidate, const Tokens& reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  const double lcs = static_cast<double>(lcs_length(candidate, reference));
  if (lcs == 0.0) return 0.0;
  const double p = lcs / candidate.size();
  const double r = lcs / reference.size();
  const double b2 = kRougeBeta * kRougeBeta;
  return (1.0 + b2) * p * r / (r + b2 * p);
}

double rouge_l(const Tokens& candidate, const std::vector<Tokens>& references) {
  double best = 0.0;
  for (const auto& r : references) best = std::max(best, rouge_l(candidate, r));
  return best;
}

Alignment meteor_align(const Tokens& candidate, const Tokens& reference) {
  const std::size_t n = candidate.size();
  const std::size_t m = reference.size();

  // Reference positions per word, and the number of matches still possible
  // from candidate position i onward ignoring usage (an upper bound).
  std::map<std::string, std::vector<std::size_t>> positions;
  for (std::size_t j = 0; j < m; ++j) positions[reference[j]].push_back(j);

  std::map<std::string, std::size_t> cand_count, ref_count;
  for (const auto& w : candidate) ++cand_count[w];
  for (const auto& w : reference) ++ref_count[w];
  std::size_t target = 0;
  for (const auto& [w, k] : cand_count) {
    const auto it = ref_count.find(w);
    if (it != ref_count.end()) target += std::min(k, it->second);
  }
  if (target == 0) return {0, 0};

  // suffix_matchable[i]: for the candidate suffix starting at i, the most
  // matches obtainable if every reference position were still free.
  std::vector<std::size_t> suffix_matchable(n + 1, 0);
  {
    std::map<std::string, std::size_t> seen;
    for (std::size_t i = n; i-- > 0;) {
      const auto it = ref_count.find(candidate[i]);
      const std::size_t cap = it == ref_count.end() ? 0 : it->second;
      const bool counts = ++seen[candidate[i]] <= cap;
      suffix_matchable[i] = suffix_matchable[i + 1] + (counts ? 1 : 0);
    }
  }

  constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max() / 4;
  std::vector<bool> used(m, false);
  std::unordered_map<std::string, std::size_t> memo;

  // Minimal chunks for candidate[i..] that add exactly `need` matches, given
  // the reference position matched by candidate[i-1] (m when unmatched).
  std::function<std::size_t(std::size_t, std::size_t, std::size_t)> solve =
      [&](std::size_t i, std::size_t prev, std::size_t need) -> std::size_t {
    if (need == 0) return 0;
    if (i == n || suffix_matchable[i] < need) return kInf;
    std::string key;
    key.reserve(m + 24);
    key += std::to_string(i);
    key += ':';
    key += std::to_string(prev);
    key += ':';
    key += std::to_string(need);
    key += ':';
    for (bool u : used) key += u ? '1' : '0';
    if (const auto it = memo.find(key); it != memo.end()) return it->second;

    std::size_t best = solve(i + 1, m, need);
    const auto pos = positions.find(candidate[i]);
    if (pos != positions.end()) {
      for (std::size_t j : pos->second) {
        if (used[j]) continue;
        used[j] = true;
        const std::size_t extends = (prev != m && j == prev + 1) ? 0 : 1;
        const std::size_t rest = solve(i + 1, j, need - 1);
        used[j] = false;
        if (rest < kInf) best = std::min(best, rest + extends);
      }
    }
    memo.emplace(std::move(key), best);
    return best;
  };

  return {target, solve(0, m, target)};
}

double meteor_simplified(const Tokens& candidate, const Tokens& reference, const MeteorParams& params) {
  if (candidate.empty() || reference.empty()) return 0.0;
  const Alignment a = meteor_align(candidate, reference);
  if (a.matches == 0) return 0.0;
  const double matches = static_cast<double>(a.matches);
  const double p = matches / candidate.size();
  const double r = matches / reference.size();
  const double fmean = p * r / (params.alpha * p + (1.0 - params.alpha) * r);
  const double penalty = params.gamma * std::pow(static_cast<double>(a.chunks) / matches, params.beta);
  return fmean * (1.0 - penalty);
}

double meteor_simplified(const Tokens& candidate, const std::vector<Tokens>& references,
                         const MeteorParams& params) {
  double best = 0.0;
  for (const auto& r : references) best = std::max(best, meteor_simplified(candidate, r, params));
  return best;
}

CiderD::CiderD(const std::vector<std::vector<Tokens>>& corpus) : corpus_size_(corpus.size()) {
  if (corpus.empty()) throw ValidationError("cider_d: empty reference corpus");
  for (const auto& refs : corpus) {
    std::set<Tokens> in_doc;
    for (const auto& r : refs) {
      for (int n = 1; n <= kMaxN; ++n) {
        for (const auto& [g, k] : ngrams(r, n)) in_doc.insert(g);
      }
    }
    for (const auto& g : in_doc) ++df_[g];
  }
}

double CiderD::idf(const Tokens& ngram) const {
  const auto it = df_.find(ngram);
  const double df = it == df_.end() ? 1.0 : static_cast<double>(std::max<std::size_t>(1, it->second));
  return std::log((static_cast<double>(corpus_size_) + 1.0) / df);
}

double CiderD::score(const Tokens& candidate, const std::vector<Tokens>& references) const {
  if (candidate.empty() || references.empty()) return 0.0;

  using Vec = std::map<Tokens, double>;
  auto vectorize = [this](const Tokens& tokens, int n) {
    Vec v;
    for (const auto& [g, k] : ngrams(tokens, n)) v[g] = static_cast<double>(k) * idf(g);
    return v;
  };
  auto norm = [](const Vec& v) {
    double s = 0.0;
    for (const auto& [g, x] : v) s += x * x;
    return std::sqrt(s);
  };

  double total = 0.0;
  for (int n = 1; n <= kMaxN; ++n) {
    const Vec c = vectorize(candidate, n);
    const double cn = norm(c);
    double per_n = 0.0;
    for (const auto& ref : references) {
      const Vec r = vectorize(ref, n);
      const double rn = norm(r);
      if (cn == 0.0 || rn == 0.0) continue;
      double dot = 0.0;
      for (const auto& [g, x] : c) {
        const auto it = r.find(g);
        if (it != r.end()) dot += std::min(x, it->second) * it->second;
      }
      const double delta = static_cast<double>(candidate.size()) - static_cast<double>(ref.size());
      per_n += std::exp(-(delta * delta) / (2.0 * kSigma * kSigma)) * dot / (cn * rn);
    }
    total += per_n / static_cast<double>(references.size());
  }
  return 10.0 * total / kMaxN;
}

double cider_d(const std::vector<Tokens>& candidates,
               const std::vector<std::vector<Tokens>>& references) {
  if (candidates.size() != references.size()) {
    throw ValidationError(fmt::format("cider_d: {} candidates but {} reference sets",
                                      candidates.size(), references.size()));
  }
  const CiderD scorer(references);
  double sum = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) sum += scorer.score(candidates[i], references[i]);
  return sum / static_cast<double>(candidates.size());
}

std::size_t RankedChoice::truth_rank() const {
  const auto it = std::find(ranking.begin(), ranking.end(), truth_index);
  if (it == ranking.end()) {
    throw ValidationError(fmt::format("ranking does not contain the ground truth index {}", truth_index));
  }
  return static_cast<std::size_t>(it - ranking.begin()) + 1;
}

double recall_at_k(const std::vector<RankedChoice>& choices, std::size_t k) {
  if (k < 1) throw ValidationError("recall_at_k: k must be >= 1");
  if (choices.empty()) return 0.0;
  const auto hits = std::count_if(choices.begin(), choices.end(),
                                  [k](const RankedChoice& c) { return c.truth_rank() <= k; });
  return static_cast<double>(hits) / static_cast<double>(choices.size());
}

double mean_rank(const std::vector<RankedChoice>& choices) {
  if (choices.empty()) throw ValidationError("mean_rank: no ranked items");
  double sum = 0.0;
  for (const auto& c : choices) sum += static_cast<double>(c.truth_rank());
  return sum / static_cast<double>(choices.size());
}

double success_rate(const std::vector<GuessPair>& pairs, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ValidationError(fmt::format("success_rate: threshold {} outside (0, 1)", threshold));
  }
  if (pairs.empty()) throw ValidationError("success_rate: no guesses");
  const auto hits = std::count_if(pairs.begin(), pairs.end(), [threshold](const GuessPair& p) {
    return iou(p.guessed, p.target) > threshold;
  });
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

const std::vector<std::string>& MetricReport::keys() {
  static const std::vector<std::string> k = {"B1", "B4", "R", "M", "C", "R1", "R5", "Rank", "SR"};
  return k;
}

std::optional<double> MetricReport::get(std::string_view key) const {
  if (key == "B1") return b1;
  if (key == "B4") return b4;
  if (key == "R") return rouge;
  if (key == "M") return meteor;
  if (key == "C") return cider;
  if (key == "R1") return r1;
  if (key == "R5") return r5;
  if (key == "Rank") return rank;
  if (key == "SR") return sr;
  throw ValidationError(fmt::format("unknown metric key '{}'", key));
}

std::vector<std::string> MetricReport::absent() const {
  std::vector<std::string> out;
  for (const auto& k : keys()) {
    if (!get(k)) out.push_back(k);
  }
  out.emplace_back("SPICE");
  return out;
}

Json to_json_value(const MetricReport& report) {
  Json metrics = Json::object();
  for (const auto& k : MetricReport::keys()) {
    const auto v = report.get(k);
    metrics[k] = v ? Json(*v) : Json(nullptr);
  }
  Json j = Json::object();
  j["version"] = kWireVersion;
  j["corpus"] = report.corpus;
  j["samples"] = report.samples;
  j["metrics"] = std::move(metrics);
  j["absent"] = report.absent();
  return j;
}

MetricReport report_from_json(const Json& j) {
  MetricReport r;
  r.corpus = j.at("corpus").get<std::string>();
  r.samples = j.at("samples").get<std::size_t>();
  const Json& m = j.at("metrics");
  auto read = [&m](const char* key) -> std::optional<double> {
    if (!m.contains(key) || m[key].is_null()) return std::nullopt;
    return m[key].get<double>();
  };
  r.b1 = read("B1");
  r.b4 = read("B4");
  r.rouge = read("R");
  r.meteor = read("M");
  r.cider = read("C");
  r.r1 = read("R1");
  r.r5 = read("R5");
  r.rank = read("Rank");
  r.sr = read("SR");
  return r;
}

std::string format_table(const MetricReport& report) {
  static const std::vector<std::string> headers = {"B1", "B4", "R", "M", "C", "R@1", "R@5", "Rank", "SR"};
  std::vector<std::string> values;
  for (const auto& k : MetricReport::keys()) {
    const auto v = report.get(k);
    values.push_back(v ? fmt::format("{:.4f}", *v) : "-");
  }
  std::string head = fmt::format("{:<24}", "corpus");
  std::string row = fmt::format("{:<24}", report.corpus);
  for (std::size_t i = 0; i < headers.size(); ++i) {
    const std::size_t width = std::max<std::size_t>(headers[i].size(), values[i].size()) + 2;
    head += fmt::format("{:>{}}", headers[i], width);
    row += fmt::format("{:>{}}", values[i], width);
  }
  head += fmt::format("{:>10}", "samples");
  row += fmt::format("{:>10}", report.samples);
  return head + "\n" + row + "\n";
}

}  // namespace ivg
