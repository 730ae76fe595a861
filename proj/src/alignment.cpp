#include "rsum/alignment.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <random>

#include "json.hpp"
#include "rsum/error.hpp"
#include "rsum/text.hpp"

namespace rsum {

using nlohmann::json;

std::string_view to_string(Sentiment s) {
  switch (s) {
    case Sentiment::positive:
      return "positive";
    case Sentiment::negative:
      return "negative";
    case Sentiment::neutral:
      return "neutral";
  }
  return "neutral";
}

std::optional<Sentiment> parse_sentiment(std::string_view s) {
  if (s == "positive") return Sentiment::positive;
  if (s == "negative") return Sentiment::negative;
  if (s == "neutral") return Sentiment::neutral;
  return std::nullopt;
}

std::optional<Sentiment> opposite(Sentiment s) {
  if (s == Sentiment::positive) return Sentiment::negative;
  if (s == Sentiment::negative) return Sentiment::positive;
  return std::nullopt;
}

std::string_view to_string(AlignLabel l) {
  switch (l) {
    case AlignLabel::alignment:
      return "alignment";
    case AlignLabel::opposite:
      return "opposite";
    case AlignLabel::neutral:
      return "neutral";
  }
  return "neutral";
}

std::optional<AlignLabel> parse_align_label(std::string_view s) {
  if (s == "alignment") return AlignLabel::alignment;
  if (s == "opposite") return AlignLabel::opposite;
  if (s == "neutral") return AlignLabel::neutral;
  return std::nullopt;
}

std::string_view to_string(PairKind k) {
  return k == PairKind::sent_opinion ? "sent_opinion" : "sent_sent";
}

AlignLabel AlignmentJudgment::argmax() const {
  if (p_aligns >= p_opposes && p_aligns >= p_neutral) return AlignLabel::alignment;
  if (p_opposes >= p_neutral) return AlignLabel::opposite;
  return AlignLabel::neutral;
}

bool AlignmentJudgment::is_valid(double tol) const {
  auto in01 = [](double p) { return p >= 0.0 && p <= 1.0; };
  return in01(p_aligns) && in01(p_opposes) && in01(p_neutral) &&
         std::abs(p_aligns + p_opposes + p_neutral - 1.0) <= tol;
}

std::vector<AlignmentJudgment> Scorer::judge_batch(std::span<const TextPair> pairs) const {
  std::vector<AlignmentJudgment> out;
  out.reserve(pairs.size());
  for (const auto& [x, y] : pairs) out.push_back(judge(x, y));
  return out;
}

std::vector<std::optional<Sentiment>> Scorer::sentiment_batch(
    std::span<const std::string> texts) const {
  std::vector<std::optional<Sentiment>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(sentiment(t));
  return out;
}

// ---------------------------------------------------------------------------
// Lexical baseline

AnnotatedText annotate(std::string_view text, const AbsaAnnotation& absa) {
  AnnotatedText out{absa, {}};
  for (const auto& t : text::word_tokens(text)) {
    if (!text::is_stopword(t)) out.content_tokens.push_back(text::lemmatize(t));
  }
  std::sort(out.content_tokens.begin(), out.content_tokens.end());
  out.content_tokens.erase(std::unique(out.content_tokens.begin(), out.content_tokens.end()),
                           out.content_tokens.end());
  return out;
}

double jaccard(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t inter = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++inter, ++i, ++j;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

AlignmentJudgment lexical_judge(const AnnotatedText& x, const AnnotatedText& y) {
  if (x.absa.aspect_category != y.absa.aspect_category)
    return {0.05, 0.05, 0.9};
  if (x.absa.sentiment == y.absa.sentiment) {
    const double pa = 0.5 + 0.5 * jaccard(x.content_tokens, y.content_tokens);
    const double rest = (1.0 - pa) / 2.0;
    return {pa, rest, rest};
  }
  if (opposite(x.absa.sentiment) == y.absa.sentiment) return {0.05, 0.9, 0.05};
  // Same aspect, one side neutral: no stance relation.
  return {0.05, 0.05, 0.9};
}

void LexicalScorer::add(std::string_view text, const AbsaAnnotation& absa) {
  auto key = text::normalize(text);
  if (index_.contains(key)) return;
  index_.emplace(std::move(key), annotate(text, absa));
}

bool LexicalScorer::knows(std::string_view text) const {
  return index_.contains(text::normalize(text));
}

AlignmentJudgment LexicalScorer::judge(std::string_view x, std::string_view y) const {
  auto ix = index_.find(text::normalize(x));
  auto iy = index_.find(text::normalize(y));
  if (ix == index_.end() || iy == index_.end()) return {0.05, 0.05, 0.9};
  return lexical_judge(ix->second, iy->second);
}

std::optional<Sentiment> LexicalScorer::sentiment(std::string_view text) const {
  auto it = index_.find(text::normalize(text));
  if (it == index_.end()) return std::nullopt;
  return it->second.absa.sentiment;
}

// ---------------------------------------------------------------------------
// Cache

JudgmentCache::JudgmentCache(std::filesystem::path file) : file_(std::move(file)) {
  std::error_code ec;
  if (file_->has_parent_path()) std::filesystem::create_directories(file_->parent_path(), ec);
  std::ifstream in(*file_);
  if (!in) return;  // new cache
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      auto rec = json::parse(line);
      const auto& p = rec.at("p");
      AlignmentJudgment j{p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()};
      entries_[key(rec.at("scorer").get<std::string>(), rec.at("x_hash").get<std::string>(),
                   rec.at("y_hash").get<std::string>())] = j;
    } catch (const std::exception& e) {
      spdlog::warn("judgment cache {}: skipping corrupt line {}: {}", file_->string(), lineno,
                   e.what());
    }
  }
}

JudgmentCache::Key JudgmentCache::key(const std::string& scorer, const std::string& xh,
                                      const std::string& yh) {
  return scorer + '\t' + xh + '\t' + yh;
}

std::optional<AlignmentJudgment> JudgmentCache::get(const std::string& scorer,
                                                    std::string_view x,
                                                    std::string_view y) const {
  const auto k = key(scorer, text::sha256_hex(x), text::sha256_hex(y));
  std::lock_guard lock(mu_);
  if (auto it = entries_.find(k); it != entries_.end()) return it->second;
  return std::nullopt;
}

void JudgmentCache::put(const std::string& scorer, std::string_view x, std::string_view y,
                        const AlignmentJudgment& j) {
  const auto xh = text::sha256_hex(x);
  const auto yh = text::sha256_hex(y);
  std::lock_guard lock(mu_);
  if (!entries_.emplace(key(scorer, xh, yh), j).second) return;
  if (!file_ || !file_ok_) return;
  std::ofstream out(*file_, std::ios::app);
  json rec = {{"scorer", scorer},
              {"x_hash", xh},
              {"y_hash", yh},
              {"p", {j.p_aligns, j.p_opposes, j.p_neutral}}};
  out << rec.dump() << '\n';
  if (!out) {
    spdlog::warn("judgment cache {}: write failed; continuing without persistence",
                 file_->string());
    file_ok_ = false;
  }
}

void JudgmentCache::clear() {
  std::lock_guard lock(mu_);
  entries_.clear();
  if (file_) {
    std::error_code ec;
    std::filesystem::remove(*file_, ec);
  }
}

std::size_t JudgmentCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

// ---------------------------------------------------------------------------
// Aligner

AlignmentJudgment Aligner::judge(std::string_view x, std::string_view y) const {
  if (cache_) {
    if (auto hit = cache_->get(scorer_.id(), x, y)) return *hit;
  }
  ++calls_;
  auto j = scorer_.judge(x, y);
  if (!j.is_valid()) throw ScoringError("scorer " + scorer_.id() + " returned an invalid judgment");
  if (cache_) cache_->put(scorer_.id(), x, y, j);
  return j;
}

void Aligner::prefetch(std::span<const TextPair> pairs) const {
  if (!cache_) return;
  std::vector<TextPair> missing;
  for (const auto& p : pairs) {
    if (!cache_->get(scorer_.id(), p.first, p.second)) missing.push_back(p);
  }
  if (missing.empty()) return;
  ++calls_;
  auto js = scorer_.judge_batch(missing);
  if (js.size() != missing.size()) throw ScoringError("scorer returned a short batch");
  for (std::size_t i = 0; i < js.size(); ++i) {
    if (!js[i].is_valid()) throw ScoringError("scorer returned an invalid judgment");
    cache_->put(scorer_.id(), missing[i].first, missing[i].second, js[i]);
  }
}

double gated_p_align(const AlignmentJudgment& j, std::optional<Sentiment> sx,
                     std::optional<Sentiment> sy) {
  if (sx && sy && *sx != *sy) return 0.0;
  return j.p_aligns;
}

bool gated_aligns(const AlignmentJudgment& j, std::optional<Sentiment> sx,
                  std::optional<Sentiment> sy) {
  if (sx && sy && *sx != *sy) return false;
  return j.argmax() == AlignLabel::alignment;
}

bool Aligner::gated(std::string_view x, std::string_view y) const {
  const auto sx = scorer_.sentiment(x);
  const auto sy = scorer_.sentiment(y);
  return sx && sy && *sx != *sy;
}

double Aligner::p_align(std::string_view x, std::string_view y) const {
  if (gated(x, y)) return 0.0;
  return judge(x, y).p_aligns;
}

bool Aligner::aligns(std::string_view x, std::string_view y) const {
  if (gated(x, y)) return false;
  return judge(x, y).argmax() == AlignLabel::alignment;
}

// ---------------------------------------------------------------------------
// Fine-tuning pairs

std::string opinion_surface(std::string_view noun, std::string_view adjective) {
  return text::normalize(noun) + " is " + text::normalize(adjective);
}

std::vector<std::size_t> eligible_partners(std::span<const AnnotatedSentence> sentences,
                                           std::size_t i, PairKind kind, AlignLabel label) {
  const auto& x = sentences[i];
  std::vector<std::size_t> out;
  if (kind == PairKind::sent_opinion && label == AlignLabel::alignment) {
    if (!x.absa.pairs.empty()) out.push_back(i);
    return out;
  }
  const auto opp = opposite(x.absa.sentiment);
  for (std::size_t j = 0; j < sentences.size(); ++j) {
    if (j == i) continue;
    const auto& y = sentences[j];
    if (kind == PairKind::sent_opinion && y.absa.pairs.empty()) continue;
    const bool same_aspect = y.absa.aspect_category == x.absa.aspect_category;
    bool ok = false;
    switch (label) {
      case AlignLabel::alignment:
        ok = same_aspect && y.absa.sentiment == x.absa.sentiment;
        break;
      case AlignLabel::neutral:
        ok = !same_aspect && y.absa.sentiment == x.absa.sentiment && y.text != x.text;
        break;
      case AlignLabel::opposite:
        ok = same_aspect && opp && y.absa.sentiment == *opp && y.text != x.text;
        break;
    }
    if (ok) out.push_back(j);
  }
  return out;
}

PairReport generate_finetuning_pairs(std::span<const AnnotatedSentence> sentences,
                                     std::size_t per_label, std::uint64_t seed) {
  PairReport report;
  std::mt19937_64 rng(seed);
  constexpr PairKind kinds[] = {PairKind::sent_opinion, PairKind::sent_sent};
  constexpr AlignLabel labels[] = {AlignLabel::alignment, AlignLabel::neutral,
                                   AlignLabel::opposite};
  auto pick_pair = [&](const AbsaAnnotation& a) {
    std::uniform_int_distribution<std::size_t> d(0, a.pairs.size() - 1);
    const auto& [n, adj] = a.pairs[d(rng)];
    return opinion_surface(n, adj);
  };

  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const auto& x = sentences[i];
    for (auto kind : kinds) {
      for (auto label : labels) {
        const auto partners = eligible_partners(sentences, i, kind, label);
        if (partners.empty()) {
          ++report.skipped[{kind, label}];
          continue;
        }
        if (kind == PairKind::sent_opinion && label == AlignLabel::alignment) {
          // Opinions extracted from the sentence itself.
          std::vector<std::size_t> idx(x.absa.pairs.size());
          for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
          std::vector<std::size_t> chosen;
          std::sample(idx.begin(), idx.end(), std::back_inserter(chosen), per_label, rng);
          for (auto k : chosen) {
            const auto& [n, adj] = x.absa.pairs[k];
            report.pairs.push_back({x.text, opinion_surface(n, adj), kind, label, i, i});
          }
          continue;
        }
        std::vector<std::size_t> chosen;
        std::sample(partners.begin(), partners.end(), std::back_inserter(chosen), per_label, rng);
        for (auto j : chosen) {
          const auto& y = sentences[j];
          auto y_text = kind == PairKind::sent_opinion ? pick_pair(y.absa) : y.text;
          report.pairs.push_back({x.text, std::move(y_text), kind, label, i, j});
        }
      }
    }
  }
  return report;
}

}  // namespace rsum
