#include "rsum/properties.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "rsum/centrality.hpp"
#include "rsum/error.hpp"
#include "rsum/text.hpp"

namespace rsum {

std::map<std::string, double> minmax_normalize(const std::map<std::string, double>& values) {
  if (values.empty()) throw ContractError("minmax_normalize: empty input");
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (const auto& [_, x] : values) v(i++) = x;
  const Eigen::VectorXd n = minmax_normalize(v);
  std::map<std::string, double> out;
  i = 0;
  for (const auto& [k, _] : values) out[k] = n(i++);
  return out;
}

// ---------------------------------------------------------------------------

double relatedness(const ClusterScores& scores, Eigen::Index unit, Eigen::Index cluster) {
  double denom = 0.0;
  for (Eigen::Index k = 0; k < scores.e.cols(); ++k)
    if (scores.aligned(unit, k)) denom += scores.e(unit, k);
  if (!scores.aligned(unit, cluster) || denom <= 0.0)
    throw ContractError("relatedness: unit does not align with the cluster");
  return scores.e(unit, cluster) / denom;
}

double relatedness(const SentenceUnit& s, const OpinionCluster& g_i,
                   std::span<const OpinionCluster> all_clusters, const Aligner& aligner) {
  double num = -1.0, denom = 0.0;
  for (const auto& g : all_clusters) {
    bool aligned = false;
    double e = 0.0;
    for (const auto& o : g.members) {
      aligned = aligned || aligner.aligns(s.text, o.surface);
      e = std::max(e, aligner.p_align(s.text, o.surface));
    }
    if (aligned) denom += e;
    if (g.cluster_id == g_i.cluster_id) num = aligned ? e : -1.0;
  }
  if (num < 0.0 || denom <= 0.0)
    throw ContractError("relatedness: unit does not align with the cluster");
  return num / denom;
}

// ---------------------------------------------------------------------------

BaselineSpecificity::BaselineSpecificity(std::span<const SentenceUnit> entity_units,
                                         std::size_t l_max)
    : l_max_(l_max) {
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& u : entity_units) {
    auto toks = text::word_tokens(u.text);
    std::sort(toks.begin(), toks.end());
    toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
    for (auto& t : toks) ++df[t];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(df.begin(), df.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  const auto decile = (ranked.size() + 9) / 10;
  for (std::size_t i = 0; i < decile; ++i) frequent_.insert(ranked[i].first);
}

double BaselineSpecificity::score(std::string_view s) const {
  const auto toks = text::word_tokens(s);
  if (toks.empty()) return 0.0;
  std::size_t numerals = 0, content = 0, rare = 0;
  for (const auto& t : toks) {
    if (text::is_numeral(t)) ++numerals;
    if (!text::is_stopword(t)) ++content;
    if (!frequent_.contains(t)) ++rare;
  }
  const double raw = 0.5 * static_cast<double>(numerals) +
                     0.3 * static_cast<double>(content) / static_cast<double>(l_max_) +
                     0.2 * static_cast<double>(rare) / static_cast<double>(toks.size());
  return std::min(1.0, raw);
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd popularity_graph(std::span<const std::string> member_texts,
                                 std::string_view opinion_surface, const Aligner& aligner) {
  const auto m = static_cast<Eigen::Index>(member_texts.size());
  std::vector<TextPair> pairs;
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b)
      if (a != b) pairs.emplace_back(member_texts[a], member_texts[b]);
    pairs.emplace_back(member_texts[a], std::string(opinion_surface));
  }
  aligner.prefetch(pairs);

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m + 1, m + 1);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = a + 1; b < m; ++b) {
      const auto& x = member_texts[a];
      const auto& y = member_texts[b];
      if (aligner.aligns(x, y) || aligner.aligns(y, x))
        w(a, b) = w(b, a) = std::max(aligner.p_align(x, y), aligner.p_align(y, x));
    }
    if (aligner.aligns(member_texts[a], opinion_surface))
      w(a, m) = w(m, a) = aligner.p_align(member_texts[a], opinion_surface);
  }
  return w;
}

PopularityResult popularity(std::span<const std::string> member_texts,
                            std::string_view opinion_surface, const Aligner& aligner) {
  const auto w = popularity_graph(member_texts, opinion_surface, aligner);
  const auto pr = weighted_pagerank(w);
  const auto m = static_cast<Eigen::Index>(member_texts.size());
  return {pr.scores.head(m), pr.scores(m)};
}

std::map<std::string, double> popularity(const CandidateSet& c,
                                         std::span<const SentenceUnit> units,
                                         const Aligner& aligner) {
  std::vector<std::string> texts;
  for (auto i : c.member_indices) texts.push_back(units[i].text);
  const auto r = popularity(texts, c.prototype_opinion.surface, aligner);
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < c.member_unit_ids.size(); ++i)
    out[c.member_unit_ids[i]] = r.members(static_cast<Eigen::Index>(i));
  return out;
}

// ---------------------------------------------------------------------------

TokenBag make_bag(std::string_view s) {
  TokenBag bag;
  for (auto& t : text::word_tokens(s)) ++bag[t];
  return bag;
}

double bag_cosine(const TokenBag& a, const TokenBag& b) {
  if (a.empty() || b.empty()) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [t, c] : a) {
    na += static_cast<double>(c) * c;
    if (auto it = b.find(t); it != b.end()) dot += static_cast<double>(c) * it->second;
  }
  for (const auto& [_, c] : b) nb += static_cast<double>(c) * c;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double diversity(std::span<const TokenBag> group) {
  if (group.empty()) throw ContractError("diversity: empty group");
  if (group.size() == 1) return 0.0;
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < group.size(); ++a)
    for (std::size_t b = a + 1; b < group.size(); ++b, ++pairs) sum += bag_cosine(group[a], group[b]);
  return -sum / static_cast<double>(pairs);
}

// ---------------------------------------------------------------------------

std::vector<PropertyScores> salience(std::span<const std::string> unit_ids,
                                     const Eigen::VectorXd& rel, const Eigen::VectorXd& spec,
                                     const Eigen::VectorXd& pop) {
  const auto n = static_cast<Eigen::Index>(unit_ids.size());
  if (rel.size() != n || spec.size() != n || pop.size() != n)
    throw ContractError("salience: property vectors must match the candidate set");
  const Eigen::VectorXd rn = minmax_normalize(rel);
  const Eigen::VectorXd sn = minmax_normalize(spec);
  const Eigen::VectorXd pn = minmax_normalize(pop);
  std::vector<PropertyScores> out;
  out.reserve(unit_ids.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    out.push_back({unit_ids[i], rel(i), spec(i), pop(i), rn(i), sn(i), pn(i),
                   rn(i) * sn(i) * pn(i)});
  }
  return out;
}

std::vector<PropertyScores> candidate_properties(const CandidateSet& c,
                                                 std::span<const SentenceUnit> units,
                                                 const ClusterScores& scores,
                                                 Eigen::Index cluster,
                                                 const SpecificityScorer& specificity,
                                                 const Aligner& aligner) {
  const auto n = static_cast<Eigen::Index>(c.size());
  Eigen::VectorXd rel(n), spec(n);
  std::vector<std::string> texts;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto idx = c.member_indices[i];
    rel(i) = relatedness(scores, static_cast<Eigen::Index>(idx), cluster);
    spec(i) = specificity.score(units[idx].text);
    texts.push_back(units[idx].text);
  }
  Eigen::VectorXd pop;
  if (n >= 2) {
    pop = popularity(texts, c.prototype_opinion.surface, aligner).members;
  } else {
    pop = Eigen::VectorXd::Ones(n);
  }
  return salience(c.member_unit_ids, rel, spec, pop);
}

}  // namespace rsum
