#include "rsum/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "rsum/error.hpp"
#include "rsum/text.hpp"

namespace rsum {

std::vector<Eigen::VectorXd> Embedder::embed_batch(std::span<const std::string> texts) const {
  std::vector<Eigen::VectorXd> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(t));
  return out;
}

Eigen::VectorXd HashEmbedder::embed(std::string_view s) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim_);
  const auto toks = text::word_tokens(s);
  auto add = [&](const std::string& feature) {
    const auto h = text::stable_hash64(feature);
    const auto idx = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim_));
    v(idx) += (h >> 63) ? -1.0 : 1.0;
  };
  for (std::size_t i = 0; i < toks.size(); ++i) {
    add(toks[i]);
    if (i + 1 < toks.size()) add(toks[i] + ' ' + toks[i + 1]);
  }
  const double n = v.norm();
  if (n > 0.0) v /= n;
  return v;
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

// ---------------------------------------------------------------------------

std::vector<std::string> normalize_tokens(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& t : text::word_tokens(s))
    if (!text::is_stopword(t)) out.push_back(text::lemmatize(t));
  return out;
}

std::vector<std::vector<std::string>> preprocess_tokens(std::span<const std::string> texts,
                                                        const ExtremeFilter& filter) {
  std::vector<std::vector<std::string>> docs;
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& t : texts) {
    std::vector<std::string> d;
    for (auto& tok : text::word_tokens(t))
      if (!text::is_stopword(tok)) d.push_back(std::move(tok));
    std::set<std::string> uniq(d.begin(), d.end());
    for (const auto& u : uniq) ++df[u];
    docs.push_back(std::move(d));
  }
  const double max_docs = filter.no_above * static_cast<double>(texts.size());
  for (auto& d : docs) {
    std::vector<std::string> kept;
    for (const auto& tok : d) {
      const auto f = df[tok];
      if (f < filter.no_below || static_cast<double>(f) > max_docs) continue;
      kept.push_back(text::lemmatize(tok));
    }
    d = std::move(kept);
  }
  return docs;
}

TfidfTable TfidfTable::build(std::span<const std::vector<std::string>> documents) {
  TfidfTable t;
  const auto n = static_cast<double>(documents.size());
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& d : documents) {
    std::set<std::string> uniq(d.begin(), d.end());
    for (const auto& u : uniq) ++df[u];
  }
  for (const auto& d : documents) {
    std::map<std::string, double> tf;
    for (const auto& tok : d) tf[tok] += 1.0;
    for (auto& [tok, v] : tf) {
      const double idf = std::log((1.0 + n) / (1.0 + static_cast<double>(df[tok]))) + 1.0;
      v = v / static_cast<double>(d.size()) * idf;
    }
    t.scores.push_back(std::move(tf));
  }
  return t;
}

std::vector<std::pair<std::string, double>> TfidfTable::ranked(std::size_t d) const {
  std::vector<std::pair<std::string, double>> out(scores.at(d).begin(), scores.at(d).end());
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

std::vector<KeywordSet> extract_keywords(std::span<const std::string> cluster_ids,
                                         const TfidfTable& table,
                                         std::span<const std::vector<std::string>> excluded,
                                         std::size_t count) {
  if (cluster_ids.size() != table.scores.size() || excluded.size() != table.scores.size())
    throw ContractError("extract_keywords: one id and exclusion list per document");
  std::vector<KeywordSet> out;
  for (std::size_t d = 0; d < cluster_ids.size(); ++d) {
    KeywordSet ks{cluster_ids[d], {}, 0.0};
    if (table.scores.size() >= 2) {
      const std::unordered_set<std::string> skip(excluded[d].begin(), excluded[d].end());
      for (const auto& [tok, score] : table.ranked(d)) {
        if (ks.keywords.size() == count) break;
        if (skip.contains(tok)) continue;
        ks.keywords.emplace_back(tok, score);
        ks.all_keyword_mass += score;
      }
    }
    out.push_back(std::move(ks));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::unordered_set<std::string> token_union(std::span<const std::string> texts) {
  std::unordered_set<std::string> out;
  for (const auto& t : texts)
    for (auto& tok : normalize_tokens(t)) out.insert(std::move(tok));
  return out;
}

double covered_mass(const std::unordered_set<std::string>& tokens, const KeywordSet& ks) {
  double m = 0.0;
  for (const auto& [tok, score] : ks.keywords)
    if (tokens.contains(tok)) m += score;
  return m;
}

}  // namespace

double metric_emb_rel(std::string_view opinion, std::span<const std::string> rationales,
                      const Embedder& embedder) {
  if (rationales.empty()) throw ContractError("emb_rel: no rationales");
  const auto o = embedder.embed(opinion);
  const auto rs = embedder.embed_batch(rationales);
  double sum = 0.0;
  for (const auto& r : rs) sum += cosine(o, r);
  return sum / static_cast<double>(rs.size());
}

std::optional<double> metric_key_spec(std::span<const std::string> rationales,
                                      const KeywordSet& keywords) {
  if (keywords.all_keyword_mass <= 0.0) return std::nullopt;
  return covered_mass(token_union(rationales), keywords) / keywords.all_keyword_mass;
}

std::optional<double> metric_key_pop(std::span<const std::string> rationales,
                                     const KeywordSet& keywords,
                                     const std::map<std::string, double>& tfidf) {
  if (rationales.empty()) throw ContractError("key_pop: no rationales");
  const auto tokens = token_union(rationales);
  double denom = 0.0;
  for (const auto& tok : tokens)
    if (auto it = tfidf.find(tok); it != tfidf.end()) denom += it->second;
  if (denom <= 0.0) return std::nullopt;
  return covered_mass(tokens, keywords) / denom;
}

std::optional<double> metric_emb_div(std::span<const std::string> rationales,
                                     const Embedder& embedder) {
  if (rationales.size() < 2) return std::nullopt;
  const auto rs = embedder.embed_batch(rationales);
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < rs.size(); ++a)
    for (std::size_t b = a + 1; b < rs.size(); ++b, ++pairs) sum += cosine(rs[a], rs[b]);
  return 1.0 - sum / static_cast<double>(pairs);
}

// ---------------------------------------------------------------------------

std::optional<double> silhouette_from_distances(const Eigen::MatrixXd& distances,
                                                std::span<const int> labels) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (distances.rows() != n || distances.cols() != n)
    throw ContractError("silhouette: distance matrix does not match labels");
  std::map<int, std::size_t> sizes;
  for (int l : labels) ++sizes[l];
  if (sizes.size() < 2) return std::nullopt;

  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int own = labels[i];
    if (sizes[own] == 1) continue;  // s = 0
    std::map<int, double> sum;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) sum[labels[j]] += distances(i, j);
    const double a = sum[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [l, s] : sum)
      if (l != own) b = std::min(b, s / static_cast<double>(sizes[l]));
    const double m = std::max(a, b);
    if (m > 0.0) total += (b - a) / m;
  }
  return total / static_cast<double>(n);
}

std::optional<double> metric_silhouette(const Eigen::MatrixXd& embeddings,
                                        std::span<const int> labels) {
  const auto n = embeddings.rows();
  Eigen::MatrixXd unit = embeddings;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = unit.row(i).norm();
    if (norm > 0.0) unit.row(i) /= norm;
  }
  Eigen::MatrixXd d = (Eigen::MatrixXd::Ones(n, n) - unit * unit.transpose()).cwiseMax(0.0);
  d.diagonal().setZero();
  return silhouette_from_distances(d, labels);
}

double npmi(double p_joint, double p_a, double p_b, double eps) {
  if (p_joint >= 1.0 - eps) return 1.0;
  const double pj = p_joint + eps;
  return std::log(pj / (p_a * p_b + eps)) / -std::log(pj);
}

std::optional<double> metric_npmi(const TfidfTable& table,
                                  std::span<const std::vector<std::string>> units,
                                  std::size_t top) {
  if (units.empty()) return std::nullopt;
  std::vector<std::unordered_set<std::string>> occurs;
  for (const auto& u : units) occurs.emplace_back(u.begin(), u.end());
  const double n = static_cast<double>(units.size());
  auto prob = [&](const std::string& a, const std::string* b) {
    std::size_t c = 0;
    for (const auto& o : occurs)
      if (o.contains(a) && (b == nullptr || o.contains(*b))) ++c;
    return static_cast<double>(c) / n;
  };

  double sum = 0.0;
  std::size_t sets = 0;
  for (std::size_t d = 0; d < table.scores.size(); ++d) {
    auto ranked = table.ranked(d);
    if (ranked.size() > top) ranked.resize(top);
    if (ranked.size() < 2) continue;
    double set_sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < ranked.size(); ++a) {
      for (std::size_t b = a + 1; b < ranked.size(); ++b, ++pairs) {
        const auto& wa = ranked[a].first;
        const auto& wb = ranked[b].first;
        set_sum += npmi(prob(wa, &wb), prob(wa, nullptr), prob(wb, nullptr));
      }
    }
    sum += set_sum / static_cast<double>(pairs);
    ++sets;
  }
  if (sets == 0) return std::nullopt;
  return sum / static_cast<double>(sets);
}

// ---------------------------------------------------------------------------

OverallResult overall_score(const MetricTable& table) {
  OverallResult out;
  if (table.size() < 2) {
    out.note = "Overall needs at least two systems to normalize against";
    return out;
  }
  std::map<std::string, std::pair<double, double>> range;
  for (const auto& [_, metrics] : table) {
    for (const auto& [m, v] : metrics) {
      auto [it, fresh] = range.try_emplace(m, v, v);
      if (!fresh) {
        it->second.first = std::min(it->second.first, v);
        it->second.second = std::max(it->second.second, v);
      }
    }
  }
  for (const auto& [system, metrics] : table) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& [m, v] : metrics) {
      const auto [lo, hi] = range[m];
      sum += hi == lo ? 1.0 : (v - lo) / (hi - lo);
      ++count;
    }
    if (count > 0) out.scores[system] = sum / static_cast<double>(count);
  }
  return out;
}

}  // namespace rsum
