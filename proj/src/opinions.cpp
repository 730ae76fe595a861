#include "rsum/opinions.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "json.hpp"
#include "rsum/error.hpp"
#include "rsum/serialization.hpp"
#include "rsum/text.hpp"

namespace rsum {

using nlohmann::json;

AbsaAnnotation Opinion::annotation() const {
  return AbsaAnnotation{aspect_category, sentiment, {{noun, adjective}}};
}

std::vector<SummarySentence> load_summary_sentences(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open summary-sentence file " + path.string());
  std::vector<SummarySentence> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      auto rec = json::parse(line);
      out.push_back({rec.at("entity_id").get<std::string>(), rec.at("text").get<std::string>(),
                     rec.at("absa").get<AbsaAnnotation>()});
    } catch (const std::exception& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return out;
}

std::vector<Opinion> extract_opinions(std::span<const SummarySentence> sentences) {
  std::vector<Opinion> out;
  std::unordered_set<std::string> seen;  // entity_id + '\n' + surface
  std::map<std::string, std::size_t> per_entity_index;
  for (const auto& s : sentences) {
    const auto idx = per_entity_index[s.entity_id]++;
    for (const auto& [noun, adj] : s.absa.pairs) {
      Opinion o;
      o.noun = text::normalize(noun);
      o.adjective = text::normalize(adj);
      if (o.noun.empty() || o.adjective.empty()) continue;
      o.surface = o.noun + " is " + o.adjective;
      if (!seen.insert(s.entity_id + '\n' + o.surface).second) continue;
      o.opinion_id = o.surface;
      o.source_sentence_id = s.entity_id + "/summary/" + std::to_string(idx);
      o.aspect_category = s.absa.aspect_category;
      o.sentiment = s.absa.sentiment;
      out.push_back(std::move(o));
    }
  }
  return out;
}

AlignmentTable compute_alignment_table(std::span<const SentenceUnit> units,
                                       std::span<const Opinion> opinions,
                                       const Aligner& aligner) {
  const auto n = static_cast<Eigen::Index>(units.size());
  const auto m = static_cast<Eigen::Index>(opinions.size());
  const auto& scorer = aligner.scorer();
  std::vector<std::string> texts;
  for (const auto& u : units) texts.push_back(u.text);
  const auto unit_sent = scorer.sentiment_batch(texts);
  texts.clear();
  for (const auto& o : opinions) texts.push_back(o.surface);
  const auto op_sent = scorer.sentiment_batch(texts);
  auto gated = [&](Eigen::Index i, Eigen::Index j) {
    return unit_sent[i] && op_sent[j] && *unit_sent[i] != *op_sent[j];
  };

  std::vector<TextPair> pairs;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (!gated(i, j)) pairs.emplace_back(units[i].text, opinions[j].surface);
  aligner.prefetch(pairs);

  AlignmentTable t{Eigen::MatrixXd::Zero(n, m),
                   Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, m, false)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (gated(i, j)) continue;
      const auto jd = aligner.judge(units[i].text, opinions[j].surface);
      t.p_align(i, j) = jd.p_aligns;
      t.aligns(i, j) = jd.argmax() == AlignLabel::alignment;
    }
  }
  return t;
}

FeatureVector build_feature_vector(const Opinion& o, std::span<const SentenceUnit> units,
                                   const Aligner& aligner) {
  FeatureVector f(static_cast<Eigen::Index>(units.size()));
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (!aligner.aligns(units[i].text, o.surface)) continue;
    const double p = aligner.p_align(units[i].text, o.surface);
    if (p > 0.0) f.insert(static_cast<Eigen::Index>(i)) = p;
  }
  return f;
}

FeatureVector feature_vector(const AlignmentTable& table, Eigen::Index opinion) {
  FeatureVector f(table.units());
  for (Eigen::Index i = 0; i < table.units(); ++i) {
    const double p = table.p_align(i, opinion);
    if (table.aligns(i, opinion) && p > 0.0) f.insert(i) = p;
  }
  return f;
}

double opinion_similarity(const FeatureVector& f, const FeatureVector& g) {
  if (f.nonZeros() == 0 || g.nonZeros() == 0) return 0.0;
  const double nf = f.norm(), ng = g.norm();
  if (nf == 0.0 || ng == 0.0) return 0.0;
  return std::clamp(f.dot(g) / (nf * ng), 0.0, 1.0);
}

Eigen::MatrixXd similarity_matrix(std::span<const FeatureVector> vectors) {
  const auto m = static_cast<Eigen::Index>(vectors.size());
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = a + 1; b < m; ++b)
      s(a, b) = s(b, a) = opinion_similarity(vectors[a], vectors[b]);
  return s;
}

std::vector<std::vector<std::size_t>> threshold_components(const Eigen::MatrixXd& similarity,
                                                           double beta) {
  const auto m = static_cast<std::size_t>(similarity.rows());
  std::vector<int> comp(m, -1);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < m; ++start) {
    if (comp[start] >= 0) continue;
    const int id = static_cast<int>(out.size());
    out.emplace_back();
    std::vector<std::size_t> stack{start};
    comp[start] = id;
    while (!stack.empty()) {
      const auto a = stack.back();
      stack.pop_back();
      out.back().push_back(a);
      for (std::size_t b = 0; b < m; ++b) {
        if (comp[b] < 0 && b != a &&
            similarity(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) > beta) {
          comp[b] = id;
          stack.push_back(b);
        }
      }
    }
    std::sort(out.back().begin(), out.back().end());
  }
  return out;
}

const Opinion& OpinionCluster::prototype_opinion() const {
  for (const auto& o : members)
    if (o.opinion_id == prototype) return o;
  throw ContractError("cluster " + cluster_id + " has no prototype member");
}

std::string select_prototype(const OpinionCluster& cluster,
                             const std::map<std::string, FeatureVector>& vectors) {
  if (cluster.members.empty()) throw ContractError("select_prototype: empty cluster");
  const Opinion* best = nullptr;
  Eigen::Index best_support = -1;
  double best_sum = 0.0;
  for (const auto& o : cluster.members) {
    Eigen::Index support = 0;
    double sum = 0.0;
    if (auto it = vectors.find(o.opinion_id); it != vectors.end()) {
      support = it->second.nonZeros();
      sum = it->second.sum();
    }
    const bool better = best == nullptr || support > best_support ||
                        (support == best_support && sum > best_sum) ||
                        (support == best_support && sum == best_sum &&
                         o.opinion_id < best->opinion_id);
    if (better) {
      best = &o;
      best_support = support;
      best_sum = sum;
    }
  }
  return best->opinion_id;
}

std::vector<OpinionCluster> cluster_opinions(std::span<const Opinion> opinions,
                                             std::span<const FeatureVector> vectors,
                                             double beta) {
  if (beta < 0.0 || beta > 1.0) throw ContractError("beta must lie in [0, 1]");
  if (opinions.size() != vectors.size())
    throw ContractError("cluster_opinions: one feature vector per opinion required");
  const auto comps = threshold_components(similarity_matrix(vectors), beta);

  std::map<std::string, FeatureVector> by_id;
  for (std::size_t i = 0; i < opinions.size(); ++i) by_id.emplace(opinions[i].opinion_id, vectors[i]);

  std::vector<OpinionCluster> clusters;
  for (const auto& comp : comps) {
    OpinionCluster c;
    for (auto i : comp) c.members.push_back(opinions[i]);
    std::sort(c.members.begin(), c.members.end(),
              [](const Opinion& a, const Opinion& b) { return a.opinion_id < b.opinion_id; });
    clusters.push_back(std::move(c));
  }
  std::sort(clusters.begin(), clusters.end(), [](const auto& a, const auto& b) {
    return a.members.front().opinion_id < b.members.front().opinion_id;
  });
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "G%03zu", k);
    clusters[k].cluster_id = buf;
    clusters[k].prototype = select_prototype(clusters[k], by_id);
  }
  return clusters;
}

}  // namespace rsum
