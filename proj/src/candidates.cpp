#include "rsum/candidates.hpp"

#include <unordered_map>

#include "rsum/error.hpp"

namespace rsum {

double cluster_relatedness(const SentenceUnit& s, const OpinionCluster& g,
                           const Aligner& aligner) {
  if (g.members.empty()) throw ContractError("cluster_relatedness: empty cluster");
  double best = 0.0;
  for (const auto& o : g.members) best = std::max(best, aligner.p_align(s.text, o.surface));
  return best;
}

ClusterScores cluster_scores(const AlignmentTable& table, std::span<const Opinion> opinions,
                             std::span<const OpinionCluster> clusters) {
  std::unordered_map<std::string, Eigen::Index> column;
  for (std::size_t j = 0; j < opinions.size(); ++j)
    column.emplace(opinions[j].opinion_id, static_cast<Eigen::Index>(j));

  const auto n = table.units();
  const auto k = static_cast<Eigen::Index>(clusters.size());
  ClusterScores out{Eigen::MatrixXd::Zero(n, k),
                    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, k, false)};
  for (Eigen::Index c = 0; c < k; ++c) {
    for (const auto& o : clusters[c].members) {
      auto it = column.find(o.opinion_id);
      if (it == column.end()) throw ContractError("opinion " + o.opinion_id + " not in table");
      out.e.col(c) = out.e.col(c).cwiseMax(table.p_align.col(it->second));
      out.aligned.col(c) = out.aligned.col(c).array() || table.aligns.col(it->second).array();
    }
  }
  return out;
}

std::vector<CandidateSet> build_candidate_sets(std::span<const SentenceUnit> units,
                                               std::span<const OpinionCluster> clusters,
                                               const ClusterScores& scores,
                                               std::size_t min_size) {
  if (min_size < 1) throw ContractError("min_size must be >= 1");
  const auto k = static_cast<Eigen::Index>(clusters.size());
  std::vector<CandidateSet> sets(clusters.size());
  for (Eigen::Index c = 0; c < k; ++c) {
    sets[c].cluster_id = clusters[c].cluster_id;
    sets[c].prototype_opinion = clusters[c].prototype_opinion();
  }

  auto outranks = [&](Eigen::Index a, Eigen::Index b, Eigen::Index row) {
    const double ea = scores.e(row, a), eb = scores.e(row, b);
    if (ea != eb) return ea > eb;
    const auto sa = clusters[a].members.size(), sb = clusters[b].members.size();
    if (sa != sb) return sa > sb;
    return clusters[a].cluster_id < clusters[b].cluster_id;
  };

  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    if (k == 0 || !scores.aligned.row(row).any()) continue;
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < k; ++c)
      if (outranks(c, best, row)) best = c;
    if (!scores.aligned(row, best)) continue;
    auto& set = sets[best];
    set.member_unit_ids.push_back(units[i].unit_id);
    set.member_indices.push_back(i);
    set.relatedness_to_cluster[units[i].unit_id] = scores.e(row, best);
  }

  std::vector<CandidateSet> kept;
  for (auto& s : sets)
    if (s.size() >= min_size) kept.push_back(std::move(s));
  return kept;
}

std::vector<CandidateSet> build_candidate_sets(std::span<const SentenceUnit> units,
                                               std::span<const Opinion> opinions,
                                               std::span<const OpinionCluster> clusters,
                                               const Aligner& aligner, std::size_t min_size) {
  const auto table = compute_alignment_table(units, opinions, aligner);
  return build_candidate_sets(units, clusters, cluster_scores(table, opinions, clusters),
                              min_size);
}

}  // namespace rsum
