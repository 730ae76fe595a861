#pragma once

#include <Eigen/Dense>

#include <map>
#include <span>
#include <string>
#include <vector>

#include "rsum/alignment.hpp"
#include "rsum/corpus.hpp"
#include "rsum/opinions.hpp"

namespace rsum {

// Pool of units eligible as rationales for one cluster's prototype opinion.
struct CandidateSet {
  std::string cluster_id;
  Opinion prototype_opinion;
  std::vector<std::string> member_unit_ids;
  std::vector<std::size_t> member_indices;  // into the entity's unit list
  std::map<std::string, double> relatedness_to_cluster;  // e(s, G)

  std::size_t size() const { return member_unit_ids.size(); }
};

// e(s, G): the largest gated p_align between s and any member of G.
double cluster_relatedness(const SentenceUnit& s, const OpinionCluster& g, const Aligner& aligner);

// Unit-by-cluster view of an alignment table.
struct ClusterScores {
  Eigen::MatrixXd e;  // e(s, G)
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> aligned;  // s aligns with some o in G
};

ClusterScores cluster_scores(const AlignmentTable& table, std::span<const Opinion> opinions,
                             std::span<const OpinionCluster> clusters);

// Assigns each unit to the cluster maximizing e(s, G) over all clusters
// (ties: larger cluster, then smaller cluster_id), provided the unit aligns
// with an opinion of that cluster. Sets below min_size are dropped.
std::vector<CandidateSet> build_candidate_sets(std::span<const SentenceUnit> units,
                                               std::span<const OpinionCluster> clusters,
                                               const ClusterScores& scores, std::size_t min_size);

std::vector<CandidateSet> build_candidate_sets(std::span<const SentenceUnit> units,
                                               std::span<const Opinion> opinions,
                                               std::span<const OpinionCluster> clusters,
                                               const Aligner& aligner, std::size_t min_size);

}  // namespace rsum
