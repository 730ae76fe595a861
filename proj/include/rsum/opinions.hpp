#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rsum/absa.hpp"
#include "rsum/alignment.hpp"
#include "rsum/corpus.hpp"

namespace rsum {

// "noun is adjective" statement about an entity.
struct Opinion {
  std::string opinion_id;  // equal to surface; unique within an entity
  std::string noun;
  std::string adjective;
  std::string surface;
  std::string source_sentence_id;
  std::string aspect_category;
  Sentiment sentiment = Sentiment::neutral;

  AbsaAnnotation annotation() const;
  bool operator==(const Opinion&) const = default;
};

// A sentence from an upstream extractive summary, with its ABSA annotation.
struct SummarySentence {
  std::string entity_id;
  std::string text;
  AbsaAnnotation absa;
};

std::vector<SummarySentence> load_summary_sentences(const std::filesystem::path& path);

// One opinion per (noun, adjective) pair, lowercased and deduplicated on the
// surface form within each entity. Input order is preserved.
std::vector<Opinion> extract_opinions(std::span<const SummarySentence> sentences);

// p_align and aligns over units (rows) x opinions (columns), gate applied.
struct AlignmentTable {
  Eigen::MatrixXd p_align;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> aligns;

  Eigen::Index units() const { return p_align.rows(); }
  Eigen::Index opinions() const { return p_align.cols(); }
};

AlignmentTable compute_alignment_table(std::span<const SentenceUnit> units,
                                       std::span<const Opinion> opinions, const Aligner& aligner);

using FeatureVector = Eigen::SparseVector<double>;

// Entry i holds p_align(unit i, o) where unit i aligns with o.
FeatureVector build_feature_vector(const Opinion& o, std::span<const SentenceUnit> units,
                                   const Aligner& aligner);
FeatureVector feature_vector(const AlignmentTable& table, Eigen::Index opinion);

// Cosine similarity; 0 when either vector is empty.
double opinion_similarity(const FeatureVector& f, const FeatureVector& g);

Eigen::MatrixXd similarity_matrix(std::span<const FeatureVector> vectors);

// Connected components of the graph with an edge wherever similarity > beta.
// Components are listed by smallest member index; members ascend.
std::vector<std::vector<std::size_t>> threshold_components(const Eigen::MatrixXd& similarity,
                                                           double beta);

struct OpinionCluster {
  std::string cluster_id;
  std::vector<Opinion> members;
  std::string prototype;  // opinion_id of a member

  const Opinion& prototype_opinion() const;
};

// Member with the largest support; ties by larger entry sum, then smaller id.
std::string select_prototype(const OpinionCluster& cluster,
                             const std::map<std::string, FeatureVector>& vectors);

// Clusters are ordered by their lexicographically smallest member id, so the
// result does not depend on input order.
std::vector<OpinionCluster> cluster_opinions(std::span<const Opinion> opinions,
                                             std::span<const FeatureVector> vectors, double beta);

}  // namespace rsum
