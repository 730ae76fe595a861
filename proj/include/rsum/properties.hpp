#pragma once

#include <Eigen/Dense>

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "rsum/alignment.hpp"
#include "rsum/candidates.hpp"
#include "rsum/corpus.hpp"
#include "rsum/opinions.hpp"

namespace rsum {

// ---------------------------------------------------------------------------
// Normalization

// (v - min) / (max - min); all ones when max == min.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> minmax_normalize(
    const Eigen::MatrixBase<Derived>& values) {
  using Scalar = typename Derived::Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (values.size() == 0) return Vector();
  const Scalar lo = values.minCoeff();
  const Scalar hi = values.maxCoeff();
  if (hi == lo) return Vector::Ones(values.size());
  return ((values.array() - lo) / (hi - lo)).matrix();
}

std::map<std::string, double> minmax_normalize(const std::map<std::string, double>& values);

// ---------------------------------------------------------------------------
// Relatedness

// e(s, G_i) divided by the sum of e(s, G_k) over clusters G_k containing an
// opinion that s aligns with.
double relatedness(const ClusterScores& scores, Eigen::Index unit, Eigen::Index cluster);

double relatedness(const SentenceUnit& s, const OpinionCluster& g_i,
                   std::span<const OpinionCluster> all_clusters, const Aligner& aligner);

// ---------------------------------------------------------------------------
// Specificity

class SpecificityScorer {
 public:
  virtual ~SpecificityScorer() = default;
  virtual std::string id() const = 0;
  // Detail score in [0, 1].
  virtual double score(std::string_view text) const = 0;
};

// Offline detail-density proxy:
//   min(1, 0.5 numerals + 0.3 content/l_max + 0.2 rare/tokens)
// where rare tokens fall outside the top decile of document frequency over
// the entity's units.
class BaselineSpecificity final : public SpecificityScorer {
 public:
  BaselineSpecificity(std::span<const SentenceUnit> entity_units, std::size_t l_max = 20);

  std::string id() const override { return "baseline-specificity-v1"; }
  double score(std::string_view text) const override;

  const std::unordered_set<std::string>& frequent_tokens() const { return frequent_; }

 private:
  std::unordered_set<std::string> frequent_;
  std::size_t l_max_;
};

// ---------------------------------------------------------------------------
// Popularity

struct PopularityResult {
  Eigen::VectorXd members;  // candidate-set member order
  double opinion = 0.0;     // centrality of the opinion node

  double total() const { return members.sum() + opinion; }
};

// Edge weights of the popularity graph; the last node is the opinion.
Eigen::MatrixXd popularity_graph(std::span<const std::string> member_texts,
                                 std::string_view opinion_surface, const Aligner& aligner);

PopularityResult popularity(std::span<const std::string> member_texts,
                            std::string_view opinion_surface, const Aligner& aligner);

std::map<std::string, double> popularity(const CandidateSet& c,
                                         std::span<const SentenceUnit> units,
                                         const Aligner& aligner);

// ---------------------------------------------------------------------------
// Diversity

using TokenBag = std::map<std::string, int>;

// Lowercased word tokens, no stopword removal.
TokenBag make_bag(std::string_view text);
double bag_cosine(const TokenBag& a, const TokenBag& b);

// Negated mean pairwise cosine; 0 for a single bag.
double diversity(std::span<const TokenBag> group);

// ---------------------------------------------------------------------------
// Salience

struct PropertyScores {
  std::string unit_id;
  double rel_raw = 0.0;
  double spec_raw = 0.0;
  double pop_raw = 0.0;
  double rel_n = 0.0;
  double spec_n = 0.0;
  double pop_n = 0.0;
  double sal = 0.0;
};

// Normalizes each raw property within the set and multiplies them.
std::vector<PropertyScores> salience(std::span<const std::string> unit_ids,
                                     const Eigen::VectorXd& rel, const Eigen::VectorXd& spec,
                                     const Eigen::VectorXd& pop);

// All properties for one candidate set; `cluster` indexes the scores columns.
std::vector<PropertyScores> candidate_properties(const CandidateSet& c,
                                                 std::span<const SentenceUnit> units,
                                                 const ClusterScores& scores,
                                                 Eigen::Index cluster,
                                                 const SpecificityScorer& specificity,
                                                 const Aligner& aligner);

}  // namespace rsum
