#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rsum/properties.hpp"

namespace rsum {

struct GibbsConfig {
  std::size_t k = 3;
  int eta = 100;    // burn-in scans
  int theta = 200;  // recording scans
  double temperature = 0.01;
  double w_div = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Everything the sampler needs about one candidate set: salience per member
// and the pairwise bag-of-words cosine matrix behind the diversity term.
struct SamplingProblem {
  std::vector<std::string> unit_ids;
  Eigen::VectorXd sal;
  Eigen::MatrixXd similarity;

  std::size_t size() const { return unit_ids.size(); }

  static SamplingProblem from_bags(std::vector<std::string> unit_ids, Eigen::VectorXd sal,
                                   std::span<const TokenBag> bags);
  static SamplingProblem from_properties(std::span<const PropertyScores> props,
                                         std::span<const std::string> texts);
};

// Negated mean pairwise similarity of the group; 0 for one member.
double group_diversity(const SamplingProblem& p, std::span<const std::size_t> group);

// Sum of salience plus w_div times diversity: the log of the unnormalized
// joint probability of a rationale group.
double joint_exponent(const SamplingProblem& p, std::span<const std::size_t> group, double w_div);

// Sorted unit ids of a group; used as the frequency key and for tie-breaks.
std::vector<std::string> group_key(const SamplingProblem& p, std::span<const std::size_t> group);

struct ConditionalDistribution {
  std::vector<std::size_t> candidates;  // members outside the other slots
  std::vector<double> probabilities;
};

// Softmax over (sal(s) + w_div div(R without slot j, plus s)) / temperature.
ConditionalDistribution conditional_distribution(const SamplingProblem& p,
                                                 std::span<const std::size_t> group,
                                                 std::size_t slot, const GibbsConfig& cfg);

std::size_t conditional_sample(const SamplingProblem& p, std::span<const std::size_t> group,
                               std::size_t slot, const GibbsConfig& cfg, std::mt19937_64& rng);

struct RationaleSet {
  std::string opinion_id;
  std::vector<std::string> unit_ids;  // sorted
  std::vector<std::size_t> members;   // indices into the problem, same order
  double joint_score = 0.0;
  std::size_t frequency = 0;
  std::size_t total_recorded = 0;
  std::uint64_t seed = 0;
  std::optional<std::string> warning;
  // Distinct groups recorded after burn-in.
  std::size_t distinct_groups = 0;
};

// RNG stream for one sampler instance, derived from the run seed and a salt
// such as the cluster id.
std::uint64_t stream_seed(std::uint64_t seed, std::string_view salt);

// Gibbs sampler: random initial group, eta + theta scans of k slot updates,
// frequencies recorded after every update once burn-in is over. Returns the
// most frequent group (ties: larger joint exponent, then smaller key).
RationaleSet sample_rationales(const std::string& opinion_id, const SamplingProblem& p,
                               const GibbsConfig& cfg);

struct MapGroup {
  std::vector<std::size_t> members;
  double joint_exponent = 0.0;
};

inline constexpr double kMaxEnumeratedGroups = 1e6;

// Exhaustive maximizer of joint_exponent over all k-subsets (ties: smaller
// key). Refuses when C(n, k) exceeds kMaxEnumeratedGroups.
MapGroup exact_map_group(const SamplingProblem& p, std::size_t k, double w_div);

}  // namespace rsum
