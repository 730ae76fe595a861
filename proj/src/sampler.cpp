#include "rsum/sampler.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "rsum/error.hpp"
#include "rsum/text.hpp"

namespace rsum {

void GibbsConfig::validate() const {
  if (k < 1) throw ValidationError("k must be >= 1");
  if (eta < 0) throw ValidationError("eta must be >= 0");
  if (theta < 1) throw ValidationError("theta must be >= 1");
  if (!(temperature > 0.0)) throw ValidationError("temperature must be positive");
  if (w_div < 0.0) throw ValidationError("w_div must be non-negative");
}

SamplingProblem SamplingProblem::from_bags(std::vector<std::string> unit_ids,
                                           Eigen::VectorXd sal,
                                           std::span<const TokenBag> bags) {
  const auto n = static_cast<Eigen::Index>(unit_ids.size());
  if (sal.size() != n || static_cast<Eigen::Index>(bags.size()) != n)
    throw ContractError("SamplingProblem: ids, salience and bags must have equal length");
  Eigen::MatrixXd sim = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b) sim(a, b) = sim(b, a) = bag_cosine(bags[a], bags[b]);
  return {std::move(unit_ids), std::move(sal), std::move(sim)};
}

SamplingProblem SamplingProblem::from_properties(std::span<const PropertyScores> props,
                                                 std::span<const std::string> texts) {
  std::vector<std::string> ids;
  Eigen::VectorXd sal(static_cast<Eigen::Index>(props.size()));
  std::vector<TokenBag> bags;
  for (std::size_t i = 0; i < props.size(); ++i) {
    ids.push_back(props[i].unit_id);
    sal(static_cast<Eigen::Index>(i)) = props[i].sal;
    bags.push_back(make_bag(texts[i]));
  }
  return from_bags(std::move(ids), std::move(sal), bags);
}

double group_diversity(const SamplingProblem& p, std::span<const std::size_t> group) {
  if (group.size() < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t a = 0; a < group.size(); ++a)
    for (std::size_t b = a + 1; b < group.size(); ++b)
      sum += p.similarity(static_cast<Eigen::Index>(group[a]), static_cast<Eigen::Index>(group[b]));
  const double pairs = 0.5 * static_cast<double>(group.size() * (group.size() - 1));
  return -sum / pairs;
}

double joint_exponent(const SamplingProblem& p, std::span<const std::size_t> group,
                      double w_div) {
  double s = 0.0;
  for (auto i : group) s += p.sal(static_cast<Eigen::Index>(i));
  return s + w_div * group_diversity(p, group);
}

std::vector<std::string> group_key(const SamplingProblem& p, std::span<const std::size_t> group) {
  std::vector<std::string> key;
  for (auto i : group) key.push_back(p.unit_ids[i]);
  std::sort(key.begin(), key.end());
  return key;
}

ConditionalDistribution conditional_distribution(const SamplingProblem& p,
                                                 std::span<const std::size_t> group,
                                                 std::size_t slot, const GibbsConfig& cfg) {
  const std::size_t k = group.size();
  std::vector<bool> taken(p.size(), false);
  std::vector<std::size_t> others;
  for (std::size_t j = 0; j < k; ++j) {
    if (j == slot) continue;
    taken[group[j]] = true;
    others.push_back(group[j]);
  }
  // Pairwise similarity mass among the fixed slots.
  double fixed = 0.0;
  for (std::size_t a = 0; a < others.size(); ++a)
    for (std::size_t b = a + 1; b < others.size(); ++b)
      fixed += p.similarity(static_cast<Eigen::Index>(others[a]),
                            static_cast<Eigen::Index>(others[b]));
  const double pairs = 0.5 * static_cast<double>(k * (k - 1));

  ConditionalDistribution d;
  std::vector<double> logits;
  for (std::size_t s = 0; s < p.size(); ++s) {
    if (taken[s]) continue;
    double sim = fixed;
    for (auto r : others)
      sim += p.similarity(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(r));
    const double div = k >= 2 ? -sim / pairs : 0.0;
    d.candidates.push_back(s);
    logits.push_back((p.sal(static_cast<Eigen::Index>(s)) + cfg.w_div * div) / cfg.temperature);
  }
  if (d.candidates.empty()) throw ContractError("conditional_sample: no eligible candidate");
  const double hi = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (auto& l : logits) total += (l = std::exp(l - hi));
  for (auto& l : logits) l /= total;
  d.probabilities = std::move(logits);
  return d;
}

std::size_t conditional_sample(const SamplingProblem& p, std::span<const std::size_t> group,
                               std::size_t slot, const GibbsConfig& cfg, std::mt19937_64& rng) {
  const auto d = conditional_distribution(p, group, slot, cfg);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng);
  for (std::size_t i = 0; i < d.candidates.size(); ++i) {
    r -= d.probabilities[i];
    if (r < 0.0) return d.candidates[i];
  }
  return d.candidates.back();
}

std::uint64_t stream_seed(std::uint64_t seed, std::string_view salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(text::stable_hash64(salt)),
                    static_cast<std::uint32_t>(text::stable_hash64(salt) >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

RationaleSet sample_rationales(const std::string& opinion_id, const SamplingProblem& p,
                               const GibbsConfig& cfg) {
  cfg.validate();
  if (p.size() == 0) throw ContractError("sample_rationales: empty candidate set");
  RationaleSet out;
  out.opinion_id = opinion_id;
  out.seed = cfg.seed;
  std::size_t k = cfg.k;
  if (k > p.size()) {
    out.warning = "k=" + std::to_string(cfg.k) + " exceeds candidate set size " +
                  std::to_string(p.size()) + "; clamped";
    spdlog::warn("opinion \"{}\": {}", opinion_id, *out.warning);
    k = p.size();
  }

  std::mt19937_64 rng(stream_seed(cfg.seed, opinion_id));
  std::vector<std::size_t> all(p.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::size_t> group;
  std::sample(all.begin(), all.end(), std::back_inserter(group), k, rng);
  std::shuffle(group.begin(), group.end(), rng);

  std::map<std::vector<std::size_t>, std::size_t> freq;
  std::vector<std::size_t> key(k);
  for (int scan = 1; scan <= cfg.eta + cfg.theta; ++scan) {
    for (std::size_t slot = 0; slot < k; ++slot) {
      group[slot] = conditional_sample(p, group, slot, cfg, rng);
      if (scan > cfg.eta) {
        key = group;
        std::sort(key.begin(), key.end());
        ++freq[key];
        ++out.total_recorded;
      }
    }
  }

  const std::vector<std::size_t>* best = nullptr;
  std::size_t best_count = 0;
  double best_score = 0.0;
  std::vector<std::string> best_key;
  for (const auto& [g, count] : freq) {
    const double score = joint_exponent(p, g, cfg.w_div);
    auto gk = group_key(p, g);
    const bool better = best == nullptr || count > best_count ||
                        (count == best_count && score > best_score) ||
                        (count == best_count && score == best_score && gk < best_key);
    if (better) {
      best = &g;
      best_count = count;
      best_score = score;
      best_key = std::move(gk);
    }
  }
  out.distinct_groups = freq.size();
  out.members = *best;
  std::sort(out.members.begin(), out.members.end(),
            [&](std::size_t a, std::size_t b) { return p.unit_ids[a] < p.unit_ids[b]; });
  out.unit_ids = best_key;
  out.frequency = best_count;
  out.joint_score = best_score;
  return out;
}

MapGroup exact_map_group(const SamplingProblem& p, std::size_t k, double w_div) {
  const std::size_t n = p.size();
  if (k < 1 || k > n) throw ContractError("exact_map_group: need 1 <= k <= |C|");
  double combos = 1.0;
  for (std::size_t i = 0; i < k; ++i)
    combos = combos * static_cast<double>(n - i) / static_cast<double>(i + 1);
  if (combos > kMaxEnumeratedGroups)
    throw ContractError("exact_map_group: C(" + std::to_string(n) + ", " + std::to_string(k) +
                        ") exceeds the enumeration bound of 1e6 groups");

  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  MapGroup best;
  std::vector<std::string> best_key;
  bool first = true;
  while (true) {
    const double score = joint_exponent(p, idx, w_div);
    if (first || score > best.joint_exponent ||
        (score == best.joint_exponent && group_key(p, idx) < best_key)) {
      best.members = idx;
      best.joint_exponent = score;
      best_key = group_key(p, idx);
      first = false;
    }
    // Next k-combination in lexicographic order.
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return best;
}

}  // namespace rsum
