#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rsum {

// ---------------------------------------------------------------------------
// Embedders

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string id() const = 0;
  virtual Eigen::VectorXd embed(std::string_view text) const = 0;
  virtual std::vector<Eigen::VectorXd> embed_batch(std::span<const std::string> texts) const;
};

// Signed feature hashing of unigrams and bigrams, L2-normalized.
class HashEmbedder final : public Embedder {
 public:
  explicit HashEmbedder(Eigen::Index dim = 512) : dim_(dim) {}
  std::string id() const override { return "hash-" + std::to_string(dim_); }
  Eigen::VectorXd embed(std::string_view text) const override;

 private:
  Eigen::Index dim_;
};

// 0 when either vector is zero.
double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// ---------------------------------------------------------------------------
// Keyword preprocessing

struct ExtremeFilter {
  std::size_t no_below = 2;  // minimum document frequency
  double no_above = 0.5;     // maximum document fraction
};

// Lowercase word tokens without stopwords, lemmatized. No corpus filtering.
std::vector<std::string> normalize_tokens(std::string_view text);

// Per document: lowercase, strip punctuation, drop stopwords, drop extreme
// tokens by document frequency over `texts`, then lemmatize.
std::vector<std::vector<std::string>> preprocess_tokens(std::span<const std::string> texts,
                                                        const ExtremeFilter& filter = {});

// TF-IDF with TF = count / length and IDF = ln((1 + N) / (1 + df)) + 1.
struct TfidfTable {
  std::vector<std::map<std::string, double>> scores;  // one map per document

  static TfidfTable build(std::span<const std::vector<std::string>> documents);
  // Tokens of document d by descending score, ties by token.
  std::vector<std::pair<std::string, double>> ranked(std::size_t d) const;
};

struct KeywordSet {
  std::string cluster_id;
  std::vector<std::pair<std::string, double>> keywords;  // descending score
  double all_keyword_mass = 0.0;
};

// Top `count` tokens of each document, skipping that document's excluded
// tokens. Fewer than two documents yield empty keyword sets.
std::vector<KeywordSet> extract_keywords(std::span<const std::string> cluster_ids,
                                         const TfidfTable& table,
                                         std::span<const std::vector<std::string>> excluded,
                                         std::size_t count = 5);

// ---------------------------------------------------------------------------
// Rationale metrics

double metric_emb_rel(std::string_view opinion, std::span<const std::string> rationales,
                      const Embedder& embedder);

// Keyword mass covered by the rationales over all keyword mass.
std::optional<double> metric_key_spec(std::span<const std::string> rationales,
                                      const KeywordSet& keywords);

// Keyword mass covered over the TF-IDF mass of every distinct rationale token.
std::optional<double> metric_key_pop(std::span<const std::string> rationales,
                                     const KeywordSet& keywords,
                                     const std::map<std::string, double>& tfidf);

// 1 - mean pairwise cosine; absent for fewer than two rationales.
std::optional<double> metric_emb_div(std::span<const std::string> rationales,
                                     const Embedder& embedder);

// ---------------------------------------------------------------------------
// Candidate-set metrics

// Silhouette over precomputed distances; labels give each point's set.
// Points alone in their set score 0, as do points with a = b = 0.
std::optional<double> silhouette_from_distances(const Eigen::MatrixXd& distances,
                                                std::span<const int> labels);

// Silhouette with d = 1 - cosine over embedding rows.
std::optional<double> metric_silhouette(const Eigen::MatrixXd& embeddings,
                                        std::span<const int> labels);

inline constexpr double kNpmiEpsilon = 1e-12;

// NPMI of a token pair from unit-level occurrence probabilities.
double npmi(double p_joint, double p_a, double p_b, double eps = kNpmiEpsilon);

// Mean over sets of the mean pairwise NPMI among each set's top tokens, with
// probabilities estimated over `units` (each a token list).
std::optional<double> metric_npmi(const TfidfTable& table,
                                  std::span<const std::vector<std::string>> units,
                                  std::size_t top = 10);

// ---------------------------------------------------------------------------
// Aggregation

using MetricTable = std::map<std::string, std::map<std::string, double>>;

struct OverallResult {
  std::map<std::string, double> scores;
  std::optional<std::string> note;  // set when Overall is undefined
};

// Per metric min-max across systems (all ones when degenerate), then each
// system's mean of its normalized metrics.
OverallResult overall_score(const MetricTable& table);

}  // namespace rsum
