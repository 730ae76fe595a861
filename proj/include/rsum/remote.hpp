#pragma once

// Client for the learned-model scorer service (POST /v1/score, GET /v1/health).

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "json.hpp"
#include "rsum/alignment.hpp"
#include "rsum/evaluation.hpp"
#include "rsum/properties.hpp"

namespace rsum {

inline constexpr const char* kScorerUrlEnv = "RSUM_SCORER_URL";

// Endpoint from the environment, if set and non-empty.
std::optional<std::string> scorer_url_from_env();

struct RemoteOptions {
  std::string base_url;  // e.g. http://127.0.0.1:8080
  std::size_t max_batch = 64;
  int connect_timeout_s = 5;
  int read_timeout_s = 60;
};

struct HealthStatus {
  int http_status = 0;
  nlohmann::json body;
  bool ok() const { return http_status == 200; }
};

class ScorerClient {
 public:
  explicit ScorerClient(RemoteOptions options);

  // Throws TransportError when the service cannot be reached.
  HealthStatus health() const;
  // Throws TransportError with a message naming the endpoint unless healthy.
  void require_healthy() const;
  // Model identifier the service reports for a task; "unknown" if absent.
  std::string model_id(const std::string& task) const;

  // Per-item results in request order. Splits into batches of max_batch.
  // Non-200 replies and malformed bodies raise ScoringError.
  std::vector<nlohmann::json> score(const std::string& task,
                                    const std::vector<nlohmann::json>& items) const;

  const RemoteOptions& options() const { return options_; }

 private:
  std::vector<nlohmann::json> score_chunk(const std::string& task,
                                          const nlohmann::json& items) const;
  RemoteOptions options_;
};

// Alignment and sentiment through the service. Sentiments are memoized.
class RemoteScorer final : public Scorer {
 public:
  explicit RemoteScorer(const ScorerClient& client);

  std::string id() const override { return id_; }
  AlignmentJudgment judge(std::string_view x, std::string_view y) const override;
  std::vector<AlignmentJudgment> judge_batch(std::span<const TextPair> pairs) const override;
  std::optional<Sentiment> sentiment(std::string_view text) const override;
  std::vector<std::optional<Sentiment>> sentiment_batch(
      std::span<const std::string> texts) const override;

 private:
  const ScorerClient& client_;
  std::string id_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::string, std::optional<Sentiment>> sentiments_;
};

class RemoteSpecificity final : public SpecificityScorer {
 public:
  explicit RemoteSpecificity(const ScorerClient& client);
  std::string id() const override { return id_; }
  double score(std::string_view text) const override;

 private:
  const ScorerClient& client_;
  std::string id_;
};

class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(const ScorerClient& client);
  std::string id() const override { return id_; }
  Eigen::VectorXd embed(std::string_view text) const override;
  std::vector<Eigen::VectorXd> embed_batch(std::span<const std::string> texts) const override;

 private:
  const ScorerClient& client_;
  std::string id_;
};

}  // namespace rsum
