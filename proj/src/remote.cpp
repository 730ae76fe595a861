#include "rsum/remote.hpp"

#include <cstdlib>

#include "httplib.h"
#include "rsum/error.hpp"

namespace rsum {

using nlohmann::json;

std::optional<std::string> scorer_url_from_env() {
  const char* v = std::getenv(kScorerUrlEnv);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

namespace {

httplib::Client make_client(const RemoteOptions& o) {
  httplib::Client c(o.base_url);
  c.set_connection_timeout(o.connect_timeout_s, 0);
  c.set_read_timeout(o.read_timeout_s, 0);
  return c;
}

std::string unreachable(const RemoteOptions& o, httplib::Error e) {
  return "scorer service at " + o.base_url + " is unreachable (" + httplib::to_string(e) +
         "); start it or set " + kScorerUrlEnv + " to a reachable endpoint";
}

}  // namespace

ScorerClient::ScorerClient(RemoteOptions options) : options_(std::move(options)) {
  if (options_.base_url.empty()) throw ValidationError("remote scorer: empty endpoint URL");
  if (options_.max_batch == 0) throw ValidationError("remote scorer: max_batch must be positive");
}

HealthStatus ScorerClient::health() const {
  auto c = make_client(options_);
  auto res = c.Get("/v1/health");
  if (!res) throw TransportError(unreachable(options_, res.error()));
  HealthStatus h{res->status, json::parse(res->body, nullptr, false)};
  if (h.body.is_discarded()) h.body = json(res->body);
  return h;
}

void ScorerClient::require_healthy() const {
  const auto h = health();
  if (!h.ok())
    throw TransportError("scorer service at " + options_.base_url + " is not ready (HTTP " +
                         std::to_string(h.http_status) + "): " + h.body.dump());
}

std::string ScorerClient::model_id(const std::string& task) const {
  const auto h = health();
  if (h.body.is_object()) {
    if (auto m = h.body.find("models"); m != h.body.end() && m->is_object())
      if (auto t = m->find(task); t != m->end() && t->is_string()) return t->get<std::string>();
  }
  return "unknown";
}

std::vector<json> ScorerClient::score_chunk(const std::string& task, const json& items) const {
  auto c = make_client(options_);
  const json req = {{"task", task}, {"items", items}};
  auto res = c.Post("/v1/score", req.dump(), "application/json");
  if (!res) throw TransportError(unreachable(options_, res.error()));
  if (res->status != 200)
    throw ScoringError("scorer service rejected " + task + " batch (HTTP " +
                       std::to_string(res->status) + "): " + res->body);
  const auto body = json::parse(res->body, nullptr, false);
  if (body.is_discarded() || !body.is_object() || !body.contains("results") ||
      !body["results"].is_array())
    throw ScoringError("scorer service returned a malformed " + task + " response");
  if (!body.contains("model"))
    throw ScoringError("scorer service response lacks a model identifier");
  const auto& results = body["results"];
  if (results.size() != items.size())
    throw ScoringError("scorer service returned " + std::to_string(results.size()) +
                       " results for " + std::to_string(items.size()) + " items");
  return {results.begin(), results.end()};
}

std::vector<json> ScorerClient::score(const std::string& task,
                                      const std::vector<json>& items) const {
  std::vector<json> out;
  out.reserve(items.size());
  for (std::size_t b = 0; b < items.size(); b += options_.max_batch) {
    const auto e = std::min(items.size(), b + options_.max_batch);
    json chunk = json::array();
    for (std::size_t i = b; i < e; ++i) chunk.push_back(items[i]);
    for (auto& r : score_chunk(task, chunk)) out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

AlignmentJudgment parse_judgment(const json& r) {
  try {
    const auto& p = r.at("p");
    if (!p.is_array() || p.size() != 3) throw ScoringError("align result must carry p[3]");
    AlignmentJudgment j{p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
    if (!j.is_valid()) throw ScoringError("align result is not a probability simplex");
    return j;
  } catch (const json::exception& e) {
    throw ScoringError(std::string("malformed align result: ") + e.what());
  }
}

std::optional<Sentiment> parse_sentiment_result(const json& r) {
  try {
    const auto label = r.at("label").get<std::string>();
    auto s = parse_sentiment(label);
    if (!s) throw ScoringError("unknown sentiment label \"" + label + "\"");
    return s;
  } catch (const json::exception& e) {
    throw ScoringError(std::string("malformed sentiment result: ") + e.what());
  }
}

}  // namespace

RemoteScorer::RemoteScorer(const ScorerClient& client)
    : client_(client), id_("remote:" + client.model_id("align")) {}

AlignmentJudgment RemoteScorer::judge(std::string_view x, std::string_view y) const {
  const TextPair p{std::string(x), std::string(y)};
  return judge_batch(std::span<const TextPair>(&p, 1)).front();
}

std::vector<AlignmentJudgment> RemoteScorer::judge_batch(std::span<const TextPair> pairs) const {
  std::vector<json> items;
  items.reserve(pairs.size());
  for (const auto& [x, y] : pairs) items.push_back({{"x", x}, {"y", y}});
  std::vector<AlignmentJudgment> out;
  out.reserve(pairs.size());
  for (const auto& r : client_.score("align", items)) out.push_back(parse_judgment(r));
  return out;
}

std::optional<Sentiment> RemoteScorer::sentiment(std::string_view text) const {
  const std::string t(text);
  return sentiment_batch(std::span<const std::string>(&t, 1)).front();
}

std::vector<std::optional<Sentiment>> RemoteScorer::sentiment_batch(
    std::span<const std::string> texts) const {
  std::vector<std::string> missing;
  {
    std::lock_guard lock(mu_);
    for (const auto& t : texts)
      if (!sentiments_.contains(t)) missing.push_back(t);
  }
  if (!missing.empty()) {
    std::vector<json> items;
    for (const auto& t : missing) items.push_back({{"text", t}});
    const auto results = client_.score("sentiment", items);
    std::lock_guard lock(mu_);
    for (std::size_t i = 0; i < missing.size(); ++i)
      sentiments_.emplace(missing[i], parse_sentiment_result(results[i]));
  }
  std::lock_guard lock(mu_);
  std::vector<std::optional<Sentiment>> out;
  for (const auto& t : texts) out.push_back(sentiments_.at(t));
  return out;
}

RemoteSpecificity::RemoteSpecificity(const ScorerClient& client)
    : client_(client), id_("remote:" + client.model_id("specificity")) {}

double RemoteSpecificity::score(std::string_view text) const {
  const auto r = client_.score("specificity", {json{{"text", std::string(text)}}}).front();
  if (!r.contains("score") || !r["score"].is_number())
    throw ScoringError("malformed specificity result");
  const double s = r["score"].get<double>();
  if (s < 0.0 || s > 1.0) throw ScoringError("specificity score outside [0, 1]");
  return s;
}

RemoteEmbedder::RemoteEmbedder(const ScorerClient& client)
    : client_(client), id_("remote:" + client.model_id("embed")) {}

Eigen::VectorXd RemoteEmbedder::embed(std::string_view text) const {
  const std::string t(text);
  return embed_batch(std::span<const std::string>(&t, 1)).front();
}

std::vector<Eigen::VectorXd> RemoteEmbedder::embed_batch(std::span<const std::string> texts) const {
  std::vector<json> items;
  for (const auto& t : texts) items.push_back({{"text", t}});
  std::vector<Eigen::VectorXd> out;
  Eigen::Index dim = -1;
  for (const auto& r : client_.score("embed", items)) {
    if (!r.contains("vector") || !r["vector"].is_array())
      throw ScoringError("malformed embed result");
    const auto v = r["vector"].get<std::vector<double>>();
    if (dim >= 0 && static_cast<Eigen::Index>(v.size()) != dim)
      throw ScoringError("embed results differ in dimension");
    dim = static_cast<Eigen::Index>(v.size());
    out.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), dim));
  }
  return out;
}

}  // namespace rsum
