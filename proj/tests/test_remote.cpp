#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <atomic>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "doctest.h"
#include "json.hpp"
#include "rsum/error.hpp"
#include "rsum/pipeline.hpp"
#include "rsum/remote.hpp"
#include "test_support.hpp"
// After Eigen: resolv.h defines a _res macro.
#include "httplib.h"

using namespace rsum;
using nlohmann::json;
namespace ts = testsupport;

namespace {

std::set<std::string> words_of(const std::string& s) {
  std::set<std::string> out;
  std::string cur;
  for (char c : s + " ") {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      if (cur.size() > 3) out.insert(cur);
      cur.clear();
    }
  }
  return out;
}

// Stand-in for the scorer service. `fail_status` forces every /v1/score reply.
class StubService {
 public:
  StubService() {
    server_.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
      if (!ready) {
        res.status = 503;
        res.set_content(R"({"status":"loading"})", "application/json");
        return;
      }
      res.set_content(R"({"status":"ok","models":{"align":"stub-align-1","embed":"stub-embed",)"
                      R"("specificity":"stub-spec"}})",
                      "application/json");
    });
    server_.Post("/v1/score", [this](const httplib::Request& req, httplib::Response& res) {
      if (fail_status) {
        res.status = fail_status;
        res.set_content(R"({"error":"forced"})", "application/json");
        return;
      }
      const auto body = json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.contains("task") || !body.contains("items")) {
        res.status = 400;
        res.set_content(R"({"error":"bad request"})", "application/json");
        return;
      }
      const auto task = body["task"].get<std::string>();
      const auto& items = body["items"];
      {
        std::lock_guard lock(mu_);
        batch_sizes.push_back(items.size());
      }
      if (items.size() > 256) {
        res.status = 413;
        return;
      }
      json results = json::array();
      for (const auto& it : items) {
        if (task == "align") {
          const auto x = it.at("x").get<std::string>();
          const auto y = it.at("y").get<std::string>();
          const auto wx = words_of(x), wy = words_of(y);
          bool share = false;
          for (auto& w : wx) share = share || wy.count(w);
          if (bad_simplex) {
            results.push_back({{"p", {0.9, 0.9, 0.9}}});
          } else if (share) {
            results.push_back({{"p", {0.7, 0.1, 0.2}}});
          } else {
            results.push_back({{"p", {0.1, 0.1, 0.8}}});
          }
        } else if (task == "sentiment") {
          const auto t = it.at("text").get<std::string>();
          const char* label = t.starts_with("+") ? "positive" : t.starts_with("-") ? "negative"
                                                                                   : "neutral";
          results.push_back({{"label", label}, {"probs", {0.0, 0.0, 1.0}}});
        } else if (task == "specificity") {
          results.push_back({{"score", std::min(1.0, it.at("text").get<std::string>().size() / 100.0)}});
        } else if (task == "embed") {
          const auto t = it.at("text").get<std::string>();
          results.push_back({{"vector", {1.0, static_cast<double>(t.size() % 7), 0.5}}});
        } else {
          res.status = 400;
          res.set_content(R"({"error":"unknown task"})", "application/json");
          return;
        }
      }
      if (short_reply && !results.empty()) results.erase(results.end() - 1);
      json out = {{"model", "stub-" + task}, {"results", results}};
      if (drop_model) out.erase("model");
      res.set_content(out.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubService() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::atomic<bool> ready{true};
  std::atomic<int> fail_status{0};
  std::atomic<bool> bad_simplex{false};
  std::atomic<bool> short_reply{false};
  std::atomic<bool> drop_model{false};
  std::vector<std::size_t> batch_sizes;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::mutex mu_;
};

// A port with nothing listening.
std::string dead_url() {
  httplib::Server s;
  const int port = s.bind_to_any_port("127.0.0.1");
  return "http://127.0.0.1:" + std::to_string(port);  // closed when s goes out of scope
}

}  // namespace

TEST_CASE("health reports status and models") {
  StubService svc;
  ScorerClient c({svc.url()});
  const auto h = c.health();
  CHECK(h.ok());
  CHECK(h.body["status"] == "ok");
  CHECK(c.model_id("align") == "stub-align-1");
  CHECK(c.model_id("nli") == "unknown");
  CHECK_NOTHROW(c.require_healthy());

  svc.ready = false;
  CHECK(c.health().http_status == 503);
  CHECK_THROWS_AS(c.require_healthy(), TransportError);
}

TEST_CASE("unreachable service is a transport error") {
  ScorerClient c({dead_url(), 64, 1, 1});
  CHECK_THROWS_AS(c.health(), TransportError);
  CHECK_THROWS_AS(c.score("align", {json{{"x", "a"}, {"y", "b"}}}), TransportError);
}

TEST_CASE("client options are validated") {
  CHECK_THROWS_AS(ScorerClient({""}), ValidationError);
  CHECK_THROWS_AS(ScorerClient({"http://127.0.0.1:1", 0}), ValidationError);
}

TEST_CASE("score keeps request order across batches") {
  StubService svc;
  ScorerClient c({svc.url(), 4});
  std::vector<json> items;
  for (int i = 0; i < 10; ++i) items.push_back({{"text", std::string(i * 10, 'x')}});
  const auto r = c.score("specificity", items);
  REQUIRE(r.size() == 10);
  for (int i = 0; i < 10; ++i) CHECK(r[i]["score"].get<double>() == doctest::Approx(i / 10.0));
  CHECK(svc.batch_sizes == std::vector<std::size_t>{4, 4, 2});
}

TEST_CASE("error codes and malformed replies raise ScoringError") {
  StubService svc;
  ScorerClient c({svc.url()});
  const std::vector<json> items{{{"text", "a"}}};
  for (int code : {400, 413, 503}) {
    svc.fail_status = code;
    try {
      c.score("sentiment", items);
      FAIL("expected ScoringError");
    } catch (const ScoringError& e) {
      CHECK(std::string(e.what()).find(std::to_string(code)) != std::string::npos);
    }
  }
  svc.fail_status = 0;
  CHECK_THROWS_AS(c.score("nli", items), ScoringError);
  svc.short_reply = true;
  CHECK_THROWS_AS(c.score("sentiment", items), ScoringError);
  svc.short_reply = false;
  svc.drop_model = true;
  CHECK_THROWS_AS(c.score("sentiment", items), ScoringError);
}

TEST_CASE("remote scorer returns simplex judgments and sentiments") {
  StubService svc;
  ScorerClient c({svc.url()});
  RemoteScorer s(c);
  CHECK(s.id() == "remote:stub-align-1");
  const auto j = s.judge("the room was clean", "room is clean");
  CHECK(j.is_valid());
  CHECK(j.argmax() == AlignLabel::alignment);
  std::vector<TextPair> pairs{{"pool", "desk"}, {"clean room", "room clean"}};
  const auto js = s.judge_batch(pairs);
  CHECK(js[0].argmax() == AlignLabel::neutral);
  CHECK(js[1].argmax() == AlignLabel::alignment);

  CHECK(s.sentiment("+great") == Sentiment::positive);
  CHECK(s.sentiment("-bad") == Sentiment::negative);
  const auto before = svc.batch_sizes.size();
  CHECK(s.sentiment("+great") == Sentiment::positive);  // memoized
  CHECK(svc.batch_sizes.size() == before);

  Aligner a(s);
  CHECK(a.p_align("+clean room", "-clean room") == 0.0);

  svc.bad_simplex = true;
  CHECK_THROWS_AS(s.judge("a", "b"), ScoringError);
}

TEST_CASE("remote specificity and embedder") {
  StubService svc;
  ScorerClient c({svc.url()});
  RemoteSpecificity spec(c);
  CHECK(spec.id() == "remote:stub-spec");
  CHECK(spec.score(std::string(50, 'a')) == doctest::Approx(0.5));
  RemoteEmbedder emb(c);
  const auto v = emb.embed("abc");
  CHECK(v.size() == 3);
  CHECK(v(1) == 3.0);
}

TEST_CASE("endpoint falls back to the environment variable") {
  ::setenv(kScorerUrlEnv, "http://example.invalid:9", 1);
  CHECK(scorer_url_from_env() == "http://example.invalid:9");
  PipelineConfig cfg;
  cfg.scorer = "remote";
  CHECK(cfg.resolved_remote_url() == "http://example.invalid:9");
  cfg.remote_url = "http://other:1";
  CHECK(cfg.resolved_remote_url() == "http://other:1");
  ::unsetenv(kScorerUrlEnv);
  CHECK_FALSE(scorer_url_from_env());
  cfg.remote_url.clear();
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("pipeline runs end to end against the service") {
  StubService svc;
  ts::TempDir out("remote");
  PipelineConfig cfg;
  cfg.corpus = ts::toy_corpus();
  cfg.summaries = ts::toy_summaries();
  cfg.output_dir = out.path();
  cfg.scorer = "remote";
  cfg.embedder = "remote";
  cfg.remote_url = svc.url();
  cfg.gibbs.eta = 5;
  cfg.gibbs.theta = 10;
  cfg.min_set_size = 2;
  Pipeline p(cfg);
  const auto outcomes = p.run();
  CHECK(outcomes.size() == std::size(kRunStages));
  const auto report = json::parse(ts::read_file(out.path() / "report.json"));
  CHECK(report["embedder"] == "remote:stub-embed");
  CHECK(std::filesystem::exists(out.path() / "cache" / "judgments.jsonl"));
  const auto align = json::parse(ts::read_file(out.path() / "align" / "hotel_seattle.json"));
  CHECK(align["scorer"] == "remote:stub-align-1");

  svc.ready = false;
  ts::TempDir out2("remote-down");
  cfg.output_dir = out2.path();
  Pipeline down(cfg);
  down.run_stage(Stage::ingest);
  CHECK_THROWS_AS(down.run_stage(Stage::align_cache), TransportError);
}
