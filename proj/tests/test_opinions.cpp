#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "rsum/error.hpp"
#include "rsum/opinions.hpp"
#include "test_support.hpp"

using namespace rsum;
namespace ts = testsupport;

namespace {

FeatureVector fv(Eigen::Index n, std::map<Eigen::Index, double> entries) {
  FeatureVector f(n);
  for (auto [i, v] : entries) f.insert(i) = v;
  return f;
}

Opinion op(std::string id) {
  Opinion o;
  o.opinion_id = o.surface = std::move(id);
  return o;
}

SentenceUnit unit(std::string id, std::string text, AbsaAnnotation a) {
  SentenceUnit u;
  u.unit_id = std::move(id);
  u.text = std::move(text);
  u.absa = std::move(a);
  return u;
}

std::set<std::set<std::string>> id_partition(const std::vector<OpinionCluster>& cs) {
  std::set<std::set<std::string>> out;
  for (const auto& c : cs) {
    std::set<std::string> s;
    for (const auto& o : c.members) s.insert(o.opinion_id);
    out.insert(s);
  }
  return out;
}

}  // namespace

TEST_CASE("opinions come from annotated pairs, lowercased and deduplicated per entity") {
  std::vector<SummarySentence> s{
      {"h1", "The room is spacious.", {"rooms", Sentiment::positive, {{"Room", "Spacious"}}}},
      {"h1", "Spacious room.", {"rooms", Sentiment::positive, {{"room", "spacious"}, {"bed", "soft"}}}},
      {"h2", "The room is spacious.", {"rooms", Sentiment::positive, {{"room", "spacious"}}}},
  };
  const auto ops = extract_opinions(s);
  REQUIRE(ops.size() == 3);
  CHECK(ops[0].surface == "room is spacious");
  CHECK(ops[0].opinion_id == "room is spacious");
  CHECK(ops[0].noun == "room");
  CHECK(ops[0].source_sentence_id == "h1/summary/0");
  CHECK(ops[0].aspect_category == "rooms");
  CHECK(ops[1].surface == "bed is soft");
  CHECK(ops[1].source_sentence_id == "h1/summary/1");
  CHECK(ops[2].source_sentence_id == "h2/summary/0");
}

TEST_CASE("summary sentences load from the toy file") {
  const auto s = load_summary_sentences(ts::toy_summaries());
  CHECK(s.size() == 12);
  CHECK(s.front().entity_id == "hotel_seattle");
  CHECK_THROWS_AS(load_summary_sentences(ts::source_dir() / "missing.jsonl"), Error);
}

TEST_CASE("opinion similarity is cosine over feature vectors") {
  const auto f = fv(3, {{0, 1.0}, {1, 1.0}});
  const auto g = fv(3, {{0, 1.0}});
  CHECK(opinion_similarity(f, g) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(opinion_similarity(f, f) == doctest::Approx(1.0));
  CHECK(opinion_similarity(f, fv(3, {})) == 0.0);
  CHECK(opinion_similarity(fv(3, {{2, 0.5}}), g) == 0.0);
}

TEST_CASE("alignment table applies the gate and feature vectors keep aligned entries") {
  std::vector<SentenceUnit> units{
      unit("u0", "the room was spacious", {"rooms", Sentiment::positive, {}}),
      unit("u1", "the room was tiny", {"rooms", Sentiment::negative, {}}),
      unit("u2", "staff were kind", {"staff", Sentiment::positive, {}}),
  };
  Opinion o = op("room is spacious");
  o.aspect_category = "rooms";
  o.sentiment = Sentiment::positive;
  std::vector<Opinion> ops{o};
  LexicalScorer lex;
  for (const auto& u : units) lex.add(u.text, *u.absa);
  lex.add(o.surface, o.annotation());
  JudgmentCache cache;
  Aligner a(lex, &cache);
  const auto t = compute_alignment_table(units, ops, a);
  CHECK(t.aligns(0, 0));
  CHECK(t.p_align(0, 0) > 0.5);
  CHECK_FALSE(t.aligns(1, 0));
  CHECK(t.p_align(1, 0) == 0.0);
  CHECK_FALSE(t.aligns(2, 0));

  const auto f = feature_vector(t, 0);
  CHECK(f.nonZeros() == 1);
  CHECK(f.coeff(0) == t.p_align(0, 0));
  const auto g = build_feature_vector(o, units, a);
  CHECK(g.nonZeros() == 1);
  CHECK(g.coeff(0) == doctest::Approx(f.coeff(0)));
}

TEST_CASE("components use a strict threshold") {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(3, 3);
  s(0, 1) = s(1, 0) = 0.5;
  s(1, 2) = s(2, 1) = 0.6;
  auto c = threshold_components(s, 0.5);
  REQUIRE(c.size() == 2);
  CHECK(c[0] == std::vector<std::size_t>{0});
  CHECK(c[1] == std::vector<std::size_t>{1, 2});
  CHECK(threshold_components(s, 0.4).size() == 1);
}

TEST_CASE("clusters match brute-force closure on random graphs") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 2 + static_cast<int>(rng() % 20);
    const Eigen::Index n = 12;
    std::vector<Opinion> ops;
    std::vector<FeatureVector> vs;
    std::vector<std::map<std::size_t, double>> dense;
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int i = 0; i < m; ++i) {
      ops.push_back(op("o" + std::to_string(100 + i)));
      std::map<Eigen::Index, double> e;
      std::map<std::size_t, double> d;
      for (Eigen::Index k = 0; k < n; ++k)
        if (rng() % 4 == 0) e[k] = d[static_cast<std::size_t>(k)] = u(rng);
      vs.push_back(fv(n, e));
      dense.push_back(d);
    }
    std::vector<std::vector<double>> sim(m, std::vector<double>(m, 1.0));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        if (i != j) sim[i][j] = ts::map_cosine(dense[i], dense[j]);
    for (double beta : {0.0, 0.3, 0.6}) {
      const auto got = id_partition(cluster_opinions(ops, vs, beta));
      std::set<std::set<std::string>> want;
      for (const auto& block : ts::closure_partition(sim, beta)) {
        std::set<std::string> s;
        for (auto i : block) s.insert(ops[i].opinion_id);
        want.insert(s);
      }
      CHECK(got == want);
    }
  }
}

TEST_CASE("cluster ids and prototypes do not depend on input order") {
  std::vector<Opinion> ops{op("c"), op("a"), op("b")};
  std::vector<FeatureVector> vs{fv(4, {{0, 1.0}}), fv(4, {{0, 1.0}, {1, 1.0}}), fv(4, {{3, 1.0}})};
  const auto c1 = cluster_opinions(ops, vs, 0.5);
  std::vector<Opinion> rops{ops[2], ops[0], ops[1]};
  std::vector<FeatureVector> rvs{vs[2], vs[0], vs[1]};
  const auto c2 = cluster_opinions(rops, rvs, 0.5);
  REQUIRE(c1.size() == 2);
  REQUIRE(c2.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(c1[k].cluster_id == c2[k].cluster_id);
    CHECK(c1[k].prototype == c2[k].prototype);
  }
  CHECK(c1[0].cluster_id == "G000");
  CHECK(c1[0].prototype == "a");  // largest support
  CHECK(c1[1].prototype == "b");
  CHECK(c1[0].prototype_opinion().opinion_id == "a");
}

TEST_CASE("prototype ties fall to entry sum, then smaller id") {
  OpinionCluster c;
  c.members = {op("x"), op("y"), op("z")};
  std::map<std::string, FeatureVector> v{{"x", fv(3, {{0, 0.5}, {1, 0.5}})},
                                         {"y", fv(3, {{0, 0.6}, {2, 0.6}})},
                                         {"z", fv(3, {{1, 0.6}, {2, 0.6}})}};
  CHECK(select_prototype(c, v) == "y");
  v["x"] = fv(3, {{0, 0.6}, {1, 0.6}});
  CHECK(select_prototype(c, v) == "x");
}

TEST_CASE("bad clustering inputs are contract errors") {
  std::vector<Opinion> ops{op("a")};
  std::vector<FeatureVector> vs{fv(1, {})};
  CHECK_THROWS_AS(cluster_opinions(ops, vs, 1.5), ContractError);
  CHECK_THROWS_AS(cluster_opinions(ops, std::span<const FeatureVector>{}, 0.5), ContractError);
  OpinionCluster empty;
  CHECK_THROWS_AS(select_prototype(empty, {}), ContractError);
}
