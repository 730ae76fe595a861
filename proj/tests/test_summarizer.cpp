#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "rsum/summarizer.hpp"

using namespace rsum;

namespace {

// Item whose opinion has 3 words and whose single rationale fills the rest.
SummaryItem item_of(std::string cluster, std::size_t words) {
  SummaryItem it;
  it.cluster_id = std::move(cluster);
  it.opinion.opinion_id = it.opinion.surface = "room is clean";
  it.opinion.noun = "room";
  it.opinion.adjective = "clean";
  SentenceUnit u;
  u.unit_id = it.cluster_id + "/u";
  for (std::size_t i = 0; i + 3 < words; ++i) u.text += (i ? " w" : "w") + std::to_string(i);
  u.tokens = {"w0"};
  it.rationales.push_back(u);
  it.candidate_set_size = 5;
  return it;
}

CandidateSet set_of(std::string id, std::size_t n) {
  CandidateSet c;
  c.cluster_id = std::move(id);
  c.member_unit_ids.assign(n, "u");
  return c;
}

}  // namespace

TEST_CASE("word count covers the opinion and every rationale") {
  CHECK(item_word_count(item_of("G0", 40)) == 40);
}

TEST_CASE("assembly stops at the first item that does not fit") {
  std::vector<SummaryItem> ranked{item_of("G0", 40), item_of("G1", 45), item_of("G2", 30)};
  const auto s = assemble_summary("h", ranked, 100);
  REQUIRE(s.items.size() == 2);
  CHECK(s.word_count == 85);
  CHECK(s.items[1].cluster_id == "G1");

  // A later item that would fit is not pulled forward.
  std::vector<SummaryItem> r2{item_of("G0", 90), item_of("G1", 20), item_of("G2", 5)};
  CHECK(assemble_summary("h", r2, 100).items.size() == 1);

  CHECK(assemble_summary("h", ranked, std::nullopt).word_count == 115);
  CHECK(assemble_summary("h", ranked, 10).items.empty());
}

TEST_CASE("opinions rank by candidate set size, then cluster id") {
  std::vector<CandidateSet> sets{set_of("G002", 6), set_of("G000", 9), set_of("G001", 6)};
  CHECK(rank_opinions(sets) == std::vector<std::size_t>{1, 2, 0});
}

TEST_CASE("text rendering") {
  auto a = item_of("G0", 6);
  a.rationales.push_back(a.rationales[0]);
  a.rationales[1].text = "second one";
  const auto s = assemble_summary("h", std::vector<SummaryItem>{a}, std::nullopt);
  CHECK(render_summary(s, SummaryFormat::text) == "room is clean: w0 w1 w2 | second one\n");
}

TEST_CASE("json rendering round-trips") {
  std::vector<SummaryItem> ranked{item_of("G0", 10), item_of("G1", 12)};
  ranked[0].rationales[0].absa = AbsaAnnotation{"rooms", Sentiment::positive, {{"room", "clean"}}};
  const auto s = assemble_summary("hotel", ranked, 100);
  const auto back = parse_summary_json(render_summary(s, SummaryFormat::json));
  CHECK(back == s);
}

TEST_CASE("format names") {
  CHECK(parse_summary_format("text") == SummaryFormat::text);
  CHECK(parse_summary_format("json") == SummaryFormat::json);
  CHECK_FALSE(parse_summary_format("xml"));
  CHECK(extension(SummaryFormat::text) == "txt");
}
