#include "rsum/serialization.hpp"

#include "rsum/error.hpp"

namespace rsum {

using nlohmann::json;

void to_json(json& j, const AbsaAnnotation& a) {
  json pairs = json::array();
  for (const auto& [n, adj] : a.pairs) pairs.push_back({n, adj});
  j = json{{"aspect", a.aspect_category}, {"sentiment", to_string(a.sentiment)}, {"pairs", pairs}};
}

void from_json(const json& j, AbsaAnnotation& a) {
  a.aspect_category = j.at("aspect").get<std::string>();
  const auto s = j.at("sentiment").get<std::string>();
  auto parsed = parse_sentiment(s);
  if (!parsed) throw ValidationError("unknown sentiment \"" + s + "\"");
  a.sentiment = *parsed;
  a.pairs.clear();
  if (auto it = j.find("pairs"); it != j.end()) {
    for (const auto& p : *it) {
      if (!p.is_array() || p.size() != 2) throw ValidationError("pair must be [noun, adjective]");
      a.pairs.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
    }
  }
}

void to_json(json& j, const SentenceUnit& u) {
  j = json{{"unit_id", u.unit_id},
           {"entity_id", u.entity_id},
           {"review_id", u.review_id},
           {"source_sentence_id", u.source_sentence_id},
           {"kind", to_string(u.kind)},
           {"text", u.text},
           {"tokens", u.tokens},
           {"char_span", {u.char_span.first, u.char_span.second}},
           {"absa", u.absa ? json(*u.absa) : json(nullptr)}};
}

void from_json(const json& j, SentenceUnit& u) {
  u.unit_id = j.at("unit_id").get<std::string>();
  u.entity_id = j.at("entity_id").get<std::string>();
  u.review_id = j.at("review_id").get<std::string>();
  u.source_sentence_id = j.at("source_sentence_id").get<std::string>();
  u.kind = j.at("kind").get<std::string>() == "clause" ? UnitKind::clause
                                                       : UnitKind::whole_sentence;
  u.text = j.at("text").get<std::string>();
  u.tokens = j.at("tokens").get<std::vector<std::string>>();
  const auto& span = j.at("char_span");
  u.char_span = {span.at(0).get<std::size_t>(), span.at(1).get<std::size_t>()};
  if (auto it = j.find("absa"); it != j.end() && !it->is_null())
    u.absa = it->get<AbsaAnnotation>();
  else
    u.absa.reset();
}

void to_json(json& j, const Opinion& o) {
  j = json{{"opinion_id", o.opinion_id},
           {"noun", o.noun},
           {"adjective", o.adjective},
           {"surface", o.surface},
           {"source_sentence_id", o.source_sentence_id},
           {"aspect", o.aspect_category},
           {"sentiment", to_string(o.sentiment)}};
}

void from_json(const json& j, Opinion& o) {
  o.opinion_id = j.at("opinion_id").get<std::string>();
  o.noun = j.at("noun").get<std::string>();
  o.adjective = j.at("adjective").get<std::string>();
  o.surface = j.at("surface").get<std::string>();
  o.source_sentence_id = j.at("source_sentence_id").get<std::string>();
  o.aspect_category = j.at("aspect").get<std::string>();
  const auto s = j.at("sentiment").get<std::string>();
  auto parsed = parse_sentiment(s);
  if (!parsed) throw ValidationError("unknown sentiment \"" + s + "\"");
  o.sentiment = *parsed;
}

}  // namespace rsum
