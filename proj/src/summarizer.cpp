#include "rsum/summarizer.hpp"

#include <algorithm>
#include <numeric>

#include "json.hpp"
#include "rsum/serialization.hpp"
#include "rsum/text.hpp"

namespace rsum {

using nlohmann::json;

std::vector<std::size_t> rank_opinions(std::span<const CandidateSet> sets) {
  std::vector<std::size_t> order(sets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (sets[a].size() != sets[b].size()) return sets[a].size() > sets[b].size();
    return sets[a].cluster_id < sets[b].cluster_id;
  });
  return order;
}

std::size_t item_word_count(const SummaryItem& item) {
  std::size_t n = text::word_count(item.opinion.surface);
  for (const auto& r : item.rationales) n += text::word_count(r.text);
  return n;
}

Summary assemble_summary(std::string entity_id, std::span<const SummaryItem> ranked,
                         std::optional<std::size_t> word_limit) {
  Summary s{std::move(entity_id), {}, 0};
  for (const auto& item : ranked) {
    const auto words = item_word_count(item);
    if (word_limit && s.word_count + words > *word_limit) break;
    s.items.push_back(item);
    s.word_count += words;
  }
  return s;
}

std::optional<SummaryFormat> parse_summary_format(std::string_view s) {
  if (s == "text" || s == "txt") return SummaryFormat::text;
  if (s == "json") return SummaryFormat::json;
  return std::nullopt;
}

std::string_view extension(SummaryFormat f) { return f == SummaryFormat::json ? "json" : "txt"; }

std::string render_summary(const Summary& summary, SummaryFormat format) {
  if (format == SummaryFormat::text) {
    std::string out;
    for (const auto& item : summary.items) {
      out += item.opinion.surface;
      out += ':';
      for (std::size_t i = 0; i < item.rationales.size(); ++i) {
        out += i == 0 ? " " : " | ";
        out += item.rationales[i].text;
      }
      out += '\n';
    }
    return out;
  }
  json items = json::array();
  for (const auto& item : summary.items) {
    items.push_back({{"cluster_id", item.cluster_id},
                     {"candidate_set_size", item.candidate_set_size},
                     {"opinion", item.opinion},
                     {"rationales", item.rationales}});
  }
  json j = {{"entity_id", summary.entity_id},
            {"word_count", summary.word_count},
            {"items", std::move(items)}};
  return j.dump(2) + "\n";
}

Summary parse_summary_json(std::string_view s) {
  const auto j = json::parse(s);
  Summary out;
  out.entity_id = j.at("entity_id").get<std::string>();
  out.word_count = j.at("word_count").get<std::size_t>();
  for (const auto& it : j.at("items")) {
    SummaryItem item;
    item.cluster_id = it.at("cluster_id").get<std::string>();
    item.candidate_set_size = it.at("candidate_set_size").get<std::size_t>();
    item.opinion = it.at("opinion").get<Opinion>();
    item.rationales = it.at("rationales").get<std::vector<SentenceUnit>>();
    out.items.push_back(std::move(item));
  }
  return out;
}

}  // namespace rsum
