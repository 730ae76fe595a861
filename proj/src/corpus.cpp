#include "rsum/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "rsum/error.hpp"
#include "rsum/serialization.hpp"
#include "rsum/text.hpp"

namespace rsum {

using nlohmann::json;

std::size_t ReviewCorpus::review_count() const {
  std::size_t n = 0;
  for (const auto& e : entities) n += e.reviews.size();
  return n;
}

std::size_t ReviewCorpus::sentence_count() const {
  std::size_t n = 0;
  for (const auto& e : entities)
    for (const auto& r : e.reviews) n += r.sentences.size();
  return n;
}

std::string_view to_string(UnitKind k) {
  return k == UnitKind::clause ? "clause" : "whole_sentence";
}

// ---------------------------------------------------------------------------
// Loading

namespace {

const json& require(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing field \"") + key + "\"", line);
  return *it;
}

std::string require_string(const json& obj, const char* key, std::size_t line) {
  const auto& v = require(obj, key, line);
  if (!v.is_string()) throw ParseError(std::string("field \"") + key + "\" must be a string", line);
  return v.get<std::string>();
}

}  // namespace

ReviewCorpus parse_corpus(std::istream& in) {
  ReviewCorpus corpus;
  std::unordered_set<std::string> closed_entities;
  std::unordered_set<std::string> review_ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
    }
    if (!rec.is_object()) throw ParseError("record must be an object", lineno);

    Review review;
    const auto entity_id = require_string(rec, "entity_id", lineno);
    review.review_id = require_string(rec, "review_id", lineno);
    const auto& sentences = require(rec, "sentences", lineno);
    if (!sentences.is_array()) throw ParseError("\"sentences\" must be an array", lineno);
    for (const auto& s : sentences) {
      if (!s.is_object()) throw ParseError("sentence must be an object", lineno);
      RawSentence raw;
      raw.text = require_string(s, "text", lineno);
      if (text::trim(raw.text).empty()) throw ParseError("empty sentence text", lineno);
      if (auto p = s.find("parse"); p != s.end() && !p->is_null()) {
        if (!p->is_string()) throw ParseError("\"parse\" must be a string or null", lineno);
        raw.parse = p->get<std::string>();
      }
      if (auto a = s.find("absa"); a != s.end() && !a->is_null()) {
        try {
          raw.absa = a->get<AbsaAnnotation>();
        } catch (const std::exception& e) {
          throw ParseError(std::string("bad \"absa\": ") + e.what(), lineno);
        }
      }
      review.sentences.push_back(std::move(raw));
    }

    if (corpus.entities.empty() || corpus.entities.back().entity_id != entity_id) {
      if (closed_entities.contains(entity_id))
        throw ValidationError("line " + std::to_string(lineno) + ": duplicate entity_id \"" +
                              entity_id + "\" (records of an entity must be contiguous)");
      if (!corpus.entities.empty()) closed_entities.insert(corpus.entities.back().entity_id);
      corpus.entities.push_back(Entity{entity_id, {}});
      review_ids.clear();
    }
    if (!review_ids.insert(review.review_id).second)
      throw ValidationError("line " + std::to_string(lineno) + ": duplicate review_id \"" +
                            review.review_id + "\" in entity \"" + entity_id + "\"");
    corpus.entities.back().reviews.push_back(std::move(review));
  }
  return corpus;
}

ReviewCorpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file " + path.string());
  return parse_corpus(in);
}

ReviewCorpus filter_entities(const ReviewCorpus& corpus, std::size_t min_reviews,
                             std::size_t max_reviews, std::uint64_t seed) {
  if (min_reviews < 1) throw ContractError("min_reviews must be >= 1");
  if (max_reviews < min_reviews) throw ContractError("max_reviews must be >= min_reviews");
  ReviewCorpus out;
  for (const auto& entity : corpus.entities) {
    if (entity.reviews.size() < min_reviews) continue;
    if (entity.reviews.size() <= max_reviews) {
      out.entities.push_back(entity);
      continue;
    }
    std::mt19937_64 rng(seed ^ text::stable_hash64(entity.entity_id));
    Entity kept{entity.entity_id, {}};
    kept.reviews.reserve(max_reviews);
    std::sample(entity.reviews.begin(), entity.reviews.end(), std::back_inserter(kept.reviews),
                max_reviews, rng);
    out.entities.push_back(std::move(kept));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trees

namespace {

class TreeReader {
 public:
  explicit TreeReader(std::string_view s) : s_(s) {}

  ParseNode read_root() {
    skip_space();
    if (pos_ >= s_.size()) throw StructuralError("empty parse tree");
    ParseNode root = read_node();
    skip_space();
    if (pos_ != s_.size()) throw StructuralError("trailing characters after parse tree");
    if (root.token_count == 0) throw StructuralError("parse tree has no tokens");
    return root;
  }

 private:
  void skip_space() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  std::string read_atom() {
    const auto start = pos_;
    while (pos_ < s_.size() && s_[pos_] != '(' && s_[pos_] != ')' &&
           !std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  ParseNode read_node() {
    if (s_[pos_] != '(')
      throw StructuralError("expected '(' at offset " + std::to_string(pos_));
    ++pos_;
    ParseNode node;
    skip_space();
    if (pos_ < s_.size() && s_[pos_] != '(' && s_[pos_] != ')') node.tag = read_atom();
    skip_space();
    while (true) {
      if (pos_ >= s_.size()) throw StructuralError("unbalanced parentheses in parse tree");
      if (s_[pos_] == ')') {
        ++pos_;
        break;
      }
      if (s_[pos_] == '(') {
        node.children.push_back(read_node());
        node.token_count += node.children.back().token_count;
      } else {
        if (!node.word.empty() || !node.children.empty())
          throw StructuralError("unexpected token \"" + read_atom() + "\" in node " + node.tag);
        node.word = read_atom();
        node.token_count = 1;
      }
      skip_space();
    }
    if (!node.word.empty() && !node.children.empty())
      throw StructuralError("node " + node.tag + " mixes a word and children");
    return node;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

void collect_leaves(const ParseNode& n, std::vector<std::string>& out) {
  if (!n.word.empty()) out.push_back(n.word);
  for (const auto& c : n.children) collect_leaves(c, out);
}

std::string_view base_tag(std::string_view tag) {
  if (tag.empty() || tag.front() == '-') return tag;
  return tag.substr(0, tag.find_first_of("-="));
}

struct ClauseWalker {
  const SegmentParams& params;
  std::vector<TokenSpan>& out;

  void descend(const ParseNode& n, std::size_t offset) {
    for (const auto& c : n.children) {
      visit(c, offset);
      offset += c.token_count;
    }
  }

  void visit(const ParseNode& n, std::size_t offset) {
    const auto tag = base_tag(n.tag);
    if (tag == "SBAR") return;
    if (tag == "S") {
      const auto len = n.token_count;
      if (len > params.l_max) {
        descend(n, offset);
      } else if (len >= params.l_min) {
        out.push_back({offset, offset + len});
      }
      return;
    }
    descend(n, offset);
  }
};

std::string unescape_ptb(std::string_view w) {
  if (w == "-LRB-") return "(";
  if (w == "-RRB-") return ")";
  if (w == "-LSB-") return "[";
  if (w == "-RSB-") return "]";
  if (w == "-LCB-") return "{";
  if (w == "-RCB-") return "}";
  if (w == "``" || w == "''") return "\"";
  return std::string(w);
}

// Character span of each leaf within the source text; nullopt if the leaves
// cannot be located in order.
std::optional<std::vector<std::pair<std::size_t, std::size_t>>> locate_leaves(
    const std::vector<std::string>& words, std::string_view text) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::size_t cursor = 0;
  for (const auto& w : words) {
    auto needle = unescape_ptb(w);
    auto pos = text.find(needle, cursor);
    if (pos == std::string_view::npos && needle == "\"") {
      for (std::string_view alt : {"``", "''", "'"}) {
        pos = text.find(alt, cursor);
        if (pos != std::string_view::npos) {
          needle = std::string(alt);
          break;
        }
      }
    }
    if (pos == std::string_view::npos) return std::nullopt;
    spans.emplace_back(pos, pos + needle.size());
    cursor = pos + needle.size();
  }
  return spans;
}

std::string sentence_id(const SentenceRef& src) {
  return src.entity_id + "/" + src.review_id + "/" + std::to_string(src.sentence_index);
}

SentenceUnit make_unit(const SentenceRef& src, UnitKind kind, std::size_t begin,
                       std::size_t end, std::vector<std::string> tokens) {
  SentenceUnit u;
  u.source_sentence_id = sentence_id(src);
  u.unit_id = u.source_sentence_id + "/" + std::to_string(begin) + "-" + std::to_string(end);
  u.entity_id = src.entity_id;
  u.review_id = src.review_id;
  u.kind = kind;
  u.text = src.sentence->text.substr(begin, end - begin);
  u.tokens = std::move(tokens);
  u.char_span = {begin, end};
  u.absa = src.sentence->absa;
  return u;
}

SentenceUnit whole_unit(const SentenceRef& src, std::vector<std::string> tokens) {
  const auto& t = src.sentence->text;
  auto b = t.find_first_not_of(" \t\r\n");
  auto e = t.find_last_not_of(" \t\r\n") + 1;
  if (tokens.empty()) tokens = text::whitespace_tokens(t);
  return make_unit(src, UnitKind::whole_sentence, b, e, std::move(tokens));
}

std::vector<std::string> lowered(const std::vector<std::string>& words, std::size_t b,
                                 std::size_t e) {
  std::vector<std::string> out;
  for (auto i = b; i < e; ++i) out.push_back(text::to_lower(unescape_ptb(words[i])));
  return out;
}

}  // namespace

ParseNode parse_tree(std::string_view bracketed) { return TreeReader(bracketed).read_root(); }

std::vector<std::string> leaves(const ParseNode& tree) {
  std::vector<std::string> out;
  collect_leaves(tree, out);
  return out;
}

Segmentation segment_tree(const ParseNode& tree, const SegmentParams& params) {
  if (params.l_min < 1 || params.l_max <= params.l_min)
    throw ContractError("segment parameters require l_max > l_min >= 1");
  if (tree.token_count == 0) throw StructuralError("parse tree has no tokens");

  // Skip unary wrappers (ROOT, TOP, or the unlabeled PTB outer bracket).
  const ParseNode* root = &tree;
  while (root->children.size() == 1 && !root->children.front().is_leaf() &&
         base_tag(root->tag) != "S")
    root = &root->children.front();

  Segmentation seg;
  std::vector<TokenSpan> clauses;
  ClauseWalker walker{params, clauses};
  walker.descend(*root, 0);
  if (clauses.size() < 2) return seg;
  for (std::size_t i = 1; i < clauses.size(); ++i) {
    if (clauses[i].begin - clauses[i - 1].end > params.l_min) return seg;
  }
  seg.whole_sentence = false;
  seg.clauses = std::move(clauses);
  return seg;
}

std::vector<SentenceUnit> segment_sentence(const ParseNode& tree, const SentenceRef& src,
                                           const SegmentParams& params) {
  const auto seg = segment_tree(tree, params);
  const auto words = leaves(tree);
  if (seg.whole_sentence) return {whole_unit(src, lowered(words, 0, words.size()))};

  const auto spans = locate_leaves(words, src.sentence->text);
  if (!spans) return {whole_unit(src, lowered(words, 0, words.size()))};
  std::vector<SentenceUnit> units;
  for (const auto& c : seg.clauses) {
    units.push_back(make_unit(src, UnitKind::clause, (*spans)[c.begin].first,
                              (*spans)[c.end - 1].second, lowered(words, c.begin, c.end)));
  }
  return units;
}

std::vector<SentenceUnit> entity_units(const Entity& entity, bool use_clauses,
                                       const SegmentParams& params) {
  std::vector<SentenceUnit> units;
  for (const auto& review : entity.reviews) {
    for (std::size_t i = 0; i < review.sentences.size(); ++i) {
      const auto& s = review.sentences[i];
      SentenceRef ref{entity.entity_id, review.review_id, i, &s};
      if (use_clauses && s.parse) {
        auto part = segment_sentence(parse_tree(*s.parse), ref, params);
        std::move(part.begin(), part.end(), std::back_inserter(units));
      } else {
        units.push_back(whole_unit(ref, {}));
      }
    }
  }
  return units;
}

std::vector<SentenceUnit> sentences_to_units(const ReviewCorpus& corpus, bool use_clauses,
                                             const SegmentParams& params) {
  std::vector<SentenceUnit> units;
  for (const auto& e : corpus.entities) {
    auto part = entity_units(e, use_clauses, params);
    std::move(part.begin(), part.end(), std::back_inserter(units));
  }
  return units;
}

}  // namespace rsum
