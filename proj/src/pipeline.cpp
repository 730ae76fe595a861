#include "rsum/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "rsum/candidates.hpp"
#include "rsum/corpus.hpp"
#include "rsum/error.hpp"
#include "rsum/evaluation.hpp"
#include "rsum/opinions.hpp"
#include "rsum/properties.hpp"
#include "rsum/remote.hpp"
#include "rsum/serialization.hpp"
#include "rsum/text.hpp"

namespace rsum {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

void PipelineConfig::validate() const {
  if (!(beta >= 0.0 && beta <= 1.0))
    throw ValidationError("beta must lie in [0, 1], got " + std::to_string(beta));
  if (l_min < 1) throw ValidationError("l_min must be >= 1");
  if (l_max <= l_min) throw ValidationError("l_max must exceed l_min");
  if (min_reviews < 1) throw ValidationError("min_reviews must be >= 1");
  if (max_reviews < min_reviews) throw ValidationError("max_reviews must be >= min_reviews");
  if (min_set_size < 1) throw ValidationError("min_set_size must be >= 1");
  if (workers < 1) throw ValidationError("workers must be >= 1");
  if (pairs_per_label < 1) throw ValidationError("pairs_per_label must be >= 1");
  if (output_dir.empty()) throw ValidationError("output directory is not set");
  if (scorer != "lexical" && scorer != "remote")
    throw ValidationError("scorer must be lexical or remote, got \"" + scorer + "\"");
  if (embedder != "hash" && embedder != "remote")
    throw ValidationError("embedder must be hash or remote, got \"" + embedder + "\"");
  if ((scorer == "remote" || embedder == "remote") && resolved_remote_url().empty())
    throw ValidationError(std::string("remote mode needs remote_url or ") + kScorerUrlEnv);
  gibbs.validate();
}

std::string PipelineConfig::resolved_remote_url() const {
  if (!remote_url.empty()) return remote_url;
  return scorer_url_from_env().value_or("");
}

void to_json(json& j, const PipelineConfig& c) {
  std::vector<std::string> preds;
  for (const auto& p : c.pred_dirs) preds.push_back(p.generic_string());
  j = json{{"corpus", c.corpus.generic_string()},
           {"summaries", c.summaries.generic_string()},
           {"output_dir", c.output_dir.generic_string()},
           {"scorer", c.scorer},
           {"remote_url", c.remote_url},
           {"embedder", c.embedder},
           {"min_reviews", c.min_reviews},
           {"max_reviews", c.max_reviews},
           {"use_clauses", c.use_clauses},
           {"l_max", c.l_max},
           {"l_min", c.l_min},
           {"beta", c.beta},
           {"min_set_size", c.min_set_size},
           {"k", c.gibbs.k},
           {"eta", c.gibbs.eta},
           {"theta", c.gibbs.theta},
           {"temperature", c.gibbs.temperature},
           {"w_div", c.gibbs.w_div},
           {"word_limit", c.word_limit ? json(*c.word_limit) : json(nullptr)},
           {"format", std::string(c.format == SummaryFormat::json ? "json" : "text")},
           {"seed", c.seed},
           {"workers", c.workers},
           {"pairs_per_label", c.pairs_per_label},
           {"pred", preds}};
}

void from_json(const json& j, PipelineConfig& c) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  static const std::set<std::string> known = {
      "corpus", "summaries",    "output_dir", "scorer", "remote_url",  "embedder",
      "min_reviews", "max_reviews", "use_clauses", "l_max", "l_min",   "beta",
      "min_set_size", "k",       "eta",        "theta",  "temperature", "w_div",
      "word_limit", "format",    "seed",       "workers", "pairs_per_label", "pred"};
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw ValidationError("unknown config key \"" + key + "\"");
  try {
    auto str = [&](const char* k, auto& dst) {
      if (j.contains(k)) dst = j.at(k).get<std::string>();
    };
    auto num = [&](const char* k, auto& dst) {
      if (j.contains(k)) dst = j.at(k).get<std::remove_reference_t<decltype(dst)>>();
    };
    if (j.contains("corpus")) c.corpus = j.at("corpus").get<std::string>();
    if (j.contains("summaries")) c.summaries = j.at("summaries").get<std::string>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    str("scorer", c.scorer);
    str("remote_url", c.remote_url);
    str("embedder", c.embedder);
    num("min_reviews", c.min_reviews);
    num("max_reviews", c.max_reviews);
    num("use_clauses", c.use_clauses);
    num("l_max", c.l_max);
    num("l_min", c.l_min);
    num("beta", c.beta);
    num("min_set_size", c.min_set_size);
    num("k", c.gibbs.k);
    num("eta", c.gibbs.eta);
    num("theta", c.gibbs.theta);
    num("temperature", c.gibbs.temperature);
    num("w_div", c.gibbs.w_div);
    if (j.contains("word_limit")) {
      const auto& w = j.at("word_limit");
      c.word_limit = w.is_null() ? std::nullopt : std::optional(w.get<std::size_t>());
    }
    if (j.contains("format")) {
      const auto f = j.at("format").get<std::string>();
      auto parsed = parse_summary_format(f);
      if (!parsed) throw ValidationError("format must be text or json, got \"" + f + "\"");
      c.format = *parsed;
    }
    num("seed", c.seed);
    num("workers", c.workers);
    num("pairs_per_label", c.pairs_per_label);
    if (j.contains("pred")) {
      c.pred_dirs.clear();
      for (const auto& p : j.at("pred")) c.pred_dirs.emplace_back(p.get<std::string>());
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  const auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ValidationError("config " + path.string() + " is not valid JSON");
  PipelineConfig c;
  from_json(j, c);
  return c;
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::ingest: return "ingest";
    case Stage::align_cache: return "align-cache";
    case Stage::opinions: return "opinions";
    case Stage::candidates: return "candidates";
    case Stage::sample: return "sample";
    case Stage::summarize: return "summarize";
    case Stage::evaluate: return "evaluate";
    case Stage::gen_pairs: return "gen-pairs";
  }
  return "?";
}

std::optional<Stage> parse_stage(std::string_view s) {
  for (auto st : {Stage::ingest, Stage::align_cache, Stage::opinions, Stage::candidates,
                  Stage::sample, Stage::summarize, Stage::evaluate, Stage::gen_pairs})
    if (to_string(st) == s) return st;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Artifact plumbing

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, std::string_view content) {
  fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, p);
}

std::string dump(const json& j) { return j.dump(1) + "\n"; }

// Entity ids as file names.
std::string file_stem(std::string_view id) {
  std::string out;
  for (char c : id) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out += ok ? c : '_';
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

// Writes artifacts and remembers their digests for the stage record.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path root) : root_(std::move(root)) {}
  void put(const fs::path& rel, std::string_view content) {
    write_file(root_ / rel, content);
    outputs_[rel.generic_string()] = text::sha256_hex(content);
  }
  const std::map<std::string, std::string>& outputs() const { return outputs_; }

 private:
  fs::path root_;
  std::map<std::string, std::string> outputs_;
};

template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = std::min(workers, n);
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Per-entity artifact shapes

struct EntityUnits {
  std::string entity_id;
  std::vector<SentenceUnit> units;
};

struct EntityAlignment {
  std::vector<Opinion> opinions;
  AlignmentTable table;
};

json table_to_json(const AlignmentTable& t) {
  json p = json::array(), a = json::array();
  for (Eigen::Index i = 0; i < t.units(); ++i) {
    json pr = json::array(), ar = json::array();
    for (Eigen::Index j = 0; j < t.opinions(); ++j) {
      pr.push_back(t.p_align(i, j));
      ar.push_back(t.aligns(i, j) ? 1 : 0);
    }
    p.push_back(std::move(pr));
    a.push_back(std::move(ar));
  }
  return {{"p_align", p}, {"aligns", a}};
}

AlignmentTable table_from_json(const json& j, Eigen::Index n, Eigen::Index m) {
  AlignmentTable t{Eigen::MatrixXd::Zero(n, m),
                   Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, m, false)};
  const auto& p = j.at("p_align");
  const auto& a = j.at("aligns");
  if (static_cast<Eigen::Index>(p.size()) != n)
    throw StructuralError("alignment artifact does not match the unit list");
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < m; ++k) {
      t.p_align(i, k) = p.at(i).at(k).get<double>();
      t.aligns(i, k) = a.at(i).at(k).get<int>() != 0;
    }
  }
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// Pipeline internals

namespace {

class Run {
 public:
  explicit Run(const PipelineConfig& c) : c_(c), out_(c.output_dir) {}

  fs::path record_path(Stage s) const { return out_ / "stages" / (std::string(to_string(s)) + ".json"); }

  std::optional<json> record(Stage s) const {
    const auto p = record_path(s);
    if (!fs::exists(p)) return std::nullopt;
    auto j = json::parse(read_file(p), nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    return j;
  }

  // Digest of an upstream stage's outputs; its artifacts must be intact.
  std::string upstream(Stage s, Stage requester) const {
    const auto r = record(s);
    auto missing = [&](const std::string& why) {
      return StageError("stage " + std::string(to_string(requester)) + " requires stage " +
                            std::string(to_string(s)) + " (" + why + ")",
                        std::string(to_string(s)));
    };
    if (!r) throw missing("no artifact in " + out_.string());
    for (const auto& [rel, digest] : r->at("outputs").items()) {
      const auto p = out_ / rel;
      if (!fs::exists(p) || text::sha256_hex(read_file(p)) != digest.get<std::string>())
        throw missing("artifact " + rel + " is missing or modified");
    }
    return text::sha256_hex(r->at("outputs").dump());
  }

  bool fresh(Stage s, const std::string& input_hash) const {
    const auto r = record(s);
    if (!r || r->value("input_hash", "") != input_hash) return false;
    for (const auto& [rel, digest] : r->at("outputs").items()) {
      const auto p = out_ / rel;
      if (!fs::exists(p) || text::sha256_hex(read_file(p)) != digest.get<std::string>())
        return false;
    }
    return true;
  }

  void commit(Stage s, const std::string& input_hash, const ArtifactWriter& w) const {
    json j = {{"stage", to_string(s)}, {"input_hash", input_hash}, {"outputs", w.outputs()}};
    write_file(record_path(s), dump(j));
  }

  std::string file_digest(const fs::path& p, Stage s) const {
    if (p.empty()) throw ValidationError("stage " + std::string(to_string(s)) + " needs an input path");
    if (!fs::exists(p)) throw ValidationError("input " + p.string() + " does not exist");
    return text::sha256_hex(read_file(p));
  }

  // ---- scorers -----------------------------------------------------------

  const ScorerClient& client() {
    std::call_once(client_once_, [&] {
      RemoteOptions o;
      o.base_url = c_.resolved_remote_url();
      client_ = std::make_unique<ScorerClient>(o);
      client_->require_healthy();
    });
    return *client_;
  }

  std::string scorer_id() {
    if (c_.scorer == "lexical") return LexicalScorer().id();
    return RemoteScorer(client()).id();
  }

  std::string specificity_id() {
    if (c_.scorer == "lexical") return "baseline-specificity-v1";
    return RemoteSpecificity(client()).id();
  }

  std::unique_ptr<Embedder> make_embedder() {
    if (c_.embedder == "hash") return std::make_unique<HashEmbedder>();
    return std::make_unique<RemoteEmbedder>(client());
  }

  // Scorer for one entity. The lexical scorer reads annotations, which are
  // per entity, so it never shares a persistent cache.
  struct EntityScorer {
    std::unique_ptr<Scorer> scorer;
    std::unique_ptr<JudgmentCache> cache;
    std::unique_ptr<Aligner> aligner;
  };

  EntityScorer make_scorer(std::span<const SentenceUnit> units, std::span<const Opinion> opinions) {
    EntityScorer s;
    if (c_.scorer == "lexical") {
      auto lex = std::make_unique<LexicalScorer>();
      for (const auto& u : units)
        if (u.absa) lex->add(u.text, *u.absa);
      for (const auto& o : opinions) lex->add(o.surface, o.annotation());
      s.scorer = std::move(lex);
      s.cache = std::make_unique<JudgmentCache>();
      s.aligner = std::make_unique<Aligner>(*s.scorer, s.cache.get());
    } else {
      s.scorer = std::make_unique<RemoteScorer>(client());
      s.aligner = std::make_unique<Aligner>(*s.scorer, &shared_cache());
    }
    return s;
  }

  JudgmentCache& shared_cache() {
    std::call_once(cache_once_, [&] {
      cache_ = std::make_unique<JudgmentCache>(out_ / "cache" / "judgments.jsonl");
    });
    return *cache_;
  }

  // ---- artifact readers --------------------------------------------------

  std::vector<std::string> entity_ids() const {
    return json::parse(read_file(out_ / "ingest" / "entities.json")).get<std::vector<std::string>>();
  }

  std::vector<SentenceUnit> units(const std::string& e) const {
    const auto j = json::parse(read_file(out_ / "ingest" / (file_stem(e) + ".json")));
    return j.at("units").get<std::vector<SentenceUnit>>();
  }

  EntityAlignment alignment(const std::string& e, std::size_t n_units) const {
    const auto j = json::parse(read_file(out_ / "align" / (file_stem(e) + ".json")));
    EntityAlignment a;
    a.opinions = j.at("opinions").get<std::vector<Opinion>>();
    a.table = table_from_json(j, static_cast<Eigen::Index>(n_units),
                              static_cast<Eigen::Index>(a.opinions.size()));
    return a;
  }

  std::vector<OpinionCluster> clusters(const std::string& e,
                                       std::span<const Opinion> opinions) const {
    const auto j = json::parse(read_file(out_ / "opinions" / (file_stem(e) + ".json")));
    std::map<std::string, const Opinion*> by_id;
    for (const auto& o : opinions) by_id[o.opinion_id] = &o;
    std::vector<OpinionCluster> out;
    for (const auto& cj : j.at("clusters")) {
      OpinionCluster g;
      g.cluster_id = cj.at("cluster_id").get<std::string>();
      g.prototype = cj.at("prototype").get<std::string>();
      for (const auto& id : cj.at("members")) {
        auto it = by_id.find(id.get<std::string>());
        if (it == by_id.end()) throw StructuralError("cluster member not in alignment artifact");
        g.members.push_back(*it->second);
      }
      out.push_back(std::move(g));
    }
    return out;
  }

  struct StoredSet {
    CandidateSet set;
    std::vector<PropertyScores> properties;
  };

  static std::vector<StoredSet> candidates_from(const fs::path& file) {
    const auto j = json::parse(read_file(file));
    std::vector<StoredSet> out;
    for (const auto& sj : j.at("sets")) {
      StoredSet s;
      s.set.cluster_id = sj.at("cluster_id").get<std::string>();
      s.set.prototype_opinion = sj.at("prototype_opinion").get<Opinion>();
      for (const auto& m : sj.at("members")) {
        const auto id = m.at("unit_id").get<std::string>();
        s.set.member_unit_ids.push_back(id);
        s.set.member_indices.push_back(m.at("index").get<std::size_t>());
        s.set.relatedness_to_cluster[id] = m.at("e").get<double>();
        s.properties.push_back({id, m.at("rel_raw").get<double>(), m.at("spec_raw").get<double>(),
                                m.at("pop_raw").get<double>(), m.at("rel_n").get<double>(),
                                m.at("spec_n").get<double>(), m.at("pop_n").get<double>(),
                                m.at("sal").get<double>()});
      }
      out.push_back(std::move(s));
    }
    return out;
  }

  std::vector<StoredSet> candidates(const std::string& e) const {
    return candidates_from(out_ / "candidates" / (file_stem(e) + ".json"));
  }

  // ---- stages ------------------------------------------------------------

  StageOutcome ingest() {
    const Stage s = Stage::ingest;
    const json params = {{"corpus", file_digest(c_.corpus, s)}, {"min_reviews", c_.min_reviews},
                         {"max_reviews", c_.max_reviews},       {"use_clauses", c_.use_clauses},
                         {"l_max", c_.l_max},                   {"l_min", c_.l_min},
                         {"seed", c_.seed}};
    const auto h = hash_inputs(s, params);
    if (fresh(s, h)) return {s, true, h};

    const auto corpus =
        filter_entities(load_corpus(c_.corpus), c_.min_reviews, c_.max_reviews, c_.seed);
    const SegmentParams seg{c_.l_max, c_.l_min};
    std::vector<std::string> ids;
    std::set<std::string> stems;
    for (const auto& e : corpus.entities) {
      if (!stems.insert(file_stem(e.entity_id)).second)
        throw ValidationError("entity ids collide as file names: " + e.entity_id);
      ids.push_back(e.entity_id);
    }
    std::vector<std::string> docs(ids.size());
    parallel_for(ids.size(), c_.workers, [&](std::size_t i) {
      const auto& e = corpus.entities[i];
      const json j = {{"entity_id", e.entity_id},
                      {"reviews", e.reviews.size()},
                      {"units", entity_units(e, c_.use_clauses, seg)}};
      docs[i] = dump(j);
    });
    ArtifactWriter w(out_);
    w.put("ingest/entities.json", dump(ids));
    for (std::size_t i = 0; i < ids.size(); ++i)
      w.put("ingest/" + file_stem(ids[i]) + ".json", docs[i]);
    commit(s, h, w);
    return {s, false, h};
  }

  StageOutcome align_cache() {
    const Stage s = Stage::align_cache;
    const json params = {{"ingest", upstream(Stage::ingest, s)},
                         {"summaries", file_digest(c_.summaries, s)},
                         {"scorer", scorer_id()}};
    const auto h = hash_inputs(s, params);
    if (fresh(s, h)) return {s, true, h};

    const auto ids = entity_ids();
    std::map<std::string, std::vector<SummarySentence>> by_entity;
    for (auto& ss : load_summary_sentences(c_.summaries)) by_entity[ss.entity_id].push_back(ss);
    std::vector<std::string> docs(ids.size());
    parallel_for(ids.size(), c_.workers, [&](std::size_t i) {
      const auto us = units(ids[i]);
      const auto& sents = by_entity[ids[i]];
      const auto opinions = extract_opinions(sents);
      auto sc = make_scorer(us, opinions);
      const auto table = compute_alignment_table(us, opinions, *sc.aligner);
      json j = table_to_json(table);
      j["entity_id"] = ids[i];
      j["scorer"] = sc.scorer->id();
      j["opinions"] = opinions;
      docs[i] = dump(j);
    });
    ArtifactWriter w(out_);
    for (std::size_t i = 0; i < ids.size(); ++i)
      w.put("align/" + file_stem(ids[i]) + ".json", docs[i]);
    commit(s, h, w);
    return {s, false, h};
  }

  StageOutcome opinions() {
    const Stage s = Stage::opinions;
    const json params = {{"align", upstream(Stage::align_cache, s)},
                         {"ingest", upstream(Stage::ingest, s)},
                         {"beta", c_.beta}};
    const auto h = hash_inputs(s, params);
    if (fresh(s, h)) return {s, true, h};

    const auto ids = entity_ids();
    std::vector<std::string> docs(ids.size());
    parallel_for(ids.size(), c_.workers, [&](std::size_t i) {
      const auto n = units(ids[i]).size();
      const auto a = alignment(ids[i], n);
      std::vector<FeatureVector> vectors;
      for (Eigen::Index k = 0; k < a.table.opinions(); ++k)
        vectors.push_back(feature_vector(a.table, k));
      json cj = json::array();
      for (const auto& g : cluster_opinions(a.opinions, vectors, c_.beta)) {
        json members = json::array();
        for (const auto& m : g.members) members.push_back(m.opinion_id);
        cj.push_back({{"cluster_id", g.cluster_id},
                      {"prototype", g.prototype},
                      {"members", members}});
      }
      docs[i] = dump({{"entity_id", ids[i]}, {"beta", c_.beta}, {"clusters", cj}});
    });
    ArtifactWriter w(out_);
    for (std::size_t i = 0; i < ids.size(); ++i)
      w.put("opinions/" + file_stem(ids[i]) + ".json", docs[i]);
    commit(s, h, w);
    return {s, false, h};
  }

  StageOutcome candidates() {
    const Stage s = Stage::candidates;
    const json params = {{"opinions", upstream(Stage::opinions, s)},
                         {"align", upstream(Stage::align_cache, s)},
                         {"ingest", upstream(Stage::ingest, s)},
                         {"min_set_size", c_.min_set_size},
                         {"l_max", c_.l_max},
                         {"scorer", scorer_id()},
                         {"specificity", specificity_id()}};
    const auto h = hash_inputs(s, params);
    if (fresh(s, h)) return {s, true, h};

    const auto ids = entity_ids();
    std::vector<std::string> docs(ids.size());
    parallel_for(ids.size(), c_.workers, [&](std::size_t i) {
      const auto us = units(ids[i]);
      const auto a = alignment(ids[i], us.size());
      const auto gs = clusters(ids[i], a.opinions);
      const auto scores = cluster_scores(a.table, a.opinions, gs);
      const auto sets = build_candidate_sets(us, gs, scores, c_.min_set_size);
      auto sc = make_scorer(us, a.opinions);
      std::unique_ptr<SpecificityScorer> spec;
      if (c_.scorer == "lexical")
        spec = std::make_unique<BaselineSpecificity>(us, c_.l_max);
      else
        spec = std::make_unique<RemoteSpecificity>(client());

      json sj = json::array();
      for (const auto& set : sets) {
        const auto col = static_cast<Eigen::Index>(
            std::find_if(gs.begin(), gs.end(),
                         [&](const auto& g) { return g.cluster_id == set.cluster_id; }) -
            gs.begin());
        const auto props = candidate_properties(set, us, scores, col, *spec, *sc.aligner);
        json members = json::array();
        for (std::size_t m = 0; m < set.size(); ++m) {
          const auto& p = props[m];
          members.push_back({{"unit_id", set.member_unit_ids[m]},
                             {"index", set.member_indices[m]},
                             {"e", set.relatedness_to_cluster.at(set.member_unit_ids[m])},
                             {"rel_raw", p.rel_raw},
                             {"spec_raw", p.spec_raw},
                             {"pop_raw", p.pop_raw},
                             {"rel_n", p.rel_n},
                             {"spec_n", p.spec_n},
                             {"pop_n", p.pop_n},
                             {"sal", p.sal}});
        }
        sj.push_back({{"cluster_id", set.cluster_id},
                      {"prototype_opinion", set.prototype_opinion},
                      {"members", members}});
      }
      docs[i] = dump({{"entity_id", ids[i]}, {"sets", sj}});
    });
    ArtifactWriter w(out_);
    for (std::size_t i = 0; i < ids.size(); ++i)
      w.put("candidates/" + file_stem(ids[i]) + ".json", docs[i]);
    commit(s, h, w);
    return {s, false, h};
  }

  StageOutcome sample() {
    const Stage s = Stage::sample;
    const json params = {{"candidates", upstream(Stage::candidates, s)},
                         {"ingest", upstream(Stage::ingest, s)},
                         {"k", c_.gibbs.k},
                         {"eta", c_.gibbs.eta},
                         {"theta", c_.gibbs.theta},
                         {"temperature", c_.gibbs.temperature},
                         {"w_div", c_.gibbs.w_div},
                         {"seed", c_.seed}};
    const auto h = hash_inputs(s, params);
    if (fresh(s, h)) return {s, true, h};

    const auto ids = entity_ids();
    std::vector<std::string> docs(ids.size());
    parallel_for(ids.size(), c_.workers, [&](std::size_t i) {
      const auto us = units(ids[i]);
      GibbsConfig g = c_.gibbs;
      g.seed = stream_seed(c_.seed, ids[i]);
      json rj = json::array();
      for (const auto& stored : candidates(ids[i])) {
        std::vector<std::string> texts;
        for (auto idx : stored.set.member_indices) texts.push_back(us.at(idx).text);
        const auto problem = SamplingProblem::from_properties(stored.properties, texts);
        const auto r = sample_rationales(stored.set.prototype_opinion.opinion_id, problem, g);
        rj.push_back({{"cluster_id", stored.set.cluster_id},
                      {"opinion_id", r.opinion_id},
                      {"unit_ids", r.unit_ids},
                      {"joint_score", r.joint_score},
                      {"frequency", r.frequency},
                      {"total_recorded", r.total_recorded},
                      {"distinct_groups", r.distinct_groups},
                      {"seed", r.seed},
                      {"warning", r.warning ? json(*r.warning) : json(nullptr)}});
      }
      docs[i] = dump({{"entity_id", ids[i]}, {"rationale_sets", rj}});
    });
    ArtifactWriter w(out_);
    for (std::size_t i = 0; i < ids.size(); ++i)
      w.put("sample/" + file_stem(ids[i]) + ".json", docs[i]);
    commit(s, h, w);
    return {s, false, h};
  }

  StageOutcome summarize() {
    const Stage s = Stage::summarize;
    const json params = {{"sample", upstream(Stage::sample, s)},
                         {"candidates", upstream(Stage::candidates, s)},
                         {"ingest", upstream(Stage::ingest, s)},
                         {"word_limit", c_.word_limit ? json(*c_.word_limit) : json(nullptr)},
                         {"format", std::string(extension(c_.format))}};
    const auto h = hash_inputs(s, params);
    if (fresh(s, h)) return {s, true, h};

    const auto ids = entity_ids();
    std::vector<Summary> summaries(ids.size());
    parallel_for(ids.size(), c_.workers, [&](std::size_t i) {
      const auto us = units(ids[i]);
      std::map<std::string, std::size_t> by_unit_id;
      for (std::size_t u = 0; u < us.size(); ++u) by_unit_id[us[u].unit_id] = u;
      const auto stored = candidates(ids[i]);
      const auto sj = json::parse(read_file(out_ / "sample" / (file_stem(ids[i]) + ".json")));
      std::map<std::string, std::vector<std::string>> rationale_ids;
      for (const auto& r : sj.at("rationale_sets"))
        rationale_ids[r.at("cluster_id").get<std::string>()] =
            r.at("unit_ids").get<std::vector<std::string>>();

      std::vector<CandidateSet> sets;
      for (const auto& st : stored) sets.push_back(st.set);
      std::vector<SummaryItem> ranked;
      for (auto idx : rank_opinions(sets)) {
        const auto& set = sets[idx];
        auto it = rationale_ids.find(set.cluster_id);
        if (it == rationale_ids.end())
          throw StageError("no rationale set for " + set.cluster_id + " in " + ids[i], "sample");
        SummaryItem item{set.cluster_id, set.size(), set.prototype_opinion, {}};
        for (const auto& uid : it->second) item.rationales.push_back(us.at(by_unit_id.at(uid)));
        ranked.push_back(std::move(item));
      }
      summaries[i] = assemble_summary(ids[i], ranked, c_.word_limit);
    });
    ArtifactWriter w(out_);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto stem = file_stem(ids[i]);
      w.put("summarize/" + stem + ".json", render_summary(summaries[i], SummaryFormat::json));
      w.put(stem + ".summary." + std::string(extension(c_.format)),
            render_summary(summaries[i], c_.format));
    }
    commit(s, h, w);
    return {s, false, h};
  }

  StageOutcome evaluate();
  StageOutcome gen_pairs();

  std::string hash_inputs(Stage s, const json& params) const {
    return text::sha256_hex(std::string(to_string(s)) + "\n" + std::string(kVersion) + "\n" +
                            params.dump());
  }

  const PipelineConfig& c_;
  fs::path out_;

 private:
  std::once_flag client_once_, cache_once_;
  std::unique_ptr<ScorerClient> client_;
  std::unique_ptr<JudgmentCache> cache_;
};

// ---------------------------------------------------------------------------
// Evaluation stage

struct SystemSummaries {
  std::string name;
  fs::path dir;
  bool has_candidates = false;
};

std::optional<Summary> load_system_summary(const fs::path& dir, const std::string& entity) {
  const auto stem = file_stem(entity);
  for (const auto& p : {dir / "summarize" / (stem + ".json"), dir / (stem + ".summary.json")})
    if (fs::exists(p)) return parse_summary_json(read_file(p));
  return std::nullopt;
}

using MetricValues = std::map<std::string, std::optional<double>>;

const std::vector<std::string> kMetricNames = {"emb_rel", "key_spec", "key_pop",
                                               "emb_div", "silhouette", "npmi"};

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string format_cell(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

StageOutcome Run::evaluate() {
  const Stage s = Stage::evaluate;
  auto embedder = make_embedder();

  std::vector<SystemSummaries> systems = {{"rsum", out_, true}};
  json pred_digest = json::array();
  std::set<std::string> names = {"rsum"};
  for (const auto& d : c_.pred_dirs) {
    if (!fs::is_directory(d)) throw ValidationError("--pred " + d.string() + " is not a directory");
    const std::string base = d.filename().empty() ? d.parent_path().filename().string()
                                                  : d.filename().string();
    std::string name = base;
    for (int n = 2; names.contains(name); ++n) name = base + "-" + std::to_string(n);
    names.insert(name);
    systems.push_back({name, d, fs::is_directory(d / "candidates")});
    // Predictions are external inputs: hash every file that may be read.
    json files = json::object();
    for (const auto& entry : fs::recursive_directory_iterator(d)) {
      if (!entry.is_regular_file()) continue;
      const auto rel = fs::relative(entry.path(), d).generic_string();
      if (rel.ends_with(".json")) files[rel] = text::sha256_hex(read_file(entry.path()));
    }
    pred_digest.push_back({{"name", name}, {"files", files}});
  }

  const json params = {{"summarize", upstream(Stage::summarize, s)},
                       {"candidates", upstream(Stage::candidates, s)},
                       {"opinions", upstream(Stage::opinions, s)},
                       {"align", upstream(Stage::align_cache, s)},
                       {"ingest", upstream(Stage::ingest, s)},
                       {"embedder", embedder->id()},
                       {"pred", pred_digest}};
  const auto h = hash_inputs(s, params);
  if (fresh(s, h)) return {s, true, h};

  const auto ids = entity_ids();
  // values[system][entity] -> metrics
  std::vector<std::vector<MetricValues>> values(systems.size(),
                                                std::vector<MetricValues>(ids.size()));
  parallel_for(ids.size(), c_.workers, [&](std::size_t e) {
    const auto us = units(ids[e]);
    std::map<std::string, std::size_t> by_unit_id;
    for (std::size_t u = 0; u < us.size(); ++u) by_unit_id[us[u].unit_id] = u;
    std::vector<std::string> unit_texts;
    for (const auto& u : us) unit_texts.push_back(u.text);
    const auto unit_docs = preprocess_tokens(unit_texts);
    const auto a = alignment(ids[e], us.size());
    const auto gs = clusters(ids[e], a.opinions);

    // Reference keywords from this run's candidate sets.
    const auto stored = candidates(ids[e]);
    std::vector<std::string> set_ids;
    std::vector<std::vector<std::string>> set_docs, excluded;
    for (const auto& st : stored) {
      set_ids.push_back(st.set.cluster_id);
      std::vector<std::string> doc;
      for (auto idx : st.set.member_indices)
        doc.insert(doc.end(), unit_docs.at(idx).begin(), unit_docs.at(idx).end());
      set_docs.push_back(std::move(doc));
      std::vector<std::string> ex;
      for (const auto& g : gs) {
        if (g.cluster_id != st.set.cluster_id) continue;
        for (const auto& m : g.members) {
          for (auto& t : normalize_tokens(m.surface)) ex.push_back(t);
          for (auto& t : text::word_tokens(m.surface)) ex.push_back(t);
        }
      }
      excluded.push_back(std::move(ex));
    }
    const auto table = TfidfTable::build(set_docs);
    const auto keywords = extract_keywords(set_ids, table, excluded);

    auto set_index = [&](const SummaryItem& item) -> std::optional<std::size_t> {
      for (std::size_t k = 0; k < set_ids.size(); ++k)
        if (set_ids[k] == item.cluster_id &&
            stored[k].set.prototype_opinion.surface == item.opinion.surface)
          return k;
      for (std::size_t k = 0; k < set_ids.size(); ++k)
        if (stored[k].set.prototype_opinion.surface == item.opinion.surface) return k;
      return std::nullopt;
    };

    for (std::size_t sys = 0; sys < systems.size(); ++sys) {
      MetricValues mv;
      std::map<std::string, std::vector<double>> acc;
      if (const auto summary = load_system_summary(systems[sys].dir, ids[e])) {
        for (const auto& item : summary->items) {
          std::vector<std::string> texts;
          for (const auto& r : item.rationales) texts.push_back(r.text);
          if (texts.empty()) continue;
          acc["emb_rel"].push_back(metric_emb_rel(item.opinion.surface, texts, *embedder));
          if (auto v = metric_emb_div(texts, *embedder)) acc["emb_div"].push_back(*v);
          if (const auto k = set_index(item)) {
            if (auto v = metric_key_spec(texts, keywords[*k])) acc["key_spec"].push_back(*v);
            if (auto v = metric_key_pop(texts, keywords[*k], table.scores[*k]))
              acc["key_pop"].push_back(*v);
          }
        }
      }
      for (const auto& m : {"emb_rel", "key_spec", "key_pop", "emb_div"}) mv[m] = mean_of(acc[m]);

      // Candidate-set metrics need the system's own sets.
      std::optional<std::vector<StoredSet>> own;
      if (sys == 0) {
        own = stored;
      } else if (systems[sys].has_candidates) {
        const auto f = systems[sys].dir / "candidates" / (file_stem(ids[e]) + ".json");
        if (fs::exists(f)) own = candidates_from(f);
      }
      mv["silhouette"] = std::nullopt;
      mv["npmi"] = std::nullopt;
      if (own) {
        std::vector<std::string> member_texts;
        std::vector<int> labels;
        std::vector<std::vector<std::string>> docs;
        for (std::size_t k = 0; k < own->size(); ++k) {
          std::vector<std::string> doc;
          for (const auto& uid : (*own)[k].set.member_unit_ids) {
            auto it = by_unit_id.find(uid);
            if (it == by_unit_id.end()) continue;
            member_texts.push_back(us[it->second].text);
            labels.push_back(static_cast<int>(k));
            doc.insert(doc.end(), unit_docs[it->second].begin(), unit_docs[it->second].end());
          }
          docs.push_back(std::move(doc));
        }
        if (own->size() >= 2) {
          const auto vecs = embedder->embed_batch(member_texts);
          Eigen::MatrixXd emb(static_cast<Eigen::Index>(vecs.size()),
                              vecs.empty() ? 0 : vecs.front().size());
          for (std::size_t r = 0; r < vecs.size(); ++r)
            emb.row(static_cast<Eigen::Index>(r)) = vecs[r].transpose();
          mv["silhouette"] = metric_silhouette(emb, labels);
        }
        mv["npmi"] = metric_npmi(TfidfTable::build(docs), unit_docs);
      }
      values[sys][e] = std::move(mv);
    }
  });

  // Corpus means and Overall.
  json report = {{"embedder", embedder->id()}, {"entities", ids}, {"systems", json::object()}};
  MetricTable table;
  std::vector<std::map<std::string, std::optional<double>>> means(systems.size());
  for (std::size_t sys = 0; sys < systems.size(); ++sys) {
    json per_entity = json::object();
    for (std::size_t e = 0; e < ids.size(); ++e) {
      json mj = json::object();
      for (const auto& m : kMetricNames) mj[m] = optional_json(values[sys][e][m]);
      per_entity[ids[e]] = mj;
    }
    json mean_j = json::object();
    for (const auto& m : kMetricNames) {
      std::vector<double> xs;
      for (std::size_t e = 0; e < ids.size(); ++e)
        if (values[sys][e][m]) xs.push_back(*values[sys][e][m]);
      means[sys][m] = mean_of(xs);
      mean_j[m] = optional_json(means[sys][m]);
      if (means[sys][m]) table[systems[sys].name][m] = *means[sys][m];
    }
    report["systems"][systems[sys].name] = {{"entities", per_entity}, {"mean", mean_j}};
  }
  const auto overall = overall_score(table);
  for (std::size_t sys = 0; sys < systems.size(); ++sys) {
    auto it = overall.scores.find(systems[sys].name);
    report["systems"][systems[sys].name]["overall"] =
        it == overall.scores.end() ? json(nullptr) : json(it->second);
  }
  report["overall_note"] = overall.note ? json(*overall.note) : json(nullptr);

  std::ostringstream txt;
  txt << "system";
  for (const auto& m : kMetricNames) txt << '\t' << m;
  txt << "\toverall\n";
  for (std::size_t sys = 0; sys < systems.size(); ++sys) {
    txt << systems[sys].name;
    for (const auto& m : kMetricNames) txt << '\t' << format_cell(means[sys][m]);
    auto it = overall.scores.find(systems[sys].name);
    txt << '\t'
        << format_cell(it == overall.scores.end() ? std::nullopt : std::optional(it->second))
        << '\n';
  }
  if (overall.note) txt << "overall: " << *overall.note << '\n';

  ArtifactWriter w(out_);
  w.put("report.json", dump(report));
  w.put("report.txt", txt.str());
  commit(s, h, w);
  return {s, false, h};
}

StageOutcome Run::gen_pairs() {
  const Stage s = Stage::gen_pairs;
  const json params = {{"corpus", file_digest(c_.corpus, s)}, {"min_reviews", c_.min_reviews},
                       {"max_reviews", c_.max_reviews},       {"seed", c_.seed},
                       {"pairs_per_label", c_.pairs_per_label}};
  const auto h = hash_inputs(s, params);
  if (fresh(s, h)) return {s, true, h};

  const auto corpus =
      filter_entities(load_corpus(c_.corpus), c_.min_reviews, c_.max_reviews, c_.seed);
  std::vector<AnnotatedSentence> sentences;
  for (const auto& e : corpus.entities)
    for (const auto& r : e.reviews)
      for (const auto& sent : r.sentences)
        if (sent.absa) sentences.push_back({sent.text, *sent.absa});
  const auto report = generate_finetuning_pairs(sentences, c_.pairs_per_label,
                                                stream_seed(c_.seed, "gen-pairs"));
  std::string lines;
  for (const auto& p : report.pairs) {
    const json j = {{"x", p.x_text},
                    {"y", p.y_text},
                    {"kind", to_string(p.kind)},
                    {"label", to_string(p.label)}};
    lines += j.dump() + "\n";
  }
  for (const auto& [slot, count] : report.skipped)
    spdlog::warn("gen-pairs: {} sentences lacked a {} / {} partner", count,
                 to_string(slot.first), to_string(slot.second));
  ArtifactWriter w(out_);
  w.put("pairs.jsonl", lines);
  commit(s, h, w);
  return {s, false, h};
}

}  // namespace

// ---------------------------------------------------------------------------

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) { config_.validate(); }

StageOutcome Pipeline::run_stage(Stage s) {
  Run r(config_);
  StageOutcome o;
  switch (s) {
    case Stage::ingest: o = r.ingest(); break;
    case Stage::align_cache: o = r.align_cache(); break;
    case Stage::opinions: o = r.opinions(); break;
    case Stage::candidates: o = r.candidates(); break;
    case Stage::sample: o = r.sample(); break;
    case Stage::summarize: o = r.summarize(); break;
    case Stage::evaluate: o = r.evaluate(); break;
    case Stage::gen_pairs: o = r.gen_pairs(); break;
  }
  spdlog::info("{}: {}", to_string(s), o.skipped ? "up to date, skipped" : "done");
  return o;
}

std::vector<StageOutcome> Pipeline::run() {
  std::vector<StageOutcome> out;
  for (auto s : kRunStages) out.push_back(run_stage(s));
  return out;
}

void Pipeline::write_manifest(std::optional<Stage> failed) const {
  const fs::path out = config_.output_dir;
  json stages = json::object();
  for (auto s : {Stage::ingest, Stage::align_cache, Stage::opinions, Stage::candidates,
                 Stage::sample, Stage::summarize, Stage::evaluate, Stage::gen_pairs}) {
    const auto p = out / "stages" / (std::string(to_string(s)) + ".json");
    if (!fs::exists(p)) continue;
    auto j = json::parse(read_file(p), nullptr, false);
    if (j.is_discarded()) continue;
    stages[std::string(to_string(s))] = {{"input_hash", j.value("input_hash", "")},
                                         {"outputs", j.value("outputs", json::object())}};
  }
  std::string corpus_hash, summaries_hash;
  if (!config_.corpus.empty() && fs::exists(config_.corpus))
    corpus_hash = text::sha256_hex(read_file(config_.corpus));
  if (!config_.summaries.empty() && fs::exists(config_.summaries))
    summaries_hash = text::sha256_hex(read_file(config_.summaries));
  const json m = {{"version", kVersion},
                  {"config", config_},
                  {"seed", config_.seed},
                  {"inputs", {{"corpus", corpus_hash}, {"summaries", summaries_hash}}},
                  {"stages", stages},
                  {"failed_stage", failed ? json(std::string(to_string(*failed))) : json(nullptr)}};
  write_file(out / "manifest.json", dump(m));
}

}  // namespace rsum
