// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "rsum/candidates.hpp"
#include "rsum/centrality.hpp"
#include "rsum/corpus.hpp"
#include "rsum/evaluation.hpp"
#include "rsum/opinions.hpp"
#include "rsum/properties.hpp"
#include "rsum/sampler.hpp"
#include "rsum/text.hpp"
#include "test_support.hpp"

using namespace rsum;
using nlohmann::json;
namespace ts = testsupport;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and sizes.
constexpr int kGibbsFixtures = 50;
constexpr double kGibbsAgreement = 0.90;
constexpr double kGibbsSeconds = 60.0;
constexpr double kRelatednessTol = 1e-9;
constexpr double kSimplexTol = 1e-6;
constexpr int kGatePairs = 1000;
constexpr int kClusterGraphs = 100;
constexpr int kMaxOpinions = 50;
constexpr double kCentralityTol = 1e-6;
constexpr double kMetricTol = 1e-12;
constexpr double kSilhouetteTol = 1e-9;
constexpr int kMetricFixtures = 200;
constexpr std::size_t kWordLimit = 100;
constexpr std::size_t kMinSetSize = 5;
constexpr std::size_t kClauseMin = 2, kClauseMax = 20;

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;
  void require(bool ok, const std::string& what) {
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
    pass = pass && ok;
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------

Verdict gibbs_oracle() {
  Verdict v;
  const char* vocab[] = {"room", "clean", "staff", "friendly", "view", "bed", "quiet",
                         "pool", "desk", "breakfast", "coffee", "walk"};
  const auto t0 = std::chrono::steady_clock::now();
  int agree = 0;
  for (int f = 0; f < kGibbsFixtures; ++f) {
    std::mt19937_64 rng(1000 + f);
    const std::size_t n = 6 + rng() % 7;
    std::vector<std::string> ids;
    std::vector<TokenBag> bags;
    Eigen::VectorXd sal(static_cast<Eigen::Index>(n));
    std::uniform_real_distribution<double> u(0, 1);
    for (std::size_t i = 0; i < n; ++i) {
      ids.push_back("s" + std::to_string(i));
      sal(static_cast<Eigen::Index>(i)) = u(rng);
      std::string text;
      const auto len = 3 + rng() % 6;
      for (std::size_t w = 0; w < len; ++w) text += std::string(vocab[rng() % 12]) + " ";
      bags.push_back(make_bag(text));
    }
    const auto p = SamplingProblem::from_bags(ids, sal, bags);
    GibbsConfig cfg;  // defaults: k 3, eta 100, theta 200, temperature 0.01, w_div 0.1
    cfg.seed = 77 + f;
    const auto got = sample_rationales("fixture-" + std::to_string(f), p, cfg);
    const auto want = exact_map_group(p, cfg.k, cfg.w_div);
    if (got.unit_ids == group_key(p, want.members)) ++agree;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double rate = static_cast<double>(agree) / kGibbsFixtures;
  v.require(rate >= kGibbsAgreement, "agreement " + std::to_string(agree) + "/" +
                                         std::to_string(kGibbsFixtures) + " (need >= " +
                                         fmt(kGibbsAgreement) + ")");
  v.require(secs < kGibbsSeconds, "runtime " + fmt(secs) + " s (limit " + fmt(kGibbsSeconds) + ")");
  return v;
}

// ---------------------------------------------------------------------------

// Builds the per-entity alignment state exactly as the pipeline does.
struct EntityState {
  std::vector<SentenceUnit> units;
  std::vector<Opinion> opinions;
  std::unique_ptr<LexicalScorer> scorer;
  std::unique_ptr<JudgmentCache> cache;
  std::unique_ptr<Aligner> aligner;
  AlignmentTable table;
  std::vector<OpinionCluster> clusters;
  ClusterScores scores;
  std::vector<CandidateSet> sets;
};

std::vector<EntityState> toy_entities() {
  const auto corpus = filter_entities(load_corpus(ts::toy_corpus()), 20, 200, 0);
  std::map<std::string, std::vector<SummarySentence>> by_entity;
  for (auto& s : load_summary_sentences(ts::toy_summaries())) by_entity[s.entity_id].push_back(s);
  std::vector<EntityState> out;
  for (const auto& e : corpus.entities) {
    EntityState st;
    st.units = entity_units(e, true, {});
    st.opinions = extract_opinions(by_entity[e.entity_id]);
    st.scorer = std::make_unique<LexicalScorer>();
    for (const auto& u : st.units)
      if (u.absa) st.scorer->add(u.text, *u.absa);
    for (const auto& o : st.opinions) st.scorer->add(o.surface, o.annotation());
    st.cache = std::make_unique<JudgmentCache>();
    st.aligner = std::make_unique<Aligner>(*st.scorer, st.cache.get());
    st.table = compute_alignment_table(st.units, st.opinions, *st.aligner);
    std::vector<FeatureVector> vs;
    for (Eigen::Index k = 0; k < st.table.opinions(); ++k) vs.push_back(feature_vector(st.table, k));
    st.clusters = cluster_opinions(st.opinions, vs, 0.5);
    st.scores = cluster_scores(st.table, st.opinions, st.clusters);
    st.sets = build_candidate_sets(st.units, st.clusters, st.scores, kMinSetSize);
    out.push_back(std::move(st));
  }
  return out;
}

Verdict relatedness_normalization() {
  Verdict v;
  std::size_t members = 0;
  double worst = 0.0;
  for (const auto& st : toy_entities()) {
    for (const auto& set : st.sets) {
      for (auto idx : set.member_indices) {
        const auto row = static_cast<Eigen::Index>(idx);
        // G_s read from the alignment table directly.
        double sum = 0.0;
        for (std::size_t g = 0; g < st.clusters.size(); ++g) {
          bool aligned = false;
          for (const auto& o : st.clusters[g].members)
            for (std::size_t j = 0; j < st.opinions.size(); ++j)
              if (st.opinions[j].opinion_id == o.opinion_id &&
                  st.table.aligns(row, static_cast<Eigen::Index>(j)))
                aligned = true;
          if (aligned) sum += relatedness(st.scores, row, static_cast<Eigen::Index>(g));
        }
        worst = std::max(worst, std::abs(sum - 1.0));
        ++members;
      }
    }
  }
  v.require(members > 0, std::to_string(members) + " candidate members checked");
  v.require(worst <= kRelatednessTol, "max |sum - 1| = " + fmt(worst));
  return v;
}

// ---------------------------------------------------------------------------

Verdict simplex_and_gate() {
  Verdict v;
  const char* aspects[] = {"rooms", "staff", "food", "location"};
  const Sentiment sents[] = {Sentiment::positive, Sentiment::negative, Sentiment::neutral};
  const char* words[] = {"room", "clean", "staff", "rude", "view", "great", "bed", "cold",
                         "coffee", "fresh", "area", "remote"};
  std::mt19937_64 rng(2024);
  LexicalScorer lex;
  std::vector<std::pair<std::string, AbsaAnnotation>> texts;
  for (int i = 0; i < 200; ++i) {
    std::string t = "t" + std::to_string(i);
    for (int w = 0; w < 4; ++w) t += std::string(" ") + words[rng() % 12];
    AbsaAnnotation a{aspects[rng() % 4], sents[rng() % 3], {}};
    lex.add(t, a);
    texts.emplace_back(t, a);
  }
  JudgmentCache cache;
  Aligner aligner(lex, &cache);
  int invalid = 0, leaks = 0, differing = 0;
  for (int i = 0; i < kGatePairs; ++i) {
    const auto& [x, ax] = texts[rng() % texts.size()];
    const auto& [y, ay] = texts[rng() % texts.size()];
    const auto j = aligner.judge(x, y);
    if (!j.is_valid(kSimplexTol)) ++invalid;
    if (ax.sentiment != ay.sentiment) {
      ++differing;
      if (aligner.p_align(x, y) != 0.0 || aligner.aligns(x, y)) ++leaks;
    }
  }
  v.require(invalid == 0, std::to_string(invalid) + " of " + std::to_string(kGatePairs) +
                              " judgments off the simplex (tol " + fmt(kSimplexTol) + ")");
  v.require(leaks == 0 && differing > 0, std::to_string(leaks) + " of " +
                                             std::to_string(differing) +
                                             " differing-sentiment pairs with p_align != 0");
  return v;
}

// ---------------------------------------------------------------------------

Verdict clustering_oracle() {
  Verdict v;
  int mismatches = 0, monotone_breaks = 0;
  const std::vector<double> betas{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  for (int g = 0; g < kClusterGraphs; ++g) {
    std::mt19937_64 rng(500 + g);
    const int m = 1 + static_cast<int>(rng() % kMaxOpinions);
    const Eigen::Index dim = 10 + static_cast<Eigen::Index>(rng() % 30);
    std::vector<Opinion> ops;
    std::vector<FeatureVector> vs;
    std::vector<std::map<std::size_t, double>> dense;
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int i = 0; i < m; ++i) {
      Opinion o;
      o.opinion_id = o.surface = "op" + std::to_string(1000 + i);
      ops.push_back(o);
      FeatureVector f(dim);
      std::map<std::size_t, double> d;
      for (Eigen::Index k = 0; k < dim; ++k)
        if (rng() % 5 == 0) f.insert(k) = d[static_cast<std::size_t>(k)] = u(rng);
      vs.push_back(f);
      dense.push_back(d);
    }
    std::vector<std::vector<double>> sim(m, std::vector<double>(m, 1.0));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        if (i != j) sim[i][j] = ts::map_cosine(dense[i], dense[j]);

    std::set<std::set<std::size_t>> previous;
    for (std::size_t b = 0; b < betas.size(); ++b) {
      const auto clusters = cluster_opinions(ops, vs, betas[b]);
      std::set<std::set<std::size_t>> got;
      for (const auto& c : clusters) {
        std::set<std::size_t> block;
        for (const auto& o : c.members) block.insert(std::stoul(o.opinion_id.substr(2)) - 1000);
        got.insert(block);
      }
      if (got != ts::closure_partition(sim, betas[b])) {
        ++mismatches;
      }
      if (b > 0 && !ts::refines(got, previous)) ++monotone_breaks;
      previous = got;
    }
  }
  v.require(mismatches == 0, std::to_string(mismatches) + " partitions differ from closure over " +
                                 std::to_string(kClusterGraphs) + " graphs x " +
                                 std::to_string(betas.size()) + " thresholds");
  v.require(monotone_breaks == 0,
            std::to_string(monotone_breaks) + " beta steps where the partition coarsened");
  return v;
}

// ---------------------------------------------------------------------------

Verdict centrality() {
  Verdict v;
  double uniform_err = 0.0;
  for (int n : {2, 3, 10, 40}) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Constant(n, n, 0.7);
    w.diagonal().setZero();
    const auto r = weighted_pagerank(w);
    uniform_err = std::max(uniform_err, (r.scores.array() - 1.0 / n).abs().maxCoeff());
  }
  v.require(uniform_err <= kCentralityTol, "uniform complete graph max error " + fmt(uniform_err));

  double sum_err = 0.0, oracle_err = 0.0;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 15;
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    std::vector<std::vector<double>> plain(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (u(rng) < 0.5) w(i, j) = w(j, i) = plain[i][j] = plain[j][i] = u(rng);
    const auto r = weighted_pagerank(w);
    sum_err = std::max(sum_err, std::abs(r.scores.sum() - 1.0));
    const auto o = ts::power_iteration(plain);
    for (int i = 0; i < n; ++i) oracle_err = std::max(oracle_err, std::abs(r.scores(i) - o[i]));
  }
  v.require(sum_err <= kCentralityTol, "scores sum to 1, max error " + fmt(sum_err));

  Eigen::Matrix3d path = Eigen::Matrix3d::Zero();
  path(0, 1) = path(1, 0) = path(1, 2) = path(2, 1) = 1.0;
  const auto r = weighted_pagerank(path);
  const auto o = ts::power_iteration({{0, 1, 0}, {1, 0, 1}, {0, 1, 0}});
  double path_err = 0.0;
  for (int i = 0; i < 3; ++i) path_err = std::max(path_err, std::abs(r.scores(i) - o[i]));
  v.require(path_err <= kCentralityTol, "3-node path vs power iteration " + fmt(path_err));
  v.notes.push_back("info random graphs vs power iteration " + fmt(oracle_err));
  return v;
}

// ---------------------------------------------------------------------------

Verdict metrics() {
  Verdict v;
  const char* vocab[] = {"room", "clean", "staff", "friendly", "view", "bed", "quiet", "pool",
                         "desk", "breakfast", "coffee", "walk", "market", "station", "bar"};
  std::mt19937_64 rng(31);
  auto sentence = [&] {
    std::string s;
    const auto len = 2 + rng() % 6;
    for (std::size_t i = 0; i < len; ++i) s += std::string(vocab[rng() % 15]) + " ";
    return s;
  };
  int out_of_bounds = 0, spec_drops = 0, pop_drops = 0, checked = 0;
  double worst_pop_drop = 0.0;
  for (int f = 0; f < kMetricFixtures; ++f) {
    // Documents are candidate sets of sentences.
    const int ndocs = 2 + static_cast<int>(rng() % 4);
    std::vector<std::vector<std::string>> docs_text(ndocs);
    std::vector<std::vector<std::string>> docs(ndocs);
    for (int d = 0; d < ndocs; ++d) {
      for (int s = 0; s < 6; ++s) docs_text[d].push_back(sentence());
      for (const auto& s : docs_text[d])
        for (auto& t : normalize_tokens(s)) docs[d].push_back(t);
    }
    const auto table = TfidfTable::build(docs);
    std::vector<std::string> ids;
    std::vector<std::vector<std::string>> excluded(ndocs);
    for (int d = 0; d < ndocs; ++d) ids.push_back("G" + std::to_string(d));
    const auto kws = extract_keywords(ids, table, excluded);
    const int d = static_cast<int>(rng() % ndocs);
    std::vector<std::string> rationales{docs_text[d][0]};
    for (std::size_t step = 1; step < docs_text[d].size(); ++step) {
      const auto spec0 = metric_key_spec(rationales, kws[d]);
      const auto pop0 = metric_key_pop(rationales, kws[d], table.scores[d]);
      auto grown = rationales;
      grown.push_back(docs_text[d][step]);
      const auto spec1 = metric_key_spec(grown, kws[d]);
      const auto pop1 = metric_key_pop(grown, kws[d], table.scores[d]);
      for (const auto& m : {spec0, pop0, spec1, pop1})
        if (m && (*m < -kMetricTol || *m > 1.0 + kMetricTol)) ++out_of_bounds;
      if (spec0 && spec1 && *spec1 < *spec0 - kMetricTol) ++spec_drops;
      if (pop0 && pop1 && *pop1 < *pop0 - kMetricTol) {
        ++pop_drops;
        worst_pop_drop = std::max(worst_pop_drop, *pop0 - *pop1);
      }
      ++checked;
      rationales = std::move(grown);
    }
  }
  v.require(out_of_bounds == 0, "key_spec and key_pop within [0, 1]: " +
                                    std::to_string(out_of_bounds) + " violations");
  v.require(spec_drops == 0, "key_spec never decreases when a rationale is added: " +
                                 std::to_string(spec_drops) + " of " + std::to_string(checked) +
                                 " additions decreased it");
  v.require(pop_drops == 0, "key_pop never decreases when a rationale is added: " +
                                std::to_string(pop_drops) + " of " + std::to_string(checked) +
                                " additions decreased it (largest drop " + fmt(worst_pop_drop) +
                                ")");

  HashEmbedder e;
  std::vector<std::string> pair{"the room was clean and quiet", "the room was clean and quiet"};
  const double div = *metric_emb_div(pair, e);
  v.require(std::abs(div) <= kMetricTol, "emb_div of an identical pair = " + fmt(div));

  const double xs[] = {0, 1, 4, 6};
  Eigen::MatrixXd dist(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) dist(i, j) = std::abs(xs[i] - xs[j]);
  std::vector<int> labels{0, 0, 1, 1};
  const double hand = (4.0 / 5.0 + 3.0 / 4.0 + 1.5 / 3.5 + 3.5 / 5.5) / 4.0;
  const double sil = *silhouette_from_distances(dist, labels);
  v.require(std::abs(sil - hand) <= kSilhouetteTol,
            "silhouette fixture " + fmt(sil) + " vs hand " + fmt(hand));
  return v;
}

// ---------------------------------------------------------------------------

Verdict segmentation() {
  Verdict v;
  const auto trees = ts::read_lines(ts::test_data("segmentation_trees.txt"));
  const auto golden = ts::read_file(ts::test_data("segmentation_golden.txt"));
  std::string rendered;
  int bad_len = 0, single = 0, split = 0;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    rendered += ts::golden_line(i, trees[i]) + "\n";
    const auto seg = segment_tree(parse_tree(trees[i]), {});
    if (seg.whole_sentence) continue;
    ++split;
    if (seg.clauses.size() < 2) ++single;
    for (const auto& c : seg.clauses)
      if (c.size() < kClauseMin || c.size() > kClauseMax) ++bad_len;
  }
  v.require(trees.size() == 50, std::to_string(trees.size()) + " fixture trees");
  v.require(bad_len == 0, "clause lengths within [2, 20]: " + std::to_string(bad_len) +
                              " violations over " + std::to_string(split) + " split sentences");
  v.require(single == 0 && segment_tree(parse_tree(trees.at(0)), {}).whole_sentence,
            "single-clause sentences stay whole");
  v.require(rendered == golden, "byte-identical to committed goldens");
  return v;
}

// ---------------------------------------------------------------------------

int cli(const std::string& args) {
  const std::string cmd = std::string(RSUM_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::map<std::string, std::string> outputs(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& [rel, body] : ts::snapshot(dir))
    if (rel.starts_with("summarize/") || rel.starts_with("report.") ||
        rel.find(".summary.") != std::string::npos)
      out[rel] = body;
  return out;
}

Verdict end_to_end() {
  Verdict v;
  ts::TempDir a("acc-a"), b("acc-b"), c("acc-c");
  auto args = [](const fs::path& out) {
    return "--corpus " + ts::toy_corpus().string() + " --summaries " +
           ts::toy_summaries().string() + " --out " + out.string() +
           " --scorer lexical --seed 2024 --word-limit " + std::to_string(kWordLimit);
  };
  bool ok = cli("run " + args(a.path())) == 0 && cli("run " + args(b.path())) == 0;
  for (const char* stage : {"ingest", "align-cache", "opinions", "candidates", "sample",
                            "summarize", "evaluate"})
    ok = ok && cli(std::string(stage) + " " + args(c.path())) == 0;
  v.require(ok, "all CLI invocations exit 0");
  const auto oa = outputs(a.path());
  v.require(oa.size() >= 8, std::to_string(oa.size()) + " summary and report files");
  v.require(oa == outputs(b.path()), "two monolithic runs byte-identical");
  v.require(oa == outputs(c.path()), "stage-wise run byte-identical to monolithic");

  std::size_t worst = 0;
  int summaries = 0;
  for (const auto& e : fs::directory_iterator(a.path())) {
    const auto name = e.path().filename().string();
    if (name.find(".summary.txt") == std::string::npos) continue;
    ++summaries;
    std::size_t words = 0;
    for (const auto& line : ts::read_lines(e.path())) {
      std::istringstream in(line);
      for (std::string w; in >> w;)
        if (w != "|") ++words;
    }
    worst = std::max(worst, words);
  }
  v.require(summaries == 3 && worst <= kWordLimit,
            std::to_string(summaries) + " summaries, longest " + std::to_string(worst) +
                " words (limit " + std::to_string(kWordLimit) + ")");

  std::size_t smallest = SIZE_MAX, sets = 0;
  for (const auto& e : fs::directory_iterator(a.path() / "candidates")) {
    const auto j = json::parse(ts::read_file(e.path()));
    for (const auto& s : j["sets"]) {
      smallest = std::min(smallest, s["members"].size());
      ++sets;
    }
  }
  std::size_t sampled = 0;
  for (const auto& e : fs::directory_iterator(a.path() / "sample"))
    sampled += json::parse(ts::read_file(e.path()))["rationale_sets"].size();
  v.require(sets > 0 && smallest >= kMinSetSize && sampled == sets,
            std::to_string(sets) + " candidate sets, smallest " + std::to_string(smallest) +
                " (minimum " + std::to_string(kMinSetSize) + ")");
  return v;
}

// ---------------------------------------------------------------------------

struct RawAnn {
  std::string text, aspect, sentiment;
  std::vector<std::pair<std::string, std::string>> pairs;
};

Verdict pair_generation() {
  Verdict v;
  ts::TempDir out("acc-pairs");
  const std::size_t per_label = 1;
  const bool ran = cli("gen-pairs --corpus " + ts::toy_corpus().string() + " --summaries " +
                       ts::toy_summaries().string() + " --out " + out.path().string() +
                       " --pairs-per-label " + std::to_string(per_label)) == 0;
  v.require(ran, "gen-pairs exits 0");

  // Annotations re-read from the raw corpus file.
  std::vector<RawAnn> sents;
  for (const auto& line : ts::read_lines(ts::toy_corpus())) {
    const auto review = json::parse(line);
    for (const auto& s : review["sentences"]) {
      if (!s.contains("absa") || s["absa"].is_null()) continue;
      RawAnn a{s["text"], s["absa"]["aspect"], s["absa"]["sentiment"], {}};
      for (const auto& p : s["absa"]["pairs"]) a.pairs.emplace_back(p[0], p[1]);
      sents.push_back(std::move(a));
    }
  }
  auto surfaces = [](const RawAnn& a) {
    std::set<std::string> out;
    for (auto& [n, adj] : a.pairs) out.insert(text::to_lower(n) + " is " + text::to_lower(adj));
    return out;
  };
  auto rule = [](const std::string& label, const RawAnn& x, const RawAnn& y) {
    return ts::satisfies_pair_rule(label, {x.aspect, y.aspect, x.sentiment, y.sentiment});
  };

  std::map<std::pair<std::string, std::string>, std::size_t> emitted;
  int violations = 0, total = 0;
  for (const auto& line : ts::read_lines(out.path() / "pairs.jsonl")) {
    const auto p = json::parse(line);
    const std::string x = p["x"], y = p["y"], kind = p["kind"], label = p["label"];
    ++emitted[{kind, label}];
    ++total;
    bool ok = false;
    for (const auto& sx : sents) {
      if (sx.text != x) continue;
      if (kind == "sent_opinion" && label == "alignment") {
        ok = ok || surfaces(sx).contains(y);
        continue;
      }
      for (const auto& sy : sents) {
        if (&sy == &sx) continue;
        const bool matches = kind == "sent_sent" ? sy.text == y : surfaces(sy).contains(y);
        if (matches && rule(label, sx, sy)) ok = true;
      }
    }
    if (!ok) ++violations;
  }
  v.require(total > 0 && violations == 0,
            std::to_string(violations) + " of " + std::to_string(total) + " pairs break their rule");

  // Expected count per slot: min(per_label, eligible partners) summed over sentences.
  std::map<std::pair<std::string, std::string>, std::size_t> expected;
  for (std::size_t i = 0; i < sents.size(); ++i) {
    for (const std::string kind : {"sent_opinion", "sent_sent"}) {
      for (const std::string label : {"alignment", "neutral", "opposite"}) {
        std::size_t avail = 0;
        if (kind == "sent_opinion" && label == "alignment") {
          avail = sents[i].pairs.size();
        } else {
          for (std::size_t j = 0; j < sents.size(); ++j) {
            if (j == i || (kind == "sent_opinion" && sents[j].pairs.empty())) continue;
            const bool same_sent = sents[j].sentiment == sents[i].sentiment;
            bool ok = rule(label, sents[i], sents[j]);
            if (label == "neutral") ok = ok && same_sent && sents[j].text != sents[i].text;
            if (label == "opposite") ok = ok && sents[j].text != sents[i].text;
            if (ok) ++avail;
          }
        }
        expected[{kind, label}] += std::min(per_label, avail);
      }
    }
  }
  bool balanced = true;
  std::string detail;
  for (const auto& [slot, want] : expected) {
    const auto got = emitted[slot];
    balanced = balanced && got == want;
    detail += " " + slot.first + "/" + slot.second + "=" + std::to_string(got) + "/" +
              std::to_string(want);
  }
  v.require(balanced, "emitted/available per slot:" + detail);
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"gibbs-oracle-agreement", gibbs_oracle},
      {"relatedness-normalization", relatedness_normalization},
      {"probability-simplex-and-gate", simplex_and_gate},
      {"clustering-oracle", clustering_oracle},
      {"centrality", centrality},
      {"metric-bounds-and-monotonicity", metrics},
      {"segmentation-conformance", segmentation},
      {"end-to-end-golden-run", end_to_end},
      {"pair-generation-conformance", pair_generation},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << "\n";
    for (const auto& n : v.notes) std::cout << "    " << n << "\n";
    if (!v.pass) ++failed;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
