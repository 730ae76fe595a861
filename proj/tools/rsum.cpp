// rsum: rationale-based opinion summarization from the command line.

#include <spdlog/spdlog.h>

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rsum/error.hpp"
#include "rsum/pipeline.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;

struct Flags {
  std::string config, corpus, summaries, out, scorer, scorer_url, embedder, format;
  std::size_t min_reviews = 0, max_reviews = 0, l_max = 0, l_min = 0, min_set_size = 0;
  std::size_t k = 0, word_limit = 0, workers = 0, pairs_per_label = 0;
  int eta = 0, theta = 0;
  double beta = 0, temperature = 0, w_div = 0;
  bool use_clauses = true, no_word_limit = false, verbose = false;
  std::uint64_t seed = 0;
  std::vector<std::string> pred;
};

// Config file first, then only the flags the user actually gave.
rsum::PipelineConfig build_config(const CLI::App& app, const Flags& f) {
  rsum::PipelineConfig c;
  if (!f.config.empty()) c = rsum::load_config(f.config);
  auto given = [&](const char* name) { return app.count(name) > 0; };
  if (given("--corpus")) c.corpus = f.corpus;
  if (given("--summaries")) c.summaries = f.summaries;
  if (given("--out")) c.output_dir = f.out;
  if (given("--scorer")) c.scorer = f.scorer;
  if (given("--scorer-url")) c.remote_url = f.scorer_url;
  if (given("--embedder")) c.embedder = f.embedder;
  if (given("--min-reviews")) c.min_reviews = f.min_reviews;
  if (given("--max-reviews")) c.max_reviews = f.max_reviews;
  if (given("--use-clauses")) c.use_clauses = f.use_clauses;
  if (given("--l-max")) c.l_max = f.l_max;
  if (given("--l-min")) c.l_min = f.l_min;
  if (given("--beta")) c.beta = f.beta;
  if (given("--min-set-size")) c.min_set_size = f.min_set_size;
  if (given("--k")) c.gibbs.k = f.k;
  if (given("--eta")) c.gibbs.eta = f.eta;
  if (given("--theta")) c.gibbs.theta = f.theta;
  if (given("--temperature")) c.gibbs.temperature = f.temperature;
  if (given("--w-div")) c.gibbs.w_div = f.w_div;
  if (given("--word-limit")) c.word_limit = f.word_limit;
  if (f.no_word_limit) c.word_limit.reset();
  if (given("--format")) {
    auto parsed = rsum::parse_summary_format(f.format);
    if (!parsed) throw rsum::ValidationError("--format must be text or json");
    c.format = *parsed;
  }
  if (given("--seed")) c.seed = f.seed;
  if (given("--workers")) c.workers = f.workers;
  if (given("--pairs-per-label")) c.pairs_per_label = f.pairs_per_label;
  if (given("--pred")) {
    c.pred_dirs.clear();
    for (const auto& p : f.pred) c.pred_dirs.emplace_back(p);
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rationale-based opinion summarization"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;

  app.add_option("--config", f.config, "JSON config file; flags override it");
  app.add_option("--corpus", f.corpus, "Review corpus (JSONL)");
  app.add_option("--summaries", f.summaries, "Annotated summary sentences (JSONL)");
  app.add_option("--out", f.out, "Output directory");
  app.add_option("--scorer", f.scorer, "lexical | remote");
  app.add_option("--scorer-url", f.scorer_url, "Scorer service URL (else RSUM_SCORER_URL)");
  app.add_option("--embedder", f.embedder, "hash | remote");
  app.add_option("--min-reviews", f.min_reviews, "Drop entities with fewer reviews (20)");
  app.add_option("--max-reviews", f.max_reviews, "Downsample entities above this (200)");
  app.add_flag("--use-clauses,!--no-use-clauses", f.use_clauses, "Split sentences into clauses");
  app.add_option("--l-max", f.l_max, "Maximum clause length (20)");
  app.add_option("--l-min", f.l_min, "Minimum clause length (2)");
  app.add_option("--beta", f.beta, "Opinion similarity threshold (0.5)");
  app.add_option("--min-set-size", f.min_set_size, "Smallest kept candidate set (5)");
  app.add_option("--k", f.k, "Rationales per opinion (3)");
  app.add_option("--eta", f.eta, "Burn-in scans (100)");
  app.add_option("--theta", f.theta, "Recording scans (200)");
  app.add_option("--temperature", f.temperature, "Sampling temperature (0.01)");
  app.add_option("--w-div", f.w_div, "Diversity weight (0.1)");
  app.add_option("--word-limit", f.word_limit, "Summary word budget (none)");
  app.add_flag("--no-word-limit", f.no_word_limit, "Ignore a configured word budget");
  app.add_option("--format", f.format, "text | json");
  app.add_option("--seed", f.seed, "Run seed (0)");
  app.add_option("--workers", f.workers, "Entities processed in parallel (4)");
  app.add_option("--pairs-per-label", f.pairs_per_label, "gen-pairs: pairs per sentence and label");
  app.add_option("--pred", f.pred, "evaluate: extra system output directory (repeatable)");
  app.add_flag("-v,--verbose", f.verbose, "Log stage progress");

  std::optional<rsum::Stage> only;
  app.add_subcommand("run", "Run every stage from ingest to evaluate");
  for (auto s : {rsum::Stage::ingest, rsum::Stage::align_cache, rsum::Stage::opinions,
                 rsum::Stage::candidates, rsum::Stage::sample, rsum::Stage::summarize,
                 rsum::Stage::evaluate, rsum::Stage::gen_pairs}) {
    auto* sub = app.add_subcommand(std::string(rsum::to_string(s)), "Run the " +
                                   std::string(rsum::to_string(s)) + " stage");
    sub->callback([&only, s] { only = s; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }
  spdlog::set_level(f.verbose ? spdlog::level::info : spdlog::level::warn);

  std::optional<rsum::Pipeline> pipeline;
  try {
    pipeline.emplace(build_config(app, f));
  } catch (const rsum::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }

  std::optional<rsum::Stage> current;
  try {
    if (only) {
      current = only;
      pipeline->run_stage(*only);
    } else {
      for (auto s : rsum::kRunStages) {
        current = s;
        pipeline->run_stage(s);
      }
    }
    current.reset();
    pipeline->write_manifest();
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "error";
    if (current) std::cerr << " in " << rsum::to_string(*current);
    std::cerr << ": " << e.what() << '\n';
    try {
      pipeline->write_manifest(current);
    } catch (const std::exception& m) {
      std::cerr << "error: could not write manifest: " << m.what() << '\n';
    }
    const bool validation = dynamic_cast<const rsum::ValidationError*>(&e) != nullptr ||
                            dynamic_cast<const rsum::ParseError*>(&e) != nullptr ||
                            dynamic_cast<const rsum::ContractError*>(&e) != nullptr;
    return validation ? kValidation : kRuntime;
  }
}
