#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rsum/sampler.hpp"
#include "rsum/summarizer.hpp"

namespace rsum {

struct PipelineConfig {
  std::filesystem::path corpus;
  std::filesystem::path summaries;
  std::filesystem::path output_dir = "out";

  std::string scorer = "lexical";  // lexical | remote
  std::string remote_url;          // falls back to RSUM_SCORER_URL
  std::string embedder = "hash";   // hash | remote

  std::size_t min_reviews = 20;
  std::size_t max_reviews = 200;
  bool use_clauses = true;
  std::size_t l_max = 20;
  std::size_t l_min = 2;

  double beta = 0.5;
  std::size_t min_set_size = 5;
  GibbsConfig gibbs;  // k and the sampler schedule; gibbs.seed is unused

  std::optional<std::size_t> word_limit;
  SummaryFormat format = SummaryFormat::text;

  std::uint64_t seed = 0;
  std::size_t workers = 4;
  std::size_t pairs_per_label = 1;
  std::vector<std::filesystem::path> pred_dirs;

  // Throws ValidationError.
  void validate() const;
  // Remote endpoint from the config or the environment; empty when unset.
  std::string resolved_remote_url() const;
};

void to_json(nlohmann::json& j, const PipelineConfig& c);
// Unknown keys are rejected.
void from_json(const nlohmann::json& j, PipelineConfig& c);
PipelineConfig load_config(const std::filesystem::path& path);

enum class Stage { ingest, align_cache, opinions, candidates, sample, summarize, evaluate, gen_pairs };

std::string_view to_string(Stage s);
std::optional<Stage> parse_stage(std::string_view s);

// The stages `run` executes, in order.
inline constexpr Stage kRunStages[] = {Stage::ingest,     Stage::align_cache, Stage::opinions,
                                       Stage::candidates, Stage::sample,      Stage::summarize,
                                       Stage::evaluate};

struct StageOutcome {
  Stage stage;
  bool skipped = false;
  std::string input_hash;
};

class Pipeline {
 public:
  // Validates the config; nothing is written until a stage runs.
  explicit Pipeline(PipelineConfig config);

  // Runs one stage against persisted upstream artifacts, or skips it when
  // its recorded input hash and outputs are unchanged. A missing upstream
  // artifact raises StageError naming that stage.
  StageOutcome run_stage(Stage s);
  std::vector<StageOutcome> run();

  // config, versions, per-stage input hashes and output digests. Written
  // after every command; `failed` names the stage that threw, if any.
  void write_manifest(std::optional<Stage> failed = std::nullopt) const;

  const PipelineConfig& config() const { return config_; }

 private:
  PipelineConfig config_;
};

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rsum
