#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semidial/corpus.hpp"
#include "semidial/kb.hpp"
#include "semidial/metrics.hpp"
#include "semidial/toy_corpus.hpp"
#include "semidial/trainer.hpp"

namespace semidial {

struct CorpusFiles {
  std::filesystem::path corpus;
  std::filesystem::path ontology;
  std::filesystem::path db;
};

struct ExperimentPlan {
  std::vector<TrainingMode> modes = {TrainingMode::baseline, TrainingMode::pseudo, TrainingMode::pi};
  std::vector<double> fractions = {0.1, 0.3, 0.5, 0.7, 0.9, 1.0};
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  TrainingConfig training;  // mode, fraction and seed are overridden per run
  ToyCorpusSpec toy;
  std::optional<CorpusFiles> files;  // takes precedence over the toy corpus
  std::filesystem::path out_dir = "sweep";
  std::size_t workers = 1;

  void validate() const;
  // Training fields sit at the top level next to the plan fields.
  static ExperimentPlan from_json(const Json& j);
  Json to_json() const;
};

// Loads the plan's corpus files or generates its toy corpus.
ToyData load_plan_data(const ExperimentPlan& plan);

struct RunRecord {
  TrainingMode mode = TrainingMode::baseline;
  double fraction = 1.0;
  std::uint64_t seed = 0;
  std::string checkpoint;  // relative to the output directory
  MetricsReport metrics;
  std::size_t best_epoch = 0;
  double wall_seconds = 0.0;
  std::optional<std::string> error;  // set when the run aborted
};

// Trains and evaluates one configuration. Writes checkpoint, epoch log and
// test metrics below out_dir when it is non-empty.
RunRecord run_one(const TrainingConfig& config, const Corpus& corpus, const EntityDB& db,
                  const std::filesystem::path& out_dir);

std::string run_name(TrainingMode mode, double fraction, std::uint64_t seed);

using RunCallback = std::function<void(const RunRecord&)>;

// Every (mode, fraction, seed) combination, spread over plan.workers threads.
// Records come back in plan order whatever the completion order. A failing
// run is recorded with its reason and the sweep carries on.
std::vector<RunRecord> run_sweep(const ExperimentPlan& plan, const Corpus& corpus,
                                 const EntityDB& db, const RunCallback& on_done = {});

enum class ReportFormat { csv, json };

struct AggregateRow {
  TrainingMode mode = TrainingMode::baseline;
  double fraction = 0.0;
  std::size_t runs = 0;
  std::size_t failed = 0;
  std::map<std::string, double> mean;
  std::map<std::string, double> std;  // sample standard deviation, 0 for a single run
};

// Metric columns of a record, keyed by stable names.
std::map<std::string, double> metric_values(const MetricsReport& m);

std::vector<AggregateRow> aggregate(std::span<const RunRecord> records);

std::string report_csv(std::span<const RunRecord> records);
Json report_json(std::span<const RunRecord> records);
void emit_report(std::span<const RunRecord> records, ReportFormat format,
                 const std::filesystem::path& path);

// Metric vs fraction per mode, with the full-data baseline as reference line.
std::string curves_csv(std::span<const RunRecord> records);
std::string timings_csv(std::span<const RunRecord> records);

// Reads back the run rows of a report (metric fields and identity only).
std::vector<RunRecord> parse_report_json(const Json& j);
std::vector<RunRecord> parse_report_csv(const std::string& text);

}  // namespace semidial
