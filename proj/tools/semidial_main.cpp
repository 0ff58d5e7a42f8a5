// Command-line front end: train, evaluate, sweep, chat, gen-corpus.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "semidial/chat.hpp"
#include "semidial/error.hpp"
#include "semidial/experiment.hpp"

namespace fs = std::filesystem;
using namespace semidial;

namespace {

enum Exit { kOk = 0, kUsage = 1, kRunFailure = 2, kDataError = 3 };

// Flags shared by the subcommands. Each one maps onto a key of the JSON
// config, so a flag simply overrides the file.
struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<double> nu, sigma, alpha, lr;
  std::optional<std::size_t> epochs, batch_size, patience, workers, dialogues;
  std::optional<std::string> optimizer, pi_target;
  std::string corpus, ontology, db;

  void add_to(CLI::App& app) {
    app.add_option("--config", config, "JSON config with training and plan fields")->check(CLI::ExistingFile);
    app.add_option("--out", out, "output directory");
    app.add_option("--nu", nu, "pseudo-label confidence threshold");
    app.add_option("--sigma", sigma, "std of the embedding noise");
    app.add_option("--alpha", alpha, "weight of the consistency loss");
    app.add_option("--lr", lr, "learning rate");
    app.add_option("--optimizer", optimizer, "sgd or adam");
    app.add_option("--pi-target", pi_target, "clean_pred or gold");
    app.add_option("--epochs", epochs, "maximum number of epochs");
    app.add_option("--batch-size", batch_size, "dialogues per batch");
    app.add_option("--patience", patience, "early-stopping patience in epochs");
    app.add_option("--workers", workers, "parallel runs in a sweep");
    app.add_option("--dialogues", dialogues, "size of the generated toy corpus");
    app.add_option("--corpus", corpus, "corpus JSON (instead of the toy corpus)");
    app.add_option("--ontology", ontology, "ontology JSON");
    app.add_option("--db", db, "entity database JSON");
  }

  Json load() const {
    Json j = Json::object();
    if (!config.empty()) {
      std::ifstream in(config);
      try {
        j = Json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse " + config + ": " + e.what());
      }
      if (!j.is_object()) throw ConfigError(config + " must hold a JSON object");
    }
    if (nu) j["nu"] = *nu;
    if (sigma) j["sigma"] = *sigma;
    if (alpha) j["alpha"] = *alpha;
    if (lr) j["learning_rate"] = *lr;
    if (optimizer) j["optimizer"] = *optimizer;
    if (pi_target) j["pi_target"] = *pi_target;
    if (epochs) j["epochs"] = *epochs;
    if (batch_size) j["batch_size"] = *batch_size;
    if (patience) j["patience"] = *patience;
    if (workers) j["workers"] = *workers;
    if (dialogues) j["toy_corpus"]["dialogues"] = *dialogues;
    if (!out.empty()) j["out_dir"] = out;
    if (!corpus.empty() || !ontology.empty() || !db.empty()) {
      if (corpus.empty() || ontology.empty() || db.empty()) {
        throw ConfigError("--corpus, --ontology and --db must be given together");
      }
      j["corpus_files"] = {{"corpus", corpus}, {"ontology", ontology}, {"db", db}};
    }
    return j;
  }
};

void print_metrics(const MetricsReport& m) { std::cout << m.to_json().dump(2) << '\n'; }

int cmd_train(const Json& j, const std::optional<std::string>& mode,
              const std::optional<double>& fraction, const std::optional<std::uint64_t>& seed) {
  Json cfg = j;
  if (mode) cfg["mode"] = *mode;
  if (fraction) cfg["labelled_fraction"] = *fraction;
  if (seed) cfg["seed"] = *seed;
  const ExperimentPlan plan = ExperimentPlan::from_json(cfg);
  const ToyData data = load_plan_data(plan);
  const TrainingConfig& tc = plan.training;
  const fs::path dir = plan.out_dir;
  fs::create_directories(dir);
  std::ofstream(dir / "config.json") << cfg.dump(2) << '\n';
  std::cerr << "training " << to_string(tc.mode) << " fraction " << tc.labelled_fraction << " seed "
            << tc.seed << " -> " << dir << '\n';
  const RunRecord rec = run_one(tc, data.corpus, data.db, dir);
  if (rec.error) {
    std::cerr << "run failed: " << *rec.error << '\n';
    return kRunFailure;
  }
  std::cerr << "best epoch " << rec.best_epoch << ", " << rec.wall_seconds << " s\n";
  print_metrics(rec.metrics);
  return kOk;
}

int cmd_evaluate(const Json& j, const std::string& checkpoint, const std::string& split_name) {
  const ExperimentPlan plan = ExperimentPlan::from_json(j);
  const ToyData data = load_plan_data(plan);
  Network net = Network::load_checkpoint(checkpoint, data.corpus.ontology());
  Split split = Split::test;
  if (split_name == "train") split = Split::train;
  else if (split_name == "valid") split = Split::valid;
  const FrequencyBuckets buckets = FrequencyBuckets::from_corpus(
      split_labelled(data.corpus, plan.training.labelled_fraction, plan.training.seed));
  print_metrics(evaluate(net, data.corpus, data.db, split, &buckets));
  return kOk;
}

int cmd_sweep(Json j, const std::vector<std::string>& modes, const std::vector<double>& fractions,
              const std::vector<std::uint64_t>& seeds, const std::string& format) {
  if (!modes.empty()) j["modes"] = modes;
  if (!fractions.empty()) j["fractions"] = fractions;
  if (!seeds.empty()) j["seeds"] = seeds;
  const ExperimentPlan plan = ExperimentPlan::from_json(j);
  const ToyData data = load_plan_data(plan);
  fs::create_directories(plan.out_dir);
  std::ofstream(plan.out_dir / "plan.json") << plan.to_json().dump(2) << '\n';
  const auto records = run_sweep(plan, data.corpus, data.db, [](const RunRecord& r) {
    std::cerr << run_name(r.mode, r.fraction, r.seed) << ": ";
    if (r.error) std::cerr << "FAILED " << *r.error << '\n';
    else std::cerr << "jga " << r.metrics.joint_goal_accuracy << " success " << r.metrics.success_rate << '\n';
  });
  if (format == "csv" || format == "both") emit_report(records, ReportFormat::csv, plan.out_dir / "report.csv");
  if (format == "json" || format == "both") emit_report(records, ReportFormat::json, plan.out_dir / "report.json");
  std::ofstream(plan.out_dir / "curves.csv") << curves_csv(records);
  std::ofstream(plan.out_dir / "timings.csv") << timings_csv(records);
  std::size_t failed = 0;
  for (const auto& r : records) failed += r.error ? 1 : 0;
  std::cerr << records.size() - failed << " of " << records.size() << " runs finished, report in "
            << plan.out_dir << '\n';
  return failed == 0 ? kOk : kRunFailure;
}

int cmd_chat(const Json& j, const std::string& checkpoint, bool show_state) {
  const ExperimentPlan plan = ExperimentPlan::from_json(j);
  Ontology ontology;
  EntityDB db;
  if (plan.files) {
    ontology = Ontology::load(plan.files->ontology);
    db = EntityDB::load(plan.files->db, ontology);
  } else {
    ToyData toy = generate_toy_corpus(plan.toy);
    ontology = toy.corpus.ontology();
    db = std::move(toy.db);
  }
  Network net = Network::load_checkpoint(checkpoint, ontology);
  ChatSession chat(net, db, show_state);
  chat.run(std::cin, std::cout);
  return kOk;
}

int cmd_gen_corpus(const Json& j) {
  const ExperimentPlan plan = ExperimentPlan::from_json(j);
  const ToyData data = generate_toy_corpus(plan.toy);
  fs::create_directories(plan.out_dir);
  save_corpus(data.corpus, plan.out_dir / "corpus.json");
  data.corpus.ontology().save(plan.out_dir / "ontology.json");
  data.db.save(plan.out_dir / "db.json");
  std::cerr << data.corpus.dialogues().size() << " dialogues written to " << plan.out_dir << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised end-to-end task-oriented dialogue"};
  app.require_subcommand(1);
  CommonFlags flags;

  auto* train = app.add_subcommand("train", "train one model and evaluate it on the test split");
  std::optional<std::string> mode;
  std::optional<double> fraction;
  std::optional<std::uint64_t> seed;
  flags.add_to(*train);
  train->add_option("--mode", mode, "baseline, pseudo or pi");
  train->add_option("--fraction", fraction, "fraction of labelled training dialogues");
  train->add_option("--seed", seed, "random seed");

  auto* eval = app.add_subcommand("evaluate", "evaluate a checkpoint");
  CommonFlags eval_flags;
  std::string checkpoint;
  std::string split = "test";
  eval_flags.add_to(*eval);
  eval->add_option("--checkpoint", checkpoint, "checkpoint JSON")->required();
  eval->add_option("--split", split, "train, valid or test")->check(CLI::IsMember({"train", "valid", "test"}));
  eval->add_option("--fraction", fraction, "labelled fraction used for the frequency buckets");
  eval->add_option("--seed", seed, "seed used for the labelled split");

  auto* sweep = app.add_subcommand("sweep", "train every mode x fraction x seed combination");
  CommonFlags sweep_flags;
  std::vector<std::string> modes;
  std::vector<double> fractions;
  std::vector<std::uint64_t> seeds;
  std::string format = "both";
  sweep_flags.add_to(*sweep);
  sweep->add_option("--mode", modes, "modes to run")->delimiter(',');
  sweep->add_option("--fraction", fractions, "labelled fractions")->delimiter(',');
  sweep->add_option("--seed", seeds, "seeds")->delimiter(',');
  sweep->add_option("--format", format, "csv, json or both")->check(CLI::IsMember({"csv", "json", "both"}));

  auto* chat = app.add_subcommand("chat", "talk to a trained model on stdin");
  CommonFlags chat_flags;
  bool show_state = false;
  chat_flags.add_to(*chat);
  chat->add_option("--checkpoint", checkpoint, "checkpoint JSON")->required();
  chat->add_flag("--show-state", show_state, "print the belief state after every turn");

  auto* gen = app.add_subcommand("gen-corpus", "write the toy corpus, ontology and database");
  CommonFlags gen_flags;
  std::optional<std::uint64_t> corpus_seed;
  gen_flags.add_to(*gen);
  gen->add_option("--seed", corpus_seed, "toy corpus seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (train->parsed()) return cmd_train(flags.load(), mode, fraction, seed);
    if (eval->parsed()) {
      Json j = eval_flags.load();
      if (fraction) j["labelled_fraction"] = *fraction;
      if (seed) j["seed"] = *seed;
      return cmd_evaluate(j, checkpoint, split);
    }
    if (sweep->parsed()) return cmd_sweep(sweep_flags.load(), modes, fractions, seeds, format);
    if (chat->parsed()) return cmd_chat(chat_flags.load(), checkpoint, show_state);
    if (gen->parsed()) {
      Json j = gen_flags.load();
      if (corpus_seed) j["toy_corpus"]["seed"] = *corpus_seed;
      return cmd_gen_corpus(j);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const LoadError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRunFailure;
  }
  return kUsage;
}
