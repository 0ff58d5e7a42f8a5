#include "semidial/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "semidial/error.hpp"

namespace semidial {

namespace fs = std::filesystem;

void ExperimentPlan::validate() const {
  if (modes.empty()) throw ConfigError("plan: at least one mode is required");
  if (fractions.empty()) throw ConfigError("plan: at least one fraction is required");
  if (seeds.empty()) throw ConfigError("plan: at least one seed is required");
  for (double f : fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("plan: fractions must lie in [0, 1]");
  }
  if (!std::is_sorted(fractions.begin(), fractions.end())) {
    throw ConfigError("plan: fractions must be sorted ascending");
  }
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ConfigError("plan: seeds must be unique");
  }
  if (workers == 0) throw ConfigError("plan: workers must be at least 1");
  training.validate();
  toy.validate();
}

ExperimentPlan ExperimentPlan::from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("plan must be a JSON object");
  ExperimentPlan p;
  p.training = TrainingConfig::from_json(j);
  try {
    if (j.contains("modes")) {
      p.modes.clear();
      for (const auto& m : j.at("modes")) p.modes.push_back(training_mode_from_string(m.get<std::string>()));
    }
    p.fractions = j.value("fractions", p.fractions);
    p.seeds = j.value("seeds", p.seeds);
    if (j.contains("toy_corpus")) p.toy = ToyCorpusSpec::from_json(j.at("toy_corpus"));
    if (j.contains("corpus_files")) {
      const auto& f = j.at("corpus_files");
      p.files = CorpusFiles{f.at("corpus").get<std::string>(), f.at("ontology").get<std::string>(),
                            f.at("db").get<std::string>()};
    }
    if (j.contains("out_dir")) p.out_dir = j.at("out_dir").get<std::string>();
    p.workers = j.value("workers", p.workers);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("plan: ") + e.what());
  }
  p.validate();
  return p;
}

Json ExperimentPlan::to_json() const {
  Json j = training.to_json();
  Json m = Json::array();
  for (auto mode : modes) m.push_back(std::string(to_string(mode)));
  j["modes"] = m;
  j["fractions"] = fractions;
  j["seeds"] = seeds;
  j["toy_corpus"] = toy.to_json();
  if (files) {
    j["corpus_files"] = {{"corpus", files->corpus.string()},
                         {"ontology", files->ontology.string()},
                         {"db", files->db.string()}};
  }
  j["out_dir"] = out_dir.string();
  j["workers"] = workers;
  return j;
}

ToyData load_plan_data(const ExperimentPlan& plan) {
  if (plan.files) {
    Ontology ontology = Ontology::load(plan.files->ontology);
    Corpus corpus = load_corpus(plan.files->corpus, plan.files->ontology);
    EntityDB db = EntityDB::load(plan.files->db, ontology);
    return {std::move(corpus), std::move(db)};
  }
  return generate_toy_corpus(plan.toy);
}

std::string run_name(TrainingMode mode, double fraction, std::uint64_t seed) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s_f%.2f_s%llu", std::string(to_string(mode)).c_str(), fraction,
                static_cast<unsigned long long>(seed));
  return buf;
}

RunRecord run_one(const TrainingConfig& config, const Corpus& corpus, const EntityDB& db,
                  const fs::path& out_dir) {
  RunRecord rec;
  rec.mode = config.mode;
  rec.fraction = config.labelled_fraction;
  rec.seed = config.seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    std::ofstream log;
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      log.open(out_dir / "train_log.jsonl");
    }
    TrainingResult result = train(config, corpus, db, [&](const EpochRecord& r) {
      if (log) log << r.to_json().dump() << '\n';
    });
    const Corpus labelled = split_labelled(corpus, config.labelled_fraction, config.seed);
    const FrequencyBuckets buckets = FrequencyBuckets::from_corpus(labelled);
    rec.metrics = evaluate(result.network, corpus, db, Split::test, &buckets);
    rec.best_epoch = result.best_epoch;
    if (!out_dir.empty()) {
      result.network.save_checkpoint(out_dir / "checkpoint.json");
      rec.checkpoint = (out_dir / "checkpoint.json").string();
      std::ofstream(out_dir / "metrics.json") << rec.metrics.to_json().dump(2) << '\n';
    }
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::vector<RunRecord> run_sweep(const ExperimentPlan& plan, const Corpus& corpus,
                                 const EntityDB& db, const RunCallback& on_done) {
  plan.validate();
  std::vector<TrainingConfig> configs;
  for (auto mode : plan.modes) {
    for (double f : plan.fractions) {
      for (auto seed : plan.seeds) {
        TrainingConfig c = plan.training;
        c.mode = mode;
        c.labelled_fraction = f;
        c.seed = seed;
        configs.push_back(c);
      }
    }
  }
  std::vector<RunRecord> records(configs.size());
  std::atomic<std::size_t> next{0};
  std::mutex callback_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      const auto& c = configs[i];
      const fs::path dir =
          plan.out_dir.empty() ? fs::path() : plan.out_dir / "runs" / run_name(c.mode, c.labelled_fraction, c.seed);
      records[i] = run_one(c, corpus, db, dir);
      if (!plan.out_dir.empty() && !records[i].checkpoint.empty()) {
        records[i].checkpoint = fs::relative(records[i].checkpoint, plan.out_dir).generic_string();
      }
      if (on_done) {
        std::lock_guard lock(callback_mutex);
        on_done(records[i]);
      }
    }
  };
  const std::size_t n = std::min(plan.workers, configs.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return records;
}

std::map<std::string, double> metric_values(const MetricsReport& m) {
  std::map<std::string, double> out;
  out["joint_goal_accuracy"] = m.joint_goal_accuracy;
  out["success_rate"] = m.success_rate;
  out["slot_value_accuracy"] = m.slot_value_accuracy;
  for (const auto& [label, acc] : m.bucket_accuracy) out["bucket:" + label] = acc;
  for (const auto& [domain, rate] : m.per_domain_success) out["domain_success:" + domain] = rate;
  return out;
}

namespace {

double round4(double x) { return std::round(x * 1e4) / 1e4; }

std::string fmt4(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

// Column order: headline metrics, buckets in their natural order, then
// domains alphabetically.
std::vector<std::string> metric_columns(std::span<const RunRecord> records) {
  std::vector<std::string> cols = {"joint_goal_accuracy", "success_rate", "slot_value_accuracy"};
  for (auto label : FrequencyBuckets::kLabels) cols.push_back("bucket:" + std::string(label));
  std::set<std::string> domains;
  for (const auto& r : records) {
    for (const auto& [d, _] : r.metrics.per_domain_success) domains.insert(d);
  }
  for (const auto& d : domains) cols.push_back("domain_success:" + d);
  return cols;
}

bool same_group(const RunRecord& r, const AggregateRow& a) {
  return r.mode == a.mode && r.fraction == a.fraction;
}

void require_records(std::span<const RunRecord> records) {
  if (records.empty()) throw ReportError("report: no run records");
}

}  // namespace

std::vector<AggregateRow> aggregate(std::span<const RunRecord> records) {
  std::vector<AggregateRow> rows;
  for (const auto& r : records) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const AggregateRow& a) { return same_group(r, a); });
    if (it == rows.end()) {
      rows.push_back({r.mode, r.fraction, 0, 0, {}, {}});
      it = rows.end() - 1;
    }
  }
  for (auto& row : rows) {
    std::map<std::string, std::vector<double>> values;
    for (const auto& r : records) {
      if (!same_group(r, row)) continue;
      if (r.error) {
        ++row.failed;
        continue;
      }
      ++row.runs;
      for (const auto& [k, v] : metric_values(r.metrics)) values[k].push_back(v);
    }
    for (const auto& [k, vs] : values) {
      double mean = 0.0;
      for (double v : vs) mean += v;
      mean /= static_cast<double>(vs.size());
      double ss = 0.0;
      for (double v : vs) ss += (v - mean) * (v - mean);
      row.mean[k] = mean;
      row.std[k] = vs.size() > 1 ? std::sqrt(ss / static_cast<double>(vs.size() - 1)) : 0.0;
    }
  }
  return rows;
}

std::string report_csv(std::span<const RunRecord> records) {
  require_records(records);
  const auto cols = metric_columns(records);
  std::ostringstream out;
  out << "row_type,mode,fraction,seed,runs,failed,best_epoch,checkpoint,error";
  for (const auto& c : cols) out << ',' << c << ',' << c << "_std";
  out << '\n';
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
      if (ch == '"') q += '"';
      q += ch == '\n' ? ' ' : ch;
    }
    return q + "\"";
  };
  for (const auto& r : records) {
    const auto m = metric_values(r.metrics);
    out << "run," << to_string(r.mode) << ',' << fmt4(r.fraction) << ',' << r.seed << ",1,"
        << (r.error ? 1 : 0) << ',' << r.best_epoch << ',' << quote(r.checkpoint) << ','
        << quote(r.error.value_or(""));
    for (const auto& c : cols) {
      out << ',';
      if (!r.error && m.count(c)) out << fmt4(m.at(c));
      out << ',';
    }
    out << '\n';
  }
  for (const auto& a : aggregate(records)) {
    out << "aggregate," << to_string(a.mode) << ',' << fmt4(a.fraction) << ",," << a.runs << ','
        << a.failed << ",,,";
    for (const auto& c : cols) {
      out << ',';
      if (a.mean.count(c)) out << fmt4(a.mean.at(c)) << ',' << fmt4(a.std.at(c));
      else out << ',';
    }
    out << '\n';
  }
  return out.str();
}

Json report_json(std::span<const RunRecord> records) {
  require_records(records);
  Json runs = Json::array();
  for (const auto& r : records) {
    Json metrics = Json::object();
    if (!r.error) {
      for (const auto& [k, v] : metric_values(r.metrics)) metrics[k] = round4(v);
    }
    Json row = {{"mode", std::string(to_string(r.mode))},
                {"fraction", round4(r.fraction)},
                {"seed", r.seed},
                {"best_epoch", r.best_epoch},
                {"checkpoint", r.checkpoint},
                {"status", r.error ? "failed" : "ok"},
                {"metrics", metrics}};
    if (r.error) row["error"] = *r.error;
    runs.push_back(row);
  }
  Json aggs = Json::array();
  for (const auto& a : aggregate(records)) {
    Json mean = Json::object(), sd = Json::object();
    for (const auto& [k, v] : a.mean) mean[k] = round4(v);
    for (const auto& [k, v] : a.std) sd[k] = round4(v);
    aggs.push_back({{"mode", std::string(to_string(a.mode))},
                    {"fraction", round4(a.fraction)},
                    {"runs", a.runs},
                    {"failed", a.failed},
                    {"mean", mean},
                    {"std", sd}});
  }
  return Json{{"runs", runs}, {"aggregates", aggs}};
}

void emit_report(std::span<const RunRecord> records, ReportFormat format, const fs::path& path) {
  require_records(records);
  std::ofstream out(path);
  if (!out) throw ReportError("report: cannot write " + path.string());
  if (format == ReportFormat::csv) {
    out << report_csv(records);
  } else {
    out << report_json(records).dump(2) << '\n';
  }
}

std::string curves_csv(std::span<const RunRecord> records) {
  require_records(records);
  std::ostringstream out;
  out << "series,fraction,runs,joint_goal_accuracy,joint_goal_accuracy_std,success_rate,success_rate_std\n";
  auto row = [&](const std::string& series, const AggregateRow& a) {
    out << series << ',' << fmt4(a.fraction) << ',' << a.runs;
    for (const char* k : {"joint_goal_accuracy", "success_rate"}) {
      if (a.mean.count(k)) out << ',' << fmt4(a.mean.at(k)) << ',' << fmt4(a.std.at(k));
      else out << ",,";
    }
    out << '\n';
  };
  const auto aggs = aggregate(records);
  for (const auto& a : aggs) row(std::string(to_string(a.mode)), a);
  for (const auto& a : aggs) {
    if (a.mode == TrainingMode::baseline && a.fraction == 1.0) row("reference_full_baseline", a);
  }
  return out.str();
}

std::string timings_csv(std::span<const RunRecord> records) {
  std::ostringstream out;
  out << "mode,fraction,seed,wall_seconds\n";
  for (const auto& r : records) {
    out << to_string(r.mode) << ',' << fmt4(r.fraction) << ',' << r.seed << ','
        << fmt4(r.wall_seconds) << '\n';
  }
  return out.str();
}

namespace {

void apply_metric(MetricsReport& m, const std::string& key, double v) {
  if (key == "joint_goal_accuracy") m.joint_goal_accuracy = v;
  else if (key == "success_rate") m.success_rate = v;
  else if (key == "slot_value_accuracy") m.slot_value_accuracy = v;
  else if (key.rfind("bucket:", 0) == 0) m.bucket_accuracy[key.substr(7)] = v;
  else if (key.rfind("domain_success:", 0) == 0) m.per_domain_success[key.substr(15)] = v;
  else throw ReportError("report: unknown metric column '" + key + "'");
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<RunRecord> parse_report_json(const Json& j) {
  std::vector<RunRecord> out;
  try {
    for (const auto& row : j.at("runs")) {
      RunRecord r;
      r.mode = training_mode_from_string(row.at("mode").get<std::string>());
      r.fraction = row.at("fraction").get<double>();
      r.seed = row.at("seed").get<std::uint64_t>();
      r.best_epoch = row.value("best_epoch", std::size_t{0});
      r.checkpoint = row.value("checkpoint", std::string());
      if (row.contains("error")) r.error = row.at("error").get<std::string>();
      for (const auto& [k, v] : row.at("metrics").items()) apply_metric(r.metrics, k, v.get<double>());
      out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ReportError(std::string("report: ") + e.what());
  } catch (const ConfigError& e) {
    throw ReportError(std::string("report: ") + e.what());
  }
  return out;
}

std::vector<RunRecord> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ReportError("report: empty CSV");
  const auto header = split_csv_line(line);
  std::vector<RunRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw ReportError("report: ragged CSV row");
    if (cells[0] != "run") continue;
    RunRecord r;
    try {
      for (std::size_t c = 0; c < header.size(); ++c) {
        const auto& h = header[c];
        const auto& v = cells[c];
        if (h == "mode") r.mode = training_mode_from_string(v);
        else if (h == "fraction") r.fraction = std::stod(v);
        else if (h == "seed") r.seed = std::stoull(v);
        else if (h == "best_epoch") r.best_epoch = std::stoul(v);
        else if (h == "checkpoint") r.checkpoint = v;
        else if (h == "error") { if (!v.empty()) r.error = v; }
        else if (h == "row_type" || h == "runs" || h == "failed") continue;
        else if (h.size() > 4 && h.compare(h.size() - 4, 4, "_std") == 0) continue;
        else if (!v.empty()) apply_metric(r.metrics, h, std::stod(v));
      }
    } catch (const ConfigError& e) {
      throw ReportError(std::string("report: ") + e.what());
    } catch (const std::logic_error&) {
      throw ReportError("report: bad number in CSV row");
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace semidial
