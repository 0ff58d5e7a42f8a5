// Python bindings. Structured values cross the boundary as JSON text; the
// package's __init__ turns them into dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "semidial/belief.hpp"
#include "semidial/dialogue.hpp"
#include "semidial/error.hpp"
#include "semidial/experiment.hpp"

namespace py = pybind11;
using namespace semidial;

namespace {

Json parse(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
}

std::tuple<std::string, std::string, std::string> toy_corpus(const std::string& spec) {
  const ToyData data = generate_toy_corpus(ToyCorpusSpec::from_json(parse(spec)));
  return {data.corpus.to_json().dump(), data.corpus.ontology().to_json().dump(), data.db.to_json().dump()};
}

std::string train_and_evaluate(const std::string& plan_json, const std::string& out_dir) {
  const ExperimentPlan plan = ExperimentPlan::from_json(parse(plan_json));
  const ToyData data = load_plan_data(plan);
  RunRecord rec;
  {
    py::gil_scoped_release release;
    rec = run_one(plan.training, data.corpus, data.db, out_dir);
  }
  Json j = {{"mode", std::string(to_string(rec.mode))},
            {"fraction", rec.fraction},
            {"seed", rec.seed},
            {"best_epoch", rec.best_epoch},
            {"checkpoint", rec.checkpoint},
            {"wall_seconds", rec.wall_seconds},
            {"metrics", rec.metrics.to_json()}};
  if (rec.error) j["error"] = *rec.error;
  return j.dump();
}

// A trained model with a live dialogue.
class Model {
 public:
  Model(const std::string& checkpoint, const std::string& ontology, const std::string& db)
      : ontology_(Ontology::from_json(parse(ontology))),
        db_(EntityDB::from_json(parse(db), ontology_)),
        net_(std::make_unique<Network>(Network::load_checkpoint(checkpoint, ontology_))),
        session_(std::make_unique<DialogueSession>(*net_, db_)) {}

  std::string step(const std::string& utterance) {
    const auto tokens = tokenize(utterance);
    const auto ids = net_->vocab().encode(tokens);
    if (ids.empty()) throw ContractError("empty utterance");
    const TurnOutput out = session_->step(ids);
    Json j = {{"belief", belief_to_json(out.belief, ontology_)},
              {"focus_domain", out.focus_domain},
              {"match_count", out.match_count},
              {"delexicalized", join_tokens(out.response.delex_tokens)},
              {"lexicalization_failed", out.lexicalization_failed}};
    j["response"] = out.response.lexicalized ? Json(join_tokens(*out.response.lexicalized)) : Json(nullptr);
    return j.dump();
  }

  void reset() { session_->reset(); }
  std::size_t turns() const { return session_->turns(); }
  std::string belief() const { return belief_to_json(session_->belief(), ontology_).dump(); }

 private:
  Ontology ontology_;
  EntityDB db_;
  std::unique_ptr<Network> net_;
  std::unique_ptr<DialogueSession> session_;
};

}  // namespace

PYBIND11_MODULE(_semidial, m) {
  m.doc() = "Semi-supervised end-to-end task-oriented dialogue";

  // Translators registered later are tried first, so the base class goes first.
  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<LoadError>(m, "LoadError", base.ptr());
  py::register_exception<ContractError>(m, "ContractError", base.ptr());

  m.def("toy_corpus", &toy_corpus, py::arg("spec_json"),
        "Generate a toy corpus; returns (corpus, ontology, db) JSON texts.");
  m.def("train_and_evaluate", &train_and_evaluate, py::arg("plan_json"), py::arg("out_dir") = "",
        "Train one configuration and evaluate it on the test split.");
  m.def("match_bin", &match_bin, py::arg("count"));
  m.def("query_vector", [](std::size_t count) {
    const auto q = query_vector(count);
    return std::vector<double>(q.begin(), q.end());
  }, py::arg("count"));
  m.def("joint_goal_accuracy", [](const std::vector<StateTrajectory>& predicted,
                                  const std::vector<StateTrajectory>& gold) {
    return joint_goal_accuracy(predicted, gold);
  }, py::arg("predicted"), py::arg("gold"));
  m.def("default_config", [] { return TrainingConfig{}.to_json().dump(); });

  py::class_<Model>(m, "Model")
      .def(py::init<const std::string&, const std::string&, const std::string&>(), py::arg("checkpoint"),
           py::arg("ontology_json"), py::arg("db_json"))
      .def("step", &Model::step, py::arg("utterance"))
      .def("reset", &Model::reset)
      .def("belief", &Model::belief)
      .def_property_readonly("turns", &Model::turns);
}
