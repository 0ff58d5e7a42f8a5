"""Semi-supervised end-to-end task-oriented dialogue."""

import json

from . import _semidial
from ._semidial import ConfigError, ContractError, Error, LoadError, joint_goal_accuracy, match_bin, query_vector

__all__ = [
    "ConfigError",
    "ContractError",
    "Error",
    "LoadError",
    "Model",
    "default_config",
    "joint_goal_accuracy",
    "match_bin",
    "query_vector",
    "toy_corpus",
    "train_and_evaluate",
]


def default_config():
    return json.loads(_semidial.default_config())


def toy_corpus(**spec):
    """Return (corpus, ontology, db) dicts for a generated toy corpus."""
    corpus, ontology, db = _semidial.toy_corpus(json.dumps(spec))
    return json.loads(corpus), json.loads(ontology), json.loads(db)


def train_and_evaluate(plan, out_dir=""):
    """Train one configuration; plan holds training fields plus toy_corpus or corpus_files."""
    return json.loads(_semidial.train_and_evaluate(json.dumps(plan), str(out_dir)))


class Model:
    """A trained checkpoint answering one dialogue at a time."""

    def __init__(self, checkpoint, ontology, db):
        self._model = _semidial.Model(str(checkpoint), json.dumps(ontology), json.dumps(db))

    def step(self, utterance):
        return json.loads(self._model.step(utterance))

    def reset(self):
        self._model.reset()

    def belief(self):
        return json.loads(self._model.belief())

    @property
    def turns(self):
        return self._model.turns
