"""Supervised classification from annotations with an active-learning loop.

Binary one-vs-rest per target category: spans coded with the category
(or a descendant) are positives, spans in annotated documents coded only
with other categories are negatives. Unannotated documents contribute
nothing unless explicitly requested. Both algorithms train
deterministically for a fixed seed: multinomial naive Bayes is counting,
logistic regression runs full-batch gradient descent from zero weights.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import FoldError, InsufficientLabels, PoolExhausted, ProvenanceError
from .hashing import content_hash

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LabeledExample:
    doc_id: str
    span: tuple[int, int] | None  # None = whole document
    features: dict[int, int]      # vocabulary term id -> count
    label: bool

    @property
    def source_key(self) -> str:
        if self.span is None:
            return self.doc_id
        return f"{self.doc_id}:{self.span[0]}-{self.span[1]}"


def build_training_set(
    annotations,
    target_category: str,
    scheme,
    processed_docs,
    vocabulary,
    include_unannotated: bool = False,
) -> list[LabeledExample]:
    """Positive and negative examples for one target category.

    ``annotations`` come from the annotation store, ``processed_docs``
    from the preprocessing pipeline and ``vocabulary`` from the bound
    matrix, so feature ids agree with that matrix. Units carrying the
    target (or one of its descendants) win over any other code on the
    same unit.
    """
    target_set = scheme.descendants(target_category)
    by_doc = {d.doc_id: d for d in processed_docs}

    units: dict[tuple[str, tuple[int, int] | None], bool] = {}
    for ann in annotations:
        if ann.doc_id not in by_doc:
            continue
        span = None if ann.whole_doc else (ann.start, ann.end)
        key = (ann.doc_id, span)
        is_target = ann.category_id in target_set
        units[key] = units.get(key, False) or is_target

    if include_unannotated:
        annotated_docs = {doc_id for doc_id, _ in units}
        for doc_id in by_doc:
            if doc_id not in annotated_docs:
                units[(doc_id, None)] = False

    examples: list[LabeledExample] = []
    n_positive = 0
    for (doc_id, span), label in sorted(units.items(), key=lambda kv: (kv[0][0], kv[0][1] or (-1, -1))):
        pdoc = by_doc[doc_id]
        if span is None:
            tokens = pdoc.tokens
        else:
            start, end = span
            tokens = [t for t in pdoc.tokens if t.start >= start and t.end <= end]
        features: dict[int, int] = {}
        for t in tokens:
            tid = vocabulary.id_of(t.term)
            if tid is not None:
                features[tid] = features.get(tid, 0) + 1
        if not features:
            continue  # dropped with nothing to learn from
        examples.append(LabeledExample(doc_id=doc_id, span=span, features=features, label=label))
        n_positive += int(label)

    if n_positive == 0:
        raise InsufficientLabels(f"no positive examples for category {target_category!r}")
    return examples


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------

@dataclass
class Classifier:
    algorithm: str               # multinomial_nb | logistic
    target_category: str
    vocabulary_hash: str
    params: dict

    def to_payload(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "target_category": self.target_category,
            "vocabulary_hash": self.vocabulary_hash,
            "params": self.params,
        }

    @classmethod
    def from_payload(cls, data: dict) -> "Classifier":
        return cls(
            algorithm=data["algorithm"],
            target_category=data["target_category"],
            vocabulary_hash=data["vocabulary_hash"],
            params=data["params"],
        )


def vocabulary_hash(vocabulary) -> str:
    return content_hash(list(vocabulary.terms))


def _train_nb(examples: list[LabeledExample], smoothing: float) -> dict:
    vocab_ids = sorted({t for ex in examples for t in ex.features})
    v = len(vocab_ids)
    id_index = {t: i for i, t in enumerate(vocab_ids)}
    counts = {True: np.zeros(v), False: np.zeros(v)}
    n_examples = {True: 0, False: 0}
    for ex in examples:
        n_examples[ex.label] += 1
        for t, c in ex.features.items():
            counts[ex.label][id_index[t]] += c
    total = len(examples)
    log_priors = {
        label: math.log(n_examples[label] / total) if n_examples[label] else -math.inf
        for label in (True, False)
    }
    log_likelihood = {}
    for label in (True, False):
        class_total = counts[label].sum()
        log_likelihood[label] = np.log(
            (counts[label] + smoothing) / (class_total + smoothing * v)
        )
    return {
        "smoothing": smoothing,
        "vocab_ids": vocab_ids,
        "log_prior_pos": log_priors[True],
        "log_prior_neg": log_priors[False],
        "log_likelihood_pos": [float(x) for x in log_likelihood[True]],
        "log_likelihood_neg": [float(x) for x in log_likelihood[False]],
    }


def _nb_log_posteriors(params: dict, features: dict[int, int]) -> tuple[float, float]:
    id_index = {t: i for i, t in enumerate(params["vocab_ids"])}
    lp = params["log_prior_pos"]
    ln = params["log_prior_neg"]
    for t, c in features.items():
        i = id_index.get(t)
        if i is None:
            continue  # out-of-vocabulary for this fold's training split
        lp += c * params["log_likelihood_pos"][i]
        ln += c * params["log_likelihood_neg"][i]
    return lp, ln


def _train_logistic(
    examples: list[LabeledExample],
    learning_rate: float,
    epochs: int,
    l2: float,
) -> dict:
    vocab_ids = sorted({t for ex in examples for t in ex.features})
    id_index = {t: i for i, t in enumerate(vocab_ids)}
    n, v = len(examples), len(vocab_ids)
    x = np.zeros((n, v))
    y = np.zeros(n)
    for row, ex in enumerate(examples):
        y[row] = 1.0 if ex.label else 0.0
        for t, c in ex.features.items():
            x[row, id_index[t]] = c
    w = np.zeros(v)
    b = 0.0
    losses = []
    for _ in range(epochs):
        z = x @ w + b
        p = 1.0 / (1.0 + np.exp(-z))
        eps = 1e-12
        loss = float(
            -np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps))
            + 0.5 * l2 * float(w @ w)
        )
        losses.append(loss)
        grad_w = x.T @ (p - y) / n + l2 * w
        grad_b = float(np.mean(p - y))
        w -= learning_rate * grad_w
        b -= learning_rate * grad_b
    return {
        "vocab_ids": vocab_ids,
        "weights": [float(x_) for x_ in w],
        "bias": b,
        "learning_rate": learning_rate,
        "epochs": epochs,
        "l2": l2,
        "loss_history": losses,
    }


def _logistic_score(params: dict, features: dict[int, int]) -> float:
    id_index = {t: i for i, t in enumerate(params["vocab_ids"])}
    z = params["bias"]
    for t, c in features.items():
        i = id_index.get(t)
        if i is not None:
            z += c * params["weights"][i]
    return 1.0 / (1.0 + math.exp(-z))


def score_example(classifier: Classifier, features: dict[int, int]) -> float:
    """Probability of the positive class."""
    if classifier.algorithm == "multinomial_nb":
        lp, ln = _nb_log_posteriors(classifier.params, features)
        m = max(lp, ln)
        return math.exp(lp - m) / (math.exp(lp - m) + math.exp(ln - m))
    if classifier.algorithm == "logistic":
        return _logistic_score(classifier.params, features)
    raise ValueError(f"unknown algorithm {classifier.algorithm!r}")


# ---------------------------------------------------------------------------
# Training and evaluation
# ---------------------------------------------------------------------------

@dataclass
class EvalReport:
    folds: list[dict]
    mean_precision: float
    mean_recall: float
    mean_f1: float
    mean_accuracy: float
    confusion: dict[str, int]  # tp, fp, fn, tn totals

    def to_dict(self) -> dict:
        return {
            "folds": self.folds,
            "mean_precision": self.mean_precision,
            "mean_recall": self.mean_recall,
            "mean_f1": self.mean_f1,
            "mean_accuracy": self.mean_accuracy,
            "confusion": self.confusion,
        }


def _stratified_folds(
    examples: list[LabeledExample], k: int, seed: int
) -> list[list[int]]:
    rng = np.random.default_rng(seed)
    pos = [i for i, ex in enumerate(examples) if ex.label]
    neg = [i for i, ex in enumerate(examples) if not ex.label]
    if len(pos) < k or len(neg) < k:
        raise FoldError(
            f"stratified {k}-fold needs >= {k} examples per class "
            f"(got {len(pos)} positive, {len(neg)} negative); "
            "lower k or label more data"
        )
    folds: list[list[int]] = [[] for _ in range(k)]
    for indices in (pos, neg):
        shuffled = list(rng.permutation(indices))
        for i, idx in enumerate(shuffled):
            folds[i % k].append(int(idx))
    return folds


def _fit(examples: list[LabeledExample], algorithm: str, hyperparams: dict) -> dict:
    if algorithm == "multinomial_nb":
        return _train_nb(examples, smoothing=float(hyperparams.get("smoothing", 1.0)))
    if algorithm == "logistic":
        return _train_logistic(
            examples,
            learning_rate=float(hyperparams.get("learning_rate", 0.1)),
            epochs=int(hyperparams.get("epochs", 200)),
            l2=float(hyperparams.get("l2", 0.01)),
        )
    raise ValueError(f"unknown algorithm {algorithm!r}")


def train(
    examples: list[LabeledExample],
    algorithm: str = "multinomial_nb",
    hyperparams: dict | None = None,
    seed: int = 0,
    k_folds: int = 5,
    target_category: str = "",
    vocab_hash: str = "",
) -> tuple[Classifier, EvalReport]:
    """Cross-validated training; the returned model uses all examples.

    Every fold's model and vocabulary are derived from its train split
    only, so evaluation never sees test-fold features during training.
    """
    hyperparams = hyperparams or {}
    folds = _stratified_folds(examples, k_folds, seed)

    fold_metrics = []
    confusion = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
    for fold_idx, test_indices in enumerate(folds):
        test_set = set(test_indices)
        train_examples = [ex for i, ex in enumerate(examples) if i not in test_set]
        params = _fit(train_examples, algorithm, hyperparams)
        fold_clf = Classifier(algorithm, target_category, vocab_hash, params)
        tp = fp = fn = tn = 0
        for i in sorted(test_set):
            predicted = score_example(fold_clf, examples[i].features) >= 0.5
            actual = examples[i].label
            if predicted and actual:
                tp += 1
            elif predicted:
                fp += 1
            elif actual:
                fn += 1
            else:
                tn += 1
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        accuracy = (tp + tn) / len(test_set)
        fold_metrics.append({
            "fold": fold_idx, "precision": precision, "recall": recall,
            "f1": f1, "accuracy": accuracy,
        })
        confusion["tp"] += tp
        confusion["fp"] += fp
        confusion["fn"] += fn
        confusion["tn"] += tn

    report = EvalReport(
        folds=fold_metrics,
        mean_precision=sum(f["precision"] for f in fold_metrics) / k_folds,
        mean_recall=sum(f["recall"] for f in fold_metrics) / k_folds,
        mean_f1=sum(f["f1"] for f in fold_metrics) / k_folds,
        mean_accuracy=sum(f["accuracy"] for f in fold_metrics) / k_folds,
        confusion=confusion,
    )
    final = Classifier(algorithm, target_category, vocab_hash,
                       _fit(examples, algorithm, hyperparams))
    return final, report


def predict(
    classifier: Classifier,
    items: list[tuple[str, dict[int, int]]],
    vocab_hash: str | None = None,
) -> list[tuple[str, bool, float]]:
    """(key, label, positive score) per item; empty vectors fall back to priors."""
    if vocab_hash is not None and classifier.vocabulary_hash and vocab_hash != classifier.vocabulary_hash:
        raise ProvenanceError("feature vocabulary differs from the training vocabulary")
    out = []
    for key, features in items:
        if not features:
            logger.warning(
                "item %r has an empty feature vector; prior-based prediction", key
            )
        score = score_example(classifier, features)
        out.append((key, score >= 0.5, score))
    return out


# ---------------------------------------------------------------------------
# Active learning
# ---------------------------------------------------------------------------

@dataclass
class ActiveLearningBatch:
    round_index: int
    strategy: str
    candidates: list[dict]  # {key, predicted, score, uncertainty}, uncertainty desc

    def to_dict(self) -> dict:
        return {
            "round_index": self.round_index,
            "strategy": self.strategy,
            "candidates": self.candidates,
        }


def next_batch(
    classifier: Classifier,
    pool: list[tuple[str, dict[int, int]]],
    batch_size: int = 10,
    strategy: str = "uncertainty",
    round_index: int = 0,
) -> ActiveLearningBatch:
    """Most uncertain unlabeled items first; ties broken by item key."""
    if not pool:
        raise PoolExhausted("unlabeled pool is empty")
    if strategy != "uncertainty":
        raise ValueError(f"unknown strategy {strategy!r}")
    scored = []
    for key, features in pool:
        score = score_example(classifier, features)
        uncertainty = 0.5 - abs(score - 0.5)
        scored.append({
            "key": key,
            "predicted": score >= 0.5,
            "score": score,
            "uncertainty": uncertainty,
        })
    scored.sort(key=lambda c: (-c["uncertainty"], c["key"]))
    return ActiveLearningBatch(
        round_index=round_index,
        strategy=strategy,
        candidates=scored[:batch_size],
    )
