"""Topic modeling via collapsed Gibbs sampling.

One fit runs single-threaded over the token stream so that a fixed seed
reproduces assignments bit for bit; grid points and repeated-run
reliability fits are independent jobs. Point estimates of the topic-word
matrix (phi) and document-topic matrix (theta) come from the final count
state with the same smoothing the sampler uses.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import ConfigError, EmptyVocabulary, ProvenanceError, SplitError
from .hashing import content_hash
from .nlp.pipeline import DocumentTermMatrix

logger = logging.getLogger(__name__)

LAMBDA_GRID = [round(0.1 * i, 1) for i in range(11)]


@dataclass(frozen=True)
class LdaConfig:
    k: int
    alpha: float | None = None  # defaults to 50/k
    beta: float = 0.01
    iterations: int = 500
    burn_in: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("config.K must be >= 1")
        if self.alpha is not None and self.alpha <= 0:
            raise ConfigError("config.alpha must be > 0")
        if self.beta <= 0:
            raise ConfigError("config.beta must be > 0")
        if self.iterations < 1:
            raise ConfigError("config.iterations must be >= 1")
        if not (0 <= self.burn_in < self.iterations):
            raise ConfigError("config.burn_in must be < iterations")

    @property
    def effective_alpha(self) -> float:
        return self.alpha if self.alpha is not None else 50.0 / self.k

    def to_dict(self) -> dict:
        return {
            "k": self.k, "alpha": self.effective_alpha, "beta": self.beta,
            "iterations": self.iterations, "burn_in": self.burn_in, "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LdaConfig":
        return cls(
            k=int(data["k"]),
            alpha=float(data["alpha"]) if data.get("alpha") is not None else None,
            beta=float(data.get("beta", 0.01)),
            iterations=int(data.get("iterations", 500)),
            burn_in=int(data.get("burn_in", 0)),
            seed=int(data.get("seed", 0)),
        )

    @property
    def hash(self) -> str:
        return content_hash(self.to_dict())


@dataclass
class TopicModel:
    config: LdaConfig
    phi: np.ndarray          # K x V, rows sum to 1
    theta: np.ndarray        # D x K, rows sum to 1
    assignments: np.ndarray  # one topic id per token, document order
    loglik: list[float]
    vocabulary: list[str]
    doc_ids: list[str]
    doc_lengths: list[int]
    dtm_hash: str

    def topic_shares(self) -> np.ndarray:
        """Corpus-level topic proportions, weighted by document length."""
        lengths = np.asarray(self.doc_lengths, dtype=np.float64)
        total = lengths.sum()
        if total == 0:
            return np.full(self.config.k, 1.0 / self.config.k)
        return (self.theta * lengths[:, None]).sum(axis=0) / total

    @property
    def hash(self) -> str:
        return content_hash(self.to_payload())

    def to_payload(self) -> dict:
        return {
            "kind": "topic_model",
            "config": self.config.to_dict(),
            "phi": [[float(x) for x in row] for row in self.phi],
            "theta": [[float(x) for x in row] for row in self.theta],
            "assignments": [int(z) for z in self.assignments],
            "loglik": [float(x) for x in self.loglik],
            "vocabulary": self.vocabulary,
            "doc_ids": self.doc_ids,
            "doc_lengths": self.doc_lengths,
            "dtm_hash": self.dtm_hash,
        }

    @classmethod
    def from_payload(cls, data: dict) -> "TopicModel":
        return cls(
            config=LdaConfig.from_dict(data["config"]),
            phi=np.asarray(data["phi"], dtype=np.float64),
            theta=np.asarray(data["theta"], dtype=np.float64),
            assignments=np.asarray(data["assignments"], dtype=np.int32),
            loglik=list(data["loglik"]),
            vocabulary=list(data["vocabulary"]),
            doc_ids=list(data["doc_ids"]),
            doc_lengths=list(data["doc_lengths"]),
            dtm_hash=data["dtm_hash"],
        )

    def export_csv(self, phi_path, theta_path, config_path) -> None:
        """Triplet CSVs for phi/theta plus the config as JSON."""
        with open(phi_path, "w", encoding="utf-8") as fh:
            fh.write("topic,term_id,probability\n")
            for k in range(self.phi.shape[0]):
                for w in range(self.phi.shape[1]):
                    fh.write(f"{k},{w},{self.phi[k, w]!r}\n")
        with open(theta_path, "w", encoding="utf-8") as fh:
            fh.write("doc_index,topic,probability\n")
            for d in range(self.theta.shape[0]):
                for k in range(self.theta.shape[1]):
                    fh.write(f"{d},{k},{self.theta[d, k]!r}\n")
        with open(config_path, "w", encoding="utf-8") as fh:
            json.dump(self.config.to_dict(), fh, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# Sampling kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def _gibbs_kernel(doc_of, word_of, k, v, n_docs, alpha, beta, iterations, seed):
    n_tokens = doc_of.shape[0]
    np.random.seed(seed)

    z = np.empty(n_tokens, dtype=np.int32)
    n_dk = np.zeros((n_docs, k), dtype=np.int64)
    n_kw = np.zeros((k, v), dtype=np.int64)
    n_k = np.zeros(k, dtype=np.int64)
    n_d = np.zeros(n_docs, dtype=np.int64)
    for i in range(n_tokens):
        t = np.random.randint(0, k)
        z[i] = t
        n_dk[doc_of[i], t] += 1
        n_kw[t, word_of[i]] += 1
        n_k[t] += 1
        n_d[doc_of[i]] += 1

    loglik = np.empty(iterations, dtype=np.float64)
    cum = np.empty(k, dtype=np.float64)
    v_beta = v * beta
    for it in range(iterations):
        for i in range(n_tokens):
            d = doc_of[i]
            w = word_of[i]
            t = z[i]
            n_dk[d, t] -= 1
            n_kw[t, w] -= 1
            n_k[t] -= 1
            total = 0.0
            for kk in range(k):
                p = (n_dk[d, kk] + alpha) * (n_kw[kk, w] + beta) / (n_k[kk] + v_beta)
                total += p
                cum[kk] = total
            u = np.random.random() * total
            t_new = 0
            while cum[t_new] < u:
                t_new += 1
            z[i] = t_new
            n_dk[d, t_new] += 1
            n_kw[t_new, w] += 1
            n_k[t_new] += 1

        # joint log-likelihood of words and assignments at this state
        ll = k * (math.lgamma(v_beta) - v * math.lgamma(beta))
        for kk in range(k):
            for w in range(v):
                ll += math.lgamma(n_kw[kk, w] + beta)
            ll -= math.lgamma(n_k[kk] + v_beta)
        k_alpha = k * alpha
        ll += n_docs * (math.lgamma(k_alpha) - k * math.lgamma(alpha))
        for d in range(n_docs):
            for kk in range(k):
                ll += math.lgamma(n_dk[d, kk] + alpha)
            ll -= math.lgamma(n_d[d] + k_alpha)
        loglik[it] = ll

    return z, n_dk, n_kw, n_k, n_d, loglik


@njit(cache=True)
def _fold_in_kernel(word_of, phi, alpha, sweeps, seed):
    """Estimate a document-topic distribution with phi held fixed."""
    np.random.seed(seed)
    k = phi.shape[0]
    n_tokens = word_of.shape[0]
    z = np.empty(n_tokens, dtype=np.int32)
    n_k_doc = np.zeros(k, dtype=np.int64)
    for i in range(n_tokens):
        t = np.random.randint(0, k)
        z[i] = t
        n_k_doc[t] += 1
    cum = np.empty(k, dtype=np.float64)
    for _ in range(sweeps):
        for i in range(n_tokens):
            w = word_of[i]
            t = z[i]
            n_k_doc[t] -= 1
            total = 0.0
            for kk in range(k):
                p = (n_k_doc[kk] + alpha) * phi[kk, w]
                total += p
                cum[kk] = total
            u = np.random.random() * total
            t_new = 0
            while cum[t_new] < u:
                t_new += 1
            z[i] = t_new
            n_k_doc[t_new] += 1
    theta = np.empty(k, dtype=np.float64)
    denom = n_tokens + k * alpha
    for kk in range(k):
        theta[kk] = (n_k_doc[kk] + alpha) / denom
    return theta


def _token_arrays(dtm: DocumentTermMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Expand sparse counts into one entry per token, document order."""
    docs: list[int] = []
    words: list[int] = []
    for d, t, c in sorted(dtm.entries):
        docs.extend([d] * c)
        words.extend([t] * c)
    return np.asarray(docs, dtype=np.int32), np.asarray(words, dtype=np.int32)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def fit_lda(dtm: DocumentTermMatrix, config: LdaConfig) -> TopicModel:
    """Collapsed Gibbs fit; deterministic for a fixed config seed."""
    if dtm.n_terms == 0 or not dtm.entries:
        raise EmptyVocabulary("cannot fit topics on an empty matrix")
    if dtm.n_terms < config.k:
        logger.warning(
            "vocabulary size %d below topic count %d", dtm.n_terms, config.k
        )
    doc_of, word_of = _token_arrays(dtm)
    alpha = config.effective_alpha
    z, n_dk, n_kw, n_k, n_d, loglik = _gibbs_kernel(
        doc_of, word_of, config.k, dtm.n_terms, dtm.n_docs,
        alpha, config.beta, config.iterations, config.seed,
    )
    phi = (n_kw + config.beta) / (n_k[:, None] + dtm.n_terms * config.beta)
    theta = (n_dk + alpha) / (n_d[:, None] + config.k * alpha)
    return TopicModel(
        config=config,
        phi=phi,
        theta=theta,
        assignments=z,
        loglik=[float(x) for x in loglik],
        vocabulary=list(dtm.vocabulary.terms),
        doc_ids=list(dtm.doc_ids),
        doc_lengths=dtm.doc_lengths(),
        dtm_hash=dtm.hash,
    )


def top_terms(model: TopicModel, topic: int, n: int = 10) -> list[tuple[str, float]]:
    """Top-n terms of a topic by probability, ties broken by term id."""
    if not 0 <= topic < model.config.k:
        raise ConfigError(f"topic {topic} out of range")
    row = model.phi[topic]
    order = sorted(range(len(row)), key=lambda w: (-row[w], w))
    return [(model.vocabulary[w], float(row[w])) for w in order[:n]]


def relevance(
    model: TopicModel, lam: float, n: int | None = None
) -> list[list[tuple[str, float]]]:
    """Per-topic term rankings by lambda-weighted relevance.

    r = lambda * log(phi_kw) + (1 - lambda) * log(phi_kw / p_w) where p_w
    is the empirical corpus term probability. lambda=1 reduces to the
    probability ranking, lambda=0 to ranking by lift.
    """
    if not 0.0 <= lam <= 1.0:
        raise ConfigError("lambda must lie in [0, 1]")
    p_w = _corpus_term_probability(model)
    rankings = []
    log_phi = np.log(model.phi)
    log_lift = log_phi - np.log(p_w)[None, :]
    scores = lam * log_phi + (1.0 - lam) * log_lift
    for k in range(model.config.k):
        row = scores[k]
        order = sorted(range(len(row)), key=lambda w: (-row[w], w))
        if n is not None:
            order = order[:n]
        rankings.append([(model.vocabulary[w], float(row[w])) for w in order])
    return rankings


def _corpus_term_probability(model: TopicModel) -> np.ndarray:
    shares = model.topic_shares()
    p_w = shares @ model.phi
    # phi rows are smoothed, so every entry is strictly positive
    return p_w


def jensen_shannon(p: np.ndarray, q: np.ndarray) -> float:
    """Base-2 Jensen-Shannon divergence between two distributions."""
    m = 0.5 * (p + q)
    def kl(a, b):
        mask = a > 0
        return float(np.sum(a[mask] * np.log2(a[mask] / b[mask])))
    return 0.5 * kl(p, m) + 0.5 * kl(q, m)


def _classical_mds(distances: np.ndarray, dims: int = 2) -> np.ndarray:
    n = distances.shape[0]
    if n < 2:
        return np.zeros((n, dims))
    d2 = distances ** 2
    j = np.eye(n) - np.ones((n, n)) / n
    b = -0.5 * j @ d2 @ j
    eigenvalues, eigenvectors = np.linalg.eigh(b)
    order = np.argsort(eigenvalues)[::-1][:dims]
    coords = np.zeros((n, dims))
    for i, idx in enumerate(order):
        ev = eigenvalues[idx]
        if ev > 0:
            coords[:, i] = eigenvectors[:, idx] * math.sqrt(ev)
    return coords


def ldavis_export(model: TopicModel, dtm: DocumentTermMatrix, n_terms: int = 30) -> dict:
    """Browser payload: MDS topic map, proportions and relevance grids.

    Topic coordinates come from classical multidimensional scaling of the
    pairwise Jensen-Shannon divergences between topic-word rows. The
    lambda grid is precomputed so the browser can re-rank terms without
    calling back into the engine.
    """
    if model.dtm_hash != dtm.hash:
        raise ProvenanceError("model was not fitted on this matrix")
    k = model.config.k
    dist = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            d = jensen_shannon(model.phi[i], model.phi[j])
            dist[i, j] = dist[j, i] = d
    coords = _classical_mds(dist) if k >= 2 else np.zeros((k, 2))
    proportions = model.topic_shares()
    grids = {}
    for lam in LAMBDA_GRID:
        grids[f"{lam:.1f}"] = [
            [[term, score] for term, score in topic_ranking]
            for topic_ranking in relevance(model, lam, n=n_terms)
        ]
    return {
        "k": k,
        "topic_coordinates": [[float(x), float(y)] for x, y in coords],
        "topic_proportions": [float(p) for p in proportions],
        "lambda_grid": [f"{lam:.1f}" for lam in LAMBDA_GRID],
        "topic_terms": grids,
        "term_frequencies": {
            term: int(dtm.vocabulary.tf[i]) for i, term in enumerate(dtm.vocabulary.terms)
        },
    }


# ---------------------------------------------------------------------------
# Held-out scoring and hyperparameter search
# ---------------------------------------------------------------------------

def heldout_loglik(
    model: TopicModel,
    heldout_docs: list[list[int]],
    sweeps: int = 50,
    seed: int = 0,
) -> float:
    """Per-token document-completion log-likelihood.

    The first half of each held-out document folds in a theta estimate
    with phi fixed; the second half is scored under theta * phi.
    """
    total_ll = 0.0
    total_tokens = 0
    alpha = model.config.effective_alpha
    for i, words in enumerate(heldout_docs):
        if len(words) < 2:
            continue
        half = len(words) // 2
        first = np.asarray(words[:half], dtype=np.int32)
        second = words[half:]
        theta = _fold_in_kernel(first, model.phi, alpha, sweeps, seed + i)
        for w in second:
            total_ll += math.log(float(theta @ model.phi[:, w]))
        total_tokens += len(second)
    if total_tokens == 0:
        raise SplitError("no held-out document has enough tokens to score")
    return total_ll / total_tokens


def _doc_token_lists(dtm: DocumentTermMatrix) -> list[list[int]]:
    docs: list[list[int]] = [[] for _ in range(dtm.n_docs)]
    for d, t, c in sorted(dtm.entries):
        docs[d].extend([t] * c)
    return docs


def _subset_dtm(dtm: DocumentTermMatrix, doc_indices: list[int]) -> DocumentTermMatrix:
    """Row subset sharing the full vocabulary (ids unchanged)."""
    from .nlp.pipeline import Vocabulary

    index_map = {d: i for i, d in enumerate(doc_indices)}
    entries = [
        (index_map[d], t, c) for d, t, c in dtm.entries if d in index_map
    ]
    entries.sort()
    tf = [0] * dtm.n_terms
    df = [0] * dtm.n_terms
    for _, t, c in entries:
        tf[t] += c
        df[t] += 1
    vocab = Vocabulary(terms=list(dtm.vocabulary.terms), tf=tf, df=df)
    return DocumentTermMatrix(
        collection_id=dtm.collection_id,
        config_hash=dtm.config_hash,
        vocabulary=vocab,
        entries=entries,
        doc_ids=[dtm.doc_ids[d] for d in doc_indices],
        dates=[dtm.dates[d] for d in doc_indices],
    )


def hyperparameter_search(
    dtm: DocumentTermMatrix,
    k_grid: list[int],
    alpha_grid: list[float],
    heldout_fraction: float = 0.1,
    seed: int = 0,
    beta: float = 0.01,
    iterations: int = 200,
    fold_sweeps: int = 50,
) -> tuple[list[dict], LdaConfig]:
    """Grid search scored by held-out document-completion likelihood."""
    if not k_grid or not alpha_grid:
        raise ConfigError("grids must be non-empty")
    if not (0.0 < heldout_fraction <= 0.5):
        raise ConfigError("heldout_fraction must lie in (0, 0.5]")
    rng = np.random.default_rng(seed)
    order = list(rng.permutation(dtm.n_docs))
    n_held = max(1, int(round(heldout_fraction * dtm.n_docs)))
    held_idx = sorted(int(i) for i in order[:n_held])
    train_idx = sorted(int(i) for i in order[n_held:])
    if not train_idx or not held_idx:
        raise SplitError("split left train or held-out side empty")
    train = _subset_dtm(dtm, train_idx)
    if not train.entries:
        raise SplitError("training split has no tokens")
    held_docs_all = _doc_token_lists(dtm)
    held_docs = [held_docs_all[i] for i in held_idx]
    if all(len(d) < 2 for d in held_docs):
        raise SplitError("held-out split has no scoreable documents")

    table: list[dict] = []
    best: tuple[float, LdaConfig] | None = None
    for k in k_grid:
        for alpha in alpha_grid:
            config = LdaConfig(
                k=k, alpha=alpha, beta=beta, iterations=iterations, seed=seed
            )
            model = fit_lda(train, config)
            score = heldout_loglik(model, held_docs, sweeps=fold_sweeps, seed=seed)
            table.append({
                "k": k, "alpha": alpha, "beta": beta,
                "heldout_per_token_loglik": score,
            })
            if best is None or score > best[0]:
                best = (score, config)
    assert best is not None
    return table, best[1]


# ---------------------------------------------------------------------------
# Reliability over repeated runs
# ---------------------------------------------------------------------------

@dataclass
class ReliabilityReport:
    runs: int
    tau: float
    pair_matches: list[tuple[int, int, int]]  # (run i, run j, matched topics)
    reliability: float
    k: int

    def to_dict(self) -> dict:
        return {
            "runs": self.runs, "tau": self.tau, "k": self.k,
            "pair_matches": [
                {"run_a": a, "run_b": b, "matched": m} for a, b, m in self.pair_matches
            ],
            "reliability": self.reliability,
        }


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0 or nb == 0:
        return 0.0
    return float(a @ b) / (na * nb)


def greedy_topic_matches(phi_a: np.ndarray, phi_b: np.ndarray, tau: float) -> int:
    """Greedy one-to-one matching count; ties broken by lower topic index."""
    k = phi_a.shape[0]
    sims = [
        (-_cosine(phi_a[i], phi_b[j]), i, j)
        for i in range(k) for j in range(k)
    ]
    sims.sort()
    used_a: set[int] = set()
    used_b: set[int] = set()
    matched = 0
    for neg_sim, i, j in sims:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        if -neg_sim >= tau:
            matched += 1
    return matched


def reliability(
    dtm: DocumentTermMatrix,
    config: LdaConfig,
    runs: int = 5,
    tau: float = 0.8,
    seeds: list[int] | None = None,
) -> ReliabilityReport:
    """Repeated-run topic stability: matched topics per run pair over K."""
    if runs < 2:
        raise ConfigError("reliability needs at least 2 runs")
    if seeds is None:
        seeds = [config.seed + i for i in range(runs)]
    models = [
        fit_lda(dtm, LdaConfig(
            k=config.k, alpha=config.alpha, beta=config.beta,
            iterations=config.iterations, burn_in=config.burn_in, seed=s,
        ))
        for s in seeds[:runs]
    ]
    pair_matches = []
    scores = []
    for i in range(runs):
        for j in range(i + 1, runs):
            m = greedy_topic_matches(models[i].phi, models[j].phi, tau)
            pair_matches.append((i, j, m))
            scores.append(m / config.k)
    return ReliabilityReport(
        runs=runs, tau=tau, pair_matches=pair_matches,
        reliability=float(sum(scores) / len(scores)), k=config.k,
    )


# ---------------------------------------------------------------------------
# Topic-based filtering
# ---------------------------------------------------------------------------

def topic_filter_ids(
    model: TopicModel, dtm: DocumentTermMatrix, topic: int, theta_min: float
) -> list[str]:
    """Documents whose topic share reaches the threshold, corpus order."""
    if model.dtm_hash != dtm.hash:
        raise ProvenanceError("model was not fitted on this matrix")
    if not 0 <= topic < model.config.k:
        raise ConfigError(f"topic {topic} out of range")
    return [
        dtm.doc_ids[d]
        for d in range(dtm.n_docs)
        if model.theta[d, topic] >= theta_min
    ]
