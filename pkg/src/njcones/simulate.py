"""Noisy-distance experiments on 5-taxon model trees.

Two fixed models share the topology ((0,1),2,(3,4)) and pendant length b:
T1 has both interior edges short (a), T2 has one short and one long (b).
Sequences evolve site-independently under JC or K2P (nucleotides coded
A=0 G=1 C=2 T=3, so a transition is XOR 1 and the transversions are
XOR 2 and XOR 3), distances come back through the closed-form pairwise
corrections, and each replicate is classified against the 5-taxon cone
census with its margin to the nearest differently-labeled cone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .census import ConeCensus
from .distvec import DissimilarityVector, index_to_pair, num_pairs
from .projection import distance_to_wrong
from .trees import TreeTopology, path_metric

_EDGES = ((0, 5), (1, 5), (5, 6), (2, 6), (6, 7), (3, 7), (4, 7))


@dataclass(frozen=True)
class TreeModel:
    name: str
    topology: TreeTopology
    lengths: dict  # (min(u,v), max(u,v)) -> expected substitutions per site

    def __post_init__(self):
        for edge in self.topology.edges():
            t = self.lengths.get(edge)
            if t is None:
                raise ValueError(f"missing length for edge {edge}")
            if t < 0:
                raise ValueError("edge lengths must be nonnegative")


def build_model(name: str, a: float = 0.03, b: float = 0.42) -> TreeModel:
    """The named experiment models.  T1: both interior edges a; T2: a and b."""
    if name not in ("T1", "T2"):
        raise ValueError("model name must be T1 or T2")
    lengths = {(0, 5): b, (1, 5): b, (2, 6): b, (3, 7): b, (4, 7): b}
    lengths[(5, 6)] = a
    lengths[(6, 7)] = a if name == "T1" else b
    return TreeModel(name, TreeTopology(5, _EDGES), lengths)


def tree_metric(model: TreeModel) -> DissimilarityVector:
    n = model.topology.n
    return DissimilarityVector(
        n, tuple(path_metric(n, model.topology.edges(), model.lengths))
    )


def _change_probs(t: float, submodel: str, kappa: float):
    """(transition prob, per-transversion prob) after branch length t."""
    if submodel == "jc":
        kappa = 1.0
    elif submodel != "k2p":
        raise ValueError("substitution model must be 'jc' or 'k2p'")
    beta = t / (kappa + 2.0)
    e4b = math.exp(-4.0 * beta)
    eab = math.exp(-2.0 * (kappa + 1.0) * beta)
    return 0.25 + 0.25 * e4b - 0.5 * eab, 0.25 - 0.25 * e4b


def simulate_alignment(
    model: TreeModel,
    sites: int,
    rng: np.random.Generator,
    submodel: str = "jc",
    kappa: float = 2.0,
) -> np.ndarray:
    """(n, sites) int8 leaf sequences, root drawn uniform, edges in BFS order."""
    if sites < 1:
        raise ValueError("need at least one site")
    adj: dict[int, list[int]] = {}
    for u, v in model.topology.edges():
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    n = model.topology.n
    root = min(u for u in adj if len(adj[u]) > 1)
    seqs = {root: rng.integers(0, 4, size=sites, dtype=np.int8)}
    queue = [root]
    while queue:
        u = queue.pop(0)
        for w in sorted(adj[u]):
            if w in seqs:
                continue
            p_ts, p_tv = _change_probs(
                model.lengths[(min(u, w), max(u, w))], submodel, kappa
            )
            draw = rng.random(sites)
            child = seqs[u].copy()
            child[draw < p_ts] ^= 1
            child[(draw >= p_ts) & (draw < p_ts + p_tv)] ^= 2
            child[(draw >= p_ts + p_tv) & (draw < p_ts + 2 * p_tv)] ^= 3
            seqs[w] = child
            queue.append(w)
    return np.stack([seqs[i] for i in range(n)])


def estimate_distances(
    alignment: np.ndarray, submodel: str = "jc", d_max: float = 5.0
):
    """Closed-form pairwise distance corrections.

    Returns (vector, capped) where capped lists the flat pair indices
    whose correction had no defined logarithm and got clamped at d_max.
    """
    n = alignment.shape[0]
    vals = []
    capped = []
    for i in range(num_pairs(n)):
        a, b = index_to_pair(i, n)
        diff = alignment[a] ^ alignment[b]
        if submodel == "jc":
            p = float(np.mean(diff != 0))
            arg = 1.0 - 4.0 * p / 3.0
            if arg <= 0.0:
                capped.append(i)
                vals.append(d_max)
            else:
                vals.append(-0.75 * math.log(arg))
        elif submodel == "k2p":
            p = float(np.mean(diff == 1))
            q = float(np.mean(diff >= 2))
            a1 = 1.0 - 2.0 * p - q
            a2 = 1.0 - 2.0 * q
            if a1 <= 0.0 or a2 <= 0.0:
                capped.append(i)
                vals.append(d_max)
            else:
                vals.append(-0.5 * math.log(a1) - 0.25 * math.log(a2))
        else:
            raise ValueError("substitution model must be 'jc' or 'k2p'")
    return DissimilarityVector(n, tuple(vals)), tuple(capped)


@dataclass(frozen=True)
class ExperimentConfig:
    model: TreeModel
    submodel: str = "jc"
    sites: int = 500
    replicates: int = 10_000
    seed: int = 0
    kappa: float = 2.0
    d_max: float = 5.0

    def __post_init__(self):
        if self.sites < 1 or self.replicates < 1:
            raise ValueError("sites and replicates must be at least 1")
        if self.submodel not in ("jc", "k2p"):
            raise ValueError("substitution model must be 'jc' or 'k2p'")


@dataclass(frozen=True)
class ExperimentRecord:
    replicate: int
    distances: DissimilarityVector
    verdict: str
    boundary_distance: float
    nearest_region: str
    capped: tuple


@dataclass(frozen=True)
class ExperimentReport:
    config: ExperimentConfig
    records: tuple

    def summary(self) -> list:
        """Per-verdict aggregate rows shaped like the robustness tables."""
        rows = []
        for verdict in ("correct", "incorrect"):
            dists = [r.boundary_distance for r in self.records if r.verdict == verdict]
            rows.append(
                {
                    "model": self.config.model.name,
                    "submodel": self.config.submodel,
                    "sites": self.config.sites,
                    "replicates": self.config.replicates,
                    "verdict": verdict,
                    "count": len(dists),
                    "mean_boundary_distance": float(np.mean(dists)) if dists else 0.0,
                    "var_boundary_distance": (
                        float(np.var(dists, ddof=1)) if len(dists) > 1 else 0.0
                    ),
                    "capped_replicates": sum(
                        1 for r in self.records if r.verdict == verdict and r.capped
                    ),
                }
            )
        return rows

    def correct_rate(self) -> float:
        good = sum(1 for r in self.records if r.verdict == "correct")
        return good / len(self.records)


def _replicate_rng(seed: int, key: tuple) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=key))
    )


def run_experiment(config: ExperimentConfig, cns: ConeCensus) -> ExperimentReport:
    """Simulate, estimate, and classify every replicate (its own RNG stream)."""
    if cns.n != config.model.topology.n:
        raise ValueError("census does not match the model's taxon count")
    records = []
    for r in range(config.replicates):
        rng = _replicate_rng(config.seed, (r,))
        aln = simulate_alignment(
            config.model, config.sites, rng, config.submodel, config.kappa
        )
        d, capped = estimate_distances(aln, config.submodel, config.d_max)
        rec = distance_to_wrong(d, config.model.topology, cns.cones)
        records.append(
            ExperimentRecord(
                r, d, rec.verdict, rec.boundary_distance, rec.nearest_region, capped
            )
        )
    return ExperimentReport(config, tuple(records))


@dataclass(frozen=True)
class GaussPoint:
    sigma: float
    replicates: int
    correct_rate: float
    mean_distance_correct: float
    mean_distance_incorrect: float


def gaussian_experiment(
    model: TreeModel,
    sigma_grid,
    replicates: int,
    seed: int,
    cns: ConeCensus,
) -> list:
    """Correct-classification rate under additive Gaussian noise per entry."""
    base = np.array(tree_metric(model).as_array(), dtype=float)
    points = []
    for si, sigma in enumerate(sigma_grid):
        if sigma < 0:
            raise ValueError("sigma must be nonnegative")
        verdicts = []
        for r in range(replicates):
            rng = _replicate_rng(seed, (si, r))
            d = base + sigma * rng.standard_normal(base.shape)
            verdicts.append(distance_to_wrong(d, model.topology, cns.cones))
        good = [v.boundary_distance for v in verdicts if v.verdict == "correct"]
        bad = [v.boundary_distance for v in verdicts if v.verdict == "incorrect"]
        points.append(
            GaussPoint(
                float(sigma),
                replicates,
                len(good) / replicates,
                float(np.mean(good)) if good else 0.0,
                float(np.mean(bad)) if bad else 0.0,
            )
        )
    return points


# ---------------------------------------------------------------------------
# CSV emission (plot-ready; %.12g keeps round-trips exact at double precision)


def _g(x) -> str:
    return f"{float(x):.12g}"


def records_csv(report: ExperimentReport) -> str:
    n = report.config.model.topology.n
    pair_names = [
        "d{}{}".format(*sorted(index_to_pair(i, n))) for i in range(num_pairs(n))
    ]
    lines = [
        ",".join(
            ["replicate", "verdict", "boundary_distance", "capped_pairs"] + pair_names
        )
    ]
    for r in report.records:
        lines.append(
            ",".join(
                [
                    str(r.replicate),
                    r.verdict,
                    _g(r.boundary_distance),
                    ";".join(str(i) for i in r.capped),
                ]
                + [_g(v) for v in r.distances.values]
            )
        )
    return "\n".join(lines) + "\n"


def summary_csv(report: ExperimentReport) -> str:
    rows = report.summary()
    cols = list(rows[0])
    lines = [",".join(cols)]
    for row in rows:
        lines.append(
            ",".join(
                _g(row[c]) if isinstance(row[c], float) else str(row[c]) for c in cols
            )
        )
    return "\n".join(lines) + "\n"


def curve_csv(points) -> str:
    lines = [
        "sigma,replicates,correct_rate,mean_distance_correct,mean_distance_incorrect"
    ]
    for p in points:
        lines.append(
            ",".join(
                [
                    _g(p.sigma),
                    str(p.replicates),
                    _g(p.correct_rate),
                    _g(p.mean_distance_correct),
                    _g(p.mean_distance_incorrect),
                ]
            )
        )
    return "\n".join(lines) + "\n"
