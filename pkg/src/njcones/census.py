"""Complete decision-cone censuses for 5 and 6 taxa, plus solid-angle sampling.

Census order is canonical and doubles as the cone id: the outer loop runs
over first picks (flat pair index), then second picks for 6 taxa (flat
pair index in the relabeled 5-node problem), then the three final splits
(score classes {1,0}, {2,0}, {2,1} of the 4-node step).  The Monte Carlo
classifier walks the same decision cascade with composed float matrices
(all entries are exact dyadics, so its scores match exact replay up to
rounding) and reports the same ids, which is what ties the sampling to
the H-representations.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from itertools import permutations
from math import sqrt
from pathlib import Path

import numpy as np

from .cones import NJCone, cone_from_trace
from .distvec import index_to_pair, num_pairs, pair_to_index, permute_flat
from .nj import CherryTrace, q_operator, reduction_operator
from .trees import TreeTopology

CENSUS_FORMAT = 1
_CHUNK = 1 << 17


@dataclass(frozen=True)
class AngleEstimate:
    label: str
    samples: int
    fraction: float
    stderr: float


@dataclass(frozen=True)
class ConeCensus:
    n: int
    cones: tuple                  # NJCone, position = cone id
    types: tuple                  # "I"/"II"/"III" for n=6, "" for n=5
    topology_index: dict          # TreeTopology -> tuple of cone ids

    @property
    def trace_ids(self) -> dict:
        ids = getattr(self, "_trace_ids", None)
        if ids is None:
            ids = {c.trace: i for i, c in enumerate(self.cones)}
            object.__setattr__(self, "_trace_ids", ids)
        return ids

    def cones_of_type(self, t: str) -> tuple:
        return tuple(i for i, x in enumerate(self.types) if x == t)


def _split_pick(clusters4, s):
    """The canonical recorded side of split class s: the one holding leaf 0."""
    hi, lo = index_to_pair(s, 4)
    side = (clusters4[lo], clusters4[hi])
    if any(0 in c for c in side):
        return side
    return tuple(c for i, c in enumerate(clusters4) if i not in (lo, hi))


def _merge_step(clusters, a, b):
    x, y = sorted((clusters.index(a), clusters.index(b)))
    return [c for i, c in enumerate(clusters) if i not in (x, y)] + [a | b]


def canonical_trace(n, merges) -> CherryTrace:
    """CherryTrace with the last join rewritten to the side holding leaf 0."""
    merges = [
        (frozenset(a), frozenset(b)) for a, b in merges
    ]
    clusters = [frozenset((u,)) for u in range(n)]
    for a, b in merges[:-1]:
        clusters = _merge_step(clusters, a, b)
    last = merges[-1]
    if not any(0 in c for c in last):
        gone = set(last)
        last = tuple(c for c in clusters if c not in gone)
    return CherryTrace(n, tuple(merges[:-1]) + (last,))


def permute_trace(sigma, trace: CherryTrace) -> CherryTrace:
    """Relabeled trace, re-canonicalized so it hits the census id map."""
    return canonical_trace(
        trace.n,
        [
            (frozenset(sigma[x] for x in a), frozenset(sigma[x] for x in b))
            for a, b in trace.merges
        ],
    )


def _type_of(trace: CherryTrace) -> str:
    (a, b), (c, e), last = trace.merges
    merged = a | b
    if c == merged or e == merged:
        return "III"
    p, q = last
    if {p, q} == {merged, c | e} or (len(p) == 1 and len(q) == 1):
        return "I"
    return "II"


def census(n: int) -> ConeCensus:
    """All completed-trace cones in canonical id order, typed and indexed."""
    if n not in (5, 6):
        raise ValueError("census is implemented for 5 or 6 taxa")
    cones = []
    types = []
    if n == 5:
        for p1 in range(10):
            a, b = index_to_pair(p1, 5)
            first = (frozenset((a,)), frozenset((b,)))
            clusters = _merge_step([frozenset((u,)) for u in range(5)], *first)
            for s in range(3):
                pick = _split_pick(clusters, s)
                cone = cone_from_trace(CherryTrace(5, (first, pick)))
                # middle leaf = the singleton split off with the cherry
                mid = next(
                    min(q) for p, q in [pick, pick[::-1]] if len(p) == 2 and len(q) == 1
                ) if any(len(c) == 2 for c in pick) else next(
                    u for u in range(5)
                    if all(u not in c for c in pick) and u not in (a, b)
                )
                cones.append(replace(cone, label=f"C_{{{b}{a},{mid}}}"))
                types.append("")
    else:
        for p1 in range(15):
            a, b = index_to_pair(p1, 6)
            first = (frozenset((a,)), frozenset((b,)))
            clusters5 = _merge_step([frozenset((u,)) for u in range(6)], *first)
            for p2 in range(10):
                x, y = index_to_pair(p2, 5)
                second = (clusters5[y], clusters5[x])
                clusters4 = _merge_step(clusters5, *second)
                for s in range(3):
                    pick = _split_pick(clusters4, s)
                    trace = CherryTrace(6, (first, second, pick))
                    cone = cone_from_trace(trace)
                    t = _type_of(trace)
                    cones.append(replace(cone, label=f"{t}:{trace.label()}"))
                    types.append(t)
    index: dict = {}
    for i, cone in enumerate(cones):
        index.setdefault(cone.topology, []).append(i)
    return ConeCensus(
        n, tuple(cones), tuple(types), {k: tuple(v) for k, v in index.items()}
    )


def stabilizer(cone: NJCone, n: int | None = None) -> list:
    """All taxon permutations fixing the cone's halfspace set."""
    n = cone.n if n is None else n
    base = frozenset(cone.normals)
    return [
        sigma
        for sigma in permutations(range(n))
        if frozenset(tuple(permute_flat(sigma, h, n)) for h in cone.normals) == base
    ]


def orbit_ids(cns: ConeCensus, cone_id: int) -> set:
    """Census ids of the full symmetric-group orbit of one cone."""
    trace = cns.cones[cone_id].trace
    ids = cns.trace_ids
    return {ids[permute_trace(sigma, trace)] for sigma in permutations(range(cns.n))}


# ---------------------------------------------------------------------------
# Census cache


def census_cache_path(n: int, cache_dir=None) -> Path:
    root = cache_dir or os.environ.get("NJ_CACHE_DIR")
    root = Path(root) if root else Path.home() / ".cache" / "njcones"
    return root / f"census-n{n}-v{CENSUS_FORMAT}.json"


def _census_to_json(cns: ConeCensus) -> str:
    return json.dumps(
        {
            "format": CENSUS_FORMAT,
            "n": cns.n,
            "cones": [
                {
                    "label": c.label,
                    "type": t,
                    "merges": [[sorted(a), sorted(b)] for a, b in c.trace.merges],
                    "normals": [list(h) for h in c.normals],
                }
                for c, t in zip(cns.cones, cns.types)
            ],
        }
    )


def _census_from_json(text: str) -> ConeCensus:
    obj = json.loads(text)
    if obj.get("format") != CENSUS_FORMAT:
        raise ValueError("census cache format mismatch")
    n = obj["n"]
    cones = []
    types = []
    for rec in obj["cones"]:
        trace = CherryTrace(
            n, tuple((frozenset(a), frozenset(b)) for a, b in rec["merges"])
        )
        cones.append(
            NJCone(
                n,
                tuple(tuple(int(v) for v in h) for h in rec["normals"]),
                trace=trace,
                topology=trace.topology(),
                label=rec["label"],
            )
        )
        types.append(rec["type"])
    index: dict = {}
    for i, cone in enumerate(cones):
        index.setdefault(cone.topology, []).append(i)
    return ConeCensus(
        n, tuple(cones), tuple(types), {k: tuple(v) for k, v in index.items()}
    )


def load_census(n: int, cache_dir=None, refresh: bool = False) -> ConeCensus:
    """Cached census if present and readable, else rebuild and try to save."""
    path = census_cache_path(n, cache_dir)
    if not refresh and path.is_file():
        try:
            got = _census_from_json(path.read_text())
            if got.n == n:
                return got
        except (ValueError, KeyError, json.JSONDecodeError, OSError):
            pass
    cns = census(n)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(_census_to_json(cns))
    except OSError:
        pass
    return cns


# ---------------------------------------------------------------------------
# Monte Carlo solid angles


def _relabel_matrix(p: int, nk: int) -> np.ndarray:
    """Pair-coordinate permutation for the join of the pair at flat index p.

    Mirrors the replay convention exactly: the two picked nodes move to
    the last two labels, everything else packs down in order.
    """
    hi, lo = index_to_pair(p, nk)
    tau = {}
    slot = 0
    for u in range(nk):
        if u == lo:
            tau[u] = nk - 2
        elif u == hi:
            tau[u] = nk - 1
        else:
            tau[u] = slot
            slot += 1
    mk = num_pairs(nk)
    mat = np.zeros((mk, mk))
    for u in range(nk):
        for v in range(u):
            mat[pair_to_index(tau[u], tau[v], nk), pair_to_index(u, v, nk)] = 1.0
    return mat


_CASCADE: dict = {}


def _cascade(n: int):
    """(first-level score matrix, per-pick score matrices, final 3-row maps)."""
    hit = _CASCADE.get(n)
    if hit is not None:
        return hit
    a4 = q_operator(4).matrix.astype(float)[:3]
    if n == 5:
        first = q_operator(5).matrix.astype(float)
        red5 = reduction_operator(5).matrix
        second = [a4 @ red5 @ _relabel_matrix(p, 5) for p in range(10)]
        out = (first, second, None)
    elif n == 6:
        first = q_operator(6).matrix.astype(float)
        red6 = reduction_operator(6).matrix
        red5 = reduction_operator(5).matrix
        a5 = q_operator(5).matrix.astype(float)
        drop1 = [red6 @ _relabel_matrix(p, 6) for p in range(15)]
        second = [a5 @ d for d in drop1]
        third = [
            [a4 @ red5 @ _relabel_matrix(p2, 5) @ d for p2 in range(10)]
            for d in drop1
        ]
        out = (first, second, third)
    else:
        raise ValueError("classifier cascade is implemented for 5 or 6 taxa")
    _CASCADE[n] = out
    return out


def _argmin_gap(scores: np.ndarray, tol: float):
    """(argmin per row, mask of rows whose two smallest scores are separated)."""
    part = np.partition(scores, 1, axis=1)
    return np.argmin(scores, axis=1), (part[:, 1] - part[:, 0]) > tol


def classify_batch(n: int, X: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Census cone id per row of X; -1 where any selection step was a tie."""
    first, second, third = _cascade(n)
    X = np.asarray(X, dtype=float)
    rows = X.shape[0]
    ids = np.full(rows, -1, dtype=np.int64)
    p1, ok1 = _argmin_gap(X @ first.T, tol)
    for i in range(first.shape[0]):
        sel = np.flatnonzero(ok1 & (p1 == i))
        if sel.size == 0:
            continue
        Xi = X[sel]
        s2, ok2 = _argmin_gap(Xi @ second[i].T, tol)
        if third is None:
            ids[sel[ok2]] = 3 * i + s2[ok2]
            continue
        for j in range(second[i].shape[0]):
            sub = ok2 & (s2 == j)
            if not sub.any():
                continue
            s3, ok3 = _argmin_gap(Xi[sub] @ third[i][j].T, tol)
            picked = sel[sub][ok3]
            ids[picked] = (10 * i + j) * 3 + s3[ok3]
    return ids


@dataclass(frozen=True)
class AngleSurvey:
    """Tallies of accepted samples per census cone, in census id order."""

    n: int
    samples: int
    seed: int
    counts: tuple
    discarded: int

    def estimates(self, cns: ConeCensus) -> list:
        out = []
        for cone, c in zip(cns.cones, self.counts):
            f = c / self.samples
            out.append(
                AngleEstimate(
                    cone.label, self.samples, f, sqrt(f * (1 - f) / self.samples)
                )
            )
        return out

    def per_type(self, cns: ConeCensus) -> list:
        """Symmetry-averaged per-cone fraction for each n=6 type class."""
        if cns.n != 6:
            raise ValueError("type classes exist only for 6 taxa")
        out = []
        for t in ("I", "II", "III"):
            members = cns.cones_of_type(t)
            total = sum(self.counts[i] for i in members) / self.samples
            err = sqrt(total * (1 - total) / self.samples)
            out.append(
                AngleEstimate(
                    f"type-{t}", self.samples, total / len(members), err / len(members)
                )
            )
        return out

    def per_topology(self, cns: ConeCensus) -> list:
        out = []
        for topology in sorted(cns.topology_index, key=lambda t: t.newick()):
            out.append(topology_angle(cns, self, topology))
        return out


def topology_angle(cns: ConeCensus, survey: AngleSurvey, topology) -> AngleEstimate:
    """Total sampled mass of one labeled topology (sum over its cones)."""
    members = cns.topology_index.get(topology)
    if members is None:
        raise ValueError("topology does not appear in the census")
    total = sum(survey.counts[i] for i in members) / survey.samples
    return AngleEstimate(
        topology.newick(),
        survey.samples,
        total,
        sqrt(total * (1 - total) / survey.samples),
    )


def solid_angles_mc(
    cns: ConeCensus,
    samples: int,
    seed: int,
    threads: int | None = None,
    tol: float = 1e-9,
    chunk: int = _CHUNK,
) -> AngleSurvey:
    """Tally spherically-symmetric draws per cone until `samples` accepted.

    Chunks are keyed by (seed, chunk index) through SeedSequence spawn
    keys on a counter-based generator and merged in chunk order, so the
    tallies do not depend on the worker count.  Tied draws are discarded
    (and counted) rather than assigned.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    m = num_pairs(cns.n)
    ncones = len(cns.cones)

    def run_chunk(ci: int) -> np.ndarray:
        gen = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(ci,)))
        )
        return classify_batch(cns.n, gen.standard_normal((chunk, m)), tol)

    counts = np.zeros(ncones, dtype=np.int64)
    accepted = 0
    discarded = 0
    workers = threads or os.cpu_count() or 1
    with ThreadPoolExecutor(max_workers=workers) as pool:
        pending = {}
        next_submit = 0
        next_consume = 0
        while accepted < samples:
            while next_submit < next_consume + 2 * workers:
                pending[next_submit] = pool.submit(run_chunk, next_submit)
                next_submit += 1
            ids = pending.pop(next_consume).result()
            next_consume += 1
            good = np.flatnonzero(ids >= 0)
            take = min(good.size, samples - accepted)
            if take:
                used = good[:take]
                counts += np.bincount(ids[used], minlength=ncones)
                # ties count only up to the last consumed row of the chunk
                discarded += int(used[-1] + 1 - take)
                accepted += take
            elif good.size == 0:
                discarded += ids.size
        for fut in pending.values():
            fut.cancel()
    return AngleSurvey(cns.n, samples, seed, tuple(int(c) for c in counts), discarded)
