"""Access structures: qualified/forbidden subset collections, thresholds,
validity checks, and symplectification.

Subsets are frozensets of 1-based indices.  Threshold structures stay
symbolic until a predicate needs enumeration; explicit collections are
limited to ground sets of size <= 20.
"""

from __future__ import annotations

from itertools import combinations
from typing import FrozenSet, Iterable, Iterator

from .errors import BadThreshold, TooLarge

Subset = FrozenSet[int]

MAX_EXPLICIT_N = 20


def _norm_sets(sets: Iterable[Iterable[int]]) -> tuple[Subset, ...]:
    return tuple(sorted({frozenset(int(x) for x in s) for s in sets},
                        key=lambda s: (len(s), sorted(s))))


class AccessStructure:
    """A pair (accept, reject) of subset collections over the ground set [n]."""

    def __init__(self, n: int, accept, reject, *, symplectified: bool = False):
        self.n = int(n)
        self.symplectified = symplectified
        if isinstance(accept, int):
            self.kind = "threshold"
            self.r, self.t = int(accept), int(reject)
        else:
            self.kind = "explicit"
            if self.n > MAX_EXPLICIT_N:
                raise TooLarge(f"explicit structures capped at n <= {MAX_EXPLICIT_N}")
            self.accept_sets = _norm_sets(accept)
            self.reject_sets = _norm_sets(reject)

    # -- iteration --------------------------------------------------------------

    def accept_iter(self) -> Iterator[Subset]:
        """Accept sets; for thresholds only the minimal (|A| = r) ones, which
        suffices for the MMSP predicates by monotonicity."""
        if self.kind == "threshold":
            for c in combinations(range(1, self.n + 1), self.r):
                yield frozenset(c)
        else:
            yield from self.accept_sets

    def reject_iter(self) -> Iterator[Subset]:
        """Reject sets; for thresholds only the maximal (|B| = t) ones."""
        if self.kind == "threshold":
            for c in combinations(range(1, self.n + 1), self.t):
                yield frozenset(c)
        else:
            yield from self.reject_sets

    def is_accept(self, s: Iterable[int]) -> bool:
        s = frozenset(s)
        if self.kind == "threshold":
            return len(s) >= self.r
        return s in self.accept_sets

    def is_reject(self, s: Iterable[int]) -> bool:
        s = frozenset(s)
        if self.kind == "threshold":
            return len(s) <= self.t
        return s in self.reject_sets

    def materialize(self) -> "AccessStructure":
        """Explicit form (thresholds expanded to every member set)."""
        if self.kind == "explicit":
            return self
        if self.n > MAX_EXPLICIT_N:
            raise TooLarge("threshold too large to materialize")
        ground = range(1, self.n + 1)
        acc = [frozenset(c) for k in range(self.r, self.n + 1)
               for c in combinations(ground, k)]
        rej = [frozenset(c) for k in range(0, self.t + 1)
               for c in combinations(ground, k)]
        return AccessStructure(self.n, acc, rej, symplectified=self.symplectified)

    def __eq__(self, other):
        if not isinstance(other, AccessStructure):
            return NotImplemented
        a, b = self.materialize(), other.materialize()
        return (a.n == b.n and a.accept_sets == b.accept_sets
                and a.reject_sets == b.reject_sets)

    def __repr__(self):
        if self.kind == "threshold":
            return f"AccessStructure(threshold r={self.r}, t={self.t}, n={self.n})"
        return (f"AccessStructure(n={self.n}, accept={len(self.accept_sets)} sets,"
                f" reject={len(self.reject_sets)} sets)")

    # -- serialization ------------------------------------------------------------

    def to_json(self) -> dict:
        if self.kind == "threshold":
            return {"n": self.n, "accept": {"threshold": self.r},
                    "reject": {"threshold": self.t}}
        return {"n": self.n,
                "accept": [sorted(s) for s in self.accept_sets],
                "reject": [sorted(s) for s in self.reject_sets]}


def make_threshold(r: int, t: int, n: int) -> AccessStructure:
    """Accept = all subsets of size >= r, reject = all of size <= t."""
    if not (n >= r > t >= 0):
        raise BadThreshold(f"need n >= r > t >= 0, got r={r}, t={t}, n={n}")
    return AccessStructure(n, r, t)


def make_explicit(n: int, accept, reject) -> AccessStructure:
    return AccessStructure(n, accept, reject)


def validate(fs: AccessStructure) -> tuple[bool, list[str]]:
    """Check monotonicity of both collections and their disjointness.

    Returns (ok, diagnostics); never raises.  Symplectified structures are
    images of valid base structures and are exempt from the monotone check
    (their members are only the symplectified sets).
    """
    problems: list[str] = []
    fs = fs.materialize()
    ground = frozenset(range(1, fs.n + 1))
    acc, rej = set(fs.accept_sets), set(fs.reject_sets)
    if not fs.symplectified:
        for a in acc:
            for extra in ground - a:
                if a | {extra} not in acc:
                    problems.append(f"accept not monotone increasing at {sorted(a)}")
                    break
        for b in rej:
            for drop in b:
                if b - {drop} not in rej:
                    problems.append(f"reject not monotone decreasing at {sorted(b)}")
                    break
    inter = acc & rej
    if inter:
        problems.append(f"accept and reject intersect: {sorted(map(sorted, inter))}")
    return (not problems), problems


def symplectify(s: Iterable[int], n: int) -> Subset:
    """{a_1..a_l} on [n] to {a_1..a_l, a_1+n..a_l+n} on [2n]."""
    s = frozenset(int(x) for x in s)
    return frozenset(s | {a + n for a in s})


def symplectify_structure(fs: AccessStructure) -> AccessStructure:
    """Elementwise symplectification; the result lives on [2n].

    For threshold structures only the minimal accept (|A| = r) and maximal
    reject (|B| = t) sets are materialized: the MMSP predicates that consume
    symplectified structures are monotone, so these suffice.
    """
    if fs.kind == "threshold":
        acc = [symplectify(a, fs.n) for a in fs.accept_iter()]
        rej = [symplectify(b, fs.n) for b in fs.reject_iter()]
        return AccessStructure(2 * fs.n, acc, rej, symplectified=True)
    acc = [symplectify(a, fs.n) for a in fs.accept_sets]
    rej = [symplectify(b, fs.n) for b in fs.reject_sets]
    return AccessStructure(2 * fs.n, acc, rej, symplectified=True)


def structure_from_json(d: dict) -> AccessStructure:
    n = int(d["n"])
    acc, rej = d["accept"], d["reject"]
    if isinstance(acc, dict) or isinstance(rej, dict):
        return make_threshold(int(acc["threshold"]), int(rej["threshold"]), n)
    return make_explicit(n, acc, rej)
