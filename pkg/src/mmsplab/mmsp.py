"""Multi-target monotone span programs: acceptance/rejection predicates, the
bundle classes (plain / EA / CQ / QQ), the MDS characterization of threshold
programs, and the closed-form protocol rates.

A pair (G, F) accepts a subset A when the columns of F restricted to A stay
linearly independent modulo the column span of G restricted to A; it rejects
B when the restricted F columns fall inside the restricted span of G.  The
two equivalent formulations (rank test vs row-space containment of the unit
block) are both implemented; their agreement is exposed as an operation for
the audit CLI.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil
from typing import Iterable, Optional

import numpy as np

from .access import AccessStructure, make_threshold, symplectify_structure
from .errors import (
    ClassInvariantViolated,
    DimensionMismatch,
    OutOfRange,
)
from .fields import FieldCtx
from .linalg import (
    MatGF,
    hstack,
    is_col_orth,
    is_mds,
    is_self_col_orth,
    mat_from_json,
    mat_to_json,
    rank,
    restrict,
)


def _restricted(g: MatGF, f: MatGF, subset: Iterable[int]):
    sub = sorted(set(int(s) for s in subset))
    pg = restrict(g, sub) if sub else MatGF.zeros(g.ctx, 0, g.cols)
    pf = restrict(f, sub) if sub else MatGF.zeros(f.ctx, 0, f.cols)
    return pg, pf


def accepts_one(g: MatGF, f: MatGF, subset: Iterable[int]) -> bool:
    """Condition (A1): restricted F columns independent modulo Im(P_A G)."""
    if g.rows != f.rows:
        raise DimensionMismatch("G and F must share their row count")
    pg, pf = _restricted(g, f, subset)
    return rank(hstack([pg, pf])) == rank(pg) + f.cols


def rejects_one(g: MatGF, f: MatGF, subset: Iterable[int]) -> bool:
    """Condition (B1): every restricted F column inside span(P_B G)."""
    if g.rows != f.rows:
        raise DimensionMismatch("G and F must share their row count")
    pg, pf = _restricted(g, f, subset)
    return rank(hstack([pg, pf])) == rank(pg)


def _unit_block_rows(ctx: FieldCtx, y: int, x: int) -> MatGF:
    """Rows e_{y+1} .. e_{y+x} of F_q^{y+x} (the space called E)."""
    m = MatGF.zeros(ctx, x, y + x)
    one = ctx.token_to_cell(ctx.one)
    for i in range(x):
        m.a[i, y + i] = one
    return m


def cond_a2(g: MatGF, f: MatGF, subset: Iterable[int]) -> bool:
    """Condition (A2): row space of (P_A G, P_A F) contains the unit block."""
    pg, pf = _restricted(g, f, subset)
    m = hstack([pg, pf])
    e = _unit_block_rows(g.ctx, g.cols, f.cols)
    stacked = MatGF(g.ctx, np.concatenate([m.a, e.a], axis=0))
    return rank(stacked) == rank(m)


def cond_b2(g: MatGF, f: MatGF, subset: Iterable[int]) -> bool:
    """Condition (B2): row space meets the unit block only in zero."""
    pg, pf = _restricted(g, f, subset)
    m = hstack([pg, pf])
    e = _unit_block_rows(g.ctx, g.cols, f.cols)
    stacked = MatGF(g.ctx, np.concatenate([m.a, e.a], axis=0))
    return rank(stacked) == rank(m) + f.cols


def a1_a2_agree(g: MatGF, f: MatGF, subset: Iterable[int]) -> bool:
    return accepts_one(g, f, subset) == cond_a2(g, f, subset)


def b1_b2_agree(g: MatGF, f: MatGF, subset: Iterable[int]) -> bool:
    return rejects_one(g, f, subset) == cond_b2(g, f, subset)


def is_mmsp(g: MatGF, f: MatGF, fs: AccessStructure) -> bool:
    """(G, F) accepts every accept set and rejects every reject set."""
    return (all(accepts_one(g, f, a) for a in fs.accept_iter())
            and all(rejects_one(g, f, b) for b in fs.reject_iter()))


def is_threshold_mmsp_via_mds(g: MatGF, f: MatGF, r: int, t: int) -> bool:
    """The MDS characterization: (G,F) an (nbar,r)-MDS code and G an
    (nbar,t)-MDS code."""
    if g.cols != t or f.cols != r - t:
        raise DimensionMismatch(
            f"need cols(G)={t} and cols(F)={r - t}, got {g.cols}, {f.cols}")
    return is_mds(hstack([g, f])) and is_mds(g)


# ---------------------------------------------------------------------------
# bundles and classification
# ---------------------------------------------------------------------------

BUNDLE_CLASSES = ("plain", "ea", "cq", "qq")


@dataclass
class MmspBundle:
    """A classified matrix triple (G1, G2, F).

    plain: G1 plays the role of the whole randomness matrix G on nbar rows.
    ea/cq/qq: 2n rows; cq requires y1 = n, qq requires F column-orthogonal
    to a self-column-orthogonal G1 of width n - x'.
    """

    cls: str
    g1: MatGF
    g2: MatGF
    f: MatGF
    n: int
    params: dict = field(default_factory=dict)

    @property
    def ctx(self) -> FieldCtx:
        return self.f.ctx

    @property
    def y1(self) -> int:
        return self.g1.cols

    @property
    def y2(self) -> int:
        return self.g2.cols

    @property
    def x(self) -> int:
        return self.f.cols

    def g_stack(self) -> MatGF:
        return hstack([self.g1, self.g2])

    def to_json(self) -> dict:
        out = {"class": self.cls, "F": mat_to_json(self.f),
               "params": dict(self.params, n=self.n)}
        if self.g1.cols:
            out["G1"] = mat_to_json(self.g1)
        if self.g2.cols:
            out["G2"] = mat_to_json(self.g2)
        return out


def bundle_from_json(d: dict) -> MmspBundle:
    f = mat_from_json(d["F"])
    ctx = f.ctx
    rows = f.rows
    g1 = mat_from_json(d["G1"]) if "G1" in d else MatGF.zeros(ctx, rows, 0)
    g2 = mat_from_json(d["G2"]) if "G2" in d else MatGF.zeros(ctx, rows, 0)
    params = dict(d.get("params", {}))
    cls = d["class"]
    n = int(params.pop("n", rows if cls == "plain" else rows // 2))
    return MmspBundle(cls=cls, g1=g1, g2=g2, f=f, n=n, params=params)


def make_bundle(cls: str, g1: MatGF, g2: Optional[MatGF], f: MatGF,
                n: Optional[int] = None, **params) -> MmspBundle:
    if cls not in BUNDLE_CLASSES:
        raise ClassInvariantViolated(f"unknown bundle class {cls!r}")
    if g2 is None:
        g2 = MatGF.zeros(f.ctx, f.rows, 0)
    if n is None:
        n = f.rows if cls == "plain" else f.rows // 2
    return MmspBundle(cls=cls, g1=g1, g2=g2, f=f, n=n, params=params)


@dataclass
class ClassifyReport:
    ok: bool
    cls: str
    checks: list  # (name, bool, detail)

    def failed(self) -> list:
        return [c for c in self.checks if not c[1]]


def check_structure(bundle: MmspBundle) -> None:
    """Raise ClassInvariantViolated when a structural invariant fails."""
    b = bundle
    for m, name in ((b.g1, "G1"), (b.g2, "G2")):
        if m.cols and m.rows != b.f.rows:
            raise ClassInvariantViolated(f"{name} row count != F row count")
        if m.ctx is not b.f.ctx:
            raise ClassInvariantViolated(f"{name} uses a different field")
    if b.cls == "plain":
        return
    if b.f.rows != 2 * b.n:
        raise ClassInvariantViolated(f"row count {b.f.rows} != 2n = {2 * b.n}")
    if not is_self_col_orth(b.g1):
        raise ClassInvariantViolated("G1 is not self-column-orthogonal")
    if b.cls == "cq":
        if b.y1 != b.n:
            raise ClassInvariantViolated(
                f"CQ class needs y1 = n, got y1={b.y1}, n={b.n}")
        if rank(hstack([b.g1, b.g2, b.f])) != b.y1 + b.y2 + b.x:
            raise ClassInvariantViolated("(G1,G2,F) columns linearly dependent")
    if b.cls == "qq":
        if b.x % 2:
            raise ClassInvariantViolated("QQ class needs an even message width")
        xq = b.x // 2
        if b.y1 != b.n - xq:
            raise ClassInvariantViolated(
                f"QQ class needs y1 = n - x', got y1={b.y1}, n={b.n}, x'={xq}")
        if not is_col_orth(b.f, b.g1):
            raise ClassInvariantViolated("F is not column-orthogonal to G1")


def classify(bundle: MmspBundle, r: int, t: int, n: Optional[int] = None) -> ClassifyReport:
    """Structural invariants plus the symplectified-threshold MMSP verdict."""
    if n is None:
        n = bundle.n
    elif bundle.cls != "plain" and n != bundle.n:
        raise ClassInvariantViolated(f"bundle has n={bundle.n}, asked n={n}")
    check_structure(bundle)
    checks = []
    if bundle.cls == "plain":
        fs = make_threshold(r, t, bundle.f.rows)
    else:
        fs = symplectify_structure(make_threshold(r, t, n))
    verdict = is_mmsp(bundle.g_stack(), bundle.f, fs)
    checks.append(("mmsp", verdict, f"(r={r}, t={t}, n={n})"))
    return ClassifyReport(ok=all(c[1] for c in checks), cls=bundle.cls, checks=checks)


# ---------------------------------------------------------------------------
# EA / QQ flavored MDS codes
# ---------------------------------------------------------------------------

def is_eamds(g1: MatGF, f: MatGF) -> bool:
    """Acceptance of all symplectified ceil((y1+x)/2)-subsets; no rejection
    requirement."""
    if g1.rows % 2 or g1.rows != f.rows:
        raise ClassInvariantViolated("expected matching 2n-row matrices")
    if not is_self_col_orth(g1):
        raise ClassInvariantViolated("G1 is not self-column-orthogonal")
    n = g1.rows // 2
    r = ceil((g1.cols + f.cols) / 2)
    fs = symplectify_structure(make_threshold(r, 0, n)) if r > 0 else None
    if fs is None:
        return True
    return all(accepts_one(g1, f, a) for a in fs.accept_sets)


def is_qqmds(g1: MatGF, f: MatGF) -> bool:
    """Acceptance of all symplectified r-subsets with r read off the widths
    (G1: 2n x 2(n-r), F: 2n x 2(2r-n))."""
    if g1.rows % 2 or g1.rows != f.rows:
        raise ClassInvariantViolated("expected matching 2n-row matrices")
    n = g1.rows // 2
    if g1.cols % 2 or f.cols % 2:
        raise ClassInvariantViolated("QQMDS widths must be even")
    r = n - g1.cols // 2
    if f.cols != 2 * (2 * r - n):
        raise ClassInvariantViolated(
            f"width mismatch: G1 gives r={r} but F has {f.cols} columns")
    if not is_self_col_orth(g1):
        raise ClassInvariantViolated("G1 is not self-column-orthogonal")
    if not is_col_orth(f, g1):
        raise ClassInvariantViolated("F is not column-orthogonal to G1")
    fs = symplectify_structure(make_threshold(r, 0, n))
    return all(accepts_one(g1, f, a) for a in fs.accept_sets)


# ---------------------------------------------------------------------------
# closed-form rates
# ---------------------------------------------------------------------------

RATE_KINDS = ("css", "cqss", "qqss", "eass", "cqspir", "easpir")


def rate(kind: str, r: int, t: int, n: int) -> Fraction:
    """Exact protocol rate for admissible threshold parameters."""
    if kind not in RATE_KINDS:
        raise OutOfRange(f"unknown rate kind {kind!r}")
    if not (n >= r > t >= 0) or n <= 0:
        raise OutOfRange(f"need n >= r > t >= 0, got r={r}, t={t}, n={n}")
    if kind == "css":
        return Fraction(r - t, n)
    if t < 1:
        raise OutOfRange(f"{kind} needs t >= 1")
    if kind == "cqss":
        if 2 * r < n:
            raise OutOfRange("cqss needs r >= n/2")
        return Fraction(2 * r - max(2 * t, n), n)
    if kind == "qqss":
        if 2 * r < n + 1:
            raise OutOfRange("qqss needs r >= (n+1)/2")
        return Fraction(r - max(t, n - r), n)
    if kind == "cqspir":
        if 2 * t < n:
            raise OutOfRange("cqspir needs t >= n/2")
        return Fraction(2 * (r - t), n)
    # eass / easpir
    return Fraction(2 * (r - t), n)
