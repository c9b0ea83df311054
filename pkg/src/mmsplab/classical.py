"""Executable linear CSS and CSPIR protocols with exhaustive security audits.

Audits enumerate the dealer/server randomness exhaustively (never sampling),
compare share and query distributions as exact multisets, and cross-check
every verdict against the span-program predicates.  Feasibility is guarded
by q^(x+y) <= 10^6.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _accel
from .access import AccessStructure
from .errors import (
    BadIndex,
    DimensionMismatch,
    NotQualified,
    TooLarge,
)
from .linalg import (
    MatGF,
    VecGF,
    hstack,
    rank,
    restrict,
    restrict_vec,
    rref,
)
from .mmsp import accepts_one, is_mmsp

AUDIT_LIMIT = 10**6


@dataclass
class CssProtocol:
    """Linear CSS: shares Z = F m + G u over the ground set [nbar]."""

    g: MatGF
    f: MatGF
    access: AccessStructure

    def __post_init__(self):
        if self.g.rows != self.f.rows:
            raise DimensionMismatch("G and F row counts differ")
        if self.access.n != self.g.rows:
            raise DimensionMismatch("access structure ground set != share count")

    @property
    def ctx(self):
        return self.f.ctx

    @property
    def nbar(self) -> int:
        return self.f.rows

    @property
    def x(self) -> int:
        return self.f.cols

    @property
    def y(self) -> int:
        return self.g.cols


@dataclass
class SpirProtocol:
    """Standard-form linear CSPIR with f files of x symbols each."""

    g: MatGF
    f: MatGF
    nfiles: int
    access: AccessStructure
    # optional non-standard query override: per file index k, an explicit
    # nbar x (x * nfiles) query matrix (used by audits as a negative control)
    fixed_query: Optional[list[MatGF]] = None

    def __post_init__(self):
        if self.g.rows != self.f.rows:
            raise DimensionMismatch("G and F row counts differ")

    @property
    def ctx(self):
        return self.f.ctx

    @property
    def nbar(self) -> int:
        return self.f.rows

    @property
    def x(self) -> int:
        return self.f.cols

    @property
    def y(self) -> int:
        return self.g.cols


@dataclass
class Transcript:
    """Replayable protocol trace: same seed, same transcript."""

    protocol: str
    seed: int
    steps: list = field(default_factory=list)
    outcome: Optional[object] = None

    def log(self, name: str, **payload):
        self.steps.append({"step": name, **payload})

    def digest(self) -> str:
        blob = json.dumps(self.steps, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()


# ---------------------------------------------------------------------------
# CSS operations
# ---------------------------------------------------------------------------

def css_share(p: CssProtocol, m: VecGF, u: VecGF) -> VecGF:
    """Z = F m + G u."""
    if len(m) != p.x or len(u) != p.y:
        raise DimensionMismatch("message/randomness lengths")
    return (p.f @ m) + (p.g @ u)


def css_decode(p: CssProtocol, subset: Iterable[int], z: VecGF) -> Optional[VecGF]:
    """The unique m with z - P_A F m in Im(P_A G); None when not unique."""
    sub = sorted(set(int(s) for s in subset))
    if not p.access.is_accept(sub):
        raise NotQualified(f"{sub} is not a qualified set")
    pg, pf = restrict(p.g, sub), restrict(p.f, sub)
    if len(z) != len(sub):
        raise DimensionMismatch("restricted share length")
    if not accepts_one(p.g, p.f, sub):
        return None
    stacked = hstack([pg, pf])
    red, piv, rk = rref(MatGF(p.ctx, np.concatenate([stacked.a, z.a[:, None]], axis=1)))
    if stacked.cols in piv:
        return None
    sol = VecGF.zeros(p.ctx, stacked.cols)
    for i, c in enumerate(piv):
        sol.a[c] = red.a[i, stacked.cols]
    return VecGF(p.ctx, sol.a[p.y:].copy())


def _vec_from_index(ctx, idx: int, length: int) -> VecGF:
    v = VecGF.zeros(ctx, length)
    for i in range(length):
        v.a[i] = idx % ctx.q
        idx //= ctx.q
    return v


def _hist(g: MatGF, f: MatGF, subset: Sequence[int]):
    """counts[m_index, share_code] over exhaustive randomness, restricted."""
    ctx = g.ctx
    t = ctx.tables()
    if t is None:
        raise TooLarge("audits need a small tabled field")
    sub = sorted(subset)
    gr = restrict(g, sub).a if sub else np.zeros((0, g.cols), dtype=np.int64)
    fr = restrict(f, sub).a if sub else np.zeros((0, f.cols), dtype=np.int64)
    return _accel.gf_share_hist(gr, fr, t)


@dataclass
class AuditReport:
    protocol: str
    correct: bool
    secret: bool
    matches_mmsp: bool
    details: list = field(default_factory=list)
    counterexamples: list = field(default_factory=list)

    @property
    def secure(self) -> bool:
        return self.correct and self.secret

    @property
    def ok(self) -> bool:
        return self.matches_mmsp

    def to_json(self) -> dict:
        return {
            "protocol": self.protocol,
            "correct": self.correct,
            "secret": self.secret,
            "secure": self.secure,
            "matches_mmsp": self.matches_mmsp,
            "details": self.details,
            "counterexamples": self.counterexamples,
        }


def css_audit(p: CssProtocol) -> AuditReport:
    """Exhaustive correctness + exact-multiset secrecy, cross-checked against
    the span-program verdict."""
    ctx = p.ctx
    if ctx.q ** (p.x + p.y) > AUDIT_LIMIT:
        raise TooLarge("audit needs q^(x+y) <= 1e6")
    details, cex = [], []
    correct = True
    for a in p.access.accept_iter():
        counts = _hist(p.g, p.f, sorted(a))
        # correctness: no share code reachable from two different messages
        clash = (counts > 0).sum(axis=0) > 1
        ok = not bool(clash.any())
        details.append([f"correct@{sorted(a)}", ok])
        if not ok:
            code = int(np.nonzero(clash)[0][0])
            ms = [int(m) for m in np.nonzero(counts[:, code])[0][:2]]
            cex.append({"set": sorted(a), "kind": "correctness",
                        "messages": ms, "share_code": code})
            correct = False
    secret = True
    for b in p.access.reject_iter():
        counts = _hist(p.g, p.f, sorted(b))
        ok = bool((counts == counts[0]).all())
        details.append([f"secret@{sorted(b)}", ok])
        if not ok:
            bad = int(np.nonzero((counts != counts[0]).any(axis=1))[0][0])
            cex.append({"set": sorted(b), "kind": "secrecy", "message": bad})
            secret = False
    verdict = correct and secret
    mmsp_verdict = is_mmsp(p.g, p.f, p.access)
    return AuditReport(protocol="css", correct=correct, secret=secret,
                       matches_mmsp=(verdict == mmsp_verdict),
                       details=details, counterexamples=cex)


def css_run(p: CssProtocol, m: VecGF, seed: int) -> Transcript:
    """One seeded execution: share, then decode on every qualified set."""
    rng = np.random.default_rng(seed)
    tr = Transcript(protocol="css", seed=seed)
    u = VecGF(p.ctx, rng.integers(0, p.ctx.q, size=p.y).astype(np.int64)) \
        if p.y else VecGF.zeros(p.ctx, 0)
    z = css_share(p, m, u)
    tr.log("share", message=m.tolist(), randomness=u.tolist(), shares=z.tolist())
    outcomes = {}
    for a in p.access.accept_iter():
        dec = css_decode(p, a, restrict_vec(z, a))
        outcomes[str(sorted(a))] = dec.tolist() if dec is not None else None
    tr.log("decode", outcomes=outcomes)
    tr.outcome = outcomes
    return tr


# ---------------------------------------------------------------------------
# CSPIR operations
# ---------------------------------------------------------------------------

def spir_query(p: SpirProtocol, k: int, u_q: MatGF) -> MatGF:
    """Standard form Q^(k) = F E_k + G U_Q."""
    if not 1 <= k <= p.nfiles:
        raise BadIndex(f"file index {k} outside 1..{p.nfiles}")
    if u_q.rows != p.y or u_q.cols != p.x * p.nfiles:
        raise DimensionMismatch("U_Q must be y x (x*nfiles)")
    q = p.g @ u_q if p.y else MatGF.zeros(p.ctx, p.nbar, p.x * p.nfiles)
    lo = (k - 1) * p.x
    block = MatGF(p.ctx, q.a[:, lo: lo + p.x].copy()) + p.f
    out = q.a.copy()
    out[:, lo: lo + p.x] = block.a
    return MatGF(p.ctx, out)


def spir_answer(p: SpirProtocol, j: int, q_row: VecGF, files: VecGF, r_j):
    """D_j = Q_j . M + R_j (one server's scalar answer)."""
    if len(q_row) != p.x * p.nfiles or len(files) != p.x * p.nfiles:
        raise DimensionMismatch("query row / file vector lengths")
    ctx = p.ctx
    acc = r_j
    for i in range(len(files)):
        acc = ctx.add(acc, ctx.mul(q_row[i], files[i]))
    return acc


def spir_run(p: SpirProtocol, files: VecGF, k: int, seed: int) -> Transcript:
    """One seeded retrieval of file k, decoded on every qualified set."""
    rng = np.random.default_rng(seed)
    tr = Transcript(protocol="cspir", seed=seed)
    u_q = MatGF(p.ctx, rng.integers(0, p.ctx.q, size=(p.y, p.x * p.nfiles))
                .astype(np.int64))
    q = p.fixed_query[k - 1] if p.fixed_query else spir_query(p, k, u_q)
    u_s = VecGF(p.ctx, rng.integers(0, p.ctx.q, size=p.y).astype(np.int64)) \
        if p.y else VecGF.zeros(p.ctx, 0)
    shared = p.g @ u_s
    answers = q @ files + shared
    tr.log("query", k=k, query_digest=hashlib.sha256(q.a.tobytes()).hexdigest())
    tr.log("answers", answers=answers.tolist())
    css = CssProtocol(g=p.g, f=p.f, access=p.access)
    outcomes = {}
    for a in p.access.accept_iter():
        dec = css_decode(css, a, restrict_vec(answers, a))
        outcomes[str(sorted(a))] = dec.tolist() if dec is not None else None
    tr.log("decode", outcomes=outcomes)
    tr.outcome = outcomes
    return tr


def _query_column_hist(p: SpirProtocol, k: int, col: int, subset: Sequence[int]):
    """Multiset of the restricted query column over exhaustive U_Q column."""
    fe = MatGF.zeros(p.ctx, p.nbar, 1)
    lo = (k - 1) * p.x
    if lo <= col < lo + p.x:
        fe.a[:, 0] = p.f.a[:, col - lo]
    counts = _hist(p.g, fe, subset)
    # row 1 is the multiset of (F-column + G u) over exhaustive u
    return counts[1]


def spir_audit(p: SpirProtocol) -> AuditReport:
    """Correctness, user secrecy (exact query marginals), and server secrecy
    (structural span condition + exhaustive answer distributions)."""
    ctx = p.ctx
    if ctx.q ** (p.x + p.y) > AUDIT_LIMIT or ctx.q ** (p.x * p.nfiles) > AUDIT_LIMIT:
        raise TooLarge("audit needs q^(x+y) and q^(x*f) <= 1e6")
    details, cex = [], []
    # correctness: answers are a CSS share of m_k with effective randomness
    css = CssProtocol(g=p.g, f=p.f, access=p.access)
    correct = True
    for a in p.access.accept_iter():
        counts = _hist(p.g, p.f, sorted(a))
        ok = not bool(((counts > 0).sum(axis=0) > 1).any())
        details.append([f"correct@{sorted(a)}", ok])
        if not ok:
            correct = False
            cex.append({"set": sorted(a), "kind": "correctness"})
    # user secrecy: restricted query columns have k-independent distributions
    user_secret = True
    for b in p.access.reject_iter():
        sub = sorted(b)
        if not sub:
            details.append(["user-secret@[]", True])
            continue
        ok = True
        if p.fixed_query is not None:
            ok = all(
                np.array_equal(
                    restrict(p.fixed_query[0], sub).a,
                    restrict(p.fixed_query[k - 1], sub).a)
                for k in range(2, p.nfiles + 1))
        else:
            for col in range(p.x * p.nfiles):
                base = _query_column_hist(p, 1, col, sub)
                for k in range(2, p.nfiles + 1):
                    if not np.array_equal(base, _query_column_hist(p, k, col, sub)):
                        ok = False
                        break
                if not ok:
                    break
        details.append([f"user-secret@{sub}", ok])
        if not ok:
            user_secret = False
            cex.append({"set": sub, "kind": "user-secrecy"})
    # server secrecy, structural (span condition on off-target blocks)
    server_secret = True
    queries = p.fixed_query
    if queries is None:
        zero_uq = MatGF.zeros(ctx, p.y, p.x * p.nfiles)
        queries = [spir_query(p, k, zero_uq) for k in range(1, p.nfiles + 1)]
    for k in range(1, p.nfiles + 1):
        qk = queries[k - 1]
        ok = True
        for j in range(1, p.nfiles + 1):
            if j == k:
                continue
            lo = (j - 1) * p.x
            for c in range(p.x):
                col = VecGF(ctx, qk.a[:, lo + c].copy())
                aug = MatGF(ctx, np.concatenate([p.g.a, col.a[:, None]], axis=1))
                if rank(aug) != rank(p.g):
                    ok = False
        details.append([f"server-secret-span@k={k}", ok])
        if not ok:
            server_secret = False
            cex.append({"k": k, "kind": "server-secrecy-span"})
    # server secrecy, empirical: answer distribution depends only on m_k
    if server_secret:
        if ctx.q ** (p.x * p.nfiles + p.y) > AUDIT_LIMIT:
            raise TooLarge("server-secrecy sweep needs q^(x*f+y) <= 1e6")
        for k in range(1, p.nfiles + 1):
            qk = queries[k - 1]
            # distribution of Q m + G u over exhaustive u, grouped by m_k
            t = ctx.tables()
            hist = _accel.gf_share_hist(p.g.a, qk.a, t)  # [mvec_index, code]
            qbase = ctx.q ** ((k - 1) * p.x)
            groups = {}
            ok = True
            for midx in range(hist.shape[0]):
                mk = (midx // qbase) % (ctx.q ** p.x)
                if mk in groups:
                    if not np.array_equal(groups[mk], hist[midx]):
                        ok = False
                        break
                else:
                    groups[mk] = hist[midx]
            details.append([f"server-secret-dist@k={k}", ok])
            if not ok:
                server_secret = False
                cex.append({"k": k, "kind": "server-secrecy-dist"})
    secret = user_secret and server_secret
    verdict = correct and secret
    mmsp_verdict = is_mmsp(p.g, p.f, p.access)
    return AuditReport(protocol="cspir", correct=correct, secret=secret,
                       matches_mmsp=(verdict == mmsp_verdict),
                       details=details, counterexamples=cex)
