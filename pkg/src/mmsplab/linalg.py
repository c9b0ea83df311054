"""Vectors and matrices over GF(q): elimination, the symplectic form, row
restriction, orthogonality predicates, quotient maps, and MDS verification.

Row-index subsets are 1-based everywhere in the public API, matching the
convention used for player/server labels.  Vectors in F_q^{2n} split into an
X part (entries 1..n) and a Z part (entries n+1..2n).
"""

from __future__ import annotations

from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _accel
from .errors import (
    DimensionMismatch,
    IndexOutOfRange,
    NotSelfOrthogonal,
    OddLength,
    RankDeficient,
    TooLarge,
    TooManyColumns,
)
from .fields import FieldCtx, field_from_json

MDS_MAX_ROWS = 24


class VecGF:
    """Column vector over a FieldCtx."""

    __slots__ = ("ctx", "a")

    def __init__(self, ctx: FieldCtx, a: np.ndarray):
        self.ctx = ctx
        self.a = a

    @classmethod
    def from_elements(cls, ctx: FieldCtx, elts: Sequence) -> "VecGF":
        cells = ctx.cell_zeros(len(elts))
        for i, e in enumerate(elts):
            cells[i] = ctx.token_to_cell(e)
        return cls(ctx, cells)

    @classmethod
    def from_ints(cls, ctx: FieldCtx, vals: Sequence[int]) -> "VecGF":
        return cls.from_elements(ctx, [ctx.from_int(v) for v in vals])

    @classmethod
    def zeros(cls, ctx: FieldCtx, n: int) -> "VecGF":
        return cls(ctx, ctx.cell_zeros(n))

    def __len__(self):
        return self.a.shape[0]

    def __getitem__(self, i: int):
        return self.ctx.cell_to_token(self.a[i])

    def __eq__(self, other):
        return (isinstance(other, VecGF) and self.ctx is other.ctx
                and np.array_equal(self.a, other.a))

    def __hash__(self):
        return hash((id(self.ctx), self.a.tobytes()))

    def __add__(self, other: "VecGF") -> "VecGF":
        _same_ctx(self, other)
        if len(self) != len(other):
            raise DimensionMismatch("vector lengths differ")
        return VecGF(self.ctx, self.ctx.ax_add(self.a, other.a))

    def __neg__(self) -> "VecGF":
        return VecGF(self.ctx, self.ctx.ax_neg(self.a))

    def __sub__(self, other: "VecGF") -> "VecGF":
        return self + (-other)

    def is_zero(self) -> bool:
        return not bool(self.ctx.ax_nonzero(self.a).any())

    def tolist(self):
        return [list(self.ctx.coeffs(self[i])) for i in range(len(self))]

    def __repr__(self):
        return f"VecGF({self.tolist()})"


class MatGF:
    """Dense matrix over a FieldCtx (row-major)."""

    __slots__ = ("ctx", "a")

    def __init__(self, ctx: FieldCtx, a: np.ndarray):
        self.ctx = ctx
        self.a = a

    # -- constructors ---------------------------------------------------------

    @classmethod
    def zeros(cls, ctx: FieldCtx, rows: int, cols: int) -> "MatGF":
        return cls(ctx, ctx.cell_zeros(rows, cols))

    @classmethod
    def identity(cls, ctx: FieldCtx, k: int) -> "MatGF":
        m = cls.zeros(ctx, k, k)
        one = ctx.token_to_cell(ctx.one)
        for i in range(k):
            m.a[i, i] = one
        return m

    @classmethod
    def from_elements(cls, ctx: FieldCtx, rows: Sequence[Sequence]) -> "MatGF":
        nr = len(rows)
        nc = len(rows[0]) if nr else 0
        cells = ctx.cell_zeros(nr, nc)
        for i, row in enumerate(rows):
            if len(row) != nc:
                raise DimensionMismatch("ragged rows")
            for j, e in enumerate(row):
                cells[i, j] = ctx.token_to_cell(e)
        return cls(ctx, cells)

    @classmethod
    def from_ints(cls, ctx: FieldCtx, rows: Sequence[Sequence[int]]) -> "MatGF":
        return cls.from_elements(
            ctx, [[ctx.from_int(v) for v in row] for row in rows])

    # -- shape / access --------------------------------------------------------

    @property
    def rows(self) -> int:
        return self.a.shape[0]

    @property
    def cols(self) -> int:
        return self.a.shape[1]

    def elt(self, i: int, j: int):
        return self.ctx.cell_to_token(self.a[i, j])

    def col(self, j: int) -> VecGF:
        return VecGF(self.ctx, self.a[:, j].copy())

    def row(self, i: int) -> VecGF:
        return VecGF(self.ctx, self.a[i].copy())

    def copy(self) -> "MatGF":
        return MatGF(self.ctx, self.a.copy())

    def transpose(self) -> "MatGF":
        if self.ctx.kind == "tabled":
            return MatGF(self.ctx, self.a.T.copy())
        return MatGF(self.ctx, np.transpose(self.a, (1, 0, 2)).copy())

    def __eq__(self, other):
        return (isinstance(other, MatGF) and self.ctx is other.ctx
                and self.a.shape == other.a.shape and np.array_equal(self.a, other.a))

    def __hash__(self):
        return hash((id(self.ctx), self.a.shape, self.a.tobytes()))

    def tolist(self):
        return [[list(self.ctx.coeffs(self.elt(i, j))) for j in range(self.cols)]
                for i in range(self.rows)]

    def __repr__(self):
        return f"MatGF({self.rows}x{self.cols} over GF({self.ctx.p}^{self.ctx.r}))"

    # -- arithmetic -------------------------------------------------------------

    def __add__(self, other: "MatGF") -> "MatGF":
        _same_ctx(self, other)
        if self.a.shape != other.a.shape:
            raise DimensionMismatch("matrix shapes differ")
        return MatGF(self.ctx, self.ctx.ax_add(self.a, other.a))

    def __neg__(self) -> "MatGF":
        return MatGF(self.ctx, self.ctx.ax_neg(self.a))

    def __sub__(self, other: "MatGF") -> "MatGF":
        return self + (-other)

    def __matmul__(self, other):
        _same_ctx(self, other)
        if isinstance(other, VecGF):
            if self.cols != len(other):
                raise DimensionMismatch("matmul shapes")
            if self.cols == 0:
                return VecGF.zeros(self.ctx, self.rows)
            prods = self.ctx.ax_mul(self.a, other.a[None, :])
            return VecGF(self.ctx, _fold_add(self.ctx, prods, axis=1))
        if self.cols != other.rows:
            raise DimensionMismatch("matmul shapes")
        if self.cols == 0:
            return MatGF.zeros(self.ctx, self.rows, other.cols)
        if self.ctx.kind == "tabled":
            prods = self.ctx.ax_mul(self.a[:, :, None], other.a[None, :, :])
            return MatGF(self.ctx, _fold_add(self.ctx, prods, axis=1))
        prods = self.ctx.ax_mul(self.a[:, :, None, :], other.a[None, :, :, :])
        return MatGF(self.ctx, _fold_add(self.ctx, prods, axis=1))


def _same_ctx(x, y):
    if x.ctx is not y.ctx:
        raise DimensionMismatch("elements from distinct field contexts never combine")


def _fold_add(ctx: FieldCtx, arr: np.ndarray, axis: int) -> np.ndarray:
    """Sum cells along an axis with field addition."""
    arr = np.moveaxis(arr, axis, 0)
    acc = arr[0]
    for k in range(1, arr.shape[0]):
        acc = ctx.ax_add(acc, arr[k])
    return acc


def hstack(mats: Sequence[MatGF]) -> MatGF:
    mats = [m for m in mats if m.cols > 0] or [mats[0]]
    ctx = mats[0].ctx
    for m in mats:
        _same_ctx(mats[0], m)
        if m.rows != mats[0].rows:
            raise DimensionMismatch("row counts differ")
    return MatGF(ctx, np.concatenate([m.a for m in mats], axis=1))


def vstack(mats: Sequence[MatGF]) -> MatGF:
    ctx = mats[0].ctx
    return MatGF(ctx, np.concatenate([m.a for m in mats], axis=0))


def mat_from_cols(cols: Sequence[VecGF]) -> MatGF:
    ctx = cols[0].ctx
    stacked = np.stack([v.a for v in cols], axis=1)
    return MatGF(ctx, stacked)


# ---------------------------------------------------------------------------
# elimination
# ---------------------------------------------------------------------------

def _rref_cells(ctx: FieldCtx, a: np.ndarray):
    """Generic in-place RREF on a cell array; returns (rank, pivot cols)."""
    rows, cols = a.shape[0], a.shape[1]
    piv: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(ctx.ax_nonzero(a[r:, c]))[0]
        if nz.size == 0:
            continue
        sel = r + int(nz[0])
        if sel != r:
            tmp = a[r].copy()
            a[r] = a[sel]
            a[sel] = tmp
        pinv = ctx.token_to_cell(ctx.inv(ctx.cell_to_token(a[r, c])))
        a[r] = ctx.ax_mul(a[r], np.asarray(pinv)[None] if ctx.kind == "poly" else pinv)
        colcells = a[:, c].copy()
        mask = ctx.ax_nonzero(colcells)
        mask[r] = False
        if mask.any():
            f = ctx.ax_neg(colcells[mask])
            if ctx.kind == "tabled":
                a[mask] = ctx.ax_add(a[mask], ctx.ax_mul(f[:, None], a[r][None, :]))
            else:
                a[mask] = ctx.ax_add(a[mask], ctx.ax_mul(f[:, None, :], a[r][None, :, :]))
        piv.append(c)
        r += 1
    return r, piv


def _rank_cells_noinv(ctx: FieldCtx, a: np.ndarray) -> int:
    """Rank by cross-multiplication elimination (no pivot inversions)."""
    rows, cols = a.shape[0], a.shape[1]
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(ctx.ax_nonzero(a[r:, c]))[0]
        if nz.size == 0:
            continue
        sel = r + int(nz[0])
        if sel != r:
            tmp = a[r].copy()
            a[r] = a[sel]
            a[sel] = tmp
        below = a[r + 1:, c]
        mask = ctx.ax_nonzero(below)
        if mask.any():
            idx = np.nonzero(mask)[0] + r + 1
            piv = a[r, c]
            # row_i <- piv*row_i - a[i,c]*row_r keeps row spans and zeroes c
            if ctx.kind == "tabled":
                scaled = ctx.ax_mul(piv, a[idx])
                subtract = ctx.ax_mul(a[idx, c][:, None], a[r][None, :])
            else:
                scaled = ctx.ax_mul(piv[None, None, :], a[idx])
                subtract = ctx.ax_mul(a[idx, c][:, None, :], a[r][None, :, :])
            a[idx] = ctx.ax_add(scaled, ctx.ax_neg(subtract))
        r += 1
    return r


def rref(m: MatGF):
    """Reduced row echelon form; returns (MatGF, pivot columns, rank)."""
    t = m.ctx.tables()
    a = m.a.copy()
    if t is not None:
        rank, piv = _accel.gf_rref(a, t)
    else:
        rank, piv = _rref_cells(m.ctx, a)
    return MatGF(m.ctx, a), list(piv), rank


def rank(m: MatGF) -> int:
    if m.cols == 0 or m.rows == 0:
        return 0
    t = m.ctx.tables()
    if t is not None:
        return _accel.gf_rank(m.a.copy(), t)
    return _rank_cells_noinv(m.ctx, m.a.copy())


def solve(m: MatGF, b: VecGF) -> Optional[VecGF]:
    """Any solution x of m @ x = b, or None.

    Deterministic: free variables are set to zero under the elimination pivot
    order, so the result is the lexicographically-first solution.
    """
    _same_ctx(m, b)
    if m.rows != len(b):
        raise DimensionMismatch("solve shapes")
    aug = MatGF(m.ctx, np.concatenate([m.a, b.a[:, None]], axis=1))
    red, piv, rk = rref(aug)
    if m.cols in piv:
        return None
    x = VecGF.zeros(m.ctx, m.cols)
    for i, c in enumerate(piv):
        x.a[c] = red.a[i, m.cols]
    return x


def in_span(m: MatGF, v: VecGF) -> bool:
    """True iff v lies in the column span of m."""
    return solve(m, v) is not None


def nullspace(m: MatGF) -> MatGF:
    """Matrix whose columns span the right nullspace of m."""
    red, piv, rk = rref(m)
    ctx = m.ctx
    free = [c for c in range(m.cols) if c not in piv]
    out = MatGF.zeros(ctx, m.cols, len(free))
    one = ctx.token_to_cell(ctx.one)
    for j, fc in enumerate(free):
        out.a[fc, j] = one
        for i, pc in enumerate(piv):
            out.a[pc, j] = ctx.token_to_cell(ctx.neg(ctx.cell_to_token(red.a[i, fc])))
    return out


def mat_inverse(m: MatGF) -> MatGF:
    if m.rows != m.cols:
        raise DimensionMismatch("inverse of non-square matrix")
    aug = hstack([m, MatGF.identity(m.ctx, m.rows)])
    red, piv, rk = rref(aug)
    if rk != m.rows:
        raise RankDeficient("matrix is singular")
    return MatGF(m.ctx, red.a[:, m.rows:].copy())


# ---------------------------------------------------------------------------
# bilinear and symplectic forms
# ---------------------------------------------------------------------------

def bilinear(x: VecGF, y: VecGF) -> int:
    """tr(sum_i x_i y_i), an element of F_p returned as an int."""
    _same_ctx(x, y)
    if len(x) != len(y):
        raise DimensionMismatch("bilinear lengths")
    ctx = x.ctx
    acc = ctx.zero
    for i in range(len(x)):
        acc = ctx.add(acc, ctx.mul(x[i], y[i]))
    return ctx.trace(acc)


def symp_q(v: VecGF, w: VecGF):
    """F_q-valued symplectic pairing sum_i (v_x w_z - w_x v_z)."""
    _same_ctx(v, w)
    if len(v) != len(w) or len(v) % 2:
        raise OddLength("symplectic vectors must share an even length")
    n = len(v) // 2
    ctx = v.ctx
    acc = ctx.zero
    for i in range(n):
        acc = ctx.add(acc, ctx.mul(v[i], w[n + i]))
        acc = ctx.sub(acc, ctx.mul(w[i], v[n + i]))
    return acc


def symp(v: VecGF, w: VecGF) -> int:
    """The F_p-valued symplectic inner product <x,y'> - <x',y>."""
    return v.ctx.trace(symp_q(v, w))


def restrict(m: MatGF, subset: Iterable[int]) -> MatGF:
    """Rows of m indexed by a 1-based subset, in ascending order."""
    rows = sorted(set(int(s) for s in subset))
    for s in rows:
        if not 1 <= s <= m.rows:
            raise IndexOutOfRange(f"row {s} outside 1..{m.rows}")
    idx = [s - 1 for s in rows]
    return MatGF(m.ctx, m.a[idx].copy())


def restrict_vec(v: VecGF, subset: Iterable[int]) -> VecGF:
    rows = sorted(set(int(s) for s in subset))
    for s in rows:
        if not 1 <= s <= len(v):
            raise IndexOutOfRange(f"entry {s} outside 1..{len(v)}")
    return VecGF(v.ctx, v.a[[s - 1 for s in rows]].copy())


def is_self_col_orth(g: MatGF) -> bool:
    """All columns pairwise null under the symplectic product."""
    if g.rows % 2:
        raise OddLength("matrix must have 2n rows")
    for i in range(g.cols):
        for j in range(i, g.cols):
            if symp(g.col(i), g.col(j)) != 0:
                return False
    return True


def is_col_orth(f: MatGF, g: MatGF) -> bool:
    """Every column of f symplectically orthogonal to every column of g."""
    _same_ctx(f, g)
    if f.rows != g.rows or f.rows % 2:
        raise OddLength("matrices must share an even row count")
    for i in range(f.cols):
        fi = f.col(i)
        for j in range(g.cols):
            if symp(fi, g.col(j)) != 0:
                return False
    return True


# ---------------------------------------------------------------------------
# quotient maps
# ---------------------------------------------------------------------------

class QuotientMap:
    """Coset coordinates on F_q^n modulo the column span of a matrix."""

    def __init__(self, g: MatGF):
        ctx = g.ctx
        n = g.rows
        # independent columns of g
        _, cpiv, crk = rref(g)
        basis_cols = [g.col(j) for j in cpiv]
        # greedily extend by unit vectors to a basis of F_q^n
        cur = mat_from_cols(basis_cols) if basis_cols else MatGF.zeros(ctx, n, 0)
        comp_cols = []
        r0 = crk
        for i in range(n):
            e = VecGF.zeros(ctx, n)
            e.a[i] = ctx.token_to_cell(ctx.one)
            cand = MatGF(ctx, np.concatenate([cur.a, e.a[:, None]], axis=1))
            if rank(cand) > cur.cols:
                cur = cand
                comp_cols.append(e)
            if cur.cols == n:
                break
        self.ctx = ctx
        self.ambient = n
        self.subspace_rank = crk
        self._basis = mat_from_cols(basis_cols) if basis_cols else MatGF.zeros(ctx, n, 0)
        self._full_inv = mat_inverse(cur)

    def coset_coords(self, v: VecGF) -> VecGF:
        """Linear coordinates that vanish exactly on the subspace."""
        if len(v) != self.ambient:
            raise DimensionMismatch("vector length != ambient dimension")
        full = self._full_inv @ v
        return VecGF(self.ctx, full.a[self.subspace_rank:].copy())


def quotient(g: MatGF) -> QuotientMap:
    return QuotientMap(g)


# ---------------------------------------------------------------------------
# MDS verification (brute force over row subsets)
# ---------------------------------------------------------------------------

def is_mds(m: MatGF) -> bool:
    """True iff every cols-row submatrix of m is invertible."""
    k = m.cols
    if k > m.rows:
        raise TooManyColumns("MDS check needs cols <= rows")
    if m.rows > MDS_MAX_ROWS:
        raise TooLarge(f"MDS brute force capped at {MDS_MAX_ROWS} rows")
    if k == 0:
        return True
    t = m.ctx.tables()
    if t is not None:
        return _accel.gf_is_mds(m.a, k, t)
    if 2 * k > m.rows and k < m.rows:
        # a code is MDS iff its dual is; the dual side has smaller minors
        if rank(m) != k:
            return False
        return is_mds(nullspace(m.transpose()))
    for rows_sel in combinations(range(m.rows), k):
        sub = m.a[list(rows_sel)].copy()
        if _rank_cells_noinv(m.ctx, sub) != k:
            return False
    return True


def min_weight_nonzero(m: MatGF) -> int:
    """Minimum Hamming weight over the nonzero column-span of m.

    Brute-force codeword enumeration; guarded to q^cols <= 10^4.  Used as the
    independent oracle for the MDS predicate.
    """
    ctx = m.ctx
    q, k = ctx.q, m.cols
    if q**k > 10**4:
        raise TooLarge("codeword enumeration capped at q^k <= 10^4")
    best = None
    elts = list(ctx.elements())
    from itertools import product

    for combo in product(elts, repeat=k):
        if all(c == ctx.zero for c in combo):
            continue
        v = m @ VecGF.from_elements(ctx, list(combo))
        w = int(ctx.ax_nonzero(v.a).sum())
        best = w if best is None else min(best, w)
    return best if best is not None else 0


# ---------------------------------------------------------------------------
# symplectic completion
# ---------------------------------------------------------------------------

def _symp_gram_matrix(ctx: FieldCtx, n2: int) -> MatGF:
    """M with sigma_q(v, w) = v^T M w, for vectors of length 2n."""
    n = n2 // 2
    m = MatGF.zeros(ctx, n2, n2)
    one = ctx.token_to_cell(ctx.one)
    neg_one = ctx.token_to_cell(ctx.neg(ctx.one))
    for i in range(n):
        m.a[i, n + i] = one
        m.a[n + i, i] = neg_one
    return m


def dual_and_completion(g1: MatGF) -> tuple[MatGF, MatGF]:
    """Extend a self-column-orthogonal g1 to a Lagrangian basis and build the
    dual block.

    Returns (gbar, h1) with columns of (g1|gbar) mutually symplectically
    orthogonal, symp(h^j, g^{j'}) = delta_{j,j'} in F_p, and
    symp(h^j, h^{j'}) = 0.  Under this pairing W(H1 ybar) ladders the
    g-eigenvalue labels upward.  The completion is fixed by greedy pivoting
    in index order, so outputs are deterministic.
    """
    ctx = g1.ctx
    n2 = g1.rows
    if n2 % 2:
        raise OddLength("expected 2n rows")
    n = n2 // 2
    y1 = g1.cols
    if y1 > 0 and rank(g1) != y1:
        raise RankDeficient("columns of G1 are linearly dependent")
    for i in range(y1):
        for j in range(i, y1):
            if not _is_zero(ctx, symp_q(g1.col(i), g1.col(j))):
                raise NotSelfOrthogonal("G1 is not self-column-orthogonal")
    m_form = _symp_gram_matrix(ctx, n2)
    basis = [g1.col(j) for j in range(y1)]
    # extend to a Lagrangian (maximal isotropic) basis
    while len(basis) < n:
        if basis:
            rows = [(m_form @ v).a for v in basis]
            sysm = MatGF(ctx, np.stack(rows, axis=0))
            perp = nullspace(sysm)
        else:
            perp = MatGF.identity(ctx, n2)
        cur = mat_from_cols(basis) if basis else MatGF.zeros(ctx, n2, 0)
        chosen = None
        for j in range(perp.cols):
            cand = perp.col(j)
            if not in_span(cur, cand):
                chosen = cand
                break
        if chosen is None:
            raise NotSelfOrthogonal("could not extend isotropic subspace")
        basis.append(chosen)
    # dual vectors: sigma_q(w_j, u_i) = delta_{ij} for the Lagrangian basis u
    # (so the F_p-valued pairing satisfies symp(h^j, g^{j'}) = delta); row i
    # must be (J u_i)^T with J = M^T so that row . w = sigma_q(u_i, w)
    m_form_t = m_form.transpose()
    sys_rows = MatGF(ctx, np.stack([(m_form_t @ basis[i]).a for i in range(n)], axis=0))
    neg_one = ctx.neg(ctx.one)
    duals = []
    for j in range(y1):
        b = VecGF.zeros(ctx, n)
        b.a[j] = ctx.token_to_cell(neg_one)  # sigma(u_j, w) = -1 <=> sigma(w, u_j) = 1
        w = solve(sys_rows, b)
        assert w is not None, "symplectic form is nondegenerate"
        duals.append(w)
    # pairwise isotropy correction: w_j += c_{jk} u_k keeps sigma(w_j, u_i)
    for j in range(y1):
        for k in range(j):
            s = symp_q(duals[j], duals[k])  # want 0
            if not _is_zero(ctx, s):
                # sigma(w_j + c*u_k, w_k) = s + c*sigma(u_k, w_k) = s - c
                duals[j] = duals[j] + _scale(basis[k], s)
    # trace-normalize: sigma_q(g_j, h_j) = 1 gives symp = tr(1) = r mod p;
    # rescale so the F_p-valued pairing is exactly 1
    alpha = _unit_trace_element(ctx)
    h_cols = [_scale(w, alpha) for w in duals]
    gbar = mat_from_cols(basis[y1:]) if n > y1 else MatGF.zeros(ctx, n2, 0)
    h1 = mat_from_cols(h_cols) if h_cols else MatGF.zeros(ctx, n2, 0)
    return gbar, h1


def _is_zero(ctx: FieldCtx, e) -> bool:
    return e == ctx.zero


def _scale(v: VecGF, c) -> VecGF:
    ctx = v.ctx
    cell = ctx.token_to_cell(c)
    if ctx.kind == "tabled":
        return VecGF(ctx, ctx.ax_mul(v.a, cell))
    return VecGF(ctx, ctx.ax_mul(v.a, np.asarray(cell)[None, :]))


def _unit_trace_element(ctx: FieldCtx):
    """Deterministic element with trace exactly 1."""
    for i in range(ctx.r):
        coeffs = [0] * ctx.r
        coeffs[i] = 1
        t = ctx.trace(ctx.from_coeffs(coeffs))
        if t != 0:
            coeffs[i] = pow(t, -1, ctx.p)
            return ctx.from_coeffs(coeffs)
    raise NotSelfOrthogonal("degenerate trace form")


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def mat_to_json(m: MatGF) -> dict:
    return {
        "field": m.ctx.to_json(),
        "rows": m.rows,
        "cols": m.cols,
        "data": [list(m.ctx.coeffs(m.elt(i, j)))
                 for i in range(m.rows) for j in range(m.cols)],
    }


def mat_from_json(d: dict) -> MatGF:
    ctx = field_from_json(d["field"])
    rows, cols = int(d["rows"]), int(d["cols"])
    data = d["data"]
    if len(data) != rows * cols:
        raise DimensionMismatch("data length != rows*cols")
    m = MatGF.zeros(ctx, rows, cols)
    for i in range(rows):
        for j in range(cols):
            m.a[i, j] = ctx.token_to_cell(ctx.from_coeffs(data[i * cols + j]))
    return m
