"""Exact arithmetic in GF(p^r), including quadratic extension towers.

Two internal element representations are used, chosen by field size.  Small
fields (q <= 2^16) carry discrete-log tables and encode an element as the
integer index whose little-endian base-p digits are its coefficients in the
power basis.  Large tower fields encode an element as the raw byte string of
its coefficient vector and multiply by polynomial convolution modulo the
field polynomial.  Both flavors expose the same scalar API, so the rest of
the package treats elements as opaque tokens owned by their FieldCtx.

Towers F_p[e_1, ..., e_K] are realized as the chain of subfields of degree
2^j inside one ambient field of degree 2^K; a subfield-membership test is a
Frobenius fixed-point check.  All construction choices (modulus, level
generators, fresh-element picks) are deterministic so serialized matrices
are reproducible bit for bit.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterator, Optional, Sequence

import numpy as np

from . import _accel
from .errors import (
    DivisionByZero,
    NoTower,
    NotPrime,
    ReduciblePolynomial,
    TowerTooShallow,
)

TABLE_LIMIT = 1 << 16  # largest q handled by the index/table representation
TABLE2D_LIMIT = 512    # largest q that gets full 2-D add/mul tables


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def _prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


# ---------------------------------------------------------------------------
# dense polynomial arithmetic over F_p (little-endian int64 coefficient rows)
# ---------------------------------------------------------------------------

def _ptrim(v: np.ndarray) -> np.ndarray:
    nz = np.nonzero(v)[0]
    return v[: nz[-1] + 1] if nz.size else v[:1]


_RED_CACHE: dict[tuple[int, bytes], np.ndarray] = {}


def _reduction_rows(mod: np.ndarray, p: int, upto: Optional[int] = None) -> np.ndarray:
    """Rows k = coefficients of x^k mod f, for k < max(2 deg(f) - 1, upto)."""
    d = len(mod) - 1
    need = max(2 * d - 1, upto or 0, 1)
    key = (p, mod.tobytes())
    red = _RED_CACHE.get(key)
    if red is None or red.shape[0] < need:
        if len(_RED_CACHE) > 8:
            _RED_CACHE.clear()
        red = np.zeros((need, d), dtype=np.float64)
        cur = np.zeros(d, dtype=np.int64)
        cur[0] = 1
        red[0] = cur
        for k in range(1, need):
            nxt = np.zeros(d, dtype=np.int64)
            nxt[1:] = cur[:-1]
            if cur[-1]:
                nxt = (nxt - cur[-1] * mod[:d]) % p
            cur = nxt % p
            red[k] = cur
        _RED_CACHE[key] = red
    return red


def _pmulmod(a: np.ndarray, b: np.ndarray, mod: np.ndarray, p: int) -> np.ndarray:
    d = len(mod) - 1
    nfull = len(a) + len(b) - 1
    if d >= 64 and nfull > 16:
        # exact float FFT: products stay far below 2^53
        n = 1 << int(np.ceil(np.log2(nfull)))
        fa = np.fft.rfft(a.astype(np.float64), n)
        fb = np.fft.rfft(b.astype(np.float64), n)
        full = np.rint(np.fft.irfft(fa * fb, n)[:nfull]).astype(np.int64) % p
    else:
        full = np.convolve(a, b) % p
    if len(full) <= d:
        return _ptrim(full)
    red = _reduction_rows(mod, p, upto=len(full))
    out = np.rint(full.astype(np.float64) @ red[: len(full)]).astype(np.int64) % p
    return _ptrim(out)


def _ppowmod(a: np.ndarray, e: int, mod: np.ndarray, p: int) -> np.ndarray:
    result = np.array([1], dtype=np.int64)
    base = a % p
    while e:
        if e & 1:
            result = _pmulmod(result, base, mod, p)
        base = _pmulmod(base, base, mod, p)
        e >>= 1
    return result


def _pgcd(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    a, b = _ptrim(a % p), _ptrim(b % p)
    while np.any(b):
        # a mod b
        while len(a) >= len(b) and np.any(a):
            lead = a[-1] * pow(int(b[-1]), p - 2, p) % p
            a = a.copy()
            a[len(a) - len(b) :] = (a[len(a) - len(b) :] - lead * b) % p
            a = _ptrim(a)
            if len(a) == 1 and a[0] == 0:
                break
        a, b = b, a
    return a


def _psub(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    n = max(len(a), len(b))
    out = np.zeros(n, dtype=np.int64)
    out[: len(a)] += a
    out[: len(b)] -= b
    return _ptrim(out % p)


def _small_irreducibles(p: int, e: int) -> list[np.ndarray]:
    """All monic irreducibles of degree e over F_p (e small)."""
    key = (p, e)
    out = _SMALL_IRR_CACHE.get(key)
    if out is None:
        out = []
        for code in range(p**e):
            low = [(code // p**i) % p for i in range(e)]
            f = np.asarray(low + [1], dtype=np.int64)
            if is_irreducible(f, p):
                out.append(f)
        _SMALL_IRR_CACHE[key] = out
    return out


_SMALL_IRR_CACHE: dict = {}
_SMALL_RED_CACHE: dict = {}


def _has_small_factor(f: np.ndarray, p: int, upto: int) -> bool:
    """Divisibility screen against all irreducibles of degree <= upto."""
    d = len(f) - 1
    for e in range(1, min(upto, d - 1) + 1):
        for g in _small_irreducibles(p, e):
            key = (p, g.tobytes(), d)
            red = _SMALL_RED_CACHE.get(key)
            if red is None:
                red = np.zeros((d + 1, e), dtype=np.float64)
                cur = np.zeros(e, dtype=np.int64)
                cur[0] = 1
                for k in range(d + 1):
                    red[k] = cur
                    nxt = np.zeros(e, dtype=np.int64)
                    nxt[1:] = cur[:-1]
                    if cur[-1]:
                        nxt = (nxt - cur[-1] * g[:e]) % p
                    cur = nxt % p
                _SMALL_RED_CACHE[key] = red
            rem = np.rint(f.astype(np.float64) @ red).astype(np.int64) % p
            if not rem.any():
                return True
    return False


def is_irreducible(coeffs: Sequence[int], p: int) -> bool:
    """Rabin irreducibility test for a monic polynomial over F_p."""
    f = np.asarray(coeffs, dtype=np.int64) % p
    d = len(f) - 1
    if d < 1 or f[-1] != 1:
        return False
    if d == 1:
        return True
    x = np.array([0, 1], dtype=np.int64)
    if _has_small_factor(f, p, upto=min(4, d - 1)):
        return False
    for ell in _prime_factors(d):
        t = _ppowmod(x, p ** (d // ell), f, p)
        g = _pgcd(_psub(t, x, p), f, p)
        if len(g) > 1:
            return False
    xq = _ppowmod(x, p**d, f, p)
    return len(xq) == 2 and xq[0] == 0 and xq[1] == 1


@lru_cache(maxsize=None)
def _find_irreducible(p: int, d: int) -> tuple[int, ...]:
    """Monic irreducible of degree d over F_p, smallest by the little-endian
    base-p integer encoding of its non-leading coefficients."""
    if d == 1:
        return (0, 1)
    from ._moduli import CANONICAL_MODULI

    cached = CANONICAL_MODULI.get((p, d))
    if cached is not None:
        return cached
    for code in range(p**d):
        low = [(code // p**i) % p for i in range(d)]
        f = tuple(low) + (1,)
        if is_irreducible(f, p):
            return f
    raise ReduciblePolynomial(f"no irreducible polynomial of degree {d} over F_{p}")


def _modp_rref(a: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """RREF of an integer matrix mod a prime p; returns (matrix, pivot cols)."""
    a = a.copy() % p
    rows, cols = a.shape
    piv = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        sel = r + int(nz[0])
        if sel != r:
            a[[r, sel]] = a[[sel, r]]
        a[r] = a[r] * pow(int(a[r, c]), p - 2, p) % p
        col = a[:, c].copy()
        col[r] = 0
        mask = col != 0
        if mask.any():
            a[mask] = (a[mask] - col[mask, None] * a[r][None, :]) % p
        piv.append(c)
        r += 1
    return a, piv


def _modp_nullspace(a: np.ndarray, p: int) -> np.ndarray:
    """Columns spanning the right nullspace of a mod p."""
    rr, piv = _modp_rref(a, p)
    cols = a.shape[1]
    free = [c for c in range(cols) if c not in piv]
    basis = np.zeros((cols, len(free)), dtype=np.int64)
    for j, fc in enumerate(free):
        basis[fc, j] = 1
        for i, pc in enumerate(piv):
            basis[pc, j] = (-rr[i, fc]) % p
    return basis


# ---------------------------------------------------------------------------
# field context
# ---------------------------------------------------------------------------

class FieldCtx:
    """A concrete GF(p^r) with fixed modulus and optional tower structure.

    Do not instantiate directly; use :func:`field_build` or
    :func:`tower_build`, which memoize so equal parameters give the identical
    context object (elements from distinct contexts never combine).
    """

    def __init__(self, p: int, r: int, modulus: tuple[int, ...],
                 tower_levels: Optional[tuple[int, ...]]):
        self.p = p
        self.r = r
        self.q = p**r
        self.modulus = modulus
        self.tower_levels = tower_levels
        self.kind = "tabled" if self.q <= TABLE_LIMIT else "poly"
        self._powers = p ** np.arange(r, dtype=np.int64) if self.kind == "tabled" else None
        if self.kind == "tabled":
            self._init_tabled()
        else:
            self._init_poly()
        self._init_frobenius()
        self._level_gens: dict[int, object] = {}
        self._sub_bases: dict[int, np.ndarray] = {}

    # -- construction helpers ------------------------------------------------

    def _mul_by_x_matrix(self) -> np.ndarray:
        """r x r matrix of multiplication by x in the power basis (mod p)."""
        p, r = self.p, self.r
        mod = np.asarray(self.modulus, dtype=np.int64)
        m = np.zeros((r, r), dtype=np.int64)
        for j in range(r - 1):
            m[j + 1, j] = 1
        m[:, r - 1] = (-mod[:r]) % p
        return m

    def _init_tabled(self):
        p, r, q = self.p, self.r, self.q
        if r == 1:
            digits = np.arange(q, dtype=np.int64)[:, None]
        else:
            idx = np.arange(q, dtype=np.int64)
            digits = (idx[:, None] // self._powers[None, :]) % p
        self._digits_all = digits
        # multiplicative generator: smallest index whose order is q-1
        mx = self._mul_by_x_matrix()
        factors = _prime_factors(q - 1) if q > 2 else []

        def mul_idx(a: int, b: int) -> int:
            va = digits[a]
            vb = digits[b]
            full = np.convolve(va, vb) % p
            mod = np.asarray(self.modulus, dtype=np.int64)
            for k in range(len(full) - 1, r - 1, -1):
                c = full[k]
                if c:
                    full[k - r : k] = (full[k - r : k] - c * mod[:r]) % p
                    full[k] = 0
            return int(full[:r] @ self._powers)

        def pow_idx(a: int, e: int) -> int:
            result, base = 1, a
            while e:
                if e & 1:
                    result = mul_idx(result, base)
                base = mul_idx(base, base)
                e >>= 1
            return result

        gen = None
        for cand in range(2, q):
            if all(pow_idx(cand, (q - 1) // ell) != 1 for ell in factors):
                gen = cand
                break
        if gen is None:  # q == 2
            gen = 1
        self.generator = gen
        exp = np.zeros(q - 1, dtype=np.int64)
        log = np.zeros(q, dtype=np.int64)
        cur = 1
        gv = digits[gen].astype(np.int64)
        mg = np.zeros((r, r), dtype=np.int64)
        # matrix of multiplication by the generator
        col = gv.copy()
        for j in range(r):
            mg[:, j] = col
            col = (mx @ col) % p
        vec = digits[1].copy()
        for k in range(q - 1):
            cur = int(vec @ self._powers)
            exp[k] = cur
            log[cur] = k
            vec = (mg @ vec) % p
        self._exp, self._log = exp, log
        neg = self._encode((-digits) % p)
        inv = np.zeros(q, dtype=np.int64)
        inv[exp] = exp[(-(log[exp])) % (q - 1)]
        self._neg1d, self._inv1d = neg, inv
        if q <= TABLE2D_LIMIT:
            add2 = self._encode((digits[:, None, :] + digits[None, :, :]) % p)
            mul2 = np.zeros((q, q), dtype=np.int64)
            nzi = np.arange(1, q)
            la = log[nzi]
            mul2[1:, 1:] = exp[(la[:, None] + la[None, :]) % (q - 1)]
            self._tables = _accel.Tables(add=add2, mul=mul2, neg=neg, inv=inv, q=q)
        else:
            self._tables = None

    def _init_poly(self):
        p, d = self.p, self.r
        mod = np.asarray(self.modulus, dtype=np.int64)
        # reduction table: row k = coefficients of x^k mod f, for k < 2d-1
        red = np.zeros((2 * d - 1, d), dtype=np.float64)
        cur = np.zeros(d, dtype=np.int64)
        cur[0] = 1
        red[0, :] = cur
        for k in range(1, 2 * d - 1):
            nxt = np.zeros(d, dtype=np.int64)
            nxt[1:] = cur[:-1]
            if cur[-1]:
                nxt = (nxt - cur[-1] * mod[:d]) % p
            cur = nxt % p
            red[k, :] = cur
        self._red = red
        self._nfft = 1 << int(np.ceil(np.log2(max(2 * d - 1, 2))))
        self._zero_bytes = bytes(d)
        one = np.zeros(d, dtype=np.uint8)
        one[0] = 1
        self._one_bytes = one.tobytes()

    def _init_frobenius(self):
        p, r = self.p, self.r
        mod = np.asarray(self.modulus, dtype=np.int64)
        xp = _ppowmod(np.array([0, 1], dtype=np.int64), p, mod, p)
        frob = np.zeros((r, r), dtype=np.int64)
        cur = np.array([1], dtype=np.int64)
        for i in range(r):
            frob[: len(cur), i] = cur
            cur = _pmulmod(cur, xp, mod, p)
        self._frob = frob
        if self.tower_levels:
            phis = [frob]  # phi_j = Frobenius^(2^j) as matrix, j = 0..K
            for _ in range(len(self.tower_levels) - 1):
                phis.append(phis[-1] @ phis[-1] % p)
            self._phis = phis

    # -- scalar element API ----------------------------------------------------

    @property
    def zero(self):
        return 0 if self.kind == "tabled" else self._zero_bytes

    @property
    def one(self):
        return 1 if self.kind == "tabled" else self._one_bytes

    def from_coeffs(self, coeffs: Sequence[int]):
        v = np.asarray(list(coeffs) + [0] * (self.r - len(coeffs)), dtype=np.int64) % self.p
        if len(v) != self.r:
            v = v[: self.r]
        if self.kind == "tabled":
            return int(v @ self._powers)
        return v.astype(np.uint8).tobytes()

    def coeffs(self, a) -> tuple[int, ...]:
        if self.kind == "tabled":
            return tuple(int(x) for x in self._digits_scalar(a))
        return tuple(int(x) for x in np.frombuffer(a, dtype=np.uint8))

    def from_int(self, k: int):
        """Element with index k (tabled) or the image of k mod p (poly)."""
        if self.kind == "tabled":
            return int(k) % self.q
        return self.from_coeffs([k % self.p])

    def _digits_scalar(self, a: int) -> np.ndarray:
        return (a // self._powers) % self.p

    def _encode(self, digits: np.ndarray) -> np.ndarray:
        return (digits % self.p) @ self._powers

    def add(self, a, b):
        if self.kind == "tabled":
            return int(self._encode(self._digits_scalar(a) + self._digits_scalar(b)))
        va = np.frombuffer(a, dtype=np.uint8).astype(np.int64)
        vb = np.frombuffer(b, dtype=np.uint8).astype(np.int64)
        return (((va + vb) % self.p).astype(np.uint8)).tobytes()

    def neg(self, a):
        if self.kind == "tabled":
            return int(self._neg1d[a])
        va = np.frombuffer(a, dtype=np.uint8).astype(np.int64)
        return (((-va) % self.p).astype(np.uint8)).tobytes()

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        if self.kind == "tabled":
            if a == 0 or b == 0:
                return 0
            return int(self._exp[(self._log[a] + self._log[b]) % (self.q - 1)])
        va = np.frombuffer(a, dtype=np.uint8).astype(np.float64)
        vb = np.frombuffer(b, dtype=np.uint8).astype(np.float64)
        full = np.convolve(va, vb)
        out = np.rint(full @ self._red[: len(full)]).astype(np.int64) % self.p
        return out.astype(np.uint8).tobytes()

    def inv(self, a):
        if self.kind == "tabled":
            if a == 0:
                raise DivisionByZero("inverse of zero")
            return int(self._inv1d[a])
        if a == self._zero_bytes:
            raise DivisionByZero("inverse of zero")
        return self._poly_inv(a)

    def _poly_inv(self, a):
        p = self.p
        r0 = np.asarray(self.modulus, dtype=np.int64)
        r1 = _ptrim(np.frombuffer(a, dtype=np.uint8).astype(np.int64))
        s0 = np.array([0], dtype=np.int64)
        s1 = np.array([1], dtype=np.int64)
        while len(r1) > 1 or r1[0] != 0:
            # divide r0 by r1
            quo = np.zeros(max(len(r0) - len(r1) + 1, 1), dtype=np.int64)
            rem = r0.copy()
            lead_inv = pow(int(r1[-1]), p - 2, p)
            while len(rem) >= len(r1) and np.any(rem):
                c = rem[-1] * lead_inv % p
                kpos = len(rem) - len(r1)
                quo[kpos] = c
                rem = rem.copy()
                rem[kpos:] = (rem[kpos:] - c * r1) % p
                rem = _ptrim(rem)
                if len(rem) == 1 and rem[0] == 0:
                    break
            new_s = _psub(s0, np.convolve(quo, s1) % p, p)
            r0, r1 = r1, rem
            s0, s1 = s1, new_s
        if len(r0) != 1:
            raise DivisionByZero("element not invertible")
        c_inv = pow(int(r0[0]), p - 2, p)
        out = np.zeros(self.r, dtype=np.int64)
        out[: len(s0)] = s0 * c_inv % p
        return out.astype(np.uint8).tobytes()

    def pow_(self, a, e: int):
        if e < 0:
            return self.pow_(self.inv(a), -e)
        result = self.one
        base = a
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def elements(self) -> Iterator:
        if self.kind != "tabled":
            raise TowerTooShallow("cannot enumerate a large field")
        return iter(range(self.q))

    # -- trace / Frobenius / tower ----------------------------------------------

    def trace(self, a) -> int:
        """Trace of the multiplication-by-a map, as an integer in [0, p)."""
        if not hasattr(self, "_trace_vec"):
            p, r = self.p, self.r
            mod = np.asarray(self.modulus, dtype=np.int64)
            # x^k mod f for k in [0, 2r-2]; trace of mult-by-x^i is
            # sum_j coeff_j(x^{i+j} mod f)
            pows = []
            cur = np.array([1], dtype=np.int64)
            for _ in range(2 * r - 1):
                row = np.zeros(r, dtype=np.int64)
                row[: len(cur)] = cur
                pows.append(row)
                cur = _pmulmod(cur, np.array([0, 1], dtype=np.int64), mod, p)
            tv = np.array(
                [sum(int(pows[i + j][j]) for j in range(r)) % p for i in range(r)],
                dtype=np.int64,
            )
            self._trace_vec = tv
        c = np.asarray(self.coeffs(a), dtype=np.int64)
        return int((c @ self._trace_vec) % self.p)

    def frobenius(self, a):
        c = np.asarray(self.coeffs(a), dtype=np.int64)
        return self.from_coeffs((self._frob @ c) % self.p)

    def tower_level(self, a) -> int:
        """Smallest j with a fixed by Frobenius^(2^j); requires a tower."""
        if not self.tower_levels:
            raise NoTower("field has no tower structure")
        c = np.asarray(self.coeffs(a), dtype=np.int64)
        for j, phi in enumerate(self._phis):
            if np.array_equal(phi @ c % self.p, c):
                return j
        raise AssertionError("element not fixed by full Frobenius orbit")

    def _subfield_basis(self, j: int) -> np.ndarray:
        """F_p-basis (columns) of the level-j subfield."""
        if j not in self._sub_bases:
            if j == 0:
                b = np.zeros((self.r, 1), dtype=np.int64)
                b[0, 0] = 1
            else:
                eye = np.eye(self.r, dtype=np.int64)
                b = _modp_nullspace((self._phis[j] - eye) % self.p, self.p)
            self._sub_bases[j] = b
        return self._sub_bases[j]

    def level_gen(self, j: int):
        """Canonical generator e_j of the level-j subfield (j >= 1)."""
        if not self.tower_levels:
            raise NoTower("field has no tower structure")
        if not 1 <= j < len(self.tower_levels):
            raise TowerTooShallow(f"tower has no level {j}")
        if j not in self._level_gens:
            if self.kind == "tabled":
                dj = self.tower_levels[j]
                m = (self.q - 1) // (self.p**dj - 1)
                e = int(self._exp[m % (self.q - 1)])
                self._level_gens[j] = e
            else:
                basis = self._subfield_basis(j)
                phi_prev = self._phis[j - 1]
                e = None
                for col in basis.T:
                    if not np.array_equal(phi_prev @ col % self.p, col):
                        e = self.from_coeffs(col)
                        break
                assert e is not None
                self._level_gens[j] = e
        return self._level_gens[j]

    def pick_fresh(self, j: int, variant: int = 0):
        """Deterministic element of tower level exactly j.

        variant 0 is the canonical generator e_j; higher variants add
        distinct elements of strictly lower level, which preserves the level.
        """
        e = self.level_gen(j)
        if variant == 0:
            return e
        basis = self._subfield_basis(j - 1) if j >= 1 else self._subfield_basis(0)
        ncomb = self.p ** basis.shape[1]
        v = variant % ncomb
        digs = np.array([(v // self.p**i) % self.p for i in range(basis.shape[1])],
                        dtype=np.int64)
        shift = self.from_coeffs(basis @ digs % self.p)
        return self.add(e, shift)

    # -- vectorized cell ops (backing arrays used by linalg) --------------------
    #
    # Tabled fields store a matrix cell as an int64 element index; poly fields
    # store it as a length-r int64 coefficient row.  The ax_* ops broadcast.

    def ax_add(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.kind == "tabled":
            a, b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
            if self._tables is not None:
                return self._tables.add[a, b]
            da = (a[..., None] // self._powers) % self.p
            db = (b[..., None] // self._powers) % self.p
            return ((da + db) % self.p) @ self._powers
        return (np.asarray(a, dtype=np.int64) + np.asarray(b, dtype=np.int64)) % self.p

    def ax_neg(self, a: np.ndarray) -> np.ndarray:
        if self.kind == "tabled":
            return self._neg1d[np.asarray(a, dtype=np.int64)]
        return (-np.asarray(a, dtype=np.int64)) % self.p

    def ax_mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.kind == "tabled":
            a, b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
            if self._tables is not None:
                return self._tables.mul[a, b]
            a, b = np.broadcast_arrays(a, b)
            out = np.zeros(a.shape, dtype=np.int64)
            mask = (a != 0) & (b != 0)
            if mask.any():
                out[mask] = self._exp[(self._log[a[mask]] + self._log[b[mask]]) % (self.q - 1)]
            return out
        fa = np.fft.rfft(np.asarray(a, dtype=np.float64), self._nfft, axis=-1)
        fb = np.fft.rfft(np.asarray(b, dtype=np.float64), self._nfft, axis=-1)
        full = np.fft.irfft(fa * fb, self._nfft, axis=-1)[..., : 2 * self.r - 1]
        reduced = np.rint(full) @ self._red
        return np.rint(reduced).astype(np.int64) % self.p

    def ax_nonzero(self, a: np.ndarray) -> np.ndarray:
        """Boolean mask of nonzero cells (drops the coefficient axis if any)."""
        if self.kind == "tabled":
            return np.asarray(a) != 0
        return np.asarray(a).any(axis=-1)

    def cell_to_token(self, cell):
        if self.kind == "tabled":
            return int(cell)
        return np.asarray(cell, dtype=np.int64).astype(np.uint8).tobytes()

    def token_to_cell(self, token):
        if self.kind == "tabled":
            return int(token)
        return np.frombuffer(token, dtype=np.uint8).astype(np.int64)

    def cell_zeros(self, *shape) -> np.ndarray:
        if self.kind == "tabled":
            return np.zeros(shape, dtype=np.int64)
        return np.zeros(shape + (self.r,), dtype=np.int64)

    # -- serialization -----------------------------------------------------------

    def to_json(self) -> dict:
        out = {"p": self.p, "r": self.r, "poly": list(self.modulus)}
        if self.tower_levels:
            out["tower"] = list(self.tower_levels)
        return out

    def tables(self) -> Optional[_accel.Tables]:
        return getattr(self, "_tables", None)

    def __repr__(self):
        tower = f", tower={list(self.tower_levels)}" if self.tower_levels else ""
        return f"FieldCtx(GF({self.p}^{self.r}){tower})"


_REGISTRY: dict[tuple, FieldCtx] = {}


def field_build(p: int, r: int, poly: Optional[Sequence[int]] = None) -> FieldCtx:
    """GF(p^r) with the given monic modulus, or the canonical one if omitted."""
    if not _is_prime(p):
        raise NotPrime(f"{p} is not prime")
    if r < 1:
        raise ReduciblePolynomial("extension degree must be >= 1")
    if poly is None:
        modulus = _find_irreducible(p, r)
    else:
        modulus = tuple(int(c) % p for c in poly)
        if len(modulus) != r + 1 or modulus[-1] != 1:
            raise ReduciblePolynomial("modulus must be monic of degree r")
        if r > 1 and not is_irreducible(modulus, p):
            raise ReduciblePolynomial(f"{list(modulus)} is reducible over F_{p}")
    key = (p, r, modulus, None)
    if key not in _REGISTRY:
        _REGISTRY[key] = FieldCtx(p, r, modulus, None)
    return _REGISTRY[key]


def tower_build(p: int, depth: int) -> FieldCtx:
    """Ambient field of degree 2^depth over F_p with the full subfield chain."""
    if not _is_prime(p):
        raise NotPrime(f"{p} is not prime")
    if depth < 1:
        raise TowerTooShallow("tower depth must be >= 1")
    r = 1 << depth
    modulus = _find_irreducible(p, r)
    levels = tuple(1 << j for j in range(depth + 1))
    key = (p, r, modulus, levels)
    if key not in _REGISTRY:
        _REGISTRY[key] = FieldCtx(p, r, modulus, levels)
    return _REGISTRY[key]


def field_from_json(d: dict) -> FieldCtx:
    p, r = int(d["p"]), int(d["r"])
    poly = d.get("poly")
    tower = d.get("tower")
    if tower:
        depth = len(tower) - 1
        ctx = tower_build(p, depth)
        if list(ctx.tower_levels) != [int(t) for t in tower]:
            raise ReduciblePolynomial("tower degrees must be 1,2,4,...,2^K")
        return ctx
    return field_build(p, r, poly)
