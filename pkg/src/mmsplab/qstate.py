"""Exact dense-state oracle for odd prime local dimension q.

Implements generalized Pauli (Weyl) displacement operators, stabilizer
states and entangled code resources built from self-column-orthogonal
matrices over F_q, displaced-basis measurements, partial traces, channels,
and entropic metrics.  States carry shape (q,)*m amplitude arrays; register
order for protocol states is [D_1..D_n, E_1..E_n].

Group phases use the symmetric alignment SW(a,b) = w^(ab/2) X(a) Z(b)
(2^{-1} taken mod p), under which SW(v)SW(w) = w^(-symp(v,w)/2) SW(v+w);
on an isotropic span this is an exact representation, so stabilizer
projectors need no per-generator phase hunting.  Protocol statistics are
invariant under the alignment choice (runs conjugate by plain Weyls).

Displaced-basis measurements {W(z) sigma W(z)^dag} are evaluated without
materializing the operator family: probabilities come from correlation
transforms of sigma's eigenvectors (a DFT over the Z part), which keeps the
full-set decoders at n = 3 fast.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    BadRegisters,
    IncompletePovm,
    NonPrimeLocalDim,
    NotAState,
    NotMaximalIsotropic,
    NoFixedVector,
)
from .fields import _is_prime
from .linalg import MatGF, dual_and_completion, hstack, is_self_col_orth, rank

DENSE_DIM_LIMIT = 1 << 14
PSD_TOL = 1e-10
POVM_TOL = 1e-10
EIG_CUTOFF = 1e-12


def _omega_powers(q: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(q) / q)


@dataclass
class DenseState:
    """Pure state on m registers of local dimension q (unit norm)."""

    q: int
    amps: np.ndarray

    def __post_init__(self):
        if self.q ** self.nregs > DENSE_DIM_LIMIT:
            raise NotAState(f"dense states capped at dimension {DENSE_DIM_LIMIT}")
        nrm = np.linalg.norm(self.amps)
        if abs(nrm - 1.0) > 1e-9:
            raise NotAState(f"state norm {nrm} != 1")

    @property
    def nregs(self) -> int:
        return self.amps.ndim

    @property
    def dim(self) -> int:
        return self.amps.size

    def vector(self) -> np.ndarray:
        return self.amps.reshape(-1)


@dataclass
class DensityMatrix:
    """Mixed state: Hermitian, PSD within 1e-10, unit trace within 1e-12."""

    q: int
    nregs: int
    mat: np.ndarray

    def __post_init__(self):
        d = self.q**self.nregs
        if self.mat.shape != (d, d):
            raise NotAState("density matrix shape mismatch")
        tr = np.trace(self.mat)
        if abs(tr.real - 1.0) > 1e-9 or abs(tr.imag) > 1e-9:
            raise NotAState("trace != 1")
        if np.linalg.norm(self.mat - self.mat.conj().T) > 1e-9:
            raise NotAState("not Hermitian")
        w = np.linalg.eigvalsh(self.mat)
        if w.min() < -PSD_TOL:
            raise NotAState(f"not PSD: min eigenvalue {w.min()}")


# ---------------------------------------------------------------------------
# Weyl operators
# ---------------------------------------------------------------------------

def weyl(q: int, a: int, b: int) -> np.ndarray:
    """The q x q matrix W(a,b) = X(a) Z(b) = sum_j w^(bj) |j+a><j|."""
    if not _is_prime(q):
        raise NonPrimeLocalDim(f"dense oracle needs prime local dimension, got {q}")
    om = _omega_powers(q)
    m = np.zeros((q, q), dtype=np.complex128)
    for j in range(q):
        m[(j + a) % q, j] = om[(b * j) % q]
    return m


def apply_weyl(amps: np.ndarray, q: int, disp: Sequence[int],
               regs: Sequence[int]) -> np.ndarray:
    """Apply W(a_i, b_i) on each register in regs; disp = (a... | b...)."""
    k = len(regs)
    om = _omega_powers(q)
    out = amps
    for idx, axis in enumerate(regs):
        ai, bi = int(disp[idx]) % q, int(disp[k + idx]) % q
        if bi:
            shape = [1] * out.ndim
            shape[axis] = q
            out = out * om[(np.arange(q) * bi) % q].reshape(shape)
        if ai:
            out = np.roll(out, ai, axis=axis)
    return out


def aligned_phase(q: int, disp: Sequence[int]) -> complex:
    """Phase making SW(v) = phase * W(v) a representation on isotropic spans."""
    k = len(disp) // 2
    inv2 = pow(2, -1, q)
    s = sum(int(disp[i]) * int(disp[k + i]) for i in range(k)) % q
    return _omega_powers(q)[(inv2 * s) % q]


def apply_sw(amps: np.ndarray, q: int, disp: Sequence[int],
             regs: Sequence[int]) -> np.ndarray:
    return aligned_phase(q, disp) * apply_weyl(amps, q, disp, regs)


def weyl_matrix(q: int, n: int, disp: Sequence[int]) -> np.ndarray:
    """Dense q^n x q^n matrix of the n-register displacement operator."""
    d = q**n
    eye = np.eye(d, dtype=np.complex128).reshape((q,) * n + (d,))
    out = apply_weyl(eye, q, disp, list(range(n)))
    return out.reshape(d, d)


# ---------------------------------------------------------------------------
# joint eigenvectors of commuting aligned Weyl families
# ---------------------------------------------------------------------------

def joint_eigenvector(q: int, n: int, gens: np.ndarray,
                      phases: Sequence[int]) -> np.ndarray:
    """Unit vector with SW(gens[:, i])-eigenvalue w^(phases[i]) for all i.

    gens: 2n x k integer matrix with isotropic, independent columns; the
    group-average projector is applied to computational seed vectors until a
    nonzero image appears.  The global phase is fixed deterministically.
    """
    k = gens.shape[1]
    om = _omega_powers(q)
    dims = (q,) * n
    regs = list(range(n))
    phase_vec = np.asarray(phases, dtype=np.int64)
    for seed in range(q**n):
        sidx = np.unravel_index(seed, dims) if n else ()
        base = np.zeros(dims, dtype=np.complex128)
        base[sidx] = 1.0
        acc = np.zeros(dims, dtype=np.complex128)
        for cidx in range(q**k):
            c = np.array([(cidx // q**i) % q for i in range(k)], dtype=np.int64)
            disp = (gens @ c) % q if k else np.zeros(2 * n, dtype=np.int64)
            ph = om[int(c @ phase_vec) % q].conjugate() if k else 1.0
            acc = acc + ph * apply_sw(base, q, disp, regs)
        nrm = np.linalg.norm(acc)
        if nrm > 1e-8:
            v = acc / nrm
            flat = v.reshape(-1)
            nz = np.flatnonzero(np.abs(flat) > 1e-9)[0]
            return v * (np.abs(flat[nz]) / flat[nz])
    raise NoFixedVector("no joint eigenvector found (phase alignment failed)")


class StabFrame:
    """Eigenbasis machinery for a self-column-orthogonal G1 over prime F_q.

    Completes G1 to a Lagrangian (G1 | Gbar) and provides the joint
    eigenvectors |x,y> with SW(g_j)-eigenvalue w^(y_j) and SW(gbar_j)-
    eigenvalue w^(x_j).  Entangled resources put the complex conjugate of
    |x,y> on the end-user half, so per-vector phase choices cancel.
    """

    def __init__(self, g1: MatGF):
        ctx = g1.ctx
        if ctx.r != 1 or not _is_prime(ctx.q) or ctx.q == 2:
            raise NonPrimeLocalDim("dense oracle needs odd prime q with r = 1")
        if g1.rows % 2:
            raise NotMaximalIsotropic("expected 2n rows")
        if g1.cols and rank(g1) != g1.cols:
            raise NotMaximalIsotropic("G1 has dependent columns")
        if not is_self_col_orth(g1):
            raise NotMaximalIsotropic("G1 is not self-column-orthogonal")
        self.ctx = ctx
        self.q = ctx.q
        self.n = g1.rows // 2
        self.y1 = g1.cols
        self.g1 = g1
        gbar, h1 = dual_and_completion(g1)
        self.gbar, self.h1 = gbar, h1
        self.lag = hstack([g1, gbar])
        self._lag_int = self.lag.a.astype(np.int64)
        self._kets: dict = {}
        self._res: dict = {}

    def ket(self, x: Sequence[int], y: Sequence[int]) -> np.ndarray:
        x = tuple(int(v) % self.q for v in x)
        y = tuple(int(v) % self.q for v in y)
        key = (x, y)
        if key not in self._kets:
            phases = list(y) + list(x)
            self._kets[key] = joint_eigenvector(self.q, self.n,
                                                self._lag_int, phases)
        return self._kets[key]

    def code_isometry(self) -> np.ndarray:
        """(q^n, q^(n-y1)) isometry |x> -> |x, 0>."""
        kdim = self.n - self.y1
        cols = []
        for xi in range(self.q**kdim):
            x = [(xi // self.q**i) % self.q for i in range(kdim)]
            cols.append(self.ket(x, [0] * self.y1).reshape(-1))
        return np.stack(cols, axis=1)

    def resource(self, y: Sequence[int]) -> np.ndarray:
        """|Phi[y, G1]> amplitudes on 2n registers [D..., E...]."""
        y = tuple(int(v) % self.q for v in y)
        if y not in self._res:
            q, n, y1 = self.q, self.n, self.y1
            kdim = n - y1
            out = np.zeros((q,) * (2 * n), dtype=np.complex128)
            for xi in range(q**kdim):
                x = [(xi // q**i) % q for i in range(kdim)]
                k = self.ket(x, y)
                out = out + np.multiply.outer(k, k.conj())
            self._res[y] = out / np.sqrt(q**kdim)
        return self._res[y]


_FRAMES: dict = {}


def frame_for(g1: MatGF) -> StabFrame:
    key = (id(g1.ctx), g1.a.shape, g1.a.tobytes())
    if key not in _FRAMES:
        _FRAMES[key] = StabFrame(g1)
    return _FRAMES[key]


def stabilizer_state(g1: MatGF) -> DenseState:
    """Joint fixed vector of the aligned Weyl family of a maximal isotropic
    G1 (2n x n, full rank); verified against every generator."""
    fr = frame_for(g1)
    if fr.y1 != fr.n:
        raise NotMaximalIsotropic(f"need n={fr.n} columns, got {fr.y1}")
    v = fr.ket([], [0] * fr.n)
    for j in range(fr.n):
        w = apply_sw(v, fr.q, fr._lag_int[:, j], list(range(fr.n)))
        if np.linalg.norm(w - v) > 1e-10:
            raise NoFixedVector(f"generator {j} does not fix the state")
    return DenseState(q=fr.q, amps=v)


def ea_resource(g1: MatGF, y: Sequence[int]) -> DenseState:
    """|Phi[y, G1]> as a 2n-register state (dealer tensor conjugate user)."""
    fr = frame_for(g1)
    return DenseState(q=fr.q, amps=fr.resource(y))


# ---------------------------------------------------------------------------
# partial trace / reductions
# ---------------------------------------------------------------------------

def reduce_state(amps: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Density matrix of a pure state on the kept registers (sorted order)."""
    m = amps.ndim
    keep = sorted(keep)
    if any(not 0 <= k < m for k in keep) or len(set(keep)) != len(keep):
        raise BadRegisters(f"keep={keep} invalid for {m} registers")
    drop = [i for i in range(m) if i not in keep]
    q = amps.shape[0] if m else 1
    psi = np.transpose(amps, keep + drop).reshape(q ** len(keep), -1)
    return psi @ psi.conj().T


def partial_trace(rho: np.ndarray, q: int, nregs: int,
                  keep: Sequence[int]) -> np.ndarray:
    """Partial trace of a density matrix over the dropped registers."""
    keep = sorted(keep)
    if any(not 0 <= k < nregs for k in keep) or len(set(keep)) != len(keep):
        raise BadRegisters(f"keep={keep} invalid for {nregs} registers")
    drop = [i for i in range(nregs) if i not in keep]
    perm = keep + drop
    t = rho.reshape((q,) * (2 * nregs))
    t = np.transpose(t, perm + [nregs + p for p in perm])
    dk, dd = q ** len(keep), q ** len(drop)
    t = t.reshape(dk, dd, dk, dd)
    return np.einsum("ibjb->ij", t)


# ---------------------------------------------------------------------------
# displaced-basis measurements
# ---------------------------------------------------------------------------

class DisplacedMeasurement:
    """The outcome family {W_A(z) sigma W_A(z)^dag : z in F_q^(2 n_act)}.

    sigma acts on (n_act displaced registers) x (a rest factor); it is
    eigendecomposed once, and Born probabilities are evaluated for pure
    states via correlation transforms (roll + DFT), never materializing the
    q^(2 n_act) operators.  The family is normalized so the elements sum to
    the projector onto their joint support; states outside the support feed
    a complement outcome labeled None.
    """

    def __init__(self, q: int, n_act: int, sigma: np.ndarray, rest_dim: int):
        self.q, self.n_act, self.rest = q, n_act, rest_dim
        d = sigma.shape[0]
        if d != q**n_act * rest_dim:
            raise BadRegisters("sigma dimension mismatch")
        self.d = d
        w, v = np.linalg.eigh(sigma)
        sel = w > 1e-12
        self.eigvals = w[sel]
        self.eigvecs = v[:, sel]
        self.nout = q ** (2 * n_act)
        # the family sums to lam times the projector onto its joint support;
        # calibrate lam against sigma's own top eigenvector, which lies in
        # the support by construction (input-independent, deterministic)
        self._lam = 1.0
        probe = self.eigvecs[:, -1]
        total = self.probabilities([(1.0, probe)])[:-1].sum()
        if total <= 1e-12:
            raise IncompletePovm("degenerate displaced family")
        if self.eigvecs.shape[1] > 1:
            other = self.probabilities([(1.0, self.eigvecs[:, 0])])[:-1].sum()
            if abs(other - total) > 1e-8 * total:
                raise IncompletePovm(
                    "displacement family does not tile its support uniformly")
        self._lam = float(total)

    def _correlate(self, phi: np.ndarray, psi: np.ndarray) -> np.ndarray:
        """<W(z) phi | psi> for all z; returns shape (q,)*2n_act (a..., b...)."""
        q, n = self.q, self.n_act
        phi_t = phi.reshape((q,) * n + (self.rest,))
        psi_t = psi.reshape((q,) * n + (self.rest,))
        out = np.zeros((q,) * (2 * n), dtype=np.complex128)
        # <W(a,b) phi | psi> = sum_k conj(phi[k]) w^{-b.k} psi[k + a]
        for aidx in range(q**n):
            a = tuple((aidx // q**i) % q for i in range(n))
            shifted = psi_t
            for ax, ai in enumerate(a):
                if ai:
                    shifted = np.roll(shifted, -ai, axis=ax)
            c = (phi_t.conj() * shifted).sum(axis=-1)
            # g(b) = sum_k w^{-b.k} c[k] = fft (numpy's sign convention)
            out[a] = np.fft.fftn(c)
        return out

    def probabilities(self, components: list) -> np.ndarray:
        """Born distribution over z (+ complement tail) for a mixture given
        as [(weight, pure amplitude array), ...]."""
        q, n = self.q, self.n_act
        acc = np.zeros((q,) * (2 * n), dtype=np.float64)
        for wgt, amps in components:
            psi = amps.reshape(-1)
            for lam, phi in zip(self.eigvals, self.eigvecs.T):
                g = self._correlate(phi, psi)
                acc += wgt * lam * np.abs(g) ** 2
        flat = acc.reshape(-1)
        probs = flat / self._lam
        tail = max(0.0, 1.0 - probs.sum())
        return np.concatenate([probs, [tail]])

    def label(self, idx: int):
        if idx == self.nout:
            return None
        q, n = self.q, self.n_act
        return tuple(int(v) for v in np.unravel_index(idx, (q,) * (2 * n)))

    def index_of(self, label: Sequence[int]) -> int:
        q, n = self.q, self.n_act
        return int(np.ravel_multi_index([int(v) % q for v in label],
                                        (q,) * (2 * n)))


def displaced_measurement_for(g1: MatGF, subset: Sequence[int]) -> DisplacedMeasurement:
    """The decoder measurement on (D[A], E[A]): base sigma is the reduction
    of |Phi[0, G1]> and displacements act on the D[A] registers."""
    fr = frame_for(g1)
    n, q = fr.n, fr.q
    sub = sorted(int(s) for s in subset)
    keep = [s - 1 for s in sub] + [n + s - 1 for s in sub]
    sigma = reduce_state(fr.resource([0] * fr.y1), keep)
    # register order after reduce: D[A] then E[A]
    return DisplacedMeasurement(q, len(sub), sigma, rest_dim=q ** len(sub))


# ---------------------------------------------------------------------------
# explicit small POVMs (for teleportation-style decoding)
# ---------------------------------------------------------------------------

@dataclass
class Povm:
    """Labeled positive operators summing to the identity within 1e-10."""

    labels: list
    ops: np.ndarray  # (k, d, d)

    def __post_init__(self):
        total = self.ops.sum(axis=0)
        d = total.shape[0]
        if np.linalg.norm(total - np.eye(d)) > POVM_TOL * d:
            raise IncompletePovm("POVM elements do not sum to the identity")

    def probabilities(self, rho: np.ndarray) -> np.ndarray:
        p = np.einsum("kij,ji->k", self.ops, rho).real
        return np.clip(p, 0.0, None)


def measure(rho: np.ndarray, povm: Povm, seed: int):
    """Sample one outcome; returns (label, full Born distribution)."""
    probs = povm.probabilities(rho)
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    idx = int(rng.choice(len(probs), p=probs))
    return povm.labels[idx], probs


def bell_basis_povm(q: int, n: int) -> Povm:
    """The rank-one family {(W(z) (x) I)|phi><phi|(...)^dag} on 2n registers
    arranged as (D..., E...); exactly complete."""
    d = q**n
    phi = np.eye(d, dtype=np.complex128).reshape((q,) * n + (q,) * n)
    phi = phi / np.sqrt(d)
    ops, labels = [], []
    for zi in range(q ** (2 * n)):
        z = [(zi // q**i) % q for i in range(2 * n)]
        vec = apply_weyl(phi, q, z, list(range(n))).reshape(-1)
        ops.append(np.outer(vec, vec.conj()))
        labels.append(tuple(z))
    return Povm(labels=labels, ops=np.stack(ops, axis=0))


# ---------------------------------------------------------------------------
# entropic metrics
# ---------------------------------------------------------------------------

def vn_entropy(rho: np.ndarray) -> float:
    """von Neumann entropy in bits."""
    w = np.linalg.eigvalsh(rho)
    w = w[w > EIG_CUTOFF]
    return float(-(w * np.log2(w)).sum())


def rel_entropy(rho: np.ndarray, sigma: np.ndarray) -> float:
    """D(rho || sigma) in bits; +inf when supp(rho) escapes supp(sigma)."""
    ws, vs = np.linalg.eigh(sigma)
    kernel = vs[:, ws <= EIG_CUTOFF]
    if kernel.shape[1]:
        leak = np.linalg.norm(kernel.conj().T @ rho @ kernel)
        if leak > 1e-10:
            return float("inf")
    wr, vr = np.linalg.eigh(rho)
    log_sigma = (vs * np.log2(np.clip(ws, EIG_CUTOFF, None))) @ vs.conj().T
    ent = 0.0
    for lam, vec in zip(wr, vr.T):
        if lam > EIG_CUTOFF:
            ent += lam * np.log2(lam)
            ent -= lam * float((vec.conj() @ log_sigma @ vec).real)
    return float(ent)


def mutual_info(rho: np.ndarray, q: int, nregs: int,
                part_a: Sequence[int]) -> float:
    """I(A;B) = S(A) + S(B) - S(AB) in bits over a register bipartition."""
    part_a = sorted(part_a)
    part_b = [i for i in range(nregs) if i not in part_a]
    ra = partial_trace(rho, q, nregs, part_a)
    rb = partial_trace(rho, q, nregs, part_b)
    return vn_entropy(ra) + vn_entropy(rb) - vn_entropy(rho)


def mutual_info_dims(rho: np.ndarray, da: int, db: int) -> float:
    """I(A;B) for an explicit (da x db) x (da x db) bipartite density."""
    t = rho.reshape(da, db, da, db)
    ra = np.einsum("ibjb->ij", t)
    rb = np.einsum("aiaj->ij", t)
    return vn_entropy(ra) + vn_entropy(rb) - vn_entropy(rho)


# ---------------------------------------------------------------------------
# channels
# ---------------------------------------------------------------------------

@dataclass
class Channel:
    """A TP-CP map as a matrix function with explicit dimensions."""

    din: int
    dout: int
    fn: Callable[[np.ndarray], np.ndarray]

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return self.fn(rho)

    def choi(self) -> np.ndarray:
        """(1/din) sum_{ij} |i><j| (x) L(|i><j|)."""
        d = self.din
        c = np.zeros((d * self.dout, d * self.dout), dtype=np.complex128)
        for i in range(d):
            for j in range(d):
                e = np.zeros((d, d), dtype=np.complex128)
                e[i, j] = 1.0
                c[i * self.dout:(i + 1) * self.dout,
                  j * self.dout:(j + 1) * self.dout] = self.fn(e)
        return c / d


def identity_channel(d: int) -> Channel:
    return Channel(din=d, dout=d, fn=lambda rho: rho.copy())


def depolarizing_channel(d: int) -> Channel:
    return Channel(din=d, dout=d,
                   fn=lambda rho: np.trace(rho) * np.eye(d) / d)


def compose(after: Channel, before: Channel) -> Channel:
    if after.din != before.dout:
        raise BadRegisters("channel dimensions do not compose")
    return Channel(din=before.din, dout=after.dout,
                   fn=lambda rho: after.fn(before.fn(rho)))


def choi_fidelity_identity(chan: Channel) -> float:
    """Entanglement fidelity with the identity channel (1.0 iff identity on
    the maximally entangled input)."""
    d = chan.din
    c = chan.choi()
    phi = np.zeros(d * d, dtype=np.complex128)
    for i in range(d):
        phi[i * d + i] = 1.0
    phi /= np.sqrt(d)
    return float((phi.conj() @ c @ phi).real)


def gamma_bar(q: int, n_out: int, povm: Povm, d_b: int,
              label_side: str = "R") -> Channel:
    """Teleportation-style decoder: measure the POVM on (R, B) against a
    fresh maximally entangled (R, A) pair and apply the label's correction
    unitary on A.

    Labels are displacement tuples in F_q^(2 n_out); a None label (the
    completion element) receives no correction.  label_side records which
    half of the discriminated entangled family carried the displacement:
    "R" (Bell basis built by displacing the reference half) corrects with
    W(-a, b); "A" (channel-input displacements, as in perfect dense coding)
    corrects with W(a, b).  Both choices are pinned by the teleportation
    identity test.
    """
    d_a = q**n_out
    phi = np.eye(d_a, dtype=np.complex128) / np.sqrt(d_a)  # phi[r, a]
    corrections = {}
    for label in povm.labels:
        if label is not None and label not in corrections:
            if label_side == "R":
                corr = [(-int(v)) % q for v in label[:n_out]] \
                    + [int(v) % q for v in label[n_out:]]
            else:
                corr = [int(v) % q for v in label]
            corrections[label] = weyl_matrix(q, n_out, corr)

    def fn(rho_b: np.ndarray) -> np.ndarray:
        out = np.zeros((d_a, d_a), dtype=np.complex128)
        for label, op in zip(povm.labels, povm.ops):
            pi = op.reshape(d_a, d_b, d_a, d_b)
            m = np.einsum("ra,sc,bd,sdrb->ac", phi, phi.conj(), rho_b, pi,
                          optimize=True)
            if label is not None:
                u = corrections[label]
                m = u @ m @ u.conj().T
            out += m
        return out

    return Channel(din=d_b, dout=d_a, fn=fn)
