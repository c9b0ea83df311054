"""Protocol runners, audits, conversions, and the symplectic-track backend."""

import numpy as np
import pytest

from mmsplab import qprotocols as qp
from mmsplab import qstate as qs
from mmsplab.access import make_threshold, symplectify_structure
from mmsplab.errors import ClassMismatch, TooLarge
from mmsplab.fields import field_build
from mmsplab.fixtures import example1, example2, example3
from mmsplab.linalg import MatGF, VecGF
from mmsplab.mmsp import make_bundle

F3 = field_build(3, 1)


@pytest.fixture(scope="module")
def ex1():
    return example1()


@pytest.fixture(scope="module")
def ex2():
    return example2()


def test_eass_run_both_backends(ex1):
    m = VecGF.from_ints(F3, [1, 2])
    tr = qp.run_eass(ex1.bundle, m, seed=3, access=ex1.access)
    assert all(v == [1, 2] for v in tr.outcome.values())
    tr2 = qp.run_eass(ex1.bundle, m, seed=3, access=ex1.access,
                      backend="symplectic")
    assert tr2.outcome == tr.outcome


def test_run_class_mismatch(ex1):
    with pytest.raises(ClassMismatch):
        qp.run_cqss(ex1.bundle, VecGF.zeros(F3, 2), 0, ex1.access)


def test_feass_runner(ex1):
    m = VecGF.from_ints(F3, [0, 1])
    tr = qp.run_feass(ex1.g1, ex1.f, m, seed=5, access=ex1.access)
    assert all(v == [0, 1] for v in tr.outcome.values())


def test_eass_audit_example1(ex1):
    rep = qp.audit_ss(ex1.bundle, ex1.access, protocol="eass")
    assert rep.secure and rep.matches_classify


def test_cqss_audit_example2(ex2):
    rep = qp.audit_ss(ex2.bundle, ex2.access, protocol="cqss")
    assert rep.secure and rep.matches_classify


def test_eass_audit_example3():
    ex3 = example3(3)
    rep = qp.audit_ss(ex3.bundle, ex3.access, protocol="eass")
    assert rep.secure and rep.matches_classify


def test_modified_eass_matches_eass(ex1):
    for mi in (0, 4, 7):
        m = VecGF.from_ints(F3, [mi % 3, mi // 3])
        mod = qp.run_modified_eass(ex1.bundle, m, seed=0, access=ex1.access)
        direct = qp.eass_decoded_distributions(ex1.bundle, m, ex1.access)
        for key in direct:
            d1, d2 = mod.outcome[key], direct[key]
            ks = set(d1) | set(d2)
            assert all(abs(d1.get(k, 0) - d2.get(k, 0)) < 1e-9 for k in ks)


def test_modified_eass_y1_zero_is_feass(ex1):
    empty = MatGF.zeros(F3, 6, 0)
    bundle = make_bundle("ea", empty, ex1.g1, ex1.f, n=3)
    m = VecGF.from_ints(F3, [1, 0])
    mod = qp.run_modified_eass(bundle, m, seed=0, access=ex1.access)
    direct = qp.eass_decoded_distributions(bundle, m, ex1.access)
    for key in direct:
        d1, d2 = mod.outcome[key], direct[key]
        ks = set(d1) | set(d2)
        assert all(abs(d1.get(k, 0) - d2.get(k, 0)) < 1e-9 for k in ks)


def test_backend_crossvalidation_exhaustive(ex1):
    engine = qp.EaEngine(g1=ex1.g1, g2=ex1.bundle.g2, f=ex1.f)
    for mi in range(9):
        m = np.array([mi % 3, mi // 3], dtype=np.int64)
        comps = engine.share_components(engine.message_displacements(m))
        for a in ([1, 2], [2, 3], [1, 2, 3]):
            dec = qp.DispDecoder(ex1.g1, ex1.bundle.g2, ex1.f, a)
            dist = engine.coset_distribution(a, comps, dec)
            rep, _ = qp.symp_track(ex1.bundle, m, np.zeros(0, dtype=np.int64), a)
            assert abs(dist.get(rep, 0.0) - 1.0) < 1e-9


def test_symp_track_large_field():
    # works at n = 8, q = 9, where the dense backend refuses
    f9 = field_build(3, 2, [2, 2, 1])
    rng = np.random.default_rng(0)
    g1 = MatGF.zeros(f9, 16, 0)
    g2 = MatGF(f9, rng.integers(0, 9, size=(16, 2)).astype(np.int64))
    f = MatGF(f9, rng.integers(0, 9, size=(16, 2)).astype(np.int64))
    bundle = make_bundle("ea", g1, g2, f, n=8)
    with pytest.raises(TooLarge):
        qp.EaEngine(g1=g1, g2=g2, f=f)
    m = np.array([4, 7], dtype=np.int64)
    u2 = np.array([1, 8], dtype=np.int64)
    rep, decoded = qp.symp_track(bundle, m, u2, list(range(1, 9)))
    assert decoded is not None
    assert [int(v) for v in decoded.a] == [4, 7]


def test_symp_track_zero_inputs(ex1):
    rep, decoded = qp.symp_track(ex1.bundle, np.zeros(2, dtype=np.int64),
                                 np.zeros(0, dtype=np.int64), [1, 2])
    assert all(v == 0 for v in rep)
    assert decoded is not None and all(int(v) == 0 for v in decoded.a)


def test_qqss_run_and_audit(ex1):
    bqq = make_bundle("qq", ex1.g1, None, ex1.f, n=3)
    rho = np.zeros((3, 3), dtype=complex)
    rho[2, 2] = 1.0
    tr, rec = qp.run_qqss(bqq, rho, seed=0, subset=[2, 3])
    assert np.real(np.trace(rec @ rho)) > 1 - 1e-9
    rep = qp.audit_qqss(bqq, ex1.access)
    assert rep.secure and rep.matches_classify


def test_qqss_identity_code_degenerate():
    # n = x' with empty G1: encode/decode is trivially the identity
    g1 = MatGF.zeros(F3, 2, 0)
    f = MatGF.identity(F3, 2)
    bundle = make_bundle("qq", g1, None, f, n=1)
    rho = np.array([[0.5, 0.5], [0.5, 0.5], ], dtype=complex)
    rho = np.zeros((3, 3), dtype=complex)
    rho[0, 0] = rho[0, 1] = rho[1, 0] = rho[1, 1] = 0.5
    tr, rec = qp.run_qqss(bundle, rho, seed=1, subset=[1])
    assert np.linalg.norm(rec - rho) < 1e-9


def test_qqss_secrecy_reduced_states(ex1):
    bqq = make_bundle("qq", ex1.g1, None, ex1.f, n=3)
    codec = qp.QqCodec(bqq)
    lam = qp.qq_channel(bqq, codec, [1])
    states = []
    for vec in ([1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]):
        v = np.asarray(vec, dtype=complex)
        v = v / np.linalg.norm(v)
        states.append(lam(np.outer(v, v.conj())))
    for s in states[1:]:
        assert qp.trace_distance(states[0], s) < 1e-9


def test_teleport_identity_and_information_equality(ex1):
    bqq = make_bundle("qq", ex1.g1, None, ex1.f, n=3)
    fids = qp.teleport_decoder_fidelities(bqq, ex1.access)
    assert all(f >= 1 - 1e-9 for f in fids)
    idc = qp.dense_coding_information_check(qs.identity_channel(3), 3, 1)
    assert abs(idc[0] - 2 * np.log2(3)) < 1e-9
    assert abs(idc[1] - 2 * np.log2(3)) < 1e-9
    dep = qp.dense_coding_information_check(qs.depolarizing_channel(3), 3, 1)
    assert abs(dep[0]) < 1e-9 and abs(dep[1]) < 1e-9
    codec = qp.QqCodec(bqq)
    lam = qp.qq_channel(bqq, codec, [1])
    i_dense, i_chan = qp.dense_coding_information_check(lam, 3, 1)
    assert abs(i_dense - i_chan) < 1e-6


def test_easpir_run_and_audit(ex1):
    files = np.array([1, 2, 0, 2], dtype=np.int64)
    for k in (1, 2):
        tr = qp.run_easpir(ex1.bundle, files, k, seed=11, access=ex1.access,
                           nfiles=2)
        want = [int(v) for v in files[(k - 1) * 2: k * 2]]
        assert all(v == want for v in tr.outcome.values())
        tr2 = qp.run_easpir(ex1.bundle, files, k, seed=11, access=ex1.access,
                            nfiles=2, backend="symplectic")
        assert all(v == want for v in tr2.outcome.values())
    rep = qp.audit_spir(ex1.bundle, ex1.access, nfiles=2, protocol="easpir")
    assert rep.secure and rep.matches_classify


def test_cqspir_audit_example2(ex2):
    rep = qp.audit_spir(ex2.bundle, ex2.access, nfiles=2, protocol="cqspir")
    assert rep.secure and rep.matches_classify


def test_single_server_degenerate_spir():
    # one player, reject only the empty set: retrieval trivially exact
    g1 = MatGF.zeros(F3, 2, 0)
    f = MatGF.from_ints(F3, [[1], [0]])
    fs = make_threshold(1, 0, 1)
    bundle = make_bundle("ea", g1, None, f, n=1)
    files = np.array([2, 1], dtype=np.int64)
    tr = qp.run_easpir(bundle, files, 2, seed=0, access=fs, nfiles=2)
    assert all(v == [1] for v in tr.outcome.values())


def test_flow5_conversion(ex1):
    conv = qp.convert_flow5(ex1.bundle, nfiles=2)
    assert conv.params.get("converted_from") == "easpir"
    assert qp.flow5_equivalence(ex1.bundle, 2, ex1.access)
    rep = qp.audit_ss(conv, ex1.access, protocol="eass")
    assert rep.secure and rep.matches_classify


def test_flow5_f1_identity(ex1):
    # f = 1 conversion is the identity reindexing of the same protocol
    assert qp.flow5_equivalence(ex1.bundle, 1, ex1.access)


def test_flow5_security_inheritance():
    from mmsplab import fixtures as fx

    pos, _ = fx.make_pools("ea", 2, seed=33, n_values=(2,))
    for bundle, fs in pos:
        spir_rep = qp.audit_spir(bundle, fs, nfiles=2, protocol="easpir")
        conv = qp.convert_flow5(bundle, nfiles=2)
        ss_rep = qp.audit_ss(conv, fs, protocol="eass")
        if spir_rep.secure:
            assert ss_rep.secure
