"""Acceptance criteria 1-11. Each test carries a ``criterion`` mark; the
conftest hook prints one PASS/FAIL line per criterion after the run."""

import json
import time

import numpy as np
import pytest

from qsep.cli import DEFAULT_TOLERANCES, decompose_certificate, main, werner_rows
from qsep.files import StateFile, dumps, loads_certificate, verify_certificate
from qsep.product_geometry import ProductFamily, ProductState, bloch_grid, plane_product_vectors
from qsep.pseudomixture import (
    FEASIBLE_TOL,
    IN_RANGE_GRID,
    _lift_scores,
    lifted_ranks,
    minimal_lift,
    pseudomix,
    search_negative_part,
    verify_pseudomixture,
)
from qsep.qlinalg import hermitian_eig, ket, numerical_rank, partial_transpose, projector
from qsep.separable_decomp import LocalMixture, NotSeparable, decompose, is_ppt
from qsep.states import (
    StateRng,
    canonical_pure,
    pure_plus_products,
    random_entangled,
    random_mixed,
    random_ppt,
    random_pure,
    random_separable,
    random_separable_with_ranks,
    werner,
)

PHI_PLUS = projector(ket(1, 0, 0, 1))


def criterion(number, title):
    return pytest.mark.criterion(number, title)


def note(record_property, text):
    record_property("detail", text)


# -- shared corpora -----------------------------------------------------------


def ppt_corpus(n=1000, seed=1):
    """PPT states of every rank: random separable mixtures, states of constructed
    rank pairs, and Hilbert-Schmidt draws that happen to be PPT."""
    rng = StateRng(seed)
    classes = [(1, 1), (2, 2), (3, 3), (3, 4), (4, 3), (4, 4)]
    out = []
    for i in range(n):
        kind = i % 4
        if kind == 0:
            out.append(random_separable(rng, 1 + (i // 4) % 6))
        elif kind == 1:
            out.append(random_separable_with_ranks(rng, classes[(i // 4) % len(classes)]))
        else:
            out.append(random_ppt(rng, 4))
    return out


def npt_corpus(n=1000, seed=2):
    rng = StateRng(seed)
    return [random_pure(rng) if i % 4 == 0 else random_entangled(rng, 1 + i % 4) for i in range(n)]


@pytest.fixture(scope="module")
def separable_run():
    states = ppt_corpus()
    start = time.perf_counter()
    mixes = [decompose(rho) for rho in states]
    return states, mixes, time.perf_counter() - start


@pytest.fixture(scope="module")
def pseudomixture_run():
    rng = StateRng(3)
    mixed = []
    while len(mixed) < 500:
        rho = random_mixed(rng, 2 + len(mixed) % 3)
        if not is_ppt(rho).is_ppt:
            mixed.append(rho)
    pure = [random_pure(rng) for _ in range(200)]
    start = time.perf_counter()
    mixed_pm = [pseudomix(rho) for rho in mixed]
    pure_pm = [pseudomix(rho) for rho in pure]
    return mixed, mixed_pm, pure, pure_pm, time.perf_counter() - start


# -- criteria -------------------------------------------------------------------


@criterion(1, "Bell-state partial-transpose spectrum and negative eigenvector")
def test_criterion_01_bell_spectrum(record_property):
    rep = is_ppt(PHI_PLUS)
    vals = rep.pt_eigensystem.values
    assert np.allclose(vals, [-0.5, 0.5, 0.5, 0.5], atol=1e-10)
    overlap = abs(np.vdot(rep.negative_eigenvector, ket(0, 1, -1, 0)))
    assert overlap >= 1 - 1e-10
    timings = []
    for _ in range(50):
        t = time.perf_counter()
        is_ppt(PHI_PLUS)
        timings.append(time.perf_counter() - t)
    best = min(timings)
    note(record_property, f"overlap {overlap:.15f}, {best * 1e3:.3f} ms")
    assert best < 1e-3


@criterion(2, "pure-state spectrum family")
def test_criterion_02_pure_family(record_property):
    worst = 0.0
    for a in (0.1, 0.3, 0.7, np.pi / 4):
        c, s = np.cos(a), np.sin(a)
        got = hermitian_eig(partial_transpose(canonical_pure(a))).values
        want = np.sort([c * c, s * s, c * s, -c * s])
        worst = max(worst, float(np.max(abs(got - want))))
    note(record_property, f"max deviation {worst:.2e}")
    assert worst <= 1e-10


@criterion(3, "exactly one negative partial-transpose eigenvalue, full PT rank")
def test_criterion_03_unique_negative(record_property):
    start = time.perf_counter()
    rng = StateRng(4)
    worst_second, ranks = np.inf, set()
    for i in range(1000):
        rho = random_pure(rng) if i % 4 == 0 else random_entangled(rng, 1 + i % 4)
        vals = hermitian_eig(partial_transpose(rho)).values
        assert vals[0] < -1e-10
        worst_second = min(worst_second, float(vals[1]))
        ranks.add(numerical_rank(partial_transpose(rho)))
    elapsed = time.perf_counter() - start
    note(record_property, f"min second eigenvalue {worst_second:.3e}, PT ranks {sorted(ranks)}, {elapsed:.2f} s")
    assert worst_second >= -1e-10
    assert ranks == {4}
    assert elapsed < 5


@criterion(4, "separable decomposition soundness and completeness")
def test_criterion_04_separable(separable_run, record_property):
    states, mixes, elapsed = separable_run
    worst = 0.0
    for rho, mix in zip(states, mixes):
        assert len(mix) <= 4
        assert np.all(mix.weights > 0) and abs(mix.weights.sum() - 1) <= 1e-10
        worst = max(worst, mix.residual(rho))
    start = time.perf_counter()
    rejected = 0
    for rho in npt_corpus():
        with pytest.raises(NotSeparable):
            decompose(rho)
        rejected += 1
    elapsed += time.perf_counter() - start
    note(record_property, f"{len(states)} PPT ok, {rejected} NPT rejected, worst residual {worst:.2e}, {elapsed:.1f} s")
    assert worst <= 1e-8
    assert elapsed < 30


@criterion(5, "cardinality equals the larger of the two ranks")
def test_criterion_05_cardinality(record_property):
    rng = StateRng(5)
    rates = {}
    for ranks in [(1, 1), (2, 2), (3, 3), (3, 4), (4, 4)]:
        hits = dead_band = 0
        for _ in range(200):
            rho = random_separable_with_ranks(rng, ranks)
            measured = (numerical_rank(rho), numerical_rank(partial_transpose(rho)))
            mix = decompose(rho)
            assert mix.residual(rho) <= 1e-8
            if len(mix) == max(ranks):
                hits += 1
            elif measured != ranks:
                dead_band += 1
        rates[ranks] = hits / 200
        assert hits / 200 >= 0.99, f"{ranks}: {hits}/200 (dead band {dead_band})"
    note(record_property, ", ".join(f"{r}: {v:.1%}" for r, v in rates.items()))


@criterion(6, "every plane holds a product vector")
def test_criterion_06_planes(record_property):
    rng = StateRng(6)
    worst = 0.0
    for _ in range(10_000):
        a, b = rng.unit_vector(4), rng.unit_vector(4)
        res = plane_product_vectors(a, b)
        assert res.witnesses
        basis, _ = np.linalg.qr(np.stack([a, b], axis=1))
        for w in res.witnesses:
            v = w.vector
            worst = max(worst, abs(np.linalg.det(v.reshape(2, 2))))
            assert np.linalg.norm(v - basis @ (basis.conj().T @ v)) <= 1e-10
    note(record_property, f"worst product residual {worst:.2e}")
    assert worst <= 1e-10


@criterion(7, "pseudomixture reconstruction and cardinalities")
def test_criterion_07_pseudomixtures(pseudomixture_run, record_property):
    mixed, mixed_pm, pure, pure_pm, elapsed = pseudomixture_run
    worst = 0.0
    for rho, pm in zip(mixed, mixed_pm):
        assert len(pm.negative_part) == 1
        assert len(pm.positive_part) <= 4
        checks = verify_pseudomixture(rho, pm)
        assert all(c.passed for c in checks), [c for c in checks if not c.passed]
        worst = max(worst, float(np.linalg.norm(pm.matrix() - rho)))
    for rho, pm in zip(pure, pure_pm):
        assert (len(pm.negative_part), len(pm.positive_part)) == (2, 3)
        assert all(c.passed for c in verify_pseudomixture(rho, pm))
        worst = max(worst, float(np.linalg.norm(pm.matrix() - rho)))
    note(record_property, f"worst residual {worst:.2e}, {elapsed:.1f} s")
    assert worst <= 1e-8
    assert elapsed < 120


@criterion(8, "Bell constructive q equals one")
def test_criterion_08_bell_q(record_property):
    pm = pseudomix(PHI_PLUS)
    # oracle: on span{|01>, |10>} the lifted partial transpose is
    # [[q w1, 1/2], [1/2, q w2]], singular at q = 1 / (2 sqrt(w1 w2))
    w = {}
    for wt, st in pm.negative_part:
        idx = int(np.argmax(abs(st.vector)))
        w[idx] = wt
    assert sorted(w) == [1, 2]
    oracle = 1 / (2 * np.sqrt(w[1] * w[2]))
    note(record_property, f"q = {pm.q:.15f}, block oracle {oracle:.15f}")
    assert abs(pm.q - 1) <= 1e-9
    assert abs(pm.q - oracle) <= 1e-9


@criterion(9, "Werner scan: closed-form PT minimum and verdict flip at 1/3")
def test_criterion_09_werner(record_property):
    rows = werner_rows(101, DEFAULT_TOLERANCES)
    ps = np.array([float(r[0]) for r in rows])
    mins = np.array([float(r[2]) for r in rows])
    verdicts = [r[1] for r in rows]
    dev = float(np.max(abs(mins - (1 - 3 * ps) / 4)))
    entangled = np.array([v == "entangled" for v in verdicts])
    first = ps[np.argmax(entangled)]
    assert not entangled[: np.argmax(entangled)].any() and entangled[np.argmax(entangled):].all()
    note(record_property, f"max deviation {dev:.2e}, first entangled p = {first:.2f}")
    assert dev <= 1e-10
    assert 1 / 3 < first <= 1 / 3 + 0.01 + 1e-12


@criterion(10, "rank-3 counterexample needs a positive part of cardinality four")
def test_criterion_10_counterexample(record_property):
    zero, one = ket(1, 0), ket(0, 1)
    phi = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    rho = pure_plus_products(phi, [0.1, 0.1], [ProductState(zero, zero), ProductState(one, zero)])
    assert numerical_rank(rho) == 3

    # every in-range candidate on the search grid: a finite lift must leave rank 4
    family = ProductFamily(hermitian_eig(rho).vectors[:, 0])
    es, fs = family.batch(bloch_grid(IN_RANGE_GRID))
    scores = _lift_scores(np.linalg.inv(partial_transpose(rho)), es, fs)
    rank3 = 0
    feasible = np.flatnonzero(scores < -FEASIBLE_TOL)
    for k in feasible:
        cand = LocalMixture([1.0], [ProductState(es[k], fs[k])])
        q = minimal_lift(rho, cand)
        if q is not None:
            lifted = (rho + q * cand.matrix()) / (1 + q)
            rank3 += numerical_rank(lifted) == 3
    # the bisection route agrees on a subsample: no lift below the 1/FEASIBLE_TOL cutoff
    for k in range(0, len(es), 97):
        q = minimal_lift(rho, LocalMixture([1.0], [ProductState(es[k], fs[k])]))
        assert q is None or q > 1 / FEASIBLE_TOL or k in feasible

    search = search_negative_part(rho)
    pm = pseudomix(rho)
    note(
        record_property,
        f"{len(es)} in-range candidates, {len(feasible)} feasible, {rank3} reaching rank 3; "
        f"n+ = {len(pm.positive_part)}, lifted ranks {lifted_ranks(rho, pm)}",
    )
    assert rank3 == 0
    assert search.fallback and pm.cardinality4_fallback
    assert len(pm.positive_part) == 4
    assert lifted_ranks(rho, pm)[0] == 4


@criterion(11, "certificates verify and fixed-seed corpora are byte-identical")
def test_criterion_11_certificates(separable_run, pseudomixture_run, tmp_path, capsys, record_property):
    states, mixes, _ = separable_run
    mixed, mixed_pm, pure, pure_pm, _ = pseudomixture_run
    pairs = list(zip(states, mixes)) + list(zip(mixed, mixed_pm)) + list(zip(pure, pure_pm))
    failures = 0
    for rho, dec in pairs:
        text = dumps(decompose_certificate(rho, DEFAULT_TOLERANCES, dec))
        results = verify_certificate(rho, loads_certificate(text))
        failures += not all(r.passed for r in results)

    # the command-line path on a slice of both corpora
    for i, (rho, dec) in enumerate(pairs[::50]):
        state = tmp_path / f"s{i}.json"
        cert = tmp_path / f"c{i}.json"
        state.write_text(StateFile(rho).dumps())
        cert.write_text(dumps(decompose_certificate(rho, DEFAULT_TOLERANCES, dec)) + "\n")
        assert main(["verify", str(state), str(cert)]) == 0
    capsys.readouterr()

    # fixed seeds reproduce byte-identically, states and certificates alike
    for kind, rank in [("entangled", None), ("separable", 3), ("pure", None), ("mixed", 2), ("product", None)]:
        outputs = []
        for attempt in range(2):
            state = tmp_path / f"{kind}{attempt}.json"
            cert = tmp_path / f"{kind}{attempt}.cert.json"
            argv = ["random", "--kind", kind, "--seed", "12345", "-o", str(state)]
            if rank:
                argv[3:3] = ["--rank", str(rank)]
            assert main(argv) == 0
            assert main(["decompose", str(state), "-o", str(cert)]) == 0
            outputs.append((state.read_bytes(), cert.read_bytes()))
        assert outputs[0] == outputs[1]
        assert json.loads(outputs[0][1])["format"] == "qsep-certificate/1"
    note(record_property, f"{len(pairs)} certificates, {failures} failures")
    assert failures == 0


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
