import numpy as np
import pytest
import scipy.sparse as sp

import msgr


@pytest.fixture(scope="module")
def channels():
    return msgr.build_problem("fem", nx=16, ny=16, field="channels", load="bump")


def test_problem_arrays(channels):
    a = channels.a
    assert sp.issparse(a)
    assert a.shape == (196, 196)
    assert abs(a - a.T).max() < 1e-12
    assert channels.f.shape == (196,)
    assert channels.coords.shape == (196, 2)
    assert channels.num_vertices == 196
    assert "fem-channels" in repr(channels)


def test_partition_and_clusters(channels):
    part = msgr.partition(channels, n_omega=4, delta_h=0.2)
    assert part.num_subdomains == 4
    assert sorted(v for s in part.subdomains for v in s) == list(range(196))
    assert all(set(s) <= set(o) for s, o in zip(part.subdomains, part.oversampled))
    assert part.max_overlap() >= 2
    clusters = msgr.cluster(channels, part, m=3)
    assert clusters.size == 12
    labels = np.asarray(clusters.labels)
    assert labels.min() == 0 and labels.max() == 11
    for col, c in enumerate(clusters.centroids):
        assert labels[c] == col


@pytest.mark.parametrize("kind", ["CF-glo", "CF-loc", "MC-glo", "MC-loc"])
def test_galerkin_orthogonality(channels, kind):
    part = msgr.partition(channels, n_omega=4, delta_h=0.2)
    clusters = msgr.cluster(channels, part, m=3)
    p = msgr.prolongation(kind, channels, clusters, part)
    assert p.shape == (196, 12)
    u_c, u_ms = msgr.solve_coarse(channels.a, channels.f, p)
    r = p.T @ (channels.f - channels.a @ u_ms)
    assert np.abs(r).max() <= 1e-9 * np.abs(channels.f).max()
    assert msgr.galerkin_residual(p, channels.a, channels.f, u_ms) <= 1e-9 * np.abs(channels.f).max()


def test_constraint_identity(channels):
    part = msgr.partition(channels, n_omega=4)
    clusters = msgr.cluster(channels, part, m=3)
    p = msgr.prolongation("MC-glo", channels, clusters, part)
    s = msgr.constraints(clusters)
    assert np.abs((s @ p).toarray() - np.eye(12)).max() <= 1e-8


def test_errors_match_numpy(channels):
    part = msgr.partition(channels, n_omega=4)
    clusters = msgr.cluster(channels, part, m=2)
    p = msgr.prolongation("MC-glo", channels, clusters, part)
    u = msgr.solve_fine(channels.a, channels.f)
    _, u_ms = msgr.solve_coarse(channels.a, channels.f, p)
    e1, e2 = msgr.relative_errors(u, u_ms, channels.a)
    d = u - u_ms
    assert e1 == pytest.approx(100 * np.linalg.norm(d) / np.linalg.norm(u), rel=1e-10)
    energy = lambda x: np.sqrt(x @ (channels.a @ x))
    assert e2 == pytest.approx(100 * energy(d) / energy(u), rel=1e-10)


def test_identity_transient_matches_fine():
    pore = msgr.build_problem("pore", nx=10, ny=10)
    n = pore.a.shape[0]
    u0 = np.zeros(n)
    fine = msgr.solve_transient(pore.capacity, pore.a, pore.f, u0, 5.0, 4)
    coarse = msgr.solve_transient(pore.capacity, pore.a, pore.f, u0, 5.0, 4, sp.identity(n, format="csc"))
    assert len(fine) == 5
    for x, y in zip(fine, coarse):
        assert np.allclose(x, y, rtol=1e-12, atol=0)


def test_run_experiment_rows():
    rows = msgr.run_experiment(
        problem={"family": "fem", "nx": 12, "ny": 12, "load": "bump"},
        sweep={"n_omega": 4, "m": [1, 2], "methods": ["CF-glo", "MC-glo"]},
    )
    assert [(r["method"], r["m"]) for r in rows] == [("CF", 1), ("MC", 1), ("CF", 2), ("MC", 2)]
    assert all(r["status"] == "ok" and r["delta_h"] is None for r in rows)
    assert rows[3]["e2"] <= rows[1]["e2"]
    assert rows == msgr.run_experiment(
        problem={"family": "fem", "nx": 12, "ny": 12, "load": "bump"},
        sweep={"n_omega": 4, "m": [1, 2], "methods": ["CF-glo", "MC-glo"]},
    )


def test_errors_are_raised():
    with pytest.raises(msgr.Error):
        msgr.build_problem("plasma")
    with pytest.raises(ValueError):
        msgr.run_experiment(sweep={"methods": []})
    assert "[sweep]" in msgr.config_reference()
