import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from sct import catalog
from sct.dist import JointDist3

settings.register_profile("sct", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("sct")


@st.composite
def joint3(draw, max_size=3, full_support=False):
    """Random tripartite pmf, optionally with zeroed cells."""
    sizes = tuple(draw(st.integers(1, max_size)) for _ in range(3))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    rng = np.random.default_rng(seed)
    arr = rng.dirichlet(np.ones(int(np.prod(sizes)))).reshape(sizes)
    if not full_support:
        mask = rng.random(sizes) < 0.3
        if mask.all():
            mask.flat[0] = False
        arr = np.where(mask, 0.0, arr)
        arr = arr / arr.sum()
    return JointDist3(arr)


@pytest.fixture(scope="session")
def cat():
    return {name: catalog.get(name) for name in ["p1", "p2", "p3", "p4", "p5", "psecret"]}


def rand3(seed, sizes=(3, 3, 3)):
    return catalog.random_dist(seed, sizes)


def fd_relative_error(objective, blocks, step=1e-6):
    """Relative l2 error between analytic and central-difference gradients."""
    _, grads = objective(blocks)
    err, ref = 0.0, 0.0
    for bi, b in enumerate(blocks):
        for idx in np.ndindex(b.shape):
            up = [a.copy() for a in blocks]
            dn = [a.copy() for a in blocks]
            up[bi][idx] += step
            dn[bi][idx] -= step
            fd = (objective(up)[0] - objective(dn)[0]) / (2 * step)
            err += (fd - grads[bi][idx]) ** 2
            ref += fd ** 2
    return np.sqrt(err) / max(np.sqrt(ref), 1e-12)


def gradient_cases(seed=0, n=10):
    """(name, objective, blocks) at ``n`` random interior points per objective."""
    from sct import objectives as ob

    cases = []
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        p = rng.dirichlet(np.ones(12)).reshape(2, 3, 2)
        w = rng.dirichlet(np.ones(3), size=2)
        v = rng.dirichlet(np.ones(3), size=12)
        vj = rng.dirichlet(np.ones(2), size=18)
        cases.append(("intrinsic", ob.intrinsic_objective(p), [w]))
        obj, con = ob.wyner_objectives(p)
        cases.append(("wyner_objective", obj, [v]))
        cases.append(("wyner_constraint", con, [v]))
        obj, con = ob.joint_intrinsic_wyner_objectives(p, 3)
        cases.append(("joint_objective", obj, [w, vj]))
        cases.append(("joint_constraint", con, [w, vj]))
    return cases


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split(".")[0]), k)):
        terminalreporter.write_line(ACCEPTANCE[key])
