import itertools

import numpy as np
import pytest
from hypothesis import strategies as st

from xauc.metrics import GroupedScores


def brute_auc(pos, neg, ties="strict"):
    """O(n*m) pair enumeration, independent of the searchsorted path."""
    greater = equal = 0
    for p, q in itertools.product(list(pos), list(neg)):
        if p > q:
            greater += 1
        elif p == q:
            equal += 1
    total = len(pos) * len(neg)
    if ties == "half":
        return (greater + 0.5 * equal) / total
    return greater / total


def brute_xauc(g, a, b, ties="strict"):
    return brute_auc(g.cell(a, 1), g.cell(b, 0), ties)


def random_grouped(rng, max_n=200, n_groups=2, tied=False, ensure_cells=True):
    """Random two-or-more-group instance; ``tied`` draws from a small grid."""
    n = int(rng.integers(4 * n_groups, max_n + 1))
    if tied:
        scores = rng.integers(0, 8, n) / 8.0
    else:
        scores = rng.normal(size=n)
    labels = rng.integers(0, 2, n)
    groups = rng.integers(0, n_groups, n)
    if ensure_cells:
        # plant one sample per cell
        k = 0
        for grp in range(n_groups):
            for y in (0, 1):
                labels[k], groups[k] = y, grp
                k += 1
    return GroupedScores.from_arrays(scores, labels, [f"g{v}" for v in groups], [f"g{v}" for v in range(n_groups)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def toy_two_group():
    # the four-cell example used by several hand checks
    return GroupedScores(
        {("a", 1): [0.9], ("b", 1): [0.3], ("a", 0): [0.5], ("b", 0): [0.1]},
        ["a", "b"],
    )


score_lists = st.lists(
    st.one_of(st.integers(-5, 5).map(float), st.floats(-10, 10, allow_nan=False, width=32)),
    min_size=1,
    max_size=40,
)


integer_scores = st.lists(st.integers(-20, 20).map(float), min_size=1, max_size=40)


@st.composite
def grouped_instances(draw, n_groups=2, scores=score_lists):
    cells = {}
    groups = [f"g{i}" for i in range(n_groups)]
    for grp in groups:
        for y in (0, 1):
            cells[(grp, y)] = draw(scores)
    return GroupedScores(cells, groups)


def write_synthetic_csv(path, n=600, seed=0, model=None, extra_noise=True):
    """CSV with a Gaussian score feature ``x1``, a noise feature, ``label`` and ``group``.

    Within each (group, outcome) cell ``x1`` follows ``model`` (a
    GaussianGroupModel over groups "a"/"b"); group and label are drawn
    uniformly.
    """
    from xauc.gaussian import GaussianGroupModel

    model = model or GaussianGroupModel.two_group((0.0, 1.0, 1.0, 1.0), (-0.5, 0.3, 0.5, 1.5))
    rng = np.random.default_rng(seed)
    groups = rng.choice(["a", "b"], n)
    labels = rng.integers(0, 2, n)
    mu = np.array([model.means[(g, y)] for g, y in zip(groups, labels)])
    sd = np.sqrt([model.variances[(g, y)] for g, y in zip(groups, labels)])
    x1 = rng.normal(mu, sd).tolist()
    x2 = rng.normal(size=n).tolist()
    lines = ["x1,x2,label,group"] if extra_noise else ["x1,label,group"]
    for i in range(n):
        head = f"{x1[i]!r},{x2[i]!r}" if extra_noise else f"{x1[i]!r}"
        lines.append(f"{head},{labels[i]},{groups[i]}")
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def synthetic_csv(tmp_path):
    return write_synthetic_csv(tmp_path / "synthetic.csv")


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion, collected from ``record_property``."""
    lines = []
    for outcome in ("passed", "failed", "skipped"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", []))
            if "criterion" not in props or (outcome == "passed" and rep.when != "call"):
                continue
            detail = props.get("detail", "")
            if outcome == "skipped" and isinstance(rep.longrepr, tuple):
                detail = rep.longrepr[2].removeprefix("Skipped: ")
            lines.append((props["criterion"], outcome, detail))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    tag = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}
    for criterion, outcome, detail in sorted(lines, key=lambda t: int(t[0].split()[0])):
        terminalreporter.write_line(f"[{tag[outcome]}] criterion {criterion}: {detail}")
