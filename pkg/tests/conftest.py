import numpy as np
import pytest

from hsln.gradcheck import numeric_gradient, relative_error
from hsln.tensor import Tensor, backward, no_grad, reference_mode


def check_grads(fn, *arrays, h=1e-6, tol=1e-6):
    """Compare autodiff and central differences of scalar ``fn(*tensors)`` in float64."""
    with reference_mode():
        tensors = [Tensor(np.array(a, dtype=np.float64), requires_grad=True) for a in arrays]
        backward(fn(*tensors))

        def value():
            with no_grad():
                return float(fn(*tensors).data)

        for t in tensors:
            analytic = np.zeros_like(t.data) if t.grad is None else t.grad
            err = relative_error(analytic, numeric_gradient(value, t.data, h))
            assert err < tol, f"relative error {err:.3e}"


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


SAMPLE_CORPUS = """###101
BACKGROUND\tAsthma is common in children .
OBJECTIVE\tTo test a new inhaler .
METHODS\tWe enrolled 85 patients .
RESULTS\tSymptoms fell by 30 % .
CONCLUSIONS\tThe inhaler works .

###102
BACKGROUND\tSleep affects memory .
METHODS\tWe measured recall in 40 adults .
RESULTS\tRecall improved .
CONCLUSIONS\tSleep matters .

"""


@pytest.fixture
def sample_text():
    return SAMPLE_CORPUS


@pytest.fixture
def sample_file(tmp_path):
    path = tmp_path / "sample.txt"
    path.write_text(SAMPLE_CORPUS, encoding="utf-8")
    return path


def enumerate_paths(r, t):
    """Every label path with its score, by brute force."""
    import itertools
    n, l = r.shape
    paths = list(itertools.product(range(l), repeat=n))
    scores = np.array([sum(r[i, y[i]] for i in range(n)) + sum(t[y[i - 1], y[i]] for i in range(1, n))
                       for y in paths])
    return paths, scores


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    if module and module.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(module.RESULTS, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
