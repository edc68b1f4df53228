import numpy as np
import pytest

from vflinv import data as D
from vflinv import datasets as DS
from vflinv import nn
from vflinv import vfl as V


def relative_error(a, b, floor=1e-6):
    """Max elementwise |a - b| / max(|a|, |b|), with the denominator floored for near-zero entries."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - b) / np.maximum(floor, np.maximum(np.abs(a), np.abs(b)))))


def small_config(seed=0, epochs=2, **kw):
    hyper = nn.TrainHyper(batch_size=32, epochs=epochs, learning_rate=kw.pop("learning_rate", 1e-3))
    return V.SessionConfig(bottom_hidden=(16,), bottom_out=8, top_hidden=(8,), hyper=hyper, seed=seed, **kw)


@pytest.fixture(scope="session")
def synthetic():
    enc = D.encode(DS.make_synthetic_tabular(n=600, seed=0))
    train, holdout = D.split_train_holdout(enc, 0.8, 0)
    return train, holdout, D.FeatureAssignment.from_ratio(enc.schema, 0.5)


@pytest.fixture
def small_session(synthetic):
    train, holdout, assignment = synthetic
    return V.session_from_dataset(train, holdout, assignment, small_config())


@pytest.fixture(scope="session")
def trained_small(synthetic):
    train, holdout, assignment = synthetic
    session = V.session_from_dataset(train, holdout, assignment, small_config(epochs=20))
    V.train_vfl(session)
    return session


# acceptance verdicts: criterion -> list of (part, passed, detail)
VERDICTS: dict[int, list[tuple[str, bool, str]]] = {}


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(VERDICTS):
        parts = VERDICTS[n]
        ok = all(p[1] for p in parts)
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}")
        for part, passed, detail in parts:
            terminalreporter.write_line(f"    {'pass' if passed else 'FAIL'} {part}: {detail}")
