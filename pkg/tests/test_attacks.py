import ast
import inspect
from pathlib import Path

import numpy as np
import pytest

from vflinv import attacks as A
from vflinv import data as D
from vflinv import datasets as DS
from vflinv import nn
from vflinv import vfl as V
from vflinv.rng import make_rng

FAST = nn.TrainHyper(batch_size=64, epochs=30, learning_rate=1e-3, min_iterations=500)


@pytest.fixture(scope="module")
def setup(synthetic):
    train, holdout, a = synthetic
    cfg = V.SessionConfig(bottom_hidden=(32,), bottom_out=16, top_hidden=(16,),
                          hyper=nn.TrainHyper(batch_size=32, epochs=15), seed=0)
    s = V.session_from_dataset(train, holdout, a, cfg)
    V.train_vfl(s)
    return s, train, holdout, a


def context(setup, scenario, **kw):
    s, train, holdout, a = setup
    s.query_count, s.query_budget = 0, (0 if scenario in ("DPA", "SA") else None)
    s.captures = V.CaptureLog()
    aux = D.sample_auxiliary(holdout, 0.5, 0) if scenario in ("QA", "DPA") else None
    attacked = holdout.row_ids[~np.isin(holdout.row_ids, aux.row_ids)] if aux is not None else holdout.row_ids
    leak = None
    if scenario == "SA":
        leak = D.sample_leak(train.select(a.parties[1]), kw.pop("n_leak", 64), 0)
    args = dict(aux=aux, leak=leak, hyper=FAST, seed=0)
    args.update(kw)
    return A.AttackContext(scenario, V.AttackerView(s, 1), attacked, a, **args)


def truth_for(setup, report):
    _, _, holdout, a = setup
    t = holdout.select(a.parties[1])
    return t.take(t.positions_of(report.row_ids))


def test_identity_oracle():
    rng = make_rng(0, "identity")
    X = rng.uniform(-1, 1, size=(4000, 4))
    g = A.train_invernet(X, X, hyper=nn.TrainHyper(64, 1, 1e-3, iterations=8000), seed=0)
    test = rng.uniform(-1, 1, size=(500, 4))
    assert np.max(np.abs(g(test) - test)) < 0.05


def test_linear_inverse_oracle():
    rng = make_rng(1, "linear")
    M = rng.normal(size=(5, 5)) + 3 * np.eye(5)
    X = rng.uniform(-1, 1, size=(3000, 5))
    g = A.train_invernet(X @ M.T, X, hyper=nn.TrainHyper(64, 1, 1e-2, iterations=6000), seed=0, depth=1)
    Xt = rng.uniform(-1, 1, size=(500, 5))
    Ht = Xt @ M.T
    assert np.mean((g(Ht) - Xt) ** 2) < 1e-3
    # the closed-form inverse is the attainable optimum
    assert np.mean((Ht @ np.linalg.inv(M).T - Xt) ** 2) < 1e-20


def test_invernet_spec_mirrors_bottom():
    schema = DS.bundled_schema("bank")
    a = D.FeatureAssignment.from_ratio(schema, 0.5)
    d = schema.subset(a.parties[1]).encoded_width
    assert A.invernet_spec(100, d).layer_widths == (100, 100, 300, d)
    assert A.invernet_spec(100, d, depth=1).layer_widths == (100, d)
    with pytest.raises(ValueError):
        A.invernet_spec(100, d, depth=4)


def test_train_invernet_errors():
    with pytest.raises(ValueError, match="empty training pairs"):
        A.train_invernet(np.zeros((0, 3)), np.zeros((0, 2)))
    with pytest.raises(nn.ShapeError):
        A.train_invernet(np.zeros((3, 3)), np.zeros((4, 2)))
    with pytest.raises(nn.ShapeError):
        A.train_invernet(np.zeros((3, 3)), np.zeros((3, 2)), spec=nn.ModelSpec((3, 5)))


def fixed_invernet(raw):
    raw = np.asarray(raw, dtype=float)
    w = raw.shape[1]
    return A.InverNet(nn.Model(nn.ModelSpec((1, w)), [raw.T.copy()], [np.zeros(w)]), FAST)


def test_reconstruct_decoding_rules():
    schema = D.Schema((D.Categorical("k", ("a", "b", "c")), D.Categorical("t", ("u", "v")), D.Continuous("x", 10, 20)))
    g = fixed_invernet([[0.1, 0.7, 0.2, 0.5, 0.5, 1.7]])
    rec = A.reconstruct(g, np.ones((1, 1)), schema)
    assert rec.decoded.values["k"][0] == 1
    assert rec.decoded.values["t"][0] == 0
    assert rec.decoded.values["x"][0] == 20.0
    assert rec.encoded.tolist() == [[0, 1, 0, 1, 0, 1.0]]
    with pytest.raises(nn.ShapeError):
        A.reconstruct(g, np.ones((1, 1)), D.Schema((D.Continuous("x", 0, 1),)))


def test_context_capability_checks(setup):
    s, train, holdout, a = setup
    view = V.AttackerView(s, 1)
    with pytest.raises(V.CapabilityError):
        A.AttackContext("IQA", view, holdout.row_ids, a, aux=holdout)
    with pytest.raises(V.CapabilityError):
        A.AttackContext("QA", view, holdout.row_ids, a, leak=D.sample_leak(train, 4, 0))
    ctx = context(setup, "DPA")
    with pytest.raises(V.CapabilityError):
        ctx.query(np.zeros((1, 3)))
    with pytest.raises(V.CapabilityError):
        A.query_attack(ctx)
    with pytest.raises(V.CapabilityError):
        A.stealth_attack(context(setup, "IQA"))
    with pytest.raises(ValueError):
        A.AttackContext("XYZ", view, holdout.row_ids, a)


def test_budget_zero_blocks_any_query(setup):
    context(setup, "SA")
    s = setup[0]
    with pytest.raises(V.CapabilityError):
        V.AttackerView(s, 1).query(np.zeros((1, s.parties[1].input_width)))


def assert_valid_encoding(rec, schema):
    for c, sl in schema.groups():
        block = rec.encoded[:, sl]
        if isinstance(c, D.Categorical):
            assert np.array_equal(block.sum(axis=1), np.ones(len(block)))
        else:
            assert block.min() >= -1 and block.max() <= 1


def test_query_attack(setup):
    ctx = context(setup, "QA")
    rep = A.query_attack(ctx)
    assert rep.query_count == len(ctx.aux) == rep.n_pairs
    A.score_report(rep, truth_for(setup, rep))
    assert rep.accuracy.overall > 0.9
    assert len(rep.row_ids) == len(ctx.attacked_row_ids)
    assert_valid_encoding(rep.reconstruction, ctx.view.target_schema)
    assert "wall_time" not in rep.to_dict()


def test_query_attack_empty_aux(setup):
    ctx = context(setup, "QA")
    ctx.aux = ctx.aux.take([])
    with pytest.raises(ValueError):
        A.query_attack(ctx)


def test_isolated_query_attack(setup):
    ctx = context(setup, "IQA", n_fake=3000)
    rep = A.isolated_query_attack(ctx)
    assert rep.query_count == 3000
    A.score_report(rep, truth_for(setup, rep))
    assert rep.accuracy.overall > 0.6
    with pytest.raises(ValueError, match="empty training pairs"):
        A.isolated_query_attack(context(setup, "IQA", n_fake=0))


def test_shadow_model(setup):
    s, _, holdout, a = setup
    ctx = context(setup, "DPA")
    sh = A.train_shadow(ctx)
    assert sh.frozen_unchanged
    assert sh.model.spec.output_width == s.parties[1].output_width
    # the top model should still work with the shadow standing in for the target
    Hs = nn.predict(sh.model, holdout.select(a.parties[1]).X)
    H0 = nn.predict(s.active.bottom, holdout.select(a.parties[0]).X)
    p = nn.predict(s.active.top, np.hstack([H0, Hs]))[:, 0]
    acc_shadow = np.mean((p > 0.5) == (holdout.y == 1))
    assert acc_shadow >= V.evaluate(s)["accuracy"] - 0.10
    assert s.query_count == 0


def test_data_passive_attack_never_queries(setup):
    ctx = context(setup, "DPA")
    rep = A.data_passive_attack(ctx)
    assert rep.query_count == 0 and ctx.view.query_count == 0
    assert_valid_encoding(rep.reconstruction, ctx.view.target_schema)


def test_stealth_attack(setup):
    ctx = context(setup, "SA")
    ctx.leak.features = ctx.view.capture(ctx.leak.row_ids, "train").H
    rep = A.stealth_attack(ctx)
    assert rep.query_count == 0 and rep.n_pairs == 64
    A.score_report(rep, truth_for(setup, rep))
    assert rep.accuracy.overall > 0.7
    empty = context(setup, "SA", n_leak=0)
    with pytest.raises(ValueError, match="empty LeakSet"):
        A.stealth_attack(empty)


def test_stealth_attack_with_whole_training_set_is_an_upper_bound(setup):
    s, train, _, a = setup
    ctx = context(setup, "SA", n_leak=len(train))
    rep = A.stealth_attack(ctx)
    A.score_report(rep, truth_for(setup, rep))
    small = A.stealth_attack(context(setup, "SA", n_leak=16))
    A.score_report(small, truth_for(setup, small))
    assert rep.accuracy.overall >= small.accuracy.overall
    assert rep.accuracy.overall > 0.9


def test_attacks_are_deterministic(setup):
    r1 = A.query_attack(context(setup, "QA"))
    r2 = A.query_attack(context(setup, "QA"))
    assert np.array_equal(r1.reconstruction.raw, r2.reconstruction.raw)


# structural audit: the attack module cannot reach a passive party's parameters


PRIVATE = {"_bottom", "_views", "_opt", "_s", "_pending", "weights", "biases"}


def test_attack_module_touches_no_private_session_state():
    tree = ast.parse(Path(A.__file__).read_text(encoding="utf-8"))
    attrs = [n for n in ast.walk(tree) if isinstance(n, ast.Attribute)]
    used = {n.attr for n in attrs}
    assert not used & PRIVATE, used & PRIVATE
    # ``parties`` is only read from a FeatureAssignment (column names), never from a session
    for n in attrs:
        if n.attr == "parties":
            base = n.value
            assert getattr(base, "attr", getattr(base, "id", None)) == "assignment", ast.unparse(n)
    names = {n.id for n in ast.walk(tree) if isinstance(n, ast.Name)}
    assert "VflSession" not in names and "query_party" not in names


def test_attacker_view_exposes_only_active_models(setup):
    s = setup[0]
    view = V.AttackerView(s, 1)
    allowed = {id(s.active.bottom), id(s.active.top)}
    for name, _ in inspect.getmembers(type(view)):
        if name.startswith("_"):
            continue
        value = getattr(view, name)
        if isinstance(value, nn.Model):
            assert id(value) in allowed, name
    passive = {id(p._bottom) for p in s.parties[1:]}
    assert not any(id(v) in passive for v in vars(view).values())
