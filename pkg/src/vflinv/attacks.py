"""Feature-inversion attacks run by the active party against one passive party.

All four scenarios share one recipe: collect pairs (intermediate features,
target-party input rows), fit an inverse network ``g`` on them with a squared
error loss, then push the features the target sent for the attacked rows
through ``g``.  They differ only in where the pairs come from:

* ``QA``  queries the target with auxiliary rows.
* ``DPA`` has auxiliary rows but no queries; a shadow bottom model is fitted
  through the frozen top model and stands in for the target.
* ``IQA`` has queries but no data; rows are synthesized from the target's
  column headers.
* ``SA``  has neither; a handful of leaked training rows and their captured
  features are the only pairs.

The attack code only sees the session through :class:`vflinv.vfl.AttackerView`.
Ground truth never enters here; scoring happens in :func:`score_report`.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import data as D
from . import metrics as M
from . import nn
from .rng import make_rng
from .vfl import POST_TRAINING, AttackerView, CapabilityError

SCENARIOS = ("QA", "DPA", "IQA", "SA")


@dataclass(frozen=True)
class Capabilities:
    has_aux: bool
    can_query: bool
    has_leak: bool


CAPABILITIES = {
    "QA": Capabilities(has_aux=True, can_query=True, has_leak=False),
    "DPA": Capabilities(has_aux=True, can_query=False, has_leak=False),
    "IQA": Capabilities(has_aux=False, can_query=True, has_leak=False),
    "SA": Capabilities(has_aux=False, can_query=False, has_leak=True),
}

DEFAULT_ATTACK_HYPER = nn.TrainHyper(batch_size=64, epochs=30, learning_rate=1e-3, min_iterations=2000)


@dataclass
class AttackContext:
    """Everything one attack may use.  Resources outside the scenario's row of capabilities are refused."""

    scenario: str
    view: AttackerView
    attacked_row_ids: np.ndarray
    assignment: D.FeatureAssignment
    aux: D.EncodedDataset | None = None  # full-width auxiliary rows (with labels for DPA)
    leak: D.LeakSet | None = None
    n_fake: int | None = None
    use_generator: bool = True
    invernet_depth: int = 3
    shadow_hidden: tuple[int, ...] = (300, 100)
    shadow_loss: str = "task"  # "task" (top-model loss) or "literal" (the agreement expression)
    shadow_context: str = "row"  # other parties' features per aux row, or "mean" over the aux rows
    capture_tag: str = POST_TRAINING
    capture_epoch: int | None = None
    hyper: nn.TrainHyper = DEFAULT_ATTACK_HYPER
    shadow_hyper: nn.TrainHyper | None = None
    seed: int = 0

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        caps = self.capabilities
        if self.aux is not None and not caps.has_aux:
            raise CapabilityError(f"{self.scenario} attackers hold no auxiliary data")
        if self.leak is not None and not caps.has_leak:
            raise CapabilityError(f"{self.scenario} attackers hold no leaked rows")
        if self.shadow_loss not in ("task", "literal"):
            raise ValueError(f"unknown shadow loss {self.shadow_loss!r}")
        if self.shadow_context not in ("row", "mean"):
            raise ValueError(f"unknown shadow context {self.shadow_context!r}")
        self.attacked_row_ids = np.asarray(self.attacked_row_ids, dtype=np.int64)

    @property
    def capabilities(self) -> Capabilities:
        return CAPABILITIES[self.scenario]

    @property
    def target(self) -> int:
        return self.view.target

    @property
    def target_columns(self) -> tuple[str, ...]:
        return self.assignment.parties[self.target]

    def query(self, rows: np.ndarray) -> np.ndarray:
        if not self.capabilities.can_query:
            raise CapabilityError(f"{self.scenario} forbids querying the target party")
        return self.view.query(rows).H

    def require(self, what: str) -> None:
        caps = self.capabilities
        ok = {"aux": caps.has_aux and self.aux is not None, "query": caps.can_query,
              "leak": caps.has_leak and self.leak is not None}[what]
        if not ok:
            raise CapabilityError(f"{self.scenario} attack needs capability {what!r}")

    def attacked_features(self) -> np.ndarray:
        if self.capture_tag == POST_TRAINING:
            return self.view.capture(self.attacked_row_ids, "holdout").H
        return self.view.captured(self.attacked_row_ids, self.capture_tag, self.capture_epoch)


@dataclass
class InverNet:
    model: nn.Model
    hyper: nn.TrainHyper
    history: list[float] = field(default_factory=list)

    @property
    def spec(self) -> nn.ModelSpec:
        return self.model.spec

    def __call__(self, H: np.ndarray) -> np.ndarray:
        return nn.predict(self.model, H)


@dataclass
class ShadowModel:
    model: nn.Model
    history: list[float]
    frozen_fingerprints: tuple[list[str], list[str]]  # (before, after) for the top and own bottom

    @property
    def frozen_unchanged(self) -> bool:
        return self.frozen_fingerprints[0] == self.frozen_fingerprints[1]


@dataclass
class Reconstruction:
    raw: np.ndarray  # network output
    encoded: np.ndarray  # snapped onto valid encodings
    decoded: D.RawDataset


@dataclass
class AttackReport:
    scenario: str
    row_ids: np.ndarray
    reconstruction: Reconstruction
    query_count: int
    seed: int
    wall_time: float
    n_pairs: int
    accuracy: M.AccuracyTriple | None = None
    image: dict | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self, include_rows: bool = False) -> dict:
        d = {
            "scenario": self.scenario,
            "n_rows": int(len(self.row_ids)),
            "n_pairs": self.n_pairs,
            "query_count": self.query_count,
            "seed": self.seed,
            "accuracy": None if self.accuracy is None else self.accuracy.to_dict(),
            "image": self.image,
            "extra": self.extra,
        }
        if include_rows:
            d["row_ids"] = self.row_ids.tolist()
            d["rows"] = self.reconstruction.decoded.rows()
        return M.jsonable(d)


# ---------------------------------------------------------------------------
# inverse network


def invernet_spec(feature_width: int, target_width: int, depth: int = 3) -> nn.ModelSpec:
    """Mirror of a (d, 300, 100, 100) bottom: (100, 100, 300, d); shallower nets drop layers from the front."""
    hidden = {1: (), 2: (300,), 3: (100, 300)}
    if depth not in hidden:
        raise ValueError(f"invernet depth must be 1, 2 or 3, got {depth}")
    return nn.mlp_spec(feature_width, hidden[depth], target_width)


def train_invernet(H: np.ndarray, X: np.ndarray, spec: nn.ModelSpec | None = None,
                   hyper: nn.TrainHyper = DEFAULT_ATTACK_HYPER, seed: int = 0, depth: int = 3) -> InverNet:
    H = np.asarray(H, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if len(H) == 0 or len(X) == 0:
        raise ValueError("empty training pairs")
    if len(H) != len(X):
        raise nn.ShapeError(f"{len(H)} feature rows but {len(X)} target rows")
    spec = spec or invernet_spec(H.shape[1], X.shape[1], depth)
    if spec.input_width != H.shape[1] or spec.output_width != X.shape[1]:
        raise nn.ShapeError(
            f"invernet spec {spec.layer_widths} does not map width {H.shape[1]} to width {X.shape[1]}"
        )
    model = nn.init_model(spec, make_rng(seed, "invernet_init").integers(2**63))
    history = nn.fit(model, H, X, "mse", hyper, make_rng(seed, "invernet_fit").integers(2**63))
    return InverNet(model, hyper, history)


def reconstruct(g: InverNet, H, schema: D.Schema) -> Reconstruction:
    H = getattr(H, "H", H)
    if g.spec.output_width != schema.encoded_width:
        raise nn.ShapeError(f"invernet outputs {g.spec.output_width} columns, schema needs {schema.encoded_width}")
    raw = g(np.asarray(H, dtype=np.float64))
    enc = D.snap(raw, schema)
    return Reconstruction(raw, enc, D.decode(enc, schema))


# ---------------------------------------------------------------------------
# scenarios


def _finish(ctx: AttackContext, g: InverNet, n_pairs: int, t0: float, q0: int, extra: dict | None = None) -> AttackReport:
    rec = reconstruct(g, ctx.attacked_features(), ctx.view.target_schema)
    return AttackReport(ctx.scenario, ctx.attacked_row_ids, rec, ctx.view.query_count - q0, ctx.seed,
                        time.perf_counter() - t0, n_pairs, extra=extra or {})


def _aux_target_rows(ctx: AttackContext) -> np.ndarray:
    ctx.require("aux")
    x = ctx.aux.select(ctx.target_columns).X  # type: ignore[union-attr]
    if len(x) == 0:
        raise ValueError("empty auxiliary set")
    return x


def query_attack(ctx: AttackContext) -> AttackReport:
    if ctx.scenario != "QA":
        raise CapabilityError(f"query_attack called in a {ctx.scenario} context")
    t0, q0 = time.perf_counter(), ctx.view.query_count
    x = _aux_target_rows(ctx)
    ctx.require("query")
    H = ctx.query(x)
    g = train_invernet(H, x, hyper=ctx.hyper, seed=ctx.seed, depth=ctx.invernet_depth)
    return _finish(ctx, g, len(x), t0, q0)


def train_shadow(ctx: AttackContext) -> ShadowModel:
    """Fit a stand-in for the target's bottom model through the frozen top model.

    Features of the other parties come from their real bottoms, one row at a
    time (the attacker owns the active bottom), and stay fixed while the shadow
    is optimized.  Only the shadow's parameters move.
    """
    x_t = _aux_target_rows(ctx)
    aux = ctx.aux
    if aux.y is None:  # type: ignore[union-attr]
        raise ValueError("shadow training needs labelled auxiliary rows")
    view = ctx.view
    slices = view.feature_slices
    others = {k: aux.select(cols).X for k, cols in enumerate(ctx.assignment.parties) if k != ctx.target}  # type: ignore[union-attr]
    fixed = view.other_party_features(others)
    top = view.top.eval()
    before = [top.fingerprint(), view.own_bottom.fingerprint()]

    spec = nn.mlp_spec(x_t.shape[1], ctx.shadow_hidden, view.target_feature_width)
    shadow = nn.init_model(spec, make_rng(ctx.seed, "shadow_init").integers(2**63))
    hyper = ctx.shadow_hyper or ctx.hyper
    opt = nn.make_optimizer(hyper)
    y = np.asarray(aux.y, dtype=np.int64)  # type: ignore[union-attr]
    targets = y.astype(np.float64)[:, None] if view.loss == "bce" else np.eye(view.n_classes)[y]
    top_in = np.zeros((len(x_t), slices[-1].stop))
    for k, H in fixed.items():
        top_in[:, slices[k]] = H if ctx.shadow_context == "row" else H.mean(axis=0)
    rng = make_rng(ctx.seed, "shadow_batches")
    history = []
    shadow.train()
    for idx in nn.minibatches(len(x_t), hyper.batch_size, hyper.n_iterations(len(x_t)), rng):
        hs, s_tape = nn.forward(shadow, x_t[idx])
        z = top_in[idx]
        z[:, slices[ctx.target]] = hs
        pred, t_tape = nn.forward(top, z)
        if ctx.shadow_loss == "task":
            value, grad = nn.loss_eval(view.loss, pred, targets[idx])
        else:
            # agreement expression taken literally: y*p + (1-y)*(1-p), batch mean
            t = targets[idx]
            value = float(np.mean(np.sum(t * pred + (1 - t) * (1 - pred), axis=1)))
            grad = (2 * t - 1) / len(idx)
        g_top = nn.backward(top, t_tape, grad)
        opt.step(shadow, nn.backward(shadow, s_tape, g_top.input_gradient[:, slices[ctx.target]]))
        history.append(value)
    shadow.eval()
    after = [top.fingerprint(), view.own_bottom.fingerprint()]
    return ShadowModel(shadow, history, (before, after))


def data_passive_attack(ctx: AttackContext) -> AttackReport:
    if ctx.scenario != "DPA":
        raise CapabilityError(f"data_passive_attack called in a {ctx.scenario} context")
    t0, q0 = time.perf_counter(), ctx.view.query_count
    shadow = train_shadow(ctx)
    if not shadow.frozen_unchanged:
        raise RuntimeError("frozen models changed during shadow training")
    x = _aux_target_rows(ctx)
    H = nn.predict(shadow.model, x)
    g = train_invernet(H, x, hyper=ctx.hyper, seed=ctx.seed, depth=ctx.invernet_depth)
    return _finish(ctx, g, len(x), t0, q0, {"shadow_final_loss": float(np.mean(shadow.history[-50:]))})


def isolated_query_attack(ctx: AttackContext) -> AttackReport:
    if ctx.scenario != "IQA":
        raise CapabilityError(f"isolated_query_attack called in a {ctx.scenario} context")
    ctx.require("query")
    t0, q0 = time.perf_counter(), ctx.view.query_count
    schema = ctx.view.target_schema
    n = ctx.n_fake if ctx.n_fake is not None else len(ctx.view.target_row_ids("train"))
    make = D.generate_fake if ctx.use_generator else D.generate_uniform_noise
    x = make(schema, n, make_rng(ctx.seed, "iqa_fake").integers(2**63)).X
    if n == 0:
        raise ValueError("empty training pairs")
    H = ctx.query(x)
    g = train_invernet(H, x, hyper=ctx.hyper, seed=ctx.seed, depth=ctx.invernet_depth)
    return _finish(ctx, g, n, t0, q0, {"generator": "schema" if ctx.use_generator else "uniform_noise"})


def stealth_attack(ctx: AttackContext) -> AttackReport:
    if ctx.scenario != "SA":
        raise CapabilityError(f"stealth_attack called in a {ctx.scenario} context")
    ctx.require("leak")
    t0, q0 = time.perf_counter(), ctx.view.query_count
    leak = ctx.leak
    if len(leak) == 0:  # type: ignore[arg-type]
        raise ValueError("empty LeakSet")
    H = leak.features  # type: ignore[union-attr]
    if H is None:
        H = ctx.view.capture(leak.row_ids, "train").H  # type: ignore[union-attr]
    g = train_invernet(H, leak.x, hyper=ctx.hyper, seed=ctx.seed, depth=ctx.invernet_depth)  # type: ignore[union-attr]
    return _finish(ctx, g, len(leak), t0, q0)  # type: ignore[arg-type]


ATTACKS = {"QA": query_attack, "DPA": data_passive_attack, "IQA": isolated_query_attack, "SA": stealth_attack}


def run_attack(ctx: AttackContext) -> AttackReport:
    return ATTACKS[ctx.scenario](ctx)


def score_report(report: AttackReport, truth: D.EncodedDataset, epsilon: float = M.DEFAULT_EPSILON,
                 image_shape: tuple[int, int] | None = None) -> AttackReport:
    """Attach metrics computed against the true target rows (held by the evaluator, not the attacker)."""
    if not np.array_equal(truth.row_ids, report.row_ids):
        truth = truth.take(truth.positions_of(report.row_ids))
    rec = report.reconstruction.encoded
    report.accuracy = M.tabular_accuracy(truth.X, rec, truth.schema, epsilon)
    if image_shape is not None:
        h, w = image_shape
        a, b = truth.X.reshape(-1, h, w), rec.reshape(-1, h, w)
        rand = D.generate_fake(truth.schema, len(truth), make_rng(report.seed, "random_image").integers(2**63)).X
        report.image = {
            "psnr": M.psnr(a, b, 2.0),
            "ssim": M.ssim(a, b, 2.0),
            "random_psnr": M.psnr(a, rand.reshape(-1, h, w), 2.0),
            "random_ssim": M.ssim(a, rand.reshape(-1, h, w), 2.0),
        }
    return report
