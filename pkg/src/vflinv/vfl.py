"""Split-model training across one active party and passive parties.

Each party keeps its bottom model and its feature view to itself.  A round
runs forward on every bottom model, the parties send their intermediate
features up through a :class:`Channel`, the active party evaluates the top
model and the loss, and each party receives back only the slice of the top
model's input gradient that belongs to its own features.

Row identity across parties is the shared ``row_ids`` key (sample alignment is
public in VFL); everything else crosses party boundaries only as
:class:`FeatureBatch` or :class:`PartialGradient` messages.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import data as D
from . import nn
from .defense import DefenseConfig, dp_gradient_noise, gaussian_feature_noise
from .metrics import roc_auc
from .rng import make_rng

CHECKPOINT_FORMAT = "vflinv-checkpoint/1"
POST_TRAINING = "post_training"
DURING_TRAINING = "during_training"


class ProtocolError(RuntimeError):
    pass


class CapabilityError(PermissionError):
    """An attacker tried to use a capability its scenario does not grant."""


class DivergenceError(RuntimeError):
    def __init__(self, epoch: int, message: str | None = None):
        super().__init__(message or f"training diverged (non-finite loss) at epoch {epoch}")
        self.epoch = epoch


# ---------------------------------------------------------------------------
# messages


@dataclass(frozen=True)
class FeatureBatch:
    party: int
    H: np.ndarray
    row_ids: np.ndarray
    round: int = -1

    def __len__(self) -> int:
        return len(self.H)


@dataclass(frozen=True)
class PartialGradient:
    """dL/dH for one party; carries nothing else (no labels, no predictions)."""

    party: int
    grad: np.ndarray
    round: int


@dataclass
class Channel:
    """In-process transport.  Keeps a metadata log, not the payloads."""

    log: list[tuple] = field(default_factory=list)

    def up(self, msg: FeatureBatch) -> FeatureBatch:
        self.log.append(("features", msg.party, msg.round, msg.H.shape))
        return msg

    def down(self, msg: PartialGradient) -> PartialGradient:
        self.log.append(("partial_gradient", msg.party, msg.round, msg.grad.shape))
        return msg

    def count(self, kind: str) -> int:
        return sum(1 for e in self.log if e[0] == kind)


# ---------------------------------------------------------------------------
# capture log


@dataclass
class CaptureLog:
    """Target-party features seen by the active party, keyed by row id and tag."""

    entries: dict[tuple, np.ndarray] = field(default_factory=dict)

    def add(self, row_ids, H: np.ndarray, tag: str = POST_TRAINING, epoch: int | None = None) -> int:
        if tag not in (POST_TRAINING, DURING_TRAINING):
            raise ValueError(f"unknown capture tag {tag!r}")
        if tag == DURING_TRAINING and epoch is None:
            raise ValueError("during-training captures need an epoch")
        key_epoch = None if tag == POST_TRAINING else int(epoch)  # type: ignore[arg-type]
        for rid, h in zip(row_ids, H):
            self.entries[(int(rid), tag, key_epoch)] = np.array(h, copy=True)
        return len(row_ids)

    def get(self, row_ids, tag: str = POST_TRAINING, epoch: int | None = None) -> np.ndarray:
        key_epoch = None if tag == POST_TRAINING else epoch
        try:
            rows = [self.entries[(int(r), tag, key_epoch)] for r in row_ids]
        except KeyError as e:
            raise KeyError(f"no {tag} capture for row {e.args[0][0]}") from None
        if not rows:
            return np.zeros((0, 0))
        return np.stack(rows)

    def epochs(self, row_id: int) -> list[int]:
        return sorted(k[2] for k in self.entries if k[0] == row_id and k[1] == DURING_TRAINING)

    def __len__(self) -> int:
        return len(self.entries)


# ---------------------------------------------------------------------------
# parties


class Party:
    """One participant: its bottom model, its optimizer and its private views."""

    def __init__(self, index: int, role: str, bottom: nn.Model, views: dict[str, D.EncodedDataset],
                 hyper: nn.TrainHyper, defense: DefenseConfig):
        if role not in ("active", "passive"):
            raise ValueError(f"unknown role {role!r}")
        self.index = index
        self.role = role
        self._bottom = bottom
        self._views = views
        self._opt = nn.make_optimizer(hyper)
        self._defense = defense
        self._pending: dict[int, nn.Tape] = {}
        self._counters: dict[str, int] = {}

    @property
    def input_width(self) -> int:
        return self._bottom.spec.input_width

    @property
    def output_width(self) -> int:
        return self._bottom.spec.output_width

    @property
    def schema(self) -> D.Schema:
        """Column headers and declared ranges of this party's features."""
        return self._views["train"].schema

    def _defended(self) -> bool:
        return self.role == "passive" and self._defense.active

    def _outbound(self, H: np.ndarray, *stream) -> np.ndarray:
        if self._defended() and self._defense.kind == "gaussian_feature":
            rng = make_rng(self._defense.seed, "gaussian_feature", self.index, *stream)
            return gaussian_feature_noise(H, self._defense.ratio, rng)
        return H

    def _next(self, name: str) -> int:
        n = self._counters.get(name, 0)
        self._counters[name] = n + 1
        return n

    # training-time messages
    def emit_train(self, positions: np.ndarray, round_id: int, epoch: int, batch: int) -> FeatureBatch:
        view = self._views["train"]
        self._bottom.train()
        H, tape = nn.forward(self._bottom, view.X[positions])
        self._pending = {round_id: tape}
        H = self._outbound(H, "train", epoch, batch)
        return FeatureBatch(self.index, H, view.row_ids[positions], round_id)

    def receive(self, msg: PartialGradient, epoch: int, batch: int, apply: bool = True) -> nn.Gradients:
        if msg.party != self.index:
            raise ProtocolError(f"party {self.index} received a gradient addressed to party {msg.party}")
        tape = self._pending.pop(msg.round, None)
        if tape is None:
            raise ProtocolError(f"party {self.index} has no forward pass recorded for round {msg.round}")
        g = msg.grad
        if apply and self._defended() and self._defense.kind == "dp_gradient":
            rng = make_rng(self._defense.seed, "dp_gradient", self.index, epoch, batch)
            g = dp_gradient_noise(g, self._defense.ratio, rng, self._defense.clip)
        grads = nn.backward(self._bottom, tape, g)
        if apply:
            self._opt.step(self._bottom, grads)
        return grads

    # inference-time messages
    def emit(self, split: str, positions=None, stream: str = "eval") -> FeatureBatch:
        view = self._views[split]
        x = view.X if positions is None else view.X[np.asarray(positions, dtype=np.int64)]
        ids = view.row_ids if positions is None else view.row_ids[np.asarray(positions, dtype=np.int64)]
        self._bottom.eval()
        H = nn.predict(self._bottom, x)
        H = self._outbound(H, stream, split, self._next(stream))
        return FeatureBatch(self.index, H, ids)

    def answer_query(self, x: np.ndarray) -> FeatureBatch:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.input_width:
            raise nn.ShapeError(f"party {self.index} expects {self.input_width} encoded columns, got shape {x.shape}")
        self._bottom.eval()
        H = self._outbound(nn.predict(self._bottom, x), "query", self._next("query"))
        return FeatureBatch(self.index, H, -1 - np.arange(len(x)))

    def positions(self, split: str, row_ids) -> np.ndarray:
        return self._views[split].positions_of(row_ids)

    def row_ids(self, split: str) -> np.ndarray:
        return self._views[split].row_ids.copy()

    def n_rows(self, split: str) -> int:
        return len(self._views[split])


class ActiveParty(Party):
    """The label owner.  Also runs the top model; its own data is open to itself."""

    def __init__(self, index, bottom, views, hyper, defense, top: nn.Model, labels: dict[str, np.ndarray]):
        super().__init__(index, "active", bottom, views, hyper, defense)
        self.top = top
        self.labels = labels
        self._top_opt = nn.make_optimizer(hyper)

    @property
    def bottom(self) -> nn.Model:
        return self._bottom

    def view(self, split: str) -> D.EncodedDataset:
        return self._views[split]


# ---------------------------------------------------------------------------
# session


@dataclass(frozen=True)
class SessionConfig:
    bottom_hidden: tuple[int, ...] = (300, 100)
    bottom_out: int = 100
    top_hidden: tuple[int, ...] = (100, 100)
    hyper: nn.TrainHyper = nn.TrainHyper()
    defense: DefenseConfig = DefenseConfig()
    patience: int | None = 5
    seed: int = 0
    query_budget: int | None = None
    bottom_specs: tuple[nn.ModelSpec, ...] | None = None  # overrides bottom_hidden/bottom_out
    top_spec: nn.ModelSpec | None = None


@dataclass
class RoundState:
    round: int
    epoch: int
    batch: int
    positions: np.ndarray
    versions: tuple[int, ...]
    top_tape: nn.Tape
    features: list[FeatureBatch]


@dataclass
class RoundGradients:
    top: nn.Gradients
    partial: list[PartialGradient]
    local: list[nn.Gradients]  # stays with each party; returned for gradient checks


class VflSession:
    def __init__(self, parties: list[Party], config: SessionConfig, n_classes: int):
        self.parties = parties
        self.config = config
        self.n_classes = n_classes
        self.loss = "bce" if n_classes == 2 else "cross_entropy"
        self.channel = Channel()
        self.captures = CaptureLog()
        self.history: list[dict] = []
        self.query_budget = config.query_budget
        self.query_count = 0
        self.round = 0
        self.epoch = 0
        self.watched: set[int] = set()
        self.watch_party: int | None = None
        self._open: RoundState | None = None

    @property
    def active(self) -> ActiveParty:
        return self.parties[0]  # type: ignore[return-value]

    @property
    def K(self) -> int:
        return len(self.parties)

    def _versions(self) -> tuple[int, ...]:
        return tuple(p._bottom.version for p in self.parties) + (self.active.top.version,)

    def _targets(self, y: np.ndarray) -> np.ndarray:
        if self.loss == "bce":
            return y.astype(np.float64)[:, None]
        return np.eye(self.n_classes)[y]

    def watch(self, party: int, row_ids) -> None:
        """Ask the active party to keep the features it receives for these rows during training."""
        self.watch_party = party
        self.watched = {int(r) for r in row_ids}


def build_session(train: D.PartyViews, holdout: D.PartyViews | None, y_train: np.ndarray,
                  y_holdout: np.ndarray | None = None, config: SessionConfig = SessionConfig(),
                  n_classes: int | None = None) -> VflSession:
    K = len(train.views)
    if K < 2:
        raise ValueError("VFL requires at least two parties")
    if holdout is not None and len(holdout.views) != K:
        raise ValueError("training and holdout views have different party counts")
    y_train = np.asarray(y_train, dtype=np.int64)
    n_classes = n_classes or max(2, int(y_train.max()) + 1)
    specs = config.bottom_specs or tuple(
        nn.mlp_spec(v.X.shape[1], config.bottom_hidden, config.bottom_out) for v in train.views
    )
    if len(specs) != K:
        raise ValueError(f"{len(specs)} bottom specs for {K} parties")
    for k, (s, v) in enumerate(zip(specs, train.views)):
        if s.input_width != v.X.shape[1]:
            raise nn.ShapeError(f"party {k}: bottom input width {s.input_width} != view width {v.X.shape[1]}")
    concat = sum(s.output_width for s in specs)
    out_w, out_act = (1, "sigmoid") if n_classes == 2 else (n_classes, "softmax")
    top_spec = config.top_spec or nn.mlp_spec(concat, config.top_hidden, out_w, out_act)
    if top_spec.input_width != concat:
        raise nn.ShapeError(f"top input width {top_spec.input_width} != sum of bottom widths {concat}")
    if top_spec.output_width != out_w:
        raise nn.ShapeError(f"top output width {top_spec.output_width} does not fit {n_classes} classes")
    parties: list[Party] = []
    for k in range(K):
        views = {"train": train.views[k]}
        if holdout is not None:
            views["holdout"] = holdout.views[k]
        bottom = nn.init_model(specs[k], make_rng(config.seed, "bottom", k).integers(2**63))
        if k == 0:
            labels = {"train": y_train}
            if y_holdout is not None:
                labels["holdout"] = np.asarray(y_holdout, dtype=np.int64)
            top = nn.init_model(top_spec, make_rng(config.seed, "top").integers(2**63))
            parties.append(ActiveParty(0, bottom, views, config.hyper, config.defense, top, labels))
        else:
            parties.append(Party(k, "passive", bottom, views, config.hyper, config.defense))
    return VflSession(parties, config, n_classes)


# ---------------------------------------------------------------------------
# rounds


def forward_round(session: VflSession, positions, epoch: int = 0, batch: int = 0) -> tuple[list[FeatureBatch], np.ndarray]:
    positions = np.asarray(positions, dtype=np.int64)
    n = session.active.n_rows("train")
    if positions.size and (positions.min() < 0 or positions.max() >= n):
        raise IndexError("batch positions outside the training view")
    session.round += 1
    rid = session.round
    feats = [session.channel.up(p.emit_train(positions, rid, epoch, batch)) for p in session.parties]
    if session.watched and session.watch_party is not None:
        fb = feats[session.watch_party]
        keep = [i for i, r in enumerate(fb.row_ids) if int(r) in session.watched]
        if keep:
            session.captures.add(fb.row_ids[keep], fb.H[keep], DURING_TRAINING, epoch)
    top = session.active.top
    top.train()
    pred, tape = nn.forward(top, np.hstack([f.H for f in feats]))
    session._open = RoundState(rid, epoch, batch, positions, session._versions(), tape, feats)
    return feats, pred


def backward_round(session: VflSession, loss_grad: np.ndarray, apply: bool = True) -> RoundGradients:
    state = session._open
    if state is None:
        raise ProtocolError("backward_round without a matching forward_round")
    if state.versions != session._versions():
        raise ProtocolError("stale round: a model changed between forward and backward")
    session._open = None
    active = session.active
    top_grads = nn.backward(active.top, state.top_tape, loss_grad)
    partial, local = [], []
    start = 0
    for p, fb in zip(session.parties, state.features):
        w = fb.H.shape[1]
        msg = session.channel.down(PartialGradient(p.index, top_grads.input_gradient[:, start:start + w].copy(), state.round))
        start += w
        partial.append(msg)
        local.append(p.receive(msg, state.epoch, state.batch, apply=apply))
    if apply:
        active._top_opt.step(active.top, top_grads)
    return RoundGradients(top_grads, partial, local)


def step(session: VflSession, positions, epoch: int = 0, batch: int = 0) -> float:
    _, pred = forward_round(session, positions, epoch, batch)
    if not np.all(np.isfinite(pred)):
        session._open = None
        return math.nan
    y = session.active.labels["train"][np.asarray(positions, dtype=np.int64)]
    value, grad = nn.loss_eval(session.loss, pred, session._targets(y))
    backward_round(session, grad)
    return value


def _snapshot(session: VflSession) -> list[nn.Model]:
    return [p._bottom.copy() for p in session.parties] + [session.active.top.copy()]


def _restore(session: VflSession, snap: list[nn.Model]) -> None:
    for p, m in zip(session.parties, snap[:-1]):
        p._bottom.load_parameters(m)
    session.active.top.load_parameters(snap[-1])


def train_vfl(session: VflSession, epochs: int | None = None, log=None) -> list[dict]:
    """Minibatch training with early stopping on holdout AUC.

    With a holdout split and ``patience`` set, training stops once AUC has not
    improved for ``patience`` epochs and the best parameters are restored.
    """
    hyper = session.config.hyper
    epochs = hyper.epochs if epochs is None else epochs
    n = session.active.n_rows("train")
    has_holdout = "holdout" in session.active.labels
    patience = session.config.patience
    best_auc, best, stale = -math.inf, None, 0
    for epoch in range(session.epoch, session.epoch + epochs):
        order = make_rng(session.config.seed, "vfl", "batches", epoch).permutation(n)
        losses, sizes = [], []
        for b, start in enumerate(range(0, n, hyper.batch_size)):
            idx = order[start:start + hyper.batch_size]
            losses.append(step(session, idx, epoch, b))
            sizes.append(len(idx))
            if not math.isfinite(losses[-1]):
                raise DivergenceError(epoch)
        entry = {"epoch": epoch, "train_loss": float(np.average(losses, weights=sizes))}
        if has_holdout:
            entry.update({f"holdout_{k}": v for k, v in evaluate(session, "holdout").items()})
        session.history.append(entry)
        session.epoch = epoch + 1
        if log is not None:
            log(entry)
        if has_holdout and patience is not None:
            auc = entry.get("holdout_auc", entry["holdout_accuracy"])
            if auc > best_auc:
                best_auc, best, stale = auc, _snapshot(session), 0
            else:
                stale += 1
                if stale >= patience:
                    break
    if best is not None:
        _restore(session, best)
    for p in session.parties:
        p._bottom.eval()
    session.active.top.eval()
    return session.history


def predict_proba(session: VflSession, split: str = "holdout") -> np.ndarray:
    feats = [session.channel.up(p.emit(split)) for p in session.parties]
    session.active.top.eval()
    return nn.predict(session.active.top, np.hstack([f.H for f in feats]))


def evaluate(session: VflSession, split: str = "holdout") -> dict:
    proba = predict_proba(session, split)
    y = session.active.labels[split]
    if session.loss == "bce":
        p = proba[:, 0]
        out = {"accuracy": float(np.mean((p > 0.5) == (y == 1))), "loss": nn.loss_eval("bce", proba, y[:, None].astype(float))[0]}
        if 0 < y.sum() < len(y):
            out["auc"] = roc_auc(p, y)
        return out
    out = {"accuracy": float(np.mean(np.argmax(proba, axis=1) == y))}
    out["loss"] = nn.loss_eval("cross_entropy", proba, np.eye(session.n_classes)[y])[0]
    return out


# ---------------------------------------------------------------------------
# attacker-facing operations


def query_party(session: VflSession, party: int, rows: np.ndarray) -> FeatureBatch:
    if not 0 <= party < session.K:
        raise IndexError(f"no party {party}")
    rows = np.asarray(rows, dtype=np.float64)
    n = len(rows)
    if session.query_budget is not None and session.query_count + n > session.query_budget:
        raise CapabilityError(
            f"query budget exhausted: {session.query_count} of {session.query_budget} rows used, {n} requested"
        )
    fb = session.channel.up(session.parties[party].answer_query(rows))
    session.query_count += n
    return fb


def capture_target_features(session: VflSession, party: int, row_ids, split: str = "holdout",
                            tag: str = POST_TRAINING) -> FeatureBatch:
    """Record the features the target sends for ``row_ids`` with its current bottom model."""
    row_ids = np.asarray(row_ids, dtype=np.int64)
    target = session.parties[party]
    if len(row_ids) == 0:
        return FeatureBatch(party, np.zeros((0, target.output_width)), row_ids)
    fb = session.channel.up(target.emit(split, target.positions(split, row_ids), stream="capture"))
    session.captures.add(fb.row_ids, fb.H, tag, session.epoch if tag == DURING_TRAINING else None)
    return fb


class AttackerView:
    """What the active party can legitimately touch during an attack.

    Its own bottom model, the top model, its own feature views and labels,
    the target's public header information, queries under the session's
    budget, and captures of the features the target sends.  Nothing here
    reaches a passive party's parameters or raw features.
    """

    def __init__(self, session: VflSession, target: int = 1):
        if target == 0 or not 0 < target < session.K:
            raise ValueError("the target must be a passive party")
        self._s = session
        self.target = target

    @property
    def own_bottom(self) -> nn.Model:
        return self._s.active.bottom

    @property
    def top(self) -> nn.Model:
        return self._s.active.top

    @property
    def loss(self) -> str:
        return self._s.loss

    @property
    def n_classes(self) -> int:
        return self._s.n_classes

    @property
    def target_schema(self) -> D.Schema:
        return self._s.parties[self.target].schema

    @property
    def target_feature_width(self) -> int:
        return self._s.parties[self.target].output_width

    @property
    def feature_slices(self) -> list[slice]:
        """Where each party's features sit in the top model's input."""
        out, start = [], 0
        for p in self._s.parties:
            out.append(slice(start, start + p.output_width))
            start += p.output_width
        return out

    @property
    def query_count(self) -> int:
        return self._s.query_count

    def own_view(self, split: str) -> D.EncodedDataset:
        return self._s.active.view(split)

    def target_row_ids(self, split: str) -> np.ndarray:
        return self._s.parties[self.target].row_ids(split)

    def query(self, rows: np.ndarray) -> FeatureBatch:
        return query_party(self._s, self.target, rows)

    def capture(self, row_ids, split: str = "holdout", tag: str = POST_TRAINING) -> FeatureBatch:
        return capture_target_features(self._s, self.target, row_ids, split, tag)

    def captured(self, row_ids, tag: str = POST_TRAINING, epoch: int | None = None) -> np.ndarray:
        return self._s.captures.get(row_ids, tag, epoch)

    def other_party_features(self, rows_by_party: dict[int, np.ndarray]) -> dict[int, np.ndarray]:
        """Features of non-target parties for attacker-held rows (own bottom, or cooperating parties)."""
        out = {}
        for k, x in rows_by_party.items():
            if k == self.target:
                raise CapabilityError("the target party does not cooperate")
            if k == 0:
                out[k] = nn.predict(self._s.active.bottom.eval(), x)
            else:
                out[k] = self._s.channel.up(self._s.parties[k].answer_query(x)).H
        return out


# ---------------------------------------------------------------------------
# checkpoints


def _param_arrays(session: VflSession) -> dict[str, np.ndarray]:
    arrays = {}
    models = [(f"party{p.index}", p._bottom) for p in session.parties] + [("top", session.active.top)]
    for name, m in models:
        for i, (w, b) in enumerate(zip(m.weights, m.biases)):
            arrays[f"{name}/W{i}"] = w
            arrays[f"{name}/b{i}"] = b
    opts = [(f"party{p.index}", p._opt) for p in session.parties] + [("top", session.active._top_opt)]
    for name, opt in opts:
        if isinstance(opt, nn.Adam) and opt.m is not None:
            for j, (m_, v_) in enumerate(zip(opt.m, opt.v)):
                arrays[f"{name}/adam_m{j}"] = m_
                arrays[f"{name}/adam_v{j}"] = v_
    return arrays


def save_checkpoint(session: VflSession, path) -> Path:
    """Write all parameters and optimizer moments as ``.npz`` with a JSON header entry ``__meta__``."""
    path = Path(path)
    meta = {
        "format": CHECKPOINT_FORMAT,
        "n_classes": session.n_classes,
        "seed": session.config.seed,
        "epoch": session.epoch,
        "round": session.round,
        "query_count": session.query_count,
        "bottom_specs": [p._bottom.spec.to_dict() for p in session.parties],
        "top_spec": session.active.top.spec.to_dict(),
        "defense": session.config.defense.to_dict(),
        "adam_t": {f"party{p.index}": getattr(p._opt, "t", 0) for p in session.parties}
        | {"top": getattr(session.active._top_opt, "t", 0)},
        "history": session.history,
    }
    arrays = _param_arrays(session)
    arrays["__meta__"] = np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def read_checkpoint_meta(path) -> dict:
    with np.load(path) as z:
        meta = json.loads(bytes(z["__meta__"]).decode("utf-8"))
    if meta.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a {CHECKPOINT_FORMAT} file")
    return meta


def load_checkpoint(session: VflSession, path) -> VflSession:
    """Load parameters, optimizer state and counters into a session built from the same config."""
    meta = read_checkpoint_meta(path)
    specs = [p._bottom.spec.to_dict() for p in session.parties]
    if specs != meta["bottom_specs"] or session.active.top.spec.to_dict() != meta["top_spec"]:
        raise nn.ShapeError("checkpoint model specs do not match the session")
    with np.load(path) as z:
        models = [(f"party{p.index}", p._bottom, p._opt) for p in session.parties]
        models.append(("top", session.active.top, session.active._top_opt))
        for name, m, opt in models:
            for i in range(m.spec.n_layers):
                m.weights[i][...] = z[f"{name}/W{i}"]
                m.biases[i][...] = z[f"{name}/b{i}"]
            m.version += 1
            if isinstance(opt, nn.Adam) and f"{name}/adam_m0" in z:
                n_p = 2 * m.spec.n_layers
                opt.m = [z[f"{name}/adam_m{j}"].copy() for j in range(n_p)]
                opt.v = [z[f"{name}/adam_v{j}"].copy() for j in range(n_p)]
                opt.t = meta["adam_t"][name]
    session.epoch, session.round = meta["epoch"], meta["round"]
    session.query_count = meta["query_count"]
    session.history = list(meta["history"])
    for p in session.parties:
        p._bottom.eval()
    session.active.top.eval()
    return session


def session_from_dataset(train: D.EncodedDataset, holdout: D.EncodedDataset | None, assignment: D.FeatureAssignment,
                         config: SessionConfig = SessionConfig()) -> VflSession:
    n_classes = len(train.schema.label.classes) if train.schema.label else None
    return build_session(
        D.vertical_split(train, assignment),
        None if holdout is None else D.vertical_split(holdout, assignment),
        train.y,
        None if holdout is None else holdout.y,
        config,
        n_classes,
    )


def fingerprints(session: VflSession) -> list[str]:
    """Parameter hashes of every model; for audits and determinism checks."""
    return [p._bottom.fingerprint() for p in session.parties] + [session.active.top.fingerprint()]

