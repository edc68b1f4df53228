"""
Training a two-party split model
================================

Two parties hold different columns of the same rows.  Each runs a bottom
model; the active party concatenates the intermediate features, runs the top
model and sends back only the partial gradient for each party's features.
"""

import numpy as np

from vflinv import data as D
from vflinv import datasets as DS
from vflinv import nn
from vflinv import vfl as V

# a synthetic table with categorical and continuous columns and a binary label
raw = DS.make_synthetic_tabular(n=4000, seed=0)
enc = D.encode(raw)
train, holdout = D.split_train_holdout(enc, 0.8, seed=0)
print(f"{len(train)} training rows, {len(holdout)} holdout rows, {enc.schema.encoded_width} encoded columns")

# half of the source columns go to the passive (target) party
assignment = D.FeatureAssignment.from_ratio(enc.schema, 0.5)
print("active party columns: ", assignment.parties[0])
print("passive party columns:", assignment.parties[1])

cfg = V.SessionConfig(bottom_hidden=(64,), bottom_out=32, top_hidden=(32,),
                      hyper=nn.TrainHyper(batch_size=64, epochs=10), seed=0)
session = V.session_from_dataset(train, holdout, assignment, cfg)

# one protocol round by hand: features up, partial gradients down
feats, pred = V.forward_round(session, np.arange(64))
y = session.active.labels["train"][:64].astype(float)[:, None]
loss, grad = nn.loss_eval("bce", pred, y)
rg = V.backward_round(session, grad)
print(f"round loss {loss:.4f}; partial gradient shapes {[p.grad.shape for p in rg.partial]}")
print("messages so far:", {k: session.channel.count(k) for k in ("features", "partial_gradient")})

# full training with early stopping on holdout AUC
history = V.train_vfl(session)
for h in history:
    print(f"epoch {h['epoch']:2d}  train loss {h['train_loss']:.4f}  holdout auc {h['holdout_auc']:.4f}")
print("holdout:", {k: round(v, 4) for k, v in V.evaluate(session).items()})
