"""Regenerate the neural-atlas test fixtures.

mlp_ref.json        random dense atlas (m=2, d=2, D=3) exercising every activation
mlp_ref_cases.json  20 input/output pairs from the numpy forward pass below
sphere_neural.json  tiny dense atlas trained on stereographic charts of S^2

Run from crates/core: python3 scripts/gen_fixtures.py
"""

import json

import numpy as np
import torch

rng = np.random.default_rng(20240601)


def act(name, v):
    if name == "identity":
        return v
    if name == "relu":
        return np.maximum(v, 0.0)
    if name == "tanh":
        return np.tanh(v)
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-v))
    if name == "swish":
        return v / (1.0 + np.exp(-v))
    if name == "softmax":
        e = np.exp(v - v.max())
        return e / e.sum()
    raise ValueError(name)


def forward(net, x):
    v = np.asarray(x, dtype=np.float64)
    for layer in net:
        w = np.asarray(layer["w"], dtype=np.float64)
        b = np.asarray(layer["b"], dtype=np.float64)
        v = act(layer["act"], w @ v + b)
    return v


def dense(n_in, n_out, activation, scale=0.8):
    return {
        "w": (rng.normal(size=(n_out, n_in)) * scale / np.sqrt(n_in)).round(6).tolist(),
        "b": (rng.normal(size=n_out) * 0.3).round(6).tolist(),
        "act": activation,
    }


def write_reference():
    model = {
        "m": 2,
        "d": 2,
        "D": 3,
        "encoders": [
            [dense(3, 8, "swish"), dense(8, 2, "identity")],
            [dense(3, 6, "tanh"), dense(6, 2, "identity")],
        ],
        "decoders": [
            [dense(2, 8, "relu"), dense(8, 3, "sigmoid")],
            [dense(2, 5, "swish"), dense(5, 4, "tanh"), dense(4, 3, "identity")],
        ],
        "partition": [dense(3, 4, "tanh"), dense(4, 2, "softmax", scale=2.0)],
    }
    cases = []
    for i in range(20):
        kind = ["encoder", "decoder", "partition"][i % 3]
        chart = 1 + (i // 3) % 2
        if kind == "encoder":
            net, x = model["encoders"][chart - 1], rng.normal(size=3) * 1.5
        elif kind == "decoder":
            net, x = model["decoders"][chart - 1], rng.normal(size=2) * 2.0
        else:
            net, x = model["partition"], rng.normal(size=3) * 1.5
        x = x.round(6)
        cases.append(
            {"net": kind, "chart": chart, "input": x.tolist(), "output": forward(net, x).tolist()}
        )
    with open("fixtures/mlp_ref.json", "w") as f:
        json.dump(model, f)
    with open("fixtures/mlp_ref_cases.json", "w") as f:
        json.dump({"cases": cases}, f, indent=1)


def torch_net(sizes, acts):
    layers = []
    for (a, b), name in zip(zip(sizes[:-1], sizes[1:]), acts):
        layers.append(torch.nn.Linear(a, b))
        if name == "swish":
            layers.append(torch.nn.SiLU())
    return torch.nn.Sequential(*layers).double()


def export(seq, acts):
    out, it = [], iter(acts)
    for mod in seq:
        if isinstance(mod, torch.nn.Linear):
            out.append(
                {
                    "w": mod.weight.detach().numpy().tolist(),
                    "b": mod.bias.detach().numpy().tolist(),
                    "act": next(it),
                }
            )
    return out


def write_sphere():
    torch.manual_seed(7)
    x = rng.normal(size=(8000, 3))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    xt = torch.tensor(x)
    psi_n = (1.0 - xt[:, 2]) / 2.0
    charts = []
    for sign in (1.0, -1.0):  # chart N projects from (0,0,1), chart S from (0,0,-1)
        mask = ((1.0 - sign * xt[:, 2]) / 2.0) > 0.2
        xs = xt[mask]
        zs = xs[:, :2] / (1.0 - sign * xs[:, 2:3])
        enc = torch_net([3, 32, 2], ["swish", "identity"])
        dec = torch_net([2, 32, 32, 3], ["swish", "swish", "identity"])
        opt = torch.optim.Adam(list(enc.parameters()) + list(dec.parameters()), lr=3e-3)
        for _ in range(2500):
            opt.zero_grad()
            loss = ((enc(xs) - zs) ** 2).mean() + ((dec(zs) - xs) ** 2).mean()
            loss.backward()
            opt.step()
        charts.append((enc, dec))
    part = torch_net([3, 2], ["identity"])
    opt = torch.optim.Adam(part.parameters(), lr=1e-2)
    target = torch.stack([psi_n, 1.0 - psi_n], dim=1)
    for _ in range(1500):
        opt.zero_grad()
        logp = torch.log_softmax(part(xt), dim=1)
        loss = -(target * logp).sum(dim=1).mean()
        loss.backward()
        opt.step()
    model = {
        "m": 2,
        "d": 2,
        "D": 3,
        "encoders": [export(e, ["swish", "identity"]) for e, _ in charts],
        "decoders": [export(d, ["swish", "swish", "identity"]) for _, d in charts],
        "partition": export(part, ["softmax"]),
    }
    probe = forward(model["partition"], [0.0, 0.0, 0.99])
    assert probe[1] > probe[0], probe
    with open("fixtures/sphere_neural.json", "w") as f:
        json.dump(model, f)


if __name__ == "__main__":
    write_reference()
    write_sphere()
