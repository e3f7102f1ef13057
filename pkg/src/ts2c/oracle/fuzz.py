"""Random instance generator and driver for the bound checks."""

from dataclasses import dataclass

import numpy as np

from ts2c.env.tabular_mdp import make_random_mdp
from ts2c.errors import ParameterError
from ts2c.oracle.bounds import BOUND_IDS, verify_bound
from ts2c.oracle.tabular import TabularPolicy


@dataclass(frozen=True)
class FuzzGrid:
    sizes: tuple = (5, 20)
    actions: tuple = (2, 5)
    gammas: tuple = (0.9, 0.99)
    eps_list: tuple = (0.1, 1.0)
    etas: tuple = (0.5, 2.0)


def fuzz_instance(k: int, grid: FuzzGrid, seed: int = 0):
    """Instance k cycles sizes fastest, then actions, then gammas."""
    nS, nA, nG = len(grid.sizes), len(grid.actions), len(grid.gammas)
    S = grid.sizes[k % nS]
    A = grid.actions[(k // nS) % nA]
    gamma = grid.gammas[(k // (nS * nA)) % nG]
    base = seed * 1_000_000 + k
    mdp = make_random_mdp(S, A, gamma, base)
    rng = np.random.default_rng(10_000 + base)
    pit = TabularPolicy.random(S, A, rng)
    pis = TabularPolicy.random(S, A, rng)
    return mdp, pit, pis


def check_instance(mdp, pit, pis, grid: FuzzGrid, rhs_scale=1.0):
    """Every bound at every eps (and eta for the cost bound)."""
    out = []
    for eps in grid.eps_list:
        for bid in BOUND_IDS:
            etas = grid.etas if bid == "cor35" else (None,)
            for eta in etas:
                params = {"eps": eps, "rhs_scale": rhs_scale}
                if eta is not None:
                    params["eta"] = eta
                out.append((params, verify_bound(bid, mdp, pit, pis, params)))
    return out


def run_fuzz(n_instances: int, grid: FuzzGrid = FuzzGrid(), seed: int = 0, rhs_scale=1.0):
    """Returns (records, summary). A record is one bound check on one instance."""
    if n_instances < 1:
        raise ParameterError("n_instances must be at least 1")
    records = []
    for k in range(n_instances):
        mdp, pit, pis = fuzz_instance(k, grid, seed)
        for params, rep in check_instance(mdp, pit, pis, grid, rhs_scale):
            rec = rep.to_record()
            rec.update(instance=k, n_states=mdp.n_states, n_actions=mdp.n_actions, gamma=mdp.gamma,
                       eps=params["eps"], eta=params.get("eta"))
            records.append(rec)
    return records, summarize(records)


def summarize(records):
    per = {}
    for r in records:
        s = per.setdefault(r["bound_id"], {"pass": 0, "fail": 0, "vacuous": 0})
        s[r["status"]] += 1
    failures = sum(s["fail"] for s in per.values())
    return {"checks": len(records), "failures": failures, "all_hold": failures == 0, "per_bound": per}
