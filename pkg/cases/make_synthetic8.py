"""Generate ``synthetic8.yaml``: a seeded 8-machine, 16-bus meshed system.

The case is a multi-machine stand-in with classical generators, used to
check modular (determinant-root) eigenvalues against a monolithic
linearization.  Re-running with the same seed reproduces the file
byte-for-byte::

    python3 cases/make_synthetic8.py            # writes cases/synthetic8.yaml
    python3 cases/make_synthetic8.py --seed 7 --out /tmp/other.yaml
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np
import yaml

N_MACHINES = 8


def synthetic_case(seed: int = 20240817) -> dict:
    """Return the case as a plain dict in the YAML schema."""
    rng = np.random.default_rng(seed)
    n = N_MACHINES
    gen_buses = list(range(1, n + 1))
    net_buses = list(range(n + 1, 2 * n + 1))
    buses = [{"id": b, "type": "source"} for b in gen_buses]
    buses[0].update({"V": 1.02, "slack": True})
    buses += [{"id": b} for b in net_buses]

    branches = []
    for g, b in zip(gen_buses, net_buses):
        branches.append({"from": g, "to": b, "X": round(float(rng.uniform(0.10, 0.16)), 4)})
    # ring of network buses plus three chords
    ring = [(net_buses[i], net_buses[(i + 1) % n]) for i in range(n)]
    chords = [(net_buses[0], net_buses[4]), (net_buses[2], net_buses[6]), (net_buses[1], net_buses[5])]
    for a, b in ring + chords:
        x = float(rng.uniform(0.05, 0.20))
        branches.append({"from": a, "to": b, "R": round(0.1 * x, 5), "X": round(x, 4),
                         "B": round(float(rng.uniform(0.02, 0.08)), 4)})

    loads = []
    for b in net_buses[1::2]:
        loads.append({"bus": b, "P": round(float(rng.uniform(1.0, 2.5)), 3),
                      "Q": round(float(rng.uniform(0.1, 0.5)), 3)})
    total_load = sum(ld["P"] for ld in loads)

    sources = []
    shares = rng.dirichlet(np.full(n - 1, 4.0))
    for k, g in enumerate(gen_buses):
        src = {"id": f"G{k + 1}", "bus": g, "kind": "generator",
               "V": round(float(rng.uniform(1.0, 1.03)), 3),
               "params": {"H": round(float(rng.uniform(3.0, 8.0)), 3),
                          "D1": round(float(rng.uniform(1.0, 3.0)), 3),
                          "Xg": round(float(rng.uniform(0.2, 0.35)), 3)}}
        if k == 0:
            src["V"] = 1.02
        else:
            src["P"] = round(float(0.85 * total_load * shares[k - 1]), 3)
        sources.append(src)

    return {"system": {"f0": 60, "base_mva": 100, "name": f"synthetic8-seed{seed}"},
            "buses": buses, "branches": branches, "loads": loads, "sources": sources,
            "analysis": {"mode": "quasistatic"}}


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=20240817)
    ap.add_argument("--out", type=Path, default=Path(__file__).with_name("synthetic8.yaml"))
    args = ap.parse_args(argv)
    header = ("# Synthetic 8-machine, 16-bus meshed system with classical generators.\n"
              f"# Generated by make_synthetic8.py --seed {args.seed}; do not edit by hand.\n")
    body = yaml.safe_dump(synthetic_case(args.seed), sort_keys=False, default_flow_style=None)
    args.out.write_text(header + body)


if __name__ == "__main__":
    main()
