#!/usr/bin/env python3
"""Regenerate data/case14_desk.m and data/case118.m from the PYPOWER copies of the IEEE cases.

The source files (pypower/case14.py, pypower/case118.py, BSD-licensed, PYPOWER 5.1.x) carry a
uniform 9900 MW rating on every branch, so thermal limits are authored here:

  case14_desk: hand-picked limits (LIMITS14) chosen so that the cheap unit at bus 1 is
               export-constrained under wind and load uncertainty.
  case118:     1.3 x the branch flow of the unconstrained economic dispatch, rounded up to
               10 MW, at least 40 MW.

Usage: make_cases.py <dir containing the pypower package> <output dir>
"""

import math
import sys

import numpy as np

LIMITS14 = {1: 135, 2: 70, 3: 80.0}
DEFAULT14 = 100.0


def load(pkg_dir, name):
    sys.path.insert(0, pkg_dir)
    module = __import__("pypower." + name, fromlist=[name])
    return getattr(module, name)()


def economic_dispatch(case, net_demand):
    gen, cost = case["gen"], case["gencost"]
    live = gen[:, 7] > 0
    c2, c1 = cost[:, 4], cost[:, 5]
    lo, hi = -1e4, 1e4
    for _ in range(200):
        lam = 0.5 * (lo + hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            p = np.where(c2 > 0, (lam - c1) / (2 * np.where(c2 > 0, c2, 1)), np.where(lam >= c1, gen[:, 8], gen[:, 9]))
        p = np.clip(p, gen[:, 9], gen[:, 8]) * live
        if p.sum() > net_demand:
            hi = lam
        else:
            lo = lam
    return p


def dc_flows(case, injection):
    bus, br = case["bus"], case["branch"]
    index = {int(b): i for i, b in enumerate(bus[:, 0])}
    nb = len(bus)
    bbus = np.zeros((nb, nb))
    bf = np.zeros((len(br), nb))
    for k, row in enumerate(br):
        if row[10] <= 0:
            continue
        f, t, b = index[int(row[0])], index[int(row[1])], 1.0 / row[3]
        bbus[f, f] += b
        bbus[t, t] += b
        bbus[f, t] -= b
        bbus[t, f] -= b
        bf[k, f], bf[k, t] = b, -b
    ref = [i for i in range(nb) if bus[i, 1] == 3][0]
    keep = [i for i in range(nb) if i != ref]
    theta = np.zeros(nb)
    theta[keep] = np.linalg.solve(bbus[np.ix_(keep, keep)], injection[keep])
    return bf @ theta


def authored_118(case):
    bus, gen = case["bus"], case["gen"]
    index = {int(b): i for i, b in enumerate(bus[:, 0])}
    p = economic_dispatch(case, bus[:, 2].sum())
    inj = -bus[:, 2].copy()
    for g, row in enumerate(gen):
        inj[index[int(row[0])]] += p[g]
    flows = dc_flows(case, inj)
    return [max(40.0, 10.0 * math.ceil(1.3 * abs(f) / 10.0)) for f in flows]


def fmt(v):
    return repr(float(v)).rstrip("0").rstrip(".") if float(v) != int(v) else str(int(v))


def write(case, limits, name, header, path):
    lines = [f"function mpc = {name}", *(f"% {h}" for h in header), "mpc.version = '2';",
             f"mpc.baseMVA = {fmt(case['baseMVA'])};", "", "%% bus data",
             "%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin", "mpc.bus = ["]
    for row in case["bus"]:
        lines.append("\t" + "\t".join(fmt(v) for v in row[:13]) + ";")
    lines += ["];", "", "%% generator data", "%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin", "mpc.gen = ["]
    for row in case["gen"]:
        lines.append("\t" + "\t".join(fmt(v) for v in row[:10]) + ";")
    lines += ["];", "", "%% branch data", "%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus",
              "mpc.branch = ["]
    for k, row in enumerate(case["branch"]):
        vals = list(row[:11])
        vals[5] = vals[6] = vals[7] = limits[k]
        lines.append("\t" + "\t".join(fmt(v) for v in vals) + ";")
    lines += ["];", "", "%% generator cost data", "%\t2\tstartup\tshutdown\tn\tc2\tc1\tc0", "mpc.gencost = ["]
    for row in case["gencost"]:
        lines.append("\t" + "\t".join(fmt(v) for v in row[:7]) + ";")
    lines += ["];", ""]
    with open(path, "w") as fh:
        fh.write("\n".join(lines))


def main():
    pkg, out = sys.argv[1], sys.argv[2]
    c14 = load(pkg, "case14")
    limits14 = [LIMITS14.get(k + 1, DEFAULT14) for k in range(len(c14["branch"]))]
    write(c14, limits14, "case14_desk",
          ["IEEE 14-bus system, data from PYPOWER 5.1 (BSD license), thermal limits authored by make_cases.py."],
          f"{out}/case14_desk.m")
    c118 = load(pkg, "case118")
    write(c118, authored_118(c118), "case118",
          ["IEEE 118-bus system, data from PYPOWER 5.1 (BSD license).",
           "Branch limits: 1.3 x economic-dispatch DC flow rounded up to 10 MW, at least 40 MW (make_cases.py)."],
          f"{out}/case118.m")


if __name__ == "__main__":
    main()
