"""Print the exact DMT lower bounds of every analytic protocol."""

import os
import sys

from dmtlab.network import diamond_network, load_network
from dmtlab.protocols import (edge_disjoint_protocol, fd_linear_protocol, naf_n_relay_bound,
                              naf_single, saf_bound, saf_matrix, blt_bound)

NETS = os.path.join(os.path.dirname(__file__), os.pardir, "networks")


def main():
    rows = [("naf", naf_single()[1])]
    rows += [(f"naf-n N={n}", naf_n_relay_bound(n)) for n in (2, 3)]
    rows.append(("saf N=2 M=5 (formula)", saf_bound(2, 5)))
    rows.append(("saf N=2 M=5 (matrix)", blt_bound(saf_matrix(2, 2))))
    fig = load_network(os.path.join(NETS, "mincut_figure.json"))
    rows.append(("edge-disjoint diamond", edge_disjoint_protocol(diamond_network()).curve))
    rows.append(("edge-disjoint mincut figure", edge_disjoint_protocol(fig).curve))
    for t in (4, 10, 100):
        rows.append((f"fd-linear diamond T={t}", fd_linear_protocol(diamond_network(), t).curve))
    rows.append(("fd-linear diamond T=inf", fd_linear_protocol(diamond_network(), 4).limit_curve))
    width = max(len(name) for name, _ in rows)
    for name, curve in rows:
        pts = "  ".join(f"({r}, {d})" for r, d in curve.breakpoints())
        print(f"{name:<{width}}  {pts}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
