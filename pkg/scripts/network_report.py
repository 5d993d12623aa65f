"""Min-cut diversity, MMG and a finite-field lift for each shipped network."""

import glob
import os
import sys

from dmtlab.detlift import derive_deterministic, lift_to_fading, mmg
from dmtlab.network import NetworkError, edge_disjoint_paths, load_network, min_cut_edges

NETS = os.path.join(os.path.dirname(__file__), os.pardir, "networks")


def main():
    for path in sorted(glob.glob(os.path.join(NETS, "*.json"))):
        name = os.path.basename(path)[:-5]
        net = load_network(path)
        try:
            mc = min_cut_edges(net)
            g = mmg(net).value
        except NetworkError as e:
            print(f"{name:<22} error: {e}")
            continue
        line = f"{name:<22} min-cut {mc:>3}  paths {len(edge_disjoint_paths(net)):>3}  mmg {g}"
        if g > 0:
            d = derive_deterministic(net)
            lift = lift_to_fading(d, net)
            line += f"  p={d.p}  lift rank {lift.rank} (witness {lift.witness_rank})"
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
