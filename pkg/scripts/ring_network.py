"""Ring network: sequential link extraction until the channels run out."""

import argparse

from csqfc.fixtures import PAPER_ZETA, paper_cavity, paper_signal
from csqfc.netsim import ring_topology, run_scenario


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--links", type=int, default=41, help="link requests between n1 and n2")
    ap.add_argument("--policy", choices=("lowest", "random"), default="lowest")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    topo = ring_topology(paper_cavity(), paper_signal(), zeta=PAPER_ZETA)
    script = [{"op": "link", "a": "n1", "b": "n2"}] * args.links
    res = run_scenario(topo, script, seed=args.seed, policy=args.policy)
    for r in res.link_rows():
        if r[2] == "n1":
            print(f"round {r[0]:3d} channel {r[3]:3d} m={r[4]:3d} zeta={r[7]:7.3f} g2={r[8]:.4f}")
    errors = [e for e in res.log if e.event.startswith("error")]
    print(f"granted {len(res.outcomes)} links, {len(errors)} rejected; final {res.state.counts()}")


if __name__ == "__main__":
    main()
