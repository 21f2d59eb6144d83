"""Count regions of random single-layer nets and compare with the arrangement bound."""

import argparse

from polytope_lens.code import LayerSpan
from polytope_lens.oracle import enumerate_stable, generic_single_layer


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--neurons", type=int, nargs="+", default=[1, 2, 3, 5, 10])
    ap.add_argument("--seeds", type=int, default=10)
    args = ap.parse_args()

    print("neurons,seed,regions,bound,last_count@resolution")
    for n in args.neurons:
        bound = min(2 ** n, 1 + n + n * (n - 1) // 2)
        for seed in range(args.seeds):
            net, bounds = generic_single_layer(n, seed)
            census, history = enumerate_stable(net, LayerSpan(0, 1), bounds)
            print(f"{n},{seed},{len(census)},{bound},{history[-1]}@{census.resolution}")


if __name__ == "__main__":
    main()
