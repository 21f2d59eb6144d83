"""Activation clusters vs spline-code clusters on the trained toy nets."""

import argparse

from polytope_lens import experiments as ex


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    args = ap.parse_args()

    print("seed,activation_clusters,code_clusters,ari,shuffled_ari,purity,shuffled_purity")
    for seed in args.seeds:
        r = ex.prediction1(ex.toy_setup(seed))
        print(f"{seed},{r.activation_labels.cluster_count},{r.code_labels.cluster_count},"
              f"{r.agreement:.3f},{r.shuffled_agreement:.3f},{r.purity:.3f},{r.shuffled_purity:.3f}")


if __name__ == "__main__":
    main()
