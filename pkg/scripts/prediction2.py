"""Intra- vs inter-class boundary density, trained vs untrained, over several seeds.

    python3 scripts/prediction2.py --seeds 0 1 2 3 4
"""

import argparse

from polytope_lens import experiments as ex


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    args = ap.parse_args()

    print("seed,net,intra,inter,t,dof,p,first_gap,last_gap")
    for seed in args.seeds:
        r = ex.prediction2(ex.toy_setup(seed))
        for name, rep, test, gaps in (("trained", r.trained, r.trained_test, r.trained_gaps),
                                      ("untrained", r.untrained, r.untrained_test, r.untrained_gaps)):
            print(f"{seed},{name},{rep.intra_mean:.4f},{rep.inter_mean:.4f},"
                  f"{test.t:.3f},{test.dof:.1f},{test.p_two_sided:.3g},"
                  f"{gaps[0].gap:.4f},{gaps[-1].gap:.4f}")


if __name__ == "__main__":
    main()
