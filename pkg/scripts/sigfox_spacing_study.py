"""SigFox delivered-byte ratio vs device count for several replica layouts.

Compares micro-channel counts and the maximum idle gap between replicas at the
Fig. 2 geometry (r = 0.35 km, one UAV receiver). Used to pick the replica model.
"""
import argparse
from dataclasses import replace

from ntniot.model import ScenarioConfig
from ntniot.phymac import MacParams
from ntniot.sim import SimSettings, run_simulation

DEVICES = (1000, 10000, 20000, 50000)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--channels", type=int, nargs="+", default=[1, 2000])
    ap.add_argument("--gaps", type=float, nargs="+", default=[0.0, 2.0, 20.0])
    ap.add_argument("--drops", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    base = ScenarioConfig(aoi_radius_km=0.35, tg_density=0.0, fixed_counts=True)
    print("channels,max_gap_s," + ",".join(f"n={n}" for n in DEVICES))
    for c in args.channels:
        for gap in args.gaps:
            settings = SimSettings(mac=replace(MacParams(), sigfox_micro_channels=c, sigfox_max_gap_s=gap))
            ratios = []
            for n in DEVICES:
                res = run_simulation(base.with_(n_devices=n), "sigfox", "id-u", args.drops, args.seed, settings)
                ratios.append(res.goodput / res.offered_load if res.offered_load else float("nan"))
            print(f"{c},{gap:g}," + ",".join(f"{r:.4f}" for r in ratios))


if __name__ == "__main__":
    main()
