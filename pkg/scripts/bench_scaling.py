"""Gradient-step timings over a sweep of sketch ranks and reduced dimensions.

Prints a table and writes it as CSV:

    python3 scripts/bench_scaling.py --d 4096 --n 512 --out scaling.csv
"""
import argparse
import csv

from l0prox.bench import BenchConfig, run_bench


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--d", type=int, default=4096)
    p.add_argument("--n", type=int, default=512)
    p.add_argument("--ks", default="4,8,16,32,64,128")
    p.add_argument("--ms", default="64,128,256,512,1024")
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="scaling.csv")
    a = p.parse_args()
    cfg = BenchConfig(d=a.d, n=a.n, ks=[int(v) for v in a.ks.split(",")],
                      ms=[int(v) for v in a.ms.split(",")], iters=a.iters, seed=a.seed)
    _, timings = run_bench(cfg)
    base = timings["pgd"]["median_seconds"]
    rows = []
    for name, entry in timings.items():
        if not isinstance(entry, dict):
            continue
        solver, _, size = name.partition("_")
        rows.append({"solver": solver, "size": size[1:] if size else "", "median_us": entry["median_seconds"] * 1e6,
                     "speedup": base / entry["median_seconds"], "unreliable": entry["unreliable"]})
    print(f"{'solver':>6} {'size':>6} {'median_us':>10} {'speedup':>8}")
    for r in rows:
        print(f"{r['solver']:>6} {r['size']:>6} {r['median_us']:10.1f} {r['speedup']:8.1f}"
              + ("  unreliable" if r["unreliable"] else ""))
    with open(a.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


if __name__ == "__main__":
    main()
