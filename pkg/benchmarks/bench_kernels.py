"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--n-dataset 500] [--epochs 3]

Both backends produce identical Q-tables (checked here too), so the ratio is
a pure speed comparison.
"""

import argparse
import time

import numpy as np

from risbeam import kernels
from risbeam.belief import default_eps_floor, generate_dataset
from risbeam.chansim import SystemConfig
from risbeam.codebook import build_codebook
from risbeam.mdp import build_state_space
from risbeam.qlearner import Hyper, train


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-dataset", type=int, default=500)
    ap.add_argument("--epochs", type=int, default=3)
    ap.add_argument("--updates", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    if kernels.cython_backend is None:
        raise SystemExit("compiled kernels not built; run: pip install -e . --no-build-isolation")

    cfg = SystemConfig.from_snr_db(20.0)
    cb = build_codebook(cfg, 3, 0)
    ds = generate_dataset(cfg, cb, args.n_dataset, np.random.default_rng(0))
    ss = build_state_space(ds.Nc, tau=0.9)
    eps = default_eps_floor(ds)
    hyper = Hyper(max_epoch=args.epochs, seed=0)

    rng = np.random.default_rng(1)
    actions = rng.integers(ds.Np, size=args.updates)
    ys = rng.uniform(0, float(ds.feedbacks.max()), size=args.updates)
    prior = np.full(ds.Nc, 1.0 / ds.Nc)
    out = np.empty(ds.Nc)

    def posterior_loop(k):
        def run():
            for a, y in zip(actions.tolist(), ys.tolist()):
                k.posterior_update_into(prior, ds.feedbacks, ds.labels, a, y, eps, out, -1)
        return run

    print(f"dataset {ds.n} channels x {ds.Np} beams, {ss.n_states} states")
    rows = []
    tables = {}
    for name in ("python", "cython"):
        k = kernels.get_backend(name)
        t_train, res = best_of(lambda: train(ds, ss, cb, hyper, backend=name), args.repeat)
        tables[name] = res[0].values
        t_post, _ = best_of(posterior_loop(k), args.repeat)
        rows.append((name, t_train, t_post))

    print(f"{'backend':8s} {'train/epoch [s]':>16s} {'posterior [us]':>15s}")
    for name, t_train, t_post in rows:
        print(f"{name:8s} {t_train / args.epochs:16.4f} {1e6 * t_post / args.updates:15.2f}")
    (_, pt, pp), (_, ct, cp) = rows
    print(f"speedup  {pt / ct:16.1f}x {pp / cp:14.1f}x")
    print("Q-tables identical:", bool(np.array_equal(tables["python"], tables["cython"])))


if __name__ == "__main__":
    main()
