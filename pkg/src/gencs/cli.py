"""Command-line entry point: seeded experiments that write CSV or JSON.

Output is assembled in memory and written only when the experiment finishes,
so a failed run leaves nothing behind.  Exit codes: 0 success, 1 experiment
failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import relu_core
from .codes import gen_balanced_codebook
from .errors import ConstructionFailed, PeelFailure
from .game import GameParams, run_game_trials
from .random_net_analysis import stretch_experiment
from .seeding import rng_for
from .sensing import RecoveryConfig, discretize, latent_recover, recover_over_net, sample_orthonormal
from .separated_set import build_separated_set
from .sparse_gen import SparseGeneratorNet, build_sparsity_net, encode_k_sparse, random_k_sparse


class UsageError(ValueError):
    pass


def _require(cond, param, message):
    if not cond:
        raise UsageError(f"--{param}: {message}")


def _csv(config: dict, header: list[str], rows, footer: dict | None = None) -> str:
    buf = io.StringIO()
    buf.write(f"# config: {json.dumps(config, sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if footer is not None:
        buf.write(f"# summary: {json.dumps(footer, sort_keys=True)}\n")
    return buf.getvalue()


def _config(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "out")}


def cmd_gen_net(args) -> str:
    _require(args.n >= 1, "n", "must be >= 1")
    _require(1 <= args.k <= args.n, "k", "must satisfy 1 <= k <= n")
    gen = build_sparsity_net(args.n, args.k)
    return relu_core.dumps(gen.net, meta={"kind": "sparse", "n": args.n, "k": args.k}) + "\n"


def cmd_verify_sparse(args) -> str:
    _require(args.n >= 1, "n", "must be >= 1")
    _require(1 <= args.k <= args.n, "k", "must satisfy 1 <= k <= n")
    _require(args.trials >= 1, "trials", "must be >= 1")
    gen = build_sparsity_net(args.n, args.k)
    rows = []
    for trial in range(args.trials):
        z = random_k_sparse(rng_for(args.seed, trial), args.n, args.k)
        out = gen(encode_k_sparse(z, gen))
        rows.append([trial, args.n, args.k, float(np.max(np.abs(out - z))), int(np.count_nonzero(out))])
    return _csv(_config(args), ["trial", "n", "k", "max_abs_error", "output_sparsity"], rows)


def cmd_build_code(args) -> str:
    _require(args.n >= 6, "n", "must be >= 6")
    _require(args.size >= 2, "size", "must be >= 2")
    return gen_balanced_codebook(args.n, args.size, args.seed).dumps() + "\n"


def cmd_build_set(args) -> str:
    _require(args.k >= 1 and args.n % args.k == 0, "k", "must divide n")
    _require(args.R > 0, "R", "must be positive")
    _require(math.floor(args.L * args.r / args.R + 1e-9) >= 2, "R", "must satisfy floor(L*r/R) >= 2")
    wss = build_separated_set(args.L, args.r, args.k, args.n, args.R, args.seed)
    return wss.dumps() + "\n"


def _load_net(path):
    with open(path) as fh:
        doc = json.load(fh)
    net = relu_core.ReluNetwork.from_dict(doc)
    meta = doc.get("meta", {})
    if meta.get("kind") == "sparse":
        return SparseGeneratorNet(net, int(meta["n"]), int(meta["k"]))
    return net


def cmd_sense(args) -> str:
    model = _load_net(args.net)
    relu = model.net if isinstance(model, SparseGeneratorNet) else model
    n = relu.output_dim
    _require(1 <= args.m <= n, "m", f"must satisfy 1 <= m <= n = {n}")
    _require(args.b >= 1, "b", "must be >= 1")
    _require(args.trials >= 1, "trials", "must be >= 1")
    _require(args.pool >= 1, "pool", "must be >= 1")

    def draw_latent(rng):
        if isinstance(model, SparseGeneratorNet):
            return encode_k_sparse(random_k_sparse(rng, model.n, model.k, 0.1, 10.0), model)
        return rng.standard_normal(relu.input_dim)

    rows = []
    for trial in range(args.trials):
        rng = rng_for(args.seed, trial, 0)
        latent = draw_latent(rng)
        x = relu(latent)
        A = discretize(sample_orthonormal(args.m, n, int(rng_for(args.seed, trial, 1).integers(2**63))).A, args.b)
        y = A @ x
        scale = max(1.0, float(np.linalg.norm(x)))

        t0 = time.perf_counter()
        pool = [draw_latent(rng) for _ in range(args.pool - 1)]
        pos = int(rng.integers(args.pool))
        pool.insert(pos, latent)
        images = relu(np.array(pool))
        idx = recover_over_net(A, y, images)
        res = float(np.linalg.norm(images[idx] - x))
        ms = (time.perf_counter() - t0) * 1e3
        rows.append([trial, args.m, args.b, "net", res, int(idx == pos), f"{ms:.3f}" if args.timing else ""])

        t0 = time.perf_counter()
        rec = latent_recover(model, A, y, RecoveryConfig(seed=int(rng_for(args.seed, trial, 2).integers(2**63))))
        res = float(np.linalg.norm(rec.reconstruction - x))
        ms = (time.perf_counter() - t0) * 1e3
        rows.append([trial, args.m, args.b, "latent", res, int(res <= 1e-3 * scale), f"{ms:.3f}" if args.timing else ""])
    header = ["trial", "m", "b", "method", "residual", "success", "wall_time_ms"]
    return _csv(_config(args), header, rows)


def cmd_game(args) -> str:
    _require(args.k >= 1 and args.n % args.k == 0, "k", "must divide n")
    _require(args.delta > 0 and args.delta <= args.L * args.r / 4, "delta", "must satisfy 0 < delta <= L*r/4")
    _require(args.trials >= 1, "trials", "must be >= 1")
    _require(args.m is None or 1 <= args.m <= args.n, "m", "must satisfy 1 <= m <= n")
    _require(args.t is None or args.t >= 1, "t", "must be >= 1")
    params = GameParams(
        n=args.n, k=args.k, L=args.L, r=args.r, delta=args.delta, C=args.C, m=args.m, b=args.b,
        t=args.t, net_refine=args.net_refine,
    )
    summary, rows = run_game_trials(params, args.trials, args.seed)
    out = [[r.trial, r.layer, int(r.success), r.bits_sent, r.margin, int(r.u_norm_ok)] for r in rows]
    return _csv(_config(args), ["trial", "j", "success", "bits_sent", "margin", "u_norm_ok"], out, summary)


def cmd_lipschitz(args) -> str:
    _require(args.d >= 1, "d", "must be >= 1")
    _require(args.n >= 1, "n", "must be >= 1")
    _require(args.k >= 1, "k", "must be >= 1")
    _require(args.N >= 2, "N", "must be >= 2")
    _require(args.eps > 0, "eps", "must be positive")
    _require(args.trials >= 1, "trials", "must be >= 1")
    rep = stretch_experiment(args.d, args.n, args.k, args.N, args.eps, args.trials, args.seed)
    rows = [
        [trial, layer + 1, float(s), int(s > 1 + args.eps)]
        for trial, per_layer in enumerate(rep.max_stretch)
        for layer, s in enumerate(per_layer)
    ]
    footer = {"violation_fraction": rep.violation_fraction, "trials": rep.trials}
    return _csv(_config(args), ["trial", "layer", "max_stretch", "violated"], rows, footer)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gencs", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        sp = sub.add_parser(name, help=help)
        sp.set_defaults(func=func)
        sp.add_argument("--out", default="-", help="output path, '-' for stdout")
        return sp

    sp = add("gen-net", cmd_gen_net, "serialize the k-sparse generator")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, default=1)

    sp = add("verify-sparse", cmd_verify_sparse, "round-trip random k-sparse vectors")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("build-code", cmd_build_code, "balanced binary codebook")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--size", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("build-set", cmd_build_set, "certified well-separated set")
    sp.add_argument("--L", type=float, required=True)
    sp.add_argument("--r", type=float, default=1.0)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--R", type=float, required=True)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("sense", cmd_sense, "net and latent recovery from rounded measurements")
    sp.add_argument("--net", required=True, help="network JSON from gen-net")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--b", type=int, default=16)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trials", type=int, default=10)
    sp.add_argument("--pool", type=int, default=64, help="size of the candidate net")
    sp.add_argument("--timing", action="store_true", help="fill wall_time_ms (breaks byte-determinism)")

    sp = add("game", cmd_game, "Augmented Indexing protocol simulation")
    sp.add_argument("--n", type=int, default=64)
    sp.add_argument("--k", type=int, default=4)
    sp.add_argument("--L", type=float, default=64.0)
    sp.add_argument("--r", type=float, default=1.0)
    sp.add_argument("--delta", type=float, default=1.0)
    sp.add_argument("--C", type=float, default=1.0)
    sp.add_argument("--m", type=int, default=None, help="default: min(n, 4k ceil(log2(Lr/delta)))")
    sp.add_argument("--b", type=int, default=16)
    sp.add_argument("--t", type=int, default=None, help="chunks, default ceil(log2 n)")
    sp.add_argument("--net-refine", type=int, default=1)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("lipschitz", cmd_lipschitz, "pairwise stretch of random ReLU nets")
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    return p


def _emit(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
        return
    tmp = f"{out}.partial"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, out)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text = args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ConstructionFailed, PeelFailure) as exc:
        print(f"gencs: {exc}", file=sys.stderr)
        return 1
    _emit(text, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
