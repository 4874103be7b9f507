"""Command-line front end: ``toral-relax <subcommand>``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 acceptance failure.
"""

import argparse
import csv
import json
import math
from pathlib import Path
import sys

import numpy as np

from .classical import ClassicalMapSpec
from .experiments import ConfigError, ExperimentConfig, emit, fit_rate, run_sweep
from .lattice import SymplecticIntMatrix, ks_entropy, min_orbit_extension
from .noise import NoiseKernel, classical_eigenvalue, eigenvalue_table, ges_bounds
from .quantum import egorov_discrepancy
from .relaxation import classify_regime, tau_classical, tau_quantum, theorem_constant_M
from .results import ConvergenceError
from .series import FourierSeries
from .weyl import QuantumSetting, admissible_angles

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ACCEPT = 0, 1, 2, 3


def _matrix(text):
    vals = [int(v) for v in text.replace(";", ",").split(",")]
    n = int(round(math.sqrt(len(vals))))
    if n * n != len(vals):
        raise argparse.ArgumentTypeError("matrix needs a square number of entries")
    return [vals[i * n:(i + 1) * n] for i in range(n)]


def _floats(text):
    return [float(v) for v in text.split(",") if v]


def _ints(text):
    return [int(v) for v in text.split(",") if v]


def _kernel(args):
    params = {}
    if args.kernel == "compact_bump":
        params["radius"] = args.radius
    elif args.kernel == "power_law":
        params["tail"] = args.tail
    return NoiseKernel.from_spec({"family": args.kernel, "params": params}, len(args.matrix) // 2)


def _table_out(header, rows, out):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        fh = open(out, "w", newline="")
    else:
        fh = sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if out:
        fh.close()


def cmd_relax(args):
    spec = ClassicalMapSpec.kicked(args.matrix, args.kappa) if args.kappa else ClassicalMapSpec(args.matrix)
    kernel = _kernel(args)
    if args.side == "classical":
        res = tau_classical(spec, kernel, args.eps, args.flavor, threshold=args.threshold)
        N = theta = regime = None
    else:
        N = args.N
        theta = tuple(args.theta) if args.theta else admissible_angles(spec.linear_part, N)[0]
        res = tau_quantum(spec, kernel, args.eps, QuantumSetting(N, spec.dim_d, theta), args.flavor, args.path, threshold=args.threshold)
        regime = classify_regime(spec.linear_part, args.eps, N).label
    out = {
        "epsilon": args.eps, "N": N, "theta": theta, "flavor": args.flavor, "side": args.side,
        "tau": "inf" if res.tau == math.inf else res.tau, "bracket": list(res.bracket),
        "scan_cap_hit": res.scan_cap_hit, "regime": regime,
    }
    print(json.dumps(out))
    return EXIT_OK


def cmd_sweep(args):
    cfg = ExperimentConfig.load(args.config)
    out = Path(args.out)
    rows = run_sweep(cfg, cache_dir=out / ".cache", force=args.force, threads=args.threads, timing=args.timing)
    paths = emit(rows, args.format, out / f"sweep.{args.format}", cfg.content_hash())
    groups = {}
    for r in rows:
        if isinstance(r.tau, int):
            groups.setdefault((r.flavor, r.side, r.path), []).append(r)
    for key, grp in groups.items():
        if len(grp) >= 3:
            slope, icpt, r2 = fit_rate(grp)
            print(f"{'/'.join(k for k in key if k)}: slope={slope:.4f} intercept={icpt:.3f} r2={r2:.4f}")
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def cmd_lattice_min(args):
    h = ks_entropy(args.matrix).min_averaged
    rows = []
    for n in range(args.n_min, args.n_max + 1):
        ext = min_orbit_extension(args.matrix, n, variant=args.variant)
        rows.append((n, ext.value, " ".join(map(str, ext.argmin)), repr(math.log(ext.value) / (2 * h * n)), ext.confirmed))
    _table_out(("n", "min_value", "argmin", "log_ratio", "certified"), rows, args.out)
    return EXIT_OK


def cmd_noise_eig(args):
    kernel = _kernel(args)
    N, eps, K = args.N, args.eps, args.kmax
    tab = eigenvalue_table(kernel, eps, N)
    rows = []
    for kq in range(-K, K + 1):
        for kp in range(-K, K + 1):
            k = np.array([kq, kp])
            g = float(tab[kq % N, kp % N])
            ghat = float(classical_eigenvalue(kernel, eps, k))
            lo, hi = (repr(float(x)) for x in ges_bounds(eps, N, k)) if kernel.is_gaussian else ("", "")
            rows.append((kq, kp, repr(g), repr(ghat), lo, hi))
    _table_out(("k_q", "k_p", "gamma", "ghat", "ges_lower", "ges_upper"), rows, args.out)
    return EXIT_OK


def cmd_egorov(args):
    spec = ClassicalMapSpec.kicked(args.matrix, args.kappa)
    f = FourierSeries.cos_q(1.0)
    rows, prev = [], None
    for N in args.Ns:
        d = egorov_discrepancy(spec, f, args.n, QuantumSetting(N, 1, admissible_angles(spec.linear_part, N)[0]))
        rows.append((N, repr(d), "" if prev is None else repr(prev / d)))
        prev = d
    _table_out(("N", "discrepancy", "ratio_to_previous"), rows, args.out)
    return EXIT_OK


def cmd_regimes(args):
    M, _ = theorem_constant_M(args.matrix)
    rows = []
    for eps in args.eps:
        for N in args.Ns:
            tag = classify_regime(args.matrix, eps, N, args.exponent, M)
            rows.append((repr(eps), N, repr(eps * N), tag.label, repr(tag.ehrenfest)))
    _table_out(("epsilon", "N", "eps_N", "regime", "ehrenfest_time"), rows, args.out)
    return EXIT_OK


def cmd_accept(args):
    from .acceptance import run_all

    results = run_all(args.only or None)
    for r in results:
        print(r.line(), flush=True)
    return EXIT_OK if all(r.passed for r in results) else EXIT_ACCEPT


def build_parser():
    p = argparse.ArgumentParser(prog="toral-relax", description="Relaxation times of noisy maps on the torus.")
    sub = p.add_subparsers(dest="command", required=True)

    def map_args(sp, kernel=True):
        sp.add_argument("--matrix", type=_matrix, default=[[2, 1], [1, 1]], help="row-major entries, e.g. 2,1,1,1")
        if kernel:
            sp.add_argument("--kernel", choices=("gaussian", "compact_bump", "power_law"), default="gaussian")
            sp.add_argument("--radius", type=float, default=1.0)
            sp.add_argument("--tail", type=float, default=5.0)

    sp = sub.add_parser("relax", help="one relaxation time")
    map_args(sp)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--N", type=int, default=None)
    sp.add_argument("--theta", type=_floats, default=None)
    sp.add_argument("--kappa", type=float, default=0.0)
    sp.add_argument("--flavor", choices=("noisy", "coarse"), default="noisy")
    sp.add_argument("--side", choices=("classical", "quantum"), default="quantum")
    sp.add_argument("--path", choices=("exact", "dense"), default="exact")
    sp.add_argument("--threshold", type=float, default=None, help="relaxation level in (0, 1), default 1/e")
    sp.set_defaults(func=cmd_relax)

    sp = sub.add_parser("sweep", help="run a JSON-configured sweep")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", default="results")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--force", action="store_true")
    sp.add_argument("--threads", type=int, default=None)
    sp.add_argument("--timing", action="store_true", help="fill wall_ms (makes output non-reproducible)")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("lattice-min", help="minimal orbit extensions")
    map_args(sp, kernel=False)
    sp.add_argument("--n-min", type=int, default=1)
    sp.add_argument("--n-max", type=int, default=14)
    sp.add_argument("--variant", choices=("sum", "endpoint"), default="sum")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_lattice_min)

    sp = sub.add_parser("noise-eig", help="quantum and classical noise eigenvalues")
    map_args(sp)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--kmax", type=int, default=3)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_noise_eig)

    sp = sub.add_parser("egorov", help="Egorov discrepancy against N")
    map_args(sp, kernel=False)
    sp.add_argument("--kappa", type=float, default=0.3)
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--Ns", type=_ints, default=[16, 32, 64, 128])
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_egorov)

    sp = sub.add_parser("regimes", help="regime labels on an (eps, N) grid")
    map_args(sp, kernel=False)
    sp.add_argument("--eps", type=_floats, required=True)
    sp.add_argument("--Ns", type=_ints, required=True)
    sp.add_argument("--exponent", type=float, default=None)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_regimes)

    sp = sub.add_parser("accept", help="run the acceptance checks")
    sp.add_argument("--only", type=_ints, default=None)
    sp.set_defaults(func=cmd_accept)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        if getattr(args, "matrix", None) is not None:
            SymplecticIntMatrix(args.matrix)
        if args.command == "relax" and args.side == "quantum" and args.N is None:
            raise ConfigError("--N is required for the quantum side")
        return args.func(args)
    except ConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
