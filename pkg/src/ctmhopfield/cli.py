"""Command-line interface: ``ctmhopfield {gen,fit,retrieve,energy-grid,trajectory,bench}``.

Exit codes: 0 success, 2 usage/config/file-access error, 3 data or dimension
error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from contextlib import contextmanager

import numpy as np

from . import formats
from .basis import make_rectangular_basis
from .config import ConfigError, RunConfig
from .dynamics import (
    ContinuousHopfield,
    DiscreteHopfield,
    IterationConfig,
    QuadratureGrid,
    cccp_iterate,
    retrieve_batch,
)
from .errors import DimensionError, NumericalFailure
from .memfit import DEFAULT_LAMBDA, fit_continuous_memory, reconstruction_error
from .synth import (
    PATTERN_KINDS,
    ContinuousModel,
    CorruptionSpec,
    DiscreteModel,
    PatternSpec,
    benchmark_retrieval,
    generate,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

GRID_COLUMNS = ("x", "y", "energy")
SUMMARY_COLUMNS = ("index", "steps", "converged", "final_energy", "cosine_to_query")
BENCH_COLUMNS = ("config", "mean_cosine", "std_cosine", "wall_ms")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


def _log(args, message: str) -> None:
    if not args.quiet:
        print(message, file=sys.stderr)


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


@contextmanager
def _open_out(path):
    """Yield a text stream for ``path``, or stdout when ``path`` is None."""
    if path is None:
        yield sys.stdout
        return
    try:
        fh = open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from None
    with fh:
        yield fh


def _write_rows(path, header, rows) -> None:
    with _open_out(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(v: float) -> str:
    return repr(float(v))


def _read_matrix(path):
    try:
        return formats.load_matrix(path)
    except formats.FormatError as exc:
        raise DataError(f"{path}: {exc}") from None
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from None


def _load_network(args):
    """Build the Hopfield network described by ``args.model``."""
    path = args.model
    try:
        is_model = formats.is_model_file(path)
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from None
    if not is_model:
        return DiscreteHopfield(_read_matrix(path))
    try:
        cm, header = formats.load_model(path)
    except formats.FormatError as exc:
        raise DataError(f"{path}: {exc}") from None
    if getattr(args, "memory", None):
        source = _read_matrix(args.memory)
        if formats.memory_checksum(source) != header["source_sha256"]:
            raise DataError(f"{path} was not fitted on {args.memory} (checksum mismatch)")
    return ContinuousHopfield(cm, QuadratureGrid.parse(args.quad))


def _iteration_config(args) -> IterationConfig:
    try:
        return IterationConfig(beta=args.beta, max_iters=args.max_iters, tol=args.tol)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_gen(args) -> int:
    params = {}
    if args.kind == "circle" and args.radius is not None:
        params["radius"] = args.radius
    if args.kind == "line":
        if args.start is not None:
            params["start"] = tuple(args.start)
        if args.end is not None:
            params["end"] = tuple(args.end)
    for name, kinds in (
        ("amplitude", ("sinusoid", "smooth_embedding")),
        ("frequency", ("sinusoid",)),
        ("scale", ("sinusoid",)),
        ("k", ("smooth_embedding",)),
        ("bandwidth", ("smooth_embedding",)),
    ):
        if args.kind in kinds and getattr(args, name) is not None:
            params[name] = getattr(args, name)
    d = args.d if args.d is not None else (64 if args.kind == "smooth_embedding" else 2)
    try:
        spec = PatternSpec(args.kind, args.l, d, args.seed, params)
        x = generate(spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _save_matrix(args, x)
    _log(args, f"wrote {x.shape[0]}x{x.shape[1]} {args.kind} memory to {args.out}")
    return EXIT_OK


def _save_matrix(args, x) -> None:
    try:
        formats.save_matrix(args.out, x, header=args.csv_header)
    except OSError as exc:
        raise OSError(f"cannot write {args.out}: {exc.strerror}") from None


def cmd_fit(args) -> int:
    if not args.lam > 0:
        raise UsageError(f"--lambda must be > 0, got {args.lam}")
    if args.n < 1:
        raise UsageError(f"--n must be >= 1, got {args.n}")
    x = _read_matrix(args.memory)
    if args.n > x.shape[0]:
        _warn(f"N={args.n} exceeds L={x.shape[0]}; some cells receive no samples")
    cm = fit_continuous_memory(x, make_rectangular_basis(args.n), args.lam)
    try:
        formats.save_model(args.out, cm, formats.memory_checksum(x))
    except OSError as exc:
        raise OSError(f"cannot write {args.out}: {exc.strerror}") from None
    err = reconstruction_error(cm, x)
    if not args.quiet:
        print(f"reconstruction_error={err!r}")
    _log(args, f"wrote {cm.n}x{cm.d} coefficients to {args.out}")
    return EXIT_OK


def cmd_retrieve(args) -> int:
    net = _load_network(args)
    cfg = _iteration_config(args)
    queries = _read_matrix(args.queries)
    if queries.shape[1] != net.d:
        raise DimensionError(f"queries have D={queries.shape[1]}, model has D={net.d}")
    result = retrieve_batch(net, queries, cfg)
    _save_matrix(args, result.final)
    rows = []
    for i, (final, query) in enumerate(zip(result.final, queries)):
        denom = np.linalg.norm(final) * np.linalg.norm(query)
        cos = float(final @ query / denom) if denom > 0 else float("nan")
        rows.append(
            (i, int(result.steps[i]), str(bool(result.converged[i])).lower(),
             _fmt(result.energies[i]), _fmt(cos))
        )
    _write_rows(args.summary, SUMMARY_COLUMNS, rows)
    _log(args, f"retrieved {len(rows)} queries; {int(result.converged.sum())} converged")
    return EXIT_OK


def cmd_energy_grid(args) -> int:
    net = _load_network(args)
    if net.d != 2:
        raise UsageError(f"energy grids are only defined for 2-D memories, model has D={net.d}")
    if args.res < 2 or not (args.xmin < args.xmax and args.ymin < args.ymax):
        raise UsageError("grid needs --res >= 2 and min < max on both axes")
    xs = np.linspace(args.xmin, args.xmax, args.res)
    ys = np.linspace(args.ymin, args.ymax, args.res)
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    points = np.column_stack([gx.ravel(), gy.ravel()])
    energies = net.energy_batch(points, _iteration_config(args).beta)
    if not np.all(np.isfinite(energies)):
        raise NumericalFailure(0, "non-finite energy on grid")
    _write_rows(args.out, GRID_COLUMNS, ((_fmt(p[0]), _fmt(p[1]), _fmt(e)) for p, e in zip(points, energies)))
    return EXIT_OK


def cmd_trajectory(args) -> int:
    net = _load_network(args)
    try:
        q0 = np.array([float(v) for v in args.q0.split(",")])
    except ValueError:
        raise UsageError(f"--q0 must be comma-separated numbers, got {args.q0!r}") from None
    if q0.size != net.d:
        raise DimensionError(f"--q0 has {q0.size} coordinates, model has D={net.d}")
    if net.d != 2:
        _warn(f"trajectory for D={net.d}; plotting tools expect D=2")
    trace = cccp_iterate(net, q0, _iteration_config(args))
    header = ("step", *(f"q{j}" for j in range(net.d)), "energy")
    rows = (
        (i, *(_fmt(v) for v in q), _fmt(e))
        for i, (q, e) in enumerate(zip(trace.iterates, trace.energies))
    )
    _write_rows(args.out, header, rows)
    _log(args, f"{trace.steps} steps, converged={trace.converged}")
    return EXIT_OK


def bench_rows(cfg: RunConfig):
    """Evaluate every sweep cell of ``cfg``; yields ``(config, mean, std, wall_ms)``.

    With one seed the standard deviation is over patterns; with several it
    is over the per-seed means, and the mean is the mean of those means.
    """
    memories = {}
    for seed in cfg.seeds:
        spec = PatternSpec(cfg.kind, cfg.l, cfg.d, seed, cfg.pattern_params())
        memories[seed] = generate(spec)
    cells = []
    for model in cfg.model:
        for token in cfg.beta:
            beta = cfg.resolve_beta(token)
            if model == "discrete":
                for l_sub in cfg.l_sub:
                    label = f"model=discrete;l_sub={'full' if l_sub is None else l_sub};beta={beta!r}"
                    cells.append((label, DiscreteModel(l_sub), beta, None))
            else:
                for n in cfg.n:
                    for lam in cfg.lam:
                        for quad in cfg.quad:
                            label = f"model=continuous;n={n};lambda={lam!r};beta={beta!r};quad={quad}"
                            cells.append((label, ContinuousModel(n, lam), beta, QuadratureGrid.parse(quad)))
    for label, model, beta, quad in cells:
        it = IterationConfig(beta=beta, max_iters=cfg.max_iters, tol=cfg.tol)
        results = []
        for seed in cfg.seeds:
            corruption = CorruptionSpec(cfg.corruption, fraction=cfg.fraction, sigma=cfg.sigma, seed=seed)
            results.append(benchmark_retrieval(memories[seed], corruption, model, it, quad))
        if len(results) == 1:
            mean, std = results[0].mean, results[0].std
        else:
            means = np.array([r.mean for r in results])
            mean, std = float(means.mean()), float(means.std())
        wall = float(np.mean([r.wall_ms for r in results]))
        yield label, mean, std, wall


def cmd_bench(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read {args.config}: {exc.strerror}") from None
    cfg = RunConfig.from_text(text)
    out = args.out if args.out is not None else cfg.out
    rows = [(label, _fmt(m), _fmt(s), f"{w:.3f}") for label, m, s, w in bench_rows(cfg)]
    _write_rows(out, BENCH_COLUMNS, rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("--quiet", action="store_true", help="suppress progress messages")

    iterate = argparse.ArgumentParser(add_help=False)
    iterate.add_argument("--beta", type=float, default=1.0, help="inverse temperature")
    iterate.add_argument("--tol", type=float, default=1e-6, help="step-norm stopping threshold")
    iterate.add_argument("--max-iters", type=int, default=100)
    iterate.add_argument("--quad", default="trapezoid:500", help="'trapezoid:P' or 'exact'")
    iterate.add_argument("--memory", help="source memory file; verifies the model checksum")

    parser = argparse.ArgumentParser(prog="ctmhopfield", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate a synthetic memory")
    p.add_argument("--kind", choices=PATTERN_KINDS, required=True)
    p.add_argument("--l", type=int, required=True, help="number of patterns L")
    p.add_argument("--d", type=int, help="dimension (smooth_embedding only; default 64)")
    p.add_argument("--radius", type=float)
    p.add_argument("--start", type=float, nargs=2, metavar=("X", "Y"))
    p.add_argument("--end", type=float, nargs=2, metavar=("X", "Y"))
    p.add_argument("--amplitude", type=float)
    p.add_argument("--frequency", type=float)
    p.add_argument("--scale", type=float)
    p.add_argument("--k", type=int, help="sinusoids per dimension")
    p.add_argument("--bandwidth", type=float, help="highest frequency in cycles")
    p.add_argument("--out", required=True)
    p.add_argument("--csv-header", action="store_true")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("fit", parents=[common], help="compress a memory into basis coefficients")
    p.add_argument("memory")
    p.add_argument("--n", type=int, required=True, help="number of basis functions N")
    p.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("retrieve", parents=[common, iterate], help="run retrieval for a batch of queries")
    p.add_argument("model", help="model file, or a matrix file for the discrete network")
    p.add_argument("queries")
    p.add_argument("--out", required=True, help="retrieved patterns (matrix file)")
    p.add_argument("--summary", help="per-query CSV summary (default stdout)")
    p.add_argument("--csv-header", action="store_true")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("energy-grid", parents=[common, iterate], help="energy on a 2-D grid")
    p.add_argument("model")
    p.add_argument("--xmin", type=float, default=-2.0)
    p.add_argument("--xmax", type=float, default=2.0)
    p.add_argument("--ymin", type=float, default=-2.0)
    p.add_argument("--ymax", type=float, default=2.0)
    p.add_argument("--res", type=int, default=50)
    p.add_argument("--out", help="CSV output (default stdout)")
    p.set_defaults(func=cmd_energy_grid)

    p = sub.add_parser("trajectory", parents=[common, iterate], help="iterates and energies from one query")
    p.add_argument("model")
    p.add_argument("--q0", required=True, help="initial query, e.g. --q0=-0.5,1 (use '=' when it starts with '-')")
    p.add_argument("--out", help="CSV output (default stdout)")
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser("bench", parents=[common], help="benchmark sweep from a run config")
    p.add_argument("config")
    p.add_argument("--out", help="CSV output (default: config 'out' key, else stdout)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"error: numerical failure at step {exc.step}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, DimensionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
