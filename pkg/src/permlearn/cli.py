"""Command-line front end: generate, estimate, analyze, experiment.

Every run writes its artifacts plus a ``manifest.json`` recording the
subcommand, the fully resolved configuration, the seeds, the artifact names,
the package version, and the wall time. Files are written through a temporary
name and renamed into place, so a failed run leaves no partial artifact, and
all artifact bytes are independent of thread count (the manifest's wall-time
field is the single value that varies between reruns).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    estimate_gaps,
    min_count_probability,
    misclassification_rate,
    mle_recovery_bound,
    mv_recovery_bound,
    required_sample_size,
    tv_distance,
    wasserstein1,
)
from .estimators import (
    greedy_from_summary,
    mle_from_summary,
    mv_from_summary,
    summarize,
)
from .harness import (
    FAMILIES,
    ExperimentSpec,
    resolve_model,
    run_recovery_experiment,
)
from .mixtures import (
    LabeledData,
    Permutation,
    load_mixture,
    mixture_to_dict,
    sample_labeled,
)

__all__ = ["main"]

OUT_DIR_ENV = "PERMLEARN_OUT_DIR"
_DATA_STREAM = 0


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not value > 0.0:
        raise argparse.ArgumentTypeError("must be > 0")
    return value


def _unit_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not 0.0 <= value < 1.0:
        raise argparse.ArgumentTypeError("must lie in [0, 1)")
    return value


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated integers") from None


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers") from None


def _family(text: str) -> str:
    name = text.replace("-", "_")
    if name not in FAMILIES:
        raise argparse.ArgumentTypeError(
            f"unknown family {text!r}; choose from "
            + ", ".join(f.replace("_", "-") for f in FAMILIES)
        )
    return name


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="permlearn",
        description="Learn label-to-region assignments of a known mixing measure.",
    )
    parser.add_argument("--version", action="version", version=f"permlearn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="draw a seeded synthetic mixing measure")
    gen.add_argument("--family", type=_family, required=True)
    gen.add_argument("--k", type=_positive_int, default=4)
    gen.add_argument("--dim", type=_positive_int, default=2)
    gen.add_argument("--eta", type=_positive_float, default=1.0)
    gen.add_argument("--seed", type=_nonneg_int, default=0)
    gen.add_argument(
        "--samples", type=_positive_int, default=None,
        help="also draw a labeled dataset of this size",
    )
    gen.add_argument("--out-dir", default=None)

    est = sub.add_parser("estimate", help="recover the assignment from labeled data")
    est.add_argument("--mixture", required=True)
    est.add_argument("--data", required=True)
    est.add_argument(
        "--method", choices=("mle", "mv", "greedy", "all"), default="all"
    )
    est.add_argument("--out-dir", default=None)

    ana = sub.add_parser("analyze", help="gaps, bounds, risk, and distances")
    ana.add_argument("--truth", default=None, help="true mixture JSON")
    ana.add_argument("--model", default=None, help="fitted mixture JSON (default: truth)")
    ana.add_argument("--true-perm", type=_int_list, default=None)
    ana.add_argument("--perm", type=_int_list, default=None,
                     help="candidate assignment for --risk (default identity)")
    ana.add_argument("--gap-mle", action="store_true")
    ana.add_argument("--gap-mv", action="store_true")
    ana.add_argument("--risk", action="store_true")
    ana.add_argument("--tv", nargs=2, metavar=("A", "B"), default=None,
                     help="total variation between two single-atom mixture files")
    ana.add_argument("--w1", nargs=2, metavar=("A", "B"), default=None,
                     help="transport distance between two mixture files")
    ana.add_argument("--required-n", choices=("mle", "mv"), default=None)
    ana.add_argument("--k", type=_positive_int, default=None)
    ana.add_argument("--delta", type=float, default=None)
    ana.add_argument("--value", type=_positive_float, default=None,
                     help="exponent (mle) or vote margin (mv) for --required-n")
    ana.add_argument("--mle-bound", action="store_true")
    ana.add_argument("--mv-bound", action="store_true")
    ana.add_argument("--counts", type=_int_list, default=None)
    ana.add_argument("--exponent", type=float, default=None)
    ana.add_argument("--gap", type=float, default=None)
    ana.add_argument("--min-count", action="store_true")
    ana.add_argument("--n", type=_positive_int, default=None)
    ana.add_argument("--probs", type=_float_list, default=None)
    ana.add_argument("--m", type=_nonneg_int, default=None)
    ana.add_argument("--mc", type=_positive_int, default=100_000,
                     help="Monte-Carlo sample size")
    ana.add_argument("--seed", type=_nonneg_int, default=0)
    ana.add_argument("--out-dir", default=None)

    exp = sub.add_parser("experiment", help="recovery curves over a sample-size grid")
    exp.add_argument("--spec", default=None, help="experiment spec JSON file")
    exp.add_argument("--family", type=_family, default=None)
    exp.add_argument("--k", type=_positive_int, default=None)
    exp.add_argument("--dim", type=_positive_int, default=None)
    exp.add_argument("--eta", type=_positive_float, default=None)
    exp.add_argument("--n-grid", type=_int_list, default=None)
    exp.add_argument("--trials", type=_positive_int, default=None)
    exp.add_argument("--rho", type=_unit_float, default=None, help="label-noise rate")
    exp.add_argument("--seed", type=_nonneg_int, default=None)
    exp.add_argument("--threads", type=_positive_int, default=1)
    exp.add_argument("--out-dir", default=None)
    return parser


def _scrub(obj):
    """Replace non-finite floats with None so artifacts are strict JSON."""
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {key: _scrub(val) for key, val in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_scrub(val) for val in obj]
    return obj


def _json_text(obj) -> str:
    return json.dumps(_scrub(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _resolve_out_dir(arg: str | None) -> Path:
    out = arg or os.environ.get(OUT_DIR_ENV) or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_artifacts(
    out_dir: Path,
    command: str,
    config: dict,
    seeds: dict,
    texts: dict[str, str],
    started: float,
) -> list[str]:
    """Write artifacts then the manifest, each atomically; clean up on failure."""
    names = list(texts)
    manifest = {
        "command": command,
        "config": config,
        "seeds": seeds,
        "artifacts": names,
        "version": __version__,
        "wall_time_s": round(time.perf_counter() - started, 6),
    }
    pending = dict(texts)
    pending["manifest.json"] = _json_text(manifest)
    temps = []
    try:
        for name, text in pending.items():
            tmp = out_dir / f".{name}.tmp"
            tmp.write_text(text)
            temps.append((tmp, out_dir / name))
        for tmp, final in temps:
            os.replace(tmp, final)
    except BaseException:
        for tmp, _ in temps:
            tmp.unlink(missing_ok=True)
        raise
    return names + ["manifest.json"]


def _cmd_gen(args, out_dir: Path, started: float) -> list[str]:
    spec = ExperimentSpec(
        family=args.family, k=args.k, dim=args.dim, eta=args.eta, seed=args.seed
    )
    if spec.family == "custom":
        raise ValueError("gen supports only the synthetic families")
    truth, true_perm, model = resolve_model(spec)
    texts = {"mixture.json": _json_text(mixture_to_dict(truth))}
    if spec.perturbed:
        texts["model.json"] = _json_text(mixture_to_dict(model))
    seeds: dict = {"root": args.seed}
    if args.samples is not None:
        data = sample_labeled(
            truth, true_perm, args.samples,
            np.random.default_rng([args.seed, _DATA_STREAM]),
        )
        tmp = out_dir / ".data.csv.tmp"
        data.save_csv(tmp)
        text = tmp.read_text()
        tmp.unlink()
        texts["data.csv"] = text
        seeds["data_stream"] = [args.seed, _DATA_STREAM]
    config = {
        "family": spec.family,
        "k": spec.k,
        "dim": spec.dim,
        "eta": spec.eta,
        "seed": args.seed,
        "samples": args.samples,
    }
    return _write_artifacts(out_dir, "gen", config, seeds, texts, started)


def _cmd_estimate(args, out_dir: Path, started: float) -> list[str]:
    measure = load_mixture(args.mixture)
    data = LabeledData.load_csv(args.data)
    summary = summarize(measure, data)
    runners = {
        "mle": mle_from_summary,
        "mv": mv_from_summary,
        "greedy": greedy_from_summary,
    }
    wanted = list(runners) if args.method == "all" else [args.method]
    result = {name: runners[name](summary).to_dict() for name in wanted}
    config = {
        "mixture": str(args.mixture),
        "data": str(args.data),
        "method": args.method,
        "n": data.n,
    }
    texts = {"estimate.json": _json_text(result)}
    return _write_artifacts(out_dir, "estimate", config, {}, texts, started)


def _require(flag: str, value, needed_by: str):
    if value is None:
        raise ValueError(f"{needed_by} requires {flag}")
    return value


def _cmd_analyze(args, out_dir: Path, started: float) -> list[str]:
    results: dict = {}
    truth = load_mixture(args.truth) if args.truth else None
    model = load_mixture(args.model) if args.model else truth

    if args.gap_mle or args.gap_mv or args.risk:
        if truth is None:
            raise ValueError("--gap-mle/--gap-mv/--risk require --truth")
        true_perm = (
            Permutation(args.true_perm)
            if args.true_perm
            else Permutation.identity(truth.n_atoms)
        )
        which = {name for name, on in (("mle", args.gap_mle), ("mv", args.gap_mv)) if on}
        if which:
            report = estimate_gaps(
                model, truth, true_perm, samples=args.mc, seed=args.seed, which=which
            )
            results["gaps"] = report.to_dict()
        if args.risk:
            perm = (
                Permutation(args.perm)
                if args.perm
                else Permutation.identity(model.n_atoms)
            )
            est = misclassification_rate(
                model, perm, truth, true_perm, samples=args.mc, seed=args.seed
            )
            results["risk"] = est.to_dict()

    if args.tv is not None:
        a, b = (load_mixture(p) for p in args.tv)
        if a.n_atoms != 1 or b.n_atoms != 1:
            raise ValueError("--tv expects single-atom mixtures; use --w1 otherwise")
        est = tv_distance(
            a.components[0], b.components[0], mc_samples=args.mc, seed=args.seed
        )
        results["tv"] = est.to_dict()

    if args.w1 is not None:
        a, b = (load_mixture(p) for p in args.w1)
        value, plan = wasserstein1(a, b, mc_samples=args.mc, seed=args.seed)
        results["w1"] = {"value": value, "plan": plan.to_dict()}

    if args.required_n is not None:
        k = _require("--k", args.k, "--required-n")
        delta = _require("--delta", args.delta, "--required-n")
        value = _require("--value", args.value, "--required-n")
        n = required_sample_size(k, delta, args.required_n, value)
        results["required_n"] = {
            "method": args.required_n, "k": k, "delta": delta, "value": value, "n": n,
        }

    if args.mle_bound:
        k = _require("--k", args.k, "--mle-bound")
        counts = _require("--counts", args.counts, "--mle-bound")
        exponent = _require("--exponent", args.exponent, "--mle-bound")
        results["mle_bound"] = {
            "k": k,
            "counts": list(counts),
            "exponent": exponent,
            "value": mle_recovery_bound(k, counts, exponent),
        }

    if args.mv_bound:
        k = _require("--k", args.k, "--mv-bound")
        counts = _require("--counts", args.counts, "--mv-bound")
        gap = _require("--gap", args.gap, "--mv-bound")
        results["mv_bound"] = {
            "k": k,
            "counts": list(counts),
            "gap": gap,
            "value": mv_recovery_bound(k, counts, gap),
        }

    if args.min_count:
        n = _require("--n", args.n, "--min-count")
        probs = _require("--probs", args.probs, "--min-count")
        m = _require("--m", args.m, "--min-count")
        results["min_count"] = {
            "n": n,
            "probs": list(probs),
            "m": m,
            "value": min_count_probability(n, probs, m),
        }

    if not results:
        raise ValueError("analyze: nothing requested; pass at least one computation flag")

    config = {
        key: val
        for key, val in vars(args).items()
        if key not in ("command", "out_dir")
        and val is not None
        and val is not False
    }
    texts = {"analysis.json": _json_text(results)}
    return _write_artifacts(
        out_dir, "analyze", config, {"root": args.seed}, texts, started
    )


def _cmd_experiment(args, out_dir: Path, started: float) -> list[str]:
    merged: dict = {}
    if args.spec is not None:
        with open(args.spec) as fh:
            merged.update(json.load(fh))
    overrides = {
        "family": args.family,
        "k": args.k,
        "dim": args.dim,
        "eta": args.eta,
        "n_grid": args.n_grid,
        "trials": args.trials,
        "label_noise": args.rho,
        "seed": args.seed,
    }
    merged.update({key: val for key, val in overrides.items() if val is not None})
    if "family" not in merged:
        raise ValueError("experiment needs --family or a spec file with one")
    spec = ExperimentSpec.from_dict(merged)
    curve = run_recovery_experiment(spec, threads=args.threads)
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(curve.csv_rows())
    csv_text = buf.getvalue()
    texts = {
        "curves.csv": csv_text,
        "experiment.json": _json_text(curve.sidecar_dict()),
    }
    # threads deliberately left out of the config echo: it cannot change results.
    return _write_artifacts(
        out_dir, "experiment", spec.to_dict(), {"root": spec.seed}, texts, started
    )


_HANDLERS = {
    "gen": _cmd_gen,
    "estimate": _cmd_estimate,
    "analyze": _cmd_analyze,
    "experiment": _cmd_experiment,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        out_dir = _resolve_out_dir(args.out_dir)
        written = _HANDLERS[args.command](args, out_dir, started)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for name in written:
        print(out_dir / name)
    return 0


if __name__ == "__main__":
    sys.exit(main())
