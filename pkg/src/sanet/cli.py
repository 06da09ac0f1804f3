"""Command-line entry point: ``sanet <subcommand> [flags]``.

Every subcommand writes plain CSV/text artifacts under ``--out`` (default:
``$SANET_OUTPUT_DIR`` or ``./sanet-out``). Timestamps only go to
``sanet.log`` in that directory, so re-runs with the same seed and inputs
produce byte-identical artifacts.

Exit status: 0 on success, 1 on data/model errors, 2 on usage errors.
"""

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import activations as act
from . import data, flithos, gradcheck, harness
from .errors import SanError
from .model import forward, load_checkpoint, mae, save_checkpoint

OUTPUT_ENV = "SANET_OUTPUT_DIR"
log = logging.getLogger("sanet")


class CliError(Exception):
    """Raised for problems that are the caller's fault (exit status 2)."""


def _add_data_flags(p):
    g = p.add_argument_group("data (choose one source)")
    g.add_argument("--signal", help="1D record CSV, >= 12000 samples, split 6/2/4 x 1000")
    g.add_argument("--segments", help="labeled segment CSV ([id,] values..., label), split 76/12/12")
    g.add_argument("--idx-images", help="IDX image file (with --idx-labels)")
    g.add_argument("--idx-labels", help="IDX label file (with --idx-images)")
    g.add_argument("--synthetic", action="store_true", help="synthetic pulse train (the default source)")
    g.add_argument("--period", type=int, default=100)
    g.add_argument("--pulse-width", type=float, default=20.0)
    g.add_argument("--noise", type=float, default=0.05)
    g.add_argument("--jitter", type=float, default=0.2)
    g.add_argument("--n-train", type=int, default=1000, help="IDX images used for training")
    g.add_argument("--n-val", type=int, default=200)
    g.add_argument("--n-test", type=int, default=500)
    g.add_argument("--data-seed", type=int, default=0, help="seed for synthetic data and subset selection")


def _add_train_flags(p, single):
    p.add_argument("--config", help="key = value config file (TrainConfig fields)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--border-tolerance", type=int)
    p.add_argument("--lr", type=float)
    if single:
        p.add_argument("--activation", choices=act.KINDS, default=act.EXTREMA_POOL_INDICES)
        p.add_argument("--kernel-size", type=int, required=True)
    else:
        p.add_argument("--kernel-sizes", help="comma-separated list, e.g. 1,10,100")
        p.add_argument("--activations", help="comma-separated activation names")
        p.add_argument("--workers", type=int, default=1, help="parallel sweep cells (default 1)")
        p.add_argument("--with-classifier", action="store_true", help="add the accuracy-delta column (labeled data)")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=os.environ.get(OUTPUT_ENV, "sanet-out"), help="output directory")
    common.add_argument("--seed", type=int, default=None, help="training seed (overrides config)")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="sanet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")
    add = lambda name, help: sub.add_parser(name, help=help, parents=[common])  # noqa: E731

    p = add("train", "train one SAN and save the selected checkpoint")
    _add_train_flags(p, single=True)
    _add_data_flags(p)

    p = add("sweep", "train every (activation, kernel size) cell and write result tables")
    _add_train_flags(p, single=False)
    _add_data_flags(p)

    p = add("eval-classifier", "accuracy delta of a linear classifier on raw vs reconstructed inputs")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--batch-size", type=int, default=64)
    _add_data_flags(p)

    p = add("reconstruct", "run a checkpoint over an input CSV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True, help="CSV signal (1D) or matrix (2D)")

    p = add("export-kernels", "write checkpoint kernels as CSV")
    p.add_argument("--checkpoint", required=True)

    p = add("gradcheck", "finite-difference check of the analytic gradients")
    p.add_argument("--count", type=int, default=20, help="random instances per activation kind")
    p.add_argument("--step", type=float, default=gradcheck.DEFAULT_STEP)
    p.add_argument("--tolerance", type=float, default=1e-5)
    return parser


def _require_file(path, flag):
    if path is not None and not Path(path).is_file():
        raise CliError(f"{flag}: file not found: {path}")


def _config(args):
    _require_file(args.config, "--config")
    overrides = {
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "q": args.q,
        "border_tolerance": args.border_tolerance,
        "lr": args.lr,
        "seed": args.seed,
    }
    if getattr(args, "kernel_sizes", None):
        overrides["kernel_sizes"] = [int(v) for v in args.kernel_sizes.split(",")]
    if getattr(args, "activations", None):
        overrides["activations"] = [v.strip() for v in args.activations.split(",")]
    if args.config:
        return harness.load_config(args.config, **overrides)
    return harness.TrainConfig(**{k: v for k, v in overrides.items() if v is not None})


def _split(args):
    sources = [bool(args.signal), bool(args.segments), bool(args.idx_images or args.idx_labels), args.synthetic]
    if sum(sources) > 1:
        raise CliError("choose only one data source")
    if args.signal:
        _require_file(args.signal, "--signal")
        split = data.physionet_protocol_split(data.load_signal_csv(args.signal))
        split.source = args.signal
        return split
    if args.segments:
        _require_file(args.segments, "--segments")
        return data.epilepsy_protocol_split(args.segments, seed=args.data_seed)
    if args.idx_images or args.idx_labels:
        if not (args.idx_images and args.idx_labels):
            raise CliError("--idx-images and --idx-labels go together")
        _require_file(args.idx_images, "--idx-images")
        _require_file(args.idx_labels, "--idx-labels")
        pairs = data.load_idx_images(args.idx_images, args.idx_labels)
        return data.image_protocol_split(pairs, args.n_train, args.n_val, args.n_test, seed=args.data_seed)
    return data.synth_pulse_split(args.data_seed, args.period, args.pulse_width, args.jitter, args.noise)


def _write_text(path, text):
    path.write_text(text)
    log.info("wrote %s", path)


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    log.info("wrote %s", path)


def _g(v):
    return format(float(v), ".17g")


def _write_kernels(out, model, prefix="kernel"):
    for i, k in enumerate(model.kernels):
        np.savetxt(out / f"{prefix}_{i}.csv", np.atleast_2d(k) if k.ndim == 2 else k[:, None], fmt="%.17g", delimiter=",")


def _reports_file(path, reports_by_name):
    names, reports = [], []
    for name, reps in reports_by_name.items():
        for i, r in enumerate(reps):
            names.append((name, i))
            reports.append(r)
    extra = {"cell": [n for n, _ in names], "example": [i for _, i in names]}
    _write_text(path, flithos.reports_to_csv(reports, extra))


def cmd_train(args, out):
    config = _config(args)
    split = _split(args)
    result = harness.train_san(config, split, args.activation, args.kernel_size)
    save_checkpoint(result.model, out / "checkpoint.txt")
    _write_rows(
        out / "history.csv",
        ["epoch", "train_mae", "validation_flithos"],
        [[0, _g(result.train_mae[0]), ""]]
        + [[e + 1, _g(m), _g(v)] for e, (m, v) in enumerate(zip(result.train_mae[1:], result.validation_flithos))],
    )
    reports = harness.evaluate(result.model, split.test)
    _reports_file(out / "test_reports.csv", {f"{args.activation}_m{args.kernel_size}": reports})
    _write_kernels(out, result.model)
    cr, nl, phi = harness.mean_reports(reports)
    print(f"selected epoch {result.selected_epoch}: CR^-1 {cr:.4f}  L~ {nl:.4f}  phi {phi:.4f}")


def cmd_sweep(args, out):
    config = _config(args)
    split = _split(args)
    records = harness.sweep(config, split, workers=args.workers)
    if args.with_classifier:
        for r in records:
            r.accuracy_delta = harness.accuracy_delta(split, r.model, seed=config.seed).delta
    _write_text(out / "sweep.csv", harness.emit_table(records, "csv"))
    _write_text(out / "sweep.md", harness.emit_table(records, "markdown"))
    _write_rows(
        out / "records.csv",
        ["activation", "m", "selected_epoch", "validation_flithos", "cr_inverse", "normalized_loss", "flithos", "accuracy_delta"],
        [
            [r.activation, r.m, r.selected_epoch, _g(r.validation_flithos), _g(r.cr_inverse), _g(r.normalized_loss),
             _g(r.flithos), "" if r.accuracy_delta is None else _g(r.accuracy_delta)]
            for r in records
        ],
    )
    _write_rows(
        out / "validation_history.csv",
        ["activation", "m", "epoch", "validation_flithos"],
        [[r.activation, r.m, e + 1, _g(v)] for r in records for e, v in enumerate(r.validation_history)],
    )
    _reports_file(out / "test_reports.csv", {f"{r.activation}_m{r.m}": r.test_reports for r in records})
    best = harness.best_per_activation(records)
    _write_text(out / "best.md", harness.emit_table(list(best.values()), "markdown"))
    ckpt_dir = out / "checkpoints"
    ckpt_dir.mkdir(exist_ok=True)
    for r in records:
        save_checkpoint(r.model, ckpt_dir / f"{r.activation}_m{r.m}.txt")
    sys.stdout.write(harness.emit_table(list(best.values()), "markdown"))


def cmd_eval_classifier(args, out):
    _require_file(args.checkpoint, "--checkpoint")
    model = load_checkpoint(args.checkpoint)
    split = _split(args)
    result = harness.accuracy_delta(split, model, args.epochs, args.batch_size, seed=args.seed or 0)
    _write_rows(
        out / "classifier.csv",
        ["raw_accuracy", "reconstruction_accuracy", "delta_points"],
        [[_g(result.raw_accuracy), _g(result.reconstruction_accuracy), _g(result.delta)]],
    )
    print(f"raw {100 * result.raw_accuracy:.2f}%  reconstructed {100 * result.reconstruction_accuracy:.2f}%  "
          f"delta {harness.fmt(result.delta, 1, signed=True)}")


def cmd_reconstruct(args, out):
    _require_file(args.checkpoint, "--checkpoint")
    _require_file(args.input, "--input")
    model = load_checkpoint(args.checkpoint)
    if model.rank == 1:
        x = data.load_signal_csv(args.input)
    else:
        x = np.loadtxt(args.input, delimiter=",", ndmin=2)
    trace = forward(model, x)
    if model.rank == 1:
        data.save_signal_csv(trace.x_hat, out / "reconstruction.csv")
        for i, (a, r) in enumerate(zip(trace.maps, trace.partials)):
            data.save_signal_csv(a, out / f"activation_{i}.csv")
            data.save_signal_csv(r, out / f"partial_{i}.csv")
    else:
        np.savetxt(out / "reconstruction.csv", trace.x_hat, fmt="%.17g", delimiter=",")
        for i, (a, r) in enumerate(zip(trace.maps, trace.partials)):
            np.savetxt(out / f"activation_{i}.csv", a, fmt="%.17g", delimiter=",")
            np.savetxt(out / f"partial_{i}.csv", r, fmt="%.17g", delimiter=",")
    rep = flithos.report(x, trace.x_hat, model.kernels, trace.maps, mae) if np.any(x) else None
    if rep is not None:
        _write_text(out / "report.csv", flithos.reports_to_csv([rep]))
        print(f"CR^-1 {rep.cr_inverse:.4f}  L~ {rep.normalized_loss:.4f}  phi {rep.flithos:.4f}")


def cmd_export_kernels(args, out):
    _require_file(args.checkpoint, "--checkpoint")
    model = load_checkpoint(args.checkpoint)
    _write_kernels(out, model)
    print(f"wrote {model.q} kernel file(s) to {out}")


def cmd_gradcheck(args, out):
    results = gradcheck.gradcheck_suite(seed=args.seed or 0, count=args.count, h=args.step)
    rows, ok = [], True
    for (tag, rank), r in results.items():
        passed = r.max_rel_error <= args.tolerance and r.stable_fraction >= 0.95
        ok &= passed
        rows.append([tag, rank, _g(r.max_rel_error), r.stable, r.total, "pass" if passed else "FAIL"])
        print(f"{tag:22s} {rank}D  max rel err {r.max_rel_error:.3e}  stable {r.stable}/{r.total}  "
              f"{'pass' if passed else 'FAIL'}")
    _write_rows(out / "gradcheck.csv", ["activation", "rank", "max_rel_error", "stable", "total", "status"], rows)
    return 0 if ok else 1


COMMANDS = {
    "train": cmd_train,
    "sweep": cmd_sweep,
    "eval-classifier": cmd_eval_classifier,
    "reconstruct": cmd_reconstruct,
    "export-kernels": cmd_export_kernels,
    "gradcheck": cmd_gradcheck,
}


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        handler = logging.FileHandler(out / "sanet.log")
        handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
        root = logging.getLogger()
        root.addHandler(handler)
        root.setLevel(logging.DEBUG if args.verbose else logging.INFO)
        log.info("argv: %s", argv if argv is not None else sys.argv[1:])
        status = COMMANDS[args.command](args, out)
        return status or 0
    except CliError as exc:
        parser.print_usage(sys.stderr)
        print(f"sanet: error: {exc}", file=sys.stderr)
        return 2
    except (SanError, OSError) as exc:
        print(f"sanet: error: {exc}", file=sys.stderr)
        return 1
    finally:
        for h in list(logging.getLogger().handlers):
            if isinstance(h, logging.FileHandler):
                logging.getLogger().removeHandler(h)
                h.close()


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
