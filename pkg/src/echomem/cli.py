"""Command-line interface: train, classify, evaluate, trace, spectrum, bench, synth.

Exit codes: 0 success, 1 usage, 2 I/O, 3 data or format error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import EchomemError
from .evaluation import (
    benchmark,
    confusion_rows,
    format_benchmark,
    format_report,
    report,
    report_rows,
    score,
)
from .hopfield import DynamicsConfig, format_state
from .modelio import read_model_file, write_model_file
from .pipeline import ERROR, classify, classify_batch, default_jobs, train
from .spectrum import DEFAULT_FFT_CAP, EncodingConfig, compute_spectrum
from .wav import load_wav

log = logging.getLogger("echomem")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DATA = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


_FMT = argparse.ArgumentDefaultsHelpFormatter


def _exemplar(text: str):
    label, sep, path = text.partition("=")
    if not sep or not label or not path:
        raise argparse.ArgumentTypeError(f"expected LABEL=PATH, got {text!r}")
    return label, path


def _add_encoding_flags(p):
    p.add_argument("--band-lo", type=float, default=35_000.0, help="lower edge of the analysis band (Hz)")
    p.add_argument("--band-hi", type=float, default=75_000.0, help="upper edge of the analysis band (Hz)")
    p.add_argument("--neurons", type=int, default=64, help="number of neurons / frequency bands")
    p.add_argument("--threshold", type=float, default=0.5,
                   help="peak threshold as a fraction of the in-band maximum power")
    p.add_argument("--silence-floor", type=float, default=1e-6,
                   help="absolute in-band power below which a fragment is Silence")
    p.add_argument("--fft-length", type=int, default=0, help="fixed FFT length; 0 = adaptive")
    p.add_argument("--fft-cap", type=int, default=DEFAULT_FFT_CAP, help="largest adaptive FFT length")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="echomem", description="Hopfield associative-memory classifier for audio fragments",
                     formatter_class=_FMT)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}",
                        help="show version and exit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, help_):
        p = sub.add_parser(name, help=help_, description=help_, formatter_class=_FMT)
        p.add_argument("--config", default=None, help="key=value file supplying defaults for this command")
        return p

    p = add("train", "train a model from one exemplar recording per class")
    p.add_argument("--exemplar", action="append", type=_exemplar, default=None,
                   help="LABEL=PATH of a class exemplar (repeat per class; required)")
    p.add_argument("--out", default=None, help="model file to write (required)")
    _add_encoding_flags(p)
    p.add_argument("--max-iterations", type=int, default=100, help="cap on network updates per fragment")
    p.add_argument("--band-reject-49-51", action="store_true", default=False,
                   help="store the 49-51 kHz F_maxE filter as the model default")

    p = add("classify", "classify a WAV file or a directory of WAV files")
    p.add_argument("--model", default=None, help="model file (required)")
    p.add_argument("--input", default=None, help="WAV file or directory, searched recursively (required)")
    p.add_argument("--out", default="-", help="CSV output path, '-' for stdout")
    p.add_argument("--band-reject-49-51", action="store_true", default=False,
                   help="label fragments with F_maxE in [49, 51] kHz as Filtered")
    p.add_argument("--trace-dir", default=None, help="write one convergence trace CSV per fragment here")
    p.add_argument("--jobs", type=int, default=default_jobs(), help="worker processes")

    p = add("evaluate", "score predictions against ground truth")
    p.add_argument("--pred", default=None, help="predictions CSV with source_id,label (required)")
    p.add_argument("--truth", default=None, help="truth CSV with source_id,label (required)")
    p.add_argument("--out-report", default=None, help="plain-text report path")
    p.add_argument("--out-cm", default=None, help="confusion matrix CSV path")
    p.add_argument("--out-report-csv", default=None, help="machine-readable report CSV path")
    p.add_argument("--classes", default=None, help="comma-separated class order (default: sorted)")

    p = add("trace", "show the network iterations for one fragment")
    p.add_argument("--model", default=None, help="model file (required)")
    p.add_argument("--input", default=None, help="WAV file (required)")
    p.add_argument("--format", choices=("text", "csv"), default="text", help="output format")
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    p.add_argument("--band-reject-49-51", action="store_true", default=False,
                   help="apply the 49-51 kHz F_maxE filter")

    p = add("spectrum", "export the power spectrum of one fragment as CSV")
    p.add_argument("--input", default=None, help="WAV file (required)")
    p.add_argument("--out", default="-", help="CSV output path, '-' for stdout")
    p.add_argument("--fft-length", type=int, default=0, help="fixed FFT length; 0 = adaptive")
    p.add_argument("--fft-cap", type=int, default=DEFAULT_FFT_CAP, help="largest adaptive FFT length")

    p = add("bench", "time training and classification, and record peak memory")
    p.add_argument("--model", default=None, help="model file (required)")
    p.add_argument("--input", default=None, help="WAV file or directory (required)")
    p.add_argument("--runs", type=int, default=5, help="repetitions to average over")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--exemplar", action="append", type=_exemplar, default=None,
                   help="LABEL=PATH; when given, training time includes spectra and encoding")

    p = add("synth", "write a synthetic two-class dataset with silences")
    p.add_argument("--out", default=None, help="output directory (required)")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--n-a", type=int, default=4916, help="fragments of class A (46 kHz calls)")
    p.add_argument("--n-b", type=int, default=5064, help="fragments of class B (55 kHz calls)")
    p.add_argument("--n-silence", type=int, default=404, help="silent fragments")
    p.add_argument("--snr-db", type=float, default=20.0, help="call-to-noise ratio")
    return parser


REQUIRED = {
    "train": ("exemplar", "out"),
    "classify": ("model", "input"),
    "evaluate": ("pred", "truth"),
    "trace": ("model", "input"),
    "spectrum": ("input",),
    "bench": ("model", "input"),
    "synth": ("out",),
}


def _subparser(parser, name):
    for action in parser._subparsers._group_actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def _config_defaults(sub: argparse.ArgumentParser, path: str) -> dict:
    """Read a key=value file into typed defaults for ``sub``."""
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            dest = key.strip().lstrip("-").replace("-", "_")
            if dest not in actions:
                raise UsageError(f"{path}:{lineno}: unknown option {key.strip()!r}")
            action = actions[dest]
            value = value.strip()
            try:
                if isinstance(action, argparse._StoreTrueAction):
                    out[dest] = _parse_bool(value)
                elif isinstance(action, argparse._AppendAction):
                    conv = action.type or str
                    out[dest] = [conv(v.strip()) for v in value.split(",") if v.strip()]
                else:
                    out[dest] = (action.type or str)(value)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"{path}:{lineno}: {exc}") from exc
            if action.choices is not None and out[dest] not in action.choices:
                raise UsageError(f"{path}:{lineno}: {value!r} not one of {sorted(action.choices)}")
    return out


def _explicit_dests(sub: argparse.ArgumentParser, argv) -> set:
    by_flag = {opt: a.dest for a in sub._actions for opt in a.option_strings}
    given = set()
    for tok in argv:
        flag = tok.split("=", 1)[0]
        if flag in by_flag:
            given.add(by_flag[flag])
    return given


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError("a subcommand is required (see --help)")
    if args.config:
        sub = _subparser(parser, args.command)
        given = _explicit_dests(sub, argv)
        for dest, value in _config_defaults(sub, args.config).items():
            if dest not in given:
                setattr(args, dest, value)
    missing = [f"--{d.replace('_', '-')}" for d in REQUIRED[args.command] if getattr(args, d) in (None, [])]
    if missing:
        raise UsageError(f"echomem {args.command}: missing required option(s) {', '.join(missing)}")
    return args


def _open_out(path: str):
    if path == "-":
        return _StdoutCtx()
    return open(path, "w", newline="", encoding="utf-8")


class _StdoutCtx:
    def __enter__(self):
        return sys.stdout

    def __exit__(self, *exc):
        sys.stdout.flush()


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def collect_inputs(path: str) -> list:
    """(source_id, Path) pairs; directories are walked and sorted for stable order."""
    p = Path(path)
    if p.is_dir():
        files = [f for f in p.rglob("*") if f.is_file() and f.suffix.lower() == ".wav"]
        pairs = [(f.relative_to(p).as_posix(), f) for f in files]
        return sorted(pairs, key=lambda t: t[0])
    if p.is_file():
        return [(p.name, p)]
    raise FileNotFoundError(f"no such file or directory: {path}")


def _band_reject(args):
    return True if args.band_reject_49_51 else None


def _fmt_overlap(r) -> str:
    return "" if r.overlap is None else f"{r.overlap:.6f}"


def _trace_rows(trace):
    rows = [["iteration", "energy", "state"]]
    for i, (s, e) in enumerate(zip(trace.states, trace.energies)):
        rows.append([str(i), f"{e:.6f}", format_state(s)])
    return rows


def cmd_train(args) -> int:
    cfg = EncodingConfig(
        band_lo=args.band_lo,
        band_hi=args.band_hi,
        n_neurons=args.neurons,
        activation_threshold=args.threshold,
        silence_power_floor=args.silence_floor,
        fft_length=args.fft_length or None,
        fft_cap=args.fft_cap,
    )
    dyn = DynamicsConfig(max_iterations=args.max_iterations)
    exemplars = [(label, load_wav(path)) for label, path in args.exemplar]
    model = train(exemplars, cfg, dyn, band_reject=args.band_reject_49_51)
    write_model_file(model, args.out)
    print(f"stored {model.n_patterns} pattern(s) on {model.n_neurons} neurons: "
          f"{', '.join(model.class_labels)} -> {args.out}")
    for label, x in zip(model.class_labels, model.stored_patterns):
        print(f"  {label:<10} {format_state(x)}")
    return EXIT_OK


def cmd_classify(args) -> int:
    model = read_model_file(args.model)
    inputs = collect_inputs(args.input)
    want_trace = args.trace_dir is not None
    batch = classify_batch(model, inputs, jobs=args.jobs, want_trace=want_trace,
                           band_reject=_band_reject(args))
    with _open_out(args.out) as fh:
        w = _writer(fh)
        w.writerow(["source_id", "label", "iterations", "overlap"])
        for r in batch.results:
            w.writerow([r.source_id, r.label, r.iterations, _fmt_overlap(r)])
    if want_trace:
        tdir = Path(args.trace_dir)
        tdir.mkdir(parents=True, exist_ok=True)
        for r in batch.results:
            if r.trace is not None:
                name = r.source_id.replace("/", "__") + ".trace.csv"
                with open(tdir / name, "w", newline="", encoding="utf-8") as fh:
                    _writer(fh).writerows(_trace_rows(r.trace))
    summary = ", ".join(f"{k}={v}" for k, v in sorted(batch.counts.items()))
    print(f"{len(batch)} fragment(s): {summary}", file=sys.stderr)
    errors = [r for r in batch.results if r.label == ERROR]
    for r in errors:
        print(f"error: {r.source_id}: {r.error}", file=sys.stderr)
    return EXIT_DATA if errors else EXIT_OK


def _read_labels(path: str) -> dict:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"source_id", "label"} <= set(reader.fieldnames):
            raise EchomemError(f"{path}: expected columns source_id,label")
        out = {}
        for row in reader:
            if row["source_id"] in out:
                raise EchomemError(f"{path}: duplicate source_id {row['source_id']!r}")
            out[row["source_id"]] = row["label"]
    return out


def cmd_evaluate(args) -> int:
    pred = _read_labels(args.pred)
    truth = _read_labels(args.truth)
    classes = [c.strip() for c in args.classes.split(",")] if args.classes else None
    cm = score(list(pred.items()), truth, classes)
    rep = report(cm)
    text = format_report(rep)
    sys.stdout.write(text)
    if args.out_report:
        Path(args.out_report).write_text(text, encoding="utf-8")
    if args.out_cm:
        with open(args.out_cm, "w", newline="", encoding="utf-8") as fh:
            _writer(fh).writerows(confusion_rows(cm))
    if args.out_report_csv:
        with open(args.out_report_csv, "w", newline="", encoding="utf-8") as fh:
            _writer(fh).writerows(report_rows(rep))
    return EXIT_OK


def cmd_trace(args) -> int:
    model = read_model_file(args.model)
    w = load_wav(args.input)
    r = classify(model, w, want_trace=True, band_reject=_band_reject(args))
    with _open_out(args.out) as fh:
        if args.format == "csv":
            if r.trace is None:
                _writer(fh).writerows([["iteration", "energy", "state"]])
            else:
                _writer(fh).writerows(_trace_rows(r.trace))
            return EXIT_OK
        fh.write(f"source:   {r.source_id}\n")
        fh.write(f"F_maxE:   {r.f_max_e:.1f} Hz\n")
        if r.trace is None:
            fh.write(f"label:    {r.label} (network not run)\n")
            return EXIT_OK
        m = r.match
        target = "" if m.index is None else f" of {model.class_labels[m.index]}"
        fh.write(f"label:    {r.label} ({m.kind.value}{target}, overlap {m.overlap:.3f}, "
                 f"{'converged' if r.converged else 'not converged'})\n")
        for label, x in zip(model.class_labels, model.stored_patterns):
            fh.write(f"stored {label:<10} {format_state(x)}\n")
        fh.write(f"{'iter':>4}  {'energy':>12}  state\n")
        for i, (s, e) in enumerate(zip(r.trace.states, r.trace.energies)):
            fh.write(f"{i:>4}  {e:>12.6f}  {format_state(s)}\n")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    w = load_wav(args.input)
    # the band only steers peak picking, which this export does not use
    cfg = EncodingConfig(band_lo=1.0, band_hi=w.sample_rate / 2,
                         fft_length=args.fft_length or None, fft_cap=args.fft_cap)
    s = compute_spectrum(w, cfg)
    with _open_out(args.out) as fh:
        wr = _writer(fh)
        wr.writerow(["freq_hz", "power"])
        for f, pw in zip(s.bin_freqs, s.power):
            wr.writerow([f"{f:.6f}", f"{pw:.12e}"])
    return EXIT_OK


def cmd_bench(args) -> int:
    model = read_model_file(args.model)
    inputs = collect_inputs(args.input)
    exemplars = [(label, load_wav(path)) for label, path in args.exemplar] if args.exemplar else None
    b = benchmark(model, inputs, runs=args.runs, jobs=args.jobs, exemplars=exemplars)
    sys.stdout.write(format_benchmark(b))
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synth import SyntheticSpec, exemplar_waveforms, write_dataset
    from .wav import write_wav

    spec = SyntheticSpec(n_a=args.n_a, n_b=args.n_b, n_silence=args.n_silence, snr_db=args.snr_db)
    out = Path(args.out)
    frags = write_dataset(out / "fragments", spec, args.seed, truth_name=None)
    with open(out / "truth.csv", "w", newline="", encoding="utf-8") as fh:
        wr = _writer(fh)
        wr.writerow(["source_id", "label"])
        wr.writerows((f.source_id, f.truth) for f in frags)
    (out / "exemplars").mkdir(parents=True, exist_ok=True)
    for label, w in exemplar_waveforms(spec):
        (out / "exemplars" / f"{label}.wav").write_bytes(write_wav(w.samples, w.sample_rate))
    print(f"wrote {len(frags)} fragments to {out / 'fragments'}")
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "classify": cmd_classify,
    "evaluate": cmd_evaluate,
    "trace": cmd_trace,
    "spectrum": cmd_spectrum,
    "bench": cmd_bench,
    "synth": cmd_synth,
}


def run(argv=None) -> int:
    try:
        args = parse_args(sys.argv[1:] if argv is None else list(argv))
        return COMMANDS[args.command](args)
    except SystemExit as exc:  # --help / --version
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (EchomemError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(run())
