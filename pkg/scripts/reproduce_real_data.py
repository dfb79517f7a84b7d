"""Score the classifier on the public bat-call recordings (not run in CI).

Usage::

    python3 scripts/reproduce_real_data.py \
        --fragments DATA/fragments --truth DATA/truth.csv \
        --exemplar PIPI=DATA/pipi_exemplar.wav --exemplar PIPY=DATA/pipy_exemplar.wav

``--truth`` is a ``source_id,label`` CSV whose ids are paths relative to
``--fragments`` (forward slashes), labelled PIPI, PIPY or Silence. Both
models are run; the last stdout line is ``model 2 accuracy X``.
"""

import argparse
import csv
import sys
from pathlib import Path

from echomem import evaluation, pipeline
from echomem.cli import collect_inputs
from echomem.wav import load_wav


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--fragments", required=True, help="directory of WAV fragments")
    ap.add_argument("--truth", required=True, help="source_id,label CSV")
    ap.add_argument("--exemplar", action="append", required=True, help="LABEL=PATH, one per class")
    ap.add_argument("--jobs", type=int, default=pipeline.default_jobs())
    args = ap.parse_args(argv)

    exemplars = []
    for item in args.exemplar:
        label, _, path = item.partition("=")
        exemplars.append((label, load_wav(path)))
    with open(args.truth, newline="", encoding="utf-8") as fh:
        truth = {row["source_id"]: row["label"] for row in csv.DictReader(fh)}
    inputs = [(sid, p) for sid, p in collect_inputs(args.fragments) if sid in truth]
    if not inputs:
        print("no fragments matched the truth file", file=sys.stderr)
        return 1

    classes = tuple(label for label, _ in exemplars)
    model = pipeline.train(exemplars)
    accuracy = {}
    for name, reject in (("model 1", False), ("model 2", True)):
        batch = pipeline.classify_batch(model, inputs, jobs=args.jobs, band_reject=reject)
        rep = evaluation.report(evaluation.score(batch.results, truth, classes))
        print(evaluation.format_report(rep, title=f"{name} ({len(inputs)} fragments)"))
        accuracy[name] = rep.accuracy
    print(f"model 1 accuracy {accuracy['model 1']:.4f}")
    print(f"model 2 accuracy {accuracy['model 2']:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
