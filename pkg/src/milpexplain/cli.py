"""Command-line surface.

Subcommands: validate, bounds, encode, explain, verify, bench. Exit codes:
0 success, 1 verification failure, 2 input/schema error, 3 I/O error,
4 solver inconclusive. All structured outputs are JSON and carry the model
file's content hash so reports stay bound to the model they came from.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import encoding as enc_mod
from . import explain as explain_mod
from .errors import InconclusiveError, SolverError, TieMarginError, ValidationError
from .model import Ann, load_model, make_instance, model_hash, parse_dataset, predict

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_INPUT = 2
EXIT_IO = 3
EXIT_INCONCLUSIVE = 4

SEED_ENV = "MILPEXPLAIN_SEED"


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


class _Unreadable(Exception):
    pass


def _read_model(path: str) -> tuple[Ann, str, str]:
    text = _read_text(path)
    try:
        json.loads(text)
    except json.JSONDecodeError as exc:
        raise _Unreadable(f"{path}: not a readable model document ({exc})") from exc
    ann = load_model(text)  # schema violations surface as ValidationError
    return ann, text, model_hash(text)


def _resolve_order(spec: str, n: int) -> list[int]:
    if spec == "natural":
        return list(range(n))
    if spec == "reverse":
        return list(range(n - 1, -1, -1))
    if spec == "seed" or spec.startswith("seed:"):
        if ":" in spec:
            seed = int(spec.split(":", 1)[1])
        else:
            seed = int(os.environ.get(SEED_ENV, "0"))
        rng = np.random.default_rng(seed)
        return [int(i) for i in rng.permutation(n)]
    raise ValidationError(f"unknown order {spec!r} (use natural, reverse, or seed[:N])")


# -- validate -----------------------------------------------------------------


def cmd_validate(args) -> int:
    ann, _, sha = _read_model(args.model)
    sizes = " -> ".join(str(s) for s in ann.layer_sizes())
    print(f"model: {ann.name}")
    print(f"layers: {sizes}")
    kinds = ", ".join(f"{f.name}:{f.kind}[{f.lower:g},{f.upper:g}]" for f in ann.features)
    print(f"features: {kinds}")
    print(f"classes: {', '.join(ann.classes)}")
    print(f"sha256: {sha}")
    return EXIT_OK


# -- bounds ---------------------------------------------------------------------


def _print_bounds(bounds: enc_mod.NetworkBounds) -> None:
    for l, row in enumerate(bounds.hidden, start=1):
        lo = min(nb.pre_lb for nb in row)
        hi = max(nb.pre_ub for nb in row)
        print(f"hidden layer {l}: {len(row)} neurons, pre-activation range [{lo:g}, {hi:g}]")
    for j, ob in enumerate(bounds.outputs):
        print(f"output {j}: [{ob.lb:g}, {ob.ub:g}]")
    print(f"tighten seconds: {bounds.tighten_seconds:.6f}")


def cmd_bounds(args) -> int:
    ann, _, sha = _read_model(args.model)
    if os.path.exists(args.out):
        bounds, doc = enc_mod.load_bounds(_read_text(args.out))
        if doc.get("model_sha256") == sha and doc.get("encoding") == args.encoding:
            print(f"reusing cache {args.out}")
            _print_bounds(bounds)
            return EXIT_OK
    bounds = enc_mod.tighten_bounds(ann, args.encoding)
    _write_text(args.out, enc_mod.dump_bounds(bounds, ann.name, sha, args.encoding))
    _print_bounds(bounds)
    print(f"wrote {args.out}")
    return EXIT_OK


# -- encode ----------------------------------------------------------------------


def cmd_encode(args) -> int:
    ann, _, sha = _read_model(args.model)
    if args.negate and args.dataset is None:
        raise ValidationError("--negate needs --dataset/--instance-index to know the prediction")
    instance = None
    if args.dataset is not None:
        instances = parse_dataset(_read_text(args.dataset), ann)
        if not 0 <= args.instance_index < len(instances):
            raise ValidationError(
                f"instance index {args.instance_index} out of range (dataset has {len(instances)})"
            )
        instance = instances[args.instance_index]
    enc = enc_mod.build_encoding(ann, args.encoding)
    if args.negate:
        enc_mod.attach_negation(enc, predict(ann, instance))
        stats = enc_mod.count_stats(enc)
        print(f"counts: reals={stats.reals} binaries={stats.binaries} constraints={stats.constraints}")
    else:
        n_vars = len(enc.model.variables)
        print(f"counts: variables={n_vars} constraints={len(enc.model.constraints)}")
    if instance is not None:
        for k, vid in enumerate(enc.input_ids):
            v = float(instance.values[k])
            enc.model.set_bounds(vid, v, v)
    _write_text(args.out, enc.model.export_lp())
    print(f"wrote {args.out}")
    return EXIT_OK


# -- explain -----------------------------------------------------------------------


def _encoding_for_class(ann: Ann, kind: str, bounds, cache: dict):
    def get(target: int):
        if target not in cache:
            enc = enc_mod.build_encoding(ann, kind, bounds)
            enc_mod.attach_negation(enc, target)
            cache[target] = enc
        return cache[target]

    return get


def _explain_one(ann, enc_for_class, instance, order):
    target = predict(ann, instance)
    enc = enc_for_class(target)
    return explain_mod.minimal_explanation(enc, instance, order)


def _entry_from_explanation(ann: Ann, index: int, ex: explain_mod.Explanation) -> dict:
    return {
        "index": index,
        "status": "explained",
        "predicted_index": ex.predicted_class,
        "predicted_class": ann.classes[ex.predicted_class],
        "kept": [{"feature": ann.features[i].name, "value": v} for i, v in ex.kept],
        "dropped": [ann.features[i].name for i in ex.dropped],
        "checks": [
            {"feature": ann.features[c.feature].name, "entailed": c.entailed, "seconds": c.seconds}
            for c in ex.checks
        ],
        "total_seconds": ex.total_seconds,
    }


_WORKER_STATE: dict = {}


def _worker_explain(payload):
    """Runs in a pool worker; builds one encoding per (class) lazily and keeps
    it for the life of the process."""
    index, model_text, kind, order, values = payload
    key = (model_text, kind)
    if _WORKER_STATE.get("key") != key:
        ann = load_model(model_text)
        bounds = enc_mod.tighten_bounds(ann, kind)
        _WORKER_STATE.update(key=key, ann=ann, bounds=bounds, cache={})
    ann = _WORKER_STATE["ann"]
    enc_for_class = _encoding_for_class(ann, kind, _WORKER_STATE["bounds"], _WORKER_STATE["cache"])
    instance = make_instance(ann.features, values)
    try:
        ex = _explain_one(ann, enc_for_class, instance, order)
        return index, _entry_from_explanation(ann, index, ex)
    except TieMarginError as exc:
        return index, {"index": index, "status": "rejected", "reason": str(exc)}


def _explain_dataset(ann, model_text, kind, instances, order, jobs):
    entries = []
    if jobs <= 1:
        bounds = enc_mod.tighten_bounds(ann, kind)
        enc_for_class = _encoding_for_class(ann, kind, bounds, {})
        for idx, inst in enumerate(instances):
            try:
                ex = _explain_one(ann, enc_for_class, inst, order)
                entries.append(_entry_from_explanation(ann, idx, ex))
            except TieMarginError as exc:
                entries.append({"index": idx, "status": "rejected", "reason": str(exc)})
        return entries
    payloads = [
        (idx, model_text, kind, order, [float(v) for v in inst.values])
        for idx, inst in enumerate(instances)
    ]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for _, entry in pool.map(_worker_explain, payloads):
            entries.append(entry)
    return entries


def cmd_explain(args) -> int:
    ann, model_text, sha = _read_model(args.model)
    instances = parse_dataset(_read_text(args.dataset), ann)
    if args.index:
        for k in args.index:
            if not 0 <= k < len(instances):
                raise ValidationError(f"instance index {k} out of range")
        pick = sorted(set(args.index))
        instances = [instances[k] for k in pick]
    if not instances:
        raise ValidationError("dataset holds no instances")
    order = _resolve_order(args.order, ann.n_inputs)
    entries = _explain_dataset(ann, model_text, args.encoding, instances, order, args.jobs)
    times = [e["total_seconds"] for e in entries if e["status"] == "explained"]
    doc = {
        "model_name": ann.name,
        "model_sha256": sha,
        "encoding": args.encoding,
        "order": args.order,
        "feature_names": [f.name for f in ann.features],
        "classes": list(ann.classes),
        "entries": entries,
        "explain_seconds_mean": float(np.mean(times)) if times else 0.0,
        "explain_seconds_std": float(np.std(times)) if times else 0.0,
    }
    _write_text(args.out, json.dumps(doc, indent=2) + "\n")
    rejected = sum(1 for e in entries if e["status"] == "rejected")
    print(
        f"explained {len(times)}/{len(entries)} instances"
        + (f" ({rejected} rejected)" if rejected else "")
    )
    if times:
        print(f"explanation time: {np.mean(times):.4f} s ± {np.std(times):.4f} s")
    print(f"wrote {args.out}")
    return EXIT_OK


# -- verify -----------------------------------------------------------------------


def _explanation_from_entry(ann: Ann, entry: dict) -> explain_mod.Explanation:
    name_to_idx = {f.name: i for i, f in enumerate(ann.features)}
    try:
        kept = [(name_to_idx[k["feature"]], float(k["value"])) for k in entry["kept"]]
        dropped = [name_to_idx[name] for name in entry["dropped"]]
        predicted = int(entry["predicted_index"])
    except KeyError as exc:
        raise ValidationError(f"report entry references unknown feature {exc.args[0]!r}") from exc
    return explain_mod.Explanation(
        kept=kept,
        dropped=sorted(dropped),
        predicted_class=predicted,
        checks=[],
        total_seconds=float(entry.get("total_seconds", 0.0)),
        encoding=entry.get("encoding", ""),
        order=[],
    )


def cmd_verify(args) -> int:
    ann, _, sha = _read_model(args.model)
    instances = parse_dataset(_read_text(args.dataset), ann)
    try:
        report = json.loads(_read_text(args.report))
    except json.JSONDecodeError as exc:
        raise _Unreadable(f"{args.report}: not a readable report ({exc})") from exc
    if report.get("model_sha256") != sha:
        print("report was produced for a different model file (hash mismatch)")
        return EXIT_INPUT
    failures = []
    checked = 0
    for entry in report.get("entries", []):
        if entry.get("status") != "explained":
            continue
        idx = int(entry["index"])
        if not 0 <= idx < len(instances):
            raise ValidationError(f"report entry index {idx} out of dataset range")
        ex = _explanation_from_entry(ann, entry)
        outcome = explain_mod.verify_explanation(ann, args.encoding, instances[idx], ex)
        checked += 1
        if not outcome.ok:
            what = []
            if not outcome.sufficiency_ok:
                what.append("sufficiency")
            for name in outcome.minimality_failures:
                what.append(f"minimality:{name}")
            for name in outcome.counterexample_failures:
                what.append(f"counterexample:{name}")
            what.extend(outcome.messages)
            failures.append(f"instance {idx}: {'; '.join(what)}")
    for line in failures:
        print(f"FAIL {line}")
    print(f"verified {checked - len(failures)}/{checked} explanations")
    return EXIT_VERIFY if failures else EXIT_OK


# -- bench -------------------------------------------------------------------------


def _bench_encoding(ann, model_text, kind, instances, rebuilds, order, jobs):
    builds = []
    bounds = None
    for _ in range(rebuilds):
        bounds = enc_mod.tighten_bounds(ann, kind)
        enc = enc_mod.build_encoding(ann, kind, bounds)
        builds.append(enc.total_build_seconds)
    entries = _explain_dataset(ann, model_text, kind, instances, order, jobs)
    bad = [e for e in entries if e["status"] != "explained"]
    if bad:
        raise TieMarginError(f"instance {bad[0]['index']} failed: {bad[0].get('reason', '')}")
    times = [e["total_seconds"] for e in entries]
    return {
        "build_seconds_mean": float(np.mean(builds)),
        "build_seconds_std": float(np.std(builds)),
        "explain_seconds_mean": float(np.mean(times)),
        "explain_seconds_std": float(np.std(times)),
        "overall_seconds": float(np.mean(builds) + np.sum(times)),
        "build_seconds": [float(b) for b in builds],
        "explain_seconds": [float(t) for t in times],
    }, entries


def cmd_bench(args) -> int:
    ann, model_text, sha = _read_model(args.model)
    instances = parse_dataset(_read_text(args.dataset), ann)
    if not instances:
        raise ValidationError("dataset holds no instances")
    order = list(range(ann.n_inputs))
    arch = "-".join(str(s) for s in ann.layer_sizes())
    doc = {
        "model_name": ann.name,
        "model_sha256": sha,
        "architecture": arch,
        "dataset": os.path.basename(args.dataset),
        "instances": len(instances),
        "rebuilds": args.rebuilds,
        "encodings": {},
        "partial": False,
    }
    kept_sets = {}
    try:
        for kind in (enc_mod.INDICATOR, enc_mod.BIG_M):
            stats, entries = _bench_encoding(
                ann, model_text, kind, instances, args.rebuilds, order, args.jobs
            )
            doc["encodings"][kind] = stats
            kept_sets[kind] = [tuple(k["feature"] for k in e["kept"]) for e in entries]
    except (TieMarginError, InconclusiveError, ValidationError, SolverError) as exc:
        doc["partial"] = True
        doc["error"] = str(exc)
        if args.out:
            _write_text(args.out, json.dumps(doc, indent=2) + "\n")
        print(f"bench aborted: {exc}")
        raise

    if kept_sets[enc_mod.INDICATOR] != kept_sets[enc_mod.BIG_M]:
        print("encodings disagree on kept sets; timings withheld")
        return EXIT_VERIFY

    ind = doc["encodings"][enc_mod.INDICATOR]
    big = doc["encodings"][enc_mod.BIG_M]
    doc["build_delta_pct"] = _pct(ind["build_seconds_mean"], big["build_seconds_mean"])
    doc["overall_delta_pct"] = _pct(ind["overall_seconds"], big["overall_seconds"])

    header = f"{'encoding':<12}{'Exp (s)':<22}{'Build (s)':<22}{'Overall (s)':<12}"
    print(header)
    for kind in (enc_mod.INDICATOR, enc_mod.BIG_M):
        s = doc["encodings"][kind]
        exp = f"{s['explain_seconds_mean']:.4f} ± {s['explain_seconds_std']:.4f}"
        build = f"{s['build_seconds_mean']:.4f} ± {s['build_seconds_std']:.4f}"
        print(f"{kind:<12}{exp:<22}{build:<22}{s['overall_seconds']:<12.4f}")
    print(
        f"build time delta (indicator -> bigm): {doc['build_delta_pct']:+.1f}%   "
        f"overall delta: {doc['overall_delta_pct']:+.1f}%"
    )
    if args.out:
        _write_text(args.out, json.dumps(doc, indent=2) + "\n")
        print(f"wrote {args.out}")
    return EXIT_OK


def _pct(base: float, other: float) -> float:
    return 0.0 if base == 0 else (base - other) / base * 100.0


# -- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="milpexplain",
        description=(
            "Minimal correct explanations for ReLU classifiers via MILP. "
            "Reported standard deviations are population (divide by n)."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model file against the schema")
    p.add_argument("model")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bounds", help="tighten per-neuron bounds and cache them")
    p.add_argument("model")
    p.add_argument("--encoding", choices=(enc_mod.INDICATOR, enc_mod.BIG_M), required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("encode", help="export the encoding as an LP file")
    p.add_argument("model")
    p.add_argument("--encoding", choices=(enc_mod.INDICATOR, enc_mod.BIG_M), required=True)
    p.add_argument("--dataset")
    p.add_argument("--instance-index", type=int, default=0)
    p.add_argument("--negate", action="store_true", help="attach the negated prediction")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("explain", help="explain every instance of a dataset")
    p.add_argument("model")
    p.add_argument("dataset")
    p.add_argument("--encoding", choices=(enc_mod.INDICATOR, enc_mod.BIG_M), required=True)
    p.add_argument(
        "--order",
        default="natural",
        help=f"natural, reverse, or seed[:N] (seed default from ${SEED_ENV})",
    )
    p.add_argument("--index", type=int, action="append", help="restrict to these instances")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("verify", help="independently re-check an explanation report")
    p.add_argument("model")
    p.add_argument("dataset")
    p.add_argument("report")
    p.add_argument("--encoding", choices=(enc_mod.INDICATOR, enc_mod.BIG_M), required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="rebuild/explain timing comparison of the encodings")
    p.add_argument("model")
    p.add_argument("dataset")
    p.add_argument("--rebuilds", type=int, default=10)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="bench_report.json")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Unreadable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValidationError, TieMarginError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InconclusiveError, SolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE


if __name__ == "__main__":
    sys.exit(main())
