"""Command-line interface.

Exit codes: 0 success, 1 some subjects failed (partial output written),
2 invalid input.
"""

import argparse
import csv
import json
import logging
import sys
import warnings
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from .classify import CLASSIFIERS, cross_validate, make_classifier
from .classify.forest import RandomForest
from .exceptions import StriatalShapeError
from .features import (FEATURE_NAMES, IMAGE_FEATURES, SBR_FEATURES, as_mean_image, extract_features,
                       feature_number, sbr_features)
from .phantom import GROUPS, calibrate_defaults, generate_cohort, synthetic_sbr
from .preprocess import SliceWindow, slice_area_profile
from .segmentation import auto_threshold
from .shape import SHAPE_FEATURES
from .stats import group_summary, screen_features
from .surface import SURFACE_FEATURES
from .table import (FeatureTable, config_hash, provenance, read_feature_table, write_feature_table,
                    write_json)
from .volume_io import (CohortManifest, ManifestEntry, Volume, load_manifest, load_sbr_table,
                        read_volume, write_manifest, write_raw, write_sbr_table)

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("striatal_shape")

EXIT_OK, EXIT_PARTIAL, EXIT_INVALID = 0, 1, 2


class InvalidInput(Exception):
    pass


# ---------------------------------------------------------------- helpers

def _load_config(path):
    path = Path(path)
    if not path.exists():
        raise InvalidInput(f"config file {path} not found")
    text = path.read_text()
    try:
        if path.suffix.lower() == ".toml":
            return tomllib.loads(text)
        return json.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise InvalidInput(f"cannot parse config {path}: {exc}") from exc


def _resolve_seed(seed):
    if seed is None:
        return int(np.random.SeedSequence().entropy % (2 ** 63))
    return int(seed)


def _run_config(args, drop=("config", "func", "jobs", "output", "command")):
    return {k: v for k, v in sorted(vars(args).items()) if k not in drop}


def _threshold_mode(args):
    return args.threshold if args.threshold is not None else "auto"


def _window(args):
    return SliceWindow.parse(args.slices) if args.slices else SliceWindow()


# ---------------------------------------------------------------- extract

def _extract_one(entry, threshold, window, opts):
    t = entry.threshold_override if entry.threshold_override is not None else threshold
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            vol = read_volume(entry.path)
            res = extract_features(vol, t, window=window, **opts)
        notes = res.warnings + [str(w.message) for w in caught]
        return {"ok": True, "subject_id": entry.subject_id, "label": entry.label,
                "values": res.vector(), "threshold": res.threshold,
                "threshold_source": "manifest" if entry.threshold_override is not None else
                ("auto" if t == "auto" else "fixed"),
                "warnings": sorted(set(notes))}
    except (StriatalShapeError, OSError) as exc:
        return {"ok": False, "subject_id": entry.subject_id,
                "error": f"{type(exc).__name__}: {exc}"}


def cmd_extract(args):
    manifest = load_manifest(args.manifest)
    window = _window(args)
    opts = dict(combine_mode=args.combine, absolute_ai=args.absolute_ai,
                radiological=args.radiological, perimeter=args.perimeter)
    sbr = None
    if args.sbr:
        sbr = {r.subject_id: r for r in load_sbr_table(args.sbr)}

    results = Parallel(n_jobs=args.jobs)(
        delayed(_extract_one)(e, _threshold_mode(args), window, opts) for e in manifest
    )
    ids, labels, rows, subjects, failures = [], [], [], [], []
    for r in results:
        if not r["ok"]:
            failures.append({"subject_id": r["subject_id"], "error": r["error"]})
            continue
        vec = r["values"]
        if sbr is not None:
            rec = sbr.get(r["subject_id"])
            if rec is None:
                failures.append({"subject_id": r["subject_id"], "error": "no SBR record"})
                continue
            try:
                s = sbr_features(rec)
            except StriatalShapeError as exc:
                failures.append({"subject_id": r["subject_id"],
                                 "error": f"{type(exc).__name__}: {exc}"})
                continue
            vec = np.concatenate([vec, [s[k] for k in SBR_FEATURES]])
        ids.append(r["subject_id"])
        labels.append(r["label"])
        rows.append(vec)
        subjects.append({k: r[k] for k in ("subject_id", "threshold", "threshold_source",
                                           "warnings")})

    columns = list(FEATURE_NAMES if sbr is not None else IMAGE_FEATURES)
    table = FeatureTable(ids, labels, np.array(rows).reshape(len(ids), len(columns)), columns)
    out = Path(args.output)
    write_feature_table(table, out)
    config = _run_config(args)
    config["slices"] = f"{window.first}:{window.last}"
    write_json(provenance(config, subjects, failures), out.with_name(out.name + ".provenance.json"))
    if failures:
        with open(out.with_name(out.name + ".failures.csv"), "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["subject_id", "error"], lineterminator="\n")
            w.writeheader()
            w.writerows(failures)
        for f in failures:
            log.warning("subject %s failed: %s", f["subject_id"], f["error"])
        return EXIT_PARTIAL
    return EXIT_OK


# ---------------------------------------------------------------- stats

def cmd_stats(args):
    table = read_feature_table(args.table)
    summary = group_summary(table.values, np.array(table.labels), table.columns)
    screen = screen_features(summary, args.alpha)
    prefix = Path(args.output)
    (prefix.parent / (prefix.name + ".summary.csv")).write_text(summary.to_csv())
    (prefix.parent / (prefix.name + ".summary.json")).write_text(summary.to_json() + "\n")
    write_json(screen.to_dict(), prefix.parent / (prefix.name + ".screen.json"))
    return EXIT_OK


# ---------------------------------------------------------------- cv

def _feature_columns(table, args):
    if args.with_sbr and not table.has_sbr:
        raise InvalidInput("--with-sbr requested but the table has no SBR columns")
    names = [c for c in table.columns if args.with_sbr or c in IMAGE_FEATURES]
    if not names:
        raise InvalidInput("the table has no image feature columns")
    if args.no_screen:
        return names
    summary = group_summary(table.select(names), np.array(table.labels), names)
    kept = screen_features(summary, args.alpha).kept_names
    if not kept:
        raise InvalidInput("no feature passed screening")
    return kept


def _classifier_params(name, args):
    if name == "svm":
        return {"C": args.C, "gamma": args.gamma}
    if name == "forest":
        return {"n_trees": args.trees or 65}
    if name == "boost":
        return {"n_rounds": args.trees or 70}
    return {}


def cmd_cv(args):
    if args.k < 2 or args.repeats < 1:
        raise InvalidInput("need --k >= 2 and --repeats >= 1")
    table = read_feature_table(args.table)
    names = _feature_columns(table, args)
    X = table.select(names)
    y = table.deficit_labels()
    seed = _resolve_seed(args.seed)
    chosen = list(CLASSIFIERS) if args.classifier == "all" else [args.classifier]
    reports = []
    for name in chosen:
        est = make_classifier(name, **_classifier_params(name, args))
        reports.append(cross_validate(X, y, est, args.k, args.repeats, seed, args.jobs, name))
    config = _run_config(args)
    config["seed"] = seed
    doc = {"config": config, "config_hash": config_hash(config), "features": names,
           "positive_class": "PD", "reports": [r.to_dict() for r in reports]}
    prefix = Path(args.output)
    write_json(doc, prefix.parent / (prefix.name + ".cv.json"))
    with open(prefix.parent / (prefix.name + ".cv.csv"), "w", newline="") as fh:
        fh.write(reports[0].to_csv())
        for r in reports[1:]:
            fh.write("".join(r.to_csv().splitlines(True)[1:]))
    return EXIT_OK


# ---------------------------------------------------------------- importance

def reference_comparison(names, scores):
    """Count shape and surface features scoring above the second-best SBR feature."""
    sbr = [(scores[i], n) for i, n in enumerate(names) if n in SBR_FEATURES]
    if len(sbr) < 2:
        return None
    sbr.sort(key=lambda t: -t[0])
    ref_score, ref_name = sbr[1]
    above = {n for i, n in enumerate(names) if scores[i] > ref_score}
    return {
        "reference_feature": ref_name,
        "reference_score": float(ref_score),
        "shape_above": sum(n in above for n in SHAPE_FEATURES),
        "surface_above": sum(n in above for n in SURFACE_FEATURES),
    }


def cmd_importance(args):
    table = read_feature_table(args.table)
    names = list(table.columns)
    X = table.values
    y = table.deficit_labels()
    seed = _resolve_seed(args.seed)
    forest = RandomForest(n_trees=args.trees, random_state=seed, n_jobs=args.jobs).fit(X, y)
    res = forest.oob_importance()
    order = res.ranking()
    ranks = np.empty(len(names), dtype=int)
    ranks[order] = np.arange(1, len(names) + 1)
    config = _run_config(args)
    config["seed"] = seed
    doc = {
        "config": config,
        "config_hash": config_hash(config),
        "n_trees_with_oob": res.n_trees_used,
        "oob": {"accuracy": res.oob_accuracy, "sensitivity": res.oob_sensitivity,
                "specificity": res.oob_specificity},
        "features": [{"number": feature_number(n), "feature": n, "score": float(res.scores[i]),
                      "rank": int(ranks[i])} for i, n in enumerate(names)],
        "ranking": [names[i] for i in order],
        "reference": reference_comparison(names, res.scores),
    }
    prefix = Path(args.output)
    write_json(doc, prefix.parent / (prefix.name + ".importance.json"))
    with open(prefix.parent / (prefix.name + ".importance.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["number", "feature", "score", "rank"])
        for i, n in enumerate(names):
            w.writerow([feature_number(n), n, repr(float(res.scores[i])), int(ranks[i])])
    return EXIT_OK


# ---------------------------------------------------------------- phantom

def cmd_phantom(args):
    out = Path(args.outdir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    specs = calibrate_defaults()
    if args.spec:
        overrides = _load_config(args.spec)
        for g in GROUPS:
            specs[g] = replace(specs[g], **overrides.get("common", {}), **overrides.get(g, {}))
    counts = {"Normal": args.normal, "SWEDD": args.swedd, "PD": args.pd}
    entries, truths = [], []
    for g in GROUPS:
        spec = replace(specs[g], n_subjects=counts[g], seed=args.seed)
        specs[g] = spec
        for image, truth in generate_cohort(spec, as_volume=args.volumes):
            if not isinstance(image, Volume):
                image = Volume(image.pixels.T[:, :, None], (2.0, 2.0, 2.0))
            blob = out / "images" / f"{truth.subject_id}.f32"
            write_raw(image, blob)
            entries.append(ManifestEntry(truth.subject_id, blob, g))
            truths.append(truth)
    write_manifest(CohortManifest(entries), out / "manifest.csv")
    write_sbr_table(synthetic_sbr(truths, args.seed), out / "sbr.csv")
    with open(out / "truth.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["subject_id", "group", "asymmetry", "posterior_loss_left",
                    "posterior_loss_right", "threshold_hint"])
        for t in truths:
            w.writerow([t.subject_id, t.group, repr(t.asymmetry), repr(t.posterior_loss_left),
                        repr(t.posterior_loss_right), repr(t.threshold_hint)])
    write_json({g: asdict(s) for g, s in specs.items()}, out / "phantom_spec.json")
    return EXIT_OK


# ---------------------------------------------------------------- area profile

def cmd_area_profile(args):
    vol = read_volume(args.volume)
    if args.threshold is not None:
        t = args.threshold
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            t = auto_threshold(as_mean_image(vol, SliceWindow()))
    window = SliceWindow.parse(args.slices)
    window.validate(vol.nz, min_length=1)
    profile = slice_area_profile(vol, t, window.indices())
    fh = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["slice", "area", "threshold"])
        for k, a in profile:
            w.writerow([k, a, repr(float(t))])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _add_segmentation(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--threshold", type=float, default=None,
                   help="fixed segmentation threshold in (0, 1)")
    g.add_argument("--auto-threshold", action="store_true",
                   help="pick the threshold per image (default)")
    p.add_argument("--radiological", action="store_true",
                   help="name the component right of the midline Left")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="striatal-shape",
        description="Shape and surface features of striatal DaT SPECT uptake.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="compute the feature table for a cohort manifest")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", required=True, help="feature table CSV")
    p.add_argument("--sbr", help="SBR table CSV to join (adds 4 columns)")
    p.add_argument("--slices", help="inclusive 0-based slice window a:b (default 35:48)")
    _add_segmentation(p)
    p.add_argument("--combine", choices=("mean", "left", "right"), default="mean")
    p.add_argument("--absolute-ai", action="store_true")
    p.add_argument("--perimeter", choices=("corrected", "polygon"), default="corrected")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("stats", help="group summary and rank-sum screening")
    p.add_argument("table")
    p.add_argument("-o", "--output", required=True, help="output prefix")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("cv", help="repeated stratified cross-validation")
    p.add_argument("table")
    p.add_argument("-o", "--output", required=True, help="output prefix")
    p.add_argument("--classifier", choices=CLASSIFIERS + ("all",), default="svm")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--repeats", type=int, default=100)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--no-screen", action="store_true", help="use all columns unscreened")
    p.add_argument("--with-sbr", action="store_true", help="include the SBR columns")
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.0625)
    p.add_argument("--trees", type=int, default=None, help="forest trees / boosting rounds")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("importance", help="out-of-bag permutation importance")
    p.add_argument("table")
    p.add_argument("-o", "--output", required=True, help="output prefix")
    p.add_argument("--trees", type=int, default=75)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("phantom", help="write a synthetic cohort")
    p.add_argument("outdir")
    p.add_argument("--normal", type=int, default=100)
    p.add_argument("--swedd", type=int, default=40)
    p.add_argument("--pd", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--volumes", action="store_true", help="write 91-slice volumes")
    p.add_argument("--spec", help="JSON/TOML overrides: {common: {...}, PD: {...}, ...}")
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("area-profile", help="segmented area per axial slice")
    p.add_argument("volume")
    p.add_argument("--threshold", type=float, default=None,
                   help="fixed threshold (default: auto threshold of the mean image)")
    p.add_argument("--slices", default="33:50")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_area_profile)

    for action in sub.choices.values():
        action.add_argument("--config", help="TOML or JSON file with option defaults")
    return parser


def _apply_config(parser, argv):
    """Re-parse with defaults from ``--config``; explicit flags still win."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    cfg = _load_config(args.config)
    section = cfg.get(args.command, {}) if isinstance(cfg.get(args.command), dict) else {}
    flat = {k: v for k, v in cfg.items() if not isinstance(v, dict)}
    merged = {k.replace("-", "_"): v for k, v in {**flat, **section}.items()}
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in subparser._actions}
    unknown = sorted(set(merged) - known)
    if unknown:
        raise InvalidInput(f"unknown config keys for {args.command}: {unknown}")
    subparser.set_defaults(**merged)
    return parser.parse_args(argv)


def main(argv=None):
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s: %(message)s")
        if getattr(args, "threshold", None) is not None and not 0 < args.threshold < 1:
            raise InvalidInput("--threshold must lie in (0, 1)")
        return args.func(args)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (StriatalShapeError, OSError, KeyError, TypeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
