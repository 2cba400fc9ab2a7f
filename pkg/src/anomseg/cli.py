"""Command-line entry point.

Verbs: train, stylize, segment, classify-train, classify, evaluate, sweep,
synth.  Global flags: --config PATH (required), --seed N (overrides the
config seed), --out DIR (run directory, default "run"), --workers N.
Commands that stylize accept --fda to use the rectangular-window baseline.

Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
"""

import argparse
import csv
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from .config import ConfigError, dump_config, load_config
from .image import bilinear_resize, draw_boxes, load_image, save_image
from .manifest import (
    AnnotatedBox,
    DatasetManifest,
    ManifestEntry,
    ManifestError,
    load_manifest,
    save_manifest,
)
from .metrics import evaluate_detections, mse
from .nn.network import load_weights, save_weights
from .nn.training import (
    classify_patches,
    reconstruct_image,
    train_classifier,
    train_reconstructor,
)
from .segment import SegmenterConfig, segment_scan
from .spectral import stylize_fda, stylize_gaussian
from .synthetic import SyntheticSpec, generate_synthetic

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def build_parser():
    parser = argparse.ArgumentParser(
        prog="anomseg",
        description="Unsupervised anomaly instance segmentation pipeline",
    )
    parser.add_argument("--config", required=True, help="configuration file (key = value lines)")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out", default="run", help="run directory for outputs")
    parser.add_argument("--workers", type=int, help="worker pool size (default: logical cores)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the patch reconstructor")
    p.add_argument("manifest")

    p = sub.add_parser("stylize", help="stylize one image toward a reference")
    p.add_argument("input")
    p.add_argument("reference")
    p.add_argument("output")
    p.add_argument("--fda", action="store_true", help="rectangular-window baseline")

    p = sub.add_parser("segment", help="detect anomaly instances in test scans")
    p.add_argument("model")
    p.add_argument("manifest")
    p.add_argument("--fda", action="store_true")
    p.add_argument("--classifier", help="optional classifier weights for labels")

    p = sub.add_parser("classify-train", help="train the patch classifier on labeled boxes")
    p.add_argument("manifest")

    p = sub.add_parser("classify", help="label a detections file with a trained classifier")
    p.add_argument("model")
    p.add_argument("detections")
    p.add_argument("manifest")

    p = sub.add_parser("evaluate", help="score detections against ground truth")
    p.add_argument("detections")
    p.add_argument("manifest")

    p = sub.add_parser("sweep", help="rerun stylize+reconstruct over a parameter grid")
    p.add_argument("model")
    p.add_argument("manifest")
    p.add_argument("--axis", choices=("sigma", "clusters"), required=True)
    p.add_argument("--values", required=True, help="comma-separated grid, e.g. 5,10,25,50")
    p.add_argument("--fda", action="store_true")

    sub.add_parser("synth", help="generate a synthetic dataset from synth_* config keys")
    return parser


def _resolve_reference(config, manifest):
    if config.reference_image:
        return load_image(config.reference_image, channels=3)
    train = manifest.train_entries()
    if not train:
        raise ValueError(
            "no reference available: config has no reference_image and the "
            "manifest has no train entries"
        )
    return load_image(manifest.resolve(train[0]), channels=3)


def _segmenter_config(config, seed):
    return SegmenterConfig(
        n_clusters=config.effective_clusters(),
        min_area=config.min_area,
        opening_radius=config.opening_radius,
        kmeans_seed=seed,
    )


def _prepare_run_dir(out, config):
    os.makedirs(out, exist_ok=True)
    dump_config(config, os.path.join(out, "config.resolved"))


def cmd_train(config, args):
    manifest = load_manifest(args.manifest)
    _prepare_run_dir(args.out, config)
    network, history = train_reconstructor(
        manifest,
        patch_size=config.patch_size,
        noise_std=config.noise_std,
        epochs=config.epochs,
        batch_size=config.batch_size,
        learning_rate=config.learning_rate,
        alpha_feature=config.alpha1,
        alpha_pixel=config.alpha2,
        seed=config.seed,
        max_patches=config.max_patches,
    )
    model_path = os.path.join(args.out, "model.anw")
    save_weights(network, model_path)
    with open(os.path.join(args.out, "history.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss"])
        for epoch, loss in enumerate(history):
            writer.writerow([epoch, repr(loss)])
    print(f"trained {network.parameter_count()}-parameter model -> {model_path}")
    if history:
        print(f"loss: first epoch {history[0]:.6f}, last epoch {history[-1]:.6f}")
    return EXIT_OK


def cmd_stylize(config, args):
    img = load_image(args.input, channels=3)
    reference = load_image(args.reference, channels=3)
    if args.fda:
        out = stylize_fda(img, reference, config.beta)
    else:
        out = stylize_gaussian(img, reference, config.sigma)
    save_image(args.output, out)
    print(f"stylized {args.input} -> {args.output}")
    return EXIT_OK


def _segment_entry(entry, manifest, network, reference, config, args):
    scan = load_image(manifest.resolve(entry), channels=3)
    detections = segment_scan(
        scan,
        network,
        reference,
        sigma=config.sigma,
        patch_size=config.patch_size,
        config=_segmenter_config(config, config.seed),
        use_fda=args.fda,
        beta=config.beta,
    )
    return scan, detections


def cmd_segment(config, args):
    network = load_weights(args.model)
    manifest = load_manifest(args.manifest)
    _prepare_run_dir(args.out, config)
    overlays = os.path.join(args.out, "overlays")
    os.makedirs(overlays, exist_ok=True)
    classifier = load_weights(args.classifier) if args.classifier else None
    entries = manifest.test_entries()
    reference = _resolve_reference(config, manifest)
    workers = args.workers or config.workers or os.cpu_count() or 1

    def job(entry):
        return _segment_entry(entry, manifest, network, reference, config, args)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(job, entries))

    out_entries = []
    for entry, (scan, detections) in zip(entries, results):
        if classifier is not None and detections:
            crops = [
                bilinear_resize(
                    scan[b.bbox[1]:b.bbox[3] + 1, b.bbox[0]:b.bbox[2] + 1],
                    (config.patch_size, config.patch_size),
                )
                for b in detections
            ]
            labels, _ = classify_patches(classifier, crops)
            for det, label in zip(detections, labels):
                det.class_label = int(label)
        boxes = tuple(
            AnnotatedBox(d.bbox, d.class_label, d.score) for d in detections
        )
        out_entries.append(ManifestEntry(entry.path, "test", boxes))
        names = None
        if manifest.class_names and any(d.class_label is not None for d in detections):
            names = [
                manifest.class_names[d.class_label]
                if d.class_label is not None and d.class_label < len(manifest.class_names)
                else None
                for d in detections
            ]
        overlay = draw_boxes(scan, [d.bbox for d in detections], names)
        stem = os.path.splitext(os.path.basename(entry.path))[0]
        save_image(os.path.join(overlays, stem + ".png"), overlay)
    detections_path = os.path.join(args.out, "detections.txt")
    save_manifest(
        DatasetManifest(out_entries, manifest.class_names, root=args.out),
        detections_path,
    )
    total = sum(len(d) for _, d in results)
    print(f"segmented {len(entries)} scans, {total} detections -> {detections_path}")
    return EXIT_OK


def _labeled_crops(manifest, patch_size):
    patches, labels = [], []
    for entry in manifest.train_entries():
        if not entry.boxes:
            continue
        img = load_image(manifest.resolve(entry), channels=3)
        for box in entry.boxes:
            if box.label is None:
                continue
            x0, y0, x1, y1 = box.bbox
            crop = img[y0:y1 + 1, x0:x1 + 1]
            patches.append(bilinear_resize(crop, (patch_size, patch_size)))
            labels.append(box.label)
    return patches, labels


def cmd_classify_train(config, args):
    manifest = load_manifest(args.manifest)
    patches, labels = _labeled_crops(manifest, config.patch_size)
    if not patches:
        raise ValueError("no labeled boxes on train entries")
    _prepare_run_dir(args.out, config)
    network, history = train_classifier(
        patches,
        labels,
        epochs=config.classifier_epochs,
        batch_size=config.batch_size,
        learning_rate=config.classifier_learning_rate,
        seed=config.seed,
        n_classes=len(manifest.class_names) or None,
    )
    model_path = os.path.join(args.out, "classifier.anw")
    save_weights(network, model_path)
    with open(os.path.join(args.out, "classifier_history.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_accuracy"])
        for epoch, acc in enumerate(history):
            writer.writerow([epoch, repr(acc)])
    final = history[-1] if history else float("nan")
    print(f"trained classifier on {len(patches)} patches "
          f"(final train accuracy {final:.3f}) -> {model_path}")
    return EXIT_OK


def cmd_classify(config, args):
    network = load_weights(args.model)
    detections = load_manifest(args.detections, check_paths=False)
    manifest = load_manifest(args.manifest)
    images = {entry.path: entry for entry in manifest.entries}
    _prepare_run_dir(args.out, config)
    n_classes = [l for l in network.layers if l.kind == "dense"][-1].out_features
    out_entries = []
    for entry in detections.entries:
        if entry.path not in images:
            raise ValueError(f"detections reference unknown image {entry.path!r}")
        if not entry.boxes:
            out_entries.append(entry)
            continue
        img = load_image(manifest.resolve(images[entry.path]), channels=3)
        crops = [
            bilinear_resize(
                img[b.bbox[1]:b.bbox[3] + 1, b.bbox[0]:b.bbox[2] + 1],
                (config.patch_size, config.patch_size),
            )
            for b in entry.boxes
        ]
        labels, _ = classify_patches(network, crops)
        boxes = tuple(
            AnnotatedBox(b.bbox, int(label), b.score)
            for b, label in zip(entry.boxes, labels)
        )
        if any(b.label is not None and b.label >= n_classes for b in boxes):
            raise ValueError("classifier produced an out-of-range label")
        out_entries.append(replace(entry, boxes=boxes))
    out_path = os.path.join(args.out, "detections.txt")
    save_manifest(
        DatasetManifest(out_entries, detections.class_names or manifest.class_names,
                        root=args.out),
        out_path,
    )
    print(f"labeled detections -> {out_path}")
    return EXIT_OK


def cmd_evaluate(config, args):
    detections = load_manifest(args.detections, check_paths=False)
    manifest = load_manifest(args.manifest, check_paths=False)
    by_path = {entry.path: entry.boxes for entry in detections.entries}
    preds_per_scan, gts_per_scan = [], []
    for entry in manifest.test_entries():
        preds_per_scan.append(list(by_path.get(entry.path, ())))
        gts_per_scan.append(list(entry.boxes))
    report = evaluate_detections(preds_per_scan, gts_per_scan, config.iou_thresh)
    _prepare_run_dir(args.out, config)
    report_path = os.path.join(args.out, "report.txt")
    report.save(report_path)
    sys.stdout.write(report.as_text())
    print(f"report -> {report_path}")
    return EXIT_OK


def cmd_sweep(config, args):
    network = load_weights(args.model)
    manifest = load_manifest(args.manifest)
    reference = _resolve_reference(config, manifest)
    _prepare_run_dir(args.out, config)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad --values list {args.values!r}")
    if not values:
        raise ConfigError("empty --values list")
    entries = manifest.test_entries() or manifest.entries
    scans = [load_image(manifest.resolve(e), channels=3) for e in entries]
    rows = []
    if args.axis == "sigma":
        for value in values:
            errors = []
            for scan in scans:
                if args.fda:
                    stylized = stylize_fda(scan, reference, value)
                else:
                    stylized = stylize_gaussian(scan, reference, value)
                recon = reconstruct_image(network, stylized, config.patch_size)
                errors.append(mse(stylized, recon))
            rows.append((value, float(np.mean(errors))))
        header = ("sigma" if not args.fda else "beta", "mse")
    else:
        for value in values:
            seg_config = SegmenterConfig(
                n_clusters=int(value),
                min_area=config.min_area,
                opening_radius=config.opening_radius,
                kmeans_seed=config.seed,
            )
            counts = []
            for scan in scans:
                detections = segment_scan(
                    scan, network, reference,
                    sigma=config.sigma, patch_size=config.patch_size,
                    config=seg_config, use_fda=args.fda, beta=config.beta,
                )
                counts.append(len(detections))
            rows.append((value, float(np.mean(counts))))
        header = ("clusters", "mean_detections")
    table_path = os.path.join(args.out, "sweep.txt")
    with open(table_path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(header) + "\n")
        for value, metric in rows:
            fh.write(f"{value:g}\t{metric:.6f}\n")
            print(f"{header[0]}={value:g}\t{header[1]}={metric:.6f}")
    print(f"table -> {table_path}")
    return EXIT_OK


def cmd_synth(config, args):
    spec = SyntheticSpec(
        count=config.synth_count,
        image_dims=(config.synth_height, config.synth_width),
        background_model=config.synth_background,
        anomaly_shapes=config.shape_list(),
        anomaly_intensity_shift=config.synth_shift,
        seed=config.seed,
    )
    manifest = generate_synthetic(spec, args.out)
    dump_config(config, os.path.join(args.out, "config.resolved"))
    print(f"generated {len(manifest.entries)} images -> "
          f"{os.path.join(args.out, 'manifest.txt')}")
    return EXIT_OK


_COMMANDS = {
    "train": cmd_train,
    "stylize": cmd_stylize,
    "segment": cmd_segment,
    "classify-train": cmd_classify_train,
    "classify": cmd_classify,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "synth": cmd_synth,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be non-negative")
            config.seed = args.seed
        config.validate()
        return _COMMANDS[args.command](config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ManifestError, ValueError, OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
