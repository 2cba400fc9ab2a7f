"""Dataset manifests and detection files.

Both share one line-oriented UTF-8 format.  A manifest lists images:

    #classes: gun,knife
    train<TAB>images/normal_0000.png<TAB>
    test<TAB>images/abnormal_0000.png<TAB>class:0 12 20 40 61;class:1 70 80 90 100

The third field holds semicolon-separated box records.  Each record is an
optional ``class:IDX`` token, four inclusive pixel coordinates
``x0 y0 x1 y1``, and an optional trailing score (detection files add the
score; ground truth omits it).  Image paths are stored relative to the
manifest file and resolved against its directory on load.
"""

import os
from dataclasses import dataclass, field, replace

__all__ = [
    "AnnotatedBox",
    "ManifestEntry",
    "DatasetManifest",
    "ManifestError",
    "load_manifest",
    "save_manifest",
    "format_boxes",
    "parse_boxes",
]

_ROLES = ("train", "test")


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class AnnotatedBox:
    """Inclusive-coordinate box with optional class label and score."""

    bbox: tuple  # (x0, y0, x1, y1)
    label: int | None = None
    score: float | None = None

    def __post_init__(self):
        x0, y0, x1, y1 = self.bbox
        if not (x0 <= x1 and y0 <= y1):
            raise ManifestError(f"degenerate bbox {self.bbox}")
        if any(v < 0 for v in self.bbox):
            raise ManifestError(f"negative bbox coordinate in {self.bbox}")


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    role: str
    boxes: tuple = ()

    def __post_init__(self):
        if self.role not in _ROLES:
            raise ManifestError(f"unknown role {self.role!r} (expected train|test)")


@dataclass
class DatasetManifest:
    entries: list = field(default_factory=list)
    class_names: list = field(default_factory=list)
    root: str = "."

    def resolve(self, entry):
        return os.path.normpath(os.path.join(self.root, entry.path))

    def train_entries(self):
        return [e for e in self.entries if e.role == "train"]

    def test_entries(self):
        return [e for e in self.entries if e.role == "test"]

    def validate(self, check_paths=True):
        seen = set()
        for entry in self.entries:
            if entry.path in seen:
                raise ManifestError(f"duplicate image path {entry.path!r}")
            seen.add(entry.path)
            if check_paths and not os.path.isfile(self.resolve(entry)):
                raise ManifestError(f"dangling image path {entry.path!r}")
            for box in entry.boxes:
                if box.label is not None and not (0 <= box.label < len(self.class_names)):
                    raise ManifestError(
                        f"class index {box.label} out of range for "
                        f"{len(self.class_names)} classes ({entry.path})"
                    )
        return self


def format_boxes(boxes):
    records = []
    for box in boxes:
        parts = []
        if box.label is not None:
            parts.append(f"class:{box.label}")
        parts.extend(str(int(v)) for v in box.bbox)
        if box.score is not None:
            parts.append(f"{box.score:.6f}")
        records.append(" ".join(parts))
    return ";".join(records)


def parse_boxes(text):
    boxes = []
    for record in text.split(";"):
        record = record.strip()
        if not record:
            continue
        tokens = record.split()
        label = None
        if tokens and tokens[0].startswith("class:"):
            try:
                label = int(tokens[0][len("class:"):])
            except ValueError as exc:
                raise ManifestError(f"bad class token {tokens[0]!r}") from exc
            tokens = tokens[1:]
        if len(tokens) not in (4, 5):
            raise ManifestError(f"bad box record {record!r}")
        try:
            coords = tuple(int(t) for t in tokens[:4])
            score = float(tokens[4]) if len(tokens) == 5 else None
        except ValueError as exc:
            raise ManifestError(f"bad box record {record!r}") from exc
        boxes.append(AnnotatedBox(coords, label, score))
    return tuple(boxes)


def load_manifest(path, check_paths=True):
    """Parse and eagerly validate a manifest file."""
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no such manifest: {path}")
    class_names = []
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#classes:"):
                names = line[len("#classes:"):].strip()
                class_names = [n.strip() for n in names.split(",") if n.strip()]
                continue
            if line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) not in (2, 3):
                raise ManifestError(f"{path}:{lineno}: expected 2 or 3 tab-separated fields")
            role, img_path = parts[0].strip(), parts[1].strip()
            boxes = parse_boxes(parts[2]) if len(parts) == 3 else ()
            try:
                entries.append(ManifestEntry(img_path, role, boxes))
            except ManifestError as exc:
                raise ManifestError(f"{path}:{lineno}: {exc}") from exc
    manifest = DatasetManifest(entries, class_names, root=os.path.dirname(path) or ".")
    return manifest.validate(check_paths=check_paths)


def save_manifest(manifest, path):
    """Write a manifest (or detections list) in the canonical format."""
    lines = []
    if manifest.class_names:
        lines.append("#classes: " + ",".join(manifest.class_names))
    for entry in manifest.entries:
        lines.append(f"{entry.role}\t{entry.path}\t{format_boxes(entry.boxes)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def detections_to_entry(entry, detections):
    """Replace an entry's boxes with detection results (keeps path/role)."""
    boxes = tuple(
        AnnotatedBox(det.bbox, det.class_label, det.score) for det in detections
    )
    return replace(entry, boxes=boxes)
