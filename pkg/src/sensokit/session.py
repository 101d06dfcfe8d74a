"""On-disk session store: datasets, model bundles, and segment sets.

One JSON document per object. Objects are immutable once written; listings
sort by id so a reloaded session reproduces them byte for byte.
"""

from __future__ import annotations

import json
from pathlib import Path

from .dataset import Dataset
from .errors import ValidationError
from .inddiff import SegmentSet


class Session:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        for sub in ("datasets", "models", "segments"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        self.datasets: dict[str, Dataset] = {}
        self.models: dict[str, dict] = {}
        self.segments: dict[str, dict] = {}
        self._load()

    def _load(self) -> None:
        for f in sorted((self.root / "datasets").glob("*.json")):
            d = Dataset.from_json(f.read_text())
            self.datasets[d.id] = d
        for f in sorted((self.root / "models").glob("*.json")):
            doc = json.loads(f.read_text())
            self.models[doc["id"]] = doc
        for f in sorted((self.root / "segments").glob("*.json")):
            doc = json.loads(f.read_text())
            self.segments[doc["id"]] = doc

    # datasets -----------------------------------------------------------
    def add_dataset(self, d: Dataset) -> Dataset:
        if d.id in self.datasets:
            raise ValidationError(f"dataset id {d.id} already exists")
        path = self.root / "datasets" / f"{d.id}.json"
        path.write_text(d.to_json())
        self.datasets[d.id] = d
        return d

    def get_dataset(self, ref: str) -> Dataset:
        """Look up by id first, then by unique name."""
        if ref in self.datasets:
            return self.datasets[ref]
        matches = [d for d in self.datasets.values() if d.name == ref]
        if len(matches) == 1:
            return matches[0]
        if len(matches) > 1:
            raise ValidationError(f"dataset name {ref!r} is ambiguous; use the id")
        raise KeyError(ref)

    def delete_dataset(self, dataset_id: str) -> None:
        if dataset_id not in self.datasets:
            raise KeyError(dataset_id)
        (self.root / "datasets" / f"{dataset_id}.json").unlink(missing_ok=True)
        del self.datasets[dataset_id]

    def list_datasets(self) -> list[dict]:
        from .dataset import summarize

        out = []
        for d in sorted(self.datasets.values(), key=lambda d: d.id):
            s = summarize(d)
            out.append(
                {
                    "id": d.id,
                    "name": d.name,
                    "role": d.role,
                    "summary": s.to_dict(),
                    "row_groups": sorted(d.row_groups),
                    "col_groups": sorted(d.col_groups),
                }
            )
        return out

    # models ---------------------------------------------------------------
    def add_model(self, doc: dict) -> dict:
        path = self.root / "models" / f"{doc['id']}.json"
        path.write_text(json.dumps(doc, ensure_ascii=False))
        self.models[doc["id"]] = doc
        return doc

    # segments --------------------------------------------------------------
    def add_segments(self, segment_id: str, s: SegmentSet, dataset_id: str) -> dict:
        doc = {"id": segment_id, "dataset_id": dataset_id, **s.to_doc()}
        (self.root / "segments" / f"{segment_id}.json").write_text(
            json.dumps(doc, ensure_ascii=False)
        )
        self.segments[segment_id] = doc
        return doc

    def list_segments(self) -> list[dict]:
        out = []
        for doc in sorted(self.segments.values(), key=lambda d: d["id"]):
            sizes: dict[int, int] = {}
            for a in doc["assignment"]:
                if a is not None:
                    sizes[a] = sizes.get(a, 0) + 1
            out.append(
                {
                    "id": doc["id"],
                    "name": doc["name"],
                    "dataset_id": doc["dataset_id"],
                    "n_consumers": len(doc["labels"]),
                    "segment_sizes": [sizes[k] for k in sorted(sizes)],
                    "unassigned": sum(1 for a in doc["assignment"] if a is None),
                }
            )
        return out
