from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Any


@dataclass
class EquivalenceReport:
    """Number of induced equivalence classes per depth K."""

    scope: str  # "node" | "graph"
    method: str  # "GNN" | "GAMLP"
    counts: dict[int, int] = field(default_factory=dict)
    sizes: dict[int, dict[int, int]] | None = None
    omega: str | None = None
    mode: str | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "scope": self.scope,
            "method": self.method,
            "per_k": [{"k": k, "classes": c} for k, c in sorted(self.counts.items())],
        }
        if self.omega is not None:
            out["omega"] = self.omega
        if self.mode is not None:
            out["mode"] = self.mode
        if self.sizes is not None:
            out["sizes"] = {str(k): {str(s): c for s, c in sorted(h.items())} for k, h in sorted(self.sizes.items())}
        return out

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scope", "method", "k", "classes"])
        for k, c in sorted(self.counts.items()):
            w.writerow([self.scope, self.method, k, c])
        return buf.getvalue()

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EquivalenceReport":
        sizes = None
        if "sizes" in d:
            sizes = {int(k): {int(s): c for s, c in h.items()} for k, h in d["sizes"].items()}
        return cls(d["scope"], d["method"], {e["k"]: e["classes"] for e in d["per_k"]},
                   sizes, d.get("omega"), d.get("mode"))


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def size_histogram(keys) -> dict[int, int]:
    """Class size -> number of classes of that size."""
    counts: dict[Any, int] = {}
    for key in keys:
        counts[key] = counts.get(key, 0) + 1
    hist: dict[int, int] = {}
    for c in counts.values():
        hist[c] = hist.get(c, 0) + 1
    return hist
