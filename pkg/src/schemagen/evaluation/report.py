"""Corpus-level evaluation reports as a tab-separated table and a JSON document."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

from .metrics import METRIC_NAMES, EvalReport, mean_report

COLUMN_TITLES = {
    "table_f1": "Table F1",
    "table_acc": "Table Acc",
    "attr_f1": "Attribute F1",
    "attr_acc": "Attribute Acc",
    "pk_acc": "PK Acc",
    "fk_acc": "FK Acc",
    "dt_acc": "DT Acc",
}


@dataclass
class SampleResult:
    sample_id: str
    metrics: EvalReport
    flag: str = ""  # why the sample was scored 0 without evaluation, if it was


@dataclass
class CorpusReport:
    samples: list[SampleResult] = field(default_factory=list)

    @property
    def means(self) -> EvalReport:
        return mean_report([s.metrics for s in self.samples])

    @property
    def flagged(self) -> list[SampleResult]:
        return [s for s in self.samples if s.flag]

    def to_tsv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, delimiter="\t", lineterminator="\n")
        w.writerow(["sample", *(COLUMN_TITLES[m] for m in METRIC_NAMES), "flag"])
        for s in self.samples:
            w.writerow([s.sample_id, *(f"{getattr(s.metrics, m):.4f}" for m in METRIC_NAMES), s.flag])
        means = self.means
        w.writerow(["MEAN", *(f"{getattr(means, m):.4f}" for m in METRIC_NAMES), ""])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "columns": [COLUMN_TITLES[m] for m in METRIC_NAMES],
            "samples": [
                {"id": s.sample_id, **{m: round(getattr(s.metrics, m), 6) for m in METRIC_NAMES}, "flag": s.flag}
                for s in self.samples
            ],
            "mean": {m: round(getattr(self.means, m), 6) for m in METRIC_NAMES},
            "flagged": len(self.flagged),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def write(self, out_dir: str | Path, stem: str = "report") -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        tsv, js = out / f"{stem}.tsv", out / f"{stem}.json"
        tsv.write_text(self.to_tsv(), encoding="utf-8")
        js.write_text(self.to_json(), encoding="utf-8")
        return tsv, js
