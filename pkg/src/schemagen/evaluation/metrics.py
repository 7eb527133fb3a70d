"""Per-sample schema metrics: table and attribute F1/accuracy, key accuracy, data-type accuracy."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from ..schema import Schema
from .matching import Alignment, MatcherConfig, align


def f1_from_counts(matched: int, n_gold: int, n_pred: int) -> float:
    """F1 from a matched-pair count; 0 when precision and recall are both 0."""
    p = matched / n_pred if n_pred else 0.0
    r = matched / n_gold if n_gold else 0.0
    return 2 * p * r / (p + r) if p + r else 0.0


def table_metrics(gold: Schema, pred: Schema, a: Alignment) -> tuple[float, int]:
    n_gold, n_pred, m = len(gold.relations), len(pred.relations), len(a.table_map)
    if n_gold == 0 and n_pred == 0:
        return 1.0, 1
    exact = m == n_gold == n_pred
    return (1.0 if exact else f1_from_counts(m, n_gold, n_pred)), int(exact)


def attribute_metrics(gold: Schema, pred: Schema, a: Alignment) -> tuple[float, int]:
    """Mean per-gold-table attribute F1; unmatched gold tables score 0."""
    if not gold.relations:
        ok = not pred.relations
        return float(ok), int(ok)
    scores = []
    exact = True
    for r in gold.relations:
        p_id = a.table_map.get(r.t_id)
        if p_id is None:
            scores.append(0.0)
            exact = False
            continue
        n_gold = len(gold.attributes_of(r.t_id))
        n_pred = len(pred.attributes_of(p_id))
        m = len(a.attr_maps.get(r.t_id, {}))
        if m == n_gold == n_pred:
            scores.append(1.0)
        else:
            scores.append(f1_from_counts(m, n_gold, n_pred))
            exact = False
    return sum(scores) / len(scores), int(exact)


def key_metrics(gold: Schema, pred: Schema, a: Alignment) -> tuple[int, int]:
    """Complete-match accuracy of primary keys and foreign keys under the alignment."""
    amap = a.attr_map()

    pk_ok = True
    for r in gold.relations:
        p_id = a.table_map.get(r.t_id)
        if p_id is None:
            pk_ok = False
            break
        g_pk = gold.primary_key(r.t_id)
        p_pk = pred.primary_key(p_id)
        g_keys = set() if g_pk is None else {amap.get(x) for x in g_pk.key_attrs}
        p_keys = set() if p_pk is None else set(p_pk.key_attrs)
        if None in g_keys or g_keys != p_keys:
            pk_ok = False
            break

    mapped_gold = {(amap.get(f.from_attr), amap.get(f.to_attr)) for f in gold.foreign_keys}
    matched_pred_tables = set(a.table_map.values())
    owner = {x.a_id: x.t_id for x in pred.attributes}
    pred_fks = {
        (f.from_attr, f.to_attr)
        for f in pred.foreign_keys
        if owner[f.from_attr] in matched_pred_tables and owner[f.to_attr] in matched_pred_tables
    }
    fk_ok = all(None not in pair for pair in mapped_gold) and mapped_gold == pred_fks
    return int(pk_ok), int(fk_ok)


def datatype_metrics(gold: Schema, pred: Schema, a: Alignment) -> float:
    """Share of matched attribute pairs with equal types; 0 without matches.

    Two schemas that both have no attributes at all score 1, so that
    self-evaluation of the empty schema stays at 1.
    """
    amap = a.attr_map()
    if not amap:
        return 1.0 if not gold.attributes and not pred.attributes else 0.0
    same = sum(gold.attribute(g).a_type == pred.attribute(p).a_type for g, p in amap.items())
    return same / len(amap)


@dataclass
class EvalReport:
    table_f1: float = 0.0
    table_acc: float = 0.0
    attr_f1: float = 0.0
    attr_acc: float = 0.0
    pk_acc: float = 0.0
    fk_acc: float = 0.0
    dt_acc: float = 0.0

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


METRIC_NAMES: tuple[str, ...] = tuple(f.name for f in fields(EvalReport))


def evaluate_pair(gold: Schema, pred: Schema, cfg: MatcherConfig | None = None) -> EvalReport:
    a = align(gold, pred, cfg)
    t_f1, t_acc = table_metrics(gold, pred, a)
    a_f1, a_acc = attribute_metrics(gold, pred, a)
    pk, fk = key_metrics(gold, pred, a)
    return EvalReport(t_f1, t_acc, a_f1, a_acc, pk, fk, datatype_metrics(gold, pred, a))


def mean_report(reports: list[EvalReport]) -> EvalReport:
    if not reports:
        return EvalReport()
    return EvalReport(
        *(sum(getattr(r, name) for r in reports) / len(reports) for name in METRIC_NAMES)
    )
