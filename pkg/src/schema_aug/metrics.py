"""Joint Goal Accuracy, Target Goal Accuracy and per-domain diagnostics.

A turn is a hit when the parsed prediction equals the reference state;
unparsed predictions are always misses. TGA only counts turns whose
reference touches a target domain and comes in two flavours:

* ``projected``: only the target-domain slots of both states must agree;
* ``strict``: the whole state must agree, as in JGA.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Dict, Mapping, Optional

from .corpus import Corpus, DialogueState, state_domains
from .schema_model import split_slot_name
from .state_codec import ParseOutcome, normalize_state

TGA_MODES = ("projected", "strict")


class MetricsError(ValueError):
    pass


@dataclass
class EvalReport:
    jga: Optional[float]
    tga: Optional[float]
    n_total: int
    n_target: int
    n_parse_failures: int
    per_domain_accuracy: Dict[str, float] = field(default_factory=dict)
    tga_mode: str = "projected"
    tga_projected: Optional[float] = None
    tga_strict: Optional[float] = None
    n_hits: int = 0
    target_domains: list = field(default_factory=list)
    value_normalization: bool = True
    run_id: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def csv_row(self, domains=None) -> dict:
        domains = sorted(self.per_domain_accuracy) if domains is None else domains
        row = {
            "run_id": self.run_id,
            "jga": _fmt(self.jga),
            "tga_projected": _fmt(self.tga_projected),
            "tga_strict": _fmt(self.tga_strict),
            "n_total": self.n_total,
            "n_target": self.n_target,
            "parse_failures": self.n_parse_failures,
        }
        for d in domains:
            row[f"acc_{d}"] = _fmt(self.per_domain_accuracy.get(d))
        return row

    def to_csv(self, header: bool = True) -> str:
        row = self.csv_row()
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(row), lineterminator="\n")
        if header:
            writer.writeheader()
        writer.writerow(row)
        return buf.getvalue()


def _fmt(x: Optional[float]) -> str:
    return "n/a" if x is None else f"{x:.6f}"


def _project(state: DialogueState, domains) -> DialogueState:
    return {k: v for k, v in state.items() if split_slot_name(k)[0] in domains}


def _prediction(preds: Mapping[str, ParseOutcome], sample_id: str) -> ParseOutcome:
    try:
        return preds[sample_id]
    except KeyError:
        raise MetricsError(f"no prediction for sample {sample_id!r}") from None


def _prep(state: DialogueState, normalize: bool) -> DialogueState:
    return normalize_state(state) if normalize else dict(state)


def joint_goal_accuracy(refs: Corpus, preds: Mapping[str, ParseOutcome], normalize: bool = True) -> Optional[float]:
    if len(refs) == 0:
        return None
    hits = 0
    for s in refs:
        out = _prediction(preds, s.sample_id)
        if out.ok and _prep(out.state, normalize) == _prep(s.state, normalize):
            hits += 1
    return hits / len(refs)


def _check_targets(refs: Corpus, target_domains) -> set:
    targets = set(target_domains)
    unknown = targets - set(refs.schema.domains)
    if unknown:
        raise MetricsError(f"unknown target domain(s): {', '.join(sorted(unknown))}")
    return targets


def _tga_counts(refs, preds, targets, mode, normalize):
    hits = total = 0
    for s in refs:
        if not state_domains(s.state) & targets:
            continue
        total += 1
        out = _prediction(preds, s.sample_id)
        if not out.ok:
            continue
        ref = _prep(s.state, normalize)
        pred = _prep(out.state, normalize)
        if mode == "strict":
            hits += pred == ref
        else:
            hits += _project(pred, targets) == _project(ref, targets)
    return hits, total


def target_goal_accuracy(
    refs: Corpus,
    preds: Mapping[str, ParseOutcome],
    target_domains,
    mode: str = "projected",
    normalize: bool = True,
) -> Optional[float]:
    """TGA over turns whose reference has at least one target-domain slot.

    Returns ``None`` when no such turn exists.
    """
    if mode not in TGA_MODES:
        raise MetricsError(f"unknown TGA mode {mode!r}")
    targets = _check_targets(refs, target_domains)
    hits, total = _tga_counts(refs, preds, targets, mode, normalize)
    return hits / total if total else None


def per_domain_accuracy(refs: Corpus, preds: Mapping[str, ParseOutcome], normalize: bool = True) -> Dict[str, float]:
    out = {}
    for d in refs.schema.domains:
        hits, total = _tga_counts(refs, preds, {d}, "projected", normalize)
        if total:
            out[d] = hits / total
    return out


def evaluate(
    refs: Corpus,
    preds: Mapping[str, ParseOutcome],
    target_domains=(),
    tga_mode: str = "projected",
    normalize: bool = True,
    run_id: str = "",
) -> EvalReport:
    if tga_mode not in TGA_MODES:
        raise MetricsError(f"unknown TGA mode {tga_mode!r}")
    targets = _check_targets(refs, target_domains)
    n_fail = 0
    hits = 0
    for s in refs:
        out = _prediction(preds, s.sample_id)
        if not out.ok:
            n_fail += 1
        elif _prep(out.state, normalize) == _prep(s.state, normalize):
            hits += 1
    tga_p = target_goal_accuracy(refs, preds, targets, "projected", normalize)
    tga_s = target_goal_accuracy(refs, preds, targets, "strict", normalize)
    n_target = sum(1 for s in refs if state_domains(s.state) & targets)
    return EvalReport(
        jga=hits / len(refs) if len(refs) else None,
        tga=tga_p if tga_mode == "projected" else tga_s,
        n_total=len(refs),
        n_target=n_target,
        n_parse_failures=n_fail,
        per_domain_accuracy=per_domain_accuracy(refs, preds, normalize),
        tga_mode=tga_mode,
        tga_projected=tga_p,
        tga_strict=tga_s,
        n_hits=hits,
        target_domains=sorted(targets),
        value_normalization=normalize,
        run_id=run_id,
    )
