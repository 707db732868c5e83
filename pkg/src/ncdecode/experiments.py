"""Experiment drivers: scaling-factor sweeps and compute-budget curves."""

import math
from dataclasses import dataclass, field

from .decode import (
    BeamConfig,
    ScalingConfig,
    beam_search_direct,
    online_decode,
    online_decode_liu,
)
from .errors import ConfigError
from .metrics import evaluate_outputs
from .scorers import Condition, ROLE_DIRECT, ROLE_LM


def default_lambda_grid(step=0.1, top=2.0):
    """The sweep grid 0.1..2.0 in 0.1 steps, extended with 0.0."""
    n = int(round(top / step))
    return [0.0] + [round(step * i, 10) for i in range(1, n + 1)]


def example_condition(example, forced_control=None):
    control = forced_control if forced_control is not None else example.control
    return Condition(
        context=example.context,
        role=ROLE_DIRECT,
        document=example.document,
        control=control,
    )


def lm_condition(example):
    return Condition(context=example.context, role=ROLE_LM)


@dataclass
class SweepResult:
    points: dict = field(default_factory=dict)  # (l1, l2) -> MetricReport
    failures: dict = field(default_factory=dict)  # (l1, l2) -> [(id, error)]
    decoder: str = ""
    best_point: tuple = None
    selection_metric: str = "token_f1"

    def to_dict(self):
        return {
            "decoder": self.decoder,
            "selection_metric": self.selection_metric,
            "best_point": list(self.best_point) if self.best_point else None,
            "points": {
                "%g,%g" % point: report.to_dict()
                for point, report in sorted(self.points.items())
            },
            "failures": {
                "%g,%g" % point: rows
                for point, rows in sorted(self.failures.items())
                if rows
            },
        }


def _metric_value(report, name):
    if name == "token_f1":
        return report.token_f1_mean
    if name == "lcs_ratio":
        return report.lcs_ratio_mean
    if name == "bleu":
        return report.bleu
    if name == "neg_perplexity":
        return -report.perplexity if report.perplexity is not None else 0.0
    raise ConfigError("unknown selection metric %r" % (name,))


def sweep(examples, decode_fn, grid, selection_metric="token_f1",
          decoder_name="online-ours", lm_scorer=None):
    """Evaluate decode_fn(example, scaling) over the full (l1, l2) grid.

    Per-example decode failures are recorded and the example dropped from
    that grid point's report; a grid point fails only if every example does.
    Returns the SweepResult with every grid point's MetricReport and the best
    point under the selection metric (ties to the lexicographically smaller
    grid point).
    """
    if not grid:
        raise ConfigError("sweep grid must be non-empty")
    seen = set()
    result = SweepResult(decoder=decoder_name, selection_metric=selection_metric)
    for point in grid:
        l1, l2 = point
        if (l1, l2) in seen:
            raise ConfigError("duplicate grid point %r" % ((l1, l2),))
        seen.add((l1, l2))
        scaling = ScalingConfig(1.0, l1, l2)
        kept, contents, failures = [], [], []
        for ex in examples:
            try:
                contents.append(tuple(decode_fn(ex, scaling).content))
                kept.append(ex)
            except Exception as exc:
                failures.append([ex.id, str(exc)])
        result.failures[(l1, l2)] = failures
        if not kept:
            raise ConfigError(
                "grid point (%g, %g) failed on every example" % (l1, l2)
            )
        conds = [lm_condition(ex) for ex in kept] if lm_scorer else None
        result.points[(l1, l2)] = evaluate_outputs(
            kept, contents, lm_scorer=lm_scorer, lm_conditions=conds
        )
    best = min(
        result.points,
        key=lambda p: (-_metric_value(result.points[p], selection_metric), p),
    )
    result.best_point = best
    return result


def liu_factorization(budget):
    """Balanced (k1, k2) with k1 * k2 = budget and k1 >= k2."""
    k2 = int(math.isqrt(budget))
    while budget % k2 != 0:
        k2 -= 1
    return budget // k2, k2


DECODER_KINDS = ("direct", "online-ours", "online-liu")


def budget_curve(examples, scorers, scaling, budgets, kinds=DECODER_KINDS,
                 max_len=16, length_normalize_final=True):
    """Metric table per (decoder kind, effective beam budget).

    scorers is a (direct, channel, lm) triple. Liu budgets are factorized as
    liu_factorization(budget); the factorization is recorded in each row.
    Returns a list of row dicts convertible to the CSV interface.
    """
    direct_scorer, channel_scorer, lm_scorer = scorers
    if any(b < 1 for b in budgets):
        raise ConfigError("budgets must be positive")
    rows = []
    for kind in kinds:
        if kind not in DECODER_KINDS:
            raise ConfigError("unknown decoder kind %r" % (kind,))
        for budget in budgets:
            contents, combined_total = [], 0.0
            config = {"kind": kind, "budget": budget}
            for ex in examples:
                cond = example_condition(ex)
                if kind == "direct":
                    cfg = BeamConfig(beam=budget, max_len=max_len,
                                     length_normalize_final=length_normalize_final)
                    nbest = beam_search_direct(direct_scorer, cond, cfg)
                    hyp = nbest[0] if len(nbest) else None
                elif kind == "online-ours":
                    cfg = BeamConfig(beam=budget, max_len=max_len,
                                     length_normalize_final=length_normalize_final)
                    hyp = online_decode(direct_scorer, channel_scorer, lm_scorer,
                                        cond, scaling, cfg)
                else:
                    k1, k2 = liu_factorization(budget)
                    config["liu_k1"], config["liu_k2"] = k1, k2
                    cfg = BeamConfig(beam=budget, liu_k1=k1, liu_k2=k2,
                                     max_len=max_len,
                                     length_normalize_final=length_normalize_final)
                    hyp = online_decode_liu(direct_scorer, channel_scorer, lm_scorer,
                                            cond, scaling, cfg)
                contents.append(tuple(hyp.content) if hyp else ())
                combined_total += hyp.combined if hyp else 0.0
            report = evaluate_outputs(examples, contents)
            rows.append({
                "kind": kind,
                "budget": budget,
                "config": config,
                "report": report,
                "mean_combined": combined_total / len(examples) if examples else 0.0,
            })
    return rows


def curve_to_csv(rows):
    """Flatten budget-curve rows to the CSV interface."""
    lines = ["kind,budget,metric,value"]
    for row in rows:
        metrics = {
            "token_f1": row["report"].token_f1_mean,
            "lcs_ratio": row["report"].lcs_ratio_mean,
            "bleu": row["report"].bleu,
            "mean_combined": row["mean_combined"],
        }
        for metric, value in metrics.items():
            lines.append("%s,%d,%s,%r" % (row["kind"], row["budget"], metric, value))
    return "\n".join(lines) + "\n"
