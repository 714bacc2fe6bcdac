"""JSON report assembly, batch summaries and the report schema."""

from __future__ import annotations

import csv
import io
import json
import math

import jsonschema
import numpy as np

from mqka.bits import to_str, xor_all
from mqka.protocol import SessionConfig, SessionState, efficiency_accounting, ops_parity

SCHEMA_VERSION = 1

_BITS = {"type": "string", "pattern": "^[01]*$"}
_RATE = {"type": "number", "minimum": 0, "maximum": 1}
_CI = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

DETECTION_SCHEMA = {
    "type": "object",
    "required": [
        "sample_positions", "disclosed", "comparisons", "disagreements",
        "error_rate", "block_error_rate", "aborted", "remaining_positions",
    ],
    "properties": {
        "sample_positions": {"type": "object", "additionalProperties": {"type": "array"}},
        "disclosed": {"type": "array"},
        "comparisons": {"type": "integer", "minimum": 0},
        "disagreements": {"type": "integer", "minimum": 0},
        "error_rate": _RATE,
        "block_comparisons": {"type": "integer", "minimum": 0},
        "block_disagreements": {"type": "integer", "minimum": 0},
        "block_error_rate": _RATE,
        "aborted": {"type": "boolean"},
        "remaining_positions": {"type": "array", "items": {"type": "integer"}},
    },
}

RUN_REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "RunReport",
    "type": "object",
    "required": [
        "schema_version", "seed", "config", "keys", "agreement", "session_key",
        "detection", "efficiency", "adversary_outcome", "publication_order",
        "C", "basis_deterministic", "parity_matches_C",
    ],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "seed": {"type": "integer", "minimum": 0},
        "config": {"type": "object"},
        "keys": {"type": "object", "additionalProperties": _BITS},
        "expected_key": _BITS,
        "agreement": {"type": "boolean"},
        "session_key": _BITS,
        "detection": DETECTION_SCHEMA,
        "efficiency": {"type": "object", "required": ["eta", "c", "q", "b"]},
        "adversary_outcome": {"type": "object", "required": ["kind"]},
        "publication_order": {"type": "array", "items": {"type": "integer"}},
        "h0": _BITS,
        "selectors": {"type": "object", "additionalProperties": _BITS},
        "C": _BITS,
        "bases": {"type": "object"},
        "basis_deterministic": {"type": "boolean"},
        "parity_matches_C": {"type": "boolean"},
    },
}

BATCH_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "BatchReport",
    "type": "object",
    "required": ["schema_version", "seed", "trials", "config", "summary"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "seed": {"type": "integer", "minimum": 0},
        "trials": {"type": "integer", "minimum": 0},
        "config": {"type": "object"},
        "summary": {
            "type": "object",
            "required": [
                "agreement_rate", "abort_rate", "abort_rate_ci95",
                "mean_error_rate", "mean_error_rate_ci95", "basis_deterministic_rate",
            ],
            "properties": {
                "agreement_rate": _RATE,
                "abort_rate": _RATE,
                "abort_rate_ci95": _CI,
                "mean_error_rate": _RATE,
                "mean_error_rate_ci95": _CI,
                "mean_block_error_rate": _RATE,
                "basis_deterministic_rate": _RATE,
                "adversary": {"type": "object"},
            },
        },
        "per_trial": {"type": "array", "items": RUN_REPORT_SCHEMA},
    },
}


def validate_report(doc: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if ``doc`` is not a valid report."""
    schema = BATCH_SCHEMA if "summary" in doc else RUN_REPORT_SCHEMA
    jsonschema.validate(doc, schema)


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def config_echo(cfg: SessionConfig) -> dict:
    from mqka.scenario import scenario_to_dict

    return {
        "N": cfg.N,
        "M": cfg.M,
        "n": cfg.n,
        "l": cfg.l,
        "r_len": cfg.r_len,
        "delta": cfg.delta,
        "threshold": cfg.threshold,
        "seed": cfg.seed,
        "mac": cfg.mac,
        "key_bytes": cfg.key_bytes,
        "tag_mode": cfg.tag_mode,
        "tags": None if cfg.tags is None else {str(k): v for k, v in sorted(cfg.tags.items())},
        "explicit_inputs": sorted((cfg.inputs or {}).keys()),
        "adversary": scenario_to_dict(cfg.adversary),
    }


def session_report(session: SessionState, seed: int, adversary_outcome: dict) -> dict:
    cfg = session.config
    det = session.detection
    keys = {str(i): to_str(p.K) for i, p in session.parties.items()}
    expected = xor_all([p.S for p in session.parties.values()])
    parity_ok = all(
        np.array_equal(ops_parity(seq, cfg.n), session.C) for seq in session.sequences.values()
    )
    return {
        "schema_version": SCHEMA_VERSION,
        "seed": int(seed),
        "config": config_echo(cfg),
        "keys": keys,
        "expected_key": to_str(expected),
        "agreement": len(set(keys.values())) == 1,
        "session_key": to_str(det.session_keys[1]),
        "h0": to_str(session.h0),
        "selectors": {
            str(i): to_str(p.encoding_tag ^ p.B[0::2]) for i, p in session.parties.items()
        },
        "C": to_str(session.C),
        "bases": {str(i): "".join("X" if b == "X" else "V" for b in r.bases)
                  for i, r in session.extraction.items()},
        "basis_deterministic": all(all(r.deterministic) for r in session.extraction.values()),
        "parity_matches_C": bool(parity_ok),
        "publication_order": list(session.publication_order),
        "detection": {
            "sample_positions": {str(i): v for i, v in det.samples.items()},
            "disclosed": det.disclosed,
            "comparisons": det.comparisons,
            "disagreements": det.disagreements,
            "error_rate": det.error_rate,
            "block_comparisons": det.block_comparisons,
            "block_disagreements": det.block_disagreements,
            "block_error_rate": det.block_error_rate,
            "aborted": det.aborted,
            "remaining_positions": det.remaining_positions,
        },
        "efficiency": efficiency_accounting(cfg.N, cfg.n, cfg.delta, cfg.M),
        "adversary_outcome": adversary_outcome,
    }


def wilson_interval(successes: int, total: int, z: float = 1.959963984540054) -> list[float]:
    if total == 0:
        return [0.0, 1.0]
    p = successes / total
    denom = 1 + z * z / total
    centre = (p + z * z / (2 * total)) / denom
    half = z * math.sqrt(p * (1 - p) / total + z * z / (4 * total * total)) / denom
    return [max(0.0, centre - half), min(1.0, centre + half)]


def _mean_ci(values: list[float], z: float = 1.959963984540054) -> tuple[float, list[float]]:
    if not values:
        return 0.0, [0.0, 0.0]
    mean = sum(values) / len(values)
    if len(values) < 2:
        return mean, [mean, mean]
    var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
    half = z * math.sqrt(var / len(values))
    return mean, [max(0.0, mean - half), min(1.0, mean + half)]


def batch_summary(reports: list[dict]) -> dict:
    k = len(reports)
    aborts = sum(r["detection"]["aborted"] for r in reports)
    agree = sum(r["agreement"] for r in reports)
    mean_err, err_ci = _mean_ci([r["detection"]["error_rate"] for r in reports])
    mean_block, _ = _mean_ci([r["detection"]["block_error_rate"] for r in reports])
    summary = {
        "agreement_rate": agree / k if k else 0.0,
        "abort_rate": aborts / k if k else 0.0,
        "abort_rate_ci95": wilson_interval(aborts, k),
        "mean_error_rate": mean_err,
        "mean_error_rate_ci95": err_ci,
        "mean_block_error_rate": mean_block,
        "basis_deterministic_rate": (
            sum(r["basis_deterministic"] for r in reports) / k if k else 0.0
        ),
        "key_matches_expected_rate": (
            sum(all(v == r["expected_key"] for v in r["keys"].values()) for r in reports) / k
            if k else 0.0
        ),
    }
    outcomes = [r["adversary_outcome"] for r in reports]
    kind = outcomes[0]["kind"] if outcomes else "none"
    adv: dict = {"kind": kind}
    if kind == "intercept_resend":
        attacked = sum(o["attacked_blocks"] for o in outcomes)
        errors = sum(o["block_errors"] for o in outcomes)
        adv.update(
            attacked_blocks=attacked,
            block_errors=errors,
            block_error_rate=errors / attacked if attacked else 0.0,
            block_error_rate_ci95=wilson_interval(errors, attacked),
            by_set={
                s: {
                    "attacked": sum(o["by_set"][s]["attacked"] for o in outcomes),
                    "errors": sum(o["by_set"][s]["errors"] for o in outcomes),
                }
                for s in ("even", "odd")
            },
            mean_eve_block_guess_rate=sum(o["eve_block_guess_rate"] for o in outcomes) / k,
        )
    elif kind in ("impersonate_user", "forged_tp_tag"):
        adv.update(
            detection_rate=summary["abort_rate"],
            detection_rate_ci95=summary["abort_rate_ci95"],
            mean_forged_positions=sum(o["forged_count"] for o in outcomes) / k,
        )
    summary["adversary"] = adv
    return summary


CSV_FIELDS = (
    "trials", "agreement_rate", "abort_rate", "abort_rate_lo", "abort_rate_hi",
    "mean_error_rate", "mean_block_error_rate", "adversary_kind", "adversary_block_error_rate",
)


def summary_csv(batch: dict) -> str:
    s = batch["summary"]
    row = {
        "trials": batch["trials"],
        "agreement_rate": s["agreement_rate"],
        "abort_rate": s["abort_rate"],
        "abort_rate_lo": s["abort_rate_ci95"][0],
        "abort_rate_hi": s["abort_rate_ci95"][1],
        "mean_error_rate": s["mean_error_rate"],
        "mean_block_error_rate": s["mean_block_error_rate"],
        "adversary_kind": s["adversary"]["kind"],
        "adversary_block_error_rate": s["adversary"].get("block_error_rate", ""),
    }
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    writer.writerow(row)
    return buf.getvalue()

