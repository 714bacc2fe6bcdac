"""The three-party worked example (N=3, M=5, n=4), with injected tags."""

from __future__ import annotations

from mqka.bits import to_str, xor_all
from mqka.protocol import SessionConfig
from mqka.simulate import StateRecorder, simulate_session

WORKED_EXAMPLE = {
    "ID": {1: "010110", 2: "001101", 3: "100011"},
    "r": {1: "1100", 2: "1111", 3: "0010"},
    "h": {1: "0111", 2: "1010", 3: "0101"},
    "S": {1: "01101011", 2: "01000100", 3: "10110001"},
    "L": {1: "10001101", 2: "00110110", 3: "01101100"},
    "B": {1: "00100100", 2: "10110010", 3: "11011110"},
    "selectors": {1: "0011", 2: "0111", 3: "1110"},
}

EXPECTED = {
    "h0": "1000",
    "selectors": WORKED_EXAMPLE["selectors"],
    "C": "0010",
    "key": "10011110",
}


def worked_example_config(seed: int = 0) -> SessionConfig:
    return SessionConfig(
        N=3,
        M=5,
        n=4,
        l=6,
        r_len=4,
        delta=0.0,
        seed=seed,
        tags=dict(WORKED_EXAMPLE["h"]),
        inputs={k: dict(WORKED_EXAMPLE[k]) for k in ("ID", "r", "S", "L", "B")},
    )


def replay(seed: int = 0) -> dict:
    """Run the worked example and compare every intermediate value against the reference.

    Returns a dict with the trace, a list of mismatches (empty on success)
    and the full run report.
    """
    recorder = StateRecorder()
    session, report = simulate_session(worked_example_config(seed), hooks=[recorder])
    xor_s = to_str(xor_all([p.S for p in session.parties.values()]))
    trace = {
        "h0": report["h0"],
        "selectors": report["selectors"],
        "C": report["C"],
        "bases": report["bases"],
        "outcomes": {
            str(i): ["".join(map(str, w)) for w in rec.outcomes]
            for i, rec in session.extraction.items()
        },
        "keys": report["keys"],
        "xor_of_inputs": xor_s,
        "hops": {
            str(i): [{"edge": e, "states": labels} for e, labels in rows]
            for i, rows in recorder.rows.items()
        },
    }
    diffs: list[str] = []

    def check(name: str, got: str, want: str) -> None:
        if got != want:
            pos = [k for k, (a, b) in enumerate(zip(got, want)) if a != b]
            diffs.append(f"{name}: got {got}, expected {want}, differing positions {pos}")

    check("h0", trace["h0"], EXPECTED["h0"])
    for i, want in EXPECTED["selectors"].items():
        check(f"selector P{i}", trace["selectors"][str(i)], want)
    check("C", trace["C"], EXPECTED["C"])
    for i, key in trace["keys"].items():
        check(f"K_{i}", key, EXPECTED["key"])
    check("S_1 xor S_2 xor S_3", xor_s, EXPECTED["key"])
    return {"trace": trace, "mismatches": diffs, "verified": not diffs, "report": report}


def format_trace(result: dict) -> str:
    tr = result["trace"]
    lines = [
        "Worked example: N=3, M=5, n=4 (tags injected)",
        f"h0 = {tr['h0']}",
    ]
    for i, sel in tr["selectors"].items():
        lines.append(f"selector P{i} (b_odd xor h) = {sel}")
    lines.append(f"C (xor of odd B bits) = {tr['C']}")
    for i, hops in tr["hops"].items():
        lines.append(f"sequence T_{i}:")
        for hop in hops:
            lines.append(f"  {hop['edge']:>6}  " + "  ".join(hop["states"]))
    for i in tr["keys"]:
        lines.append(
            f"P{i}: bases {tr['bases'][i]}  outcomes {' '.join(tr['outcomes'][i])}  K_{i} = {tr['keys'][i]}"
        )
    lines.append(f"S_1 xor S_2 xor S_3 = {tr['xor_of_inputs']}")
    if result["verified"]:
        lines.append("VERIFIED: K_1 = K_2 = K_3 = " + EXPECTED["key"])
    else:
        lines.append("VERIFICATION FAILED:")
        lines.extend("  " + d for d in result["mismatches"])
    return "\n".join(lines)
