"""Scenario files: a sectioned key-value (INI) format.

Example::

    [network]
    M = 5
    N = 3

    [session]
    n = 4
    l = 6
    delta = 0.5
    threshold = 0.0
    seed = 7
    trials = 100

    [tags]
    mode = injected          ; or derived
    h_1 = 0111
    ...

    [inputs]
    mode = explicit          ; or random
    S_1 = 01101011
    ...

    [adversary]
    type = intercept_resend
    edges = 1-2
    policy = random_xz

Bit strings are runs of ASCII 0/1 (commas are tolerated). Keys are case
sensitive and unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import re

from mqka.adversary import (
    AttackKind,
    AttackScenario,
    BasisPolicy,
    FakeTagMode,
    TargetSet,
)
from mqka.bits import from_str
from mqka.errors import ConfigError
from mqka.protocol import SessionConfig

SECTIONS = {
    "network": {"M", "N"},
    "session": {"n", "l", "delta", "threshold", "seed", "trials"},
    "tags": {"mode", "mac", "key_bytes"},
    "inputs": {"mode", "r_len", "r_0"},
    "adversary": {
        "type", "edges", "sequences", "policy", "target_set",
        "target", "fake_tag_mode", "fake_tag", "flip",
    },
}
_INDEXED = {
    "tags": re.compile(r"^h_(\d+)$"),
    "inputs": re.compile(r"^(ID|r|S|L|B)_(\d+)$"),
}


def _int(section: str, key: str, value: str) -> int:
    try:
        return int(value, 0)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected an integer, got {value!r}") from None


def _float(section: str, key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected a number, got {value!r}") from None


def _enum(enum_cls, section: str, key: str, value: str):
    try:
        return enum_cls(value.strip().lower())
    except ValueError:
        choices = ", ".join(e.value for e in enum_cls)
        raise ConfigError(f"[{section}] {key}: {value!r} not one of {choices}") from None


def _bits(section: str, key: str, value: str) -> str:
    try:
        return "".join(map(str, from_str(value)))
    except ConfigError:
        raise ConfigError(f"[{section}] {key}: not a bit string: {value!r}") from None


def _int_list(section: str, key: str, value: str) -> tuple[int, ...] | None:
    if value.strip().lower() == "all":
        return None
    return tuple(_int(section, key, v) for v in value.split(",") if v.strip())


def _edges(value: str) -> tuple[tuple[int, int], ...] | None:
    if value.strip().lower() == "all":
        return None
    edges = []
    for item in value.split(","):
        m = re.fullmatch(r"\s*(\d+)\s*-\s*(\d+)\s*", item)
        if not m:
            raise ConfigError(f"[adversary] edges: bad edge {item.strip()!r}, expected 'a-b'")
        edges.append((int(m.group(1)), int(m.group(2))))
    return tuple(edges)


def parse_scenario_text(text: str) -> tuple[SessionConfig, int]:
    """Parse scenario text into a config and a trial count."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed scenario file: {exc}") from None

    for section in cp.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key in cp[section]:
            pattern = _INDEXED.get(section)
            if key not in SECTIONS[section] and not (pattern and pattern.match(key)):
                raise ConfigError(f"[{section}] unknown key {key!r}")

    for section, key in (("network", "M"), ("network", "N"), ("session", "n")):
        if not cp.has_option(section, key):
            raise ConfigError(f"[{section}] missing required key {key!r}")

    net, ses = cp["network"], cp["session"]
    kwargs: dict = {
        "M": _int("network", "M", net["M"]),
        "N": _int("network", "N", net["N"]),
        "n": _int("session", "n", ses["n"]),
    }
    if "l" in ses:
        kwargs["l"] = _int("session", "l", ses["l"])
    for key in ("delta", "threshold"):
        if key in ses:
            kwargs[key] = _float("session", key, ses[key])
    if "seed" in ses:
        kwargs["seed"] = _int("session", "seed", ses["seed"])
    trials = _int("session", "trials", ses["trials"]) if "trials" in ses else 1
    if trials < 0:
        raise ConfigError("[session] trials must be >= 0")

    if cp.has_section("tags"):
        tags = cp["tags"]
        mode = tags.get("mode", "derived").strip().lower()
        if mode not in ("derived", "injected"):
            raise ConfigError(f"[tags] mode: {mode!r} not one of derived, injected")
        if "mac" in tags:
            kwargs["mac"] = tags["mac"].strip()
        if "key_bytes" in tags:
            kwargs["key_bytes"] = _int("tags", "key_bytes", tags["key_bytes"])
        values = {
            int(m.group(1)): _bits("tags", k, v)
            for k, v in tags.items()
            if (m := _INDEXED["tags"].match(k))
        }
        if mode == "injected":
            kwargs["tags"] = values
        elif values:
            raise ConfigError("[tags] h_i values given but mode is 'derived'")

    if cp.has_section("inputs"):
        inp = cp["inputs"]
        mode = inp.get("mode", "random").strip().lower()
        if mode not in ("random", "explicit"):
            raise ConfigError(f"[inputs] mode: {mode!r} not one of random, explicit")
        if "r_len" in inp:
            kwargs["r_len"] = _int("inputs", "r_len", inp["r_len"])
        explicit: dict = {}
        for k, v in inp.items():
            m = _INDEXED["inputs"].match(k)
            if m:
                explicit.setdefault(m.group(1), {})[int(m.group(2))] = _bits("inputs", k, v)
        if "r_0" in inp:
            explicit["r0"] = _bits("inputs", "r_0", inp["r_0"])
        if mode == "explicit":
            kwargs["inputs"] = explicit
        elif explicit:
            raise ConfigError("[inputs] explicit values given but mode is 'random'")

    if cp.has_section("adversary"):
        kwargs["adversary"] = _parse_adversary(cp["adversary"])

    cfg = SessionConfig(**kwargs)
    cfg.validate()
    if cfg.adversary is not None:
        cfg.adversary.validate(cfg.N, cfg.M, cfg.n)
    return cfg, trials


def _parse_adversary(adv) -> AttackScenario:
    sc = AttackScenario(kind=_enum(AttackKind, "adversary", "type", adv.get("type", "none")))
    if "edges" in adv:
        sc.edges = _edges(adv["edges"])
    if "sequences" in adv:
        sc.sequences = _int_list("adversary", "sequences", adv["sequences"])
    if "policy" in adv:
        sc.basis_policy = _enum(BasisPolicy, "adversary", "policy", adv["policy"])
    if "target_set" in adv:
        sc.target_set = _enum(TargetSet, "adversary", "target_set", adv["target_set"])
    if "target" in adv:
        sc.target = _int("adversary", "target", adv["target"])
    if "fake_tag_mode" in adv:
        sc.fake_tag_mode = _enum(FakeTagMode, "adversary", "fake_tag_mode", adv["fake_tag_mode"])
    if "fake_tag" in adv:
        sc.fake_tag = _bits("adversary", "fake_tag", adv["fake_tag"])
    if "flip" in adv:
        sc.flip_positions = _int_list("adversary", "flip", adv["flip"])
    return sc


def load_scenario(path) -> tuple[SessionConfig, int]:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc.strerror}") from None
    return parse_scenario_text(text)


def scenario_to_dict(sc: AttackScenario | None) -> dict:
    if sc is None or sc.kind is AttackKind.NONE:
        return {"kind": AttackKind.NONE.value}
    return {
        "kind": sc.kind.value,
        "edges": None if sc.edges is None else [list(e) for e in sc.edges],
        "sequences": None if sc.sequences is None else list(sc.sequences),
        "basis_policy": sc.basis_policy.value,
        "target_set": sc.target_set.value,
        "target": sc.target,
        "fake_tag_mode": sc.fake_tag_mode.value,
        "fake_tag": sc.fake_tag,
        "flip_positions": None if sc.flip_positions is None else list(sc.flip_positions),
    }

