"""Multi-round sessions: encode, attack, signal, decode, and record a transcript per round."""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .adversary import Adversary, AdversaryAction, AdversaryView, Strategy
from .bounds import BoundReport, NetworkParams, bound_report, tight_condition
from .codec import CodecKeys, Link, build_keys, upper_bound, wire_symbols
from .signaling import (
    CS,
    NodeBState,
    feedback_wire,
    new_node_a,
    node_a_observe,
    node_b_verify,
    with_wire_values,
)
from .sink import decode, view_from_wire

ALL_CORRECT = "ALL_CORRECT"

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def symbol_digest(symbols: Iterable[int]) -> str:
    """FNV-1a over the symbols serialized as little-endian u32."""
    arr = np.asarray(list(symbols) if not isinstance(symbols, np.ndarray) else symbols, dtype="<u4")
    return f"{fnv1a64(arr.tobytes()):016x}"


@dataclass(frozen=True)
class SessionConfig:
    params: NetworkParams
    rounds: int = 10
    strategy: Strategy = field(default_factory=lambda: Strategy("NONE"))
    seed: int = 0
    q: int | None = None
    certify: bool = True
    strict: bool = False
    key_seed: int = 0

    def __post_init__(self):
        if self.q is not None and self.q != self.params.q:
            raise ValueError(f"q={self.q} disagrees with params.q={self.params.q}")
        if self.rounds < 0:
            raise ValueError("rounds must be non-negative")
        if not tight_condition(self.params):
            raise ValueError(f"tight condition fails for {self.params}; sessions need a tight tuple")


@dataclass(frozen=True)
class RoundTranscript:
    round: int
    action: AdversaryAction
    a_messages: tuple
    cs: bool
    b_action: str
    claim_delivered: bool
    view_digest: str
    mode: str
    correct: bool
    newly_identified: tuple
    identified: tuple
    identified_up: int
    feedback_count: int
    overhead: int
    redacted: bool = False

    @property
    def event(self) -> bool:
        return self.cs or self.claim_delivered or bool(self.newly_identified)

    @property
    def adversarial(self) -> bool:
        return bool(self.action.links)


@dataclass(frozen=True)
class SessionResult:
    transcripts: tuple
    verdict: str
    identified: frozenset
    owned: frozenset

    @property
    def ok(self) -> bool:
        return self.verdict == ALL_CORRECT

    @property
    def false_identifications(self) -> frozenset:
        return self.identified - self.owned


def _apply(keys: CodecKeys, wire: np.ndarray, action: AdversaryAction) -> np.ndarray:
    p, wl = keys.params, keys.wire
    out = wire.copy()
    for l, e in action.errors.items():
        if l.kind == "up":
            idx = list(wl.up[l.index])
        elif l.kind == "dn":
            idx = list(wl.dn[l.index])
        else:
            continue
        out[idx] = (out[idx] + np.asarray(e, dtype=np.int64)) % p.q
    for l, e in action.overhead.items():
        idx = list(wl.claim[l.index])
        out[idx] = (out[idx] + np.asarray(e, dtype=np.int64)) % p.q
    return out


class Session:
    """One sender-to-sink session; `step` runs a single round."""

    def __init__(self, cfg: SessionConfig, keys: CodecKeys | None = None):
        self.cfg = cfg
        p = cfg.params
        self.p = p
        self.keys = keys or build_keys(p, cfg.key_seed, certify=cfg.certify)
        self.adversary = Adversary(cfg.strategy, p, self.keys)
        self.rng = random.Random(repr(("messages", cfg.seed)))
        self.node_a = new_node_a(self.keys)
        self.node_b = NodeBState()
        self.identified: frozenset = frozenset()
        self.round = 0

    def _message(self) -> np.ndarray:
        return np.array([self.rng.randrange(self.p.q) for _ in range(upper_bound(self.p))], dtype=np.int64)

    def step(self, u: np.ndarray | None = None) -> RoundTranscript:
        p, keys = self.p, self.keys
        r = self.round
        u = self._message() if u is None else np.asarray(u, dtype=np.int64) % p.q
        wire = wire_symbols(keys, u)
        action = self.adversary.next_action(AdversaryView(r, wire, self.identified))
        received = _apply(keys, wire, action)

        wl = keys.wire
        up_block = np.stack([received[list(wl.up[j])] for j in range(p.n)], axis=1)
        a_msgs, _ = node_a_observe(self.node_a, up_block, keys.layout, keys)
        fb = feedback_wire(a_msgs)
        fb_err = action.fb_errors(p.b)
        if len(fb) == len(fb_err) and len(fb):
            fb = (fb + np.asarray(fb_err, dtype=np.int64)) % p.q
        b_msgs = with_wire_values(a_msgs, fb)
        self.node_b.truth = u
        decision, _ = node_b_verify(self.node_b, b_msgs, keys.layout, keys)

        view = view_from_wire(keys, received, decision.claim, tuple(a_msgs), self.identified)
        out = decode(view, p, keys, strict=self.cfg.strict)
        correct = out.ok and bool(np.array_equal(out.vector, u))
        new = tuple(sorted(out.newly_identified, key=Link.sort_key)) if out.ok else ()
        if new:
            self.identified = self.identified | frozenset(new)
            ups = {l.index for l in self.identified if l.kind == "up"}
            self.node_a.identify(ups)
            self.node_b.identify(ups)
        cs = any(m.variant == CS for m in a_msgs)
        obs = received[:wl.base_size] if not decision.claim else received
        t = RoundTranscript(
            round=r,
            action=action,
            a_messages=tuple(m.variant for m in a_msgs),
            cs=cs,
            b_action=decision.action,
            claim_delivered=decision.claim,
            view_digest=symbol_digest(obs),
            mode=out.mode,
            correct=correct,
            newly_identified=new,
            identified=tuple(sorted(self.identified, key=Link.sort_key)),
            identified_up=sum(1 for l in self.identified if l.kind == "up"),
            feedback_count=len(fb),
            overhead=int(cs) + (p.m * (p.a - p.c) if decision.claim else 0),
        )
        self.round += 1
        return t


def run_session(cfg: SessionConfig, keys: CodecKeys | None = None) -> SessionResult:
    s = Session(cfg, keys)
    rows = []
    verdict = ALL_CORRECT
    for _ in range(cfg.rounds):
        t = s.step()
        rows.append(t)
        if not t.correct and verdict == ALL_CORRECT:
            verdict = f"FAILURE({t.round})"
    return SessionResult(tuple(rows), verdict, s.identified, s.adversary.owned)


# -- CSV ---------------------------------------------------------------------------

TRANSCRIPT_COLUMNS = (
    "round", "adversary_links", "a_messages", "cs", "b_action", "claim_delivered",
    "feedback_symbols", "overhead_symbols", "view_digest", "mode", "correct",
    "newly_identified", "identified",
)


def _links_text(links) -> str:
    return " ".join(str(l) for l in sorted(links, key=Link.sort_key))


def transcript_row(t: RoundTranscript) -> list:
    return [
        t.round,
        "redacted" if t.redacted else _links_text(t.action.links),
        " ".join(t.a_messages),
        int(t.cs),
        t.b_action,
        int(t.claim_delivered),
        t.feedback_count,
        t.overhead,
        t.view_digest,
        t.mode,
        int(t.correct),
        _links_text(t.newly_identified),
        _links_text(t.identified),
    ]


def transcripts_csv(rows: Sequence[RoundTranscript]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRANSCRIPT_COLUMNS)
    for t in rows:
        w.writerow(transcript_row(t))
    return buf.getvalue()


REPORT_COLUMNS = ("n", "m", "a", "b", "c", "z", "category", "UB", "SB1", "SB2", "SB3", "SB4", "tight", "lemma1_margin_at_2")


def report_row(p: NetworkParams, r: BoundReport) -> list:
    return [p.n, p.m, p.a, p.b, p.c, p.z, r.category, r.ub, r.sb["SB1"], r.sb["SB2"], r.sb["SB3"],
            r.sb["SB4"], int(r.tight), r.lemma1_margin_at_2]


def reports_csv(params: Iterable[NetworkParams]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for p in params:
        w.writerow(report_row(p, bound_report(p)))
    return buf.getvalue()
