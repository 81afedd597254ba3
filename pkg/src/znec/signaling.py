"""Relay-side error signaling: what node A reports on the feedback link and how node B reacts.

Node A sees the upstream symbols; node B holds the true messages (it shares
the source's reliable link).  Per X row, A emits a feedback payload chosen by
the row's case, and raises CS when its own parity check fails.  B compares
the payload with what the true messages predict and sends the claim block W
when they disagree.  Signaling stops once two upstream links are identified,
because the remaining network then decodes without help.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .codec import CodecKeys, RowLayout, case3_symbols, compute_delta, feedback_symbols
from .galois import InconsistentSystem, inv_mod, np_rank
from .mds import mds_erasure_decode, mds_encode

F_SET = "F_SET"
F_PRIME = "F_PRIME"
F_CASE3 = "F_CASE3"
RAW_V = "RAW_V"
CS = "CS"

NONE = "NONE"
SEND_CLAIM = "SEND_CLAIM"
RECORD_IDENTIFICATION = "RECORD_IDENTIFICATION"


@dataclass(frozen=True)
class FeedbackMessage:
    variant: str
    payload: tuple[int, ...] = ()
    row: int = -1

    @property
    def overhead(self) -> bool:
        return self.variant == CS


@dataclass
class NodeAState:
    cases: tuple[int, ...]
    identified_positions: frozenset = frozenset()
    cs_sent_count: int = 0
    suspicions: set = field(default_factory=set)
    history: deque = field(default_factory=lambda: deque(maxlen=16))

    def identify(self, positions: Iterable[int]) -> None:
        self.identified_positions = self.identified_positions | frozenset(positions)

    @property
    def active(self) -> bool:
        return len(self.identified_positions) < 2


def new_node_a(keys: CodecKeys) -> NodeAState:
    z = keys.params.z
    return NodeAState(cases=tuple(r.case(z) for r in keys.layout))


@dataclass
class NodeBState:
    truth: np.ndarray | None = None
    identified_positions: frozenset = frozenset()
    claims_sent: int = 0
    suspicions: set = field(default_factory=set)

    def identify(self, positions: Iterable[int]) -> None:
        self.identified_positions = self.identified_positions | frozenset(positions)

    @property
    def active(self) -> bool:
        return len(self.identified_positions) < 2


@dataclass(frozen=True)
class BDecision:
    claim: bool = False
    suspects: tuple = ()
    unlocalized: bool = False

    @property
    def action(self) -> str:
        if self.suspects:
            return RECORD_IDENTIFICATION
        return SEND_CLAIM if self.claim else NONE


def cancelled_residual(delta: Sequence[int], eta: np.ndarray, dim: int, position: int, q: int) -> np.ndarray:
    """Δ with the contribution of one symbol position eliminated.

    For a message position l this is δ_j - η_{l,j} η_{l,k3}^{-1} δ_{k3};
    for a redundancy position the matching δ entry is simply dropped.
    All zero exactly when the row, punctured at `position`, is a codeword.
    """
    delta = np.asarray(delta, dtype=np.int64)
    if position >= dim:
        return np.delete(delta, position - dim)
    last = len(delta) - 1
    if last < 0:
        return delta
    f = eta[position, :last] * inv_mod(int(eta[position, last]), q) % q
    return (delta[:last] - f * delta[last]) % q


def _single_position_suspects(row: np.ndarray, delta: np.ndarray, i: int, keys: CodecKeys) -> list[int]:
    lr, q = keys.layout[i], keys.params.q
    eta = keys.rows[i].eta
    return [pos for pos in range(keys.params.n)
            if not np.any(cancelled_residual(delta, eta, lr.dim, pos, q))]


def _decoded_feedback(row: np.ndarray, i: int, P: frozenset, keys: CodecKeys) -> np.ndarray:
    """F values recomputed from the row re-decoded without the identified positions."""
    code = keys.rows[i].code
    known = {j: int(row[j]) for j in range(keys.params.n) if j not in P}
    msg = mds_erasure_decode(code, known)
    return feedback_symbols(mds_encode(code, msg), i, keys)


def node_a_observe(state: NodeAState, received_up: np.ndarray, layout: RowLayout,
                   keys: CodecKeys) -> tuple[list[FeedbackMessage], NodeAState]:
    """Emit the round's feedback messages from the upstream symbols A received.

    `received_up` is the a x n block of upstream columns; only the top a-c
    (X) rows matter.  A trailing CS message is appended when any row's parity
    check fails.
    """
    if not state.active:
        return [], state
    q = keys.params.q
    P = state.identified_positions
    out: list[FeedbackMessage] = []
    cs_row = -1
    deltas = []
    for i, lr in enumerate(layout):
        row = np.asarray(received_up[i], dtype=np.int64)
        case = state.cases[i]
        if case == 3:
            out.append(FeedbackMessage(F_CASE3, tuple(int(v) for v in case3_symbols(row, i, keys)), i))
            deltas.append(())
            continue
        delta = compute_delta(row, i, keys)
        deltas.append(tuple(int(v) for v in delta))
        if not P:
            if np.any(delta):
                cs_row = i if cs_row < 0 else cs_row
                if case == 2:
                    found = _single_position_suspects(row, delta, i, keys)
                    if len(found) == 1:
                        state.suspicions.add((i, found[0]))
            if lr.k2_prime:
                out.append(FeedbackMessage(F_SET, tuple(int(v) for v in feedback_symbols(row, i, keys)), i))
            continue
        (pos,) = tuple(P)
        if case == 4:
            out.append(FeedbackMessage(RAW_V, tuple(int(v) for v in row[lr.k1:lr.dim]), i))
            continue
        residual = cancelled_residual(delta, keys.rows[i].eta, lr.dim, pos, q)
        if np.any(residual):
            cs_row = i if cs_row < 0 else cs_row
        if lr.k2_prime:
            if np.any(residual):
                payload = feedback_symbols(row, i, keys)
            else:
                payload = _decoded_feedback(row, i, P, keys)
            out.append(FeedbackMessage(F_PRIME, tuple(int(v) for v in payload), i))
    state.history.append(tuple(deltas))
    if cs_row >= 0:
        state.cs_sent_count += 1
        out.append(FeedbackMessage(CS, (), cs_row))
    return out, state


def feedback_wire(messages: Sequence[FeedbackMessage]) -> np.ndarray:
    """The symbols physically carried on the feedback link, in row order."""
    vals = [v for msg in messages if not msg.overhead for v in msg.payload]
    return np.array(vals, dtype=np.int64)


def with_wire_values(messages: Sequence[FeedbackMessage], wire: Sequence[int]) -> list[FeedbackMessage]:
    """Rebuild the messages B receives after the feedback symbols were altered in transit."""
    out, pos = [], 0
    for msg in messages:
        if msg.overhead:
            out.append(msg)
            continue
        k = len(msg.payload)
        out.append(FeedbackMessage(msg.variant, tuple(int(v) for v in wire[pos:pos + k]), msg.row))
        pos += k
    if pos != len(wire):
        raise ValueError("feedback wire length does not match the payloads")
    return out


def _row_truth(truth: np.ndarray, i: int, keys: CodecKeys) -> tuple[np.ndarray, np.ndarray]:
    lr = keys.layout[i]
    off = keys.x_offsets()[i]
    msg = truth[off:off + lr.dim]
    return msg[:lr.k1], msg[lr.k1:]


def check_message(msg: FeedbackMessage, truth: np.ndarray, P: frozenset, keys: CodecKeys) -> BDecision:
    """B's check of one feedback message against the true row messages."""
    if msg.variant == CS:
        return BDecision(claim=True)
    q = keys.params.q
    i = msg.row
    lr, rk = keys.layout[i], keys.rows[i]
    x, v = _row_truth(truth, i, keys)
    f = np.array(msg.payload, dtype=np.int64)
    if msg.variant in (F_SET, F_PRIME):
        omega = (f - (v - x @ rk.theta)) % q
        return BDecision(claim=bool(np.any(omega)))
    if msg.variant == RAW_V:
        cols = [k for k in range(lr.k2_prime) if lr.k1 + k not in P]
        return BDecision(claim=bool(np.any((f[cols] - v[cols]) % q)))
    if msg.variant == F_CASE3:
        E3 = rk.case3.parity.to_array()
        omega = (f - np.concatenate([x, v]) @ E3) % q
        if not np.any(omega):
            return BDecision()
        if P:
            rows = E3[sorted(P)]
            inside = np_rank(np.vstack([rows, omega]), q) == np_rank(rows, q)
            return BDecision(claim=not inside)
        if np.all(omega):
            hits = [l for l in range(E3.shape[0]) if np_rank(np.vstack([E3[l], omega]), q) == 1]
            if len(hits) == 1:
                return BDecision(claim=True, suspects=((i, hits[0]),))
        return BDecision(claim=True, unlocalized=True)
    raise ValueError(f"unknown feedback variant {msg.variant!r}")


def node_b_verify(state: NodeBState, feedback: Sequence[FeedbackMessage] | FeedbackMessage,
                  layout: RowLayout, keys: CodecKeys) -> tuple[BDecision, NodeBState]:
    if state.truth is None:
        raise ValueError("node B needs the true messages before verifying feedback")
    if isinstance(feedback, FeedbackMessage):
        feedback = [feedback]
    if not state.active:
        return BDecision(), state
    claim, unloc, suspects = False, False, []
    for msg in feedback:
        d = check_message(msg, state.truth, state.identified_positions, keys)
        claim |= d.claim
        unloc |= d.unlocalized
        suspects.extend(d.suspects)
    state.suspicions.update(suspects)
    if claim:
        state.claims_sent += 1
    return BDecision(claim, tuple(suspects), unloc), state


def detection_complete(p, transcript) -> bool:
    """True once the sink holds two identified upstream links or a claim has been delivered."""
    for rec in transcript:
        if getattr(rec, "claim_delivered", False):
            return True
        if getattr(rec, "identified_up", 0) >= 2:
            return True
    return False
