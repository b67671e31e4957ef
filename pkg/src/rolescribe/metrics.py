"""Word error rate with D/I/S decomposition, and word-level diarization error rate.

WDER counts, over the word-string alignment of reference against hypothesis,
how many correct (C) and substituted (S) words carry the wrong speaker role:
WDER = (S_IS + C_IS) / (S + C). Deleted and inserted words are excluded; their
speakers cannot be paired up unambiguously, which is why WDER is always read
next to WER.

Alignment ties are broken by a fixed backtrace preference MATCH > SUB > INS >
DEL, never by speaker agreement, so the metric stays independent of the
quantity it measures.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .vocab import DecoratedTranscript

MATCH, SUB, DEL, INS = "match", "sub", "del", "ins"

_PREFERENCE = {MATCH: 0, SUB: 1, INS: 2, DEL: 3}


@dataclass(frozen=True)
class EditOp:
    kind: str
    ref_index: int | None
    hyp_index: int | None


@dataclass(frozen=True)
class WordAlignment:
    ops: tuple[EditOp, ...]
    cost: int

    def counts(self) -> tuple[int, int, int, int]:
        """(matches, substitutions, deletions, insertions)."""
        n = {MATCH: 0, SUB: 0, DEL: 0, INS: 0}
        for op in self.ops:
            n[op.kind] += 1
        return n[MATCH], n[SUB], n[DEL], n[INS]


def align_words(ref: Sequence[str], hyp: Sequence[str]) -> WordAlignment:
    """Minimal-edit alignment; among minimal alignments the backtrace prefers
    MATCH > SUB > INS > DEL at every step from the end."""
    n, m = len(ref), len(hyp)
    dist = np.zeros((n + 1, m + 1), dtype=np.int64)
    dist[:, 0] = np.arange(n + 1)
    dist[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        row = dist[i]
        prev = dist[i - 1]
        for j in range(1, m + 1):
            same = ref[i - 1] == hyp[j - 1]
            row[j] = min(prev[j - 1] + (0 if same else 1), row[j - 1] + 1, prev[j] + 1)
    ops: list[EditOp] = []
    i, j = n, m
    while i > 0 or j > 0:
        here = dist[i, j]
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and dist[i - 1, j - 1] == here:
            ops.append(EditOp(MATCH, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and dist[i - 1, j - 1] + 1 == here:
            ops.append(EditOp(SUB, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif j > 0 and dist[i, j - 1] + 1 == here:
            ops.append(EditOp(INS, None, j - 1))
            j -= 1
        else:
            ops.append(EditOp(DEL, i - 1, None))
            i -= 1
    ops.reverse()
    return WordAlignment(ops=tuple(ops), cost=int(dist[n, m]))


@dataclass(frozen=True)
class WerResult:
    """Ratios are None when the reference is empty but the hypothesis is not
    (WER undefined); an empty-vs-empty pair scores 0."""

    wer: float | None
    deletions: float | None
    insertions: float | None
    substitutions: float | None
    ref_len: int


def wer(alignment: WordAlignment, ref_len: int) -> WerResult:
    n_match, n_sub, n_del, n_ins = alignment.counts()
    if n_match + n_sub + n_del != ref_len:
        raise ValueError(f"alignment covers {n_match + n_sub + n_del} reference "
                         f"words, ref_len says {ref_len}")
    if ref_len == 0:
        if n_ins == 0:
            return WerResult(0.0, 0.0, 0.0, 0.0, 0)
        return WerResult(None, None, None, None, 0)
    return WerResult(
        wer=(n_del + n_ins + n_sub) / ref_len,
        deletions=n_del / ref_len,
        insertions=n_ins / ref_len,
        substitutions=n_sub / ref_len,
        ref_len=ref_len,
    )


@dataclass(frozen=True)
class WderResult:
    wder: float | None  # None when S + C == 0
    s_is: int
    c_is: int
    s: int
    c: int


def wder(ref: DecoratedTranscript, hyp: DecoratedTranscript) -> WderResult:
    """Word diarization error rate over two decorated transcripts.

    Alignment is computed on word strings only; roles never influence it.
    A None role on either side of a pair counts as a speaker mismatch unless
    both are None.
    """
    alignment = align_words(ref.word_strings(), hyp.word_strings())
    return wder_from_alignment(alignment, ref, hyp)


def wder_from_alignment(alignment: WordAlignment, ref: DecoratedTranscript,
                        hyp: DecoratedTranscript) -> WderResult:
    s = c = s_is = c_is = 0
    for op in alignment.ops:
        if op.kind == MATCH:
            c += 1
            if ref.words[op.ref_index].role != hyp.words[op.hyp_index].role:
                c_is += 1
        elif op.kind == SUB:
            s += 1
            if ref.words[op.ref_index].role != hyp.words[op.hyp_index].role:
                s_is += 1
    if s + c == 0:
        return WderResult(None, s_is, c_is, s, c)
    return WderResult((s_is + c_is) / (s + c), s_is, c_is, s, c)


@dataclass(frozen=True)
class ConversationScore:
    conversation_id: str
    wder: float | None
    wer: float | None


@dataclass(frozen=True)
class ScoreReport:
    """Corpus-level scores; ratios aggregate counts over all conversations."""

    wer: float | None
    deletions: float | None
    insertions: float | None
    substitutions: float | None
    wder: float | None
    s_is: int
    c_is: int
    s: int
    c: int
    per_conversation: tuple[ConversationScore, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "wer": self.wer,
            "del": self.deletions,
            "ins": self.insertions,
            "sub": self.substitutions,
            "wder": self.wder,
            "s_is": self.s_is,
            "c_is": self.c_is,
            "s": self.s,
            "c": self.c,
            "per_conversation": [
                {"conversation_id": p.conversation_id, "wder": p.wder, "wer": p.wer}
                for p in self.per_conversation
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @staticmethod
    def from_dict(data: dict) -> "ScoreReport":
        return ScoreReport(
            wer=data["wer"], deletions=data["del"], insertions=data["ins"],
            substitutions=data["sub"], wder=data["wder"], s_is=data["s_is"],
            c_is=data["c_is"], s=data["s"], c=data["c"],
            per_conversation=tuple(
                ConversationScore(p["conversation_id"], p["wder"], p["wer"])
                for p in data.get("per_conversation", ())),
        )


def score_conversations(
        pairs: Sequence[tuple[str, DecoratedTranscript, DecoratedTranscript]]) -> ScoreReport:
    """Aggregate (conversation_id, reference, hypothesis) triples into a report."""
    tot_ref = tot_del = tot_ins = tot_sub = 0
    tot_s = tot_c = tot_s_is = tot_c_is = 0
    per_conv: list[ConversationScore] = []
    for conv_id, ref, hyp in pairs:
        alignment = align_words(ref.word_strings(), hyp.word_strings())
        w = wer(alignment, len(ref))
        d = wder_from_alignment(alignment, ref, hyp)
        per_conv.append(ConversationScore(conv_id, d.wder, w.wer))
        _, n_sub, n_del, n_ins = alignment.counts()
        tot_ref += len(ref)
        tot_del += n_del
        tot_ins += n_ins
        tot_sub += n_sub
        tot_s += d.s
        tot_c += d.c
        tot_s_is += d.s_is
        tot_c_is += d.c_is
    if tot_ref == 0:
        g_wer = g_del = g_ins = g_sub = (0.0 if tot_ins == 0 else None)
    else:
        g_wer = (tot_del + tot_ins + tot_sub) / tot_ref
        g_del = tot_del / tot_ref
        g_ins = tot_ins / tot_ref
        g_sub = tot_sub / tot_ref
    g_wder = (tot_s_is + tot_c_is) / (tot_s + tot_c) if tot_s + tot_c else None
    return ScoreReport(
        wer=g_wer, deletions=g_del, insertions=g_ins, substitutions=g_sub,
        wder=g_wder, s_is=tot_s_is, c_is=tot_c_is, s=tot_s, c=tot_c,
        per_conversation=tuple(per_conv),
    )
