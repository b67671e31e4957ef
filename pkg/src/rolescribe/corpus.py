"""Synthetic two-role conversation generator, segmentation, and corpus files.

Conversations stand in for a private clinical corpus. Two cue families drive
speaker-role identity, each independently switchable:

* lexical: every role has its own word lexicon (with a configurable shared
  fraction), and each word has a fixed prototype frame sequence;
* acoustic: every speaker in the physician/patient pools carries an additive
  offset vector applied to all of their frames (scale 0 disables it).

Frames are quantized to float32 precision at generation time so inline-JSON
and binary-blob serializations load bit-identically.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .vocab import DEFAULT_ROLES


@dataclass(frozen=True)
class GeneratorConfig:
    feature_dim: int
    frames_per_word: tuple[int, int]
    words_per_turn: tuple[int, int]
    turns_per_conversation: tuple[int, int]
    lexicons: dict  # role -> {word: (L, d) prototype}
    speaker_offsets: dict  # speaker id -> (d,) offset vector
    physicians: tuple[str, ...]
    patients: tuple[str, ...]
    speaker_offset_scale: float
    noise_scale: float
    silence_gap: tuple[int, int]
    silence_noise_scale: float
    role_alternation_prob: float
    lexical_overlap: float

    @property
    def roles(self) -> tuple[str, ...]:
        return tuple(self.lexicons.keys())

    def validate(self) -> None:
        if len(self.lexicons) != 2:
            raise ValueError("the generator models exactly two speaker roles")
        for role, lexicon in self.lexicons.items():
            if not lexicon:
                raise ValueError(f"empty lexicon for role {role!r}")
        if self.speaker_offset_scale < 0:
            raise ValueError("speaker_offset_scale must be >= 0")
        if not self.physicians or not self.patients:
            raise ValueError("speaker pools must be non-empty")


def default_generator_config(
    seed: int = 0,
    feature_dim: int = 16,
    words_per_role: int = 24,
    lexical_overlap: float = 0.15,
    frames_per_word: tuple[int, int] = (35, 60),
    words_per_turn: tuple[int, int] = (5, 9),
    turns_per_conversation: tuple[int, int] = (10, 18),
    silence_gap: tuple[int, int] = (8, 30),
    speaker_offset_scale: float = 1.0,
    noise_scale: float = 0.10,
    silence_noise_scale: float = 0.02,
    role_alternation_prob: float = 0.85,
    physician_pool: int = 12,
    patient_pool: int = 24,
    roles: Sequence[str] = DEFAULT_ROLES,
) -> GeneratorConfig:
    """Build a fully realized config: lexicon prototypes and speaker offsets
    are sampled here, deterministically from `seed`, and frozen thereafter.

    The default geometry treats one frame as 10 ms, so words run 350-600 ms
    and a 1500-frame segment cap corresponds to 15 s.
    """
    rng = np.random.default_rng([seed, 0xC0FFEE])
    shared_count = int(round(lexical_overlap * words_per_role))
    exclusive = words_per_role - shared_count
    if exclusive < 1:
        raise ValueError("lexical_overlap leaves no role-exclusive words")

    def make_words(prefix, count):
        return [f"{prefix}{i:02d}" for i in range(count)]

    def make_prototypes(words):
        protos = {}
        for word in words:
            length = int(rng.integers(frames_per_word[0], frames_per_word[1] + 1))
            protos[word] = rng.normal(size=(length, feature_dim))
        return protos

    shared = make_prototypes(make_words("sh", shared_count))
    lexicons = {
        roles[0]: {**make_prototypes(make_words("dq", exclusive)), **shared},
        roles[1]: {**make_prototypes(make_words("ps", exclusive)), **shared},
    }

    physicians = tuple(f"dr{i:03d}" for i in range(physician_pool))
    patients = tuple(f"pt{i:03d}" for i in range(patient_pool))
    offsets = {}
    for speaker in physicians + patients:
        direction = rng.normal(size=feature_dim)
        direction /= np.linalg.norm(direction)
        offsets[speaker] = speaker_offset_scale * direction

    return GeneratorConfig(
        feature_dim=feature_dim,
        frames_per_word=tuple(frames_per_word),
        words_per_turn=tuple(words_per_turn),
        turns_per_conversation=tuple(turns_per_conversation),
        lexicons=lexicons,
        speaker_offsets=offsets,
        physicians=physicians,
        patients=patients,
        speaker_offset_scale=speaker_offset_scale,
        noise_scale=noise_scale,
        silence_gap=tuple(silence_gap),
        silence_noise_scale=silence_noise_scale,
        role_alternation_prob=role_alternation_prob,
        lexical_overlap=lexical_overlap,
    )


@dataclass(frozen=True)
class Turn:
    role: str
    words: tuple[str, ...]
    word_frames: tuple[int, ...]  # per-word frame counts, for fallback splitting
    start: int
    end: int


@dataclass(frozen=True)
class Conversation:
    conversation_id: str
    physician_id: str
    patient_id: str
    turns: tuple[Turn, ...]
    frames: np.ndarray  # (T, d), float64 holding float32-precision values
    speech_mask: np.ndarray  # (T,) bool


def generate_conversation(config: GeneratorConfig, seed,
                          conversation_id: str = "conv00000") -> Conversation:
    """Sample one conversation; deterministic given (config, seed)."""
    config.validate()
    rng = np.random.default_rng(seed)
    roles = config.roles
    physician = config.physicians[rng.integers(len(config.physicians))]
    patient = config.patients[rng.integers(len(config.patients))]
    speaker_of = {roles[0]: physician, roles[1]: patient}

    n_turns = int(rng.integers(config.turns_per_conversation[0],
                               config.turns_per_conversation[1] + 1))
    role = roles[rng.integers(2)]
    pieces: list[np.ndarray] = []
    turns: list[Turn] = []
    cursor = 0
    for turn_index in range(n_turns):
        lexicon = config.lexicons[role]
        word_list = list(lexicon.keys())
        n_words = int(rng.integers(config.words_per_turn[0],
                                   config.words_per_turn[1] + 1))
        words = tuple(word_list[i] for i in rng.integers(len(word_list), size=n_words))
        protos = [lexicon[w] for w in words]
        turn_frames = np.concatenate(protos, axis=0)
        turn_frames = (turn_frames
                       + config.speaker_offsets[speaker_of[role]]
                       + config.noise_scale * rng.standard_normal(turn_frames.shape))
        start = cursor
        cursor += turn_frames.shape[0]
        turns.append(Turn(role=role, words=words,
                          word_frames=tuple(p.shape[0] for p in protos),
                          start=start, end=cursor))
        pieces.append(turn_frames)
        if turn_index < n_turns - 1:
            gap = int(rng.integers(config.silence_gap[0], config.silence_gap[1] + 1))
            pieces.append(config.silence_noise_scale
                          * rng.standard_normal((gap, config.feature_dim)))
            cursor += gap
            if rng.random() < config.role_alternation_prob:
                role = roles[1] if role == roles[0] else roles[0]

    frames = np.concatenate(pieces, axis=0).astype(np.float32).astype(np.float64)
    mask = np.zeros(frames.shape[0], dtype=bool)
    for turn in turns:
        mask[turn.start:turn.end] = True
    return Conversation(
        conversation_id=conversation_id,
        physician_id=physician,
        patient_id=patient,
        turns=tuple(turns),
        frames=frames,
        speech_mask=mask,
    )


def generate_corpus(config: GeneratorConfig, n_conversations: int,
                    base_seed: int = 0) -> list[Conversation]:
    """Independent per-conversation seeds derived from (base_seed, index)."""
    return [
        generate_conversation(config, [base_seed, index], f"conv{index:05d}")
        for index in range(n_conversations)
    ]


@dataclass(frozen=True)
class Utterance:
    """One training/eval segment: frames plus the (role, words) turns it covers."""

    conversation_id: str
    segment_index: int
    physician_id: str
    patient_id: str
    frames: np.ndarray
    turns: tuple[tuple[str, tuple[str, ...]], ...]
    fallback_split: bool = False


def segment_conversation(conv: Conversation, max_frames: int,
                         allow_fallback: bool = True) -> list[Utterance]:
    """Greedy packing of whole turns into segments of at most `max_frames`.

    Cuts happen only at turn boundaries; silence between packed turns counts
    toward a segment's frame budget. A single turn longer than the cap is
    split at word boundaries instead and every resulting utterance is flagged
    `fallback_split` (or rejected when `allow_fallback` is false).
    """
    utterances: list[Utterance] = []

    def emit(start, end, turns, fallback=False):
        utterances.append(Utterance(
            conversation_id=conv.conversation_id,
            segment_index=len(utterances),
            physician_id=conv.physician_id,
            patient_id=conv.patient_id,
            frames=conv.frames[start:end],
            turns=tuple(turns),
            fallback_split=fallback,
        ))

    group: list[Turn] = []

    def flush_group():
        if group:
            emit(group[0].start, group[-1].end, [(t.role, t.words) for t in group])
            group.clear()

    for turn in conv.turns:
        if turn.end - turn.start > max_frames:
            if not allow_fallback:
                raise ValueError(
                    f"turn of {turn.end - turn.start} frames exceeds the "
                    f"{max_frames}-frame cap and fallback splitting is disabled")
            flush_group()
            for start, end, words in _split_turn(turn, max_frames):
                emit(start, end, [(turn.role, words)], fallback=True)
            continue
        if group and turn.end - group[0].start > max_frames:
            flush_group()
        group.append(turn)
    flush_group()
    return utterances


def _split_turn(turn: Turn, max_frames: int):
    """Word-boundary chunks of an oversized turn, each within the cap."""
    chunks = []
    chunk_words: list[str] = []
    chunk_start = turn.start
    cursor = turn.start
    for word, n_frames in zip(turn.words, turn.word_frames):
        if n_frames > max_frames:
            raise ValueError(
                f"single word {word!r} spans {n_frames} frames, above the cap")
        if cursor + n_frames - chunk_start > max_frames:
            chunks.append((chunk_start, cursor, tuple(chunk_words)))
            chunk_words = []
            chunk_start = cursor
        chunk_words.append(word)
        cursor += n_frames
    chunks.append((chunk_start, cursor, tuple(chunk_words)))
    return chunks


def segment_corpus(conversations: Iterable[Conversation], max_frames: int,
                   allow_fallback: bool = True) -> list[Utterance]:
    out: list[Utterance] = []
    for conv in conversations:
        out.extend(segment_conversation(conv, max_frames, allow_fallback))
    return out


def split_corpus(conversations: Sequence[Conversation], dev_count: int,
                 eval_count: int, seed: int = 0):
    """Partition by physician: no physician appears in two splits.

    `dev_count`/`eval_count` are numbers of held-out physicians; their
    conversations follow them. Patients may overlap splits freely.
    """
    physicians = sorted({c.physician_id for c in conversations})
    if dev_count + eval_count >= len(physicians):
        raise ValueError(
            f"cannot hold out {dev_count}+{eval_count} physicians from a pool "
            f"of {len(physicians)}; no physicians would remain for training")
    order = np.random.default_rng(seed).permutation(len(physicians))
    shuffled = [physicians[i] for i in order]
    dev_ids = set(shuffled[:dev_count])
    eval_ids = set(shuffled[dev_count:dev_count + eval_count])
    train = [c for c in conversations if c.physician_id not in dev_ids | eval_ids]
    dev = [c for c in conversations if c.physician_id in dev_ids]
    evl = [c for c in conversations if c.physician_id in eval_ids]
    return train, dev, evl


def utterance_reference_turns(utterances: Sequence[Utterance]) -> list[tuple[str, tuple[str, ...]]]:
    """Concatenated (role, words) turns of one conversation's ordered segments."""
    turns: list[tuple[str, tuple[str, ...]]] = []
    for utt in sorted(utterances, key=lambda u: u.segment_index):
        turns.extend(utt.turns)
    return turns


def group_by_conversation(utterances: Iterable[Utterance]) -> dict[str, list[Utterance]]:
    grouped: dict[str, list[Utterance]] = {}
    for utt in utterances:
        grouped.setdefault(utt.conversation_id, []).append(utt)
    for utts in grouped.values():
        utts.sort(key=lambda u: u.segment_index)
    return grouped


# ---------------------------------------------------------------------------
# Corpus files: JSON lines, frames inline or in a binary sidecar blob.
# ---------------------------------------------------------------------------


def write_corpus(utterances: Sequence[Utterance], path: str | Path,
                 frames_mode: str = "inline") -> Path:
    """Write one JSON record per utterance.

    `frames_mode="inline"` embeds frames as nested lists; `"blob"` writes them
    to a `<name>.frames.bin` sidecar (per-record header: two uint32 dims, then
    row-major float32 little-endian data) and stores {path, offset} references.
    Both forms load bit-identically because frames carry float32 precision.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if frames_mode not in ("inline", "blob"):
        raise ValueError(f"unknown frames_mode {frames_mode!r}")
    blob_file = None
    blob_name = path.name + ".frames.bin"
    if frames_mode == "blob":
        blob_file = open(path.parent / blob_name, "wb")
    try:
        with open(path, "w", encoding="utf-8") as out:
            for utt in utterances:
                record = {
                    "conversation_id": utt.conversation_id,
                    "segment_index": utt.segment_index,
                    "physician_id": utt.physician_id,
                    "patient_id": utt.patient_id,
                    "turns": [{"role": role, "words": list(words)}
                              for role, words in utt.turns],
                    "fallback_split": utt.fallback_split,
                }
                if frames_mode == "inline":
                    record["frames"] = utt.frames.tolist()
                else:
                    offset = blob_file.tell()
                    rows, cols = utt.frames.shape
                    blob_file.write(struct.pack("<II", rows, cols))
                    blob_file.write(utt.frames.astype("<f4").tobytes())
                    record["frames_ref"] = {"path": blob_name, "offset": offset}
                out.write(json.dumps(record, sort_keys=True) + "\n")
    finally:
        if blob_file is not None:
            blob_file.close()
    return path


def _read_blob_frames(blob_path: Path, offset: int) -> np.ndarray:
    with open(blob_path, "rb") as f:
        f.seek(offset)
        rows, cols = struct.unpack("<II", f.read(8))
        data = np.frombuffer(f.read(rows * cols * 4), dtype="<f4")
    return data.reshape(rows, cols).astype(np.float64)


def read_corpus(path: str | Path) -> list[Utterance]:
    path = Path(path)
    utterances: list[Utterance] = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            record = json.loads(line)
            if "frames" in record:
                frames = np.asarray(record["frames"], dtype=np.float64)
                if frames.ndim != 2:
                    frames = frames.reshape(0, 0)
            elif "frames_ref" in record:
                ref = record["frames_ref"]
                frames = _read_blob_frames(path.parent / ref["path"], ref["offset"])
            else:
                raise ValueError("corpus record has neither frames nor frames_ref")
            utterances.append(Utterance(
                conversation_id=record["conversation_id"],
                segment_index=record["segment_index"],
                physician_id=record["physician_id"],
                patient_id=record["patient_id"],
                frames=frames,
                turns=tuple((t["role"], tuple(t["words"])) for t in record["turns"]),
                fallback_split=record["fallback_split"],
            ))
    return utterances


def with_zero_acoustic_offsets(config: GeneratorConfig) -> GeneratorConfig:
    """Ablation helper: identical config but no per-speaker acoustic cue."""
    return replace(
        config,
        speaker_offset_scale=0.0,
        speaker_offsets={k: np.zeros_like(v) for k, v in config.speaker_offsets.items()},
    )
