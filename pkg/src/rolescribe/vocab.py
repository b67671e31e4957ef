"""Output symbol inventory with speaker-role tokens, and role-decorated transcripts.

Transcript layout follows the training-target convention: the words of each
speaker turn are followed by that turn's role token, so a word's speaker is
the role of the *next* role token in the stream. Blank (id 0) is reserved for
the transducer and never appears in targets or parses.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

BLANK_TOKEN = "<blank>"
UNKNOWN_TOKEN = "<unk>"
DEFAULT_ROLES = ("<spk:dr>", "<spk:pt>")


@dataclass(frozen=True)
class Vocabulary:
    """Immutable id <-> token table: blank, role tokens, unknown, then word units."""

    tokens: tuple[str, ...]
    roles: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.tokens or self.tokens[0] != BLANK_TOKEN:
            raise ValueError(f"token 0 must be the blank token {BLANK_TOKEN!r}")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")
        for role in self.roles:
            if role not in self.tokens:
                raise ValueError(f"role token {role!r} missing from vocabulary")
        object.__setattr__(self, "_index", {tok: i for i, tok in enumerate(self.tokens)})

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def blank_id(self) -> int:
        return 0

    @property
    def unknown_id(self) -> int:
        return self._index[UNKNOWN_TOKEN]

    @property
    def role_ids(self) -> tuple[int, ...]:
        return tuple(self._index[r] for r in self.roles)

    def id_of(self, token: str) -> int:
        return self._index[token]

    def word_id(self, word: str) -> int:
        """Id of a word unit; out-of-vocabulary words map to the unknown id."""
        idx = self._index.get(word)
        if idx is None or idx == 0 or self.tokens[idx] in self.roles:
            return self.unknown_id
        return idx

    def token_of(self, token_id: int) -> str:
        return self.tokens[token_id]

    def is_role_id(self, token_id: int) -> bool:
        return self.tokens[token_id] in self.roles if 0 <= token_id < len(self.tokens) else False


@dataclass(frozen=True)
class Word:
    """One transcript entry; role None marks an unknown speaker. Times are
    frame indices, half-open, present only when the producer knows them."""

    word: str
    role: str | None = None
    start: int | None = None
    end: int | None = None


@dataclass(frozen=True)
class DecoratedTranscript:
    words: tuple[Word, ...]

    def __len__(self) -> int:
        return len(self.words)

    def word_strings(self) -> list[str]:
        return [w.word for w in self.words]

    def roles(self) -> list[str | None]:
        return [w.role for w in self.words]

    def without_roles(self) -> "DecoratedTranscript":
        return DecoratedTranscript(tuple(replace(w, role=None) for w in self.words))


def transcript_from_turns(turns: Sequence[tuple[str, Sequence[str]]]) -> DecoratedTranscript:
    """Flatten (role, words) turns into a decorated transcript (no times)."""
    words = []
    for role, turn_words in turns:
        words.extend(Word(word=w, role=role) for w in turn_words)
    return DecoratedTranscript(tuple(words))


def build_vocab(turns: Iterable[tuple[str, Sequence[str]]],
                roles: Sequence[str] = DEFAULT_ROLES,
                max_size: int | None = None) -> Vocabulary:
    """Frequency-ranked word-unit vocabulary plus the reserved symbols.

    `turns` is any iterable of (role, words) pairs; `max_size` caps the number
    of word units (not counting blank/roles/unknown). Ties in frequency break
    alphabetically so ids are reproducible.
    """
    roles = tuple(roles)
    counts: Counter[str] = Counter()
    n_turns = 0
    for _, words in turns:
        n_turns += 1
        counts.update(words)
    if n_turns == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    specials = {BLANK_TOKEN, UNKNOWN_TOKEN, *roles}
    collisions = specials.intersection(counts)
    if collisions:
        raise ValueError(f"corpus words collide with reserved tokens: {sorted(collisions)}")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    if max_size is not None:
        ranked = ranked[:max_size]
    tokens = (BLANK_TOKEN, *roles, UNKNOWN_TOKEN, *(w for w, _ in ranked))
    return Vocabulary(tokens=tokens, roles=roles)


def tokenize_turns(turns: Sequence[tuple[str, Sequence[str]]],
                   vocab: Vocabulary) -> list[int]:
    """Target token ids: each turn's word ids followed by its role token id.

    An empty turn legally contributes a bare role token. Blank is never
    emitted; unknown words map to the unknown id.
    """
    out: list[int] = []
    for role, words in turns:
        if role not in vocab.roles:
            raise ValueError(f"turn role {role!r} not in vocabulary roles {vocab.roles}")
        out.extend(vocab.word_id(w) for w in words)
        out.append(vocab.id_of(role))
    return out


def strip_role_tokens(token_ids: Sequence[int], vocab: Vocabulary) -> list[int]:
    return [t for t in token_ids if not vocab.is_role_id(t)]


def parse_decorated(token_ids: Sequence[int], vocab: Vocabulary) -> DecoratedTranscript:
    """Recover (word, role) entries from a blank-free token stream.

    Each word takes the role of the next role token; words after the final
    role token inherit the last seen role, or stay unknown (None) if the
    stream has no role token at all.
    """
    pending: list[str] = []
    words: list[Word] = []
    last_role: str | None = None
    for token_id in token_ids:
        if token_id == vocab.blank_id:
            raise ValueError("blank id in a decorated token stream")
        token = vocab.token_of(token_id)
        if vocab.is_role_id(token_id):
            words.extend(Word(word=w, role=token) for w in pending)
            pending.clear()
            last_role = token
        else:
            pending.append(token)
    words.extend(Word(word=w, role=last_role) for w in pending)
    return DecoratedTranscript(tuple(words))


def save_vocab(vocab: Vocabulary, path: str | Path) -> None:
    """One token per line; the 0-based line number is the token id."""
    Path(path).write_text("\n".join(vocab.tokens) + "\n", encoding="utf-8")


def load_vocab(path: str | Path, roles: Sequence[str] | None = None) -> Vocabulary:
    """Inverse of save_vocab. Roles default to the tokens between blank and <unk>."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != BLANK_TOKEN:
        raise ValueError(f"vocabulary file must start with {BLANK_TOKEN!r} on line 0")
    if roles is None:
        try:
            unk_pos = lines.index(UNKNOWN_TOKEN)
        except ValueError:
            raise ValueError(f"vocabulary file lacks the {UNKNOWN_TOKEN!r} token") from None
        roles = lines[1:unk_pos]
    return Vocabulary(tokens=tuple(lines), roles=tuple(roles))
