import pytest
from hypothesis import given, strategies as st

from rolescribe.vocab import (
    BLANK_TOKEN,
    DEFAULT_ROLES,
    UNKNOWN_TOKEN,
    DecoratedTranscript,
    build_vocab,
    load_vocab,
    parse_decorated,
    save_vocab,
    strip_role_tokens,
    tokenize_turns,
)

FIG_TURNS = [
    ("<spk:pt>", ["hello", "dr", "jekyll"]),
    ("<spk:dr>", ["hello", "mr", "hyde", "what", "brings", "you", "here", "today"]),
    ("<spk:pt>", ["i", "am", "struggling", "again", "with", "my", "bipolar", "disorder"]),
]


@pytest.fixture
def vocab():
    return build_vocab(FIG_TURNS)


class TestBuildVocab:
    def test_reserved_layout(self, vocab):
        assert vocab.tokens[0] == BLANK_TOKEN
        assert vocab.id_of("<spk:dr>") == 1
        assert vocab.id_of("<spk:pt>") == 2
        assert vocab.id_of(UNKNOWN_TOKEN) == 3

    def test_roles_present_with_stable_ids(self, vocab):
        again = build_vocab(FIG_TURNS)
        assert again.tokens == vocab.tokens
        for role in DEFAULT_ROLES:
            assert role in vocab.tokens

    def test_frequency_then_alphabetical(self):
        turns = [("<spk:dr>", ["b", "b", "c", "a", "a"])]
        v = build_vocab(turns)
        # a and b tie at 2, a wins alphabetically; c trails with 1
        assert v.id_of("a") < v.id_of("b") < v.id_of("c")

    def test_max_size_caps_word_units(self):
        turns = [("<spk:dr>", ["a", "b", "c", "d", "a"])]
        v = build_vocab(turns, max_size=2)
        assert len(v) == 1 + 2 + 1 + 2
        assert v.word_id("d") == v.unknown_id

    def test_role_collision_rejected(self):
        with pytest.raises(ValueError):
            build_vocab([("<spk:dr>", ["<spk:pt>", "x"])])

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            build_vocab([])


class TestTokenizeTurns:
    def test_fig2_stream(self, vocab):
        ids = tokenize_turns(FIG_TURNS, vocab)
        tokens = [vocab.token_of(i) for i in ids]
        assert tokens[:4] == ["hello", "dr", "jekyll", "<spk:pt>"]
        assert tokens[12] == "<spk:dr>"
        assert tokens[-1] == "<spk:pt>"
        # one role token per turn
        assert sum(vocab.is_role_id(i) for i in ids) == len(FIG_TURNS)

    def test_empty_turn_list(self, vocab):
        assert tokenize_turns([], vocab) == []

    def test_empty_turn_emits_bare_role(self, vocab):
        ids = tokenize_turns([("<spk:dr>", [])], vocab)
        assert ids == [vocab.id_of("<spk:dr>")]

    def test_oov_word_maps_to_unknown(self, vocab):
        ids = tokenize_turns([("<spk:pt>", ["hello", "zzz-not-a-word"])], vocab)
        assert ids == [vocab.id_of("hello"), vocab.unknown_id, vocab.id_of("<spk:pt>")]

    def test_never_emits_blank(self, vocab):
        ids = tokenize_turns(FIG_TURNS, vocab)
        assert vocab.blank_id not in ids

    def test_unknown_role_rejected(self, vocab):
        with pytest.raises(ValueError):
            tokenize_turns([("<spk:nurse>", ["hi"])], vocab)


class TestParseDecorated:
    def test_fig2_roles(self, vocab):
        transcript = parse_decorated(tokenize_turns(FIG_TURNS, vocab), vocab)
        expected = [(w, role) for role, ws in FIG_TURNS for w in ws]
        assert [(w.word, w.role) for w in transcript.words] == expected

    def test_empty_stream(self, vocab):
        assert parse_decorated([], vocab) == DecoratedTranscript(())

    def test_trailing_words_inherit_last_role(self, vocab):
        ids = [vocab.id_of("hello"), vocab.id_of("<spk:dr>"), vocab.id_of("today")]
        transcript = parse_decorated(ids, vocab)
        assert [(w.word, w.role) for w in transcript.words] == [
            ("hello", "<spk:dr>"), ("today", "<spk:dr>")]

    def test_no_role_token_leaves_roles_unknown(self, vocab):
        transcript = parse_decorated([vocab.id_of("hello")], vocab)
        assert transcript.words[0].role is None

    def test_blank_rejected(self, vocab):
        with pytest.raises(ValueError):
            parse_decorated([vocab.blank_id], vocab)

    def test_role_token_count_equals_turns(self, vocab):
        ids = tokenize_turns(FIG_TURNS, vocab)
        assert sum(vocab.is_role_id(i) for i in ids) == 3

    @given(st.lists(
        st.tuples(
            st.sampled_from(DEFAULT_ROLES),
            st.lists(st.sampled_from(sorted({w for _, ws in FIG_TURNS for w in ws})),
                     min_size=1, max_size=5),
        ),
        min_size=0, max_size=6))
    def test_round_trip(self, turns):
        v = build_vocab(FIG_TURNS)
        parsed = parse_decorated(tokenize_turns(turns, v), v)
        flat = [(w, role) for role, ws in turns for w in ws]
        assert [(w.word, w.role) for w in parsed.words] == flat


class TestStripRoles:
    def test_strip(self, vocab):
        ids = tokenize_turns(FIG_TURNS, vocab)
        stripped = strip_role_tokens(ids, vocab)
        assert all(not vocab.is_role_id(i) for i in stripped)
        assert len(stripped) == len(ids) - 3


class TestVocabFile:
    def test_round_trip(self, vocab, tmp_path):
        path = tmp_path / "vocab.txt"
        save_vocab(vocab, path)
        loaded = load_vocab(path)
        assert loaded.tokens == vocab.tokens
        assert loaded.roles == vocab.roles
        assert path.read_text().splitlines()[0] == BLANK_TOKEN

    def test_bad_first_line_rejected(self, tmp_path):
        path = tmp_path / "vocab.txt"
        path.write_text("<spk:dr>\n<blank>\n")
        with pytest.raises(ValueError):
            load_vocab(path)
