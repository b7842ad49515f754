"""Lemmatizer rules, snapshot loading, and retrieval contracts."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lexmatch.knowledge import (
    DictionaryFormatError,
    DictionaryStore,
    Lemmatizer,
    build_pair_knowledge,
    load_dictionary,
    retrieve,
    tokenize,
)

SING_DEF = "To produce musical or harmonious sounds with one’s voice"


class TestLemmatizer:
    def setup_method(self):
        self.lem = Lemmatizer()

    @pytest.mark.parametrize(
        "token,lemma",
        [
            ("singing", "sing"),
            ("sing", "sing"),
            ("Dogs", "dog"),
            ("riding", "ride"),
            ("waves", "wave"),
            ("holding", "hold"),
            ("men", "man"),
            ("was", "be"),
            ("running", "run"),
            ("parties", "party"),
            ("boxes", "box"),
            ("classes", "class"),
            ("GRASS", "grass"),
        ],
    )
    def test_known_forms(self, token, lemma):
        assert self.lem.lemmatize(token) == lemma

    def test_empty_token_rejected(self):
        with pytest.raises(ValueError):
            self.lem.lemmatize("")

    def test_output_is_lowercase(self):
        assert self.lem.lemmatize("Saxophone") == "saxophone"

    @given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=12))
    @settings(max_examples=300, deadline=None)
    def test_idempotent_on_random_words(self, word):
        once = self.lem.lemmatize(word)
        assert self.lem.lemmatize(once) == once

    def test_idempotent_on_fixture_lemmas(self, dictionary):
        for lemma in dictionary.entries:
            assert self.lem.lemmatize(lemma) == lemma, lemma


class TestLoadDictionary:
    def test_golden_sing_entry(self, tmp_path):
        path = tmp_path / "dict.jsonl"
        path.write_text(
            json.dumps({"lemma": "sing", "defs": [SING_DEF]}, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        store = load_dictionary(str(path))
        assert store.lookup("sing")[0] == SING_DEF

    def test_empty_file_gives_empty_store(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("", encoding="utf-8")
        store = load_dictionary(str(path))
        assert len(store) == 0
        assert store.lookup("anything") is None

    def test_duplicate_lemma_lines_append_in_order(self, tmp_path):
        path = tmp_path / "dup.jsonl"
        path.write_text(
            json.dumps({"lemma": "bass", "defs": ["a fish"]})
            + "\n"
            + json.dumps({"lemma": "bass", "defs": ["a low sound"]})
            + "\n",
            encoding="utf-8",
        )
        store = load_dictionary(str(path))
        assert store.lookup("bass") == ["a fish", "a low sound"]
        assert store.first_definition("bass") == "a fish"

    def test_malformed_line_reports_line_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"lemma": "ok", "defs": ["x"]}\nnot json\n', encoding="utf-8")
        with pytest.raises(DictionaryFormatError, match=":2:"):
            load_dictionary(str(path))

    def test_empty_defs_rejected(self, tmp_path):
        path = tmp_path / "bad2.jsonl"
        path.write_text('{"lemma": "ok", "defs": []}\n', encoding="utf-8")
        with pytest.raises(DictionaryFormatError, match=":1:"):
            load_dictionary(str(path))

    def test_missing_file(self):
        with pytest.raises(OSError):
            load_dictionary("/nonexistent/dict.jsonl")

    def test_comment_lines_skipped(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('# header\n{"lemma": "a", "defs": ["x"]}\n', encoding="utf-8")
        assert len(load_dictionary(str(path))) == 1


class TestRetrieve:
    def test_sing_definition_from_fixture(self, dictionary):
        kt = retrieve(tokenize("The man is singing"), dictionary)
        assert SING_DEF in kt.text

    def test_saxophone_definition_from_fixture(self, dictionary):
        kt = retrieve(["man", "holding", "saxophone"], dictionary)
        assert (
            "A single-reed instrument musical instrument of the woodwind family,"
            " usually made of brass and with a distinctive loop bringing the"
            " bell upwards." in kt.text
        )

    def test_unknown_tokens_give_empty_text(self, dictionary):
        kt = retrieve(["qqqzz", "wwwxx"], dictionary)
        assert kt.text == ""
        assert kt.definitions == [None, None]

    def test_empty_token_list_rejected(self, dictionary):
        with pytest.raises(ValueError):
            retrieve([], dictionary)

    def test_all_found_without_stopword_filtering(self):
        store = DictionaryStore({"cat": ["a cat."], "dog": ["a dog."]})
        kt = retrieve(["cat", "dog", "cat"], store, stopwords=frozenset())
        # one definition per token occurrence, duplicates included
        assert kt.definitions == ["a cat.", "a dog.", "a cat."]
        assert kt.text == "a cat. a dog. a cat."

    def test_first_definition_only(self):
        store = DictionaryStore({"bass": ["a fish", "a low sound"]})
        kt = retrieve(["bass"], store, stopwords=frozenset())
        assert kt.text == "a fish"

    def test_definitions_in_source_order_single_spaced(self):
        store = DictionaryStore({"a1": ["first."], "b2": ["second."]})
        kt = retrieve(["a1", "b2"], store, stopwords=frozenset())
        assert kt.text == "first. second."

    def test_truncation_at_max_tokens(self):
        store = DictionaryStore({"w": ["word " * 99]})
        kt = retrieve(["w", "w"], store, stopwords=frozenset(), max_tokens=128)
        assert len(kt.text.split(" ")) == 128

    def test_pure_function(self, dictionary):
        tokens = tokenize("the girl is riding waves")
        a = retrieve(tokens, dictionary)
        b = retrieve(tokens, dictionary)
        assert a.text == b.text and a.definitions == b.definitions

    def test_every_definition_exists_in_store(self, dictionary):
        kt = retrieve(tokenize("the woman is playing a guitar near the sea"),
                      dictionary)
        flat = [d for ds in dictionary.entries.values() for d in ds]
        for definition in kt.definitions:
            if definition is not None:
                assert definition in flat


class TestPairKnowledge:
    def test_identical_sentences_identical_texts(self, dictionary):
        tokens = tokenize("the man is holding a saxophone")
        ka, kb = build_pair_knowledge(tokens, tokens, dictionary)
        assert ka.text == kb.text

    def test_swapping_sides_swaps_outputs(self, dictionary):
        a = tokenize("the man is holding a saxophone")
        b = tokenize("the man is holding an instrument")
        ka, kb = build_pair_knowledge(a, b, dictionary)
        ka2, kb2 = build_pair_knowledge(b, a, dictionary)
        assert ka.text == kb2.text and kb.text == ka2.text

    def test_showcase_pair_reproduces_both_definitions(self, dictionary):
        ka, kb = build_pair_knowledge(
            tokenize("The man is holding a saxophone"),
            tokenize("The man is holding an instrument"),
            dictionary,
        )
        assert "A single-reed instrument musical instrument" in ka.text
        assert "A device used to produce music." in kb.text


class TestTokenize:
    def test_lowercase_and_punctuation_split(self):
        assert tokenize("The man, smiling!") == ["the", "man", ",", "smiling", "!"]

    def test_apostrophes_stay_in_word(self):
        assert tokenize("one’s voice") == ["one’s", "voice"]
