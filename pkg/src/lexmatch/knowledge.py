"""Dictionary-definition retrieval.

Each content word of a sentence is lemmatized by a deterministic rule table,
looked up in a local dictionary snapshot, and its first definition spliced
into a knowledge text. No external taggers or network calls.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass


class DictionaryFormatError(ValueError):
    """A snapshot line could not be parsed; carries the 1-based line number."""

    def __init__(self, path: str, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.line_no = line_no


_TOKEN_RE = re.compile(r"[a-z0-9]+(?:['’][a-z]+)?|[^\sa-z0-9]")


def tokenize(text: str) -> list[str]:
    """Lowercased whitespace/punctuation tokenizer; apostrophes stay in-word."""
    return _TOKEN_RE.findall(text.lower())


# Small default stopword list; pass stopwords=frozenset() to look up every word.
DEFAULT_STOPWORDS = frozenset(
    """a an the is are was were be been being am do does did to of in on at by
    for with and or but not no this that these those it its his her their our
    your my me him them they we you i he she as so if then than there here"""
    .split()
)


_VOWELS = set("aeiouy")


def _has_vowel(stem: str) -> bool:
    return any(ch in _VOWELS for ch in stem)


# Irregular form -> lemma, consulted before any suffix rule.
EXCEPTIONS: dict[str, str] = {
    "is": "be", "are": "be", "was": "be", "were": "be", "been": "be", "am": "be",
    "has": "have", "had": "have", "having": "have",
    "does": "do", "did": "do", "done": "do",
    "goes": "go", "went": "go", "gone": "go",
    "men": "man", "women": "woman", "children": "child", "people": "person",
    "feet": "foot", "teeth": "tooth", "mice": "mouse", "geese": "goose",
    "wolves": "wolf", "leaves": "leaf", "knives": "knife", "lives": "life",
    "better": "good", "best": "good", "worse": "bad", "worst": "bad",
    "ran": "run", "sang": "sing", "sung": "sing", "rode": "ride", "ridden": "ride",
    "held": "hold", "wore": "wear", "worn": "wear", "saw": "see", "seen": "see",
    "made": "make", "said": "say", "got": "get", "gotten": "get",
    "took": "take", "taken": "take", "gave": "give", "given": "give",
    "stood": "stand", "sat": "sit", "left": "leave", "ate": "eat", "eaten": "eat",
    "flew": "fly", "grew": "grow", "grown": "grow", "came": "come",
    "brought": "bring", "bought": "buy", "caught": "catch", "taught": "teach",
    "used": "use", "using": "use",
    "this": "this", "his": "his", "as": "as", "its": "its", "us": "us",
    # -ing nouns that are already lemmas
    "morning": "morning", "evening": "evening", "spring": "spring",
    "during": "during", "something": "something", "nothing": "nothing",
    "anything": "anything", "everything": "everything", "string": "string",
}

# Ordered (suffix, replacement, min_stem_length). The stem is the part before
# the suffix; a rule fires only when the stem is long enough and contains a
# vowel. Identity rules guard shorter generic rules below them.
SUFFIX_RULES: list[tuple[str, str, int]] = [
    # -ing with doubled final consonant: running -> run
    ("bbing", "b", 2), ("dding", "d", 2), ("gging", "g", 2), ("mming", "m", 2),
    ("nning", "n", 2), ("pping", "p", 2), ("rring", "r", 2), ("tting", "t", 2),
    # -ing needing a restored final e: riding -> ride, making -> make
    ("ssing", "ss", 2),
    ("aking", "ake", 1), ("iding", "ide", 1), ("ving", "ve", 2),
    ("sing", "se", 2), ("cing", "ce", 2), ("zing", "ze", 2), ("uing", "ue", 2),
    ("ing", "", 3),
    # past tense
    ("bbed", "b", 2), ("dded", "d", 2), ("gged", "g", 2), ("mmed", "m", 2),
    ("nned", "n", 2), ("pped", "p", 2), ("rred", "r", 2), ("tted", "t", 2),
    ("ssed", "ss", 2),
    ("ied", "y", 2), ("ved", "ve", 2), ("sed", "se", 2), ("ced", "ce", 2),
    ("zed", "ze", 2), ("ued", "ue", 2),
    ("ed", "", 3),
    # plurals / third person
    ("sses", "ss", 2), ("ies", "y", 2), ("xes", "x", 2), ("ches", "ch", 2),
    ("shes", "sh", 2), ("oes", "o", 2),
    ("ss", "ss", 1), ("us", "us", 1), ("is", "is", 1),
    ("es", "e", 3),
    ("s", "", 3),
]


class Lemmatizer:
    """Exception map first, then the first matching suffix rule, else the
    lowercased token unchanged. Output is lowercase and idempotent."""

    def __init__(
        self,
        exceptions: dict[str, str] | None = None,
        rules: list[tuple[str, str, int]] | None = None,
    ):
        self.exceptions = EXCEPTIONS if exceptions is None else exceptions
        self.rules = SUFFIX_RULES if rules is None else rules

    def lemmatize(self, token: str) -> str:
        if not token:
            raise ValueError("cannot lemmatize an empty token")
        word = token.lower()
        if word in self.exceptions:
            return self.exceptions[word]
        for suffix, replacement, min_stem in self.rules:
            if word.endswith(suffix):
                stem = word[: len(word) - len(suffix)]
                candidate = stem + replacement
                # Guard: long enough stem and a pronounceable result; a rule
                # whose guard fails falls through to less specific rules.
                if len(stem) >= min_stem and _has_vowel(candidate):
                    return candidate
        return word


@dataclass
class DictionaryStore:
    """Immutable lemma -> ordered definition list; concurrent reads are safe."""

    entries: dict[str, list[str]]

    def lookup(self, lemma: str) -> list[str] | None:
        return self.entries.get(lemma)

    def first_definition(self, lemma: str) -> str | None:
        defs = self.entries.get(lemma)
        return defs[0] if defs else None

    def __len__(self) -> int:
        return len(self.entries)


def load_dictionary(path: str) -> DictionaryStore:
    """Load a snapshot: one JSON object {"lemma": ..., "defs": [...]} per line.

    Lines starting with '#' are ignored; duplicate lemma lines append their
    definitions in file order.
    """
    entries: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                record = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise DictionaryFormatError(path, line_no, f"bad JSON: {exc}") from exc
            if (
                not isinstance(record, dict)
                or not isinstance(record.get("lemma"), str)
                or not isinstance(record.get("defs"), list)
                or not record["defs"]
                or not all(isinstance(d, str) for d in record["defs"])
            ):
                raise DictionaryFormatError(
                    path, line_no, 'expected {"lemma": str, "defs": [str, ...]}'
                )
            entries.setdefault(record["lemma"].lower(), []).extend(record["defs"])
    return DictionaryStore(entries)


@dataclass
class KnowledgeText:
    """Per-token retrieval trace plus the spliced definition text."""

    tokens: list[str]
    lemmas: list[str]
    definitions: list[str | None]
    text: str


# Splice length cap, in whitespace tokens, matching the model's input limit.
MAX_KNOWLEDGE_TOKENS = 128


def retrieve(
    tokens: list[str],
    store: DictionaryStore,
    lemmatizer: Lemmatizer | None = None,
    stopwords: frozenset[str] = DEFAULT_STOPWORDS,
    max_tokens: int = MAX_KNOWLEDGE_TOKENS,
) -> KnowledgeText:
    """Look up the first definition of each token's lemma and splice them
    together in source order. Stopwords and missing entries contribute
    nothing; duplicate tokens contribute once per occurrence.
    """
    if not tokens:
        raise ValueError("retrieve needs a nonempty token list")
    lem = lemmatizer or Lemmatizer()
    lemmas: list[str] = []
    definitions: list[str | None] = []
    for token in tokens:
        lemma = lem.lemmatize(token)
        lemmas.append(lemma)
        if token.lower() in stopwords or lemma in stopwords:
            definitions.append(None)
            continue
        definitions.append(store.first_definition(lemma))
    text = " ".join(d for d in definitions if d is not None)
    words = text.split(" ")
    if len(words) > max_tokens:
        text = " ".join(words[:max_tokens])
    return KnowledgeText(list(tokens), lemmas, definitions, text)


def build_pair_knowledge(
    a: list[str],
    b: list[str],
    store: DictionaryStore,
    lemmatizer: Lemmatizer | None = None,
    stopwords: frozenset[str] = DEFAULT_STOPWORDS,
) -> tuple[KnowledgeText, KnowledgeText]:
    """Retrieve knowledge texts for both sides of a pair, independently."""
    lem = lemmatizer or Lemmatizer()
    ka = retrieve(a, store, lem, stopwords)
    kb = retrieve(b, store, lem, stopwords)
    return ka, kb
