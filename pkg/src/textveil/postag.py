"""Coarse part-of-speech tagging for the substitution POS check.

The attack only needs to know whether a candidate changes the word class
of the edited slot, so the tagset is deliberately coarse: NOUN, VERB,
ADJ, ADV, OTHER.  The default tagger combines a small closed-class
lexicon with suffix rules and is fully deterministic; anything smarter
can be plugged in through the same `tag(surfaces, index)` interface.
"""
from __future__ import annotations

from typing import Protocol, Sequence

NOUN = "NOUN"
VERB = "VERB"
ADJ = "ADJ"
ADV = "ADV"
OTHER = "OTHER"

TAGSET = frozenset({NOUN, VERB, ADJ, ADV, OTHER})


class Tagger(Protocol):
    def tag(self, surfaces: Sequence[str], index: int) -> str:
        """Tag of the token at `index` given the full token context."""


_LEXICON: dict[str, str] = {}

_NOUNS = """
man woman girl boy guy dude friend mom dad baby kid people person time day
night week year morning thing stuff work school home house life world game
music song movie food coffee dog cat car phone day birthday party weekend
love heart hair shoe dress football team win loss photo pic tweet
""".split()

_VERBS = """
be is are was were am been being have has had do does did go goes went gone
get got make made say said see saw know knew think thought take took come
came want wanted look looked use used find found give gave tell told feel
felt leave left call called need needed love hate watch play run eat sleep
wait miss wish hope thank follow
""".split()

_ADJS = """
good bad great best worst new old big small little happy sad funny cute hot
cold nice sweet cool real free long short high low right wrong true early
late young beautiful amazing awesome tired sick crazy bored proud
""".split()

_ADVS = """
not never always really very too also just still even again soon now then
here there today tomorrow tonight yesterday maybe probably definitely
actually finally almost already
""".split()

for _w in _NOUNS:
    _LEXICON[_w] = NOUN
for _w in _VERBS:
    _LEXICON[_w] = VERB
for _w in _ADJS:
    _LEXICON[_w] = ADJ
for _w in _ADVS:
    _LEXICON[_w] = ADV

# Longest suffix wins; checked only for words of at least suffix length + 2.
_SUFFIX_RULES: list[tuple[str, str]] = [
    ("ically", ADV),
    ("ness", NOUN),
    ("ment", NOUN),
    ("tion", NOUN),
    ("sion", NOUN),
    ("ship", NOUN),
    ("ity", NOUN),
    ("ism", NOUN),
    ("ist", NOUN),
    ("ing", VERB),
    ("ize", VERB),
    ("ise", VERB),
    ("ate", VERB),
    ("ed", VERB),
    ("ly", ADV),
    ("ous", ADJ),
    ("ful", ADJ),
    ("less", ADJ),
    ("able", ADJ),
    ("ible", ADJ),
    ("ive", ADJ),
    ("ish", ADJ),
    ("al", ADJ),
]


class LexiconSuffixTagger:
    """Lexicon lookup first, then suffix rules, else OTHER.

    Context-free: the index argument is accepted for interface parity but
    a word gets the same tag wherever it appears.
    """

    def __init__(self, extra_lexicon: dict[str, str] | None = None) -> None:
        self._lexicon = dict(_LEXICON)
        if extra_lexicon:
            for word, tag in extra_lexicon.items():
                if tag not in TAGSET:
                    raise ValueError(f"unknown tag {tag!r} for {word!r}")
                self._lexicon[word] = tag

    def tag(self, surfaces: Sequence[str], index: int) -> str:
        word = surfaces[index]
        if not word or not word[0].isalpha():
            return OTHER
        hit = self._lexicon.get(word)
        if hit is not None:
            return hit
        for suffix, tag in sorted(_SUFFIX_RULES, key=lambda r: -len(r[0])):
            if len(word) >= len(suffix) + 2 and word.endswith(suffix):
                return tag
        return OTHER
