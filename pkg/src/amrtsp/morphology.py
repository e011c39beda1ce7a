"""Lexicon-free English inflection used for concept rules."""
import re

_SENSE = re.compile(r"-\d+$")
_VOWELS = set("aeiou")


def lemma(concept: str) -> str:
    """Strip the PropBank sense suffix: ``want-01`` -> ``want``."""
    return _SENSE.sub("", concept)


def _is_consonant(ch: str) -> bool:
    return ch.isalpha() and ch not in _VOWELS


def _doubles_final(word: str) -> bool:
    # stop -> stopped, run -> running; open / visit keep a single consonant
    if len(word) < 3 or not word.isalpha():
        return False
    a, b, c = word[-3:]
    if not (_is_consonant(a) and b in _VOWELS and _is_consonant(c)) or c in "wxy":
        return False
    return len(re.findall(r"[aeiou]+", word)) == 1


def plural(word: str) -> str:
    if len(word) > 1 and word.endswith("y") and _is_consonant(word[-2]):
        return word[:-1] + "ies"
    if word.endswith(("s", "x", "z", "ch", "sh")):
        return word + "es"
    if len(word) > 1 and word.endswith("o") and _is_consonant(word[-2]):
        return word + "es"
    return word + "s"


def past(word: str) -> str:
    if word.endswith("e"):
        return word + "d"
    if len(word) > 1 and word.endswith("y") and _is_consonant(word[-2]):
        return word[:-1] + "ied"
    if _doubles_final(word):
        return word + word[-1] + "ed"
    return word + "ed"


def gerund(word: str) -> str:
    if word.endswith("ie"):
        return word[:-2] + "ying"
    if word.endswith("e") and not word.endswith(("ee", "ye", "oe")) and len(word) > 2:
        return word[:-1] + "ing"
    if _doubles_final(word):
        return word + word[-1] + "ing"
    return word + "ing"


def variants(concept: str) -> list:
    """Surface forms for a concept, plain lemma first, duplicates removed.

    Sense-tagged predicates (``want-01``) get plain/-s/-ed/-ing forms; other
    concepts are treated as nouns and only get plain and plural forms.
    """
    base = lemma(concept)
    if not base or not base[-1].isalpha():
        return [base] if base else [concept]
    if base == concept:
        forms = (base, plural(base))
    else:
        forms = (base, plural(base), past(base), gerund(base))
    out = []
    for form in forms:
        if form not in out:
            out.append(form)
    return out
