"""Word-category scoring over a pluggable lexicon, and linear trait derivation.

The shipped lexicon (data/default_lexicon.txt) defines 68 word categories with
small illustrative term lists; the shipped trait map (data/default_traits.json)
linearly combines category scores into 5 broad personality dimensions plus 30
facets. Both are non-normative stand-ins: swap in your own files for serious
use. Lexicon format, one category per line:

    # comment
    name: term, term, prefix*

A trailing ``*`` makes a term match any token with that prefix.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import EmptyCategory, MalformedLexicon, MalformedMapping, UnknownCategory

BIG5 = ("openness", "conscientiousness", "extraversion", "agreeableness", "neuroticism")
FACET_COUNT = 30

_TOKEN_RE = re.compile(r"[@#]?\w+(?:'\w+)*", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase tokens split on non-alphanumerics, keeping @/# prefixes and
    internal apostrophes."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Lexicon:
    """Immutable category -> terms map with compiled prefix patterns."""

    names: tuple[str, ...]
    literals: tuple[frozenset[str], ...]
    prefixes: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        # token -> tuple of category indices, filled lazily; a plain dict is
        # fine under the GIL and keeps repeated scoring cheap
        object.__setattr__(self, "_match_cache", {})

    @property
    def category_count(self) -> int:
        return len(self.names)

    def terms(self, name: str) -> set[str]:
        i = self.names.index(name)
        return set(self.literals[i]) | {p + "*" for p in self.prefixes[i]}

    def categories_for(self, token: str) -> tuple[int, ...]:
        """Indices of the categories the token belongs to."""
        cache: dict = self._match_cache  # type: ignore[attr-defined]
        hit = cache.get(token)
        if hit is not None:
            return hit
        out = []
        for i in range(len(self.names)):
            if token in self.literals[i] or any(token.startswith(p) for p in self.prefixes[i]):
                out.append(i)
        cache[token] = tuple(out)
        return cache[token]


@dataclass(frozen=True)
class CategoryScores:
    scores: dict[str, float]
    token_total: int


@dataclass(frozen=True)
class TraitScores:
    big5: dict[str, float]
    facets: dict[str, float]


@dataclass(frozen=True)
class TraitMapping:
    """Per-output intercept and category weights, outputs in file order."""

    names: tuple[str, ...]
    intercepts: tuple[float, ...]
    weights: tuple[dict[str, float], ...]

    def referenced_categories(self) -> set[str]:
        out: set[str] = set()
        for w in self.weights:
            out.update(w)
        return out


def load_lexicon(path: str | Path) -> Lexicon:
    """Parse a lexicon file; duplicate (category, term) pairs are dropped and
    repeated category lines merge into one category."""
    path = Path(path)
    order: list[str] = []
    lits: dict[str, set[str]] = {}
    prefs: dict[str, set[str]] = {}
    with path.open("r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise MalformedLexicon(line_no, "expected 'name: term, term, ...'")
            name, _, rest = line.partition(":")
            name = name.strip()
            if not name:
                raise MalformedLexicon(line_no, "empty category name")
            terms = [t.strip().lower() for t in rest.split(",") if t.strip()]
            if name not in lits:
                order.append(name)
                lits[name] = set()
                prefs[name] = set()
            for t in terms:
                if t.endswith("*"):
                    if len(t) == 1:
                        raise MalformedLexicon(line_no, "bare '*' term")
                    prefs[name].add(t[:-1])
                else:
                    lits[name].add(t)
    for name in order:
        if not lits[name] and not prefs[name]:
            raise EmptyCategory(name)
    return Lexicon(
        names=tuple(order),
        literals=tuple(frozenset(lits[n]) for n in order),
        prefixes=tuple(tuple(sorted(prefs[n])) for n in order),
    )


def score_categories(tokens: list[str], lexicon: Lexicon) -> CategoryScores:
    """Fraction of tokens matching each category (all categories reported)."""
    counts = [0] * lexicon.category_count
    for tok in tokens:
        for i in lexicon.categories_for(tok):
            counts[i] += 1
    denom = max(1, len(tokens))
    return CategoryScores(
        scores={name: counts[i] / denom for i, name in enumerate(lexicon.names)},
        token_total=len(tokens),
    )


def load_trait_mapping(path: str | Path) -> TraitMapping:
    """Parse a trait mapping file: JSON {trait: {intercept, weights: {category: w}}}.

    The file must define the five broad dimensions plus 30 facets (35 outputs).
    """
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedMapping(str(exc)) from exc
    if not isinstance(obj, dict):
        raise MalformedMapping("mapping must be a JSON object")
    names, intercepts, weights = [], [], []
    for name, entry in obj.items():
        try:
            intercepts.append(float(entry["intercept"]))
            weights.append({str(c): float(w) for c, w in entry["weights"].items()})
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedMapping(f"bad entry for {name!r}: {exc}") from exc
        names.append(name)
    missing = [b for b in BIG5 if b not in names]
    if missing:
        raise MalformedMapping(f"missing broad dimensions: {missing}")
    if len(names) != len(BIG5) + FACET_COUNT:
        raise MalformedMapping(f"expected {len(BIG5) + FACET_COUNT} outputs, got {len(names)}")
    return TraitMapping(names=tuple(names), intercepts=tuple(intercepts), weights=tuple(weights))


def derive_traits(scores: CategoryScores, mapping: TraitMapping) -> TraitScores:
    """Apply the linear map: output = intercept + sum(weight_c * score_c)."""
    big5: dict[str, float] = {}
    facets: dict[str, float] = {}
    for name, intercept, wmap in zip(mapping.names, mapping.intercepts, mapping.weights):
        total = intercept
        for cat, w in wmap.items():
            if cat not in scores.scores:
                raise UnknownCategory(cat)
            total += w * scores.scores[cat]
        (big5 if name in BIG5 else facets)[name] = total
    return TraitScores(big5=big5, facets=facets)


def _data_path(filename: str) -> Path:
    return Path(str(resources.files("propagator").joinpath("data", filename)))


def default_lexicon() -> Lexicon:
    return load_lexicon(_data_path("default_lexicon.txt"))


def default_trait_mapping() -> TraitMapping:
    return load_trait_mapping(_data_path("default_traits.json"))
