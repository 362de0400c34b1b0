"""Seed lexicon construction.

Pipeline: count substrings, drop redundant prefixes/suffixes, drop
substrings that span a forced split point, then keep every single code
point plus the most frequent remaining substrings.
"""
import collections
import math

from .exceptions import ValidationError
from .model import UnigramModel

SeedResult = collections.namedtuple('SeedResult', ['counts', 'model'])


class ForceSplitRule:
    """Code points that must be preceded (`before`) or followed (`after`) by a boundary."""

    __slots__ = ('before', 'after')

    def __init__(self, before=(), after=()):
        self.before = frozenset(before)
        self.after = frozenset(after)

    def __bool__(self):
        return bool(self.before or self.after)

    def violated_by(self, s):
        """True if `s` spans a forced boundary."""
        if len(s) < 2:
            return False
        before, after = self.before, self.after
        for i, ch in enumerate(s):
            if i > 0 and ch in before:
                return True
            if i < len(s) - 1 and ch in after:
                return True
        return False

    def forced_boundaries(self, word):
        """Positions in `word` where a boundary is mandatory."""
        out = set()
        for i, ch in enumerate(word):
            if ch in self.before and i > 0:
                out.add(i)
            if ch in self.after and i < len(word) - 1:
                out.add(i + 1)
        return sorted(out)

    def split_word(self, word):
        """Cut `word` at its forced boundaries."""
        pieces = []
        prev = 0
        for b in self.forced_boundaries(word):
            pieces.append(word[prev:b])
            prev = b
        pieces.append(word[prev:])
        return pieces

    def __repr__(self):
        return 'ForceSplitRule(before=%r, after=%r)' % (
            ''.join(sorted(self.before)), ''.join(sorted(self.after)))


class SeedConfig:
    __slots__ = ('max_seed_size', 'max_substring_len', 'prepruning', 'forcesplit')

    def __init__(self, max_seed_size=1000000, max_substring_len=20, prepruning=True,
                 forcesplit=None):
        if int(max_substring_len) < 1:
            raise ValidationError('max_substring_len must be >= 1')
        if int(max_seed_size) < 1:
            raise ValidationError('max_seed_size must be >= 1')
        self.max_seed_size = int(max_seed_size)
        self.max_substring_len = int(max_substring_len)
        self.prepruning = bool(prepruning)
        self.forcesplit = forcesplit if forcesplit is not None else ForceSplitRule()

    def __repr__(self):
        return 'SeedConfig(max_seed_size=%d, max_substring_len=%d, prepruning=%r, %r)' % (
            self.max_seed_size, self.max_substring_len, self.prepruning, self.forcesplit)


def enumerate_substrings(data, max_substring_len=20):
    """Count every substring up to `max_substring_len`, weighted by effective counts.

    Overlapping occurrences inside a word are all counted.
    """
    if len(data) == 0:
        raise ValidationError('cannot build a seed lexicon from an empty corpus')
    counts = {}
    get = counts.get
    for word, weight in data.items():
        n = len(word)
        for s in range(n):
            for e in range(s + 1, min(n, s + max_substring_len) + 1):
                sub = word[s:e]
                counts[sub] = get(sub, 0.0) + weight
    return counts


def _same_count(a, b):
    return math.isclose(a, b, rel_tol=1e-9, abs_tol=0.0)


def preprune_redundant(substring_counts, data):
    """Drop multi-character word-initial or word-final substrings that never occur alone.

    s is redundant when some one-character extension xs or sx has the same
    count: every occurrence of s is then inside that extension.
    """
    edges = set()
    for word in data:
        edges.update(word[:i] for i in range(2, len(word)))
        edges.update(word[i:] for i in range(1, len(word) - 1))
    redundant = set()
    for t, c in substring_counts.items():
        if len(t) < 3:
            continue
        for s in (t[1:], t[:-1]):
            if s in edges and s not in redundant and _same_count(substring_counts.get(s, -1.0), c):
                redundant.add(s)
    return {s: c for s, c in substring_counts.items() if s not in redundant}


def apply_forcesplit(substring_counts, rule):
    if not rule:
        return dict(substring_counts)
    return {s: c for s, c in substring_counts.items() if not rule.violated_by(s)}


def build_seed(data, config=None):
    """Seed counts and the initial model, log p(z) = ln(count(z) / total)."""
    config = config or SeedConfig()
    counts = enumerate_substrings(data, config.max_substring_len)
    if config.prepruning:
        counts = preprune_redundant(counts, data)
    counts = apply_forcesplit(counts, config.forcesplit)
    singles = {ch: counts[ch] for ch in data.alphabet()}
    if config.max_seed_size < len(singles):
        raise ValidationError('max_seed_size %d is smaller than the alphabet (%d code points)'
                              % (config.max_seed_size, len(singles)))
    multi = sorted(((s, c) for s, c in counts.items() if len(s) > 1),
                   key=lambda item: (-item[1], item[0]))
    kept = dict(singles)
    kept.update(multi[:config.max_seed_size - len(singles)])
    kept = {s: kept[s] for s in sorted(kept)}
    total = math.fsum(kept.values())
    model = UnigramModel({s: math.log(c / total) for s, c in kept.items()})
    return SeedResult(kept, model)


def write_seed(counts, path):
    """Debug dump: `<count><TAB><substring>` per line, most frequent first."""
    with open(path, 'w', encoding='utf-8') as fobj:
        for s, c in sorted(counts.items(), key=lambda item: (-item[1], item[0])):
            fobj.write('%s\t%s\n' % (repr(c) if c != int(c) else int(c), s))
