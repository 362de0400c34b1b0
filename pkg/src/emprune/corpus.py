"""Reading and writing word counts, gold standards, models and segmentations.

All files are UTF-8. Lines may end in LF with or without a trailing newline.
No Unicode normalization is applied; segmentation works on code points.
"""
import collections
import math
import re

import numpy as np

from .exceptions import ModelError, ParseError, ValidationError
from .model import UnigramModel

DAMPENING_MODES = ('none', 'log', 'ones')
CATEGORIES = ('PRE', 'STM', 'SUF', 'UNKNOWN')

_WHITESPACE = re.compile(r'\s')


def dampen(count, mode):
    """Return the effective count of a raw word count under a dampening mode."""
    if mode == 'none':
        return float(count)
    if mode == 'ones':
        return 1.0
    if mode == 'log':
        return math.log(count) + 1.0
    raise ValueError('unknown dampening mode %r' % (mode,))


class WordCountTable:
    """Training corpus as word type -> count.

    Raw counts are stored; effective counts are derived on access from the
    dampening mode. Words are kept in sorted order so that every traversal of
    the table is reproducible. Instances are treated as immutable.
    """

    def __init__(self, counts, dampening='none'):
        if dampening not in DAMPENING_MODES:
            raise ValueError('unknown dampening mode %r' % (dampening,))
        raw = {}
        for word, count in dict(counts).items():
            if not isinstance(word, str) or not word or _WHITESPACE.search(word):
                raise ValidationError('invalid word %r' % (word,))
            if count != int(count) or count < 1:
                raise ValidationError('count of %r must be a positive integer, got %r' % (word, count))
            raw[word] = int(count)
        self._raw = {w: raw[w] for w in sorted(raw)}
        self.dampening = dampening

    @property
    def words(self):
        return list(self._raw)

    def raw_count(self, word):
        return self._raw[word]

    def effective_count(self, word):
        return dampen(self._raw[word], self.dampening)

    def items(self):
        """Yield (word, effective count) pairs in sorted word order."""
        for word, count in self._raw.items():
            yield word, dampen(count, self.dampening)

    def raw_items(self):
        return iter(self._raw.items())

    def effective_counts(self):
        return np.array([c for _, c in self.items()], dtype=np.float64)

    @property
    def total_tokens(self):
        return math.fsum(c for _, c in self.items())

    def with_dampening(self, dampening):
        if dampening == self.dampening:
            return self
        return WordCountTable(self._raw, dampening)

    def alphabet(self):
        return sorted({ch for word in self._raw for ch in word})

    def __len__(self):
        return len(self._raw)

    def __iter__(self):
        return iter(self._raw)

    def __contains__(self, word):
        return word in self._raw

    def __repr__(self):
        return 'WordCountTable(%d types, dampening=%r)' % (len(self), self.dampening)


def _lines(path):
    with open(path, encoding='utf-8') as fobj:
        for lineno, line in enumerate(fobj, 1):
            yield lineno, line.rstrip('\n').rstrip('\r')


def read_word_counts(path, dampening='none'):
    """Read a `<count><TAB or SPACE><word>` file into a WordCountTable.

    Blank lines are skipped and duplicate words have their counts summed.
    """
    counts = collections.Counter()
    for lineno, line in _lines(path):
        if not line.strip():
            continue
        parts = line.strip().split(None, 1)
        if len(parts) != 2:
            raise ParseError('expected "<count> <word>", got %r' % line, path, lineno)
        count_str, word = parts
        try:
            count = int(count_str)
        except ValueError:
            raise ParseError('count %r is not an integer' % count_str, path, lineno) from None
        if count < 1:
            raise ParseError('count must be >= 1, got %d' % count, path, lineno)
        if _WHITESPACE.search(word):
            raise ParseError('word %r contains whitespace' % word, path, lineno)
        counts[word] += count
    return WordCountTable(counts, dampening)


def write_word_counts(table, path):
    with open(path, 'w', encoding='utf-8') as fobj:
        for word, count in table.raw_items():
            fobj.write('%d\t%s\n' % (count, word))


Morph = collections.namedtuple('Morph', ['surface', 'category'])


class GoldStandard:
    """Reference segmentations: word -> list of alternative analyses.

    Each analysis is a tuple of Morph(surface, category).
    """

    def __init__(self, entries):
        self.entries = {}
        for word, analyses in entries.items():
            analyses = [tuple(m if isinstance(m, Morph) else Morph(m, 'UNKNOWN') for m in a)
                        for a in analyses]
            if not analyses:
                raise ValidationError('gold standard entry %r has no analysis' % word)
            for analysis in analyses:
                joined = ''.join(m.surface for m in analysis)
                if joined != word:
                    raise ValidationError('gold analysis %r does not concatenate to word %r'
                                          % (' '.join(m.surface for m in analysis), word))
                for morph in analysis:
                    if morph.category not in CATEGORIES:
                        raise ValidationError('unknown category %r in entry %r' % (morph.category, word))
            self.entries[word] = analyses

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, word):
        return self.entries[word]

    def __contains__(self, word):
        return word in self.entries

    def items(self):
        return self.entries.items()


def _parse_morph(token, path, lineno):
    if '|' in token:
        surface, cat = token.rsplit('|', 1)
        if cat not in CATEGORIES:
            raise ParseError('unknown morph category %r' % cat, path, lineno)
        return Morph(surface, cat)
    return Morph(token, 'UNKNOWN')


def read_gold_standard(path):
    """Read `<word><TAB><analysis>{, <analysis>}` lines.

    An analysis is a space-separated list of morphs, each optionally written
    as `surface|CAT` with CAT in PRE, STM, SUF, UNKNOWN.
    """
    entries = {}
    for lineno, line in _lines(path):
        if not line.strip():
            continue
        if '\t' not in line:
            raise ParseError('expected "<word><TAB><analyses>"', path, lineno)
        word, rest = line.split('\t', 1)
        analyses = []
        for alt in rest.split(','):
            tokens = alt.split()
            if not tokens:
                raise ParseError('empty analysis for %r' % word, path, lineno)
            analyses.append(tuple(_parse_morph(t, path, lineno) for t in tokens))
        entries.setdefault(word, []).extend(analyses)
    return GoldStandard(entries)


def write_model(model, path):
    """Write one `<logprob><TAB><subword>` line per subword, sorted by subword.

    Log-probabilities use 17 significant digits so that reading the file back
    reproduces every float exactly.
    """
    if model is None or len(model) == 0:
        raise ModelError('refusing to write an empty lexicon')
    lines = []
    for subword, logprob in model.items():
        if not math.isfinite(logprob):
            raise ModelError('non-finite log-probability for %r' % subword)
        lines.append('%s\t%s\n' % (format(logprob, '.17g'), subword))
    with open(path, 'w', encoding='utf-8') as fobj:
        fobj.writelines(lines)


def read_model(path):
    logprobs = {}
    try:
        lines = list(_lines(path))
    except OSError as exc:
        raise ModelError('cannot read model file %s: %s' % (path, exc)) from exc
    for lineno, line in lines:
        if not line.strip():
            continue
        if '\t' not in line:
            raise ModelError('%s:%d: expected "<logprob><TAB><subword>"' % (path, lineno))
        lp_str, subword = line.split('\t', 1)
        try:
            logprob = float(lp_str)
        except ValueError:
            raise ModelError('%s:%d: bad log-probability %r' % (path, lineno, lp_str)) from None
        if not math.isfinite(logprob):
            raise ModelError('%s:%d: non-finite log-probability' % (path, lineno))
        if subword in logprobs:
            raise ModelError('%s:%d: duplicate subword %r' % (path, lineno, subword))
        logprobs[subword] = logprob
    if not logprobs:
        raise ModelError('%s: empty model' % path)
    try:
        return UnigramModel(logprobs)
    except ValueError as exc:
        raise ModelError('%s: %s' % (path, exc)) from exc


def read_segmentations(path):
    """Read a segmentation file into an ordered dict word -> morph tuple.

    Each line is either `<morphs>` or `<word><TAB><morphs>`, with morphs
    separated by single spaces. Only the first analysis after a comma is used.
    """
    result = {}
    for lineno, line in _lines(path):
        if not line.strip():
            continue
        if '\t' in line:
            word, analysis = line.split('\t', 1)
        else:
            word, analysis = None, line
        analysis = analysis.split(',')[0]
        morphs = tuple(m.split('|')[0] for m in analysis.split())
        joined = ''.join(morphs)
        if word is None:
            word = joined
        elif joined != word:
            raise ParseError('segmentation %r does not concatenate to %r' % (analysis, word),
                             path, lineno)
        result[word] = morphs
    return result


def write_segmentations(segmentations, path, separator=' '):
    with open(path, 'w', encoding='utf-8') as fobj:
        for word, morphs in segmentations.items():
            fobj.write('%s\t%s\n' % (word, separator.join(morphs)))
