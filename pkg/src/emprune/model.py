"""Unigram subword model, expected counts and the two M-step normalizations."""
import math

import numpy as np

from .exceptions import DegenerateInputError, ValidationError
from .special import digamma, digamma_array

# Expected counts below this are treated as zero and given a floor
# probability instead of log(0), so EM can still move mass back to them.
ZERO_COUNT_FLOOR = 1e-10


class UnigramModel:
    """Subword lexicon with natural-log probabilities.

    Subwords are held in sorted order; `index` maps each subword to its
    position in `logprobs`. Single-code-point subwords are protected from
    pruning. Instances are immutable: every update returns a new model.
    """

    __slots__ = ('subwords', 'logprobs', 'index', 'max_len')

    def __init__(self, logprobs, _presorted=False):
        if _presorted:
            subwords, values = logprobs
        else:
            items = sorted(dict(logprobs).items())
            subwords = tuple(s for s, _ in items)
            values = [lp for _, lp in items]
        if not subwords:
            raise ValueError('a model needs at least one subword')
        values = np.array(values, dtype=np.float64)
        values.flags.writeable = False
        if not np.all(np.isfinite(values)):
            raise ValueError('log-probabilities must be finite')
        if np.any(values > 1e-12):
            raise ValueError('log-probabilities must be <= 0')
        for s in subwords:
            if not isinstance(s, str) or not s:
                raise ValueError('subwords must be non-empty strings, got %r' % (s,))
        self.subwords = tuple(subwords)
        self.logprobs = values
        self.index = {s: i for i, s in enumerate(self.subwords)}
        self.max_len = max(len(s) for s in self.subwords)

    @classmethod
    def from_counts(cls, counts):
        """Maximum-likelihood model from a mapping of positive counts."""
        items = sorted((s, c) for s, c in dict(counts).items() if c > 0)
        if not items:
            raise DegenerateInputError('no positive counts')
        total = math.fsum(c for _, c in items)
        return cls({s: math.log(c / total) for s, c in items})

    def _replace(self, subwords, logprobs):
        return UnigramModel((subwords, logprobs), _presorted=True)

    def with_logprobs(self, logprobs):
        """Same lexicon, new parameters (aligned with `subwords`)."""
        values = np.array(logprobs, dtype=np.float64)
        if values.shape != (len(self.subwords),):
            raise ValueError('expected %d log-probabilities' % len(self.subwords))
        if not np.all(np.isfinite(values)) or np.any(values > 1e-12):
            raise ValueError('log-probabilities must be finite and <= 0')
        values.flags.writeable = False
        # The lexicon is unchanged, so its index can be shared.
        clone = object.__new__(UnigramModel)
        clone.subwords = self.subwords
        clone.index = self.index
        clone.max_len = self.max_len
        clone.logprobs = values
        return clone

    def logprob(self, subword):
        return float(self.logprobs[self.index[subword]])

    def get(self, subword, default=None):
        i = self.index.get(subword)
        return default if i is None else float(self.logprobs[i])

    def items(self):
        return zip(self.subwords, (float(x) for x in self.logprobs))

    def as_dict(self):
        return dict(self.items())

    def total_mass(self):
        return math.fsum(np.exp(self.logprobs))

    @property
    def min_logprob(self):
        return float(self.logprobs.min())

    @staticmethod
    def is_protected(subword):
        return len(subword) == 1

    def protected(self):
        return [s for s in self.subwords if len(s) == 1]

    def prune(self, removed):
        """Drop `removed` subwords and renormalize the survivors to sum to one."""
        removed = set(removed)
        for s in removed:
            if self.is_protected(s):
                raise ValidationError('refusing to prune protected subword %r' % s)
        keep = [i for i, s in enumerate(self.subwords) if s not in removed]
        subwords = tuple(self.subwords[i] for i in keep)
        kept = self.logprobs[keep]
        norm = _logsumexp_array(kept)
        return self._replace(subwords, kept - norm)

    def __len__(self):
        return len(self.subwords)

    def __iter__(self):
        return iter(self.subwords)

    def __contains__(self, subword):
        return subword in self.index

    def __eq__(self, other):
        if not isinstance(other, UnigramModel):
            return NotImplemented
        return (self.subwords == other.subwords
                and np.array_equal(self.logprobs, other.logprobs))

    def __repr__(self):
        return 'UnigramModel(%d subwords, max_len=%d)' % (len(self), self.max_len)


def _logsumexp_array(values):
    m = float(np.max(values))
    return m + math.log(float(np.sum(np.exp(values - m))))


class ExpectedCounts:
    """Per-subword (expected) counts aligned with a model's subwords.

    `data_loglik` is the sum over word types of effective count times the
    log-likelihood of the word (marginal for soft counts, best path for
    Viterbi counts).
    """

    __slots__ = ('subwords', 'counts', 'data_loglik')

    def __init__(self, subwords, counts, data_loglik=0.0):
        self.subwords = tuple(subwords)
        self.counts = np.asarray(counts, dtype=np.float64)
        if self.counts.shape != (len(self.subwords),):
            raise ValueError('counts must align with subwords')
        if np.any(self.counts < 0):
            raise ValueError('counts must be non-negative')
        self.data_loglik = float(data_loglik)

    @classmethod
    def from_dict(cls, counts, subwords=None, data_loglik=0.0):
        if subwords is None:
            subwords = sorted(counts)
        return cls(subwords, [counts.get(s, 0.0) for s in subwords], data_loglik)

    @property
    def total(self):
        return float(self.counts.sum())

    def get(self, subword, default=0.0):
        try:
            return float(self.counts[self.subwords.index(subword)])
        except ValueError:
            return default

    def as_dict(self):
        return {s: float(c) for s, c in zip(self.subwords, self.counts)}

    def merge(self, other):
        """Pointwise sum with counts over the same subwords."""
        if self.subwords != other.subwords:
            raise ValueError('cannot merge counts over different lexicons')
        return ExpectedCounts(self.subwords, self.counts + other.counts,
                              self.data_loglik + other.data_loglik)

    __add__ = merge

    def __repr__(self):
        return 'ExpectedCounts(%d subwords, total=%g, loglik=%g)' % (
            len(self.subwords), self.total, self.data_loglik)


class Segmentation:
    """A word split into morphs, with the summed morph log-probability.

    `oov` lists the positions of characters that were not in the lexicon and
    were emitted through the out-of-vocabulary fallback.
    """

    __slots__ = ('word', 'morphs', 'logprob', 'oov')

    def __init__(self, word, morphs, logprob=0.0, oov=()):
        morphs = tuple(morphs)
        if ''.join(morphs) != word or any(not m for m in morphs):
            raise ValidationError('morphs %r do not concatenate to %r' % (morphs, word))
        self.word = word
        self.morphs = morphs
        self.logprob = logprob
        self.oov = tuple(oov)

    def boundaries(self):
        """Internal split positions in code points."""
        out = []
        pos = 0
        for m in self.morphs[:-1]:
            pos += len(m)
            out.append(pos)
        return out

    def __len__(self):
        return len(self.morphs)

    def __eq__(self, other):
        if not isinstance(other, Segmentation):
            return NotImplemented
        return self.word == other.word and self.morphs == other.morphs

    def __hash__(self):
        return hash((self.word, self.morphs))

    def __repr__(self):
        return 'Segmentation(%s, %.6g)' % (' + '.join(self.morphs), self.logprob)


def _check_counts(counts):
    total = counts.total
    if not total > 0:
        raise DegenerateInputError('expected counts sum to zero')
    return total


def m_step_plain(counts, model=None):
    """Maximum-likelihood re-estimation: p(z) = C_z / sum C.

    Counts under ZERO_COUNT_FLOOR are lifted to the floor before
    normalizing, so every subword keeps a finite log-probability.
    """
    _check_counts(counts)
    floored = np.maximum(counts.counts, ZERO_COUNT_FLOOR)
    logprobs = np.log(floored) - math.log(float(floored.sum()))
    return _as_model(counts, logprobs, model)


def m_step_bayesian(counts, model=None):
    """Bayesian-EM re-estimation: log p(z) = Psi(C_z) - Psi(sum C).

    No renormalization: the digamma discount leaves total mass below one,
    taking relatively more from small counts. Subwords under the zero floor
    get log(ZERO_COUNT_FLOOR / sum C).
    """
    total = _check_counts(counts)
    c = counts.counts
    logprobs = np.full(c.shape, math.log(ZERO_COUNT_FLOOR / total))
    live = c >= ZERO_COUNT_FLOOR
    logprobs[live] = digamma_array(c[live]) - digamma(total)
    # Psi is increasing, so values are <= 0 up to rounding in the subtraction.
    np.minimum(logprobs, 0.0, out=logprobs)
    return _as_model(counts, logprobs, model)


def _as_model(counts, logprobs, model):
    if model is not None:
        if model.subwords != counts.subwords:
            raise ValueError('counts do not match the model lexicon')
        return model.with_logprobs(logprobs)
    return UnigramModel(dict(zip(counts.subwords, logprobs)))
