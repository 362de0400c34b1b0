"""Segmentation lattices and inference over them.

A word of L code points has nodes 0..L; every substring word[s:e] that is in
the lexicon is an arc s -> e. Per-word routines (forward-backward, Viterbi,
n-best, forward-filtering backward-sampling) work on a `Lattice`. The corpus
E-step packs all word lattices into flat numpy arrays (`CorpusLattice`) and
runs the same recursions level by level.

Viterbi and n-best order paths by (1) higher log-probability, (2) fewer
morphs, (3) longer morphs compared left to right. Path scores are exact
(`math.fsum`) sums of morph log-probabilities, so equal multisets of morphs
tie exactly regardless of order.
"""
import collections
import concurrent.futures
import math

import numpy as np

from .exceptions import UnsegmentableWordError
from .model import ExpectedCounts, Segmentation

Arc = collections.namedtuple('Arc', ['start', 'end', 'subword', 'logprob', 'oov'])
FBResult = collections.namedtuple('FBResult', ['expected', 'log_marginal'])

NEG_INF = -math.inf


def logsumexp(values):
    values = list(values)
    if not values:
        return NEG_INF
    m = max(values)
    if m == NEG_INF:
        return NEG_INF
    return m + math.log(math.fsum(math.exp(v - m) for v in values))


class Lattice:
    """Segmentation DAG of one word under a fixed model."""

    __slots__ = ('word', 'arcs', 'incoming', 'outgoing')

    def __init__(self, word, arcs):
        self.word = word
        self.arcs = tuple(arcs)
        n = len(word) + 1
        self.incoming = [[] for _ in range(n)]
        self.outgoing = [[] for _ in range(n)]
        for arc in self.arcs:
            self.incoming[arc.end].append(arc)
            self.outgoing[arc.start].append(arc)

    @property
    def length(self):
        return len(self.word)

    def reachable(self):
        """Nodes reachable from node 0."""
        seen = [False] * (self.length + 1)
        seen[0] = True
        for t in range(self.length):
            if seen[t]:
                for arc in self.outgoing[t]:
                    seen[arc.end] = True
        return seen

    def is_segmentable(self):
        return self.reachable()[-1]

    def spans(self):
        return {(a.start, a.end, a.subword) for a in self.arcs}

    def __repr__(self):
        return 'Lattice(%r, %d arcs)' % (self.word, len(self.arcs))


def build_lattice(word, model, exclude=None, oov_fallback=False):
    """Build the lattice of `word` over the lexicon of `model`.

    Arguments:
        exclude: a subword to leave out (used to find its replacement).
        oov_fallback: add single-character arcs for code points missing
            from the lexicon, scored with the model's minimum log-probability.
    """
    if not word:
        raise ValueError('cannot build a lattice for an empty word')
    arcs = []
    length = len(word)
    maxlen = model.max_len
    get = model.get
    floor = model.min_logprob if oov_fallback else None
    for s in range(length):
        has_char = False
        for e in range(s + 1, min(length, s + maxlen) + 1):
            sub = word[s:e]
            if sub == exclude:
                continue
            lp = get(sub)
            if lp is not None:
                arcs.append(Arc(s, e, sub, lp, False))
                if e == s + 1:
                    has_char = True
        if oov_fallback and not has_char and word[s] != exclude:
            arcs.append(Arc(s, s + 1, word[s], floor, True))
    arcs.sort(key=lambda a: (a.start, a.end))
    return Lattice(word, arcs)


def _forward(lattice):
    alpha = [NEG_INF] * (lattice.length + 1)
    alpha[0] = 0.0
    for t in range(1, lattice.length + 1):
        alpha[t] = logsumexp([alpha[a.start] + a.logprob for a in lattice.incoming[t]
                              if alpha[a.start] > NEG_INF])
    return alpha


def _backward(lattice):
    beta = [NEG_INF] * (lattice.length + 1)
    beta[-1] = 0.0
    for s in range(lattice.length - 1, -1, -1):
        beta[s] = logsumexp([a.logprob + beta[a.end] for a in lattice.outgoing[s]
                             if beta[a.end] > NEG_INF])
    return beta


def forward_backward(lattice):
    """Log marginal likelihood of the word and expected count of each subword."""
    alpha = _forward(lattice)
    log_z = alpha[-1]
    if log_z == NEG_INF:
        raise UnsegmentableWordError(lattice.word)
    beta = _backward(lattice)
    expected = collections.defaultdict(float)
    for a in lattice.arcs:
        if alpha[a.start] == NEG_INF or beta[a.end] == NEG_INF:
            continue
        expected[a.subword] += math.exp(alpha[a.start] + a.logprob + beta[a.end] - log_z)
    return FBResult(dict(expected), log_z)


def _path_key(score, morph_lengths):
    # Sort key: ascending order == preferred first.
    return (-score, len(morph_lengths), tuple(-n for n in morph_lengths))


def _to_segmentation(lattice, path):
    morphs = [a.subword for a in path]
    oov = [a.start for a in path if a.oov]
    score = math.fsum(a.logprob for a in path)
    return Segmentation(lattice.word, morphs, score, oov)


def viterbi(lattice):
    """Most probable segmentation under the deterministic tie-break.

    Runs right to left: the best suffix path from each node is chosen by
    score, then morph count, then length of its first morph. Because the
    comparison at a node only involves the first arc once score and count
    tie, this realizes the left-to-right longest-morph preference exactly.
    """
    n = lattice.length
    # best[t] = (score terms, arcs) of the preferred path from t to the end
    best = [None] * (n + 1)
    best[n] = ((), ())
    for s in range(n - 1, -1, -1):
        choice = None
        for a in lattice.outgoing[s]:
            tail = best[a.end]
            if tail is None:
                continue
            terms = (a.logprob,) + tail[0]
            key = (-math.fsum(terms), len(terms), -(a.end - a.start))
            if choice is None or key < choice[0]:
                choice = (key, terms, (a,) + tail[1])
        if choice is not None:
            best[s] = (choice[1], choice[2])
    if best[0] is None:
        raise UnsegmentableWordError(lattice.word)
    return _to_segmentation(lattice, best[0][1])


def nbest(lattice, n):
    """Up to `n` distinct segmentations in Viterbi preference order."""
    if n < 1:
        raise ValueError('n must be >= 1')
    size = lattice.length
    # table[t] = list of (key, terms, arcs) for the top paths from t to the end
    table = [[] for _ in range(size + 1)]
    table[size] = [((0.0,), (), ())]
    for s in range(size - 1, -1, -1):
        candidates = []
        for a in lattice.outgoing[s]:
            for _, terms, arcs in table[a.end]:
                terms2 = (a.logprob,) + terms
                arcs2 = (a,) + arcs
                key = _path_key(math.fsum(terms2), [x.end - x.start for x in arcs2])
                candidates.append((key, terms2, arcs2))
        candidates.sort(key=lambda c: c[0])
        table[s] = candidates[:n]
    if not table[0]:
        raise UnsegmentableWordError(lattice.word)
    return [_to_segmentation(lattice, arcs) for _, _, arcs in table[0]]


class StringViterbi:
    """Viterbi over arbitrary strings with suffix memoization.

    Gives the same result as `viterbi(build_lattice(s, model))`, but shares
    work between strings with common suffixes, which makes it cheap to
    segment every lexicon entry in turn.
    """

    def __init__(self, model):
        self._get = model.get
        self._maxlen = model.max_len
        self._memo = {}

    def _search(self, s, skip_whole):
        choice = None
        n = len(s)
        for e in range(1, min(n, self._maxlen) + 1):
            if e == n and skip_whole:
                break
            lp = self._get(s[:e])
            if lp is None:
                continue
            if e == n:
                terms, morphs = (lp,), (s,)
            else:
                tail = self.best(s[e:])
                if tail is None:
                    continue
                terms, morphs = (lp,) + tail[0], (s[:e],) + tail[1]
            key = (-math.fsum(terms), len(terms), -e)
            if choice is None or key < choice[0]:
                choice = (key, terms, morphs)
        return None if choice is None else (choice[1], choice[2])

    def best(self, s):
        """(log-probability terms, morphs) of the best path, or None."""
        try:
            return self._memo[s]
        except KeyError:
            pass
        result = self._memo[s] = self._search(s, False)
        return result

    def best_without_whole(self, s):
        """Best segmentation of `s` that does not use `s` itself as a morph."""
        return self._search(s, True)


def sample_segmentations(lattice, rng, n=1):
    """Draw `n` exact posterior samples by forward filtering, backward sampling.

    `rng` is a numpy Generator; draws are consumed in a fixed order so a
    seeded generator gives a reproducible sequence.
    """
    alpha = _forward(lattice)
    if alpha[-1] == NEG_INF:
        raise UnsegmentableWordError(lattice.word)
    # Per node: incoming arcs and their cumulative backward-sampling weights.
    tables = [None] * (lattice.length + 1)
    for t in range(1, lattice.length + 1):
        arcs = [a for a in lattice.incoming[t] if alpha[a.start] > NEG_INF]
        weights = np.array([math.exp(alpha[a.start] + a.logprob - alpha[t]) for a in arcs])
        tables[t] = (arcs, np.cumsum(weights / weights.sum()))
    samples = []
    for _ in range(n):
        path = []
        t = lattice.length
        while t > 0:
            arcs, cdf = tables[t]
            i = int(np.searchsorted(cdf, rng.random(), side='right'))
            a = arcs[min(i, len(arcs) - 1)]
            path.append(a)
            t = a.start
        path.reverse()
        samples.append(_to_segmentation(lattice, path))
    return samples


def sample_segmentation(lattice, rng):
    return sample_segmentations(lattice, rng, 1)[0]


def segment(word, model, nbest_n=None, oov_fallback=True):
    """Viterbi (or n-best) segmentation of a possibly unseen word."""
    lattice = build_lattice(word, model, oov_fallback=oov_fallback)
    if nbest_n is None:
        return viterbi(lattice)
    return nbest(lattice, nbest_n)


class CorpusLattice:
    """The lattices of many words packed into flat arrays.

    Arcs are stored word by word in canonical order (word, start, end);
    `sub` indexes into the lexicon the structure was built for. Only the
    lexicon matters for the structure, so the same object serves every
    parameter vector over that lexicon, and `restrict` derives the structure
    for a pruned lexicon without re-scanning the words.
    """

    def __init__(self, words, weights, subwords, arc_word, arc_start, arc_end, arc_sub):
        self.words = list(words)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.subwords = tuple(subwords)
        self.lengths = np.array([len(w) for w in self.words], dtype=np.int64)
        self.offsets = np.zeros(len(self.words) + 1, dtype=np.int64)
        np.cumsum(self.lengths + 1, out=self.offsets[1:])
        self.arc_word = np.asarray(arc_word, dtype=np.int64)
        self.arc_start = np.asarray(arc_start, dtype=np.int64)
        self.arc_end = np.asarray(arc_end, dtype=np.int64)
        self.arc_sub = np.asarray(arc_sub, dtype=np.int64)
        base = self.offsets[self.arc_word]
        self._from = base + self.arc_start
        self._to = base + self.arc_end
        self._final = self.offsets[:-1] + self.lengths
        self._fwd = self._levels(self.arc_end, self._to, ascending=True)
        self._bwd = self._levels(self.arc_start, self._from, ascending=False)

    @classmethod
    def build(cls, words, weights, model):
        index = model.index
        maxlen = model.max_len
        arc_word, arc_start, arc_end, arc_sub = [], [], [], []
        for w, word in enumerate(words):
            length = len(word)
            for s in range(length):
                for e in range(s + 1, min(length, s + maxlen) + 1):
                    j = index.get(word[s:e])
                    if j is not None:
                        arc_word.append(w)
                        arc_start.append(s)
                        arc_end.append(e)
                        arc_sub.append(j)
        return cls(words, weights, model.subwords, arc_word, arc_start, arc_end, arc_sub)

    def restrict(self, model):
        """Structure for `model`, whose lexicon must be a subset of ours."""
        if model.subwords == self.subwords:
            return self
        remap = np.array([model.index.get(s, -1) for s in self.subwords], dtype=np.int64)
        new_sub = remap[self.arc_sub]
        keep = new_sub >= 0
        return CorpusLattice(self.words, self.weights, model.subwords,
                             self.arc_word[keep], self.arc_start[keep],
                             self.arc_end[keep], new_sub[keep])

    @staticmethod
    def _levels(position, node, ascending):
        """Group arcs by local position, and within a level by node.

        Returns a list of (arc indices, segment starts, segment ids, target
        nodes), one per level, in processing order.
        """
        if len(position) == 0:
            return []
        canonical = np.arange(len(position))
        order = np.lexsort((canonical, node, position))
        if not ascending:
            # Stable reversal of the level order only.
            levels = np.unique(position[order])[::-1]
        else:
            levels = np.unique(position[order])
        sorted_pos = position[order]
        out = []
        for level in levels:
            lo = np.searchsorted(sorted_pos, level, side='left')
            hi = np.searchsorted(sorted_pos, level, side='right')
            idx = order[lo:hi]
            targets = node[idx]
            starts = np.flatnonzero(np.r_[True, targets[1:] != targets[:-1]])
            seg_ids = np.repeat(np.arange(len(starts)), np.diff(np.r_[starts, len(idx)]))
            out.append((idx, starts, seg_ids, targets[starts]))
        return out

    @staticmethod
    def _reduce(values, starts, seg_ids):
        m = np.maximum.reduceat(values, starts)
        safe = np.where(np.isfinite(m), m, 0.0)
        total = np.add.reduceat(np.exp(values - safe[seg_ids]), starts)
        with np.errstate(divide='ignore'):
            return safe + np.log(total)

    def posteriors(self, logprobs):
        """Per-arc posterior probabilities and per-word log marginals."""
        n_nodes = int(self.offsets[-1])
        lp = logprobs[self.arc_sub]
        alpha = np.full(n_nodes, -np.inf)
        alpha[self.offsets[:-1]] = 0.0
        for idx, starts, seg_ids, targets in self._fwd:
            alpha[targets] = self._reduce(alpha[self._from[idx]] + lp[idx], starts, seg_ids)
        log_z = alpha[self._final]
        bad = np.flatnonzero(~np.isfinite(log_z))
        if len(bad):
            raise UnsegmentableWordError(self.words[bad[0]])
        beta = np.full(n_nodes, -np.inf)
        beta[self._final] = 0.0
        for idx, starts, seg_ids, targets in self._bwd:
            beta[targets] = self._reduce(lp[idx] + beta[self._to[idx]], starts, seg_ids)
        with np.errstate(invalid='ignore'):
            post = np.exp(alpha[self._from] + lp + beta[self._to] - log_z[self.arc_word])
        post[~np.isfinite(post)] = 0.0
        return post, log_z


class EStepEngine:
    """Corpus E-step over word shards, reusable across EM iterations.

    Words are split into `threads` contiguous shards whose forward-backward
    passes run concurrently. Per-arc posteriors depend only on their own
    word, and the final reduction runs once over all arcs in corpus order,
    so the result is bit-identical for any number of threads.
    """

    def __init__(self, data, model, threads=1, _shards=None):
        self.threads = max(1, int(threads))
        if _shards is not None:
            self.shards = _shards
            return
        words = list(data.words)
        weights = data.effective_counts()
        bounds = np.linspace(0, len(words), self.threads + 1).astype(int)
        self.shards = [CorpusLattice.build(words[lo:hi], weights[lo:hi], model)
                       for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]

    @property
    def subwords(self):
        return self.shards[0].subwords

    def restrict(self, model):
        return EStepEngine(None, model, self.threads,
                           _shards=[s.restrict(model) for s in self.shards])

    def run(self, model):
        if model.subwords != self.subwords:
            raise ValueError('engine was built for a different lexicon')
        logprobs = model.logprobs
        if self.threads > 1 and len(self.shards) > 1:
            with concurrent.futures.ThreadPoolExecutor(self.threads) as pool:
                results = list(pool.map(lambda s: s.posteriors(logprobs), self.shards))
        else:
            results = [s.posteriors(logprobs) for s in self.shards]
        post = np.concatenate([p * s.weights[s.arc_word] for (p, _), s in zip(results, self.shards)])
        subs = np.concatenate([s.arc_sub for s in self.shards])
        counts = np.bincount(subs, weights=post, minlength=len(model))
        loglik = math.fsum(float(x) for (_, lz), s in zip(results, self.shards)
                           for x in lz * s.weights)
        return ExpectedCounts(model.subwords, counts, loglik)


def corpus_estep(data, model, threads=1):
    """Expected subword counts over the corpus, scaled by effective word counts."""
    if len(data) == 0:
        raise ValueError('empty corpus')
    return EStepEngine(data, model, threads).run(model)


def corpus_viterbi_counts(data, model):
    """Counts of subwords on the Viterbi path of every word."""
    counts = np.zeros(len(model))
    terms = []
    index = model.index
    for word, weight in data.items():
        seg = viterbi(build_lattice(word, model))
        for m in seg.morphs:
            counts[index[m]] += weight
        terms.append(weight * seg.logprob)
    return ExpectedCounts(model.subwords, counts, math.fsum(terms))


def viterbi_segmentations(data, model, oov_fallback=False):
    """Viterbi segmentation of every training word, as word -> morph tuple."""
    return {word: viterbi(build_lattice(word, model, oov_fallback=oov_fallback)).morphs
            for word in data}
