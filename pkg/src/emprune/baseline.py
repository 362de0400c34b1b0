"""Morfessor Baseline: greedy local search by recursive binary splitting.

Every word starts unsplit. An epoch visits the word types in a seeded random
order and re-decides each one: keep it whole or split it in two, whichever
gives the lowest cost, then recurse into both halves. Split decisions are
stored per construction (word or intermediate substring) and shared by all
words that contain it, so the leaves of the split trees form the lexicon.
"""
import collections
import math
import random
from math import lgamma, log

from .evaluation import evaluate_cost, induced_model
from .prior import PriorConfig, corpus_char_distribution, freq_distribution_prior
from .seed import ForceSplitRule
from .trainer import TrainHistory

BaselineResult = collections.namedtuple('BaselineResult',
                                        ['model', 'history', 'segmentations', 'cost'])

_EPS = 1e-9


def _xlogx(x):
    return x * math.log(x) if x > 0 else 0.0


class BaselineTrainer:
    """Shared split store with incrementally maintained cost terms.

    `nodes` maps a construction to [count, splitloc]; splitloc 0 marks a
    leaf (a morph). The cost is
        alpha * (nu ln nu - sum C ln C) + sum form_cost - ln(mu!) + freq(nu, mu)
    over the leaf counts C, token total nu and lexicon size mu.
    """

    def __init__(self, units, prior_config, char_distribution):
        self.units = dict(units)
        self.prior = prior_config
        self.chars = char_distribution
        self.alpha = prior_config.alpha
        self.nodes = {}
        self.nu = 0.0
        self.s_term = 0.0
        self.mu = 0
        self.form = 0.0
        for unit, weight in self.units.items():
            self._modify(unit, weight)

    def _modify(self, construction, dcount):
        nodes = self.nodes
        node = nodes.get(construction)
        if node is None:
            node = nodes[construction] = [0.0, 0]
        old = node[0]
        new = old + dcount
        if -_EPS < new < _EPS:
            new = 0.0
        k = node[1]
        if new == 0.0:
            del nodes[construction]
        else:
            node[0] = new
        if k:
            self._modify(construction[:k], dcount)
            self._modify(construction[k:], dcount)
            return
        if old == 0.0:
            self.mu += 1
            self.form += self.chars.morph_cost(construction)
        elif new == 0.0:
            self.mu -= 1
            self.form -= self.chars.morph_cost(construction)
        self.nu += dcount
        self.s_term += ((new * log(new) if new > 0.0 else 0.0)
                        - (old * log(old) if old > 0.0 else 0.0))

    def cost(self):
        nu = self.nu
        lik = nu * log(nu) - self.s_term if nu > 0.0 else 0.0
        if not self.prior.uses_form or self.mu == 0:
            return self.alpha * lik
        mu = self.mu
        prior = self.form - lgamma(mu + 1)
        if self.prior.uses_freq:
            prior += freq_distribution_prior(nu, mu)
        return prior + self.alpha * lik

    def _remove(self, construction):
        node = self.nodes[construction]
        count = node[0]
        self._modify(construction, -count)
        return count

    def _set_split(self, construction, count, splitloc):
        self.nodes[construction] = [0.0, splitloc]
        self._modify(construction, count)

    def recursive_split(self, construction):
        """Re-decide `construction` (all of its uses) and recurse into the halves."""
        if len(construction) == 1:
            return
        count = self._remove(construction)
        self._modify(construction, count)
        best_cost = self.cost()
        self._modify(construction, -count)
        splitloc = 0
        for i in range(1, len(construction)):
            prefix, suffix = construction[:i], construction[i:]
            self._modify(prefix, count)
            self._modify(suffix, count)
            c = self.cost()
            self._modify(prefix, -count)
            self._modify(suffix, -count)
            if c < best_cost:
                best_cost, splitloc = c, i
        self._set_split(construction, count, splitloc)
        if splitloc:
            prefix, suffix = construction[:splitloc], construction[splitloc:]
            self.recursive_split(prefix)
            if suffix != prefix:
                self.recursive_split(suffix)

    def segment(self, construction):
        node = self.nodes.get(construction)
        if node is None or not node[1]:
            return (construction,)
        k = node[1]
        return self.segment(construction[:k]) + self.segment(construction[k:])

    def leaf_counts(self):
        out = {}
        for c, (count, k) in self.nodes.items():
            if not k and count > 0:
                out[c] = count
        return {m: out[m] for m in sorted(out)}

    def recount(self):
        """Leaf counts recomputed from scratch by segmenting every unit."""
        out = collections.defaultdict(float)
        for unit, weight in self.units.items():
            for m in self.segment(unit):
                out[m] += weight
        return {m: out[m] for m in sorted(out)}

    def epoch(self, rng):
        order = sorted(self.units)
        rng.shuffle(order)
        for unit in order:
            self.recursive_split(unit)


def _units(data, forcesplit):
    """Training units: words, or word fragments between forced boundaries."""
    if not forcesplit:
        return dict(data.items())
    units = collections.defaultdict(float)
    for word, weight in data.items():
        for piece in forcesplit.split_word(word):
            units[piece] += weight
    return dict(units)


def train_baseline(data, prior_config=None, rng_seed=0, convergence_threshold=1e-4,
                   max_epochs=50, forcesplit=None, progress=None):
    """Train Morfessor Baseline; returns (model, history, segmentations, cost)."""
    prior_config = prior_config or PriorConfig()
    forcesplit = forcesplit or ForceSplitRule()
    if len(data) == 0:
        raise ValueError('empty corpus')
    chars = corpus_char_distribution(data)
    trainer = BaselineTrainer(_units(data, forcesplit), prior_config, chars)
    rng = random.Random(rng_seed)
    history = TrainHistory()
    prev = trainer.cost()
    for epoch in range(1, max_epochs + 1):
        trainer.epoch(rng)
        cost = trainer.cost()
        segs = _segmentations(trainer, data, forcesplit)
        breakdown = evaluate_cost(segs, data, prior_config, chars)
        rec = history.add(epoch, trainer.mu, breakdown, prior_config.alpha, 0)
        if progress is not None:
            progress(rec)
        if prev == 0 or (prev - cost) / abs(prev) < convergence_threshold:
            break
        prev = cost
    segs = _segmentations(trainer, data, forcesplit)
    model, _ = induced_model(segs, data)
    return BaselineResult(model, history, segs, breakdown)


def _segmentations(trainer, data, forcesplit):
    out = {}
    for word in data:
        if forcesplit:
            morphs = ()
            for piece in forcesplit.split_word(word):
                morphs += trainer.segment(piece)
        else:
            morphs = trainer.segment(word)
        out[word] = morphs
    return out


__all__ = ['BaselineTrainer', 'BaselineResult', 'train_baseline']
