"""Morfessor EM+Prune training.

Each round re-estimates the parameters with a few EM sub-iterations, scores
the model, estimates for every prunable subword how the cost would change if
it were removed, and prunes according to the configured criterion.
"""
import collections
import csv
import io
import logging
import math

import numpy as np

from .corpus import DAMPENING_MODES
from .exceptions import ConfigError
from .lattice import EStepEngine, StringViterbi, corpus_viterbi_counts
from .model import ZERO_COUNT_FLOOR, m_step_bayesian, m_step_plain
from .prior import (PriorConfig, corpus_char_distribution, freq_distribution_prior,
                    total_cost)
from .seed import ForceSplitRule, SeedConfig, build_seed

log = logging.getLogger(__name__)

EM_VARIANTS = ('em', 'lateen', 'viterbi_prune')
CRITERIA = ('mdl', 'autotune', 'lexicon_size')
HISTORY_FIELDS = ('round', 'lexicon_size', 'prior', 'likelihood', 'weighted', 'alpha', 'pruned')


class TrainConfig:
    """Every switch of the EM+Prune training scheme."""

    def __init__(self, em_variant='em', sub_iterations=3, pruning_quota=0.2,
                 criterion='mdl', target_size=None, prior=None,
                 stop_cost_rel_threshold=1e-4, max_rounds=15, seed=None,
                 rng_seed=0, dampening='ones', threads=1):
        self.em_variant = em_variant
        self.sub_iterations = sub_iterations
        self.pruning_quota = pruning_quota
        self.criterion = criterion
        self.target_size = target_size
        self.prior = prior if prior is not None else PriorConfig()
        self.stop_cost_rel_threshold = stop_cost_rel_threshold
        self.max_rounds = max_rounds
        self.seed = seed if seed is not None else SeedConfig()
        self.rng_seed = rng_seed
        self.dampening = dampening
        self.threads = threads
        self.validate()

    def validate(self):
        if self.em_variant not in EM_VARIANTS:
            raise ConfigError('em_variant must be one of %s, got %r'
                              % (', '.join(EM_VARIANTS), self.em_variant))
        if self.criterion not in CRITERIA:
            raise ConfigError('criterion must be one of %s, got %r'
                              % (', '.join(CRITERIA), self.criterion))
        if self.dampening not in DAMPENING_MODES:
            raise ConfigError('dampening must be one of %s' % ', '.join(DAMPENING_MODES))
        if not 0 < self.pruning_quota < 1:
            raise ConfigError('pruning_quota must be in (0, 1), got %r' % self.pruning_quota)
        if int(self.sub_iterations) < 1:
            raise ConfigError('sub_iterations must be >= 1')
        if int(self.max_rounds) < 1:
            raise ConfigError('max_rounds must be >= 1')
        if int(self.threads) < 1:
            raise ConfigError('threads must be >= 1')
        if self.stop_cost_rel_threshold < 0:
            raise ConfigError('stop_cost_rel_threshold must be >= 0')
        if self.criterion in ('mdl', 'autotune') and self.prior.variant == 'noprior':
            raise ConfigError('criterion %r needs a prior; use lexicon_size with noprior'
                              % self.criterion)
        if self.criterion in ('autotune', 'lexicon_size'):
            if self.target_size is None or int(self.target_size) < 1:
                raise ConfigError('criterion %r needs a target lexicon size >= 1' % self.criterion)

    def __repr__(self):
        fields = ', '.join('%s=%r' % kv for kv in sorted(vars(self).items()))
        return 'TrainConfig(%s)' % fields


def sentencepiece_preset(target_size):
    """Configuration equivalent to SentencePiece unigram training."""
    if int(target_size) < 1:
        raise ConfigError('target_size must be >= 1')
    return TrainConfig(em_variant='viterbi_prune', sub_iterations=2, criterion='lexicon_size',
                       target_size=int(target_size), prior=PriorConfig('noprior'),
                       dampening='none', seed=SeedConfig(forcesplit=ForceSplitRule()))


RoundRecord = collections.namedtuple(
    'RoundRecord', HISTORY_FIELDS + ('note',))


class TrainHistory:
    """Per-round records; `to_csv` renders the fixed progress-log columns."""

    def __init__(self):
        self.records = []

    def add(self, round_no, lexicon_size, cost, alpha, pruned, note=''):
        rec = RoundRecord(round_no, lexicon_size, cost.prior_nats, cost.likelihood_nats,
                          cost.weighted_total, alpha, pruned, note)
        self.records.append(rec)
        return rec

    @staticmethod
    def format_row(rec):
        return [str(rec.round), str(rec.lexicon_size), repr(float(rec.prior)),
                repr(float(rec.likelihood)), repr(float(rec.weighted)),
                repr(float(rec.alpha)), str(rec.pruned)]

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator='\n')
        writer.writerow(HISTORY_FIELDS)
        for rec in self.records:
            writer.writerow(self.format_row(rec))
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, 'w', encoding='utf-8', newline='') as fobj:
            fobj.write(self.to_csv())

    @property
    def final(self):
        return self.records[-1]

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


def em_round(model, data, config, engine=None):
    """EM sub-iterations plus the counts the pruning phase should use.

    Returns (model', counts). For `em` the counts come from a final soft
    E-step under model'; for `viterbi_prune` from a Viterbi pass under
    model'; for `lateen` the Viterbi counts also drive one last M-step.
    """
    if engine is None:
        engine = EStepEngine(data, model, config.threads)
    mstep = m_step_bayesian if config.prior.bayesian_mstep else m_step_plain
    for _ in range(config.sub_iterations):
        model = mstep(engine.run(model), model)
    if config.em_variant == 'em':
        return model, engine.run(model)
    hard = corpus_viterbi_counts(data, model)
    if config.em_variant == 'lateen':
        model = mstep(hard, model)
    return model, hard


def _xlogx(x):
    return x * math.log(x) if x > 0 else 0.0


Deltas = collections.namedtuple('Deltas', ['subwords', 'prior', 'likelihood'])


def removal_deltas(model, counts, prior_config, char_distribution):
    """Estimated (prior, likelihood) cost change of removing each subword.

    The removed subword's count moves onto the morphs of its best
    segmentation without itself. The likelihood change is evaluated on the
    maximum-likelihood cost nu ln nu - sum C ln C, updating only the terms of
    affected morphs. Protected subwords get +inf for both parts.
    """
    if counts.subwords != model.subwords:
        raise ValueError('counts do not match the model lexicon')
    c = counts.counts
    nu = float(math.fsum(c))
    mu = len(model)
    index = model.index
    nu_term = _xlogx(nu)
    log_mu = math.log(mu)
    freq_now = freq_distribution_prior(nu, mu) if prior_config.uses_freq else 0.0
    search = StringViterbi(model)
    dprior = np.full(mu, np.inf)
    dlik = np.full(mu, np.inf)
    for i, z in enumerate(model.subwords):
        if len(z) == 1:
            continue
        cz = float(c[i])
        if cz < ZERO_COUNT_FLOOR:
            d_l = 0.0
            nu_new = nu
        else:
            best = search.best_without_whole(z)
            if best is None:
                continue
            morphs = collections.Counter(best[1])
            k = len(best[1])
            nu_new = nu + (k - 1) * cz
            local = -_xlogx(cz)
            for m, mult in morphs.items():
                cm = float(c[index[m]])
                local += _xlogx(cm + mult * cz) - _xlogx(cm)
            d_l = (_xlogx(nu_new) - nu_term) - local
        d_p = 0.0
        if prior_config.uses_form:
            d_p = log_mu - char_distribution.morph_cost(z)
            if prior_config.uses_freq:
                d_p += freq_distribution_prior(nu_new, mu - 1) - freq_now
        dprior[i] = d_p
        dlik[i] = d_l
    return Deltas(model.subwords, dprior, dlik)


def pruning_quota(size, quota):
    return max(1, int(math.floor(quota * size)))


def _ranked(deltas, alpha, negative_only):
    total = deltas.prior + alpha * deltas.likelihood
    ok = np.isfinite(total)
    if negative_only:
        ok &= total < 0
    idx = np.flatnonzero(ok)
    # Subwords are sorted, so index order breaks ties alphabetically.
    order = idx[np.lexsort((idx, total[idx]))]
    return [deltas.subwords[i] for i in order]


def select_mdl(deltas, alpha, limit):
    """Subwords to prune under MDL: most negative weighted change first, only while negative."""
    return _ranked(deltas, alpha, True)[:limit]


def select_lexicon_size(deltas, alpha, n_prune):
    """The `n_prune` subwords with the smallest weighted change, whatever its sign."""
    return _ranked(deltas, alpha, False)[:n_prune]


def autotune_alpha(deltas, n_prune):
    """Alpha at which MDL pruning would remove `n_prune` subwords.

    Subwords whose removal lowers one cost and raises the other have a
    break-even alpha* = -dprior / dlikelihood. With dprior < 0 < dlikelihood
    removal happens for alpha < alpha*, with the opposite signs for alpha >
    alpha*. Subwords lowering both costs are removed at any alpha; those
    raising both are never removed. Returns (alpha, reachable): the largest
    alpha removing at least `n_prune` subwords, or the alpha removing the most
    if no alpha removes enough.
    """
    dp, dl = deltas.prior, deltas.likelihood
    fin = np.isfinite(dp) & np.isfinite(dl)
    dp, dl = dp[fin], dl[fin]
    always = int(np.count_nonzero(((dp < 0) & (dl <= 0)) | ((dp == 0) & (dl < 0))))
    a_mask = (dp < 0) & (dl > 0)
    b_mask = (dp > 0) & (dl < 0)
    t_a = np.sort(-dp[a_mask] / dl[a_mask])
    t_b = np.sort(-dp[b_mask] / dl[b_mask])
    thresholds = np.unique(np.concatenate([t_a, t_b]))
    if len(thresholds) == 0:
        return 1.0, always >= n_prune
    # Count is constant between consecutive thresholds; probe each interval.
    probes = np.concatenate([[thresholds[0] / 2],
                             (thresholds[:-1] + thresholds[1:]) / 2,
                             [thresholds[-1] * 2]])
    removed = (always + (len(t_a) - np.searchsorted(t_a, probes, side='right'))
               + np.searchsorted(t_b, probes, side='left'))
    enough = np.flatnonzero(removed >= n_prune)
    if len(enough):
        return float(probes[enough[-1]]), True
    best = np.flatnonzero(removed == removed.max())[-1]
    return float(probes[best]), False


def _prune_step(model, deltas, config):
    """Apply the pruning criterion; returns (removed, alpha in effect, note)."""
    size = len(model)
    limit = pruning_quota(size, config.pruning_quota)
    if config.criterion == 'mdl':
        return select_mdl(deltas, config.prior.alpha, limit), config.prior.alpha, ''
    n_prune = min(limit, max(0, size - int(config.target_size)))
    if config.criterion == 'lexicon_size':
        return select_lexicon_size(deltas, config.prior.alpha, n_prune), config.prior.alpha, ''
    alpha, reachable = autotune_alpha(deltas, n_prune)
    removed = select_mdl(deltas, alpha, n_prune)
    note = '' if reachable and len(removed) == n_prune else 'target not reachable this round'
    return removed, alpha, note


TrainResult = collections.namedtuple('TrainResult', ['model', 'history', 'counts'])


def train(data, config, progress=None):
    """Train an EM+Prune model.

    Returns (model, history, counts) where counts are the final round's
    pruning counts. `progress`, if given, is called with each RoundRecord.
    """
    config.validate()
    data = data.with_dampening(config.dampening)
    char_dist = corpus_char_distribution(data)
    model = build_seed(data, config.seed).model
    if config.criterion != 'mdl' and int(config.target_size) < len(model.protected()):
        raise ConfigError('target size %d is below the number of protected single characters (%d)'
                          % (config.target_size, len(model.protected())))
    engine = EStepEngine(data, model, config.threads)
    history = TrainHistory()
    prev_weighted = None
    counts = None
    alpha = config.prior.alpha
    for round_no in range(1, config.max_rounds + 2):
        engine = engine.restrict(model)
        model, counts = em_round(model, data, config, engine)
        cost = total_cost(model, counts, config.prior, char_dist)
        stop = round_no > config.max_rounds
        if config.criterion == 'mdl':
            if prev_weighted is not None and prev_weighted != 0:
                change = abs(prev_weighted - cost.weighted_total) / abs(prev_weighted)
                stop = stop or change < config.stop_cost_rel_threshold
        elif len(model) <= int(config.target_size):
            stop = True
        if stop:
            rec = history.add(round_no, len(model), cost, alpha, 0)
            _report(rec, progress)
            break
        deltas = removal_deltas(model, counts, config.prior, char_dist)
        removed, alpha, note = _prune_step(model, deltas, config)
        rec = history.add(round_no, len(model), cost, alpha, len(removed), note)
        _report(rec, progress)
        if not removed:
            break
        model = model.prune(removed)
        prev_weighted = cost.weighted_total
    return TrainResult(model, history, counts)


def _report(rec, progress):
    log.debug('round %d: size=%d prior=%.6g likelihood=%.6g weighted=%.6g alpha=%.6g pruned=%d%s',
             rec.round, rec.lexicon_size, rec.prior, rec.likelihood, rec.weighted, rec.alpha,
             rec.pruned, (' (%s)' % rec.note) if rec.note else '')
    if progress is not None:
        progress(rec)


__all__ = ['TrainConfig', 'TrainHistory', 'RoundRecord', 'Deltas', 'TrainResult',
           'sentencepiece_preset', 'em_round', 'removal_deltas', 'autotune_alpha',
           'select_mdl', 'select_lexicon_size', 'pruning_quota', 'train']
