"""Morfessor prior (morph form + frequency distribution) and the two-part cost.

All quantities are in nats. The weighted cost is `prior + alpha * likelihood`
where the likelihood term is the negative corpus log-likelihood.
"""
import collections
import math

from .exceptions import ValidationError

PRIOR_VARIANTS = ('full', 'noexp_psi', 'nofreqdistr', 'noprior')

CostBreakdown = collections.namedtuple(
    'CostBreakdown', ['prior_nats', 'likelihood_nats', 'alpha', 'weighted_total'])


def make_breakdown(prior, likelihood, alpha):
    return CostBreakdown(prior, likelihood, alpha, prior + alpha * likelihood)


class PriorConfig:
    """Prior variant and likelihood weight alpha."""

    __slots__ = ('variant', 'alpha')

    def __init__(self, variant='full', alpha=1.0):
        if variant not in PRIOR_VARIANTS:
            raise ValidationError('unknown prior variant %r (choose from %s)'
                                  % (variant, ', '.join(PRIOR_VARIANTS)))
        alpha = float(alpha)
        if not (alpha > 0 and math.isfinite(alpha)):
            raise ValidationError('alpha must be a positive finite number, got %r' % alpha)
        self.variant = variant
        self.alpha = alpha

    @property
    def uses_form(self):
        return self.variant != 'noprior'

    @property
    def uses_freq(self):
        return self.variant in ('full', 'noexp_psi')

    @property
    def bayesian_mstep(self):
        return self.variant != 'noexp_psi'

    def with_alpha(self, alpha):
        return PriorConfig(self.variant, alpha)

    def __eq__(self, other):
        return (isinstance(other, PriorConfig)
                and (self.variant, self.alpha) == (other.variant, other.alpha))

    def __repr__(self):
        return 'PriorConfig(%r, alpha=%r)' % (self.variant, self.alpha)


def round_half_up(x):
    return int(math.floor(x + 0.5))


def log_binomial(n, k):
    """ln C(n, k) through log-gamma."""
    if k < 0 or k > n:
        raise ValueError('log_binomial needs 0 <= k <= n, got n=%r k=%r' % (n, k))
    # Fixed evaluation order keeps C(n, k) and C(n, n - k) bit-identical.
    k = min(k, n - k)
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def freq_distribution_prior(total_tokens, lexicon_size):
    """Cost of the morph frequency distribution, ln C(nu' - 1, mu - 1).

    nu' is the token total rounded to the nearest integer. Returns 0 when
    mu == 1 or nu' <= mu, where the binomial is 1 or undefined.
    """
    if lexicon_size < 1:
        raise ValueError('lexicon size must be >= 1, got %r' % (lexicon_size,))
    nu = round_half_up(total_tokens)
    mu = int(lexicon_size)
    if mu == 1 or nu <= mu:
        return 0.0
    return log_binomial(nu - 1, mu - 1)


class CharDistribution:
    """Code point distribution plus an end-of-morph marker, used to encode morph forms."""

    def __init__(self, probs, end_prob):
        total = math.fsum(probs.values()) + end_prob
        if not (end_prob > 0 and abs(total - 1.0) < 1e-9):
            raise ValueError('character probabilities must be positive and sum to 1')
        self.probs = dict(sorted(probs.items()))
        self.end_prob = end_prob
        self._cost = {c: -math.log(p) for c, p in self.probs.items()}
        self._end_cost = -math.log(end_prob)
        self._memo = {}

    def morph_cost(self, morph):
        """Cost of spelling `morph` followed by the end marker."""
        cost = self._memo.get(morph)
        if cost is None:
            try:
                cost = math.fsum([self._cost[c] for c in morph]) + self._end_cost
            except KeyError as exc:
                raise ValidationError('code point %r is not in the character distribution'
                                      % exc.args[0]) from None
            self._memo[morph] = cost
        return cost

    def __contains__(self, ch):
        return ch in self.probs


def corpus_char_distribution(data):
    """Character distribution estimated from a word-count table.

    Each code point is counted with the effective count of the word it
    occurs in; the end marker gets one event per word type.
    """
    if len(data) == 0:
        raise ValueError('empty corpus')
    counts = collections.defaultdict(list)
    for word, weight in data.items():
        for ch in word:
            counts[ch].append(weight)
    sums = {c: math.fsum(ws) for c, ws in counts.items()}
    n_end = float(len(data))
    total = math.fsum(sums.values()) + n_end
    return CharDistribution({c: s / total for c, s in sums.items()}, n_end / total)


def form_prior(lexicon, char_distribution):
    """Sum of morph spelling costs minus ln(mu!) for the unordered lexicon."""
    lexicon = sorted(lexicon)
    if not lexicon:
        return 0.0
    costs = [char_distribution.morph_cost(m) for m in lexicon]
    return math.fsum(costs) - math.lgamma(len(lexicon) + 1)


def prior_cost(lexicon, total_tokens, prior_config, char_distribution):
    if not prior_config.uses_form:
        return 0.0
    lexicon = list(lexicon)
    cost = form_prior(lexicon, char_distribution)
    if prior_config.uses_freq:
        cost += freq_distribution_prior(total_tokens, len(lexicon))
    return cost


def total_cost(model, counts, prior_config, char_distribution):
    """Two-part cost of `model` given counts (and data log-likelihood) from an E-step."""
    if tuple(counts.subwords) != tuple(model.subwords):
        raise ValueError('counts do not match the model lexicon')
    prior = prior_cost(model.subwords, counts.total, prior_config, char_distribution)
    return make_breakdown(prior, 0.0 - counts.data_loglik, prior_config.alpha)
