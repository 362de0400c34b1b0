"""Evaluation: Morfessor cost of a segmentation, boundary P/R/F, error analysis,
and a Wilcoxon signed-rank test for paired per-word scores."""
import collections
import csv
import math

from .corpus import CATEGORIES
from .exceptions import ValidationError
from .model import ExpectedCounts, UnigramModel
from .prior import corpus_char_distribution, make_breakdown, prior_cost

UNDER_KEYS = ('STM-SUF', 'STM-STM', 'SUF-SUF', 'SUF-STM', 'PRE-STM', 'UNKNOWN')
OVER_KEYS = ('STM', 'SUF', 'PRE', 'UNKNOWN')


def _xlogx(x):
    return x * math.log(x) if x > 0 else 0.0


def segmentation_counts(segmentations, data):
    """Morph counts of the training words under `segmentations`, scaled by effective counts."""
    counts = collections.defaultdict(list)
    for word, weight in data.items():
        try:
            morphs = segmentations[word]
        except KeyError:
            raise ValidationError('word %r is missing from the segmentation' % word) from None
        if ''.join(morphs) != word:
            raise ValidationError('segmentation %r does not concatenate to %r'
                                  % (' '.join(morphs), word))
        for m in morphs:
            counts[m].append(weight)
    return {m: math.fsum(ws) for m, ws in sorted(counts.items())}


def counts_cost(counts, prior_config, char_distribution):
    """Cost of a segmented corpus given its morph counts, with ML parameters."""
    nu = math.fsum(counts.values())
    likelihood = _xlogx(nu) - math.fsum(_xlogx(c) for c in counts.values())
    prior = prior_cost(counts.keys(), nu, prior_config, char_distribution)
    return make_breakdown(prior, likelihood, prior_config.alpha)


def evaluate_cost(segmentations, data, prior_config, char_distribution=None):
    """Load a segmentation as a model (normalized morph counts) and score it.

    Returns a CostBreakdown whose likelihood is sum over word types of
    effective count times the negative log-probability of its morphs.
    """
    if char_distribution is None:
        char_distribution = corpus_char_distribution(data)
    counts = segmentation_counts(segmentations, data)
    return counts_cost(counts, prior_config, char_distribution)


def induced_model(segmentations, data):
    """Maximum-likelihood model and counts induced by a segmentation."""
    counts = segmentation_counts(segmentations, data)
    model = UnigramModel.from_counts(counts)
    nu = math.fsum(counts.values())
    loglik = math.fsum(_xlogx(c) for c in counts.values()) - _xlogx(nu)
    return model, ExpectedCounts.from_dict(counts, model.subwords, loglik)


# Boundary precision / recall

WordScore = collections.namedtuple(
    'WordScore', ['word', 'precision', 'recall', 'hyp_boundaries', 'ref_boundaries',
                  'correct', 'reference'])
BPRResult = collections.namedtuple('BPRResult', ['precision', 'recall', 'f1', 'words'])


def boundaries(morphs):
    out = set()
    pos = 0
    for m in morphs[:-1]:
        pos += len(m)
        out.add(pos)
    return out


def _surfaces(analysis):
    return [m.surface if hasattr(m, 'surface') else m for m in analysis]


def _pr(hyp, ref):
    correct = len(hyp & ref)
    if not ref:
        return (1.0 if not hyp else 0.0), 1.0, correct
    if not hyp:
        return 1.0, 0.0, correct
    return correct / len(hyp), correct / len(ref), correct


def f_score(p, r):
    return 2 * p * r / (p + r) if p > 0 and r > 0 else 0.0


def _best_reference(hyp, analyses):
    """Index and scores of the highest-F reference; the first one wins ties."""
    best = None
    for i, analysis in enumerate(analyses):
        ref = boundaries(_surfaces(analysis))
        p, r, correct = _pr(hyp, ref)
        f = f_score(p, r)
        if best is None or f > best[0]:
            best = (f, i, p, r, correct, ref)
    return best


def _hyp_morphs(hypothesis, word):
    try:
        morphs = tuple(hypothesis[word])
    except KeyError:
        raise ValidationError('word %r is missing from the hypothesis' % word) from None
    if ''.join(morphs) != word:
        raise ValidationError('hypothesis %r does not concatenate to %r' % (' '.join(morphs), word))
    return morphs


def boundary_prf(hypothesis, gold):
    """Macro-averaged boundary precision and recall, F from the averages."""
    scores = []
    for word, analyses in gold.items():
        hyp = boundaries(_hyp_morphs(hypothesis, word))
        _, idx, p, r, correct, ref = _best_reference(hyp, analyses)
        scores.append(WordScore(word, p, r, len(hyp), len(ref), correct, idx))
    if not scores:
        raise ValidationError('empty gold standard')
    precision = math.fsum(s.precision for s in scores) / len(scores)
    recall = math.fsum(s.recall for s in scores) / len(scores)
    return BPRResult(precision, recall, f_score(precision, recall), scores)


# Error analysis

ErrorProfile = collections.namedtuple(
    'ErrorProfile', ['over', 'under', 'hyp_total', 'ref_total', 'correct'])


def _pct(part, whole):
    return 100.0 * part / whole if whole else 0.0


class ErrorReport:
    """Over-/under-segmentation counts by morph category with percentage views."""

    def __init__(self, profile):
        self.profile = profile

    @property
    def over_total(self):
        return sum(self.profile.over.values())

    @property
    def under_total(self):
        return sum(self.profile.under.values())

    def over_percentages(self):
        total = self.over_total
        return {k: _pct(v, total) for k, v in self.profile.over.items()}

    def under_percentages(self):
        total = self.under_total
        return {k: _pct(v, total) for k, v in self.profile.under.items()}

    @property
    def precision_pct(self):
        """Share of hypothesis boundaries that are correct (PRE/TOT)."""
        p = self.profile
        return _pct(p.correct, p.hyp_total) if p.hyp_total else 100.0

    @property
    def recall_pct(self):
        """Share of reference boundaries recovered (REC/TOT)."""
        p = self.profile
        return _pct(p.correct, p.ref_total) if p.ref_total else 100.0


def error_analysis(hypothesis, gold):
    """Attribute boundary errors to gold morph categories, using the best-F reference per word."""
    over = collections.OrderedDict((k, 0) for k in OVER_KEYS)
    under = collections.OrderedDict((k, 0) for k in UNDER_KEYS)
    hyp_total = ref_total = correct_total = 0
    for word, analyses in gold.items():
        hyp = boundaries(_hyp_morphs(hypothesis, word))
        _, idx, _, _, correct, ref = _best_reference(hyp, analyses)
        analysis = analyses[idx]
        # Category of the gold morph covering each character span.
        spans = []
        pos = 0
        for m in analysis:
            spans.append((pos, pos + len(m.surface), m.category))
            pos += len(m.surface)
        for b in sorted(hyp - ref):
            for start, end, cat in spans:
                if start < b < end:
                    over[cat] += 1
                    break
        for b in sorted(ref - hyp):
            left = next(cat for start, end, cat in spans if end == b)
            right = next(cat for start, end, cat in spans if start == b)
            key = '%s-%s' % (left, right)
            under[key if key in under else 'UNKNOWN'] += 1
        hyp_total += len(hyp)
        ref_total += len(ref)
        correct_total += correct
    return ErrorReport(ErrorProfile(dict(over), dict(under), hyp_total, ref_total, correct_total))


# Wilcoxon signed-rank test

WilcoxonResult = collections.namedtuple('WilcoxonResult', ['statistic', 'pvalue', 'n', 'method'])


def _ranks(values):
    """Average ranks (1-based) with ties sharing the mean rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def _exact_upper_tail(ranks, t_obs):
    """P(T+ >= t_obs) over all 2^n sign assignments; ranks may be half-integers."""
    scaled = [int(round(2 * r)) for r in ranks]
    total = sum(scaled)
    dist = [0] * (total + 1)
    dist[0] = 1
    for r in scaled:
        for s in range(total, r - 1, -1):
            dist[s] += dist[s - r]
    return sum(dist[int(round(2 * t_obs)):]) / float(2 ** len(scaled))


def wilcoxon(x, y, exact_limit=25):
    """Two-sided Wilcoxon signed-rank test on paired samples with zero splitting.

    Zero differences are kept and their ranks split evenly between the
    positive and negative sums. The exact null distribution is used for
    n <= exact_limit without zero differences, otherwise the normal
    approximation with tie correction.
    """
    if len(x) != len(y):
        raise ValueError('samples must be paired')
    d = [a - b for a, b in zip(x, y)]
    n = len(d)
    if n == 0:
        raise ValueError('no pairs')
    ranks = _ranks([abs(v) for v in d])
    t_plus = math.fsum(r for r, v in zip(ranks, d) if v > 0)
    t_plus += 0.5 * math.fsum(r for r, v in zip(ranks, d) if v == 0)
    t_minus = n * (n + 1) / 2.0 - t_plus
    statistic = min(t_plus, t_minus)
    if all(v == 0 for v in d):
        return WilcoxonResult(statistic, 1.0, n, 'exact')
    if n <= exact_limit and all(v != 0 for v in d):
        upper = _exact_upper_tail(ranks, max(t_plus, t_minus))
        return WilcoxonResult(statistic, min(1.0, 2 * upper), n, 'exact')
    mean = n * (n + 1) / 4.0
    counts = collections.Counter(ranks)
    tie_term = math.fsum(t ** 3 - t for t in counts.values()) / 48.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term
    if var <= 0:
        return WilcoxonResult(statistic, 1.0, n, 'normal')
    z = (statistic - mean) / math.sqrt(var)
    p = math.erfc(abs(z) / math.sqrt(2))
    return WilcoxonResult(statistic, min(1.0, p), n, 'normal')


# Reports

def bpr_table(result):
    return ('Pre\tRec\tF\n%.2f\t%.2f\t%.2f\n'
            % (100 * result.precision, 100 * result.recall, 100 * result.f1))


def write_bpr_csv(result, path):
    with open(path, 'w', encoding='utf-8', newline='') as fobj:
        w = csv.writer(fobj, lineterminator='\n')
        w.writerow(['Pre', 'Rec', 'F'])
        w.writerow([repr(100 * result.precision), repr(100 * result.recall), repr(100 * result.f1)])


def _error_row(report):
    over = report.over_percentages()
    under = report.under_percentages()
    row = [report.precision_pct] + [over[k] for k in OVER_KEYS]
    row += [report.recall_pct] + [under[k] for k in UNDER_KEYS]
    return row


ERROR_HEADER = (['PRE/TOT'] + ['over:%s' % k for k in OVER_KEYS]
                + ['REC/TOT'] + ['under:%s' % k for k in UNDER_KEYS])


def error_table(report):
    return '\t'.join(ERROR_HEADER) + '\n' + '\t'.join('%.2f' % v for v in _error_row(report)) + '\n'


def write_error_csv(report, path):
    with open(path, 'w', encoding='utf-8', newline='') as fobj:
        w = csv.writer(fobj, lineterminator='\n')
        w.writerow(ERROR_HEADER)
        w.writerow([repr(v) for v in _error_row(report)])


def cost_table(cost):
    return ('Prior\tLikelihood\tW-sum\talpha\n%.6g\t%.6g\t%.6g\t%g\n'
            % (cost.prior_nats, cost.likelihood_nats, cost.weighted_total, cost.alpha))


def write_cost_csv(cost, path):
    with open(path, 'w', encoding='utf-8', newline='') as fobj:
        w = csv.writer(fobj, lineterminator='\n')
        w.writerow(['Prior', 'Likelihood', 'W-sum', 'alpha'])
        w.writerow([repr(cost.prior_nats), repr(cost.likelihood_nats),
                    repr(cost.weighted_total), repr(cost.alpha)])


__all__ = ['evaluate_cost', 'segmentation_counts', 'counts_cost', 'induced_model',
           'boundary_prf', 'BPRResult', 'error_analysis', 'ErrorReport', 'ErrorProfile',
           'wilcoxon', 'WilcoxonResult', 'CATEGORIES']
