import math
import random

import numpy as np
import pytest

from emprune import (ConfigError, ExpectedCounts, PriorConfig, UnigramModel, WordCountTable,
                     corpus_estep, corpus_viterbi_counts)
from emprune.model import m_step_plain
from emprune.prior import corpus_char_distribution, freq_distribution_prior
from emprune.seed import ForceSplitRule, SeedConfig, build_seed
from emprune.trainer import (Deltas, TrainConfig, TrainHistory, autotune_alpha, em_round,
                             pruning_quota, removal_deltas, select_lexicon_size, select_mdl,
                             sentencepiece_preset, train)

from conftest import desk_subset
from oracles import hand_delta_likelihood, ranked_paths


def toy_config(**kw):
    kw.setdefault('seed', SeedConfig(max_seed_size=10))
    return TrainConfig(**kw)


def test_em_round_plain_toy(toy_model, toy_corpus):
    cfg = toy_config(sub_iterations=1, prior=PriorConfig('noexp_psi'))
    model, counts = em_round(toy_model, toy_corpus, cfg)
    probs = {s: math.exp(lp) for s, lp in model.items()}
    # Expected counts 1.128/0.696 and 0.48/0.696, renormalized.
    assert probs == {'a': pytest.approx(1.128 / 1.608, rel=1e-12),
                     'aa': pytest.approx(0.48 / 1.608, rel=1e-12)}
    assert probs['a'] == pytest.approx(0.70150, abs=1e-5)
    assert counts.as_dict() == corpus_estep(toy_corpus, model).as_dict()


def test_em_round_viterbi_prune_toy(toy_model, toy_corpus):
    em_model, _ = em_round(toy_model, toy_corpus, toy_config(sub_iterations=1))
    vp_model, counts = em_round(toy_model, toy_corpus,
                                toy_config(sub_iterations=1, em_variant='viterbi_prune'))
    assert vp_model == em_model
    # Counts come from a Viterbi pass under the updated model, where a.a.a wins.
    assert counts.as_dict() == corpus_viterbi_counts(toy_corpus, em_model).as_dict()
    assert counts.as_dict() == {'a': 3.0, 'aa': 0.0}
    assert corpus_viterbi_counts(toy_corpus, toy_model).as_dict() == {'a': 1.0, 'aa': 1.0}


def test_em_round_lateen_updates_from_hard_counts(toy_model, toy_corpus):
    cfg = toy_config(sub_iterations=1, em_variant='lateen', prior=PriorConfig('noexp_psi'))
    em_model, _ = em_round(toy_model, toy_corpus, toy_config(sub_iterations=1,
                                                             prior=PriorConfig('noexp_psi')))
    model, counts = em_round(toy_model, toy_corpus, cfg)
    assert counts.as_dict() == corpus_viterbi_counts(toy_corpus, em_model).as_dict()
    assert model == m_step_plain(counts, em_model)


def test_em_round_single_subword_fixpoint():
    model = UnigramModel({'a': 0.0})
    data = WordCountTable({'a': 2, 'aaa': 1})
    for variant in ('em', 'lateen', 'viterbi_prune'):
        for prior in ('full', 'noexp_psi'):
            out, _ = em_round(model, data, toy_config(em_variant=variant,
                                                      prior=PriorConfig(prior)))
            assert out == model


def test_removal_deltas_toy(toy_model, toy_corpus):
    counts = corpus_estep(toy_corpus, toy_model)
    chars = corpus_char_distribution(toy_corpus)
    cfg = PriorConfig('full', 1.0)
    d = removal_deltas(toy_model, counts, cfg, chars)
    assert d.subwords == ('a', 'aa')
    assert d.prior[0] == d.likelihood[0] == math.inf
    c_a, c_aa = counts.get('a'), counts.get('aa')
    nu = c_a + c_aa
    before = nu * math.log(nu) - c_a * math.log(c_a) - c_aa * math.log(c_aa)
    # After removal every token is "a": the ML cost is 0, as exact retraining on the corpus gives.
    assert d.likelihood[1] == pytest.approx(-before, rel=1e-12)
    assert d.likelihood[1] == pytest.approx(hand_delta_likelihood(toy_model, counts, 'aa'),
                                            rel=1e-12)
    form = 2 * math.log(4 / 3) + math.log(4)
    expected_prior = (math.log(2) - form + freq_distribution_prior(nu + c_aa, 1)
                      - freq_distribution_prior(nu, 2))
    assert d.prior[1] == pytest.approx(expected_prior, rel=1e-12)


def test_removal_deltas_zero_count():
    model = UnigramModel.from_counts({'a': 1.0, 'b': 1.0, 'ab': 1.0})
    counts = ExpectedCounts.from_dict({'a': 2.0, 'b': 2.0, 'ab': 0.0}, model.subwords)
    chars = corpus_char_distribution(WordCountTable({'a': 2, 'b': 2}))
    d = removal_deltas(model, counts, PriorConfig('nofreqdistr'), chars)
    assert d.subwords[1] == 'ab'
    assert d.likelihood[1] == 0.0
    assert d.prior[1] < 0
    d = removal_deltas(model, counts, PriorConfig('noprior'), chars)
    assert d.prior[1] == 0.0


def test_removal_deltas_match_hand_formula_random():
    rng = random.Random(12)
    for _ in range(40):
        words = {''.join(rng.choice('abc') for _ in range(rng.randint(1, 6))): rng.randint(1, 5)
                 for _ in range(rng.randint(2, 12))}
        data = WordCountTable(words)
        model = build_seed(data, SeedConfig(max_seed_size=rng.randint(3, 25))).model
        counts = corpus_estep(data, model)
        chars = corpus_char_distribution(data)
        cfg = PriorConfig('full', 1.0)
        d = removal_deltas(model, counts, cfg, chars)
        nu = counts.total
        for i, z in enumerate(model.subwords):
            if len(z) == 1:
                assert d.prior[i] == math.inf
                continue
            cz = counts.get(z)
            if cz < 1e-10:
                assert d.likelihood[i] == 0.0
                k = 1
            else:
                assert d.likelihood[i] == pytest.approx(
                    hand_delta_likelihood(model, counts, z), rel=1e-7, abs=1e-7)
                logprobs = {s: lp for s, lp in model.items() if s != z}
                k = len(ranked_paths(z, logprobs)[0][0])
            mu = len(model)
            expected = (math.log(mu) - chars.morph_cost(z)
                        + freq_distribution_prior(nu + (k - 1) * cz, mu - 1)
                        - freq_distribution_prior(nu, mu))
            assert d.prior[i] == pytest.approx(expected, rel=1e-9, abs=1e-9)


def deltas(prior, lik, names=None):
    names = names or tuple('w%02d' % i for i in range(len(prior)))
    return Deltas(tuple(names), np.array(prior, dtype=float), np.array(lik, dtype=float))


def test_select_mdl_examples():
    assert select_mdl(deltas([1.0, 2.0], [0.5, 0.1]), 1.0, 10) == []
    d = deltas([-5.0, -1.0], [0.0, 0.0], ('x', 'y'))
    assert select_mdl(d, 1.0, 1) == ['x']
    assert select_mdl(d, 1.0, 5) == ['y', 'x'][::-1]
    d = deltas([-3.0, math.inf, -3.0], [0.0, math.inf, 0.0], ('b', 'c', 'a'))
    assert select_mdl(d, 1.0, 5) == ['b', 'a']


def test_select_lexicon_size_ignores_sign():
    d = deltas([3.0, 1.0, -1.0, math.inf], [0.0, 0.0, 0.0, math.inf])
    assert select_lexicon_size(d, 1.0, 2) == ['w02', 'w01']
    assert select_lexicon_size(d, 1.0, 10) == ['w02', 'w01', 'w00']


def test_select_respects_alpha():
    d = deltas([-10.0], [5.0])
    assert select_mdl(d, 1.9, 1) == ['w00'] and select_mdl(d, 2.1, 1) == []


def test_pruning_quota():
    assert pruning_quota(100, 0.2) == 20
    assert pruning_quota(4, 0.2) == 1
    assert pruning_quota(12, 0.25) == 3


def test_autotune_examples():
    d = deltas([-10.0], [5.0])
    alpha, reachable = autotune_alpha(d, 1)
    assert alpha < 2 and reachable and select_mdl(d, alpha, 1) == ['w00']
    d = deltas([-1.0, -2.0], [-1.0, -3.0])
    alpha, reachable = autotune_alpha(d, 2)
    assert reachable and len(select_mdl(d, alpha, 2)) == 2
    _, reachable = autotune_alpha(deltas([1.0], [2.0]), 1)
    assert not reachable


def test_autotune_hits_every_count():
    rng = np.random.default_rng(5)
    for _ in range(30):
        n = 60
        d = deltas(rng.normal(size=n), rng.normal(size=n))
        reachable_max = max(len(select_mdl(d, a, n)) for a in np.geomspace(1e-4, 1e4, 2000))
        for k in range(1, n + 1):
            alpha, ok = autotune_alpha(d, k)
            got = len(select_mdl(d, alpha, n))
            if k <= reachable_max:
                assert ok and got >= k
                assert len(select_mdl(d, alpha, k)) == k
            else:
                assert not ok and got == reachable_max


def test_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(em_variant='nope')
    with pytest.raises(ConfigError):
        TrainConfig(pruning_quota=1.0)
    with pytest.raises(ConfigError):
        TrainConfig(criterion='mdl', prior=PriorConfig('noprior'))
    with pytest.raises(ConfigError):
        TrainConfig(criterion='autotune', prior=PriorConfig('noprior'), target_size=5)
    with pytest.raises(ConfigError):
        TrainConfig(criterion='lexicon_size')
    TrainConfig(criterion='lexicon_size', target_size=3, prior=PriorConfig('noprior'))
    TrainConfig(criterion='lexicon_size', target_size=3, prior=PriorConfig('full', 0.7))


def test_sentencepiece_preset():
    cfg = sentencepiece_preset(50)
    assert cfg.prior.variant == 'noprior' and cfg.prior.bayesian_mstep
    assert cfg.criterion == 'lexicon_size' and cfg.target_size == 50
    assert cfg.em_variant == 'viterbi_prune' and cfg.dampening == 'none'
    assert cfg.sub_iterations == 2 and not cfg.seed.forcesplit
    with pytest.raises(ConfigError):
        sentencepiece_preset(0)


def test_preset_pruning_order_matches_hand_deltas():
    data = WordCountTable({'abab': 3, 'abc': 2, 'cab': 2, 'bc': 1})
    cfg = sentencepiece_preset(4)
    cfg.seed = SeedConfig(max_seed_size=12)
    model = build_seed(data, cfg.seed).model
    model, counts = em_round(model, data, cfg)
    d = removal_deltas(model, counts, cfg.prior, corpus_char_distribution(data))
    assert np.all(d.prior[np.isfinite(d.prior)] == 0)
    multi = [z for z in model.subwords if len(z) > 1]
    hand = {z: hand_delta_likelihood(model, counts, z) for z in multi}
    assert len(set(round(v, 9) for v in hand.values())) > 2
    expected = sorted(multi, key=lambda z: (round(hand[z], 9), z))
    assert select_lexicon_size(d, 1.0, len(multi)) == expected


def test_toy_mdl_prunes_redundant_whole_word_first():
    data = WordCountTable({'aaa': 1})
    cfg = toy_config(prior=PriorConfig('full', 1.0))
    model, counts = em_round(build_seed(data, cfg.seed).model, data, cfg)
    d = removal_deltas(model, counts, cfg.prior, corpus_char_distribution(data))
    assert select_mdl(d, 1.0, 3)[0] == 'aaa'


def test_train_tiny_lexicon_size():
    data = WordCountTable({'aaa': 1, 'aa': 1})
    cfg = TrainConfig(criterion='lexicon_size', target_size=2, prior=PriorConfig('noprior'),
                      seed=SeedConfig(max_seed_size=10), dampening='none', max_rounds=10)
    result = train(data, cfg)
    assert len(result.model) == 2
    assert 'a' in result.model and sum(len(s) > 1 for s in result.model) == 1
    assert all(r.prior == 0.0 for r in result.history)


def test_train_preset_reports_zero_prior():
    data = desk_subset(1500)
    cfg = sentencepiece_preset(300)
    cfg.seed = SeedConfig(max_seed_size=3000)
    cfg.max_rounds = 30
    result = train(data, cfg)
    assert len(result.model) == 300
    assert all(r.prior == 0.0 for r in result.history)


def run_checked(data, cfg):
    result = train(data, cfg)
    recs = result.history.records
    alphabet = set(data.alphabet())
    assert alphabet <= set(result.model)
    for prev, cur in zip(recs, recs[1:]):
        assert cur.lexicon_size == prev.lexicon_size - prev.pruned
        assert prev.pruned <= pruning_quota(prev.lexicon_size, cfg.pruning_quota)
    assert recs[-1].pruned == 0 or recs[-1].lexicon_size - recs[-1].pruned == len(result.model)
    return result


def test_train_mdl_desk_lowers_cost():
    data = desk_subset(10000)
    cfg = TrainConfig(prior=PriorConfig('full', 1.0), seed=SeedConfig(max_seed_size=20000),
                      max_rounds=30)
    result = run_checked(data, cfg)
    recs = result.history.records
    assert recs[-1].weighted <= recs[0].weighted
    assert all(r.lexicon_size > s.lexicon_size for r, s in zip(recs, recs[1:]) if r.pruned)


def test_mdl_accepts_only_negative_deltas():
    data = desk_subset(1000)
    cfg = TrainConfig(prior=PriorConfig('full', 0.5), seed=SeedConfig(max_seed_size=4000))
    chars = corpus_char_distribution(data.with_dampening(cfg.dampening))
    model = build_seed(data.with_dampening(cfg.dampening), cfg.seed).model
    model, counts = em_round(model, data.with_dampening(cfg.dampening), cfg)
    d = removal_deltas(model, counts, cfg.prior, chars)
    chosen = select_mdl(d, 0.5, pruning_quota(len(model), 0.2))
    weighted = dict(zip(d.subwords, d.prior + 0.5 * d.likelihood))
    assert chosen and all(weighted[z] < 0 for z in chosen)
    assert all(len(z) > 1 for z in chosen)


def test_train_autotune_small():
    data = desk_subset(1000)
    cfg = TrainConfig(criterion='autotune', target_size=150, seed=SeedConfig(max_seed_size=3000),
                      max_rounds=40)
    result = run_checked(data, cfg)
    assert len(result.model) == 150
    alphas = [r.alpha for r in result.history]
    assert len(set(alphas)) > 1


def test_train_rejects_target_below_alphabet():
    data = WordCountTable({'abc': 1})
    with pytest.raises(ConfigError):
        train(data, TrainConfig(criterion='lexicon_size', target_size=2,
                                prior=PriorConfig('noprior')))


def test_train_deterministic():
    data = desk_subset(800)
    cfg = TrainConfig(prior=PriorConfig('full', 1.0), seed=SeedConfig(max_seed_size=2000))
    a, b = train(data, cfg), train(data, cfg)
    assert a.history.to_csv() == b.history.to_csv()
    assert a.model == b.model
    cfg.threads = 3
    c = train(data, cfg)
    assert c.history.to_csv() == a.history.to_csv() and c.model == a.model


def test_forcesplit_seed_respected_in_training():
    data = WordCountTable({'ab-cd': 3, 'ab': 2, 'cd-ab': 1, 'x-y': 1})
    rule = ForceSplitRule('-', '-')
    cfg = TrainConfig(prior=PriorConfig('full', 1.0),
                      seed=SeedConfig(max_seed_size=100, forcesplit=rule))
    result = train(data, cfg)
    assert not any(rule.violated_by(s) for s in result.model)


def test_em_monotone_plain():
    rng = random.Random(2)
    for n in (200, 500):
        data = desk_subset(n).with_dampening('ones')
        model = build_seed(data, SeedConfig(max_seed_size=rng.randint(500, 2000))).model
        cfg = TrainConfig(prior=PriorConfig('noexp_psi'), sub_iterations=1)
        lls = []
        for _ in range(6):
            model, counts = em_round(model, data, cfg)
            lls.append(counts.data_loglik)
        assert all(b >= a - 1e-9 for a, b in zip(lls, lls[1:]))


def test_history_csv():
    h = TrainHistory()
    from emprune.prior import make_breakdown
    h.add(1, 10, make_breakdown(1.5, 2.0, 0.5), 0.5, 2)
    assert h.to_csv() == ('round,lexicon_size,prior,likelihood,weighted,alpha,pruned\n'
                          '1,10,1.5,2.0,2.5,0.5,2\n')
    assert h.final.pruned == 2 and len(h) == 1
