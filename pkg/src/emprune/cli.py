"""Command-line interface: train, segment, sample, eval.

Exit status is 0 on success, 1 on runtime errors and 2 on invalid
configuration. Options can also come from a `key = value` file given with
--config; command-line flags override the file.
"""
import argparse
import logging
import math
import os
import sys

import numpy as np

from . import __version__
from .baseline import train_baseline
from .corpus import (DAMPENING_MODES, read_gold_standard, read_model, read_segmentations,
                     read_word_counts, write_model)
from .evaluation import (boundary_prf, bpr_table, cost_table, error_analysis, error_table,
                         evaluate_cost, write_bpr_csv, write_cost_csv, write_error_csv)
from .exceptions import ConfigError, EmPruneError, ValidationError
from .lattice import build_lattice, nbest, sample_segmentations, viterbi
from .prior import PriorConfig
from .seed import ForceSplitRule, SeedConfig
from .trainer import HISTORY_FIELDS, TrainConfig, TrainHistory, sentencepiece_preset, train

PRIOR_NAMES = {'full': 'full', 'noexppsi': 'noexp_psi', 'nofreqdistr': 'nofreqdistr',
               'noprior': 'noprior'}
EM_NAMES = {'em': 'em', 'lateen': 'lateen', 'viterbi-prune': 'viterbi_prune'}
CRITERION_NAMES = {'mdl': 'mdl', 'autotune': 'autotune', 'size': 'lexicon_size'}

BOOL_WORDS = {'1': True, 'true': True, 'yes': True, 'on': True,
              '0': False, 'false': False, 'no': False, 'off': False}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError('%s: %s' % (self.prog, message))


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError('must be a positive integer')
    return value


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError('must be >= 0')
    return value


def _add_common(p):
    p.add_argument('--config', metavar='FILE',
                   help='read options from a "key = value" file; flags take precedence')
    p.add_argument('-v', '--verbose', action='store_true', help='log progress to stderr')


def build_parser():
    parser = _Parser(prog='emprune', description='Unsupervised subword segmentation '
                     'with unigram models (Morfessor EM+Prune and Baseline).')
    parser.add_argument('--version', action='version', version='%(prog)s ' + __version__)
    sub = parser.add_subparsers(dest='command', metavar='COMMAND', parser_class=_Parser)

    p = sub.add_parser('train', help='train a model from a word-count file')
    _add_common(p)
    p.add_argument('--input', metavar='FILE', help='word counts, "<count> <word>" per line')
    p.add_argument('--output', metavar='FILE', help='model file to write')
    p.add_argument('--history', metavar='FILE',
                   help='per-round CSV log (default: OUTPUT.history.csv)')
    p.add_argument('--method', choices=('emprune', 'baseline'), default='emprune',
                   help='training algorithm (default: emprune)')
    p.add_argument('--preset', choices=('sentencepiece',),
                   help='SentencePiece-equivalent settings (needs --lexicon-size)')
    p.add_argument('--criterion', choices=sorted(CRITERION_NAMES),
                   help='pruning criterion: mdl, autotune or size (default: mdl)')
    p.add_argument('--alpha', type=float, help='likelihood weight; required for mdl')
    p.add_argument('--lexicon-size', type=_positive_int, help='target size for autotune/size')
    p.add_argument('--prior', choices=sorted(PRIOR_NAMES),
                   help='prior variant (default: full)')
    p.add_argument('--em', choices=sorted(EM_NAMES),
                   help='EM variant (default: em)')
    p.add_argument('--dampening', choices=DAMPENING_MODES,
                   help='count dampening (default: ones, i.e. type-based)')
    p.add_argument('--forcesplit-before', default='', metavar='CHARS',
                   help='characters that always start a new morph')
    p.add_argument('--forcesplit-after', default='', metavar='CHARS',
                   help='characters that always end a morph')
    p.add_argument('--seed-size', type=_positive_int, default=1000000,
                   help='seed lexicon size (default: 1000000)')
    p.add_argument('--max-substring-len', type=_positive_int, default=20,
                   help='longest seed substring (default: 20)')
    p.add_argument('--no-prepruning', action='store_true',
                   help='keep redundant substrings in the seed lexicon')
    p.add_argument('--sub-iterations', type=_positive_int, default=None,
                   help='EM sub-iterations per round (default: 3)')
    p.add_argument('--quota', type=float, default=0.2,
                   help='max fraction of the lexicon pruned per round (default: 0.2)')
    p.add_argument('--max-rounds', type=_positive_int, default=15,
                   help='max pruning rounds (default: 15)')
    p.add_argument('--stop-threshold', type=float, default=1e-4,
                   help='relative cost change that ends mdl training (default: 1e-4)')
    p.add_argument('--max-epochs', type=_positive_int, default=50,
                   help='baseline: max epochs (default: 50)')
    p.add_argument('--rng-seed', type=int, default=0, help='random seed (default: 0)')
    p.add_argument('--threads', type=_positive_int, default=None,
                   help='E-step threads (default: all cores); results do not depend on it')

    p = sub.add_parser('segment', help='segment words with a trained model')
    _add_common(p)
    p.add_argument('--model', metavar='FILE', help='model file')
    p.add_argument('--input', metavar='FILE', help='words, one per line (default: stdin)')
    p.add_argument('--nbest', type=_positive_int, help='print the N best segmentations')
    p.add_argument('--marker', default=' ', help='separator between morphs (default: space)')
    p.add_argument('--boundary-marker', metavar='MARK',
                   help='append MARK to every non-final morph, e.g. "@@"')

    p = sub.add_parser('sample', help='sample segmentations from the posterior')
    _add_common(p)
    p.add_argument('--model', metavar='FILE', help='model file')
    p.add_argument('--input', metavar='FILE', help='words, one per line (default: stdin)')
    p.add_argument('--rng-seed', type=int, default=0, help='random seed (default: 0)')
    p.add_argument('--n', type=_nonneg_int, default=1, help='samples per word (default: 1)')
    p.add_argument('--marker', default=' ', help='separator between morphs (default: space)')
    p.add_argument('--boundary-marker', metavar='MARK',
                   help='append MARK to every non-final morph')

    p = sub.add_parser('eval', help='evaluate a segmentation')
    _add_common(p)
    p.add_argument('--mode', choices=('cost', 'bpr', 'errors'), help='what to compute')
    p.add_argument('--data', metavar='FILE', help='cost: training word counts')
    p.add_argument('--segmentation', metavar='FILE', help='cost: segmentation of the data')
    p.add_argument('--hypothesis', metavar='FILE', help='bpr/errors: segmentation to score')
    p.add_argument('--gold', metavar='FILE', help='bpr/errors: gold standard')
    p.add_argument('--alpha', type=float, default=1.0, help='cost: likelihood weight')
    p.add_argument('--prior', choices=sorted(PRIOR_NAMES), default='full',
                   help='cost: prior variant (default: full)')
    p.add_argument('--dampening', choices=DAMPENING_MODES, default='ones',
                   help='cost: count dampening (default: ones)')
    p.add_argument('--bits', action='store_true', help='cost: report bits instead of nats')
    p.add_argument('--csv', metavar='FILE', help='also write the report as CSV')
    return parser


def _read_config_file(path):
    values = {}
    try:
        with open(path, encoding='utf-8') as fobj:
            lines = fobj.read().splitlines()
    except OSError as exc:
        raise ConfigError('cannot read config file %s: %s' % (path, exc)) from None
    for lineno, line in enumerate(lines, 1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError('%s:%d: expected "key = value"' % (path, lineno))
        key, value = (part.strip() for part in line.split('=', 1))
        values[key.replace('-', '_')] = value
    return values


def _apply_config(subparser, argv):
    """Turn config-file entries into parser defaults so that flags win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument('--config')
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in _read_config_file(known.config).items():
        action = actions.get(key)
        if action is None or key in ('config', 'help'):
            raise ConfigError('unknown option %r in config file %s' % (key, known.config))
        if isinstance(action, argparse._StoreTrueAction):
            if value.lower() not in BOOL_WORDS:
                raise ConfigError('option %r expects a boolean, got %r' % (key, value))
            defaults[key] = BOOL_WORDS[value.lower()]
            continue
        if action.type is not None:
            try:
                value = action.type(value)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise ConfigError('bad value %r for option %r: %s' % (value, key, exc)) from None
        if action.choices is not None and value not in action.choices:
            raise ConfigError('bad value %r for option %r (choose from %s)'
                              % (value, key, ', '.join(map(str, action.choices))))
        defaults[key] = value
    subparser.set_defaults(**defaults)


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise ConfigError('--%s is required' % name.replace('_', '-'))


def _train_config(args):
    forcesplit = ForceSplitRule(args.forcesplit_before, args.forcesplit_after)
    if args.preset == 'sentencepiece':
        if args.lexicon_size is None:
            raise ConfigError('--preset sentencepiece needs --lexicon-size')
        if forcesplit or args.dampening not in (None, 'none'):
            raise ConfigError('--preset sentencepiece does not use forcesplit or dampening')
        for name in ('criterion', 'alpha', 'prior', 'em', 'sub_iterations'):
            if getattr(args, name) is not None:
                raise ConfigError('--%s cannot be combined with --preset'
                                  % name.replace('_', '-'))
        config = sentencepiece_preset(args.lexicon_size)
        config.seed = SeedConfig(args.seed_size, args.max_substring_len, not args.no_prepruning)
        config.threads = args.threads or os.cpu_count() or 1
        config.max_rounds = args.max_rounds
        config.rng_seed = args.rng_seed
        config.validate()
        return config
    criterion = CRITERION_NAMES[args.criterion or 'mdl']
    prior_variant = PRIOR_NAMES[args.prior or 'full']
    if criterion == 'mdl' and args.alpha is None:
        raise ConfigError('--criterion mdl requires --alpha')
    if criterion == 'lexicon_size' and prior_variant != 'noprior' and args.alpha is None:
        raise ConfigError('--criterion size with a prior requires a fixed --alpha')
    alpha = args.alpha if args.alpha is not None else 1.0
    if criterion != 'mdl' and args.lexicon_size is None:
        raise ConfigError('--criterion %s requires --lexicon-size' % args.criterion)
    return TrainConfig(
        em_variant=EM_NAMES[args.em or 'em'],
        sub_iterations=args.sub_iterations if args.sub_iterations is not None else 3,
        pruning_quota=args.quota,
        criterion=criterion,
        target_size=args.lexicon_size,
        prior=PriorConfig(prior_variant, alpha),
        stop_cost_rel_threshold=args.stop_threshold,
        max_rounds=args.max_rounds,
        seed=SeedConfig(args.seed_size, args.max_substring_len, not args.no_prepruning,
                        forcesplit),
        rng_seed=args.rng_seed,
        dampening=args.dampening or 'ones',
        threads=args.threads or os.cpu_count() or 1)


def _progress_printer(stream):
    state = {'header': False}

    def show(rec):
        if not state['header']:
            stream.write(','.join(HISTORY_FIELDS) + '\n')
            state['header'] = True
        stream.write(','.join(TrainHistory.format_row(rec)) + '\n')
        stream.flush()
    return show


def _baseline_config(args):
    if args.criterion not in (None, 'mdl') or args.preset:
        raise ConfigError('--method baseline only supports the mdl cost (no --criterion/--preset)')
    _require(args, 'alpha')
    return PriorConfig(PRIOR_NAMES[args.prior or 'full'], args.alpha)


def cmd_train(args):
    _require(args, 'input', 'output')
    history_path = args.history or args.output + '.history.csv'
    try:
        if args.method == 'baseline':
            prior = _baseline_config(args)
        else:
            config = _train_config(args)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None
    if args.method == 'baseline':
        forcesplit = ForceSplitRule(args.forcesplit_before, args.forcesplit_after)
        data = read_word_counts(args.input, args.dampening or 'ones')
        progress = _progress_printer(sys.stderr) if args.verbose else None
        result = train_baseline(data, prior, args.rng_seed, max_epochs=args.max_epochs,
                                forcesplit=forcesplit, progress=progress)
        model, history = result.model, result.history
    else:
        data = read_word_counts(args.input, config.dampening)
        progress = _progress_printer(sys.stderr) if args.verbose else None
        model, history, _ = train(data, config, progress)
    write_model(model, args.output)
    history.write_csv(history_path)
    return 0


def _read_words(path):
    stream = open(path, encoding='utf-8') if path else sys.stdin
    try:
        for line in stream:
            for word in line.split():
                yield word
    finally:
        if path:
            stream.close()


def _join(morphs, args):
    if args.boundary_marker:
        morphs = [m + args.boundary_marker for m in morphs[:-1]] + [morphs[-1]]
    return args.marker.join(morphs)


def _warn_oov(seg):
    if seg.oov:
        chars = ''.join(seg.word[i] for i in seg.oov)
        sys.stderr.write('warning: %r contains code points missing from the model: %r\n'
                         % (seg.word, chars))


def cmd_segment(args):
    _require(args, 'model')
    model = read_model(args.model)
    out = sys.stdout
    for word in _read_words(args.input):
        lattice = build_lattice(word, model, oov_fallback=True)
        if args.nbest:
            segs = nbest(lattice, args.nbest)
            _warn_oov(segs[0])
            out.write('\t'.join('%.6f:%s' % (s.logprob, _join(s.morphs, args)) for s in segs))
            out.write('\n')
        else:
            seg = viterbi(lattice)
            _warn_oov(seg)
            out.write(_join(seg.morphs, args) + '\n')
    return 0


def cmd_sample(args):
    _require(args, 'model')
    model = read_model(args.model)
    rng = np.random.default_rng(args.rng_seed)
    for word in _read_words(args.input):
        if args.n == 0:
            continue
        lattice = build_lattice(word, model, oov_fallback=True)
        segs = sample_segmentations(lattice, rng, args.n)
        _warn_oov(segs[0])
        for seg in segs:
            sys.stdout.write(_join(seg.morphs, args) + '\n')
    return 0


def cmd_eval(args):
    _require(args, 'mode')
    if args.mode == 'cost':
        _require(args, 'data', 'segmentation')
        try:
            prior = PriorConfig(PRIOR_NAMES[args.prior], args.alpha)
        except ValidationError as exc:
            raise ConfigError(str(exc)) from None
        data = read_word_counts(args.data, args.dampening)
        cost = evaluate_cost(read_segmentations(args.segmentation), data, prior)
        if args.bits:
            scale = 1.0 / math.log(2)
            cost = cost._replace(prior_nats=cost.prior_nats * scale,
                                 likelihood_nats=cost.likelihood_nats * scale,
                                 weighted_total=cost.weighted_total * scale)
        sys.stdout.write(cost_table(cost))
        if args.csv:
            write_cost_csv(cost, args.csv)
        return 0
    _require(args, 'hypothesis', 'gold')
    hypothesis = read_segmentations(args.hypothesis)
    gold = read_gold_standard(args.gold)
    if args.mode == 'bpr':
        result = boundary_prf(hypothesis, gold)
        sys.stdout.write(bpr_table(result))
        if args.csv:
            write_bpr_csv(result, args.csv)
    else:
        report = error_analysis(hypothesis, gold)
        sys.stdout.write(error_table(report))
        if args.csv:
            write_error_csv(report, args.csv)
    return 0


# Options whose values are literal characters and may start with "-".
_LITERAL_OPTIONS = ('--forcesplit-before', '--forcesplit-after', '--marker', '--boundary-marker')


def _glue_literals(argv):
    out = []
    i = 0
    while i < len(argv):
        if argv[i] in _LITERAL_OPTIONS and i + 1 < len(argv):
            out.append('%s=%s' % (argv[i], argv[i + 1]))
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


COMMANDS = {'train': cmd_train, 'segment': cmd_segment, 'sample': cmd_sample, 'eval': cmd_eval}


def main(argv=None):
    argv = _glue_literals(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        if argv and argv[0] in COMMANDS:
            subparser = parser._subparsers._group_actions[0].choices[argv[0]]
            _apply_config(subparser, argv[1:])
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return 2
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format='%(message)s', stream=sys.stderr)
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        sys.stderr.write('error: %s\n' % exc)
        return 2
    except BrokenPipeError:
        return 0
    except (EmPruneError, OSError, ValueError) as exc:
        sys.stderr.write('error: %s\n' % exc)
        return 1


if __name__ == '__main__':
    sys.exit(main())
