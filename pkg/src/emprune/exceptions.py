"""Exception hierarchy shared by all modules."""


class EmPruneError(Exception):
    """Base class for errors raised by this package."""


class ParseError(EmPruneError):
    """Malformed line in an input file."""

    def __init__(self, message, path=None, lineno=None):
        self.path = path
        self.lineno = lineno
        where = ''
        if path is not None:
            where = '%s:' % path
        if lineno is not None:
            where += '%d:' % lineno
        super().__init__('%s %s' % (where, message) if where else message)


class ValidationError(EmPruneError):
    """Data violates a structural invariant (e.g. morphs do not concatenate to the word)."""


class ModelError(EmPruneError):
    """A model cannot be written or loaded."""


class DegenerateInputError(EmPruneError):
    """Input carries no information to estimate from (e.g. all-zero counts)."""


class UnsegmentableWordError(EmPruneError):
    """No path through the segmentation lattice covers the whole word."""

    def __init__(self, word, message=None):
        self.word = word
        super().__init__(message or 'word %r cannot be segmented with the current lexicon' % word)


class ConfigError(EmPruneError):
    """Invalid or incompatible configuration."""
