"""Exception hierarchy shared by all svtrans modules."""


class SvtransError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(SvtransError):
    """Invalid configuration value (bad range, missing path, unknown key)."""


class ParseError(SvtransError):
    """Malformed input file. Carries the offending path and line number."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f" [{path}" + (f":{line}" if line is not None else "") + "]"
        super().__init__(message + where)


class AllTokensUnknown(SvtransError):
    """No token of the sentence is present in the word-vector table."""

    def __init__(self, sentence):
        self.sentence = sentence
        super().__init__(f"no in-vocabulary token in sentence: {sentence!r}")


class DegenerateVector(SvtransError):
    """A vector whose norm is zero (or non-finite) where a positive norm is required."""

    def __init__(self, message, row=None):
        self.row = row
        super().__init__(message)


class ConstantSeries(SvtransError):
    """Correlation requested on a constant series (undefined result)."""


class EmptyCorpusError(SvtransError):
    """No usable caption groups / pairs remain after filtering."""


class EvaluationError(SvtransError):
    """Evaluation cannot produce a defined result (e.g. fewer than 2 scored pairs)."""
