"""Exception types shared across the package.

The CLI maps these onto exit codes: DataError -> 2, NumericsError -> 3,
I/O problems (OSError) -> 4.
"""


class DataError(ValueError):
    """Malformed or contract-violating data (corpus records, vocab files, splits...)."""


class EncodingError(DataError):
    """A PromptExample cannot be encoded under the given vocab / length budget."""


class NumericsError(ArithmeticError):
    """Non-finite values or a failed numerical verification."""
