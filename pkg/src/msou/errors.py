"""Exception types shared across the package."""


class MsouError(Exception):
    """Base class for all package errors."""


class InputError(MsouError):
    """Malformed user input: parse errors, invariant violations."""


class PathError(InputError):
    """A node path does not exist in a tree; carries the longest valid prefix."""

    def __init__(self, path, valid_prefix):
        self.path = tuple(path)
        self.valid_prefix = tuple(valid_prefix)
        super().__init__(
            f"path {list(path)} not present; longest valid prefix {list(valid_prefix)}"
        )


class SortError(InputError):
    """Sort mismatch in a lambda-term or scheme."""


class FormulaError(InputError):
    """Ill-formed formula: binder kinds, shadowing, or the finite-set restriction."""


class FragmentError(MsouError):
    """Operation requires the finite-quantifier fragment but got something richer."""


class ResourceCapError(MsouError):
    """A configured resource cap was exceeded (quantifier enumeration, domains)."""


class DomainSizeError(ResourceCapError):
    """A phenotype domain is too large to enumerate."""
