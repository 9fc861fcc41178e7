class DomainError(ValueError):
    """An argument lies outside the mathematical domain of a formula."""


class ConfigError(ValueError):
    """Unsupported or inconsistent configuration."""


class FitError(ValueError):
    """The rate-model regression cannot be solved."""


class SearchSizeError(ValueError):
    """The exhaustive search would exceed its combination guard."""
