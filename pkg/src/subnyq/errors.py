"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid system configuration (bad parity, sign, or serialized text)."""


class CoprimalityError(ValueError):
    """An index-map operation needs gcd(p, q') = 1 and did not get it."""


class BandPlacementError(RuntimeError):
    """Random band placement could not satisfy the guard-gap constraints."""
