"""Exception hierarchy shared across the package."""


class KlimError(Exception):
    pass


class SpecError(KlimError, ValueError):
    """Invalid model, drift or config parameter; ``field`` names the key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class PreconditionError(KlimError, ValueError):
    pass


class DomainError(KlimError, ValueError):
    """Argument outside the domain of a time change or simulated window."""


class UnsupportedError(KlimError, ValueError):
    pass


class ExplosionError(KlimError, RuntimeError):
    """Every simulated path crossed the explosion threshold."""

    def __init__(self, fraction: float, bundle=None):
        super().__init__(f"all paths exploded (fraction={fraction:.3f})")
        self.fraction = fraction
        self.bundle = bundle


class QuadratureError(KlimError, RuntimeError):
    pass


class RegimeMismatchError(SpecError):
    """The model's regime exponent does not match the requested suite."""

    def __init__(self, suite: str, q: float, tag: str):
        super().__init__("beta", f"suite {suite!r} needs a different regime: q={q:.6g} is {tag}")
        self.suite, self.q, self.tag = suite, q, tag
