import os

from .errors import ResourceLimitError

ENV_VAR = "CANTORVAL_MAX_ELEMENTS"
DEFAULT_MAX_ELEMENTS = 20_000_000

# numerators are held in int64; leave headroom for one multiply by s
INT64_HEADROOM = 2**62


def max_elements() -> int:
    raw = os.environ.get(ENV_VAR)
    if raw is None:
        return DEFAULT_MAX_ELEMENTS
    try:
        value = int(raw)
    except ValueError:
        raise ResourceLimitError(f"{ENV_VAR} must be an integer, got {raw!r}") from None
    if value <= 0:
        raise ResourceLimitError(f"{ENV_VAR} must be positive, got {value}")
    return value


def check_size(n: int, what: str) -> None:
    limit = max_elements()
    if n > limit:
        raise ResourceLimitError(
            f"{what} needs {n} elements, above the guard of {limit} (set {ENV_VAR} to raise it)"
        )
