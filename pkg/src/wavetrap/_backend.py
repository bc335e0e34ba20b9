"""Kernel backend selection and the deterministic RNG used for seeded draws.

The hot numeric loops (Verlet trajectories, RK4 hopping, the Jacobi
eigensolver) exist twice: a numba @njit version and a pure-numpy version.
Which one is active is decided once at import time:

  WAVETRAP_BACKEND=numba   force numba (ImportError if unavailable)
  WAVETRAP_BACKEND=numpy   force the pure-numpy fallback
  unset                    numba when importable, numpy otherwise
"""

from __future__ import annotations

import os

_ENV_VAR = "WAVETRAP_BACKEND"


def _select_backend() -> str:
    requested = os.environ.get(_ENV_VAR, "").strip().lower()
    if requested not in ("", "numba", "numpy"):
        raise ValueError(
            f"{_ENV_VAR} must be 'numba' or 'numpy', got {requested!r}"
        )
    if requested == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if requested == "numba":
            raise
        return "numpy"
    return "numba"


BACKEND = _select_backend()


def backend_name() -> str:
    """Name of the active kernel backend ('numba' or 'numpy')."""
    return BACKEND


_MASK = 0xFFFFFFFFFFFFFFFF


class SplitMix64:
    """Tiny deterministic 64-bit generator, identical on every platform.

    Used wherever a run needs seeded draws so outputs are reproducible
    from the recorded seed alone.
    """

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform in [0, 1) with 53-bit resolution."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.next_float()
