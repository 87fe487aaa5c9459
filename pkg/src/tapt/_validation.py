"""Input validation and random-stream helpers, in the spirit of sklearn.utils."""

from __future__ import annotations

import numbers

import numpy as np

from .exceptions import DimensionError, DomainError


def check_spins(s, n_spins: int | None = None, *, copy: bool = False) -> np.ndarray:
    """Return ``s`` as a 1-D int8 array of +-1 values.

    Raises DimensionError on a length mismatch and DomainError when an entry
    is not +-1.
    """
    arr = np.asarray(s)
    if arr.ndim != 1:
        raise DimensionError(f"spin vector must be 1-D, got shape {arr.shape}")
    if n_spins is not None and arr.shape[0] != n_spins:
        raise DimensionError(f"expected {n_spins} spins, got {arr.shape[0]}")
    if arr.dtype != np.int8:
        if not np.all(np.isin(arr, (-1, 1))):
            raise DomainError("spins must be +1 or -1")
        arr = arr.astype(np.int8)
    elif copy:
        arr = arr.copy()
    if arr.size and (arr.min() < -1 or arr.max() > 1 or np.any(arr == 0)):
        raise DomainError("spins must be +1 or -1")
    return arr


def check_spin_batch(S, n_spins: int | None = None) -> np.ndarray:
    """2-D counterpart of :func:`check_spins` (rows are configurations)."""
    arr = np.asarray(S)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise DimensionError(f"spin batch must be 2-D, got shape {arr.shape}")
    if n_spins is not None and arr.shape[1] != n_spins:
        raise DimensionError(f"expected {n_spins} spins per row, got {arr.shape[1]}")
    if arr.size and not np.all((arr == 1) | (arr == -1)):
        raise DomainError("spins must be +1 or -1")
    return arr.astype(np.int8, copy=False)


def check_beta(beta, *, strictly_positive: bool = False) -> float:
    if not isinstance(beta, numbers.Real) or not np.isfinite(beta):
        raise DomainError(f"beta must be a finite real number, got {beta!r}")
    beta = float(beta)
    if beta < 0 or (strictly_positive and beta == 0):
        bound = "> 0" if strictly_positive else ">= 0"
        raise DomainError(f"beta must be {bound}, got {beta}")
    return beta


def check_count(value, name: str, *, minimum: int = 0) -> int:
    if not isinstance(value, numbers.Integral) or isinstance(value, bool):
        raise DomainError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise DomainError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_fraction(value, name: str, *, closed: bool = True) -> float:
    value = float(value)
    ok = 0.0 <= value <= 1.0 if closed else 0.0 < value < 1.0
    if not ok:
        interval = "[0, 1]" if closed else "(0, 1)"
        raise DomainError(f"{name} must lie in {interval}, got {value}")
    return value


def as_seed_sequence(seed) -> np.random.SeedSequence:
    """Normalise an int / SeedSequence / None into a SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        # Derive a child sequence from the generator state; deterministic.
        return np.random.SeedSequence(int(seed.integers(0, 2**63)))
    if seed is None or isinstance(seed, numbers.Integral):
        return np.random.SeedSequence(seed)
    raise DomainError(f"cannot interpret {seed!r} as a seed")


def check_random_state(seed) -> np.random.Generator:
    """Return a PCG64 Generator; Generators pass through untouched."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(as_seed_sequence(seed)))


def spawn_generators(seed, n: int) -> list[np.random.Generator]:
    """``n`` statistically independent streams derived from one root seed.

    Stream ``k`` only depends on the root seed and ``k`` (SeedSequence
    spawning), never on how many workers consume them.
    """
    children = as_seed_sequence(seed).spawn(n)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]
