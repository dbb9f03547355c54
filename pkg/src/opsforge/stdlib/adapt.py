"""Adapter factories bound to the engine.adapt entries.

Each factory receives the already-compiled inner callable (plus compiled
dependency callables, in declaration order) and returns a callable in the
adapted shape. Compiled computers return their content rather than writing
it, so computer/function adaptation in either direction is the identity;
inplace adaptation buffers a private copy so the caller's argument stays
untouched.
"""

from __future__ import annotations

import numpy as np


def _fill(dst, src) -> None:
    if isinstance(dst, bytearray):
        dst[:] = src
    elif isinstance(dst, np.ndarray):
        np.copyto(dst, src)
    else:
        raise ValueError(f"cannot fill payload of type {type(dst).__name__}")


def computer_to_function(inner):
    return inner


def function_to_computer(inner):
    return inner


def inplace_to_function(inner, create_fn, copy_fn):
    def adapted(x):
        fresh = create_fn(x)
        _fill(fresh, copy_fn(x))
        inner(fresh)
        return fresh

    return adapted


# The computer form only differs in how the framework treats the returned
# payload (written back into the caller's container).
inplace_to_computer = inplace_to_function


def lift2_elementwise(inner):
    """Lift a binary scalar function to a same-shape elementwise computer."""

    def adapted(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if a.shape != b.shape:
            raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
        out = np.empty_like(a)
        flat_a = a.ravel()
        flat_b = b.ravel()
        flat_out = out.reshape(-1)
        for i in range(flat_a.size):
            flat_out[i] = inner(float(flat_a[i]), float(flat_b[i]))
        return out

    return adapted
