"""Pure numpy twin of :mod:`mixbound._simkernel`.

Vectorised over replications, one time step at a time. The sampling rule and
the accumulation order match the compiled kernel exactly, so both produce
bit-identical arrays.
"""

import numpy as np


def _pick(cum_rows, u):
    # cum_rows: (reps, size); count entries <= u, capped at size - 1
    j = (cum_rows[:, :-1] <= u[:, None]).sum(axis=1)
    return j


def simulate_sums(cum, init_cum, U, F):
    reps, n = U.shape
    out = np.zeros((reps, F.shape[1]))
    if reps == 0 or n == 0:
        return out
    z = _pick(np.broadcast_to(init_cum, (reps, init_cum.size)), U[:, 0])
    out += F[z]
    for t in range(1, n):
        z = _pick(cum[z], U[:, t])
        out += F[z]
    return out


def simulate_states(cum, init_cum, U):
    reps, n = U.shape
    out = np.empty((reps, n), dtype=np.int64)
    if reps == 0 or n == 0:
        return out
    z = _pick(np.broadcast_to(init_cum, (reps, init_cum.size)), U[:, 0])
    out[:, 0] = z
    for t in range(1, n):
        z = _pick(cum[z], U[:, t])
        out[:, t] = z
    return out
