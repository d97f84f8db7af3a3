"""Pure-Python fallback for the row-reduction kernel.

Same contract as the compiled version in ``_fpkernel.pyx``: in-place
reduced row echelon form mod p with smallest-index pivoting.  Row
operations are vectorized with numpy but no compiled extension is
required.
"""

import numpy as np


def rref(m, p):
    rows, cols = m.shape
    r = 0
    pivots = []
    m %= p
    for col in range(cols):
        if r == rows:
            break
        nz = np.nonzero(m[r:, col])[0]
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            m[[r, piv]] = m[[piv, r]]
        inv = pow(int(m[r, col]), p - 2, p)
        m[r] = (m[r] * inv) % p
        column = m[:, col].copy()
        column[r] = 0
        m -= np.outer(column, m[r])
        m %= p
        pivots.append(col)
        r += 1
    return pivots


BACKEND = "python"
