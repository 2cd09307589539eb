"""Pure numpy implementation of the trainer hot-loop kernels.

Same contract as the compiled module in ``_kernels.pyx``; used whenever the
extension is unavailable or ``SVTRANS_BACKEND=numpy`` is set.
"""

import numpy as np

NAME = "numpy"


def similarity_core(shat, inv_a, inv_b, lam):
    """Normalize a raw similarity matrix and derive the loss terms in one go.

    Arguments:
        shat: n x n raw dot products between transformed row sets.
        inv_a, inv_b: reciprocal row norms used by the normalizer.
        lam: trade-off weight between the off-diagonal and diagonal losses.

    Returns ``(S, U, row_us, col_us, diag_loss, nondiag_loss)`` where
    S = normalized similarities, U = d(loss)/d(S) (weighted subgradient of
    the elementwise absolute values, 0 at kinks), and row_us/col_us are the
    row and column sums of U * S needed by the cosine-mode backward pass.
    """
    shat = np.asarray(shat, dtype=np.float64)
    n = shat.shape[0]
    S = shat * inv_a[:, None] * inv_b[None, :]
    diag = np.diagonal(S)
    diag_loss = float(np.abs(diag - 1.0).sum() / n)
    if n > 1:
        nondiag_loss = float((np.abs(S).sum() - np.abs(diag).sum()) / (n * (n - 1)))
        w_off = lam / (n * (n - 1))
    else:
        nondiag_loss = 0.0
        w_off = 0.0
    U = np.sign(S) * w_off
    np.fill_diagonal(U, np.sign(diag - 1.0) * ((1.0 - lam) / n))
    US = U * S
    row_us = US.sum(axis=1)
    col_us = US.sum(axis=0)
    return S, U, row_us, col_us, diag_loss, nondiag_loss


def rmsprop_update(w, grad, state, lr, decay, eps):
    """One elementwise RMSprop step, in place on ``w`` and ``state``."""
    np.multiply(state, decay, out=state)
    state += (1.0 - decay) * grad * grad
    w -= lr * grad / np.sqrt(state + eps)
