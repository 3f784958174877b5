import numpy as np

from .errors import DimensionError


def linear_mean(b, W, U, lags, alphas):
    """``m = b + sum_delta lags[delta] @ W[delta] + sum_l alphas[l] @ U[l]``.

    Shapes (with arbitrary shared leading batch dims): ``b (..., n)``,
    ``W (..., d-1, n, n)``, ``U (..., L, n, n)``, ``lags (..., d-1, n)``,
    ``alphas (..., L, n)``. ``W[delta][i, j]`` connects pre-synaptic ``i`` to
    post-synaptic ``j``.
    """
    if W.shape[-3] != lags.shape[-2] or U.shape[-3] != alphas.shape[-2]:
        raise DimensionError(
            f"state/parameter mismatch: W {W.shape} vs lags {lags.shape}, U {U.shape} vs alphas {alphas.shape}"
        )
    m = b + np.einsum("...ki,...kij->...j", lags, W)
    if U.shape[-3]:
        m = m + np.einsum("...li,...lij->...j", alphas, U)
    return m
