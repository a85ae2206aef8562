"""Pure-numpy implementations of the hot numerical kernels.

This module is the fallback backend selected when the compiled extension is
unavailable (or when ``QSMT_PURE_PYTHON=1``). Both backends implement the
same functions with the same semantics; see ``qsmt.kernels`` for selection.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

_DEGENERATE_PROB = 1e-12
_PROB_FLOOR = 1e-300


def max_eig_hermitian(a) -> float:
    """Largest eigenvalue of a Hermitian matrix."""
    return float(np.linalg.eigvalsh(a)[-1])


def project_rows_to_simplex(m) -> np.ndarray:
    """Euclidean projection of every row onto the probability simplex."""
    v = np.atleast_2d(np.asarray(m, dtype=float))
    r, n = v.shape
    u = -np.sort(-v, axis=1)
    css = np.cumsum(u, axis=1) - 1.0
    ind = np.arange(1, n + 1, dtype=float)
    cond = u - css / ind > 0.0
    # last index where the condition holds (it holds at index 0)
    rho = n - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(r), rho] / (rho + 1.0)
    return np.maximum(v - theta[:, None], 0.0)


def l2_value(q, pops, counts) -> float:
    """Transition-matrix log-likelihood sum_{e,c} H[e,c] ln(sum_k Q[k,c] P[k,e]).

    Returns -inf when some outcome with a positive count has probability <= 0.
    """
    q = np.asarray(q, dtype=float)
    pops = np.asarray(pops, dtype=float)
    counts = np.asarray(counts, dtype=float)
    prob = pops.T @ q
    mask = counts > 0.0
    if np.any(prob[mask] <= 0.0):
        return float("-inf")
    return float(np.sum(counts[mask] * np.log(prob[mask])))


def l2_value_grad(q, pops, counts):
    """Value and gradient of the transition-matrix log-likelihood.

    The gradient is d/dQ[k,c] = sum_e H[e,c] P[k,e] / prob[e,c]. When the
    value is -inf the gradient is returned as zeros; callers must check the
    value first.
    """
    q = np.asarray(q, dtype=float)
    pops = np.asarray(pops, dtype=float)
    counts = np.asarray(counts, dtype=float)
    prob = pops.T @ q
    mask = counts > 0.0
    if np.any(prob[mask] <= 0.0):
        return float("-inf"), np.zeros_like(q)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mask, counts / np.where(mask, prob, 1.0), 0.0)
    grad = pops @ ratio
    value = float(np.sum(counts[mask] * np.log(prob[mask])))
    return value, grad


def _probs(ops, sigma) -> np.ndarray:
    return np.real(np.einsum("mij,ji->m", ops, sigma))


def _loglike(counts, probs, pos) -> float:
    if np.any(probs[pos] <= 0.0):
        return float("-inf")
    return float(np.sum(counts[pos] * np.log(probs[pos])))


def rrr_solve(ops, counts, sigma0, n_tot, threshold, max_iter, mix_eps=1e-9):
    """Fixed-point state update sigma <- N(R sigma R) with a stopping bound.

    Parameters
    ----------
    ops : (m, d, d) complex array of measurement operators.
    counts : (m,) observed counts per operator.
    sigma0 : (d, d) starting density matrix.
    n_tot : total count entering the likelihood (sum of counts).
    threshold : stop once max_eig(R) - n_tot falls at or below this.
    max_iter : maximum number of sigma updates (0 evaluates the bound only).
    mix_eps : identity admixture used when an observed outcome has
        probability below 1e-12 at the current iterate.

    Returns
    -------
    (sigma, s_sigma, iterations, loglike) where s_sigma is the gap bound at
    the returned iterate. Updates that would decrease the likelihood are
    rejected and terminate the loop.
    """
    ops = np.ascontiguousarray(ops, dtype=complex)
    counts = np.asarray(counts, dtype=float)
    sigma = np.array(sigma0, dtype=complex)
    d = sigma.shape[0]
    eye = np.eye(d, dtype=complex)
    pos = counts > 0.0

    p = _probs(ops, sigma)
    for _ in range(3):
        if not np.any(p[pos] < _DEGENERATE_PROB):
            break
        sigma = (1.0 - mix_eps) * sigma + mix_eps * eye / d
        p = _probs(ops, sigma)
    ll = _loglike(counts, p, pos)

    iterations = 0
    while True:
        w = np.where(pos, counts / np.maximum(p, _PROB_FLOOR), 0.0)
        r = np.einsum("m,mij->ij", w, ops)
        r = 0.5 * (r + r.conj().T)
        s_sigma = max_eig_hermitian(r) - n_tot
        if s_sigma <= threshold or iterations >= max_iter:
            return sigma, float(s_sigma), iterations, ll

        new = r @ sigma @ r
        new = 0.5 * (new + new.conj().T)
        tr = float(np.real(np.trace(new)))
        if tr <= 0.0:
            return sigma, float(s_sigma), iterations, ll
        new /= tr

        p_new = _probs(ops, new)
        for _ in range(3):
            if not np.any(p_new[pos] < _DEGENERATE_PROB):
                break
            new = (1.0 - mix_eps) * new + mix_eps * eye / d
            p_new = _probs(ops, new)
        ll_new = _loglike(counts, p_new, pos)
        if ll_new < ll - 1e-9:
            return sigma, float(s_sigma), iterations, ll

        sigma, p, ll = new, p_new, ll_new
        iterations += 1
