"""Vectorised NumPy implementation of the per-cell quadrature kernels.

Reference cell is ``[0, 1]^2`` with bilinear shape functions
``(1-x)(1-y), x(1-y), xy, (1-x)y``. Every function here has a compiled twin in
``_kernels.pyx`` with the same signature and results.
"""

import numpy as np

_G = 0.5 * np.sqrt(3.0 / 5.0)
GAUSS_X = np.array([0.5 - _G, 0.5, 0.5 + _G])
GAUSS_W = np.array([5.0, 8.0, 5.0]) / 18.0

# 3x3 tensor rule, point index q = 3 * i + j with xi = GAUSS_X[i], eta = GAUSS_X[j]
QUAD_REF = np.array([[x, y] for x in GAUSS_X for y in GAUSS_X])
QUAD_W = np.array([wx * wy for wx in GAUSS_W for wy in GAUSS_W])

BACKEND = "python"


def shape_values(ref):
    x, y = ref[..., 0], ref[..., 1]
    return np.stack([(1 - x) * (1 - y), x * (1 - y), x * y, (1 - x) * y], axis=-1)


def shape_ref_gradients(ref):
    """Reference gradients, shape ``(..., 4, 2)``."""
    x, y = ref[..., 0], ref[..., 1]
    dx = np.stack([-(1 - y), (1 - y), y, -y], axis=-1)
    dy = np.stack([-(1 - x), -x, x, (1 - x)], axis=-1)
    return np.stack([dx, dy], axis=-1)


_NQ = shape_values(QUAD_REF)  # (9, 4)
_DNQ = shape_ref_gradients(QUAD_REF)  # (9, 4, 2)


def quad_points(coords):
    """Physical quadrature points, ``(n, 9, 2)``."""
    return np.einsum("qa,nad->nqd", _NQ, coords)


def _jacobian(coords, dn):
    # dn: (..., 4, 2) reference gradients; returns J[..., d, k] = dx_d/dxi_k
    return np.einsum("...ak,...ad->...dk", dn, coords)


def _physical_gradients(coords, dn):
    """Return (det J, physical gradients) for reference gradients ``dn``."""
    jac = _jacobian(coords, dn)
    det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
    inv = np.empty_like(jac)
    inv[..., 0, 0] = jac[..., 1, 1] / det
    inv[..., 1, 1] = jac[..., 0, 0] / det
    inv[..., 0, 1] = -jac[..., 0, 1] / det
    inv[..., 1, 0] = -jac[..., 1, 0] / det
    # grad phi_a = J^{-T} dn_a
    grads = np.einsum("...ak,...kd->...ad", dn, inv)
    return det, grads


def element_system(coords, kcoef, fval):
    """Element stiffness and load for ``-div(k grad p) = f``.

    Parameters
    ----------
    coords : (n, 4, 2) vertex coordinates.
    kcoef, fval : (n, 9) diffusion coefficient and source at the quadrature points.

    Returns
    -------
    ke : (n, 4, 4) and fe : (n, 4)
    """
    c = coords[:, None, :, :]
    det, grads = _physical_gradients(c, _DNQ[None])
    wdet = QUAD_W[None, :] * det
    ke = np.einsum("nq,nqad,nqbd->nab", wdet * kcoef, grads, grads)
    fe = np.einsum("nq,qa->na", wdet * fval, _NQ)
    return ke, fe


def cell_integrals(coords, vals):
    """Integral of quadrature-point values over each cell, ``(n,)``."""
    det, _ = _physical_gradients(coords[:, None, :, :], _DNQ[None])
    return np.einsum("nq,nq->n", QUAD_W[None, :] * det, vals)


def gradients_at(coords, nodal, ref):
    """Gradient of the bilinear field with ``nodal`` values at reference points.

    coords (n, 4, 2), nodal (n, 4), ref (n, 2) -> (n, 2)
    """
    dn = shape_ref_gradients(ref)
    _, grads = _physical_gradients(coords, dn)
    return np.einsum("na,nad->nd", nodal, grads)
