"""Pauli and Dirac matrices and the small amount of 2x2 / 4x4 algebra built on them.

All functions broadcast over leading axes: a vector argument of shape ``(..., 3)``
produces matrices of shape ``(..., 2, 2)`` or ``(..., 4, 4)``.
"""

import numpy as np

I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)

SIGMA = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


def _dirac_alpha(sigma):
    out = np.zeros((3, 4, 4), dtype=complex)
    out[:, :2, 2:] = sigma
    out[:, 2:, :2] = sigma
    return out


# Dirac representation: off-diagonal Pauli blocks.
ALPHA = _dirac_alpha(SIGMA)

for _m in (I2, I4, SIGMA, ALPHA):
    _m.setflags(write=False)


def sigma_dot(v):
    """Return ``v[0] s1 + v[1] s2 + v[2] s3``; ``v`` may be real or complex."""
    v = np.asarray(v)
    return np.tensordot(v, SIGMA, axes=([-1], [0]))


def alpha_dot(v):
    """Return ``v . alpha``, the 4x4 matrix with both off-diagonal blocks ``sigma_dot(v)``."""
    v = np.asarray(v)
    return np.tensordot(v, ALPHA, axes=([-1], [0]))


def pauli_contract(a, b):
    """``(a.b) I2 + i sigma.(a x b)``, which equals ``sigma_dot(a) @ sigma_dot(b)``.

    Computed from the right-hand side; the product form is only used by the tests.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    dot = np.sum(a * b, axis=-1)
    return dot[..., None, None] * I2 + 1j * sigma_dot(np.cross(a, b))


def anticommutator(x, y):
    return x @ y + y @ x


def is_hermitian(m, atol=0.0):
    m = np.asarray(m)
    return bool(np.all(np.abs(m - np.conj(np.swapaxes(m, -1, -2))) <= atol))


def spinor_norm(v):
    """Euclidean norm over the last axis; the norm under which |(alpha.x) f| = |x| |f|."""
    return np.linalg.norm(np.asarray(v), axis=-1)


def sigma_apply(v, u):
    """``sigma_dot(v) @ u`` for 2-spinors, without forming the matrices."""
    v = np.asarray(v)
    u = np.asarray(u)
    v1, v2, v3 = v[..., 0], v[..., 1], v[..., 2]
    a, b = u[..., 0], u[..., 1]
    return np.stack([v3 * a + (v1 - 1j * v2) * b, (v1 + 1j * v2) * a - v3 * b], axis=-1)


def alpha_apply(v, u):
    """``alpha_dot(v) @ u`` for 4-spinors: the blocks swap and each gets sigma.v."""
    u = np.asarray(u)
    return np.concatenate([sigma_apply(v, u[..., 2:]), sigma_apply(v, u[..., :2])], axis=-1)
