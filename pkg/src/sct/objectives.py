"""Information objectives with analytic gradients for the simplex optimizer.

Every objective is written as a conditional mutual information of a joint
array that depends linearly (or bilinearly) on the stochastic blocks.  The
homogeneous form

    I(A;B|C) = sum J log2( J * J_C / (J_AC * J_BC) )

has gradient ``log2(J * J_C / (J_AC * J_BC))`` with respect to each cell of
J, with no additive constants, which keeps the chain rule simple.
"""
from __future__ import annotations

import numpy as np

_FLOOR = 1e-300


def _log2(a):
    return np.log2(np.maximum(a, _FLOOR))


def cmi_with_grad(j: np.ndarray, a, b, c=()) -> tuple[float, np.ndarray]:
    """Value and gradient of I(A;B|C) for a non-negative joint array ``j``.

    Axes of ``j`` not named in a, b or c are summed out; the gradient is
    broadcast back to the full shape of ``j``.
    """
    a, b, c = tuple(a), tuple(b), tuple(c)
    drop = tuple(i for i in range(j.ndim) if i not in a + b + c)
    m = j.sum(axis=drop, keepdims=True) if drop else j
    m_ac = m.sum(axis=b, keepdims=True)
    m_bc = m.sum(axis=a, keepdims=True)
    m_c = m_ac.sum(axis=a, keepdims=True)
    ratio = _log2(m) + _log2(m_c) - _log2(m_ac) - _log2(m_bc)
    value = float(np.where(m > 0, m * ratio, 0.0).sum())
    grad = np.broadcast_to(ratio, j.shape)
    return max(value, 0.0), grad


def intrinsic_objective(p_xyz: np.ndarray):
    """I(X;Y|Zbar) as a function of the channel block W[z, zbar]."""
    p = np.asarray(p_xyz, dtype=np.float64)

    def f(blocks):
        (w,) = blocks
        j = np.tensordot(p, w, axes=([2], [0]))
        val, g = cmi_with_grad(j, (0,), (1,), (2,))
        grad_w = np.tensordot(p, g, axes=([0, 1], [0, 1]))
        return val, [grad_w]

    return f


def wyner_objectives(p_xyz: np.ndarray):
    """(objective, constraint) for conditional Wyner CI over V[(x,y,z), q].

    objective = I(XY;Q|Z), constraint = I(X;Y|QZ).  A bipartite problem is the
    special case with a single Z symbol.
    """
    p = np.asarray(p_xyz, dtype=np.float64)
    nx, ny, nz = p.shape

    def joint(v):
        return p[:, :, :, None] * v.reshape(nx, ny, nz, -1)

    def objective(blocks):
        (v,) = blocks
        j = joint(v)
        flat = j.reshape(nx * ny, nz, -1)
        val, g = cmi_with_grad(flat, (0,), (2,), (1,))
        return val, [(p[:, :, :, None] * g.reshape(j.shape)).reshape(v.shape)]

    def constraint(blocks):
        (v,) = blocks
        j = joint(v)
        val, g = cmi_with_grad(j, (0,), (1,), (2, 3))
        return val, [(p[:, :, :, None] * g).reshape(v.shape)]

    return objective, constraint


def joint_intrinsic_wyner_objectives(p_xyz: np.ndarray, nzbar: int):
    """(objective, constraint) over blocks [W[z, zbar], V[(x,y,zbar), q]].

    objective = I(XY;Q|Zbar), constraint = I(X;Y|Q Zbar), with the degraded
    joint p(x,y,zbar) = sum_z p(x,y,z) W[z,zbar] and Q drawn from V.
    """
    p = np.asarray(p_xyz, dtype=np.float64)
    nx, ny, nz = p.shape

    def parts(blocks):
        w, v = blocks
        pb = np.tensordot(p, w, axes=([2], [0]))
        v4 = v.reshape(nx, ny, nzbar, -1)
        return pb, v4, pb[:, :, :, None] * v4

    def chain(g, pb, v4, shape_v):
        grad_v = (pb[:, :, :, None] * g).reshape(shape_v)
        grad_pb = (g * v4).sum(axis=3)
        grad_w = np.tensordot(p, grad_pb, axes=([0, 1], [0, 1]))
        return [grad_w, grad_v]

    def objective(blocks):
        pb, v4, j = parts(blocks)
        flat = j.reshape(nx * ny, nzbar, -1)
        val, g = cmi_with_grad(flat, (0,), (2,), (1,))
        return val, chain(g.reshape(j.shape), pb, v4, blocks[1].shape)

    def constraint(blocks):
        pb, v4, j = parts(blocks)
        val, g = cmi_with_grad(j, (0,), (1,), (2, 3))
        return val, chain(g, pb, v4, blocks[1].shape)

    return objective, constraint
