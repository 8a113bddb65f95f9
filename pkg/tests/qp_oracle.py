"""Independent brute-force active-set enumeration oracle for small QPs.

Enumerates candidate active sets by increasing cardinality, solves the
equality-constrained KKT system for each, and returns the first candidate
that is primal feasible with correctly signed multipliers.  For a strictly
convex QP that point is the unique global optimum.  Deliberately written
from the KKT definition, with no code shared with the package solver.
"""

import itertools

import numpy as np


def _never_tight_rows(g_mat, g_rhs, lb, ub):
    """Inequality rows that cannot touch their bound anywhere on the box."""
    pos = np.clip(g_mat, 0.0, None)
    neg = np.clip(g_mat, None, 0.0)
    row_max = pos @ ub + neg @ lb
    return row_max < g_rhs - 1e-12


def enumerate_solve(hessian, linear, lb, ub, g_mat=None, g_rhs=None,
                    feas_tol=1e-8, dual_tol=1e-8):
    """Return (z_opt, objective, n_active) or raise if none certified."""
    h = np.asarray(hessian, float)
    f = np.asarray(linear, float).ravel()
    lb = np.asarray(lb, float).ravel()
    ub = np.asarray(ub, float).ravel()
    n = f.size
    m = 0 if g_mat is None else np.atleast_2d(g_mat).shape[0]
    if m:
        g_mat = np.atleast_2d(np.asarray(g_mat, float))
        g_rhs = np.asarray(g_rhs, float).ravel()

    # Candidate faces: (row_vector, rhs, sign); sign +1 for upper faces
    # (multiplier >= 0), -1 for lower faces (multiplier <= 0).
    faces = []
    face_var = []            # variable id for mutually exclusive box faces
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        faces.append((e, ub[i], +1.0))
        face_var.append(i)
        faces.append((e, lb[i], -1.0))
        face_var.append(i)
    if m:
        skip = _never_tight_rows(g_mat, g_rhs, lb, ub)
        for r in range(m):
            if not skip[r]:
                faces.append((g_mat[r], g_rhs[r], +1.0))
                face_var.append(None)

    def feasible(z):
        if np.any(z > ub + feas_tol) or np.any(z < lb - feas_tol):
            return False
        if m and np.any(g_mat @ z > g_rhs + feas_tol):
            return False
        return True

    n_faces = len(faces)
    for size in range(0, n + 1):
        for combo in itertools.combinations(range(n_faces), size):
            used_vars = [face_var[c] for c in combo if face_var[c] is not None]
            if len(used_vars) != len(set(used_vars)):
                continue   # both faces of one box variable
            e_rows = np.array([faces[c][0] for c in combo]).reshape(size, n)
            b = np.array([faces[c][1] for c in combo])
            signs = np.array([faces[c][2] for c in combo])

            kkt = np.zeros((n + size, n + size))
            kkt[:n, :n] = h
            kkt[:n, n:] = e_rows.T
            kkt[n:, :n] = e_rows
            rhs = np.concatenate([-f, b])
            try:
                sol = np.linalg.solve(kkt, rhs)
            except np.linalg.LinAlgError:
                continue
            if not np.all(np.isfinite(sol)):
                continue
            z = sol[:n]
            nu = sol[n:]
            if size and np.max(np.abs(e_rows @ z - b)) > 1e-9:
                continue
            if np.any(signs * nu < -dual_tol):
                continue
            if not feasible(z):
                continue
            obj = float(0.5 * z @ h @ z + f @ z)
            return z, obj, size
    raise RuntimeError("enumeration found no certified optimum")


def random_instance(rng, n=None, m=None, max_active=4):
    """Random strictly convex instance with a KKT-planted optimum.

    The active set at the optimum is constructed explicitly, so the expected
    solution is known independently of any solver and the enumeration oracle
    terminates at that cardinality.
    Returns (hessian, linear, lb, ub, g_mat, g_rhs, z_opt).
    """
    n = n if n is not None else int(rng.integers(2, 13))
    m = m if m is not None else int(rng.integers(1, 25))
    # Keep the enumeration cheap when the face count is large.
    k_cap = max_active if 2 * n + m <= 26 else min(max_active, 3)
    k = int(rng.integers(0, k_cap + 1))

    h = np.diag(rng.uniform(0.5, 4.0, n))
    lb = rng.uniform(-2.0, -0.2, n)
    ub = rng.uniform(0.2, 2.0, n)
    z_opt = rng.uniform(lb + 0.05, ub - 0.05)
    g_mat = rng.normal(size=(m, n))

    n_box = int(rng.integers(0, min(k, n) + 1))
    n_rows = min(k - n_box, m)
    box_vars = rng.permutation(n)[:n_box]
    tight_rows = rng.permutation(m)[:n_rows]

    grad_extra = np.zeros(n)
    for i in box_vars:
        if rng.uniform() < 0.5:
            z_opt[i] = ub[i]
            grad_extra[i] -= rng.uniform(0.1, 1.0)   # upper face, nu >= 0
        else:
            z_opt[i] = lb[i]
            grad_extra[i] += rng.uniform(0.1, 1.0)   # lower face, nu <= 0

    g_rhs = g_mat @ z_opt + rng.uniform(0.1, 2.0, m)
    for r in tight_rows:
        g_rhs[r] = g_mat[r] @ z_opt
        grad_extra -= rng.uniform(0.1, 1.0) * g_mat[r]

    linear = -(h @ z_opt) + grad_extra
    return h, linear, lb, ub, g_mat, g_rhs, z_opt
