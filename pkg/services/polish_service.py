# services/polish_service.py
"""
Refinement of jammed packings to the 14-digit reporting accuracy.

compact() drives a near-jammed packing to a local maximum of m with
sequential linear programming; polish() then solves the bond equalities of
the contact graph with Gauss-Newton steps.
"""
from __future__ import annotations

import logging

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import cKDTree

from config import REFINE_BOND_TOL_REL
from services.contacts_service import RATTLER, ContactGraph, contact_graph
from services.errors import ContactMismatch, PackingError, SingularSystem
from services.geometry_service import Packing, min_pair_distance

logger = logging.getLogger(__name__)

POLISH_TOL_REL = 1e-14
ACCEPT_TOL_REL = 1e-12
MAX_M_SHIFT_REL = 1e-9


def _bond_system(contacts: ContactGraph, solid: list[int]):
    index = {disk: k for k, disk in enumerate(solid)}
    pairs = [(i, j) for i, j, _ in contacts.disk_bonds if i in index and j in index]
    walls = [(i, w) for i, w, _ in contacts.wall_bonds if i in index]
    return index, pairs, walls


def _residual(centers, m, index, pairs, walls):
    rows = len(pairs) + len(walls)
    cols = 2 * len(index) + 1
    F = np.empty(rows)
    J = np.zeros((rows, cols))
    r = 0
    for i, j in pairs:
        d = centers[i] - centers[j]
        dist = float(np.hypot(d[0], d[1]))
        u = d / dist
        F[r] = dist - m
        a, b = index[i], index[j]
        J[r, 2 * a : 2 * a + 2] = u
        J[r, 2 * b : 2 * b + 2] = -u
        J[r, -1] = -1.0
        r += 1
    for i, wall in walls:
        a = index[i]
        if wall == "left":
            F[r], J[r, 2 * a] = centers[i, 0], 1.0
        elif wall == "right":
            F[r], J[r, 2 * a] = centers[i, 0] - 1.0, 1.0
        elif wall == "bottom":
            F[r], J[r, 2 * a + 1] = centers[i, 1], 1.0
        else:
            F[r], J[r, 2 * a + 1] = centers[i, 1] - 1.0, 1.0
        r += 1
    return F, J


def polish(
    p: Packing,
    contacts: ContactGraph,
    max_m_shift_rel: float = MAX_M_SHIFT_REL,
    tol_rel: float = POLISH_TOL_REL,
    max_iter: int = 60,
) -> Packing:
    """
    Newton iteration on {|ci - cj| = m per disk bond, wall distance = m/2 per wall
    bond} with solid coordinates and m unknown; rattlers stay frozen.
    """
    solid = [i for i, label in enumerate(contacts.labels) if label != RATTLER]
    if not solid:
        raise SingularSystem("No solid disks to polish")
    index, pairs, walls = _bond_system(contacts, solid)
    if not pairs and not walls:
        raise SingularSystem("Contact graph has no bonds among solid disks")

    centers = np.array(p.centers, dtype=float)
    m = float(p.m)
    F, J = _residual(centers, m, index, pairs, walls)
    unknowns = J.shape[1]
    if np.linalg.matrix_rank(J) < unknowns:
        raise SingularSystem(
            f"Contact graph is not rigid: rank {np.linalg.matrix_rank(J)} < {unknowns}"
        )

    best = float(np.max(np.abs(F)))
    if best <= tol_rel * m:
        return p

    stalled = 0
    for iteration in range(max_iter):
        step, *_ = np.linalg.lstsq(J, -F, rcond=None)
        trial = centers.copy()
        trial[solid] += step[:-1].reshape(-1, 2)
        trial_m = m + float(step[-1])
        F_new, J_new = _residual(trial, trial_m, index, pairs, walls)
        res = float(np.max(np.abs(F_new)))
        logger.debug("polish iteration %d residual %.3e", iteration, res)
        if res < best:
            centers, m, F, J = trial, trial_m, F_new, J_new
            stalled = 0 if res < 0.5 * best else stalled + 1
            best = res
        else:
            stalled += 1
        if best <= tol_rel * m or stalled >= 3:
            break

    if best > ACCEPT_TOL_REL * m:
        raise ContactMismatch(
            f"Bond system is inconsistent with the geometry (residual {best:.3e})"
        )
    if abs(m - p.m) > max_m_shift_rel * p.m:
        raise ContactMismatch(
            f"Polish moved m from {p.m:.15g} to {m:.15g}; contacts do not match"
        )

    polished = p.with_centers(np.clip(centers, 0.0, 1.0), m)
    dist, i, j = min_pair_distance(polished.centers)
    if dist < m * (1.0 - 1e-10):
        raise ContactMismatch(f"Polish created an overlap between disks {i} and {j}")
    return polished


def compact(
    p: Packing,
    trust: float = 0.05,
    max_iter: int = 400,
    tol_rel: float = 1e-15,
) -> Packing:
    """
    Sequential linear programming on m: linearized pair distances bound the true
    distances from below, so every accepted step keeps the packing overlap-free.
    """
    n = p.n
    centers = np.array(p.centers, dtype=float)
    m = float(p.m)
    rho = trust * m
    floor = 1e-13 * m

    for iteration in range(max_iter):
        reach = m + 4.0 * rho + 1e-12
        pairs = cKDTree(centers).query_pairs(r=reach, output_type="ndarray")
        rows = []
        b_ub = []
        for i, j in pairs:
            d = centers[j] - centers[i]
            dist = float(np.hypot(d[0], d[1]))
            u = d / dist
            row = np.zeros(2 * n + 1)
            row[2 * i : 2 * i + 2] = u
            row[2 * j : 2 * j + 2] = -u
            row[-1] = 1.0
            rows.append(row)
            b_ub.append(dist - m)

        bounds = []
        for x in centers.ravel():
            bounds.append((max(-rho, -x), min(rho, 1.0 - x)))
        bounds.append((-0.5 * m, 4.0 * rho))
        c = np.zeros(2 * n + 1)
        c[-1] = -1.0

        res = linprog(
            c,
            A_ub=np.array(rows) if rows else None,
            b_ub=np.array(b_ub) if rows else None,
            bounds=bounds,
            method="highs",
            options={
                "primal_feasibility_tolerance": 1e-10,
                "dual_feasibility_tolerance": 1e-10,
            },
        )
        if res.status != 0:
            logger.warning("compaction LP stopped: %s", res.message)
            break

        step = res.x
        centers = np.clip(centers + step[:-1].reshape(-1, 2), 0.0, 1.0)
        gain = float(step[-1])
        m = min(m + gain, min_pair_distance(centers)[0])
        logger.debug("compact iteration %d m=%.15g gain=%.3e rho=%.3e", iteration, m, gain, rho)

        if gain <= tol_rel * m:
            rho *= 0.25
        elif gain < 0.5 * rho:
            rho *= 0.5
        if rho < floor:
            break

    return Packing.from_points(centers, m, p.provenance)


def bond_residual(p: Packing, contacts: ContactGraph) -> float:
    """Largest |bond equation| over the solid disks of the contact graph"""
    solid = [i for i, label in enumerate(contacts.labels) if label != RATTLER]
    index, pairs, walls = _bond_system(contacts, solid)
    if not pairs and not walls:
        return 0.0
    F, _ = _residual(np.asarray(p.centers, dtype=float), float(p.m), index, pairs, walls)
    return float(np.max(np.abs(F)))


def refine(
    p: Packing, bond_tol_rel: float = REFINE_BOND_TOL_REL
) -> tuple[Packing, bool]:
    """
    compact, then polish on the compacted contact graph.

    Returns:
        (packing, refined). refined is False when polish failed and the
        compacted packing came back, or when the bond residual stayed above
        POLISH_TOL_REL * m; such an m is not good to 14 digits.
    """
    compacted = compact(p)
    contacts = contact_graph(compacted, bond_tol=bond_tol_rel * compacted.m)
    try:
        polished = polish(compacted, contacts, max_m_shift_rel=1e-6)
    except PackingError as exc:
        logger.warning("polish skipped after compaction: %s", exc)
        return compacted, False
    residual = bond_residual(polished, contacts)
    if residual > POLISH_TOL_REL * polished.m:
        logger.warning(
            "polish residual %.3e exceeds %.0e of m; m is not full precision",
            residual / polished.m,
            POLISH_TOL_REL,
        )
        return polished, False
    return polished, True
