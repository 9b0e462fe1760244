"""Neumann-Zagier gluing matrices, quad search and a numeric check of the
log-linear change of variables used to pass from edge variables to shapes."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from .exact_algebra import int_det
from .tri_model import Triangulation, angle_counts


class NoInvertibleQuad(RuntimeError):
    pass


class PreconditionViolated(ValueError):
    pass


class SingularSystem(RuntimeError):
    pass


@dataclass(frozen=True)
class NZData:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    meridian_abc: tuple
    longitude_abc: tuple

    @property
    def Aprime(self) -> np.ndarray:
        return self.A - self.C

    @property
    def Bprime(self) -> np.ndarray:
        return self.B - self.C

    def rotated(self, rotation) -> "NZData":
        """Cyclically relabel (a, b, c) -> (b, c, a) r times per tetrahedron."""
        mats = [self.A.copy(), self.B.copy(), self.C.copy()]
        mer, lon = list(self.meridian_abc), list(self.longitude_abc)
        for j, r in enumerate(rotation):
            cols = [m[:, j].copy() for m in (self.A, self.B, self.C)]
            for k in range(3):
                mats[k][:, j] = cols[(k + r) % 3]
            mer[j] = tuple(self.meridian_abc[j][(k + r) % 3] for k in range(3))
            lon[j] = tuple(self.longitude_abc[j][(k + r) % 3] for k in range(3))
        return NZData(mats[0], mats[1], mats[2], tuple(mer), tuple(lon))

    def to_json(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("A", "B", "C", "Aprime", "Bprime")}


@dataclass(frozen=True)
class ReducedNZ:
    quad: tuple
    dropped_edge_row: int
    Ared: np.ndarray
    Bred: np.ndarray
    detBred: int

    def to_json(self) -> dict:
        return {"quad": list(self.quad), "dropped_edge_row": self.dropped_edge_row,
                "Ared": self.Ared.tolist(), "Bred": self.Bred.tolist(), "detBred": self.detBred}


def gluing_matrices(tri: Triangulation) -> NZData:
    m, n = tri.edge_count, tri.n
    mats = np.zeros((3, m, n), dtype=np.int64)
    for i in range(m):
        for j in range(n):
            mats[:, i, j] = angle_counts(tri, i, j)
    mer = tuple(tri.meridian.triple(j) for j in range(n))
    lon = tuple(tri.longitude.triple(j) for j in range(n))
    return NZData(mats[0], mats[1], mats[2], mer, lon)


def check_symplectic(nz: NZData):
    ab = nz.Aprime @ nz.Bprime.T
    witness = ab - ab.T
    return bool(not witness.any()), witness


def _reduced(nz: NZData, drop: int):
    keep = [i for i in range(nz.A.shape[0]) if i != drop]
    mer = np.array(nz.meridian_abc, dtype=np.int64).reshape(-1, 3)
    ared = np.vstack([nz.Aprime[keep], mer[:, 0] - mer[:, 2]])
    bred = np.vstack([nz.Bprime[keep], mer[:, 1] - mer[:, 2]])
    return ared, bred


def choose_quad(nz: NZData) -> ReducedNZ:
    n = nz.A.shape[1]
    for rot in itertools.product(range(3), repeat=n):
        r = nz.rotated(rot)
        for drop in range(nz.A.shape[0]):
            ared, bred = _reduced(r, drop)
            det = int_det(bred.tolist())
            if det:
                return ReducedNZ(tuple(rot), drop, ared, bred, det)
    raise NoInvertibleQuad(f"all {3 ** n * nz.A.shape[0]} quad/row choices are singular")


def _balance_rows(nz: NZData):
    """Log-magnitude balance rows over (log a_j, log c_j) after removing b via
    b = -1/(a c), and the per-edge sign (-1)^(sum of b counts)."""
    ap, cp = nz.A - nz.B, nz.C - nz.B
    m, n = nz.A.shape
    rows = np.zeros((m, 2 * n))
    rows[:, 0::2] = ap
    rows[:, 1::2] = cp
    signs = (-1) ** nz.B.sum(axis=1)
    return rows, signs


def _real_angle_sample(nz: NZData, rng, rhs: float = 2.0, drop=None):
    """Real angle parts (a_dot, b_dot, c_dot) per tet with unit sums and edge sums ``rhs``."""
    m, n = nz.A.shape
    # a_dot*(A - B) + c_dot*(C - B) = rhs - B.1
    rows, _ = _balance_rows(nz)
    target = np.full(m, 2.0) - nz.B.sum(axis=1)
    if drop is not None:
        target[drop] += rhs - 2.0
    part, *_ = np.linalg.lstsq(rows, target, rcond=None)
    ns = null_space(rows)
    x = part + ns @ rng.uniform(-0.5, 0.5, ns.shape[1]) if ns.size else part
    ad, cd = x[0::2], x[1::2]
    return ad, 1.0 - ad - cd, cd


def verify_change_of_variables(tri: Triangulation, samples: int = 20, tol: float = 1e-10, seed: int = 0,
                               scale: float = 1.0, violate_balance: bool = False) -> dict:
    """Numerically check the log-linear identity behind the shape change of variables.

    With log-magnitudes Abar, Cbar (Bbar = -Abar - Cbar) satisfying the balance
    rows and a meridian magnitude, E = (Bred^T)^-1 (Q - Abar) must give
    -Bbar + Ared^T E = Bred^-1 (Ared Q - h), h = (0,...,0, log|mu|).  The second
    check is A' a_dot + B' b_dot = 2 - C.1 on real angle parts."""
    if not tri.all_positive():
        raise PreconditionViolated("change-of-variables check needs an all-positive triangulation")
    nz = gluing_matrices(tri)
    red = choose_quad(nz)
    rows, signs = _balance_rows(nz)
    if np.any(signs < 0):
        raise SingularSystem("balance signs admit no positive real solution")
    ns = null_space(rows)
    if ns.size == 0:
        raise SingularSystem("balance constraints force all magnitudes to 1")
    rng = np.random.default_rng(seed)
    n = tri.n
    q_mix = rng.integers(-3, 4, size=(n, 2))
    worst_p = worst_real = 0.0
    for _ in range(samples):
        x = scale * (ns @ rng.normal(size=ns.shape[1]))
        if violate_balance:
            x = x + scale * rows[0] / np.dot(rows[0], rows[0])
        abar, cbar = x[0::2], x[1::2]
        bbar = -abar - cbar
        logs = np.stack([abar, bbar, cbar], axis=1)
        rlogs = np.empty_like(logs)
        for j, r in enumerate(red.quad):
            rlogs[j] = [logs[j][(k + r) % 3] for k in range(3)]
        # primed log vectors in the rotated quad: a' - c', b' - c' pair with rotated a, b
        ra, rb = rlogs[:, 0], rlogs[:, 1]
        mer = np.array(nz.meridian_abc, dtype=float)
        log_mu = float(np.sum(mer * logs))
        lon = np.array(nz.longitude_abc, dtype=float)
        log_lam = float(np.sum(lon * logs))
        qbar = q_mix[:, 0] * log_mu + q_mix[:, 1] * log_lam
        h = np.zeros(n)
        h[-1] = log_mu
        ared, bred = red.Ared.astype(float), red.Bred.astype(float)
        e = np.linalg.solve(bred.T, qbar - ra)
        p_direct = -rb + ared.T @ e
        p_formula = np.linalg.solve(bred, ared @ qbar - h)
        size = max(1.0, float(np.max(np.abs(logs))), float(np.max(np.abs(p_direct))))
        worst_p = max(worst_p, float(np.max(np.abs(p_direct - p_formula))) / size)

        ad, bd, cd = _real_angle_sample(nz, rng, rhs=3.0 if violate_balance else 2.0,
                                        drop=0 if violate_balance else None)
        lhs = nz.Aprime @ ad + nz.Bprime @ bd
        rhs = 2.0 - nz.C.sum(axis=1)
        worst_real = max(worst_real, float(np.max(np.abs(lhs - rhs))))
    return {
        "quad": list(red.quad),
        "dropped_edge_row": red.dropped_edge_row,
        "detBred": red.detBred,
        "samples": samples,
        "max_residual_change_of_variables": worst_p,
        "max_residual_real_parts": worst_real,
        "pass": worst_p < tol and worst_real < tol,
    }
