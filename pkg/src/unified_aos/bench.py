"""Noiseless black-box test functions in the BBOB style.

Twelve of the 24 classic functions are implemented, two or more per class.
Instances are derived deterministically from ``(function_id, instance_id, dim)``
through a ``numpy.random.SeedSequence``; they follow the canonical raw formulas
and transformations (``T_osz``, ``T_asy``, ``Lambda^alpha``, ``f_pen``) but are
not bit-compatible with the COCO instance tables.

Every objective is vectorised: ``Problem.evaluate`` accepts one point of shape
``(dim,)`` or a batch ``(n, dim)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import ortho_group

from .core import ContractViolation

LOWER, UPPER = -5.0, 5.0

FUNCTION_NAMES = {
    1: "sphere",
    2: "ellipsoid separable",
    3: "rastrigin separable",
    5: "linear slope",
    6: "attractive sector",
    8: "rosenbrock",
    10: "ellipsoid",
    12: "bent cigar",
    15: "rastrigin",
    17: "schaffers f7",
    21: "gallagher 101 peaks",
    24: "lunacek bi-rastrigin",
}
IMPLEMENTED = tuple(sorted(FUNCTION_NAMES))

# Training instances (function, instance) of the offline tuning set.
TRAINING_SET = (
    (1, 1), (1, 7), (2, 9), (2, 15), (3, 10), (3, 5), (4, 8), (4, 6), (5, 7), (5, 1),
    (6, 13), (6, 7), (7, 2), (7, 5), (8, 6), (8, 3), (9, 10), (9, 3),
    (10, 11), (10, 4), (11, 9), (11, 2), (12, 1), (12, 3), (13, 13), (13, 12),
    (14, 12), (14, 11),
    (15, 7), (15, 15), (16, 2), (16, 14), (17, 12), (17, 15), (18, 9), (18, 15),
    (19, 1), (19, 9),
    (20, 10), (20, 6), (21, 5), (21, 11), (22, 1), (22, 8), (23, 3), (23, 15),
    (24, 8), (24, 4),
)


class UnsupportedFunction(ValueError):
    def __init__(self, fid):
        super().__init__(f"function {fid} is not implemented; available: {list(IMPLEMENTED)}")
        self.fid = fid


# --- transformations ----------------------------------------------------------

def t_osz(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    nz = x != 0.0
    xhat = np.log(np.abs(x), where=nz, out=np.zeros_like(x))
    c1 = np.where(x > 0.0, 10.0, 5.5)
    c2 = np.where(x > 0.0, 7.9, 3.1)
    return np.sign(x) * np.exp(xhat + 0.049 * (np.sin(c1 * xhat) + np.sin(c2 * xhat))) * nz


def t_asy(x: np.ndarray, beta: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    dim = x.shape[-1]
    ramp = np.arange(dim) / (dim - 1) if dim > 1 else np.ones(1)
    pos = x > 0.0
    safe = np.where(pos, x, 1.0)
    return np.where(pos, safe ** (1.0 + beta * ramp * np.sqrt(safe)), x)


def lambda_diag(alpha: float, dim: int) -> np.ndarray:
    """Diagonal of ``Lambda^alpha``."""
    ramp = np.arange(dim) / (dim - 1) if dim > 1 else np.zeros(1)
    return alpha ** (0.5 * ramp)


def f_pen(x: np.ndarray) -> np.ndarray:
    return np.sum(np.maximum(0.0, np.abs(x) - 5.0) ** 2, axis=-1)


def _conditioning(dim: int, exponent: float) -> np.ndarray:
    ramp = np.arange(dim) / (dim - 1) if dim > 1 else np.zeros(1)
    return 10.0 ** (exponent * ramp)


# --- problem ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Problem:
    function_id: int
    instance_id: int
    dim: int
    x_opt: np.ndarray
    f_opt: float
    rot_r: np.ndarray | None = None
    rot_q: np.ndarray | None = None
    extra: dict = field(default_factory=dict)
    lower: float = LOWER
    upper: float = UPPER

    @property
    def name(self) -> str:
        return f"f{self.function_id:02d}-i{self.instance_id:02d}-d{self.dim}"

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        batch = np.atleast_2d(x)
        if batch.ndim != 2 or batch.shape[1] != self.dim:
            raise ContractViolation(f"expected points of dimension {self.dim}, got shape {x.shape}")
        values = self.f_opt + _RAW[self.function_id](self, batch)
        return float(values[0]) if single else values

    __call__ = evaluate


def _rotation(rng: np.random.Generator, dim: int) -> np.ndarray:
    return ortho_group.rvs(dim, random_state=rng)


def make_problem(fid: int, iid: int, dim: int) -> Problem:
    if fid not in _RAW:
        raise UnsupportedFunction(fid)
    if dim < 2:
        raise ContractViolation("dim must be >= 2")
    if iid < 1:
        raise ContractViolation("instance_id must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([fid, iid, dim]))
    x_opt = rng.uniform(-4.0, 4.0, dim)
    f_opt = float(np.round(rng.uniform(-100.0, 100.0), 2))
    rot_r = _rotation(rng, dim)
    rot_q = _rotation(rng, dim)
    extra: dict = {}
    if fid == 5:
        x_opt = 5.0 * np.where(x_opt >= 0.0, 1.0, -1.0)
    elif fid == 24:
        x_opt = 0.5 * _LUNACEK_MU0 * np.where(x_opt >= 0.0, 1.0, -1.0)
    elif fid == 21:
        n_peaks = 101
        peaks = rng.uniform(-5.0, 5.0, (n_peaks, dim))
        peaks[0] = x_opt
        alphas = 1000.0 ** (2.0 * np.arange(n_peaks - 1) / (n_peaks - 2))
        alphas = np.concatenate([[1000.0], rng.permutation(alphas)])
        # Per-peak diagonal of C_i: permuted Lambda^alpha_i scaled by alpha_i^(-1/4).
        diag = np.array([rng.permutation(lambda_diag(a, dim)) / a ** 0.25 for a in alphas])
        weights = np.concatenate([[10.0], 1.1 + 8.0 * np.arange(n_peaks - 1) / (n_peaks - 2)])
        extra = {"peaks": peaks, "diag": diag, "weights": weights}
    return Problem(fid, iid, dim, x_opt, f_opt, rot_r, rot_q, extra)


def evaluate(p: Problem, x):
    return p.evaluate(x)


@dataclass(frozen=True, eq=False)
class ScaledProblem:
    """``factor * f``; optimum location unchanged, ``f_opt`` scaled."""

    base: Problem
    factor: float

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def lower(self) -> float:
        return self.base.lower

    @property
    def upper(self) -> float:
        return self.base.upper

    @property
    def f_opt(self) -> float:
        return self.factor * self.base.f_opt

    def evaluate(self, x):
        return self.factor * np.asarray(self.base.evaluate(x))


# --- raw objectives (batch in, batch out; raw(x_opt) == 0) ------------------------

def _rastrigin(z: np.ndarray) -> np.ndarray:
    dim = z.shape[1]
    return 10.0 * (dim - np.cos(2.0 * np.pi * z).sum(axis=1)) + (z ** 2).sum(axis=1)


def _f01(p, x):
    return ((x - p.x_opt) ** 2).sum(axis=1)


def _f02(p, x):
    z = t_osz(x - p.x_opt)
    return (_conditioning(p.dim, 6.0) * z ** 2).sum(axis=1)


def _f03(p, x):
    z = lambda_diag(10.0, p.dim) * t_asy(t_osz(x - p.x_opt), 0.2)
    return _rastrigin(z)


def _f05(p, x):
    s = np.sign(p.x_opt) * _conditioning(p.dim, 1.0)
    z = np.where(p.x_opt * x < 25.0, x, p.x_opt)
    return (5.0 * np.abs(s) - s * z).sum(axis=1)


def _f06(p, x):
    z = (x - p.x_opt) @ p.rot_r.T * lambda_diag(10.0, p.dim) @ p.rot_q.T
    s = np.where(z * p.x_opt > 0.0, 100.0, 1.0)
    return t_osz(((s * z) ** 2).sum(axis=1)) ** 0.9


def _f08(p, x):
    z = max(1.0, np.sqrt(p.dim) / 8.0) * (x - p.x_opt) + 1.0
    return (100.0 * (z[:, :-1] ** 2 - z[:, 1:]) ** 2 + (z[:, :-1] - 1.0) ** 2).sum(axis=1)


def _f10(p, x):
    z = t_osz((x - p.x_opt) @ p.rot_r.T)
    return (_conditioning(p.dim, 6.0) * z ** 2).sum(axis=1)


def _f12(p, x):
    z = t_asy((x - p.x_opt) @ p.rot_r.T, 0.5) @ p.rot_r.T
    return z[:, 0] ** 2 + 1e6 * (z[:, 1:] ** 2).sum(axis=1)


def _f15(p, x):
    y = t_asy(t_osz((x - p.x_opt) @ p.rot_r.T), 0.2)
    z = (y @ p.rot_q.T * lambda_diag(10.0, p.dim)) @ p.rot_r.T
    return _rastrigin(z)


def _f17(p, x):
    z = t_asy((x - p.x_opt) @ p.rot_r.T, 0.5) @ p.rot_q.T * lambda_diag(10.0, p.dim)
    s = np.sqrt(z[:, :-1] ** 2 + z[:, 1:] ** 2)
    inner = np.sqrt(s) + np.sqrt(s) * np.sin(50.0 * s ** 0.2) ** 2
    return inner.mean(axis=1) ** 2 + 10.0 * f_pen(x)


def _f21(p, x):
    peaks, diag, weights = p.extra["peaks"], p.extra["diag"], p.extra["weights"]
    # (x - y_i)^T R^T C_i R (x - y_i) for every point and peak.
    rx = x @ p.rot_r.T
    ry = peaks @ p.rot_r.T
    d = rx[:, None, :] - ry[None, :, :]
    quad = (d ** 2 * diag[None, :, :]).sum(axis=2)
    best = (weights[None, :] * np.exp(-quad / (2.0 * p.dim))).max(axis=1)
    return t_osz(10.0 - best) ** 2 + f_pen(x)


_LUNACEK_MU0 = 2.5


def _f24(p, x):
    dim = p.dim
    mu0, d = _LUNACEK_MU0, 1.0
    s = 1.0 - 1.0 / (2.0 * np.sqrt(dim + 20.0) - 8.2)
    mu1 = -np.sqrt((mu0 ** 2 - d) / s)
    xhat = 2.0 * np.sign(p.x_opt) * x
    z = ((xhat - mu0) @ p.rot_r.T * lambda_diag(100.0, dim)) @ p.rot_q.T
    bowls = np.minimum(((xhat - mu0) ** 2).sum(axis=1),
                       d * dim + s * ((xhat - mu1) ** 2).sum(axis=1))
    return bowls + 10.0 * (dim - np.cos(2.0 * np.pi * z).sum(axis=1)) + 1e4 * f_pen(x)


_RAW = {1: _f01, 2: _f02, 3: _f03, 5: _f05, 6: _f06, 8: _f08, 10: _f10, 12: _f12,
        15: _f15, 17: _f17, 21: _f21, 24: _f24}


# --- manifests ----------------------------------------------------------------

def training_manifest(dim: int, implemented_only: bool = True) -> list[dict]:
    return [{"function_id": f, "instance_id": i, "dim": dim} for f, i in TRAINING_SET
            if not implemented_only or f in _RAW]


def save_manifest(path, entries: list[dict]) -> None:
    Path(path).write_text(json.dumps(entries, indent=2) + "\n")


def load_manifest(path) -> list[Problem]:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ContractViolation(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, list):
        raise ContractViolation(f"{path}: expected a list of problem entries")
    problems = []
    for n, entry in enumerate(data):
        keys = {"function_id", "instance_id", "dim"}
        if not isinstance(entry, dict) or set(entry) != keys:
            raise ContractViolation(f"{path}[{n}]: expected keys {sorted(keys)}")
        problems.append(make_problem(int(entry["function_id"]), int(entry["instance_id"]),
                                     int(entry["dim"])))
    return problems
