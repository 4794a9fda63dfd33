"""R^{4,1} with η = diag(1, 1, 1, 1, -1) and the Möbius group acting on it.

A point x of R³ corresponds to the null vector (x, (|x|²-1)/2, (|x|²+1)/2); each
factor of a ConformalMap3 is represented by the SO(4,1) matrix that carries
conformal Gauss maps along, CGM(Θ∘Φ) = M·CGM(Φ).
"""
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from willmore_lab.exceptions import InvalidParameterError
from willmore_lab.services.jet_engine import ComplexJet2, Jet2
from willmore_lab.services.surface_catalog import (
    ConformalMap3,
    Dilation,
    Inversion,
    Rotation,
    Translation,
)

ETA = np.diag([1.0, 1.0, 1.0, 1.0, -1.0])
SIGNS = (1.0, 1.0, 1.0, 1.0, -1.0)

LorentzVec = Union[np.ndarray, Sequence[Jet2], Sequence[ComplexJet2]]


def eta_inner(a: LorentzVec, b: LorentzVec):
    """a¹b¹ + … + a⁴b⁴ - a⁵b⁵, bilinear (no conjugation) for complex entries.

    Arrays carry the five components on the first axis; sequences may hold jets.
    """
    if len(a) != 5 or len(b) != 5:
        raise InvalidParameterError(f"Lorentz vectors have 5 components, got {len(a)} and {len(b)}")
    total = a[0] * b[0]
    for i in range(1, 4):
        total = total + a[i] * b[i]
    return total - a[4] * b[4]


def eta_norm2(a: LorentzVec):
    return eta_inner(a, a)


def causal_type(x: np.ndarray, tol: float = 1e-12) -> str:
    q = float(eta_norm2(np.asarray(x, dtype=float)))
    if abs(q) <= tol * max(1.0, float(np.sum(np.asarray(x, dtype=float) ** 2))):
        return "null"
    return "spacelike" if q > 0 else "timelike"


def light_cone_point(x: Sequence[float]) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    r2 = float(x @ x)
    return np.concatenate([x, [(r2 - 1.0) / 2.0, (r2 + 1.0) / 2.0]])


@dataclass(frozen=True)
class LorentzMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        if np.shape(self.matrix) != (5, 5):
            raise InvalidParameterError(f"Lorentz matrices are 5x5, got {np.shape(self.matrix)}")

    @classmethod
    def identity(cls) -> "LorentzMatrix":
        return cls(np.eye(5))

    @classmethod
    def boost(cls, rapidity: float, axis: int = 3) -> "LorentzMatrix":
        """Boost in the (x^{axis+1}, x⁵) plane."""
        m = np.eye(5)
        ch, sh = np.cosh(rapidity), np.sinh(rapidity)
        m[axis, axis] = m[4, 4] = ch
        m[axis, 4] = m[4, axis] = sh
        return cls(m)

    def lorentz_defect(self) -> float:
        return float(np.max(np.abs(self.matrix.T @ ETA @ self.matrix - ETA)))

    def is_lorentz(self, tol: float = 1e-10) -> bool:
        return self.lorentz_defect() <= tol * max(1.0, float(np.max(np.abs(self.matrix))) ** 2)

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))

    def compose(self, other: "LorentzMatrix") -> "LorentzMatrix":
        """self ∘ other."""
        return LorentzMatrix(self.matrix @ other.matrix)

    __matmul__ = compose

    def inverse(self) -> "LorentzMatrix":
        return LorentzMatrix(ETA @ self.matrix.T @ ETA)

    def apply(self, y: LorentzVec):
        return matrix_apply(self, y)


def lorentz_translation(v: Sequence[float]) -> LorentzMatrix:
    v = np.asarray(v, dtype=float)
    h = 0.5 * float(v @ v)
    m = np.eye(5)
    m[:3, 3] = -v
    m[:3, 4] = v
    m[3, :3] = v
    m[4, :3] = v
    m[3, 3], m[3, 4] = 1.0 - h, h
    m[4, 3], m[4, 4] = -h, 1.0 + h
    return LorentzMatrix(m)


def lorentz_dilation(s: float) -> LorentzMatrix:
    if not s > 0:
        raise InvalidParameterError(f"Dilation factor must be positive, got {s}")
    c, d = 0.5 * (s + 1.0 / s), 0.5 * (s - 1.0 / s)
    m = np.eye(5)
    m[3, 3], m[3, 4] = c, d
    m[4, 3], m[4, 4] = d, c
    return LorentzMatrix(m)


def lorentz_rotation(r: np.ndarray) -> LorentzMatrix:
    m = np.eye(5)
    m[:3, :3] = np.asarray(r, dtype=float)
    return LorentzMatrix(m)


def lorentz_inversion(center: Sequence[float] = (0.0, 0.0, 0.0)) -> LorentzMatrix:
    # Inversion reverses orientation, which flips n and with it the sign of Y.
    inv = LorentzMatrix(np.diag([-1.0, -1.0, -1.0, 1.0, -1.0]))
    c = np.asarray(center, dtype=float)
    if not np.any(c):
        return inv
    return lorentz_translation(c) @ inv @ lorentz_translation(-c)


def lorentz_factor(factor) -> LorentzMatrix:
    if isinstance(factor, Translation):
        return lorentz_translation(factor.vector)
    if isinstance(factor, Dilation):
        return lorentz_dilation(factor.factor)
    if isinstance(factor, Rotation):
        return lorentz_rotation(np.asarray(factor.matrix))
    if isinstance(factor, Inversion):
        return lorentz_inversion(factor.center)
    raise InvalidParameterError(f"No Lorentz representative for {type(factor).__name__}")


def lorentz_from_conformal(theta: ConformalMap3) -> LorentzMatrix:
    """M_n ⋯ M_1 for Θ = θ_n ∘ ⋯ ∘ θ_1 (factors listed first to last)."""
    m = LorentzMatrix.identity()
    for factor in theta.factors:
        m = lorentz_factor(factor) @ m
    return m


def matrix_apply(m: LorentzMatrix, y: LorentzVec):
    """M·Y for an array with components on the first axis, or a sequence of jets."""
    mat = m.matrix
    if isinstance(y, np.ndarray):
        return np.einsum("ab,b...->a...", mat, y)
    if all(isinstance(c, Jet2) for c in y):
        coeffs = np.stack([c.coeffs for c in y])
        out = np.einsum("ab,b...->a...", mat.astype(coeffs.dtype), coeffs)
        return tuple(Jet2(out[a], y[0].order) for a in range(5))
    if all(isinstance(c, ComplexJet2) for c in y):
        re = matrix_apply(m, tuple(c.re for c in y))
        im = matrix_apply(m, tuple(c.im for c in y))
        return tuple(ComplexJet2(r, i) for r, i in zip(re, im))
    return np.einsum("ab,b...->a...", mat, np.asarray(y))
