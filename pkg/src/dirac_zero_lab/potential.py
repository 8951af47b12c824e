"""Hermitian 4x4 matrix potentials: constructors, decay envelopes, Loss-Yau fields.

A potential is a pointwise Hermitian 4x4 matrix on the lattice.  The
electromagnetic constructor realizes q(x) I - alpha.A(x), so adding it to
the free operator gives the minimally coupled operator.  The Loss-Yau
constructor builds the classical magnetic zero mode of the 2-spinor Weyl
operator and embeds it in the lower components of a 4-spinor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clifford import ALPHA, PAULI
from .field import (
    POSITION,
    GridSpec,
    SpinorField,
    _fft3,
    _ifft3,
    _read_dzl1,
    _write_dzl1,
)

__all__ = [
    "DecayEnvelope",
    "PotentialField",
    "LossYauFields",
    "from_matrix_fn",
    "from_em",
    "loss_yau",
    "loss_yau_potential",
    "apply_potential",
    "decay_envelope",
    "hermiticity_check",
    "pauli_derivative",
    "weyl_residual",
    "save_potential",
    "load_potential",
]

HERMITICITY_TOL = 1e-12


@dataclass(frozen=True)
class DecayEnvelope:
    """Entrywise bound |q_jk(x)| <= C <x>^{-rho} with rho > 1."""

    C: float
    rho: float

    def __post_init__(self):
        if self.rho <= 1:
            raise ValueError(f"decay exponent must exceed 1, got {self.rho}")
        if self.C < 0:
            raise ValueError(f"envelope constant must be nonnegative, got {self.C}")


@dataclass
class PotentialField:
    """Pointwise Hermitian 4x4 matrix field on a grid."""

    grid: GridSpec
    values: np.ndarray
    decay: DecayEnvelope | None = None

    def __post_init__(self):
        expected = (self.grid.N, self.grid.N, self.grid.N, 4, 4)
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != expected:
            raise ValueError(f"potential values must have shape {expected}, got {vals.shape}")
        self.values = vals

    def __mul__(self, scalar) -> "PotentialField":
        return PotentialField(self.grid, self.values * scalar, self.decay)

    __rmul__ = __mul__


def _hermiticity_deviation(values: np.ndarray) -> float:
    return float(np.max(np.abs(values - np.conj(np.swapaxes(values, -1, -2)))))


def from_matrix_fn(fn, grid: GridSpec, decay: DecayEnvelope | None = None) -> PotentialField:
    """Sample a position -> Hermitian 4x4 function; Hermiticity is validated."""
    raw = np.asarray(fn(grid.position_mesh), dtype=np.complex128)
    vals = np.broadcast_to(raw, (grid.N, grid.N, grid.N, 4, 4)).copy()
    if not np.all(np.isfinite(vals.view(float))):
        raise ValueError("potential function is not finite on the lattice")
    dev = _hermiticity_deviation(vals)
    scale = max(1.0, float(np.max(np.abs(vals))))
    if dev > HERMITICITY_TOL * scale:
        raise ValueError(f"sampled potential is not Hermitian: max |Q - Q^dag| = {dev:.3e}")
    return PotentialField(grid, vals, decay)


def from_em(q, A, grid: GridSpec) -> PotentialField:
    """Electromagnetic coupling q(x) I_4 - alpha.A(x) from real scalar/vector data.

    ``q`` is a real (N, N, N) array or None; ``A`` a real (N, N, N, 3) array
    or None.  The result added to alpha.D gives alpha.(D - A) + q I.
    """
    shape = (grid.N, grid.N, grid.N)
    vals = np.zeros(shape + (4, 4), dtype=np.complex128)
    if q is not None:
        q_arr = np.asarray(q)
        if np.iscomplexobj(q_arr) and np.any(q_arr.imag != 0):
            raise ValueError("scalar potential must be real-valued")
        q_arr = np.broadcast_to(q_arr.real.astype(float), shape)
        vals += q_arr[..., None, None] * np.eye(4)
    if A is not None:
        a_arr = np.asarray(A)
        if np.iscomplexobj(a_arr) and np.any(a_arr.imag != 0):
            raise ValueError("vector potential must be real-valued")
        a_arr = np.broadcast_to(a_arr.real.astype(float), shape + (3,))
        for j in range(3):
            vals -= a_arr[..., j, None, None] * ALPHA[j]
    return PotentialField(grid, vals)


@dataclass
class LossYauFields:
    """The magnetic vector potential, its Weyl zero mode, and the embedded 4-spinor."""

    vector_potential: np.ndarray  # (N, N, N, 3) real
    weyl_spinor: np.ndarray  # (N, N, N, 2) complex
    zero_mode: SpinorField


def loss_yau(grid: GridSpec) -> LossYauFields:
    """Construct the classical magnetic zero mode on the lattice.

    phi(x) = (1 + |x|^2)^{-3/2} (I + i sigma.x) (1, 0)^t has |phi| = <x>^{-2}
    exactly, and the spin direction w = <phi, sigma phi> / |phi|^2 is a unit
    vector, so A(x) = 3 (1 + |x|^2)^{-1} w(x) satisfies |A| <x>^2 = 3.  The
    pair solves sigma.(D - A) phi = 0 in the continuum.
    """
    mesh = grid.position_mesh
    x1, x2, x3 = mesh[..., 0], mesh[..., 1], mesh[..., 2]
    one_plus_r2 = 1.0 + grid.radius2
    pref = one_plus_r2 ** (-1.5)
    phi = np.empty((grid.N, grid.N, grid.N, 2), dtype=np.complex128)
    phi[..., 0] = pref * (1.0 + 1j * x3)
    phi[..., 1] = pref * (1j * x1 - x2)

    density = np.sum(np.abs(phi) ** 2, axis=-1)
    w = np.empty((grid.N, grid.N, grid.N, 3))
    for j, s in enumerate(PAULI):
        w[..., j] = np.real(np.einsum("...a,ab,...b->...", np.conj(phi), s, phi)) / density
    vector_potential = 3.0 / one_plus_r2[..., None] * w

    four = np.zeros((grid.N, grid.N, grid.N, 4), dtype=np.complex128)
    four[..., 2:] = phi
    return LossYauFields(
        vector_potential=vector_potential,
        weyl_spinor=phi,
        zero_mode=SpinorField(grid, four, POSITION),
    )


def loss_yau_potential(grid: GridSpec) -> PotentialField:
    """Q = -alpha.A for the Loss-Yau vector potential."""
    return from_em(None, loss_yau(grid).vector_potential, grid)


def apply_potential(Q: PotentialField, f: SpinorField) -> SpinorField:
    """Pointwise matrix-vector product (Q f)(x)."""
    if f.space != POSITION:
        raise ValueError("apply_potential expects a position-space field")
    if f.grid != Q.grid:
        raise ValueError(f"grid mismatch: {Q.grid} vs {f.grid}")
    out = np.einsum("...ab,...b->...a", Q.values, f.values)
    return SpinorField(f.grid, out, POSITION)


def decay_envelope(Q: PotentialField, rho: float) -> float:
    """Smallest C with |q_jk(x)| <= C <x>^{-rho} entrywise on the lattice."""
    if rho <= 1:
        raise ValueError(f"decay exponent must exceed 1, got {rho}")
    weight = Q.grid.bracket**rho
    return float(np.max(np.abs(Q.values) * weight[..., None, None]))


def hermiticity_check(Q: PotentialField) -> float:
    """max entrywise |Q - Q^dag| over the grid."""
    return _hermiticity_deviation(Q.values)


def pauli_derivative(phi: np.ndarray, grid: GridSpec) -> np.ndarray:
    """sigma.D phi for a 2-spinor lattice field, via Pauli multipliers."""
    phi = np.asarray(phi, dtype=np.complex128)
    spec = _fft3(phi)
    xi = grid.freq_mesh
    out = np.zeros_like(spec)
    for j, s in enumerate(PAULI):
        out += xi[..., j, None] * (spec @ s.T)
    return _ifft3(out)


def weyl_residual(phi: np.ndarray, A: np.ndarray, grid: GridSpec) -> float:
    """|| sigma.(D - A) phi ||_2 / || phi ||_2 on the lattice."""
    phi = np.asarray(phi, dtype=np.complex128)
    res = pauli_derivative(phi, grid)
    for j, s in enumerate(PAULI):
        res -= A[..., j, None] * (phi @ s.T)
    num = np.sqrt(np.sum(np.abs(res) ** 2))
    den = np.sqrt(np.sum(np.abs(phi) ** 2))
    if den == 0:
        raise ValueError("zero 2-spinor field")
    return float(num / den)


def save_potential(Q: PotentialField, path) -> None:
    _write_dzl1(path, Q.grid.L, Q.grid.N, POSITION, Q.values, components=16)


def load_potential(path) -> PotentialField:
    grid, _space, flat = _read_dzl1(path, components=16)
    return PotentialField(grid, flat.reshape(grid.N, grid.N, grid.N, 4, 4))
