"""Periodic 3D grid, 4-spinor fields, Fourier transforms, norms and pairings.

The box is [-L, L)^3 sampled at N points per axis (N even), so x = 0 is a
lattice point and the frequency lattice is (pi/L) * {-N/2, ..., N/2 - 1}^3.
The transforms carry the continuum normalization (2 pi)^{-3/2}, which makes
analytic transforms (a unit Gaussian maps to a unit Gaussian) directly
comparable on well-resolved grids and makes Parseval exact on the lattice.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "POSITION",
    "FREQUENCY",
    "GridSpec",
    "SpinorField",
    "NormReport",
    "ShellProfile",
    "make_grid",
    "sample",
    "random_field",
    "forward_fourier",
    "inverse_fourier",
    "l2_norm",
    "weighted_l2_norm",
    "sobolev_norm",
    "pairing",
    "shell_profile",
    "restrict_to_subbox",
    "save_field",
    "load_field",
]

POSITION = "position"
FREQUENCY = "frequency"

_TWO_PI_32 = (2.0 * np.pi) ** 1.5


class GridSpec:
    """Cubic periodic lattice: half-width L, N points per axis, spacing h = 2L/N."""

    def __init__(self, L: float, N: int):
        L = float(L)
        if not np.isfinite(L) or L <= 0:
            raise ValueError(f"box half-width must be positive, got {L}")
        if int(N) != N or N % 2 != 0 or N < 4:
            raise ValueError(f"points per axis must be an even integer >= 4, got {N}")
        self.L = L
        self.N = int(N)

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def freq_step(self) -> float:
        return np.pi / self.L

    @property
    def npoints(self) -> int:
        return self.N**3

    @property
    def cell_volume(self) -> float:
        return self.h**3

    @property
    def freq_cell_volume(self) -> float:
        return self.freq_step**3

    @cached_property
    def axis(self) -> np.ndarray:
        return self.h * np.arange(-self.N // 2, self.N // 2, dtype=float)

    @cached_property
    def freq_axis(self) -> np.ndarray:
        return self.freq_step * np.arange(-self.N // 2, self.N // 2, dtype=float)

    def _mesh(self, ax: np.ndarray) -> np.ndarray:
        g = np.meshgrid(ax, ax, ax, indexing="ij")
        return np.stack(g, axis=-1)

    @cached_property
    def position_mesh(self) -> np.ndarray:
        """Lattice coordinates, shape (N, N, N, 3)."""
        m = self._mesh(self.axis)
        m.setflags(write=False)
        return m

    @cached_property
    def freq_mesh(self) -> np.ndarray:
        m = self._mesh(self.freq_axis)
        m.setflags(write=False)
        return m

    @cached_property
    def radius2(self) -> np.ndarray:
        r2 = np.sum(self.position_mesh**2, axis=-1)
        r2.setflags(write=False)
        return r2

    @cached_property
    def freq_radius2(self) -> np.ndarray:
        r2 = np.sum(self.freq_mesh**2, axis=-1)
        r2.setflags(write=False)
        return r2

    @cached_property
    def bracket(self) -> np.ndarray:
        """<x> = (1 + |x|^2)^{1/2} on the lattice."""
        b = np.sqrt(1.0 + self.radius2)
        b.setflags(write=False)
        return b

    @property
    def origin_index(self) -> tuple[int, int, int]:
        i = self.N // 2
        return (i, i, i)

    def __eq__(self, other) -> bool:
        return isinstance(other, GridSpec) and (self.L, self.N) == (other.L, other.N)

    def __hash__(self) -> int:
        return hash((self.L, self.N))

    def __repr__(self) -> str:
        return f"GridSpec(L={self.L}, N={self.N})"


def make_grid(L: float, N: int) -> GridSpec:
    """Validated constructor for :class:`GridSpec`."""
    return GridSpec(L, N)


@dataclass
class SpinorField:
    """A C^4-valued lattice field, tagged with the space it lives in."""

    grid: GridSpec
    values: np.ndarray
    space: str = POSITION

    def __post_init__(self):
        expected = (self.grid.N, self.grid.N, self.grid.N, 4)
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != expected:
            raise ValueError(f"field values must have shape {expected}, got {vals.shape}")
        if self.space not in (POSITION, FREQUENCY):
            raise ValueError(f"unknown space tag {self.space!r}")
        self.values = vals

    def copy(self) -> "SpinorField":
        return SpinorField(self.grid, self.values.copy(), self.space)

    def _measure(self) -> float:
        return self.grid.cell_volume if self.space == POSITION else self.grid.freq_cell_volume

    def __add__(self, other: "SpinorField") -> "SpinorField":
        _check_compatible(self, other)
        return SpinorField(self.grid, self.values + other.values, self.space)

    def __sub__(self, other: "SpinorField") -> "SpinorField":
        _check_compatible(self, other)
        return SpinorField(self.grid, self.values - other.values, self.space)

    def __mul__(self, scalar) -> "SpinorField":
        return SpinorField(self.grid, self.values * scalar, self.space)

    __rmul__ = __mul__

    def __neg__(self) -> "SpinorField":
        return SpinorField(self.grid, -self.values, self.space)


def _check_compatible(f: SpinorField, g: SpinorField) -> None:
    if f.grid != g.grid:
        raise ValueError(f"grid mismatch: {f.grid} vs {g.grid}")
    if f.space != g.space:
        raise ValueError(f"space mismatch: {f.space} vs {g.space}")


@dataclass(frozen=True)
class NormReport:
    value: float
    weight_exponent: float
    norm_kind: str


def sample(fn, grid: GridSpec) -> SpinorField:
    """Sample a position -> C^4 function on the lattice.

    ``fn`` is called with the full coordinate mesh (shape (N, N, N, 3)) and
    must return an array broadcastable to (N, N, N, 4).  Non-finite values
    (e.g. an unregularized singularity at the lattice origin) are rejected.
    """
    raw = np.asarray(fn(grid.position_mesh), dtype=np.complex128)
    vals = np.broadcast_to(raw, (grid.N, grid.N, grid.N, 4)).copy()
    if not np.all(np.isfinite(vals.view(float))):
        bad = np.argwhere(~np.isfinite(vals).all(axis=-1))[0]
        point = grid.position_mesh[tuple(bad)]
        raise ValueError(f"sampled function is not finite at lattice point {point}")
    return SpinorField(grid, vals, POSITION)


def random_field(
    grid: GridSpec,
    seed: int,
    band_limit: float | None = None,
    mean_zero: bool = False,
) -> SpinorField:
    """Seeded random field; optionally band-limited to |xi| <= band_limit and mean-free."""
    rng = np.random.default_rng(seed)
    shape = (grid.N, grid.N, grid.N, 4)
    spec = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    if band_limit is not None:
        mask = grid.freq_radius2 <= band_limit**2
        spec = spec * mask[..., None]
    if mean_zero:
        spec[grid.origin_index] = 0.0
    fhat = SpinorField(grid, spec, FREQUENCY)
    return inverse_fourier(fhat)


def _fft3(values: np.ndarray) -> np.ndarray:
    shifted = np.fft.ifftshift(values, axes=(0, 1, 2))
    out = np.fft.fftn(shifted, axes=(0, 1, 2))
    return np.fft.fftshift(out, axes=(0, 1, 2))


def _ifft3(values: np.ndarray) -> np.ndarray:
    shifted = np.fft.ifftshift(values, axes=(0, 1, 2))
    out = np.fft.ifftn(shifted, axes=(0, 1, 2))
    return np.fft.fftshift(out, axes=(0, 1, 2))


def forward_fourier(f: SpinorField) -> SpinorField:
    """Continuum-normalized transform: (2 pi)^{-3/2} h^3 sum_x f(x) e^{-i x.xi}."""
    if f.space != POSITION:
        raise ValueError("forward_fourier expects a position-space field")
    scale = f.grid.cell_volume / _TWO_PI_32
    return SpinorField(f.grid, _fft3(f.values) * scale, FREQUENCY)


def inverse_fourier(fhat: SpinorField) -> SpinorField:
    """Inverse of :func:`forward_fourier`; round trip is the identity."""
    if fhat.space != FREQUENCY:
        raise ValueError("inverse_fourier expects a frequency-space field")
    g = fhat.grid
    scale = g.npoints * g.freq_cell_volume / _TWO_PI_32
    return SpinorField(g, _ifft3(fhat.values) * scale, POSITION)


def _pointwise_square(values: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(values) ** 2, axis=-1)


def l2_norm(f: SpinorField) -> float:
    """Plain L^2 norm with the lattice measure of the field's space."""
    return float(np.sqrt(np.sum(_pointwise_square(f.values)) * f._measure()))


def _weighted_value(f: SpinorField, s: float) -> float:
    r2 = f.grid.radius2 if f.space == POSITION else f.grid.freq_radius2
    weight = (1.0 + r2) ** s  # <.>^{2s}
    total = np.sum(weight * _pointwise_square(f.values)) * f._measure()
    return float(np.sqrt(total))


def weighted_l2_norm(f: SpinorField, s: float) -> NormReport:
    """|| <x>^s f ||_2 on the position lattice."""
    if f.space != POSITION:
        raise ValueError("weighted_l2_norm expects a position-space field")
    kind = "plain-L2" if s == 0 else "weighted-L2"
    return NormReport(value=_weighted_value(f, s), weight_exponent=float(s), norm_kind=kind)


def sobolev_norm(f: SpinorField, s: float) -> NormReport:
    """|| <xi>^s (F f) ||_2, the H^s norm of a position-space field."""
    if f.space != POSITION:
        raise ValueError("sobolev_norm expects a position-space field")
    fhat = forward_fourier(f)
    return NormReport(value=_weighted_value(fhat, s), weight_exponent=float(s), norm_kind="sobolev")


def pairing(f: SpinorField, g: SpinorField) -> complex:
    """Sesquilinear coupling sum_j int (F f_j)(xi) conj((F g_j)(xi)) dxi."""
    if f.space != POSITION or g.space != POSITION:
        raise ValueError("pairing expects position-space fields")
    if f.grid != g.grid:
        raise ValueError(f"grid mismatch: {f.grid} vs {g.grid}")
    fhat = forward_fourier(f)
    ghat = forward_fourier(g)
    total = np.sum(fhat.values * np.conj(ghat.values)) * f.grid.freq_cell_volume
    return complex(total)


@dataclass(frozen=True)
class ShellProfile:
    """Per-shell L^2 masses m_k = sum_{R_k <= |x| < R_{k+1}} |f|^2 h^3."""

    edges: tuple[float, ...]
    masses: tuple[float, ...]
    counts: tuple[int, ...]

    @property
    def empty_shells(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.counts) if c == 0)

    @property
    def radii(self) -> tuple[float, ...]:
        """Geometric-mean representative radius per shell."""
        return tuple(
            float(np.sqrt(a * b)) for a, b in zip(self.edges[:-1], self.edges[1:])
        )


def shell_profile(f: SpinorField, shell_edges) -> ShellProfile:
    """L^2 mass of f between consecutive radii.  Empty shells are flagged."""
    if f.space != POSITION:
        raise ValueError("shell_profile expects a position-space field")
    edges = [float(e) for e in shell_edges]
    if len(edges) < 2:
        raise ValueError("need at least two shell edges")
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValueError("shell edges must be strictly increasing")
    if edges[0] < 0:
        raise ValueError("shell edges must be nonnegative")
    rmax = f.grid.L * np.sqrt(3.0)
    if edges[-1] > rmax * (1 + 1e-12):
        raise ValueError(f"outermost edge {edges[-1]} exceeds the box corner radius {rmax:.6g}")
    r = np.sqrt(f.grid.radius2)
    density = _pointwise_square(f.values)
    masses, counts = [], []
    for a, b in zip(edges, edges[1:]):
        mask = (r >= a) & (r < b)
        counts.append(int(np.count_nonzero(mask)))
        masses.append(float(np.sum(density[mask]) * f.grid.cell_volume))
    return ShellProfile(edges=tuple(edges), masses=tuple(masses), counts=tuple(counts))


def restrict_to_subbox(f: SpinorField, factor: int = 2) -> SpinorField:
    """Restrict to the centered sub-box of half-width L / factor (same spacing)."""
    if f.space != POSITION:
        raise ValueError("restrict_to_subbox expects a position-space field")
    N = f.grid.N
    if factor < 2 or N % (2 * factor) != 0:
        raise ValueError(f"N={N} is not divisible for sub-box factor {factor}")
    n_sub = N // factor
    lo = N // 2 - n_sub // 2
    hi = lo + n_sub
    sub = f.values[lo:hi, lo:hi, lo:hi, :].copy()
    return SpinorField(GridSpec(f.grid.L / factor, n_sub), sub, POSITION)


# ---------------------------------------------------------------------------
# DZL1 field files: one ASCII header line, then little-endian (re, im) float64
# pairs in x-major / component-minor order.
# ---------------------------------------------------------------------------

_MAGIC = "DZL1"


def _write_dzl1(path, L: float, N: int, space: str, values: np.ndarray, components: int) -> None:
    header = f"{_MAGIC} L={L!r} N={N} space={space} components={components}\n"
    flat = np.ascontiguousarray(values, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(flat.tobytes())


def _read_dzl1(path, components: int) -> tuple[GridSpec, str, np.ndarray]:
    with open(path, "rb") as fh:
        raw = fh.readline()
        payload = fh.read()
    try:
        text = raw.decode("ascii").strip()
    except UnicodeDecodeError as exc:
        raise ValueError("corrupt DZL1 header") from exc
    parts = text.split()
    if not parts or parts[0] != _MAGIC:
        raise ValueError(f"not a {_MAGIC} file: header {text!r}")
    fields = dict(p.split("=", 1) for p in parts[1:])
    L = float(fields["L"])
    N = int(fields["N"])
    space = fields["space"]
    ncomp = int(fields["components"])
    if ncomp != components:
        raise ValueError(f"expected {components} components, file has {ncomp}")
    expected = N**3 * ncomp * 16
    if len(payload) != expected:
        raise ValueError(f"payload length {len(payload)} does not match header ({expected} bytes)")
    values = np.frombuffer(payload, dtype="<c16").astype(np.complex128)
    return GridSpec(L, N), space, values


def save_field(f: SpinorField, path) -> None:
    _write_dzl1(path, f.grid.L, f.grid.N, f.space, f.values, components=4)


def load_field(path) -> SpinorField:
    grid, space, flat = _read_dzl1(path, components=4)
    return SpinorField(grid, flat.reshape(grid.N, grid.N, grid.N, 4), space)
