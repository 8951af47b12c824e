"""Zero-mode detection and threshold classification.

A zero mode of alpha.D + Q is a fixed point of T = -A (Q .), so the search
runs a matrix-free restarted Arnoldi iteration on T and looks for eigenvalue
one.  Detected states are classified by a fitted pointwise decay exponent and
by the trend of weighted-H^1 partial quantities across two box sizes.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

import numpy as np

from .clifford import ALPHA
from .field import (
    POSITION,
    GridSpec,
    SpinorField,
    l2_norm,
    restrict_to_subbox,
    save_field,
    shell_profile,
    sobolev_norm,
)
from .freeop import apply_a_spectral, apply_h0
from .potential import PotentialField, apply_potential

__all__ = [
    "EigenReport",
    "DecayFit",
    "ThresholdClassification",
    "residual",
    "birman_schwinger_spectrum",
    "fixed_point_subspace",
    "subspace_overlap",
    "find_zero_modes",
    "coupling_thresholds",
    "decay_fit",
    "default_shell_edges",
    "mu_trend",
    "classify_threshold_state",
    "weighted_derivative_identity_check",
    "eigenreport_to_json",
    "decay_table_to_csv",
]

ARNOLDI_TOL = 1e-8
ARNOLDI_MAX_ITER = 500
ZERO_MODE_TOL = 0.1
SIGMA_MARGIN = 0.1  # zero_mode needs sigma >= 3/2 + margin
MU_GROWTH_THRESHOLD = 0.10  # finite-trend: partial quantity grows <= 10% from L/2 to L
RESIDUAL_GATE = 0.75  # classification gate on residual(f, Q)
REAL_EIGENVALUE_TOL = 0.05  # |Im| / |lambda| below this counts as real


def residual(f: SpinorField, Q: PotentialField) -> float:
    """|| (alpha.D) f + Q f ||_2 / max(||f||_2, ||(alpha.D) f||_2)."""
    norm_f = l2_norm(f)
    if norm_f == 0.0:
        raise ValueError("residual of the zero field is undefined")
    h0f = apply_h0(f)
    qf = apply_potential(Q, f)
    return l2_norm(h0f + qf) / max(norm_f, l2_norm(h0f))


def _birman_schwinger_matvec(Q: PotentialField):
    grid = Q.grid
    shape = (grid.N, grid.N, grid.N, 4)

    def matvec(v: np.ndarray) -> np.ndarray:
        f = SpinorField(grid, v.reshape(shape), POSITION)
        qf = apply_potential(Q, f)
        out = apply_a_spectral(qf, warn_threshold=np.inf)
        return -out.values.ravel()

    return matvec


def _arnoldi_factorization(matvec, start, m, tol):
    """Build V (n x k) orthonormal and H ((k+1) x k) Hessenberg; MGS with one refinement."""
    n = start.shape[0]
    V = np.zeros((n, m + 1), dtype=np.complex128)
    H = np.zeros((m + 1, m), dtype=np.complex128)
    V[:, 0] = start / np.linalg.norm(start)
    k = 0
    for j in range(m):
        w = matvec(V[:, j])
        for _ in range(2):  # modified Gram-Schmidt, twice for orthogonality
            for i in range(j + 1):
                c = np.vdot(V[:, i], w)
                H[i, j] += c
                w -= c * V[:, i]
        h = np.linalg.norm(w)
        H[j + 1, j] = h
        k = j + 1
        if h <= tol * max(1.0, np.abs(H[: j + 1, : j + 1]).max()):
            break  # invariant subspace found
        V[:, j + 1] = w / h
    return V[:, :k], H[: k + 1, :k], k


@dataclass
class EigenReport:
    """Top eigenpairs of the fixed-point operator, sorted by |lambda| descending.

    ``residuals`` holds ||T f - lambda f||_2 / ||f||_2 per reported pair
    (the convergence tests inside the solver use the |lambda|-relative form,
    which is what makes the spectrum exactly covariant under Q -> c Q).
    """

    eigenvalues: list[complex]
    eigenfields: list[SpinorField]
    residuals: list[float]
    iterations: int
    converged: bool


def _arnoldi_top_pairs(matvec, n, k, start, tol, budget):
    """One restarted Arnoldi run; returns (pairs, matvecs, converged).

    Each pair is (lambda, unit eigenvector estimate).
    """
    m = min(max(3 * k + 12, 30), n)
    total = 0
    while True:
        V, H, kk = _arnoldi_factorization(matvec, start, m, tol=1e-14)
        total += kk
        ritz_vals, ritz_vecs = np.linalg.eig(H[:kk, :kk])
        order = np.argsort(-np.abs(ritz_vals))
        ritz_vals, ritz_vecs = ritz_vals[order], ritz_vecs[:, order]
        top = min(k, kk)
        exhausted = kk < m  # early breakdown: Krylov space is invariant
        beta = 0.0 if exhausted else float(np.abs(H[kk, kk - 1]))
        # Arnoldi residual estimate per Ritz pair: |beta * last component|.
        ests = beta * np.abs(ritz_vecs[-1, :top])
        ok = bool(np.all(ests <= tol * np.maximum(np.abs(ritz_vals[:top]), 1e-300)))
        if ok or exhausted or total >= budget:
            fields = V @ ritz_vecs[:, :top]
            pairs = []
            for i in range(fields.shape[1]):
                nv = np.linalg.norm(fields[:, i])
                if nv > 0:
                    pairs.append((complex(ritz_vals[i]), fields[:, i] / nv))
            return pairs, total, ok or exhausted
        start = (V @ ritz_vecs[:, :top]).sum(axis=1)


def birman_schwinger_spectrum(
    Q: PotentialField,
    k: int = 6,
    seed: int = 20240301,
    tol: float = ARNOLDI_TOL,
    max_iter: int = ARNOLDI_MAX_ITER,
    deflation_passes: int = 1,
) -> EigenReport:
    """Top-k eigenpairs of T f = -A (Q f) by restarted matrix-free Arnoldi.

    Deterministic for a fixed seed.  Convergence is judged on the relative
    Arnoldi residual ||T v - lambda v|| / |lambda|, which makes the reported
    spectrum exactly covariant under scaling Q -> c Q.

    A single Krylov sequence reaches one eigenvector per (near-)degenerate
    eigenvalue, and the fixed-point eigenvalue here is typically twofold
    degenerate (upper/lower block embeddings), so after the first run the
    operator is deflated against the found vectors and searched again; the
    extra pairs are kept only if they meet ``tol`` against the undeflated
    operator.
    """
    if k < 1:
        raise ValueError("need k >= 1 eigenpairs")
    grid = Q.grid
    base_matvec = _birman_schwinger_matvec(Q)
    n = grid.npoints * 4
    rng = np.random.default_rng(seed)

    all_pairs: list[tuple[complex, np.ndarray]] = []
    total = 0
    converged = True
    basis: list[np.ndarray] = []  # orthonormalized found eigenvectors

    def deflated_matvec(v: np.ndarray) -> np.ndarray:
        for b in basis:
            v = v - np.vdot(b, v) * b
        w = base_matvec(v)
        for b in basis:
            w = w - np.vdot(b, w) * b
        return w

    for pass_i in range(deflation_passes + 1):
        start = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        if pass_i == 0:
            mv = base_matvec
        else:
            if not all_pairs or max(abs(lam) for lam, _ in all_pairs) == 0.0:
                break  # nothing left worth deflating against
            mv = deflated_matvec
        pairs, used, ok = _arnoldi_top_pairs(mv, n, k, start, tol, max_iter - total)
        total += used
        if pass_i == 0:
            converged = ok
            all_pairs.extend(pairs)
        else:
            # keep only genuine eigenpairs of the undeflated operator
            for lam, vec in pairs:
                resid = np.linalg.norm(base_matvec(vec) - lam * vec) / max(abs(lam), 1e-300)
                if resid <= 10 * tol:
                    all_pairs.append((lam, vec))
        # refresh the deflation basis (orthonormalized)
        basis = []
        for _lam, vec in all_pairs:
            w = vec.copy()
            for b in basis:
                w -= np.vdot(b, w) * b
            nw = np.linalg.norm(w)
            if nw > 1e-10:
                basis.append(w / nw)
        if total >= max_iter:
            break

    all_pairs.sort(key=lambda p: -abs(p[0]))
    eigenvalues, eigenfields, resids = [], [], []
    for lam, vec in all_pairs[:k]:
        tv = base_matvec(vec)
        resids.append(float(np.linalg.norm(tv - lam * vec)))  # vec is unit
        eigenvalues.append(lam)
        fld = SpinorField(grid, vec.reshape(grid.N, grid.N, grid.N, 4), POSITION)
        eigenfields.append((1.0 / l2_norm(fld)) * fld)
    return EigenReport(
        eigenvalues=eigenvalues,
        eigenfields=eigenfields,
        residuals=resids,
        iterations=total,
        converged=converged,
    )


def fixed_point_subspace(
    Q: PotentialField,
    tol: float = ZERO_MODE_TOL,
    block: int = 8,
    iterations: int = 60,
    seed: int = 20240301,
) -> tuple[list[complex], list[SpinorField]]:
    """Ritz pairs with |lambda - 1| <= tol from block subspace iteration on T.

    Near the fixed point the discrete operator often carries a (nearly
    defective) multifold eigenvalue, e.g. the two block embeddings of a Weyl
    zero mode; individual eigenvectors are then ill-conditioned while the
    invariant subspace is stable.  Block orthogonal iteration converges to
    the dominant invariant subspace; the returned fields span its near-one
    Ritz sector and should be compared against references by subspace
    projection, not one-by-one.
    """
    grid = Q.grid
    matvec = _birman_schwinger_matvec(Q)
    n = grid.npoints * 4
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, block)) + 1j * rng.standard_normal((n, block))
    Z, _ = np.linalg.qr(Z)
    for _ in range(iterations):
        W = np.column_stack([matvec(Z[:, i]) for i in range(block)])
        Z, _ = np.linalg.qr(W)
    TZ = np.column_stack([matvec(Z[:, i]) for i in range(block)])
    B = Z.conj().T @ TZ
    vals, vecs = np.linalg.eig(B)
    order = np.argsort(-np.abs(vals))
    vals, vecs = vals[order], vecs[:, order]
    keep = [i for i in range(len(vals)) if abs(vals[i] - 1.0) <= tol]
    fields = []
    for i in keep:
        v = Z @ vecs[:, i]
        v /= np.linalg.norm(v)
        fld = SpinorField(grid, v.reshape(grid.N, grid.N, grid.N, 4), POSITION)
        fields.append((1.0 / l2_norm(fld)) * fld)
    return [complex(vals[i]) for i in keep], fields


def subspace_overlap(fields, reference: SpinorField) -> float:
    """|| P_span reference ||_2 / || reference ||_2 for a list of spanning fields."""
    basis = []
    for fld in fields:
        v = fld.values.ravel().copy()
        for b in basis:
            v -= np.vdot(b, v) * b
        nv = np.linalg.norm(v)
        if nv > 1e-12:
            basis.append(v / nv)
    if not basis:
        return 0.0
    r = reference.values.ravel()
    r = r / np.linalg.norm(r)
    return float(np.sqrt(sum(abs(np.vdot(b, r)) ** 2 for b in basis)))


def find_zero_modes(
    Q: PotentialField,
    tol: float = ZERO_MODE_TOL,
    k: int = 6,
    seed: int = 20240301,
    deflation_passes: int = 1,
) -> list[SpinorField]:
    """Eigenfields with |lambda - 1| <= tol, re-validated by the direct residual."""
    report = birman_schwinger_spectrum(Q, k=k, seed=seed, deflation_passes=deflation_passes)
    modes = []
    for lam, fld in zip(report.eigenvalues, report.eigenfields):
        if abs(lam - 1.0) <= tol and residual(fld, Q) <= 10.0 * tol:
            modes.append(fld)
    return modes


def coupling_thresholds(Q: PotentialField, k: int = 6, seed: int = 20240301) -> list[float]:
    """Couplings tau with tau Q supporting a fixed point: tau = 1 / lambda.

    Only (numerically) real, nonzero eigenvalues count; sorted by |tau|.
    """
    report = birman_schwinger_spectrum(Q, k=k, seed=seed)
    if not report.eigenvalues:
        return []
    floor = 1e-8 * max(abs(lam) for lam in report.eigenvalues)
    taus = []
    for lam in report.eigenvalues:
        if abs(lam) <= max(floor, 1e-300):
            continue
        if abs(lam.imag) > REAL_EIGENVALUE_TOL * abs(lam):
            continue
        taus.append(1.0 / lam.real)
    return sorted(taus, key=abs)


@dataclass(frozen=True)
class DecayFit:
    """Least-squares decay exponent sigma in |f| ~ <x>^{-sigma} from shell masses."""

    sigma: float
    stderr: float
    slope: float
    edges: tuple[float, ...]
    masses: tuple[float, ...]


def default_shell_edges(grid: GridSpec, ratio: float = np.sqrt(2.0)) -> list[float]:
    """Geometric shell edges from ~2h out to the box half-width."""
    start = max(2.0 * grid.h, 1.0)
    edges = [grid.L]
    while edges[-1] / ratio > start:
        edges.append(edges[-1] / ratio)
    return sorted(edges)


def decay_fit(f: SpinorField, shells=None) -> DecayFit:
    """Fit log shell mass against log radius; mass(R..2R) ~ R^{3 - 2 sigma}."""
    edges = list(shells) if shells is not None else default_shell_edges(f.grid)
    if len(edges) < 5:
        raise ValueError(f"need at least 4 shells (5 edges), got {len(edges) - 1}")
    prof = shell_profile(f, edges)
    if prof.empty_shells:
        raise ValueError(f"empty shells at indices {prof.empty_shells}")
    masses = np.array(prof.masses)
    if np.any(masses <= 0):
        dead = [i for i, m in enumerate(masses) if m <= 0]
        raise ValueError(f"zero-mass shells at indices {dead}; decay fit is undefined")
    logs_r = np.log(np.array(prof.radii))
    logs_m = np.log(masses)
    coeffs, cov = np.polyfit(logs_r, logs_m, 1, cov=True)
    slope = float(coeffs[0])
    slope_err = float(np.sqrt(cov[0, 0]))
    return DecayFit(
        sigma=(3.0 - slope) / 2.0,
        stderr=slope_err / 2.0,
        slope=slope,
        edges=tuple(edges),
        masses=tuple(prof.masses),
    )


@dataclass(frozen=True)
class ThresholdClassification:
    kind: str  # zero_mode | resonance_candidate | inconclusive
    sigma: float
    sigma_stderr: float
    mu_check: dict
    residual: float


def _h1_partial_quantity(f: SpinorField, mu: float) -> float:
    """|| <xi> F(<x>^mu f) ||_2 on the field's own box."""
    w = f.grid.bracket ** mu
    weighted = SpinorField(f.grid, w[..., None] * f.values, POSITION)
    return sobolev_norm(weighted, 1.0).value


def mu_trend(f: SpinorField, mu: float, threshold: float = MU_GROWTH_THRESHOLD) -> str:
    """Compare the weighted-H^1 partial quantity on the L/2 sub-box and the full box."""
    sub = restrict_to_subbox(f, 2)
    p_small = _h1_partial_quantity(sub, mu)
    p_full = _h1_partial_quantity(f, mu)
    if p_small == 0:
        return "finite-trend" if p_full == 0 else "diverging"
    return "finite-trend" if p_full <= (1.0 + threshold) * p_small else "diverging"


def classify_threshold_state(
    f: SpinorField,
    Q: PotentialField,
    gate: float = RESIDUAL_GATE,
    mus=(0.4, 0.45),
    shells=None,
) -> ThresholdClassification:
    """Zero-mode / resonance-candidate call from decay plus weighted-norm trends.

    sigma > 3/2 within margin is the L^2-membership proxy (zero mode); decay
    consistent with the borderline space but not L^2 flags a resonance
    candidate, which the no-resonance property suite treats as a failure to
    investigate.
    """
    res = residual(f, Q)
    if res > gate:
        raise ValueError(
            f"residual {res:.3g} exceeds the classification gate {gate}; "
            "the field is not close to a kernel state of this potential"
        )
    fit = decay_fit(f, shells)
    if fit.sigma >= 1.5 + SIGMA_MARGIN:
        kind = "zero_mode"
    elif fit.sigma > 1.5 - SIGMA_MARGIN:
        kind = "inconclusive"
    else:
        kind = "resonance_candidate"
    checks = {float(mu): mu_trend(f, float(mu)) for mu in mus}
    return ThresholdClassification(
        kind=kind,
        sigma=fit.sigma,
        sigma_stderr=fit.stderr,
        mu_check=checks,
        residual=res,
    )


def weighted_derivative_identity_check(
    f: SpinorField, mu: float, Q: PotentialField | None = None
) -> float:
    """Relative defect of the weighted-derivative identity on the grid.

    Compares alpha.D applied to <x>^mu f against
    -i mu (alpha.x) <x>^{mu-2} f + <x>^mu (alpha.D f); when ``Q`` is given
    the second term uses -<x>^mu Q f instead (the zero-mode substitution).
    """
    grid = f.grid
    w = grid.bracket ** mu
    weighted = SpinorField(grid, w[..., None] * f.values, POSITION)
    lhs = apply_h0(weighted)

    mesh = grid.position_mesh
    wm2 = grid.bracket ** (mu - 2.0)
    first = np.zeros_like(f.values)
    for j in range(3):
        first += mesh[..., j, None] * (f.values @ ALPHA[j].T)
    first *= -1j * mu * wm2[..., None]
    if Q is None:
        second = w[..., None] * apply_h0(f).values
    else:
        second = -w[..., None] * apply_potential(Q, f).values
    rhs = SpinorField(grid, first + second, POSITION)
    denom = max(l2_norm(lhs), l2_norm(rhs))
    if denom == 0:
        return 0.0
    return l2_norm(lhs - rhs) / denom


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------


def eigenreport_to_json(
    report: EigenReport,
    path,
    field_dir=None,
    reference: SpinorField | None = None,
) -> dict:
    """Write the eigenreport as JSON; eigenfields go to DZL1 files if a dir is given."""
    payload = {
        "eigenvalues": [[lam.real, lam.imag] for lam in report.eigenvalues],
        "residuals": report.residuals,
        "iterations": report.iterations,
        "converged": report.converged,
        "eigenfield_files": [],
        "overlaps": [],
    }
    if reference is not None:
        ref_norm = l2_norm(reference)
        for fld in report.eigenfields:
            ip = np.sum(fld.values * np.conj(reference.values)) * fld.grid.cell_volume
            payload["overlaps"].append(float(abs(ip) / (l2_norm(fld) * ref_norm)))
    if field_dir is not None:
        os.makedirs(field_dir, exist_ok=True)
        for i, fld in enumerate(report.eigenfields):
            fp = os.path.join(field_dir, f"eigenfield_{i}.dzl1")
            save_field(fld, fp)
            payload["eigenfield_files"].append(fp)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    return payload


def decay_table_to_csv(fit: DecayFit, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["radius_inner", "radius_outer", "mass", "fitted_slope", "sigma"])
        for a, b, m in zip(fit.edges[:-1], fit.edges[1:], fit.masses):
            writer.writerow([a, b, m, fit.slope, fit.sigma])
