"""Infinite-temperature and sampled out-of-time-order correlators.

The central object is F(t) = (1/N) Tr[sz_i(t) sz_1 sz_i(t) sz_1] with
sz_i(t) = U+(t) sz_i U(t), evaluated exactly over the Sz = 0 sector, and its
estimator: the mean of F_j(t) = <psi_j| sz_i(t) sz_1 sz_i(t) sz_1 |psi_j>
over M random initial states (Haar vectors or Fock basis states).

`exact_otoc` is the reference implementation. It evaluates two algebraically
equal but independently coded forms at every time, the 4-operator trace and
1 - ||[sz_i(t), sz_1]||_F^2 / (2N), and refuses to return if they disagree.
`pair_otoc_values` and `multi_distance_otoc_values` are the fast single-route
variants used inside ensemble loops; tests pin them to `exact_otoc`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import EigenSystem, SectorBasis

__all__ = [
    "OtocSeries",
    "InitialState",
    "EonDistribution",
    "exact_otoc",
    "sampled_otoc",
    "haar_state",
    "fock_state",
    "complete_fock_basis",
    "eon_distribution",
    "effective_dimension",
    "pair_otoc_values",
    "multi_distance_otoc_values",
    "default_decay_times",
    "default_lightcone_times",
]


def default_decay_times(n: int = 60) -> np.ndarray:
    """Log-spaced grid 0.1 .. 1000 (units 1/J_par) used for decay studies."""
    return np.geomspace(0.1, 1000.0, n)


def default_lightcone_times(n: int = 200, t_max: float = 10.0) -> np.ndarray:
    """Linear grid 0 .. t_max used for space-time (lightcone) scans."""
    return np.linspace(0.0, t_max, n)


@dataclass
class OtocSeries:
    """OTOC values on a time grid.

    values[k] is the mean at times[k] (over states and/or realizations,
    depending on producer); per_sample, when present, holds one row per
    initial state or realization. meta records what was averaged: estimator
    tag ("exact", "haar", "fock"), operator pair, seeds, sample count M, and
    numerical-health figures from the evaluation routes.
    """

    times: np.ndarray
    values: np.ndarray
    per_sample: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have identical shapes")
        if self.per_sample is not None:
            self.per_sample = np.asarray(self.per_sample)
            if self.per_sample.shape[-1] != self.times.shape[0]:
                raise ValueError("per_sample rows must match the time grid")
        at_zero = np.abs(self.values[self.times == 0.0] - 1.0)
        if at_zero.size and at_zero.max() > 1e-10:
            raise ValueError("OTOC must equal 1 at t = 0")

    @property
    def re(self) -> np.ndarray:
        return np.real(self.values)


@dataclass
class InitialState:
    """Normalized sector state vector, tagged by how it was drawn."""

    amplitudes: np.ndarray
    kind: str
    seed: int | None = None

    def __post_init__(self) -> None:
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"initial state norm {norm} deviates from 1")
        if self.kind == "fock":
            nonzero = np.abs(self.amplitudes) > 1e-15
            if nonzero.sum() != 1 or abs(np.abs(self.amplitudes[nonzero][0]) - 1.0) > 1e-12:
                raise ValueError("fock state must have a single unit-modulus amplitude")


@dataclass
class EonDistribution:
    """Eigenstate occupation weights |c_beta|^2 of one initial state."""

    weights: np.ndarray
    energies: np.ndarray

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=float)
        self.energies = np.asarray(self.energies, dtype=float)
        if self.weights.shape != self.energies.shape:
            raise ValueError("weights and energies must align")
        if np.any(self.weights < -1e-12):
            raise ValueError("weights must be nonnegative")
        if abs(self.weights.sum() - 1.0) > 1e-10:
            raise ValueError("weights must sum to 1")


def _eigenbasis_diagonal(eig: EigenSystem, diag: np.ndarray) -> np.ndarray:
    """Rotate a computational-basis diagonal operator into the eigenbasis."""
    V = eig.eigenvectors
    return V.T @ (diag[:, None] * V)


def _cr_matmul(real_mat: np.ndarray, z: np.ndarray) -> np.ndarray:
    """real_mat @ z for complex z via two real products (BLAS stays in dgemm)."""
    return real_mat @ z.real + 1j * (real_mat @ z.imag)


def _rc_matmul(z: np.ndarray, real_mat: np.ndarray) -> np.ndarray:
    """z @ real_mat for complex z, split the same way."""
    return z.real @ real_mat + 1j * (z.imag @ real_mat)


def exact_otoc(
    eig: EigenSystem,
    op_i: np.ndarray,
    op_1: np.ndarray,
    times: np.ndarray,
    cross_check_tol: float = 1e-9,
    meta: dict | None = None,
) -> OtocSeries:
    """Exact infinite-temperature OTOC via two independent routes.

    Route 1 evaluates Tr[sz_i(t) sz_1 sz_i(t) sz_1] / N in the eigenbasis.
    Route 2 forms the Heisenberg operator in the computational basis, takes
    the explicit commutator with sz_1 and returns 1 - ||K||_F^2 / (2N).
    Their maximum discrepancy over the grid is recorded in
    meta["cross_check_max"]; exceeding `cross_check_tol` raises.

    Parameters
    ----------
    op_i, op_1 : +-1 diagonals from `sigma_z_operator`.
    times : evaluation grid in units of 1/J_par.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    V = eig.eigenvectors
    E = eig.eigenvalues
    n = eig.dim
    if op_i.shape != (n,) or op_1.shape != (n,):
        raise ValueError("operator diagonals must match the eigensystem dimension")

    A = _eigenbasis_diagonal(eig, np.asarray(op_i, dtype=float))
    B = _eigenbasis_diagonal(eig, np.asarray(op_1, dtype=float))
    d1 = np.asarray(op_1, dtype=float)

    values = np.empty(times.shape, dtype=complex)
    discrepancy = 0.0
    for k, t in enumerate(times):
        u = np.exp(1j * E * t)
        At = (u[:, None] * A) * u.conj()[None, :]

        # Route 1: 4-operator trace, Tr[P^2] with P = A(t) B.
        P = _rc_matmul(At, B)
        f_trace = np.sum(P * P.T) / n

        # Route 2: commutator Frobenius norm in the computational basis.
        Xt = _rc_matmul(_cr_matmul(V, At), V.T)  # V @ At @ V.T
        K = Xt * d1[None, :] - d1[:, None] * Xt
        c0 = np.vdot(K, K).real
        f_comm = 1.0 - c0 / (2.0 * n)

        discrepancy = max(discrepancy, abs(f_trace - f_comm))
        values[k] = f_trace

    if discrepancy > cross_check_tol:
        raise RuntimeError(
            f"exact OTOC routes disagree by {discrepancy:.3e} "
            f"(tolerance {cross_check_tol:.1e})"
        )
    if np.max(np.abs(values.imag)) > 1e-10:
        raise RuntimeError("exact OTOC acquired an imaginary part above 1e-10")

    out_meta = {"estimator": "exact", "cross_check_max": discrepancy}
    if meta:
        out_meta.update(meta)
    return OtocSeries(times=times, values=values, meta=out_meta)


def pair_otoc_values(
    eig: EigenSystem,
    op_i: np.ndarray,
    op_1: np.ndarray,
    times: np.ndarray,
) -> tuple[np.ndarray, float]:
    """Fast single-route exact OTOC for one operator pair.

    Trace route only (two real matrix products per time). Returns the real
    series and a numerical-health figure: ||A(t) B||_F^2 / N equals 1 exactly
    for unitary evolution, so its worst deviation bounds the rounding error.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    E = eig.eigenvalues
    n = eig.dim
    A = _eigenbasis_diagonal(eig, np.asarray(op_i, dtype=float))
    B = _eigenbasis_diagonal(eig, np.asarray(op_1, dtype=float))

    values = np.empty(times.shape, dtype=float)
    defect = 0.0
    for k, t in enumerate(times):
        u = np.exp(1j * E * t)
        At = (u[:, None] * A) * u.conj()[None, :]
        P_re = At.real @ B
        P_im = At.imag @ B
        values[k] = (np.sum(P_re * P_re.T) - np.sum(P_im * P_im.T)) / n
        defect = max(defect, abs((np.sum(P_re * P_re) + np.sum(P_im * P_im)) / n - 1.0))
    return values, defect


def multi_distance_otoc_values(
    eig: EigenSystem,
    probe_ops: np.ndarray,
    op_1: np.ndarray,
    times: np.ndarray,
) -> tuple[np.ndarray, float]:
    """Exact OTOC of sz_1 against many probe diagonals on a shared time grid.

    By trace cyclicity F_i(t) = (1/N) sum_ab (d_i)_a (d_i)_b |W_ab(t)|^2 with
    W(t) = U(t) sz_1 U+(t), so one O(N^3) evaluation of W per time serves
    every probe operator at O(N^2) extra cost each.

    Parameters
    ----------
    probe_ops : array (n_probes, N) of +-1 diagonals.

    Returns
    -------
    values : real array (n_probes, n_times); health defect as in
    `pair_otoc_values` (here ||W||_F^2 / N - 1).
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    V = eig.eigenvectors
    E = eig.eigenvalues
    n = eig.dim
    D = np.asarray(probe_ops, dtype=float)
    if D.ndim != 2 or D.shape[1] != n:
        raise ValueError("probe_ops must be (n_probes, N)")
    A1 = _eigenbasis_diagonal(eig, np.asarray(op_1, dtype=float))

    values = np.empty((D.shape[0], times.shape[0]), dtype=float)
    defect = 0.0
    for k, t in enumerate(times):
        v = np.exp(-1j * E * t)
        At = (v[:, None] * A1) * v.conj()[None, :]
        half_re = V @ At.real
        half_im = V @ At.imag
        W_re = half_re @ V.T
        W_im = half_im @ V.T
        Q = W_re * W_re + W_im * W_im
        defect = max(defect, abs(Q.sum() / n - 1.0))
        values[:, k] = np.sum((D @ Q) * D, axis=1) / n
    return values, defect


def sampled_otoc(
    eig: EigenSystem,
    op_i: np.ndarray,
    op_1: np.ndarray,
    states: list[InitialState],
    times: np.ndarray,
    meta: dict | None = None,
) -> OtocSeries:
    """OTOC estimator from M initial states, never forming Heisenberg matrices.

    Each F_j(t) = <psi_j| sz_i(t) sz_1 sz_i(t) sz_1 |psi_j> is evaluated by
    alternating diagonal multiplications with eigenbasis evolutions on the
    state vectors (states are batched into one matrix, so every step is a
    BLAS-3 product). values holds the mean over states, per_sample the
    individual complex F_j series.
    """
    if len(states) == 0:
        raise ValueError("need at least one initial state")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    V = eig.eigenvectors
    E = eig.eigenvalues
    n = eig.dim
    d_i = np.asarray(op_i, dtype=float)[:, None]
    d_1 = np.asarray(op_1, dtype=float)[:, None]

    psi = np.stack([s.amplitudes for s in states], axis=1)  # (N, M)
    per_sample = np.empty((len(states), times.shape[0]), dtype=complex)

    for k, t in enumerate(times):
        w = np.exp(-1j * E * t)[:, None]

        def heisenberg_apply(x: np.ndarray) -> np.ndarray:
            # U+(t) sz_i U(t) x
            c = _cr_matmul(V.T, x) * w
            y = _cr_matmul(V, c) * d_i
            c = _cr_matmul(V.T, y) * w.conj()
            return _cr_matmul(V, c)

        x = heisenberg_apply(d_1 * psi)
        x = heisenberg_apply(d_1 * x)
        per_sample[:, k] = np.sum(psi.conj() * x, axis=0)

    kinds = {s.kind for s in states}
    out_meta = {
        "estimator": kinds.pop() if len(kinds) == 1 else "mixed",
        "M": len(states),
        "seeds": [s.seed for s in states],
    }
    if meta:
        out_meta.update(meta)
    return OtocSeries(
        times=times,
        values=per_sample.mean(axis=0),
        per_sample=per_sample,
        meta=out_meta,
    )


def haar_state(basis: SectorBasis, seed: int) -> InitialState:
    """Haar-random sector state: normalized i.i.d. complex Gaussian amplitudes."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    z = rng.standard_normal(basis.dim) + 1j * rng.standard_normal(basis.dim)
    return InitialState(amplitudes=z / np.linalg.norm(z), kind="haar", seed=seed)


def fock_state(basis: SectorBasis, seed: int) -> InitialState:
    """Uniformly random computational basis state of the sector."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    index = int(rng.integers(basis.dim))
    amplitudes = np.zeros(basis.dim, dtype=complex)
    amplitudes[index] = 1.0
    return InitialState(amplitudes=amplitudes, kind="fock", seed=seed)


def complete_fock_basis(basis: SectorBasis) -> list[InitialState]:
    """All N one-hot sector states, in basis order."""
    eye = np.eye(basis.dim, dtype=complex)
    return [InitialState(amplitudes=eye[:, j], kind="fock", seed=None) for j in range(basis.dim)]


def eon_distribution(eig: EigenSystem, state: InitialState) -> EonDistribution:
    """Overlap weights |<eigenstate_beta | psi>|^2 against the full spectrum."""
    c = _cr_matmul(eig.eigenvectors.T, state.amplitudes)
    return EonDistribution(weights=np.abs(c) ** 2, energies=eig.eigenvalues.copy())


def effective_dimension(eon: EonDistribution) -> float:
    """Inverse participation ratio (sum of squared weights)^-1; 1 for an eigenstate, N for uniform."""
    return float(1.0 / np.sum(eon.weights**2))
