"""Eigenvalues, norming constants, product formulas, and trace identities.

Spectra are located by exact oscillation-count bracketing, tightened by
bisection, and polished by Newton steps on the characteristic function with
its variational lam-derivative.  Quantities are computed at two grid levels
and combined by fourth-order extrapolation, which removes the leading
integrator error.

Three boundary regimes are supported, encoded by the pair (a, b) with inf
meaning a Dirichlet end: both ends Dirichlet (eigenvalues labelled from 1),
Dirichlet-Robin (labelled from 0), and Robin-Robin (labelled from 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    BracketError,
    DegenerateEigenfunctionError,
    PoleCollisionError,
)
from .grid import SequenceData, _simpson_weights
from .ode import (
    ImpedanceProblem,
    SchrodingerProblem,
    _count_below,
    _endpoint_w,
    _sweep,
    is_dirichlet,
)
from .transform import ConditionU, Impedance, build_rho, forward_transform

__all__ = [
    "SolverOptions",
    "SpectralData",
    "AdmissibilityReport",
    "EquivalenceReport",
    "regime_of",
    "unperturbed_eigenvalues",
    "unperturbed_norming",
    "boundary_shift",
    "compute_eigenvalues",
    "solve_spectrum",
    "norming_constants",
    "normalizing_constants",
    "extract_remainders",
    "hadamard_wronskian",
    "identity_b",
    "identity_ab",
    "characterize",
    "equivalence_report",
]


@dataclass(frozen=True)
class SolverOptions:
    """Knobs for the eigenvalue pipeline.

    The solve runs on the problem's own grid; with ``richardson`` a second
    pass on the doubled grid feeds a fourth-order extrapolation of
    eigenvalues, norming and normalizing constants.
    """

    richardson: bool = True
    rtol: float = 1e-12
    sign_rounds: int = 10
    max_newton: int = 16
    max_repair: int = 48


def regime_of(a: float, b: float) -> str:
    if is_dirichlet(a) and is_dirichlet(b):
        return "dirichlet"
    if is_dirichlet(a):
        return "mixed"
    if is_dirichlet(b):
        raise ValueError("the Robin-Dirichlet orientation is not supported; "
                         "reflect the problem instead")
    return "generic"


def unperturbed_eigenvalues(regime: str, N: int) -> np.ndarray:
    """Reference eigenvalues for the zero problem, by slot 0..N-1."""
    k = np.arange(N, dtype=float)
    if regime == "dirichlet":
        return (math.pi * (k + 1.0)) ** 2
    if regime == "mixed":
        return (math.pi * (k + 0.5)) ** 2
    return (math.pi * k) ** 2


def unperturbed_norming(regime: str, N: int) -> np.ndarray:
    """Norming constants of the zero problem, by slot."""
    k = np.arange(N, dtype=float)
    if regime == "mixed":
        return -np.log(math.pi * (k + 0.5))
    return np.zeros(N)


def boundary_shift(regime: str, a: float, b: float) -> float:
    """First-order eigenvalue shift contributed by the boundary parameters."""
    if regime == "dirichlet":
        return 0.0
    if regime == "mixed":
        return 2.0 * float(b)
    return 2.0 * (float(a) + float(b))


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Truncated spectral data of one problem under one boundary pair."""

    kind: str
    a: float
    b: float
    c0: float
    eigenvalues: np.ndarray
    norming: np.ndarray
    remainders: SequenceData
    norming_deviation: SequenceData
    N: int

    @property
    def regime(self) -> str:
        return regime_of(self.a, self.b)


def _solve_levels(prob, a, b, N, opts):
    """Locate N eigenvalues at the problem grid and (optionally) the doubled one."""
    regime = regime_of(a, b)
    slots = np.arange(N)
    targets = unperturbed_eigenvalues(regime, N + 1)
    shift = prob.coefficient_mean() + boundary_shift(regime, a, b)
    targets = targets + shift

    mids = np.empty(N + 1)
    mids[0] = targets[0] - 0.5 * (targets[1] - targets[0])
    mids[1:] = 0.5 * (targets[:-1] + targets[1:])

    counts = _count_below(prob, mids, a, b)
    lo, hi = mids[:-1].copy(), mids[1:].copy()
    clo, chi = counts[:-1].copy(), counts[1:].copy()

    gaps = np.maximum(targets[1:] - targets[:-1], 1.0)
    for _ in range(opts.max_repair):
        bad_lo = clo > slots
        bad_hi = chi < slots + 1
        if not bad_lo.any() and not bad_hi.any():
            break
        if bad_lo.any():
            lo[bad_lo] -= gaps[bad_lo]
            clo[bad_lo] = _count_below(prob, lo[bad_lo], a, b)
        if bad_hi.any():
            hi[bad_hi] += gaps[bad_hi]
            chi[bad_hi] = _count_below(prob, hi[bad_hi], a, b)
    else:
        raise BracketError(
            f"could not isolate {N} eigenvalues; counts lo={clo}, hi={chi}")

    for _ in range(opts.max_repair):
        wide = (chi - clo) > 1
        if not wide.any():
            break
        mid = 0.5 * (lo[wide] + hi[wide])
        cm = _count_below(prob, mid, a, b)
        take_lo = cm <= slots[wide]
        idx = np.flatnonzero(wide)
        lo[idx[take_lo]] = mid[take_lo]
        clo[idx[take_lo]] = cm[take_lo]
        hi[idx[~take_lo]] = mid[~take_lo]
        chi[idx[~take_lo]] = cm[~take_lo]
    else:
        raise BracketError("count bisection failed to separate eigenvalues")

    w_lo, _, _, _ = _endpoint_w(prob, lo, a, b, deriv=False)
    sign_lo = np.sign(w_lo)
    for _ in range(opts.sign_rounds):
        mid = 0.5 * (lo + hi)
        w_mid, _, _, _ = _endpoint_w(prob, mid, a, b, deriv=False)
        same = np.sign(w_mid) == sign_lo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)

    lam = 0.5 * (lo + hi)
    lam = _newton_polish(prob, lam, a, b, opts, max_step=hi - lo)
    return regime, lam


def _newton_polish(prob, lam, a, b, opts, max_step=None):
    """Newton iteration on the characteristic function, batched over roots.

    Callers must seed inside the quadratic basin (the bisection stages do).
    ``max_step`` caps each move, so even a noisy derivative cannot push an
    iterate toward a neighboring root.
    """
    lam = np.array(lam, dtype=float)
    for _ in range(opts.max_newton):
        w, dw, _, _ = _endpoint_w(prob, lam, a, b, deriv=True)
        if np.any(dw == 0.0):
            raise BracketError("stationary characteristic value during polish")
        step = w / dw
        if max_step is not None:
            step = np.clip(step, -max_step, max_step)
        lam = lam - step
        if np.all(np.abs(step) <= opts.rtol * np.maximum(1.0, np.abs(lam))):
            break
    return lam


def _endpoint_quantities(prob, lam, a, b, regime):
    """Norming constants and endpoint diagnostics at given eigenvalues."""
    w, dw, scale, res = _endpoint_w(prob, lam, a, b, deriv=True)
    rho1 = prob._coefficients().rho1
    numerator = np.abs(res["v"]) if regime == "dirichlet" else np.abs(res["y"])
    if np.any(numerator == 0.0):
        raise DegenerateEigenfunctionError(
            "eigenfunction endpoint data vanished; spectrum is corrupted")
    norming = np.log(numerator) + math.log(rho1) + res["logscale"]
    log_abs_dw = np.log(np.abs(dw)) + math.log(rho1) + res["logscale"]
    return norming, log_abs_dw


def _alpha_quantities(prob, lam):
    """Normalizing integrals int y**2 for Dirichlet eigenfunctions."""
    co = prob._coefficients()
    res = _sweep(co, np.asarray(lam, dtype=float), 0.0, 1.0, trace=True,
                 renorm=False)
    Y = res["Y"]
    if prob.kind == "impedance":
        rho = build_rho(prob.q).rho.values[:, None]
        Y = rho * Y
    weights = _simpson_weights(Y.shape[0] - 1)
    return weights @ (Y * Y)


def _pipeline(prob, a, b, N, opts, want_alpha=False):
    regime, lam0 = _solve_levels(prob, a, b, N, opts)
    norm0, logdw0 = _endpoint_quantities(prob, lam0, a, b, regime)
    alpha0 = _alpha_quantities(prob, lam0) if want_alpha else None
    if not opts.richardson:
        return {
            "regime": regime, "lam": lam0, "norming": norm0,
            "log_dw": logdw0, "alpha": alpha0, "levels": (prob,),
            "lam_levels": (lam0,),
        }
    fine = prob.with_resolution(2 * prob.n)
    lam1 = _newton_polish(fine, lam0, a, b, replace(opts, max_newton=6))
    norm1, logdw1 = _endpoint_quantities(fine, lam1, a, b, regime)
    alpha1 = _alpha_quantities(fine, lam1) if want_alpha else None
    lam = (16.0 * lam1 - lam0) / 15.0
    norming = (16.0 * norm1 - norm0) / 15.0
    alpha = (16.0 * alpha1 - alpha0) / 15.0 if want_alpha else None
    return {
        "regime": regime, "lam": lam, "norming": norming,
        "log_dw": (16.0 * logdw1 - logdw0) / 15.0, "alpha": alpha,
        "levels": (prob, fine), "lam_levels": (lam0, lam1),
    }


def compute_eigenvalues(prob, a: float, b: float, N: int,
                        options: SolverOptions | None = None) -> np.ndarray:
    """First N eigenvalues of the problem under the boundary pair (a, b)."""
    opts = options or SolverOptions()
    if N < 1:
        raise ValueError("need at least one eigenvalue")
    return _pipeline(prob, a, b, N, opts)["lam"]


def solve_spectrum(prob, a: float, b: float, N: int,
                   options: SolverOptions | None = None) -> SpectralData:
    """Eigenvalues plus norming constants, packaged with their remainders."""
    opts = options or SolverOptions()
    out = _pipeline(prob, a, b, N, opts)
    data = SpectralData(
        kind=prob.kind, a=float(a), b=float(b), c0=prob.c0,
        eigenvalues=out["lam"], norming=out["norming"],
        remainders=SequenceData(np.zeros(N)),
        norming_deviation=SequenceData(np.zeros(N), alpha=1.0),
        N=N,
    )
    rem, dev = extract_remainders(data)
    return replace(data, remainders=rem, norming_deviation=dev)


def norming_constants(prob, data: SpectralData,
                      options: SolverOptions | None = None) -> np.ndarray:
    """Norming constants at the eigenvalues stored in ``data``.

    Dirichlet pairs use the endpoint slope ratio; the other regimes use the
    endpoint value ratio.  Impedance problems include their endpoint weight,
    which makes the constants agree across the two pictures.
    """
    opts = options or SolverOptions()
    regime = regime_of(data.a, data.b)
    lam = np.asarray(data.eigenvalues, dtype=float)
    n0, _ = _endpoint_quantities(prob, lam, data.a, data.b, regime)
    if not opts.richardson:
        return n0
    # Both levels are read at the supplied eigenvalues, so the leading
    # integrator error has the same coefficient and cancels exactly.
    fine = prob.with_resolution(2 * prob.n)
    n1, _ = _endpoint_quantities(fine, lam, data.a, data.b, regime)
    return (16.0 * n1 - n0) / 15.0


def normalizing_constants(prob, data: SpectralData,
                          options: SolverOptions | None = None) -> np.ndarray:
    """Integrals alpha_n = int y_n**2 with y_n'(0) = 1 (Dirichlet pairs only)."""
    opts = options or SolverOptions()
    if regime_of(data.a, data.b) != "dirichlet":
        raise ValueError("normalizing constants are defined for Dirichlet pairs")
    lam = np.asarray(data.eigenvalues, dtype=float)
    a0 = _alpha_quantities(prob, lam)
    if not opts.richardson:
        return a0
    fine = prob.with_resolution(2 * prob.n)
    a1 = _alpha_quantities(fine, lam)
    return (16.0 * a1 - a0) / 15.0


def extract_remainders(data: SpectralData):
    """Split eigenvalues and norming constants from their reference values.

    Returns (remainders, norming deviations); the remainders subtract the
    reference eigenvalues and the constant shift c0 + boundary terms, the
    deviations subtract the zero-problem norming constants.
    """
    regime = regime_of(data.a, data.b)
    N = data.eigenvalues.size
    shift = data.c0 + boundary_shift(regime, data.a, data.b)
    rem = data.eigenvalues - unperturbed_eigenvalues(regime, N) - shift
    dev = data.norming - unperturbed_norming(regime, N)
    return SequenceData(rem), SequenceData(dev, alpha=1.0)


def _entire_cos_sqrt(lam: float) -> float:
    z = complex(lam) ** 0.5
    return complex(np.cos(z)).real


def _entire_sinc_sqrt(lam: float) -> float:
    if abs(lam) < 1e-8:
        return 1.0 - lam / 6.0 + lam * lam / 120.0
    z = complex(lam) ** 0.5
    return complex(np.sin(z) / z).real


def hadamard_wronskian(data: SpectralData, lam: float, M: int) -> float:
    """Truncated product-formula value of the characteristic function.

    Multiplies the zero-problem characteristic function by M factors
    (lam - lam_k)/(lam - lam0_k).  Converges to the direct value as M grows;
    evaluation too close to either sequence raises.
    """
    if M < 1 or M > data.N:
        raise ValueError(f"ladder length M={M} outside 1..{data.N}")
    regime = regime_of(data.a, data.b)
    ref = unperturbed_eigenvalues(regime, M)
    eigs = data.eigenvalues[:M]
    lam = float(lam)
    tol = 1e-9
    for pole in np.concatenate([ref, eigs]):
        if abs(lam - pole) < tol * max(1.0, abs(lam), abs(pole)):
            raise PoleCollisionError(f"lam={lam} collides with {pole}")
    if regime == "dirichlet":
        front = _entire_sinc_sqrt(lam)
    elif regime == "mixed":
        front = _entire_cos_sqrt(lam)
    else:
        front = -lam * _entire_sinc_sqrt(lam)
    return front * float(np.prod((lam - eigs) / (lam - ref)))


def _identity_terms(prob, data, M, opts, sign: float):
    """Extrapolated ratios exp(sign * norming) / |dw| at the eigenvalues."""
    lam = np.asarray(data.eigenvalues[:M], dtype=float)
    regime = regime_of(data.a, data.b)

    def level(p):
        norming, log_dw = _endpoint_quantities(p, lam, data.a, data.b, regime)
        return np.exp(sign * norming - log_dw)

    t0 = level(prob)
    if not opts.richardson:
        return t0
    t1 = level(prob.with_resolution(2 * prob.n))
    return (16.0 * t1 - t0) / 15.0


def identity_b(prob, data: SpectralData, M: int,
               options: SolverOptions | None = None) -> np.ndarray:
    """Partial sums of the fixed-b trace identity (Dirichlet-Robin pairs).

    Returns S_1..S_M with S_m = sum_{k<m} (2 - exp(norming_k)/|dw(lam_k)|);
    the sums converge to the boundary parameter b.
    """
    opts = options or SolverOptions()
    if regime_of(data.a, data.b) != "mixed":
        raise ValueError("the fixed-b identity needs a Dirichlet-Robin pair")
    if M > data.N:
        raise ValueError("identity ladder exceeds stored data")
    ratios = _identity_terms(prob, data, M, opts, sign=+1.0)
    return np.cumsum(2.0 - ratios)


def identity_ab(prob, data: SpectralData, M: int,
                options: SolverOptions | None = None):
    """Partial-sum pair of the Robin-Robin trace identities.

    Returns (S_b, S_a) arrays; S_b converges to b and S_a to a, both starting
    from -1 and accumulating 2 - exp(+-norming)/|dw| over the first M
    eigenvalues (labelled from 0).
    """
    opts = options or SolverOptions()
    if regime_of(data.a, data.b) != "generic":
        raise ValueError("the trace-identity pair needs a Robin-Robin pair")
    if M > data.N:
        raise ValueError("identity ladder exceeds stored data")
    r_plus = _identity_terms(prob, data, M, opts, sign=+1.0)
    r_minus = _identity_terms(prob, data, M, opts, sign=-1.0)
    return -1.0 + np.cumsum(2.0 - r_plus), -1.0 + np.cumsum(2.0 - r_minus)


@dataclass(frozen=True)
class AdmissibilityReport:
    """Verdicts of the sequence-space membership tests."""

    ordering_ok: bool
    remainder_tail_ok: bool
    norming_tail_ok: bool
    alpha_tail_ok: bool | None
    remainder_growth: float
    norming_growth: float
    alpha_growth: float | None

    @property
    def passed(self) -> bool:
        verdicts = [self.ordering_ok, self.remainder_tail_ok,
                    self.norming_tail_ok]
        if self.alpha_tail_ok is not None:
            verdicts.append(self.alpha_tail_ok)
        return all(verdicts)


def _tail_growth(weighted_sq: np.ndarray, noise_floor: float) -> float:
    """Relative growth of the cumulative sum over the second half.

    A sequence whose full weighted energy sits below the noise floor is
    trivially summable: without the floor, a ladder that is zero up to
    solver noise divides noise by noise and reports spurious growth.
    """
    N = weighted_sq.size
    if N < 2:
        return 0.0
    s_half = float(np.sum(weighted_sq[:N // 2]))
    s_full = float(np.sum(weighted_sq))
    if s_full <= noise_floor:
        return 0.0
    return (s_full - s_half) / max(s_half, 1e-16)


def characterize(data: SpectralData, normalizing: np.ndarray | None = None,
                 growth_tol: float = 0.01,
                 alpha_growth_tol: float = 0.25,
                 noise_floor: float = 1e-4) -> AdmissibilityReport:
    """Check computed or externally supplied data against the admissible set.

    Ordering must be strict; the remainder and weighted norming sequences
    must look summable, judged by the relative growth of their cumulative
    squares over the second half of the ladder.  For Dirichlet pairs the
    normalizing constants, when supplied, are tested through
    2 (pi n)**2 alpha_n - 1 with an extra weight.

    The alpha condition gets a wider tolerance: admissible data carries a
    universal 1/n**2 component there, so its weighted tail behaves like a
    barely convergent series at practical truncations (a few percent of
    growth), while a corrupted sequence registers order-one growth.
    Sequences whose total weighted energy stays below ``noise_floor`` count
    as summable outright, so solver-level noise never trips the verdict.
    """
    ordering_ok = bool(np.all(np.diff(data.eigenvalues) > 0.0))
    rem = data.remainders.entries
    pos = np.arange(1, rem.size + 1, dtype=float)
    g_rem = _tail_growth(rem * rem, noise_floor)
    dev = data.norming_deviation.entries
    wdev = (2.0 * math.pi * pos[:dev.size]) * dev
    g_dev = _tail_growth(wdev * wdev, noise_floor)
    g_alpha = None
    alpha_ok = None
    if normalizing is not None:
        n_lab = np.arange(1, normalizing.size + 1, dtype=float)
        g = 2.0 * (math.pi * n_lab) ** 2 * normalizing - 1.0
        wg = (2.0 * math.pi * n_lab) * g
        g_alpha = _tail_growth(wg * wg, noise_floor)
        alpha_ok = g_alpha <= alpha_growth_tol
    return AdmissibilityReport(
        ordering_ok=ordering_ok,
        remainder_tail_ok=g_rem <= growth_tol,
        norming_tail_ok=g_dev <= growth_tol,
        alpha_tail_ok=alpha_ok,
        remainder_growth=g_rem,
        norming_growth=g_dev,
        alpha_growth=g_alpha,
    )


@dataclass(frozen=True)
class EquivalenceReport:
    """Side-by-side spectra of one impedance problem in both pictures."""

    c0: float
    impedance_eigenvalues: np.ndarray
    schrodinger_eigenvalues: np.ndarray
    impedance_norming: np.ndarray
    schrodinger_norming: np.ndarray

    @property
    def eigenvalue_discrepancy(self) -> float:
        shifted = self.schrodinger_eigenvalues + self.c0
        scale = np.maximum(1.0, np.abs(shifted))
        return float(np.max(np.abs(self.impedance_eigenvalues - shifted) / scale))

    @property
    def norming_discrepancy(self) -> float:
        return float(np.max(np.abs(self.impedance_norming -
                                   self.schrodinger_norming)))


def equivalence_report(q: Impedance, cfg: ConditionU, a: float, b: float,
                       N: int, options: SolverOptions | None = None
                       ) -> EquivalenceReport:
    """Solve one problem in both pictures and tabulate the match.

    The impedance eigenvalues must equal the transformed-potential
    eigenvalues shifted by c0, and the norming constants must agree
    outright (the endpoint weight accounts for the change of dependent
    variable).
    """
    opts = options or SolverOptions()
    imp = ImpedanceProblem(q, cfg)
    sch = SchrodingerProblem(forward_transform(q, cfg))
    di = solve_spectrum(imp, a, b, N, opts)
    ds = solve_spectrum(sch, a, b, N, opts)
    return EquivalenceReport(
        c0=imp.c0,
        impedance_eigenvalues=di.eigenvalues,
        schrodinger_eigenvalues=ds.eigenvalues,
        impedance_norming=di.norming,
        schrodinger_norming=ds.norming,
    )
