"""Transition-matrix calculus and the continuous stability scalar.

Each one-step return map near the network is, at lowest order, a monomial
map; its exponent matrix is the transition matrix of the step.  Products of
these matrices over a repeating word govern whether trajectories following
that word contract onto the network.  A word is fragmentarily
asymptotically stable (attracts a positive-measure set) when every cyclic
rotation of its product has a real dominant eigenvalue above one whose
eigenvector has all components of one sign.  The scalar ``s`` turns that
yes/no test into a continuous quantity, positive exactly on the stable
side, so stability boundaries become root-finding problems.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from ._util import fmt
from .model import Params

__all__ = [
    "TOL_LINE",
    "TOL_FAS",
    "basic_matrix",
    "Collection",
    "collection",
    "EigenData",
    "eigen3",
    "in_half_line",
    "same_sign",
    "s_d",
    "s_lambda",
    "s_w",
    "ScalarResult",
    "stability_scalar",
    "StabilityReport",
    "sequence_stability",
    "ClosedFormResult",
    "closed_form",
    "write_report_csv",
]

#: Tolerances for membership of the half-line L = {real, > 1} and for the
#: f.a.s. verdict on s.  Both sit well above closed-form cubic root error
#: and well below parameter-scale feature sizes.
TOL_LINE = 1e-11
TOL_FAS = 1e-9


def _check_letters(seq: str) -> str:
    if not seq or set(seq) - {"A", "B"}:
        raise ValueError(f"sequence must be a nonempty word over A/B, got {seq!r}")
    return seq


def basic_matrix(prev: str, cur: str, p: Params) -> np.ndarray:
    """Exponent matrix of the one-step map for transition ``cur`` after ``prev``."""
    ca, cb, ea, eb = p.c_a, p.c_b, p.e_a, p.e_b
    key = prev + cur
    if key == "AA":
        return np.array([[cb / ea, 0.0, 1.0], [ca / ea, 0.0, 0.0], [-eb / ea, 1.0, 0.0]])
    if key == "AB":
        return np.array([[0.0, ca / eb, 0.0], [1.0, -ea / eb, 0.0], [0.0, cb / eb, 1.0]])
    if key == "BB":
        return np.array([[0.0, ca / eb, 1.0], [1.0, -ea / eb, 0.0], [0.0, cb / eb, 0.0]])
    if key == "BA":
        return np.array([[cb / ea, 0.0, 0.0], [ca / ea, 0.0, 1.0], [-eb / ea, 1.0, 0.0]])
    raise ValueError(f"transition letters must be A or B, got {prev!r}->{cur!r}")


@dataclass(frozen=True)
class Collection:
    """The m cyclic-rotation products describing a length-m root sequence.

    ``matrices[j]`` executes the letters ``seq[j], seq[j+1], ...`` in order
    (indices mod m): its rightmost factor is the matrix of the transition
    into letter ``seq[j]``.  All members share one characteristic
    polynomial; the eigenvectors differ.
    """

    sequence: str
    matrices: list[np.ndarray]


def collection(seq: str, p: Params) -> Collection:
    seq = _check_letters(seq)
    m = len(seq)
    factors = [basic_matrix(seq[i - 1], seq[i], p) for i in range(m)]
    matrices = []
    for j in range(m):
        prod = factors[j]
        for i in range(1, m):
            prod = factors[(j + i) % m] @ prod
        matrices.append(prod)
    return Collection(sequence=seq, matrices=matrices)


def _cbrt(x: float) -> float:
    return math.copysign(abs(x) ** (1.0 / 3.0), x)


def _cubic_roots(a2: float, a1: float, a0: float) -> list[complex]:
    """Roots of x^3 + a2 x^2 + a1 x + a0, closed form plus one Newton polish."""
    off = a2 / 3.0
    pc = a1 - a2 * a2 / 3.0
    qc = 2.0 * a2**3 / 27.0 - a2 * a1 / 3.0 + a0
    disc = -4.0 * pc**3 - 27.0 * qc * qc
    roots: list[complex]
    if pc == 0.0 and qc == 0.0:
        roots = [complex(-off)] * 3
    elif disc >= 0.0 and pc < 0.0:
        # three real roots, trigonometric form
        amp = 2.0 * math.sqrt(-pc / 3.0)
        arg = max(-1.0, min(1.0, 3.0 * qc / (pc * amp)))
        phi = math.acos(arg)
        roots = [
            complex(amp * math.cos((phi - 2.0 * math.pi * k) / 3.0) - off) for k in range(3)
        ]
    else:
        # one real root via Cardano (cancellation-free cube-root pick),
        # remaining conjugate pair by deflation
        rad = math.sqrt(max(qc * qc / 4.0 + pc**3 / 27.0, 0.0))
        u = _cbrt(-qc / 2.0 - rad if abs(-qc / 2.0 - rad) > abs(-qc / 2.0 + rad) else -qc / 2.0 + rad)
        t1 = u - pc / (3.0 * u) if u != 0.0 else 0.0
        x1 = t1 - off
        b = a2 + x1
        c = a1 + x1 * b
        d = cmath.sqrt(complex(b * b - 4.0 * c))
        roots = [complex(x1), (-b + d) / 2.0, (-b - d) / 2.0]

    def polish(x: complex) -> complex:
        f = ((x + a2) * x + a1) * x + a0
        df = (3.0 * x + 2.0 * a2) * x + a1
        if abs(df) > 1e-30:
            x = x - f / df
        return x

    roots = [polish(x) for x in roots]
    # snap near-real roots and enforce exact conjugacy of a complex pair
    scale = 1.0 + max(abs(x) for x in roots)
    roots = [complex(x.real) if abs(x.imag) <= 1e-13 * scale else x for x in roots]
    cplx = [x for x in roots if x.imag != 0.0]
    if len(cplx) == 2:
        mean = 0.5 * (cplx[0] + cplx[1].conjugate())
        roots = [x for x in roots if x.imag == 0.0] + [mean, mean.conjugate()]
    return roots


def _null_vector(a: np.ndarray, lam: float) -> tuple[np.ndarray, float]:
    """Unit null vector of (a - lam*I) by the largest row cross product."""
    a00, a01, a02 = a[0, 0] - lam, a[0, 1], a[0, 2]
    a10, a11, a12 = a[1, 0], a[1, 1] - lam, a[1, 2]
    a20, a21, a22 = a[2, 0], a[2, 1], a[2, 2] - lam
    c01 = (a01 * a12 - a02 * a11, a02 * a10 - a00 * a12, a00 * a11 - a01 * a10)
    c02 = (a01 * a22 - a02 * a21, a02 * a20 - a00 * a22, a00 * a21 - a01 * a20)
    c12 = (a11 * a22 - a12 * a21, a12 * a20 - a10 * a22, a10 * a21 - a11 * a20)
    best, n2best = c01, c01[0] ** 2 + c01[1] ** 2 + c01[2] ** 2
    for cand in (c02, c12):
        n2 = cand[0] ** 2 + cand[1] ** 2 + cand[2] ** 2
        if n2 > n2best:
            best, n2best = cand, n2
    n = math.sqrt(n2best)
    if n == 0.0:
        return np.zeros(3), 0.0
    return np.array(best) / n, n


def _sign_normalize(v: np.ndarray) -> np.ndarray:
    for c in v:
        if abs(c) > 1e-14:
            return -v if c < 0.0 else v
    return v


@dataclass(frozen=True)
class EigenData:
    """Spectrum of a 3x3 transition-matrix product, largest modulus first.

    ``lambda_2`` is the runner-up by modulus when ``lambda_max`` is real,
    and the remaining real eigenvalue when a conjugate pair occupies the
    top two slots.  ``vectors[i]`` holds the unit eigenvector (first
    nonzero component positive) for real eigenvalues, None for complex
    ones.
    """

    spectrum: tuple[complex, complex, complex]
    lambda_max: complex
    lambda_2: complex
    vectors: tuple[np.ndarray | None, np.ndarray | None, np.ndarray | None]
    w_max: np.ndarray | None
    residual: float
    near_defective: bool


def eigen3(mat: np.ndarray) -> EigenData:
    """Eigenvalues via the closed-form cubic, eigenvectors via null spaces."""
    m = np.asarray(mat, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        raise ValueError("eigen3 expects a finite 3x3 matrix")
    m00, m01, m02 = m[0]
    m10, m11, m12 = m[1]
    m20, m21, m22 = m[2]
    tr = m00 + m11 + m22
    minors = (
        (m11 * m22 - m12 * m21)
        + (m00 * m22 - m02 * m20)
        + (m00 * m11 - m01 * m10)
    )
    det = (
        m00 * (m11 * m22 - m12 * m21)
        - m01 * (m10 * m22 - m12 * m20)
        + m02 * (m10 * m21 - m11 * m20)
    )
    roots = _cubic_roots(-tr, minors, -det)
    roots.sort(key=lambda z: (-abs(z), z.imag))
    spectrum = tuple(roots)

    lam_max = spectrum[0]
    lam_2 = spectrum[1] if lam_max.imag == 0.0 else spectrum[2]

    vectors: list[np.ndarray | None] = []
    residual = 0.0
    near_defective = False
    for lam in spectrum:
        if lam.imag != 0.0:
            vectors.append(None)
            continue
        v, pivot = _null_vector(m, lam.real)
        if pivot < 1e-12 * (1.0 + abs(lam)) ** 2:
            near_defective = True
        v = _sign_normalize(v)
        vectors.append(v)
        residual = max(residual, float(np.linalg.norm(m @ v - lam.real * v)))
    if residual > 1e-8:
        near_defective = True

    w_max = vectors[0] if spectrum[0].imag == 0.0 else None
    return EigenData(
        spectrum=spectrum,
        lambda_max=lam_max,
        lambda_2=lam_2,
        vectors=tuple(vectors),
        w_max=w_max,
        residual=residual,
        near_defective=near_defective,
    )


def in_half_line(lam: complex, tol: float = TOL_LINE) -> bool:
    """Membership of the half-line L: real eigenvalues strictly above one."""
    return abs(lam.imag) <= tol * (1.0 + abs(lam)) and lam.real > 1.0 + tol


def same_sign(v: np.ndarray | None) -> bool:
    """All components nonzero and of one sign (the eigenvector set V)."""
    if v is None:
        return False
    return bool(np.all(v > 0.0) or np.all(v < 0.0))


def s_d(lam: complex, v: np.ndarray | None = None) -> float:
    """Distance-like instability measure of a single eigenvalue.

    Distance of ``lam`` from the half-line L when off it; on L the value is
    0 when the eigenvector lies in V and 1 otherwise.
    """
    if in_half_line(lam):
        return 0.0 if same_sign(v) else 1.0
    if lam.real >= 1.0:
        return abs(lam.imag)
    return abs(lam - 1.0)


def s_lambda(eig: EigenData) -> float:
    """How stable or unstable the dominant eigenvalue is."""
    i_max = eig.spectrum.index(eig.lambda_max)
    i_2 = eig.spectrum.index(eig.lambda_2)
    sd_max = s_d(eig.lambda_max, eig.vectors[i_max])
    gap = abs(eig.lambda_max) - abs(eig.lambda_2)
    if sd_max == 0.0:
        return gap
    sd_2 = s_d(eig.lambda_2, eig.vectors[i_2])
    if sd_2 == 0.0:
        return -min(sd_max, gap)
    return -sd_max


def s_w(lam: complex, v: np.ndarray | None) -> float:
    """Smallest pairwise component product of the eigenvector, or -1 off L.

    Positive exactly when all components share one sign; passes through
    zero continuously when a component changes sign.  Magnitude depends on
    the unit-norm convention, the sign and zero set do not.
    """
    if not in_half_line(lam) or v is None:
        return -1.0
    return float(np.min(np.outer(v, v)))


@dataclass(frozen=True)
class ScalarResult:
    s: float
    eig: EigenData
    excluded: bool  # dominant eigenvalue is one within tolerance


def stability_scalar(mat: np.ndarray, one_tol: float = TOL_FAS) -> ScalarResult:
    """The continuous stability scalar of one matrix.

    Positive exactly when the matrix passes the fragmentary-stability test,
    negative otherwise, and continuous across the boundary.  A dominant
    eigenvalue equal to one (within ``one_tol``) is flagged as excluded:
    the test presumes it away.
    """
    eig = eigen3(mat)
    sl = s_lambda(eig)
    sw = s_w(eig.lambda_max, eig.w_max)
    s = sl * sw if (sl > 0.0 and sw > 0.0) else -abs(sl * sw)
    excluded = abs(eig.lambda_max - 1.0) <= one_tol
    return ScalarResult(s=s, eig=eig, excluded=excluded)


@dataclass(frozen=True)
class StabilityReport:
    """Verdict for a root sequence at one parameter point.

    ``s`` is the minimum of the scalar over the collection.  When the
    verdict is not "fas", ``failing_matrix`` is the position (0-based,
    cycle starting at that letter) attaining the minimum and
    ``failing_component`` the eigenvector component (0-based) responsible
    when the loss is of sign/zero type, else None.
    """

    sequence: str
    params: Params
    s_values: tuple[float, ...]
    s: float
    verdict: str  # "fas", "not_fas" or "boundary"
    failing_matrix: int | None
    failing_component: int | None
    lambda_max: complex
    excluded: bool
    near_defective: bool


def sequence_stability(seq: str, p: Params, tol: float = TOL_FAS) -> StabilityReport:
    """Evaluate the scalar over the collection of ``seq`` and take the minimum."""
    coll = collection(seq, p)
    results = [stability_scalar(m) for m in coll.matrices]
    s_values = tuple(r.s for r in results)
    k = int(np.argmin(s_values))
    s_min = s_values[k]
    if s_min > tol:
        verdict = "fas"
    elif abs(s_min) <= tol:
        verdict = "boundary"
    else:
        verdict = "not_fas"

    failing_matrix = None
    failing_component = None
    if verdict != "fas":
        failing_matrix = k
        worst = results[k].eig
        if in_half_line(worst.lambda_max) and worst.w_max is not None:
            # loss through the eigenvector: the component that changed sign
            # (or sits at zero) is the one opposing the majority sign
            v = worst.w_max
            majority = 1.0 if float(np.sum(np.sign(v))) >= 0.0 else -1.0
            failing_component = int(np.argmin(majority * v))

    return StabilityReport(
        sequence=seq,
        params=p,
        s_values=s_values,
        s=float(s_min),
        verdict=verdict,
        failing_matrix=failing_matrix,
        failing_component=failing_component,
        lambda_max=results[k].eig.lambda_max,
        excluded=any(r.excluded for r in results),
        near_defective=any(r.eig.near_defective for r in results),
    )


@dataclass(frozen=True)
class ClosedFormResult:
    """Inequality margins for the three sequences with known closed forms."""

    sequence: str
    margins: dict[str, float]
    verdict: str

    def detail(self) -> str:
        parts = [f"{k}={v:.6g}" for k, v in self.margins.items()]
        return f"{self.sequence}: {self.verdict} ({', '.join(parts)})"


def closed_form(seq: str, p: Params, tol: float = 1e-12) -> ClosedFormResult:
    """Closed-form stability test for the sequences A, B and AAB.

    Every margin must be positive for the sequence to be fragmentarily
    asymptotically stable; a margin within ``tol`` of zero (none strictly
    negative) gives "boundary".
    """
    ca, cb, ea, eb = p.c_a, p.c_b, p.e_a, p.e_b
    if seq == "A":
        margins = {
            "resonance": ca + cb - ea - eb,
            "eigenvector": ca * ea - cb * eb,
            "modulus": ca * cb**3 - ea * eb**3,
        }
    elif seq == "B":
        margins = {
            "resonance": ca + cb - ea - eb,
            "eigenvector": cb * eb - ca * ea,
            "modulus": ca**3 * eb - cb * ea**3,
        }
    elif seq == "AAB":
        delta_t = ca**2 * cb / (ea**2 * eb)
        nu_4 = -cb + ca**2 / ea + ca * ea / eb
        nu_5 = -cb - ca**2 / ea + ca * cb * eb / ea**2
        margins = {"resonance": delta_t - 1.0, "transverse4": -nu_4, "transverse5": -nu_5}
    else:
        raise ValueError(f"closed forms exist only for A, B and AAB, got {seq!r}")
    values = list(margins.values())
    # a marginal condition reports "boundary" even when another condition
    # strictly fails: the verdict flags that some inequality is exactly tied
    if any(abs(v) <= tol for v in values):
        verdict = "boundary"
    elif all(v > tol for v in values):
        verdict = "fas"
    else:
        verdict = "not_fas"
    return ClosedFormResult(sequence=seq, margins=margins, verdict=verdict)


def write_report_csv(reports: list[StabilityReport], stream: TextIO) -> None:
    """Rows ``seq,cA,cB,eA,eB,s,verdict,fail_matrix,fail_component,lambda_max_re,lambda_max_im``."""
    stream.write("seq,cA,cB,eA,eB,s,verdict,fail_matrix,fail_component,lambda_max_re,lambda_max_im\n")
    for r in reports:
        fm = "" if r.failing_matrix is None else str(r.failing_matrix)
        fc = "" if r.failing_component is None else str(r.failing_component)
        stream.write(
            f"{r.sequence},{fmt(r.params.c_a)},{fmt(r.params.c_b)},"
            f"{fmt(r.params.e_a)},{fmt(r.params.e_b)},{fmt(r.s)},{r.verdict},"
            f"{fm},{fc},{fmt(r.lambda_max.real)},{fmt(r.lambda_max.imag)}\n"
        )
