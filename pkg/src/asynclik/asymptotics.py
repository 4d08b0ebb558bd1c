"""Asymptotic variance theory for the nonsynchronous quasi-likelihood.

The sampling geometry enters only through the normalized power traces of the
overlap matrix,

    nu_p = tr((G G^T)^p) / b_n      (p = 0, 1, ...),

whose expectations converge to scheme constants a_p (and c_0 from the other
factor order).  Everything downstream — the limiting likelihood field, the
information matrix, delta-method variances — is a function of those
constants, the diffusion-coefficient norms and the correlation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .grids import OverlapMatrix, SamplingScheme, generate_grid, overlap_matrix
from .simulate import DiffusionModel


class SeriesTruncationError(RuntimeError):
    """Geometric tail above tolerance; raise the truncation order."""


class DegenerateInformationError(RuntimeError):
    """Variance formula degenerates (correlation numerically zero)."""


@dataclass(frozen=True)
class SamplingCoefficients:
    """Estimated scheme constants a_0..a_P and c_0 with Monte Carlo errors."""

    a: np.ndarray
    c0: float
    se: np.ndarray
    c0_se: float
    scheme1: SamplingScheme | None = None
    scheme2: SamplingScheme | None = None
    reps: int = 0

    @property
    def order(self) -> int:
        return self.a.size - 1

    @classmethod
    def equispaced(cls, order: int = 40) -> "SamplingCoefficients":
        """Exact constants of the synchronous equispaced scheme: a_p = c_0 = 1."""
        return cls(
            a=np.ones(order + 1),
            c0=1.0,
            se=np.zeros(order + 1),
            c0_se=0.0,
        )

    def intensities(self) -> tuple[float, float]:
        if (
            self.scheme1 is None
            or self.scheme2 is None
            or self.scheme1.kind != "poisson"
            or self.scheme2.kind != "poisson"
        ):
            raise ValueError("coefficients were not estimated for a Poisson scheme pair")
        return self.scheme1.intensity, self.scheme2.intensity

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("# sampling coefficients\n")
            fh.write(f"# c0 {self.c0:.17g} {self.c0_se:.17g}\n")
            fh.write(f"# reps {self.reps}\n")
            if self.scheme1 is not None and self.scheme1.kind == "poisson":
                fh.write(
                    f"# poisson {self.scheme1.intensity:.17g} {self.scheme2.intensity:.17g} "
                    f"{self.scheme1.scale:.17g} {self.scheme1.horizon:.17g}\n"
                )
            fh.write("# p a_p se\n")
            for p in range(self.a.size):
                fh.write(f"{p} {self.a[p]:.17g} {self.se[p]:.17g}\n")

    @classmethod
    def load(cls, path) -> "SamplingCoefficients":
        a = {}
        se = {}
        c0 = c0_se = None
        reps = 0
        scheme1 = scheme2 = None
        with open(path) as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    parts = line[1:].split()
                    if parts and parts[0] == "c0":
                        c0, c0_se = float(parts[1]), float(parts[2])
                    elif parts and parts[0] == "reps":
                        reps = int(parts[1])
                    elif parts and parts[0] == "poisson":
                        lam1, lam2, scale, horizon = (float(v) for v in parts[1:5])
                        scheme1 = SamplingScheme.poisson(lam1, scale, horizon)
                        scheme2 = SamplingScheme.poisson(lam2, scale, horizon)
                    continue
                parts = line.split()
                if len(parts) != 3:
                    raise ValueError(f"{path}:{lineno}: expected 'p a_p se'")
                p = int(parts[0])
                a[p] = float(parts[1])
                se[p] = float(parts[2])
        if c0 is None or not a:
            raise ValueError(f"{path}: missing coefficient rows")
        order = max(a)
        return cls(
            a=np.asarray([a[p] for p in range(order + 1)]),
            c0=c0,
            se=np.asarray([se[p] for p in range(order + 1)]),
            c0_se=c0_se,
            scheme1=scheme1,
            scheme2=scheme2,
            reps=reps,
        )


def nu_measure(G: OverlapMatrix, p: int, b_n: float, which: int = 1) -> float:
    """Normalized trace of the p-th Gram power: tr((GG^T)^p)/b_n (which=1)
    or tr((G^T G)^p)/b_n (which=2).  Powers are memoized on the matrix."""
    if p < 0:
        raise ValueError("order p must be >= 0")
    return float(np.trace(G.gram_power(p, which))) / b_n


def nu_measures(G: OverlapMatrix, order: int, b_n: float, which: int = 1) -> np.ndarray:
    """All normalized trace functionals for p = 0..order."""
    return np.asarray([nu_measure(G, p, b_n, which) for p in range(order + 1)])


def nu_measures_spectral(G: OverlapMatrix, order: int, b_n: float, which: int = 1) -> np.ndarray:
    """Spectral route for the same functionals: powers of the Gram eigenvalues.

    Identical to :func:`nu_measures` up to rounding and much faster when many
    orders are needed at once; the p = 0 trace is the matrix dimension, not
    the rank.
    """
    lam = np.clip(G.gram_eigenvalues(), 0.0, 1.0)
    out = np.empty(order + 1)
    out[0] = (G.shape[0] if which == 1 else G.shape[1]) / b_n
    powers = np.ones_like(lam)
    for p in range(1, order + 1):
        powers = powers * lam
        out[p] = np.sum(powers) / b_n
    return out


def estimate_coefficients(
    scheme1: SamplingScheme,
    scheme2: SamplingScheme,
    order: int = 40,
    reps: int = 500,
    rng: np.random.Generator | None = None,
) -> SamplingCoefficients:
    """Monte Carlo estimate of a_0..a_order and c_0 over grid-pair draws.

    Deterministic schemes short-circuit to their exact constants.  Warns when
    the Monte Carlo error of a_1 exceeds 5% of its value.
    """
    if order < 1 or reps < 1:
        raise ValueError("need order >= 1 and reps >= 1")
    if scheme1.kind == "equispaced" and scheme2.kind == "equispaced":
        if scheme1.count == scheme2.count:
            coeff = SamplingCoefficients.equispaced(order)
            return SamplingCoefficients(
                a=coeff.a, c0=coeff.c0, se=coeff.se, c0_se=coeff.c0_se,
                scheme1=scheme1, scheme2=scheme2, reps=0,
            )
    if rng is None:
        rng = np.random.default_rng(0)
    if scheme1.horizon != scheme2.horizon or scheme1.scale != scheme2.scale:
        raise ValueError("scheme pair must share horizon and scale")
    T = scheme1.horizon
    b_n = scheme1.scale
    samples = np.empty((reps, order + 1))
    c0_samples = np.empty(reps)
    for r in range(reps):
        g1 = generate_grid(scheme1, rng)
        g2 = generate_grid(scheme2, rng)
        G = overlap_matrix(g1, g2)
        samples[r] = nu_measures_spectral(G, order, b_n, which=1) / T
        c0_samples[r] = g2.count / b_n / T
    a = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / np.sqrt(reps) if reps > 1 else np.zeros(order + 1)
    c0 = float(c0_samples.mean())
    c0_se = float(c0_samples.std(ddof=1) / np.sqrt(reps)) if reps > 1 else 0.0
    if a[1] > 0 and se[1] > 0.05 * a[1]:
        warnings.warn(
            f"MC error of a_1 is {se[1] / a[1]:.1%} of its value; raise reps",
            RuntimeWarning,
            stacklevel=2,
        )
    return SamplingCoefficients(
        a=a, c0=c0, se=se, c0_se=c0_se, scheme1=scheme1, scheme2=scheme2, reps=reps
    )


# -- correlation power series ------------------------------------------------


def _check_tail(coeffs: SamplingCoefficients, rho: float, tol: float) -> None:
    if not abs(rho) < 1.0:
        raise ValueError("|rho| must be < 1")
    P = coeffs.order
    tail = coeffs.a[P] * rho ** (2 * P) / (1.0 - rho * rho)
    if tail > tol:
        raise SeriesTruncationError(
            f"series tail bound {tail:.3e} above tol={tol:.1e}; increase the order"
        )


def corr_series(coeffs: SamplingCoefficients, rho: float, tol: float = 1e-10) -> dict:
    """Truncated power-series functionals of the correlation.

    Returns A = sum_{p>=1} a_p rho^{2p} together with the companions that
    appear in the limit field and the information matrix, each evaluated as
    a polynomial so the rho -> 0 limits are built in:

        A_over_rho   = sum a_p rho^{2p-1}
        A_over_rho2  = sum a_p rho^{2p-2}
        dA           = sum 2p a_p rho^{2p-1}
        dA_over_rho  = sum 2p a_p rho^{2p-2}
        C            = sum a_p rho^{2p} / p
    """
    _check_tail(coeffs, rho, tol)
    p = np.arange(1, coeffs.order + 1)
    ap = coeffs.a[1:]
    r2 = rho * rho
    pow2 = r2 ** (p - 1)  # rho^{2p-2}
    A_over_rho2 = float(np.sum(ap * pow2))
    A_over_rho = rho * A_over_rho2
    A = r2 * A_over_rho2
    dA_over_rho = float(np.sum(2.0 * p * ap * pow2))
    dA = rho * dA_over_rho
    C = float(np.sum(ap / p * pow2)) * r2
    return {
        "A": A,
        "A_over_rho": A_over_rho,
        "A_over_rho2": A_over_rho2,
        "dA": dA,
        "dA_over_rho": dA_over_rho,
        "C": C,
    }


def A_and_derivative(
    coeffs: SamplingCoefficients, rho: float, tol: float = 1e-10
) -> tuple[float, float]:
    """(A(rho), dA/drho) with the geometric tail below ``tol``."""
    s = corr_series(coeffs, rho, tol)
    return s["A"], s["dA"]


# -- limiting likelihood field -------------------------------------------------


def limit_field(
    coeffs: SamplingCoefficients,
    model: DiffusionModel,
    sigma,
    sigma_star,
    x=None,
    tol: float = 1e-10,
) -> float:
    """Pointwise limit of the normalized quasi-log-likelihood at one time.

    With B^i = |b^i(sigma*)| / |b^i(sigma)| and the scheme constants,

        h = -1/2 [ (B1)^2 (a0 + A) + (B2)^2 (c0 + A) ] + B1 B2 rho* A/rho
            - a0 log|b1| - c0 log|b2| + C/2,

    all rho-ratios evaluated as series (finite at rho = 0).
    """
    n1, n2, rho = model.norms_and_corr(x, sigma)
    n1s, n2s, rho_star = model.norms_and_corr(x, sigma_star)
    s = corr_series(coeffs, rho, tol)
    B1 = n1s / n1
    B2 = n2s / n2
    a0 = coeffs.a[0]
    c0 = coeffs.c0
    return float(
        -0.5 * (B1 * B1 * (a0 + s["A"]) + B2 * B2 * (c0 + s["A"]))
        + B1 * B2 * rho_star * s["A_over_rho"]
        - a0 * np.log(n1)
        - c0 * np.log(n2)
        + 0.5 * s["C"]
    )


def identifiability_gap(
    coeffs: SamplingCoefficients,
    model: DiffusionModel,
    sigma,
    sigma_star,
    x=None,
    tol: float = 1e-10,
) -> float:
    """limit_field(sigma) - limit_field(sigma*); strictly negative away from
    parameters with matching coefficient norms and correlation."""
    return limit_field(coeffs, model, sigma, sigma_star, x=x, tol=tol) - limit_field(
        coeffs, model, sigma_star, sigma_star, x=x, tol=tol
    )


# -- information matrix ---------------------------------------------------------


def _fd_norms_corr_grad(model: DiffusionModel, sigma_star, x, rel_step: float = 1e-5):
    """Central-difference gradients of (log|b1|, log|b2|, rho) at sigma*."""
    sigma_star = np.asarray(sigma_star, dtype=np.float64)
    n = sigma_star.size
    d_log1 = np.empty(n)
    d_log2 = np.empty(n)
    d_rho = np.empty(n)
    h = np.maximum(rel_step, rel_step * np.abs(sigma_star))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        n1p, n2p, rp = model.norms_and_corr(x, sigma_star + ei)
        n1m, n2m, rm = model.norms_and_corr(x, sigma_star - ei)
        d_log1[i] = (np.log(n1p) - np.log(n1m)) / (2 * h[i])
        d_log2[i] = (np.log(n2p) - np.log(n2m)) / (2 * h[i])
        d_rho[i] = (rp - rm) / (2 * h[i])
    return d_log1, d_log2, d_rho


def limit_field_hessian(
    coeffs: SamplingCoefficients,
    model: DiffusionModel,
    sigma_star,
    x=None,
    tol: float = 1e-10,
) -> np.ndarray:
    """Closed-form Hessian of the limit field at the true parameter.

    In terms of the gradients of B^1, B^2 and rho at sigma* (note
    grad B^i(sigma*) = -grad log|b^i|):

        A (grad rho/rho - grad B1 - grad B2)^{x2} - (dA/rho) (grad rho)^{x2}
        - 2 (a0 + A) (grad B1)^{x2} - 2 (c0 + A) (grad B2)^{x2},

    expanded so every rho-division is a series (finite at rho* = 0).
    """
    n1s, n2s, rho = model.norms_and_corr(x, sigma_star)
    s = corr_series(coeffs, rho, tol)
    d_log1, d_log2, d_rho = _fd_norms_corr_grad(model, sigma_star, x)
    dB1 = -d_log1
    dB2 = -d_log2
    g = dB1 + dB2
    a0 = coeffs.a[0]
    c0 = coeffs.c0

    def outer(u, v):
        return np.outer(u, v)

    H = (
        s["A_over_rho2"] * outer(d_rho, d_rho)
        - s["A_over_rho"] * (outer(d_rho, g) + outer(g, d_rho))
        + s["A"] * outer(g, g)
        - s["dA_over_rho"] * outer(d_rho, d_rho)
        - 2.0 * (a0 + s["A"]) * outer(dB1, dB1)
        - 2.0 * (c0 + s["A"]) * outer(dB2, dB2)
    )
    return H


def gamma_general(
    coeffs: SamplingCoefficients,
    model: DiffusionModel,
    sigma_star,
    T: float,
    covariate_path=None,
    time_nodes: int = 64,
    tol: float = 1e-10,
) -> np.ndarray:
    """Information matrix: minus the time integral of the limit-field Hessian.

    Constant models collapse to a single evaluation times T; otherwise a
    midpoint rule over ``time_nodes`` with the covariate proxy path
    ``covariate_path(t)``.
    """
    if model.constant or covariate_path is None:
        H = limit_field_hessian(coeffs, model, sigma_star, x=None, tol=tol)
        return -T * H
    ts = (np.arange(time_nodes) + 0.5) * (T / time_nodes)
    acc = np.zeros((np.asarray(sigma_star).size,) * 2)
    for t in ts:
        acc += limit_field_hessian(coeffs, model, sigma_star, x=covariate_path(t), tol=tol)
    return -acc * (T / time_nodes)


# -- two-driver model closed forms ----------------------------------------------


def _example1_rho(sigma_star) -> tuple[float, float, float, float]:
    s1, s2, s3 = np.asarray(sigma_star, dtype=np.float64)
    s23 = np.hypot(s2, s3)
    return s1, s2, s3, s3 / s23


def gamma_example1(coeffs: SamplingCoefficients, sigma_star, T: float, tol: float = 1e-10) -> np.ndarray:
    """Hand-derived 3x3 information matrix of the two-driver model."""
    s1, s2, s3, rho = _example1_rho(sigma_star)
    ser = corr_series(coeffs, rho, tol)
    A = ser["A"]
    dA_rho = ser["dA"] * rho
    a = coeffs.a[0] + A
    c = coeffs.c0 + A
    r2 = rho * rho
    q = 1.0 - r2
    if abs(s3) < 1e-12:
        raise DegenerateInformationError("sigma3 = 0: correlation sign unidentifiable")
    return T * np.array(
        [
            [(coeffs.a[0] + a) / s1**2, 0.0, -A / (s1 * s3)],
            [
                0.0,
                (2.0 * c * q * q + dA_rho * q * q) / s2**2,
                (2.0 * c * r2 * q - dA_rho * q * q) / (s2 * s3),
            ],
            [
                -A / (s1 * s3),
                (2.0 * c * r2 * q - dA_rho * q * q) / (s2 * s3),
                (-A + 2.0 * c * r2 * r2 + dA_rho * q * q) / s3**2,
            ],
        ]
    )


def gamma_inv_example1(coeffs: SamplingCoefficients, sigma_star, T: float, tol: float = 1e-10) -> np.ndarray:
    """Closed-form inverse of :func:`gamma_example1`.

    The normalization is 1 / (T (2 dA rho (a0 c + c0 a) - 4 a c A)); the
    bracket is positive whenever rho != 0.
    """
    s1, s2, s3, rho = _example1_rho(sigma_star)
    ser = corr_series(coeffs, rho, tol)
    A = ser["A"]
    dA_rho = ser["dA"] * rho
    a0 = coeffs.a[0]
    c0 = coeffs.c0
    a = a0 + A
    c = c0 + A
    r2 = rho * rho
    q = 1.0 - r2
    den = T * (2.0 * dA_rho * (a0 * c + c0 * a) - 4.0 * a * c * A)
    if abs(den) < 1e-12:
        raise DegenerateInformationError("degenerate information normalization")
    m12 = A * (-2.0 * c * r2 / q + dA_rho)
    P = np.array(
        [
            [-2.0 * c * A + (c0 + c) * dA_rho, m12, A * (2.0 * c + dA_rho)],
            [
                m12,
                (-2.0 * a * A + (a0 + a) * (2.0 * c * r2 * r2 + dA_rho * q * q)) / (q * q),
                (a0 + a) * (-2.0 * c * r2 / q + dA_rho),
            ],
            [
                A * (2.0 * c + dA_rho),
                (a0 + a) * (-2.0 * c * r2 / q + dA_rho),
                (a0 + a) * (2.0 * c + dA_rho),
            ],
        ]
    )
    D = np.diag([s1, s2, s3])
    return D @ P @ D / den


def variance_example1(
    coeffs: SamplingCoefficients, sigma_star, T: float, tol: float = 1e-10
) -> tuple[float, float]:
    """Asymptotic variances of the two cross-variation estimators.

    ``v`` is the delta-method variance of the plug-in product estimate;
    ``v0`` the closed-form variance of the overlap-sum estimator for the
    Poisson scheme pair (intensities read off the coefficients' scheme).
    """
    s1, s2, s3, rho = _example1_rho(sigma_star)
    ser = corr_series(coeffs, rho, tol)
    A = ser["A"]
    dA_rho = ser["dA"] * rho
    a0 = coeffs.a[0]
    c0 = coeffs.c0
    a = a0 + A
    c = c0 + A
    num = 2.0 * a * c + dA_rho * (a + c)
    den = -2.0 * a * c * A + dA_rho * (a0 * c + c0 * a)
    scale = T * (s1 * s3) ** 2
    if abs(den) < 1e-12:
        raise DegenerateInformationError(
            "degenerate information: correlation numerically zero"
        )
    v = scale * num / den
    lam1, lam2 = coeffs.intensities()
    r2 = rho * rho
    v0 = scale * ((1.0 + 1.0 / r2) * (2.0 / lam1 + 2.0 / lam2) - 2.0 / (lam1 + lam2))
    return float(v), float(v0)


def variance_example1_plugin_only(
    coeffs: SamplingCoefficients, sigma_star, T: float, tol: float = 1e-10
) -> float:
    """Delta-method variance alone, for schemes without Poisson intensities."""
    s1, s2, s3, rho = _example1_rho(sigma_star)
    ser = corr_series(coeffs, rho, tol)
    A = ser["A"]
    dA_rho = ser["dA"] * rho
    a = coeffs.a[0] + A
    c = coeffs.c0 + A
    den = -2.0 * a * c * A + dA_rho * (coeffs.a[0] * c + coeffs.c0 * a)
    if abs(den) < 1e-12:
        raise DegenerateInformationError(
            "degenerate information: correlation numerically zero"
        )
    return float(T * (s1 * s3) ** 2 * (2.0 * a * c + dA_rho * (a + c)) / den)


@dataclass
class AsymptoticsReport:
    coeffs: SamplingCoefficients
    rho: float
    A: float
    dA: float
    Gamma: np.ndarray
    GammaInv: np.ndarray
    v: float
    v0: float | None

    def save(self, path) -> None:
        """Structured key-value dump, 17 significant digits."""
        with open(path, "w") as fh:
            fh.write(f"rho = {self.rho:.17g}\n")
            fh.write(f"A = {self.A:.17g}\n")
            fh.write(f"dA = {self.dA:.17g}\n")
            n = self.Gamma.shape[0]
            for i in range(n):
                for j in range(n):
                    fh.write(f"gamma_{i + 1}{j + 1} = {self.Gamma[i, j]:.17g}\n")
            for i in range(n):
                for j in range(n):
                    fh.write(f"gamma_inv_{i + 1}{j + 1} = {self.GammaInv[i, j]:.17g}\n")
            fh.write(f"v = {self.v:.17g}\n")
            if self.v0 is not None:
                fh.write(f"v0 = {self.v0:.17g}\n")
            fh.write(f"a0 = {self.coeffs.a[0]:.17g}\n")
            fh.write(f"a1 = {self.coeffs.a[1]:.17g}\n")
            fh.write(f"c0 = {self.coeffs.c0:.17g}\n")
