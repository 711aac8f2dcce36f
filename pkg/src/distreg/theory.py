"""Evaluators for the two-stage excess-risk bound and its convergence rates.

Only the final aggregate bound is evaluated. The intermediate terms of the
risk decomposition involve population objects (the covariance operator
``T``, the regression function ``f_H``, the marginal of the embeddings)
that have no runtime counterpart, so they are not represented here.

Notation used throughout:

* ``lam`` -- ridge parameter.
* ``l`` -- number of bags; ``N`` -- points per bag (the minimum over bags).
* ``(L, h)`` -- Hoelder constants of ``mu -> K(., mu)``.
* ``b_k`` / ``b_K`` -- bounds on the base and outer kernel diagonals.
* ``(b, c)`` -- eigen-decay and smoothness exponents of the prior class.

``b`` may be ``math.inf`` wherever the "large ``b``" limit is wanted; all
expressions are written in terms of ``1 / b`` so the limit is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

NEVER = "never"


def c_eta(eta: float) -> float:
    """Confidence constant ``32 log^2(6 / eta)``.

    The formula is evaluated for any positive ``eta``; the bound itself
    requires ``eta`` in ``(0, 1)``, which :class:`BoundInputs` enforces.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    return 32.0 * math.log(6.0 / eta) ** 2


@dataclass(frozen=True)
class PriorClassParams:
    """Parameters of the prior class with eigen-decay ``b`` and smoothness ``c``."""

    b: float
    c: float
    R: float = 1.0
    alpha_eig: float = 1.0
    beta_eig: float = 1.0
    M: float = 1.0
    Sigma: float = 1.0

    def __post_init__(self):
        if not self.b > 1:
            raise ValueError("b must exceed 1")
        if not 1 <= self.c <= 2:
            raise ValueError("c must lie in [1, 2]")
        for name in ("R", "alpha_eig", "beta_eig", "M", "Sigma"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.alpha_eig > self.beta_eig:
            raise ValueError("alpha_eig must not exceed beta_eig")


def residual_A(p: PriorClassParams, lam: float) -> float:
    return p.R * lam**p.c


def reconstruction_B(p: PriorClassParams, lam: float) -> float:
    # R lam^(c-1): the form under which the general bound specializes to the class bound
    return p.R * lam ** (p.c - 1.0)


def effective_dim_class(p: PriorClassParams, lam: float) -> float:
    """Upper bound ``beta b / ((b - 1) lam^(1/b))`` on the effective dimension."""
    ib = 1.0 / p.b
    return p.beta_eig / ((1.0 - ib) * lam**ib)


def effective_dim_from_spectrum(eigs, lam: float) -> float:
    """``sum t / (t + lam)`` over a spectrum; negative eigenvalues count as zero."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    t = np.clip(np.asarray(eigs, dtype=np.float64), 0.0, None)
    return float(np.sum(t / (t + lam)))


def effective_dim_empirical(G: np.ndarray, l: int, lam: float) -> float:
    """Plug-in effective dimension from the eigenvalues of ``G / l``."""
    G = np.asarray(G, dtype=np.float64)
    eigs = np.linalg.eigvalsh((G + G.T) / 2.0) / l
    return effective_dim_from_spectrum(eigs, lam)


def operator_norm_proxy(G: np.ndarray, l: int) -> float:
    """Largest eigenvalue of ``G / l``, standing in for the covariance operator norm."""
    return float(np.linalg.eigvalsh((G + G.T) / 2.0)[-1] / l)


# -- general bound ---------------------------------------------------------


@dataclass(frozen=True)
class BoundInputs:
    L: float
    h: float
    b_K: float
    b_k: float
    C: float
    l: int
    N: int
    lam: float
    eta: float
    delta: float
    M: float = 1.0
    Sigma: float = 1.0

    def __post_init__(self):
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")
        if not 0 < self.h <= 1:
            raise ValueError("h must lie in (0, 1]")
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if not (self.l >= 1 and self.N >= 1):
            raise ValueError("l and N must be positive")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        for name in ("b_K", "b_k", "C", "M", "Sigma"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.L < 0:
            raise ValueError("L must be nonnegative")


@dataclass(frozen=True)
class Constraint:
    name: str
    satisfied: Optional[bool]
    margin: float
    proxy: bool = False


@dataclass(frozen=True)
class BoundReport:
    bound: float
    terms: Dict[str, float]
    constraints: List[Constraint] = field(default_factory=list)

    def rows(self) -> List[Tuple[str, float]]:
        """``(term_name, value)`` pairs in fixed order, total last."""
        return list(self.terms.items()) + [("total", self.bound)]


TERM_NAMES = (
    "embedding",
    "embedding_outer",
    "residual",
    "reconstruction",
    "residual_cross",
    "noise",
    "effective_dim",
)


def theorem1_terms(inp: BoundInputs, A: float, B: float, Ndim: float) -> Dict[str, float]:
    """The seven summands inside the braces of the bound (before the factor 5)."""
    ce = c_eta(inp.eta)
    lam, l, h = inp.lam, inp.l, inp.h
    spread = (1.0 + math.sqrt(math.log(l) + inp.delta)) ** (2.0 * h)
    emb = 4.0 * inp.L**2 * inp.C**2 * spread * (2.0 * inp.b_k) ** h / (lam * inp.N**h)
    return {
        "embedding": emb,
        "embedding_outer": emb * 4.0 * inp.b_K**2 / lam**2,
        "residual": A,
        "reconstruction": ce * inp.b_K**2 * B / (l**2 * lam),
        "residual_cross": ce * inp.b_K * A / (4.0 * l * lam),
        "noise": ce * inp.b_K * inp.M**2 / (l**2 * lam),
        "effective_dim": ce * inp.Sigma**2 * Ndim / l,
    }


def theorem1_constraints(inp: BoundInputs, Ndim: float, t_norm: Optional[float] = None):
    ce = c_eta(inp.eta)
    h = inp.h
    l_need = 2.0 * ce * inp.b_K * Ndim / inp.lam
    n_need = (
        (1.0 + math.sqrt(math.log(inp.l) + inp.delta)) ** 2
        * 2.0 ** ((h + 6.0) / h)
        * inp.b_k
        * inp.b_K ** (1.0 / h)
        * inp.L ** (2.0 / h)
        / inp.lam ** (2.0 / h)
    )
    out = [Constraint("l_min", inp.l >= l_need, inp.l - l_need)]
    if t_norm is None:
        out.append(Constraint("lambda_le_T_norm", None, math.nan, proxy=True))
    else:
        out.append(Constraint("lambda_le_T_norm", inp.lam <= t_norm, t_norm - inp.lam, proxy=True))
    out.append(Constraint("N_min", inp.N >= n_need, inp.N - n_need))
    return out


def theorem1_bound(
    inp: BoundInputs, A: float, B: float, Ndim: float, t_norm: Optional[float] = None
) -> BoundReport:
    """Evaluate the excess-risk bound and its three side conditions.

    ``A``, ``B`` and ``Ndim`` are the residual, reconstruction error and
    effective dimension at ``inp.lam``; they come either from the prior
    class forms or from empirical estimates. ``t_norm`` is an estimate of
    the covariance operator norm (see :func:`operator_norm_proxy`); the
    corresponding constraint is advisory and left unchecked if omitted.
    """
    if min(A, B, Ndim) < 0:
        raise ValueError("A, B and Ndim must be nonnegative")
    terms = theorem1_terms(inp, A, B, Ndim)
    total = 5.0 * math.fsum(terms.values())
    return BoundReport(total, terms, theorem1_constraints(inp, Ndim, t_norm))


def class_bound(inp: BoundInputs, p: PriorClassParams, t_norm: Optional[float] = None) -> BoundReport:
    """The bound specialized to the prior class; ``inp.M`` and ``inp.Sigma`` are taken from ``p``."""
    from dataclasses import replace

    inp = replace(inp, M=p.M, Sigma=p.Sigma)
    lam = inp.lam
    return theorem1_bound(
        inp, residual_A(p, lam), reconstruction_B(p, lam), effective_dim_class(p, lam), t_norm
    )


# -- rate function and table -----------------------------------------------


@dataclass(frozen=True)
class RateValue:
    terms: Tuple[float, float, float, float]
    satisfied: bool

    @property
    def value(self) -> float:
        return math.fsum(self.terms)


def rate_terms(l: float, N: float, lam: float, b: float, c: float, h: float):
    ib = 1.0 / b
    return (
        math.log(l) ** h / (N**h * lam**3),
        lam**c,
        1.0 / (l**2 * lam),
        1.0 / (l * lam**ib),
    )


def rate_function_r(l: float, N: float, lam: float, b: float, c: float, h: float) -> RateValue:
    """The four-term proxy ``r(l, N, lam)`` and its side condition ``l >= lam^(-1/b - 1)``."""
    if not l > 1:
        raise ValueError("l must exceed 1 so that log(l) > 0")
    terms = rate_terms(l, N, lam, b, c, h)
    return RateValue(terms, l >= lam ** (-1.0 / b - 1.0))


# pair of term indices (0-based) matched in each row
MATCHED_TERMS = {1: (0, 1), 2: (0, 2), 3: (0, 3), 4: (1, 2), 5: (1, 3), 6: (2, 3)}


@dataclass(frozen=True)
class RateRowResult:
    row: int
    convergence: bool
    dominance: bool
    rate: str
    n_exponent: Optional[float] = None
    log_exponent: Optional[float] = None
    failed: Tuple[str, ...] = ()

    @property
    def never(self) -> bool:
        return self.rate == NEVER


def _conditions(row: int, a: float, b: float, c: float, h: float):
    """Convergence and dominance conditions as lists of ``(label, holds)``."""
    ib = 1.0 / b
    bp1_b = 1.0 + ib  # (b + 1) / b
    if row == 1:
        conv = [
            ("max(h/((c+3)min(2,b)), h(b+1)/((c+3)b)) <= a",
             max(h / ((c + 3) * min(2.0, b)), h * bp1_b / (c + 3)) <= a)
        ]
        dom = [
            ("max(h(1/b+c)/(c+3), h(b+1)/((c+3)b)) <= a",
             max(h * (ib + c) / (c + 3), h * bp1_b / (c + 3)) <= a)
        ]
    elif row == 2:
        lo_conv = max(h / 6, h * ib / (2 * (1 + ib)), h * bp1_b / (2 * (2 + ib)))
        lo_dom = max(h / 6, h * bp1_b / (2 * (2 + ib)))
        hi_dom = min(h / 2 - h / (c + 3), (h / 2) * (ib - 1) / (ib - 2))
        conv = [("max(h/6, h/(2(b+1)), h(b+1)/(2(2b+1))) <= a", lo_conv <= a), ("a < h/2", a < h / 2)]
        dom = [
            ("max(h/6, h(b+1)/(2(2b+1))) <= a", lo_dom <= a),
            ("a < min(h/2 - h/(c+3), (h/2)(1/b-1)/(1/b-2))", a < hi_dom),
        ]
    elif row == 3:
        lo_conv = max(h / (7 - 2 * ib), h * ib / 3, h * bp1_b / 4)
        lo_dom = max(h * (1 - ib) / (4 - 2 * ib), h * ib / 3, h * bp1_b / 4)
        hi_dom = h * (c + ib) / (3 + c)
        conv = [("max(hb/(7b-2), h/(3b), h(b+1)/(4b)) <= a", lo_conv <= a), ("a < h", a < h)]
        dom = [
            ("max(h(b-1)/(4b-2), h/(3b), h(b+1)/(4b)) <= a", lo_dom <= a),
            ("a < h(bc+1)/(3b+bc)", a < hi_dom),
        ]
    elif row == 4:
        conv = [("a < h(c+1)/6", a < h * (c + 1) / 6), ("1 > 2(b+1)/((c+1)b)", 1 > 2 * bp1_b / (c + 1))]
        dom = [("never", False)]
    elif row == 5:
        side = 1 > bp1_b / (c + ib)  # 1 > (b+1)/(bc+1)
        conv = [("a < h(bc+1)/(3b)", a < h * (c + ib) / 3), ("1 > (b+1)/(bc+1)", side)]
        dom = [("a < h(bc+1)/(3b+bc)", a < h * (c + ib) / (3 + c)), ("1 > (b+1)/(bc+1)", side)]
    elif row == 6:
        conv = [("never", False)]
        dom = [("never", False)]
    else:
        raise ValueError(f"row must be in 1..6, got {row}")
    return conv, dom


def _rate(row: int, a: float, b: float, c: float, h: float):
    """``(expression, N exponent p, log exponent q)`` for ``log^q(N) / N^p``."""
    ib = 1.0 / b
    if row == 1:
        e = h * c / (c + 3)
        return "[log(N)/N]^(hc/(c+3))", e, e
    if row == 2:
        return "1/(N^(3a-h/2) log^(h/2)(N))", 3 * a - h / 2, -h / 2
    if row == 3:
        # 1/(3b-1) written as (1/b)/(3-1/b)
        k = ib / (3 - ib)
        return "1/(N^(a+(a-h)/(3b-1)) log^(h/(3b-1))(N))", a + (a - h) * k, -h * k
    if row == 5:
        return "1/N^(abc/(bc+1))", a * c / (c + ib), 0.0
    return NEVER, None, None


def rate_row(row: int, a: float, b: float, c: float, h: float) -> RateRowResult:
    _check_rate_args(a, b, c, h)
    conv, dom = _conditions(row, a, b, c, h)
    expr, p, q = _rate(row, a, b, c, h)
    failed = tuple(label for label, ok in dom if not ok)
    return RateRowResult(
        row,
        all(ok for _, ok in conv),
        all(ok for _, ok in dom),
        expr,
        p,
        q,
        failed,
    )


def _check_rate_args(a, b, c, h):
    if not a > 0:
        raise ValueError("a must be positive")
    if not b > 1:
        raise ValueError("b must exceed 1")
    if not 1 <= c <= 2:
        raise ValueError("c must lie in [1, 2]")
    if not 0 < h <= 1:
        raise ValueError("h must lie in (0, 1]")


def rate_table(a: float, b: float, c: float, h: float) -> List[RateRowResult]:
    """All six rows of the convergence table evaluated at ``l = N^a``."""
    return [rate_row(r, a, b, c, h) for r in range(1, 7)]


def lambda_schedule(row: int, N: float, a: float, b: float, c: float, h: float) -> Optional[float]:
    """``lam(N)`` equating the row's two matched terms of ``r`` with ``l = N^a``.

    Returns ``None`` when the row's dominance condition fails (always for
    rows 4 and 6).
    """
    res = rate_row(row, a, b, c, h)
    if not res.dominance:
        return None
    ib = 1.0 / b
    l = float(N) ** a
    logterm = math.log(l) ** h
    if row == 1:
        return (logterm / N**h) ** (1.0 / (c + 3))
    if row == 2:
        return l * math.sqrt(logterm / N**h)
    if row == 3:
        return (l * logterm / N**h) ** (1.0 / (3.0 - ib))
    if row == 5:
        return l ** (-1.0 / (c + ib))
    return None
