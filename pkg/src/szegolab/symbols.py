"""Scalar symbols ``a``, test functions ``phi`` and their compositions ``gamma = phi o a``.

A :class:`Symbol` bundles a vectorized function, its analytic derivative (or
``None`` when it has none), the interval on which it may be evaluated, a
known bound on its values, and a smoothness tag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.special import expit, xlogy

__all__ = [
    "Symbol",
    "FourierDecay",
    "fermi",
    "renyi",
    "von_neumann",
    "identity_symbol",
    "constant_symbol",
    "polynomial",
    "resolvent",
    "log_shift",
    "indicator",
    "compose",
    "linear_combination",
    "symbol_from_dict",
    "fourier_decay_probe",
]

INF = math.inf
# slack allowed when eigenvalues of a restriction stray past a closed domain edge
DOMAIN_SLACK = 1e-9

_SMOOTHNESS_RANK = {"discontinuous": 0, "fourier": 1, "analytic": 2}


@dataclass(frozen=True)
class Symbol:
    name: str
    func: Callable = field(repr=False)
    deriv: Callable | None = field(default=None, repr=False)
    domain: tuple[float, float] = (-INF, INF)
    value_range: tuple[float, float] = (-INF, INF)
    smoothness: str = "analytic"
    theta: float = INF
    excluded: tuple[float, ...] = ()
    # coefficients (lowest degree first) when the symbol is a polynomial
    poly: tuple[float, ...] | None = None
    spec: dict | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.smoothness not in _SMOOTHNESS_RANK:
            raise ValueError(f"unknown smoothness tag {self.smoothness!r}")

    def _check(self, x: np.ndarray) -> np.ndarray:
        lo, hi = self.domain
        if np.any(x < lo - DOMAIN_SLACK) or np.any(x > hi + DOMAIN_SLACK):
            raise ValueError(f"{self.name}: argument outside domain [{lo}, {hi}]")
        if math.isfinite(lo) or math.isfinite(hi):
            x = np.clip(x, lo, hi)
        return x

    def __call__(self, x):
        x = self._check(np.asarray(x, dtype=float))
        return self.func(x)

    evaluate = __call__

    @property
    def has_derivative(self) -> bool:
        return self.deriv is not None

    def derivative(self, x):
        if self.deriv is None:
            raise ValueError(f"{self.name} has no derivative ({self.smoothness})")
        x = self._check(np.asarray(x, dtype=float))
        return self.deriv(x)

    def validate_on(self, lo: float, hi: float) -> None:
        """Raise unless the symbol is well defined on all of ``[lo, hi]``."""
        dlo, dhi = self.domain
        if lo < dlo - DOMAIN_SLACK or hi > dhi + DOMAIN_SLACK:
            raise ValueError(f"{self.name} is undefined on part of [{lo:g}, {hi:g}] (domain [{dlo:g}, {dhi:g}])")
        for x0 in self.excluded:
            if lo <= x0 <= hi:
                raise ValueError(f"{self.name} is singular at {x0:g}, inside [{lo:g}, {hi:g}]")

    def bounds_on(self, lo: float, hi: float, n: int = 2001) -> tuple[float, float]:
        """Range of the symbol over ``[lo, hi]``: declared bound when finite, else a grid estimate."""
        rlo, rhi = self.value_range
        if math.isfinite(rlo) and math.isfinite(rhi):
            return rlo, rhi
        self.validate_on(lo, hi)
        vals = self(np.linspace(lo, hi, n))
        return float(np.min(vals)), float(np.max(vals))


def _spec(kind, **kw):
    return {"kind": kind, **kw}


def fermi(beta: float, fermi_energy: float = 0.0) -> Symbol:
    """Fermi distribution ``(exp(beta (x - E_F)) + 1)^-1``."""
    if not beta > 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    beta = float(beta)
    ef = float(fermi_energy)

    def f(x):
        return expit(-beta * (x - ef))

    def df(x):
        n = f(x)
        return -beta * n * (1.0 - n)

    return Symbol(f"fermi(beta={beta:g}, E_F={ef:g})", f, df, value_range=(0.0, 1.0),
                  spec=_spec("fermi", beta=beta, fermi_energy=ef))


def von_neumann() -> Symbol:
    """Binary entropy ``-x log2 x - (1-x) log2(1-x)`` on ``[0, 1]``, with ``0 log 0 = 0``."""

    def f(x):
        return -(xlogy(x, x) + xlogy(1.0 - x, 1.0 - x)) / math.log(2.0)

    def df(x):
        with np.errstate(divide="ignore"):
            return np.log2(1.0 - x) - np.log2(x)

    return Symbol("von_neumann", f, df, domain=(0.0, 1.0), value_range=(0.0, 1.0),
                  spec=_spec("von_neumann"))


def renyi(alpha: float) -> Symbol:
    """Renyi entropy function ``(1-alpha)^-1 log2(x^alpha + (1-x)^alpha)`` on ``[0, 1]``.

    ``alpha == 1`` returns :func:`von_neumann`. The function is analytic on the
    open interval; for non-integer ``alpha`` it is singular at the endpoints,
    which compositions with :func:`fermi` never reach.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    alpha = float(alpha)
    if alpha == 1.0:
        return von_neumann()
    scale = 1.0 / ((1.0 - alpha) * math.log(2.0))

    def f(x):
        s = x**alpha + (1.0 - x) ** alpha
        return scale * np.log(s)

    def df(x):
        with np.errstate(divide="ignore"):
            num = x ** (alpha - 1.0) - (1.0 - x) ** (alpha - 1.0)
        return scale * alpha * num / (x**alpha + (1.0 - x) ** alpha)

    return Symbol(f"renyi(alpha={alpha:g})", f, df, domain=(0.0, 1.0), value_range=(0.0, 1.0),
                  spec=_spec("renyi", alpha=alpha))


def polynomial(coeffs: Sequence[float], name: str | None = None) -> Symbol:
    """``sum_k coeffs[k] x**k``."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    if c.size == 0:
        c = np.zeros(1)
    dc = P.polyder(c) if c.size > 1 else np.zeros(1)
    rng = (float(c[0]), float(c[0])) if c.size == 1 else (-INF, INF)
    return Symbol(name or f"polynomial{tuple(c.tolist())}", lambda x: P.polyval(x, c),
                  lambda x: P.polyval(x, dc) + np.zeros_like(x), value_range=rng,
                  poly=tuple(c.tolist()), spec=_spec("polynomial", coeffs=c.tolist()))


def identity_symbol() -> Symbol:
    s = polynomial([0.0, 1.0], name="identity")
    return Symbol("identity", s.func, s.deriv, poly=s.poly, spec=_spec("identity"))


def constant_symbol(c: float) -> Symbol:
    s = polynomial([float(c)], name=f"constant({float(c):g})")
    return Symbol(s.name, s.func, s.deriv, value_range=(float(c), float(c)), poly=(float(c),),
                  spec=_spec("constant", value=float(c)))


def resolvent(x0: float) -> Symbol:
    """``(x - x0)^-1``; ``x0`` must stay outside the spectral interval."""
    x0 = float(x0)
    return Symbol(f"resolvent(x0={x0:g})", lambda x: 1.0 / (x - x0), lambda x: -1.0 / (x - x0) ** 2,
                  excluded=(x0,), spec=_spec("resolvent", x0=x0))


def log_shift(x0: float) -> Symbol:
    """``log(x - x0)``, defined for ``x > x0``."""
    x0 = float(x0)
    return Symbol(f"log_shift(x0={x0:g})", lambda x: np.log(x - x0), lambda x: 1.0 / (x - x0),
                  domain=(x0, INF), excluded=(x0,), spec=_spec("log_shift", x0=x0))


def indicator(E: float) -> Symbol:
    """``1`` for ``x <= E``, else ``0``; traces count eigenvalues not exceeding ``E``."""
    E = float(E)
    return Symbol(f"indicator(E={E:g})", lambda x: (x <= E).astype(float), None,
                  value_range=(0.0, 1.0), smoothness="discontinuous", theta=0.0,
                  spec=_spec("indicator", E=E))


def _weaker(s1: Symbol, s2: Symbol) -> tuple[str, float]:
    tag = min(s1.smoothness, s2.smoothness, key=_SMOOTHNESS_RANK.__getitem__)
    return tag, min(s1.theta, s2.theta)


def compose(phi: Symbol, a: Symbol) -> Symbol:
    """``phi o a`` with chain-rule derivative."""
    alo, ahi = a.value_range
    plo, phi_hi = phi.domain
    if alo < plo - DOMAIN_SLACK or ahi > phi_hi + DOMAIN_SLACK:
        raise ValueError(f"range [{alo:g}, {ahi:g}] of {a.name} is not inside the domain "
                         f"[{plo:g}, {phi_hi:g}] of {phi.name}")
    for x0 in phi.excluded:
        if alo <= x0 <= ahi:
            raise ValueError(f"{phi.name} is singular at {x0:g}, inside the range of {a.name}")
    tag, theta = _weaker(phi, a)
    poly = None
    if phi.poly is not None and a.poly is not None:
        poly = tuple(np.trim_zeros(P.polyval(P.Polynomial(a.poly), phi.poly).coef, "b").tolist() or [0.0])
    if phi.deriv is not None and a.deriv is not None:
        def deriv(x):
            return phi.derivative(a(x)) * a.deriv(x)
    else:
        deriv = None
    return Symbol(f"{phi.name}∘{a.name}", lambda x: phi(a(x)), deriv, domain=a.domain,
                  value_range=phi.value_range, smoothness=tag, theta=theta,
                  excluded=a.excluded, poly=poly,
                  spec={"kind": "compose", "phi": phi.spec, "a": a.spec})


def linear_combination(terms: Sequence[tuple[float, Symbol]]) -> Symbol:
    """``sum_i c_i s_i`` over a common domain."""
    terms = list(terms)
    lo = max(s.domain[0] for _, s in terms)
    hi = min(s.domain[1] for _, s in terms)
    has_d = all(s.deriv is not None for _, s in terms)
    tag = min((s.smoothness for _, s in terms), key=_SMOOTHNESS_RANK.__getitem__)
    return Symbol(
        " + ".join(f"{c:g}*{s.name}" for c, s in terms),
        lambda x: sum(c * s(x) for c, s in terms),
        (lambda x: sum(c * s.derivative(x) for c, s in terms)) if has_d else None,
        domain=(lo, hi), smoothness=tag,
        excluded=tuple(x0 for _, s in terms for x0 in s.excluded),
    )


def symbol_from_dict(spec: dict) -> Symbol:
    """Build a symbol from a config mapping, e.g. ``{"kind": "fermi", "beta": 3.0}``."""
    kind = spec.get("kind")
    if kind == "fermi":
        return fermi(spec["beta"], spec.get("fermi_energy", 0.0))
    if kind == "renyi":
        return renyi(spec["alpha"])
    if kind == "von_neumann":
        return von_neumann()
    if kind == "identity":
        return identity_symbol()
    if kind == "constant":
        return constant_symbol(spec["value"])
    if kind == "polynomial":
        return polynomial(spec["coeffs"])
    if kind == "resolvent":
        return resolvent(spec["x0"])
    if kind == "log_shift":
        return log_shift(spec["x0"])
    if kind == "indicator":
        return indicator(spec["E"])
    if kind == "compose":
        return compose(symbol_from_dict(spec["phi"]), symbol_from_dict(spec["a"]))
    raise ValueError(f"unknown symbol kind {kind!r}")


@dataclass
class FourierDecay:
    exponent: float | None
    residual: float | None
    status: str
    frequencies: np.ndarray = field(repr=False)
    magnitudes: np.ndarray = field(repr=False)


def _smooth_step(t):
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def fourier_decay_probe(s: Symbol, extension_window: tuple[float, float] = (-4.0, 4.0),
                        grid_size: int = 2**14, taper: float = 0.1, floor: float = 1e-13) -> FourierDecay:
    """Estimate the polynomial decay exponent of the Fourier transform of a smooth extension.

    The symbol is blended, with a C-infinity plateau window occupying all but
    ``taper`` of the window on each side, into the constant average of its two
    endpoint values, which makes the sampled function smooth and periodic on the
    window. Discrete Fourier magnitudes above ``floor`` (relative) are fitted
    on a log-log scale; the exponent is minus the slope.
    """
    lo, hi = extension_window
    x = lo + (hi - lo) * np.arange(grid_size) / grid_size
    fx = np.asarray(s(x), dtype=float)
    if not np.all(np.isfinite(fx)):
        raise ValueError(f"{s.name} is not finite on the extension window")
    edge = 0.5 * (float(s(np.array([lo]))[0]) + float(s(np.array([hi]))[0]))
    t = (x - lo) / (hi - lo)
    w = _smooth_step(t / taper) * _smooth_step((1.0 - t) / taper)
    g = edge + w * (fx - edge)
    mags = np.abs(np.fft.rfft(g)) / grid_size
    k = np.arange(len(mags))
    scale = max(float(np.max(np.abs(g))), 1e-300)
    above = mags[1:] > floor * scale
    if not np.any(above):
        return FourierDecay(INF, 0.0, "flat", k, mags)
    stop = 1 + (np.argmin(above) if not np.all(above) else len(above))
    kk, mm = k[1:stop], mags[1:stop]
    keep = mm > 0
    kk, mm = kk[keep], mm[keep]
    if s.smoothness == "discontinuous" or len(kk) < 3:
        if len(kk) >= 3:
            slope, _ = np.polyfit(np.log(kk), np.log(mm), 1)
            return FourierDecay(-slope, None, "no polynomial decay", k, mags)
        return FourierDecay(None, None, "no polynomial decay" if s.smoothness == "discontinuous" else "flat", k, mags)
    coef, res, *_ = np.polyfit(np.log(kk), np.log(mm), 1, full=True)
    resid = math.sqrt(float(res[0]) / len(kk)) if len(res) else 0.0
    return FourierDecay(-float(coef[0]), resid, "decaying", k, mags)
