"""Unitary cocycles, Connes cocycles and the holomorphic dimension.

A cocycle here is always relative to an inner dynamics ``Ad e^{itK}``.
Every cocycle of such a dynamics has the form

    u(t) = e^{it(K+k)} e^{-itK},      k = -i u'(0),

so it is fixed by its generator ``K`` and its shift ``k``.  The kinds below
keep their own closed-form complex-time evaluators; the shift is stored
alongside because the free energy needs it.

Parameterizations
-----------------
Physical cocycles of α_t = Ad e^{itH} with a β-Gibbs state are continued to
``z = iβ``.  Modular cocycles of σ^φ_t = Ad D_φ^{it} are continued to
``z = -i``.  The two are related by σ^φ_t = α_{-βt}.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .qsys import (Dynamics, Element, State, exp_i, hermitian_function, log_h)

Evaluator = Callable[[complex], Element]

RICHARDSON_STEP = 1e-5


def complex_power(d: Element, z: complex) -> Element:
    """D^{z} for a positive definite element, entire in z."""
    return hermitian_function(d, lambda w: np.exp(z * np.log(w)))


@dataclass(frozen=True, eq=False)
class UnitaryCocycle:
    """A cocycle for Ad e^{itK} with a closed-form evaluator u(z).

    ``evaluator`` is None for sampled families; those are continued through
    their numerically estimated generator shift (see ``continue_sampled``).
    """

    kind: str
    generator: Element
    point: complex
    evaluator: Evaluator | None
    shift: Element | None
    sampler: Callable[[float], Element] | None = None
    factors: tuple[UnitaryCocycle, ...] = ()
    params: dict = field(default_factory=dict)

    @property
    def algebra(self):
        return self.generator.algebra

    @property
    def beta(self) -> float:
        """The inverse temperature encoded by the continuation point iβ."""
        return (self.point / 1j).real

    def __call__(self, z: complex) -> Element:
        if self.evaluator is not None:
            return self.evaluator(z)
        if abs(complex(z).imag) > 0:
            return continue_sampled(self)[0](z)
        return self.sampler(float(complex(z).real))

    def alpha(self, x: Element, z: complex) -> Element:
        return exp_i(self.generator, z) @ x @ exp_i(self.generator, -z)

    def perturbed_generator(self) -> Element:
        """K + k, generator of the perturbed dynamics Ad u(t)∘α_t."""
        return self.generator + derivative_shift(self)[0]

    def __mul__(self, other: UnitaryCocycle) -> UnitaryCocycle:
        return composite([self, other])


def derivative_shift(u: UnitaryCocycle) -> tuple[Element, float]:
    """k = -i u'(0) and an error estimate.

    Closed forms give the shift exactly (error 0).  Otherwise the central
    difference with step 1e-5 is Richardson-extrapolated once.
    """
    if u.shift is not None:
        return u.shift, 0.0
    h = RICHARDSON_STEP

    def central(step):
        return (u(step) - u(-step)) * (1 / (2 * step))

    d1, d2 = central(h), central(h / 2)
    rich = (d2 * 4 - d1) * (1 / 3)
    k = rich * (-1j)
    k = (k + k.adj()) * 0.5
    return k, (rich - d2).norm()


def continue_sampled(u: UnitaryCocycle, tol: float = 1e-6) -> tuple[Evaluator, float]:
    """Entire continuation of a sampled cocycle through its generator shift.

    The error estimate combines the Richardson estimate with the misfit of
    the reconstruction at a few real sample times; a misfit above ``tol``
    means the samples do not come from a cocycle of the stated dynamics.
    """
    k, err = derivative_shift(u)
    kk = u.generator + k

    def ev(z):
        return exp_i(kk, z) @ exp_i(u.generator, -z)

    for t in (0.1, 0.5, 1.0):
        err = max(err, (ev(t) - u.sampler(t)).norm())
    if err > tol:
        raise DomainError(f"continuation of sampled cocycle did not converge (error {err:.3g})", err)
    return ev, err


def phase_cocycle(c: float, generator: Element, point: complex) -> UnitaryCocycle:
    """u(t) = e^{ict}·1."""
    alg = generator.algebra
    return UnitaryCocycle(
        "phase", generator, point,
        lambda z: alg.scalar(cmath.exp(1j * c * z)),
        alg.scalar(c), params={"c": float(c)})


def phase(c: float, dyn: Dynamics) -> UnitaryCocycle:
    return phase_cocycle(c, dyn.H, 1j * dyn.beta)


def conjugation(v: Element, dyn: Dynamics) -> UnitaryCocycle:
    """u(t) = v α_t(v*), the cocycle carrying α to Ad v∘α∘Ad v*."""
    if (v.adj() @ v - v.algebra.identity()).norm() > 1e-9:
        raise DomainError("conjugation cocycle needs a unitary")
    H = dyn.H
    return UnitaryCocycle(
        "conjugation", H, 1j * dyn.beta,
        lambda z: v @ exp_i(H, z) @ v.adj() @ exp_i(H, -z),
        v @ H @ v.adj() - H, params={"v": v})


def perturbation(dyn: Dynamics, H1: Element) -> UnitaryCocycle:
    """u(t) = e^{itH₁} e^{-itH₀} for the dynamics generated by H₀."""
    if not H1.is_hermitian():
        raise DomainError("perturbed Hamiltonian is not Hermitian")
    H0 = dyn.H
    return UnitaryCocycle(
        "perturbation", H0, 1j * dyn.beta,
        lambda z: exp_i(H1, z) @ exp_i(H0, -z),
        H1 - H0, params={"H1": H1})


def connes_cocycle(psi: State, phi: State, beta: float | None = None,
                   dynamics: Dynamics | None = None) -> UnitaryCocycle:
    """(Dψ:Dφ) in the modular or the physical parameterization.

    With neither ``beta`` nor ``dynamics`` the result is t ↦ D_ψ^{it}D_φ^{-it},
    a σ^φ-cocycle continued to -i.  Otherwise it is t ↦ (Dψ:Dφ)_{-t/β}, a
    cocycle of α_t = σ^φ_{-t/β} continued to iβ.
    """
    psi.require_faithful("ψ")
    phi.require_faithful("φ")
    if psi.algebra != phi.algebra:
        raise DomainError("states live in different algebras")
    dpsi, dphi = psi.density(), phi.density()
    lpsi, lphi = log_h(dpsi), log_h(dphi)
    if dynamics is None and beta is None:
        return UnitaryCocycle(
            "connes", lphi, -1j,
            lambda z: complex_power(dpsi, 1j * z) @ complex_power(dphi, -1j * z),
            lpsi - lphi, params={"parameterization": "modular"})
    if dynamics is not None:
        beta = dynamics.beta
        K = dynamics.H
        if not (log_h(dphi) * (-1 / beta) - K).is_central(1e-8):
            raise DomainError("φ is not the Gibbs state of the supplied dynamics")
    else:
        if not beta > 0:
            raise DomainError("inverse temperature must be positive")
        K = lphi * (-1 / beta)
    return UnitaryCocycle(
        "connes", K, 1j * beta,
        lambda z: complex_power(dpsi, -1j * z / beta) @ complex_power(dphi, 1j * z / beta),
        (lpsi - lphi) * (-1 / beta), params={"parameterization": "physical", "beta": beta})


def composite(factors: Sequence[UnitaryCocycle], tol: float = 1e-8) -> UnitaryCocycle:
    """Pointwise product u₁(z)u₂(z)…, multiplied left to right.

    The product is a cocycle when each factor is a cocycle for the dynamics
    perturbed by everything to its right; this is checked up to central
    terms, which do not change Ad.
    """
    factors = tuple(factors)
    if not factors:
        raise DomainError("empty composite")
    for left, right in zip(factors, factors[1:]):
        gap = left.generator - right.perturbed_generator()
        if not gap.is_central(tol):
            raise DomainError("composite factors are not chained: a factor is not a cocycle "
                              "for the dynamics perturbed by the factors to its right", gap.norm())
        if abs(left.point - right.point) > 1e-12:
            raise DomainError("composite factors use different continuation points")

    def ev(z):
        out = factors[0](z)
        for f in factors[1:]:
            out = out @ f(z)
        return out

    closed = all(f.evaluator is not None for f in factors)
    shift = None
    if all(f.shift is not None for f in factors):
        shift = factors[0].shift
        for f in factors[1:]:
            shift = shift + f.shift
    return UnitaryCocycle("composite", factors[-1].generator, factors[-1].point,
                          ev if closed else None, shift,
                          sampler=None if closed else (lambda t: ev(t)), factors=factors)


def sampled(fn: Callable[[float], Element], dyn: Dynamics) -> UnitaryCocycle:
    """A cocycle known only through real-time samples."""
    return UnitaryCocycle("sampled", dyn.H, 1j * dyn.beta, None, None, sampler=fn)


def transformed(u: UnitaryCocycle, f: Callable[[Element], Element], kind: str,
                shift: Element | None, generator: Element | None = None) -> UnitaryCocycle:
    """The cocycle z ↦ f(u(z)) for a *-homomorphism-like map ``f``."""
    return UnitaryCocycle(kind, u.generator if generator is None else generator, u.point,
                          lambda z: f(u(z)), shift, params={"base": u.kind})


def eval_complex(u: UnitaryCocycle, phi: State, z: complex) -> complex:
    """φ(u(z))/φ(1)."""
    if phi.algebra != u.algebra:
        raise DomainError("state and cocycle live in different algebras")
    return phi(u(z)) / phi.weight


@dataclass(frozen=True)
class HolomorphicDimensionResult:
    value: complex
    point: complex
    modulus: float
    kms_residual: float
    warning: str | None = None

    @property
    def real(self) -> float:
        return self.value.real


def kms_residual(phi: State, K: Element, beta: float) -> float:
    """Distance of D_φ e^{βK} from the center, relative to its size.

    Zero exactly when φ is β-KMS for Ad e^{itK}; β may be negative, which
    covers the modular parameterization (β = -1, K = log D_φ).
    """
    x = phi.density() @ hermitian_function(K, lambda w: np.exp(beta * (w - (w.max() if beta > 0 else w.min()))))
    worst = 0.0
    for a in x.blocks:
        n = len(a)
        off = a - (np.trace(a) / n) * np.eye(n)
        worst = max(worst, float(np.linalg.norm(off) / max(np.linalg.norm(a), 1e-300)))
    return worst


def holomorphic_dimension(u: UnitaryCocycle, phi: State, beta: float | None = None,
                          tol: float = 1e-9) -> HolomorphicDimensionResult:
    """d_φ(u): the continuation of φ(u(t))/φ(1) to iβ (or to u's own point)."""
    z = u.point if beta is None else 1j * beta
    b = (z / 1j).real
    value = eval_complex(u, phi, z)
    res = kms_residual(phi, u.generator, b)
    warning = None
    if res > tol:
        warning = f"state is not KMS for the cocycle's dynamics at β={b:g} (residual {res:.3g})"
    return HolomorphicDimensionResult(value, z, abs(value), res, warning)


def cocycle_identity_residual(u: UnitaryCocycle, t: float, s: float) -> float:
    """‖u(t+s) − u(t) α_t(u(s))‖."""
    return (u(t + s) - u(t) @ u.alpha(u(s), t)).norm()


def unitarity_residual(u: UnitaryCocycle, t: float) -> float:
    x = u(t)
    return (x.adj() @ x - x.algebra.identity()).norm()


def generator_form_residual(u: UnitaryCocycle, t: complex) -> float:
    """‖u(t) − e^{it(K+k)}e^{-itK}‖ for the stored shift."""
    kk = u.perturbed_generator()
    return (u(t) - exp_i(kk, t) @ exp_i(u.generator, -t)).norm()


def scalar_log(value: complex, what: str = "holomorphic dimension", tol: float = 1e-9) -> float:
    """log of a value that should be real positive."""
    if abs(value.imag) > tol * max(1.0, abs(value)) or value.real <= 0:
        raise DomainError(f"{what} {value} is not real positive")
    return math.log(value.real)
