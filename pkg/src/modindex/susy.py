"""Graded finite systems, indices, super-KMS functionals and JLO cochains.

A graded system is a Hilbert space ℂ^N with grading Γ = diag(±1) and an
odd Hermitian supercharge Q; its Hamiltonian is H = Q².  The algebra is
M_N with grading γ = Ad Γ and superderivation δa = Qa − γ(a)Q.

Conventions, all with α_t = Ad e^{itH}:

* super-KMS functional: φ(a) = Tr(Γ e^{-βH} a)/Z; the graded KMS condition
  is checked as φ(a α_{t+iβ}(b)) = φ(α_t(b) γ(a)).
* JLO: τ_n(a_0,…,a_n) = ∫_{Σ_n} φ(a_0 α_{is_1}(δa_1^γ) α_{is_1+is_2}(δa_2) …)
  at β = 1, i.e. Str(a_0 e^{-s_0H} x_1 e^{-s_1H} … x_n e^{-s_nH})/Z with
  x_k = δ(γ^k(a_k)).  No extra degree sign is applied by default; with it
  the cochain satisfies (b − B)τ = 0 instead of (b + B)τ = 0.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from . import cocycle as cc
from .charge import abelian, covariance_cocycle
from .errors import DomainError
from .qsys import Dynamics, Element, MatrixAlgebra, State

ODD_TOL = 1e-12
MAX_JLO_DEGREE = 6


@dataclass(frozen=True, eq=False)
class GradedSystem:
    gamma: np.ndarray
    Q: np.ndarray
    name: str = ""

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float).ravel()
        if g.size == 0 or not np.all(np.isin(g, (-1.0, 1.0))):
            raise DomainError("grading entries must be ±1")
        Q = np.asarray(self.Q, dtype=complex)
        if Q.shape != (g.size, g.size):
            raise DomainError(f"supercharge shape {Q.shape} does not match grading length {g.size}")
        scale = max(1.0, float(np.abs(Q).max()))
        if np.abs(Q - Q.conj().T).max() > ODD_TOL * scale:
            raise DomainError("supercharge is not Hermitian")
        G = np.diag(g)
        odd = float(np.abs(G @ Q + Q @ G).max())
        if odd > ODD_TOL * scale:
            raise DomainError("supercharge does not anticommute with the grading", odd)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "Q", Q)

    @property
    def dim(self) -> int:
        return self.gamma.size

    @property
    def Gamma(self) -> np.ndarray:
        return np.diag(self.gamma).astype(complex)

    @property
    def H(self) -> np.ndarray:
        return self.Q @ self.Q

    @property
    def plus(self) -> np.ndarray:
        return np.flatnonzero(self.gamma > 0)

    @property
    def minus(self) -> np.ndarray:
        return np.flatnonzero(self.gamma < 0)

    @property
    def Q_plus(self) -> np.ndarray:
        """Q_+ : H_+ → H_−."""
        return self.Q[np.ix_(self.minus, self.plus)]

    @property
    def Q_minus(self) -> np.ndarray:
        """Q_− : H_− → H_+."""
        return self.Q[np.ix_(self.plus, self.minus)]

    @property
    def algebra(self) -> MatrixAlgebra:
        return MatrixAlgebra((self.dim,))

    def element(self, m: np.ndarray) -> Element:
        return self.algebra.element([m])

    def dynamics(self, beta: float = 1.0) -> Dynamics:
        return Dynamics(self.element(self.H), beta)

    def grade(self, a: np.ndarray) -> np.ndarray:
        """γ(a) = ΓaΓ."""
        return self.gamma[:, None] * a * self.gamma[None, :]

    def delta(self, a: np.ndarray) -> np.ndarray:
        """δa = Qa − γ(a)Q."""
        return self.Q @ a - self.grade(a) @ self.Q

    def parity(self, a: np.ndarray, tol: float = 1e-12) -> str:
        g = self.grade(a)
        scale = max(1.0, float(np.abs(a).max()))
        if np.abs(g - a).max() <= tol * scale:
            return "even"
        if np.abs(g + a).max() <= tol * scale:
            return "odd"
        return "mixed"

    def supertrace(self, x: np.ndarray) -> complex:
        return complex(np.sum(self.gamma * np.diag(x)))

    def rescaled(self, beta: float) -> GradedSystem:
        """Q → √β Q, so that β-quantities become β = 1 quantities."""
        return GradedSystem(self.gamma, math.sqrt(beta) * self.Q, self.name)

    def to_json(self) -> dict:
        from .jsonio import dump_matrix
        return {"gamma": [int(x) for x in self.gamma], "Q": dump_matrix(self.Q)}

    @classmethod
    def from_json(cls, doc: dict, name: str = "") -> GradedSystem:
        from .jsonio import parse_matrix
        try:
            gamma, Q = doc["gamma"], doc["Q"]
        except (KeyError, TypeError) as exc:
            raise DomainError(f"bad graded system document: missing {exc}") from None
        return cls(np.array(gamma, dtype=float), parse_matrix(Q), name)

    @classmethod
    def from_blocks(cls, Q_plus: np.ndarray, name: str = "") -> GradedSystem:
        """Q = [[0, Q_+*], [Q_+, 0]] on H_+ ⊕ H_−, Q_+ of shape (dim H_−, dim H_+)."""
        Q_plus = np.atleast_2d(np.asarray(Q_plus, dtype=complex))
        q, p = Q_plus.shape
        Q = np.zeros((p + q, p + q), dtype=complex)
        Q[p:, :p] = Q_plus
        Q[:p, p:] = Q_plus.conj().T
        return cls(np.r_[np.ones(p), -np.ones(q)], Q, name)


def random_system(rng: np.random.Generator, p: int, q: int, scale: float = 1.0,
                  rank: int | None = None) -> GradedSystem:
    """A random graded system with dim H_+ = p, dim H_− = q (Q_+ of given rank)."""
    Qp = rng.standard_normal((q, p)) + 1j * rng.standard_normal((q, p))
    if rank is not None:
        u, s, vh = np.linalg.svd(Qp)
        s[rank:] = 0
        Qp = (u[:, :len(s)] * s) @ vh[:len(s)]
    return GradedSystem.from_blocks(scale * Qp)


def random_odd(sys: GradedSystem, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    x = rng.standard_normal((sys.dim, sys.dim)) + 1j * rng.standard_normal((sys.dim, sys.dim))
    x = (x + x.conj().T) / 2
    return scale * (x - sys.grade(x)) / 2


def random_even(sys: GradedSystem, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    x = rng.standard_normal((sys.dim, sys.dim)) + 1j * rng.standard_normal((sys.dim, sys.dim))
    x = (x + x.conj().T) / 2
    return scale * (x + sys.grade(x)) / 2


def _exp_h(h: np.ndarray, s: float) -> np.ndarray:
    """e^{-s h} for Hermitian h."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-s * w)) @ v.conj().T


def supertrace_exp(sys: GradedSystem, beta: float) -> complex:
    """Tr(Γ e^{-βH}) from the spectrum of H."""
    return sys.supertrace(_exp_h(sys.H, beta))


# index theory

@dataclass(frozen=True)
class WittenIndex:
    value: float
    rank_index: int
    kernel_plus: int
    kernel_minus: int
    integer_residual: float
    beta: float


def witten_index(sys: GradedSystem, beta: float, rank_tol: float = 1e-10) -> WittenIndex:
    """Tr(Γe^{-βH}) next to dim ker Q_+ − dim ker Q_+* from singular values."""
    if not beta > 0:
        raise DomainError("inverse temperature must be positive")
    value = supertrace_exp(sys, beta)
    Qp = sys.Q_plus
    p, q = len(sys.plus), len(sys.minus)
    if Qp.size:
        s = np.linalg.svd(Qp, compute_uv=False)
        r = int(np.sum(s > rank_tol * max(1.0, s.max())))
    else:
        r = 0
    ker_p, ker_m = p - r, q - r
    v = value.real
    return WittenIndex(v, ker_p - ker_m, ker_p, ker_m, abs(v - round(v)) + abs(value.imag), beta)


@dataclass(frozen=True)
class RelativeIndex:
    value: complex | None
    trace_ratio: complex | None
    numerator_cocycle: complex
    numerator_trace: complex
    residual: float
    degenerate: bool


def relative_index(sys0: GradedSystem, P: np.ndarray, beta: float, tol: float = 1e-12) -> RelativeIndex:
    """Continue ω_s(u_P(t)) to t = iβ and compare with Tr_s(e^{-βH})/Tr_s(e^{-βH₀})."""
    P = np.asarray(P, dtype=complex)
    if np.abs(P - P.conj().T).max() > 1e-10:
        raise DomainError("perturbation is not Hermitian")
    if np.abs(sys0.grade(P) - P).max() > 1e-10:
        raise DomainError("perturbation does not commute with the grading")
    dyn = sys0.dynamics(beta)
    H = sys0.H + P
    u = cc.perturbation(dyn, sys0.element(H))
    weight = _exp_h(sys0.H, beta)
    num_cocycle = sys0.supertrace(weight @ u(1j * beta).blocks[0])
    num_trace = sys0.supertrace(_exp_h(H, beta))
    den = sys0.supertrace(weight)
    scale = max(abs(num_trace), abs(den), 1e-300)
    residual = abs(num_cocycle - num_trace) / max(scale, 1.0)
    degenerate = abs(den) <= tol * max(1.0, float(np.trace(weight).real))
    if degenerate:
        return RelativeIndex(None, None, num_cocycle, num_trace, residual, True)
    return RelativeIndex(num_cocycle / den, num_trace / den, num_cocycle, num_trace,
                         abs(num_cocycle / den - num_trace / den), False)


# super-KMS functionals

@dataclass(frozen=True, eq=False)
class SuperKmsFunctional:
    system: GradedSystem
    beta: float = 1.0
    normalization: str = "gibbs"

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError("inverse temperature must be positive")
        if self.normalization not in ("gibbs", "supertrace"):
            raise DomainError(f"unknown normalization {self.normalization!r}")
        if self.normalization == "supertrace" and abs(supertrace_exp(self.system, self.beta)) < 1e-12:
            raise DomainError("supertrace normalization needs a nonzero Witten index")

    @property
    def weight(self) -> np.ndarray:
        return _exp_h(self.system.H, self.beta)

    @property
    def Z(self) -> complex:
        if self.normalization == "gibbs":
            return complex(np.trace(self.weight).real)
        return supertrace_exp(self.system, self.beta)

    def __call__(self, a: np.ndarray) -> complex:
        return self.system.supertrace(self.weight @ a) / self.Z

    def alpha(self, x: np.ndarray, z: complex) -> np.ndarray:
        w, v = np.linalg.eigh(self.system.H)
        p = (v * np.exp(1j * z * w)) @ v.conj().T
        m = (v * np.exp(-1j * z * w)) @ v.conj().T
        return p @ x @ m

    def gkms_residual(self, a: np.ndarray, b: np.ndarray, t: float) -> float:
        """|φ(a α_{t+iβ}(b)) − φ(α_t(b) γ(a))|."""
        lhs = self(a @ self.alpha(b, t + 1j * self.beta))
        rhs = self(self.alpha(b, t) @ self.system.grade(a))
        return abs(lhs - rhs)

    def closedness_residual(self, a: np.ndarray) -> float:
        """|φ(δa)|."""
        return abs(self(self.system.delta(a)))

    def modulus(self) -> State:
        """ω = Tr(e^{-βH}·)/|Z|, the Gibbs state up to the normalization weight."""
        w = self.weight / abs(self.Z)
        return State(self.system.algebra, (w,))


@dataclass(frozen=True)
class ChargeSign:
    name: str
    sign: int | None
    d_phi_numerator: complex
    d_omega: complex
    residual: float


@dataclass(frozen=True)
class Reduction:
    omega: State
    gamma: np.ndarray
    factor: complex
    residual: float
    signs: list[ChargeSign] = field(default_factory=list)


def graded_kms_reduce(phi: SuperKmsFunctional, charges: Sequence[tuple[str, np.ndarray, float]] = (),
                      tol: float = 1e-9) -> Reduction:
    """φ = factor·ω(Γ·) with ω the Gibbs state of H, plus the sign ρ(Γ)Γ* per charge.

    Each charge is (name, v, c) for the abelian charge Ad v with phase c.
    A sign ±1 means d_φ(u_ρ)·φ(1) = ±d_ω(u_ρ)·φ(1); it is None when ρ(Γ)Γ*
    is not a scalar.
    """
    sys = phi.system
    omega = gibbs(sys, phi.beta)
    G = sys.Gamma
    factor = np.trace(phi.weight).real / phi.Z
    res = 0.0
    for b in sys.algebra.basis():
        a = b.blocks[0]
        res = max(res, abs(phi(a) - factor * omega(sys.element(G @ a))))
    if res > tol:
        raise DomainError("functional is not a multiple of ω(Γ·)", res)
    signs = []
    dyn = sys.dynamics(phi.beta)
    for name, v, c in charges:
        v = np.asarray(v, dtype=complex)
        ratio = v @ G @ v.conj().T @ G.conj().T
        s0 = ratio[0, 0]
        scalar = np.abs(ratio - s0 * np.eye(sys.dim)).max() < 1e-10 and abs(abs(s0) - 1) < 1e-10
        sign = int(round(s0.real)) if scalar and abs(s0.imag) < 1e-10 else None
        u = covariance_cocycle(abelian(sys.element(v), c), dyn)
        d_omega = cc.holomorphic_dimension(u, omega).value
        numerator = phi(u(1j * phi.beta).blocks[0])
        ref = phi(np.eye(sys.dim))
        residual = abs(numerator - sign * d_omega * ref) if sign is not None else float("nan")
        signs.append(ChargeSign(name, sign, numerator, d_omega, residual))
    return Reduction(omega, G, factor, res, signs)


def gibbs(sys: GradedSystem, beta: float) -> State:
    w = _exp_h(sys.H - np.eye(sys.dim) * np.linalg.eigvalsh(sys.H).min(), beta)
    return State(sys.algebra, (w / np.trace(w).real,))


# perturbations

@dataclass(frozen=True)
class PerturbationReport:
    cocycle: cc.UnitaryCocycle
    ode_residual: float
    ivp_residual: float
    phi_q_one: complex
    trace_value: complex
    trace_residual: float


def perturbation_cocycle(sys: GradedSystem, q: np.ndarray, times: Sequence[float] | None = None,
                         ivp: bool = True) -> PerturbationReport:
    """u^q(t) = e^{itH_q}e^{-itH}, H_q = (Q+q)², solving −i u' = u α_t(δq + q²)."""
    q = np.asarray(q, dtype=complex)
    if np.abs(q - q.conj().T).max() > 1e-10:
        raise DomainError("perturbation q is not selfadjoint")
    if sys.parity(q, 1e-10) != "odd" and np.abs(q).max() > 0:
        raise DomainError("perturbation q is not odd")
    Hq = (sys.Q + q) @ (sys.Q + q)
    h = sys.delta(q) + q @ q
    dyn = sys.dynamics(1.0)
    u = cc.perturbation(dyn, sys.element(Hq))
    u = cc.UnitaryCocycle("susy_perturbation", u.generator, u.point, u.evaluator, u.shift,
                          params={"q": q})
    times = list(times) if times is not None else list(np.linspace(-2.0, 2.0, 10))
    wq, vq = np.linalg.eigh(Hq)
    w, v = np.linalg.eigh(sys.H)

    def closed(t):
        return (vq * np.exp(1j * t * wq)) @ vq.conj().T @ (v * np.exp(-1j * t * w)) @ v.conj().T

    def alpha(x, t):
        return (v * np.exp(1j * t * w)) @ v.conj().T @ x @ (v * np.exp(-1j * t * w)) @ v.conj().T

    ode = 0.0
    for t in times:
        # u'(t) = i e^{itH_q}(H_q − H)e^{-itH}, written without using the ODE itself
        du = 1j * ((vq * (1j * wq * np.exp(1j * t * wq))) @ vq.conj().T
                   @ (v * np.exp(-1j * t * w)) @ v.conj().T
                   - (vq * np.exp(1j * t * wq)) @ vq.conj().T
                   @ (v * (1j * w * np.exp(-1j * t * w))) @ v.conj().T) / 1j
        ode = max(ode, float(np.abs(-1j * du - closed(t) @ alpha(h, t)).max()))
    ivp_res = 0.0
    if ivp:
        n = sys.dim
        T = max(abs(t) for t in times)

        def rhs(t, y):
            U = y.reshape(n, n)
            return (1j * U @ alpha(h, t)).ravel()

        for sign in (1.0, -1.0):
            sol = solve_ivp(rhs, (0.0, sign * T), np.eye(n, dtype=complex).ravel(), method="DOP853",
                            rtol=1e-11, atol=1e-12, dense_output=True)
            for t in times:
                if t * sign >= 0:
                    ivp_res = max(ivp_res, float(np.abs(sol.sol(t).reshape(n, n) - closed(t)).max()))
    phi = SuperKmsFunctional(sys, 1.0)
    phi_q = phi(u(1j).blocks[0])
    trace = sys.supertrace(_exp_h(Hq, 1.0)) / phi.Z
    return PerturbationReport(u, ode, ivp_res, phi_q, trace, abs(phi_q - trace))


@dataclass(frozen=True)
class DeformationReport:
    parity: str
    reference: complex
    deformed: complex
    residual: float
    relative: bool


def deformation_invariance(sys: GradedSystem, q: np.ndarray, beta: float = 1.0) -> DeformationReport:
    """|Tr(Γe^{-β(Q+q)²}) − Tr(Γe^{-βQ²})|, relative when the reference is nonzero.

    Invariance is only expected for odd q; even q is accepted as a control.
    """
    q = np.asarray(q, dtype=complex)
    if np.abs(q - q.conj().T).max() > 1e-10:
        raise DomainError("perturbation q is not selfadjoint")
    parity = sys.parity(q, 1e-10) if np.abs(q).max() > 0 else "odd"
    Qq = sys.Q + q
    ref = supertrace_exp(sys, beta)
    new = sys.supertrace(_exp_h(Qq @ Qq, beta))
    rel = abs(ref) > 1e-12
    res = abs(new - ref) / abs(ref) if rel else abs(new - ref)
    return DeformationReport(parity, ref, new, res, rel)


# JLO cochains

def simplex_integral(H: np.ndarray, xs: Sequence[np.ndarray]) -> np.ndarray:
    """∫_{Σ_n} e^{-s_0H} x_1 e^{-s_1H} … x_n e^{-s_nH} ds by one block exponential.

    The exponential of the block bidiagonal matrix with −H on the diagonal
    and x_1, …, x_n above it carries the iterated integral in its corner.
    """
    n, N = len(xs), H.shape[0]
    if n == 0:
        return _exp_h(H, 1.0)
    M = np.zeros(((n + 1) * N, (n + 1) * N), dtype=complex)
    for k in range(n + 1):
        M[k * N:(k + 1) * N, k * N:(k + 1) * N] = -H
    for k, x in enumerate(xs):
        M[k * N:(k + 1) * N, (k + 1) * N:(k + 2) * N] = x
    return expm(M)[:N, n * N:]


def simplex_rule(dim: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes (s_0..s_dim) and weights for the standard simplex of the given dimension.

    Tensor Gauss–Legendre on the cube pushed forward by the Duffy map;
    exact for polynomials of degree < 2·order − dim.
    """
    if dim == 0:
        return np.ones((1, 1)), np.ones(1)
    x, w = np.polynomial.legendre.leggauss(order)
    x, w = (x + 1) / 2, w / 2
    nodes, weights = [], []
    for idx in itertools.product(range(order), repeat=dim):
        u = x[list(idx)]
        wt = np.prod(w[list(idx)])
        # stick-breaking s_k = u_k ∏_{j<k}(1 − u_j); the Jacobian is the product of the rests
        rest, s = 1.0, []
        for uj in u:
            s.append(rest * uj)
            wt *= rest
            rest *= 1 - uj
        s.append(rest)
        nodes.append(s)
        weights.append(wt)
    return np.array(nodes), np.array(weights)


def simplex_quadrature(fn: Callable[[np.ndarray], complex], dim: int, tol: float = 1e-6,
                       start: int = 6, max_order: int = 40) -> tuple[complex, float, bool]:
    """Integrate fn(s_0..s_dim) over the simplex, doubling the order until stable."""
    order, prev = start, None
    while order <= max_order:
        nodes, weights = simplex_rule(dim, order)
        val = complex(sum(wt * fn(s) for s, wt in zip(nodes, weights)))
        if prev is not None:
            err = abs(val - prev)
            if err <= tol * max(1.0, abs(val)):
                return val, err, True
        prev = val
        order *= 2
    return prev, abs(prev - val), False


@dataclass(frozen=True)
class JloValue:
    value: complex
    error: float
    method: str
    converged: bool = True


def _jlo_inputs(sys: GradedSystem, args: Sequence[np.ndarray]) -> list[np.ndarray]:
    out = []
    for k, a in enumerate(args[1:], start=1):
        a = np.asarray(a, dtype=complex)
        out.append(sys.delta(sys.grade(a) if k % 2 else a))
    return out


def jlo_eval(phi: SuperKmsFunctional, args: Sequence[np.ndarray], method: str = "exact",
             phase_prefactor: bool = False, tol: float = 1e-6) -> JloValue:
    """τ_n(a_0, …, a_n) for the super-KMS functional φ (rescaled to β = 1)."""
    n = len(args) - 1
    if n < 0:
        raise DomainError("JLO needs at least a_0")
    if n > MAX_JLO_DEGREE:
        raise DomainError(f"JLO degree {n} exceeds the cap {MAX_JLO_DEGREE}")
    sys = phi.system.rescaled(phi.beta) if phi.beta != 1.0 else phi.system
    Z = phi.Z
    a0 = np.asarray(args[0], dtype=complex)
    xs = _jlo_inputs(sys, args)
    sign = (-1j) ** n if phase_prefactor else 1  # (−1)^{−n/2}
    if method == "exact":
        val = sys.supertrace(a0 @ simplex_integral(sys.H, xs)) / Z
        return JloValue(sign * val, 0.0, "exact")
    if method != "quadrature":
        raise DomainError(f"unknown JLO method {method!r}")
    w, v = np.linalg.eigh(sys.H)

    def integrand(s):
        prod = a0 @ (v * np.exp(-s[0] * w)) @ v.conj().T
        for k, x in enumerate(xs, start=1):
            prod = prod @ x @ (v * np.exp(-s[k] * w)) @ v.conj().T
        return sys.supertrace(prod) / Z

    val, err, ok = simplex_quadrature(integrand, n, tol)
    return JloValue(sign * val, err, "quadrature", ok)


@dataclass(frozen=True)
class ChargedJlo:
    rococ: complex
    factorized: complex
    d_phi: complex
    residual: float
    quadrature_error: float
    chern0: complex


def jlo_charged(phi: SuperKmsFunctional, v: np.ndarray, c: float, args: Sequence[np.ndarray],
                tol: float = 1e-7) -> ChargedJlo:
    """τ^ρ_n for ρ = Ad v with covariance cocycle e^{icz}vα_z(v*).

    Path one integrates the charged simplex formula literally, with u(is)
    and α_{is}; path two is d_φ(u_ρ)·τ_n(ρ^{-1}(a_0), …, ρ^{-1}(a_n)) with
    d_φ(u_ρ) from the cocycle module.
    """
    sys = phi.system.rescaled(phi.beta) if phi.beta != 1.0 else phi.system
    v = np.asarray(v, dtype=complex)
    N = sys.dim
    if np.abs(v @ v.conj().T - np.eye(N)).max() > 1e-10:
        raise DomainError("charge needs a unitary")
    if np.abs(sys.grade(v) - v).max() > 1e-10:
        raise DomainError("only Bose charges (v commuting with Γ) are supported")
    phi1 = SuperKmsFunctional(sys, 1.0, phi.normalization)
    n = len(args) - 1
    Qr = v @ sys.Q @ v.conj().T
    w, vh = np.linalg.eigh(sys.H)
    Kr = v @ sys.H @ v.conj().T + c * np.eye(N)  # perturbed generator
    wk, vk = np.linalg.eigh(Kr)

    def e_h(s, sign=-1):
        return (vh * np.exp(sign * s * w)) @ vh.conj().T

    def u_is(s):  # u(is) = e^{-s(H_ρ + c)} e^{sH}
        return (vk * np.exp(-s * wk)) @ vk.conj().T @ e_h(s, +1)

    def alpha_is(x, s):
        return e_h(s) @ x @ e_h(s, +1)

    def delta_r(a):
        return Qr @ a - sys.grade(a) @ Qr

    xs = [delta_r(sys.grade(np.asarray(a, dtype=complex)) if k % 2 else np.asarray(a, dtype=complex))
          for k, a in enumerate(args[1:], start=1)]
    a0 = np.asarray(args[0], dtype=complex)

    def integrand(s):
        # a_0 u(is_1) α_{is_1}(x_1 u(is_2)) α_{i(s_1+s_2)}(x_2 u(is_3)) …
        prod = a0 @ u_is(s[0])
        acc = s[0]
        for k, x in enumerate(xs, start=1):
            prod = prod @ alpha_is(x @ u_is(s[k]), acc)
            acc += s[k]
        return phi1(prod)

    val, err, ok = simplex_quadrature(integrand, n, tol)
    if not ok:
        raise DomainError("charged JLO quadrature did not converge", err)
    omega = gibbs(sys, 1.0)
    u = covariance_cocycle(abelian(sys.element(v), c), sys.dynamics(1.0))
    d = cc.holomorphic_dimension(u, omega).value
    pulled = [v.conj().T @ np.asarray(a, dtype=complex) @ v for a in args]
    fact = d * jlo_eval(phi1, pulled).value
    chern0 = d * phi1(np.eye(N))
    return ChargedJlo(val, fact, d, abs(val - fact), err, chern0)


# cochains and the coboundary

Cochain = Callable[..., complex]


@dataclass(frozen=True, eq=False)
class EntireCochain:
    """Components f_n as callables of n+1 matrices, up to a degree cap."""

    components: dict[int, Cochain]
    gamma: np.ndarray
    cap: int

    def __call__(self, n: int, *args) -> complex:
        if n not in self.components:
            raise DomainError(f"cochain has no component of degree {n}")
        return self.components[n](*args)

    def grade(self, a: np.ndarray) -> np.ndarray:
        return self.gamma[:, None] * a * self.gamma[None, :]

    def growth(self, rng: np.random.Generator, z: float = 1.0, samples: int = 10) -> float:
        """Σ_n √(n!) |||f_n||| z^n with |||f_n||| estimated from below on random unit inputs."""
        N = self.gamma.size
        total = 0.0
        for n, f in sorted(self.components.items()):
            best = 0.0
            for _ in range(samples):
                args = []
                for _ in range(n + 1):
                    a = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
                    args.append(a / np.linalg.norm(a, 2))
                best = max(best, abs(f(*args)))
            total += math.sqrt(math.factorial(n)) * best * z ** n
        return total


def jlo_cochain(phi: SuperKmsFunctional, cap: int = 4, phase_prefactor: bool = False) -> EntireCochain:
    comps = {n: (lambda *a: jlo_eval(phi, a, phase_prefactor=phase_prefactor).value) for n in range(cap + 1)}
    return EntireCochain(comps, phi.system.gamma, cap)


def b_operator(f: EntireCochain, n: int) -> Cochain:
    """(bf)_{n+1} from f_n, with the alternating sign and the γ-twisted last term."""
    def bf(*a):
        if len(a) != n + 2:
            raise DomainError(f"(bf)_{n + 1} takes {n + 2} arguments")
        tot = 0j
        for j in range(n + 1):
            tot += (-1) ** j * f(n, *a[:j], a[j] @ a[j + 1], *a[j + 2:])
        tot += (-1) ** (n + 1) * f(n, f.grade(a[n + 1]) @ a[0], *a[1:n + 1])
        return tot
    return bf


def B_operator(f: EntireCochain, n: int) -> Cochain:
    """(Bf)_{n-1} from f_n: the twisted cyclic sum of f_n(1, …) and f_n(…, 1)."""
    def Bf(*a):
        if len(a) != n:
            raise DomainError(f"(Bf)_{n - 1} takes {n} arguments")
        one = np.eye(f.gamma.size)
        tot = 0j
        for j in range(n):
            perm = [f.grade(x) for x in a[n - j:]] + list(a[:n - j])
            tot += (-1) ** ((n - 1) * j) * (f(n, one, *perm) + (-1) ** (n - 1) * f(n, *perm, one))
        return tot
    return Bf


def coboundary(f: EntireCochain, n: int) -> Cochain:
    """(∂f)_n = (b f_{n-1})_n + (B f_{n+1})_n."""
    if n + 1 > f.cap:
        raise DomainError(f"coboundary at degree {n} needs f_{n + 1} beyond the cap {f.cap}")
    parts = []
    if n >= 1 and (n - 1) in f.components:
        parts.append(b_operator(f, n - 1))
    if (n + 1) in f.components:
        parts.append(B_operator(f, n + 1))
    return lambda *a: sum(p(*a) for p in parts)


def random_cochain(gamma: np.ndarray, degrees: Sequence[int], rng: np.random.Generator) -> EntireCochain:
    """γ-invariant random multilinear cochains (f∘γ = f)."""
    gamma = np.asarray(gamma, dtype=float)
    N = gamma.size
    comps = {}
    for n in degrees:
        T = rng.standard_normal((N * N,) * (n + 1)) + 1j * rng.standard_normal((N * N,) * (n + 1))

        def raw(*a, T=T):
            out = T
            for x in reversed(a):
                out = out @ x.ravel()
            return complex(out)

        def sym(*a, raw=raw):
            g = [gamma[:, None] * x * gamma[None, :] for x in a]
            return 0.5 * (raw(*a) + raw(*g))
        comps[n] = sym
    return EntireCochain(comps, gamma, max(degrees))


def cochain_from(components: dict[int, Cochain], gamma: np.ndarray, cap: int | None = None) -> EntireCochain:
    gamma = np.asarray(gamma, dtype=float)
    return EntireCochain(dict(components), gamma, max(components) if cap is None else cap)


def dd_residuals(f: EntireCochain, rng: np.random.Generator, max_degree: int = 2) -> dict[str, float]:
    """b², B², bB + Bb on random matrices at low degree."""
    N = f.gamma.size

    def rand():
        return rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))

    out = {"bb": 0.0, "BB": 0.0, "bB+Bb": 0.0}
    degs = set(f.components)
    for n in degs:
        if n <= max_degree:
            bf = cochain_from({n + 1: b_operator(f, n)}, f.gamma)
            out["bb"] = max(out["bb"], abs(b_operator(bf, n + 1)(*[rand() for _ in range(n + 3)])))
        if n >= 2:
            Bf = cochain_from({n - 1: B_operator(f, n)}, f.gamma)
            out["BB"] = max(out["BB"], abs(B_operator(Bf, n - 1)(*[rand() for _ in range(n - 1)])))
        if n >= 1:
            args = [rand() for _ in range(n + 1)]
            Bf = cochain_from({n - 1: B_operator(f, n)}, f.gamma)
            bf = cochain_from({n + 1: b_operator(f, n)}, f.gamma)
            out["bB+Bb"] = max(out["bB+Bb"], abs(b_operator(Bf, n - 1)(*args) + B_operator(bf, n + 1)(*args)))
    return out


def jlo_cocycle_residuals(phi: SuperKmsFunctional, rng: np.random.Generator, degrees=(1, 3),
                          phase_prefactor: bool = False) -> dict[int, float]:
    """|(b+B)τ|_n on random (mixed-parity) arguments, relative to the term sizes."""
    N = phi.system.dim
    tau = jlo_cochain(phi, max(degrees) + 1, phase_prefactor)
    out = {}
    for n in degrees:
        args = [rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N)) for _ in range(n + 1)]
        bt = b_operator(tau, n - 1)(*args) if n >= 1 else 0j
        Bt = B_operator(tau, n + 1)(*args)
        out[n] = abs(bt + Bt) / max(1.0, abs(bt), abs(Bt))
    return out


# sectors and tensor products

@dataclass(frozen=True)
class SectorReport:
    system: GradedSystem
    index: int
    base_index: int
    multiplicity: int
    square_residual: float

    @property
    def index_law(self) -> bool:
        return self.index == self.multiplicity * self.base_index


def sector_supercharge(sys: GradedSystem, d: int) -> SectorReport:
    """Q_ρ = Q ⊗ 1_d with Γ_ρ = Γ ⊗ 1 (Bose sectors in the multiplicity model)."""
    if int(d) != d or d < 1:
        raise DomainError("multiplicity must be a positive integer")
    d = int(d)
    Qr = np.kron(sys.Q, np.eye(d))
    Gr = np.kron(sys.gamma, np.ones(d))
    sr = GradedSystem(Gr, Qr, f"{sys.name}x{d}")
    res = float(np.abs(Qr @ Qr - np.kron(sys.H, np.eye(d))).max())
    return SectorReport(sr, witten_index(sr, 1.0).rank_index, witten_index(sys, 1.0).rank_index, d, res)


def index_ratio(sys: GradedSystem, d_rho: int, d_sigma: int) -> tuple[float, float]:
    """(Index Q_{ρ+}/Index Q_{σ+}, d_ρ/d_σ)."""
    a = sector_supercharge(sys, d_rho).index
    b = sector_supercharge(sys, d_sigma).index
    if b == 0:
        raise DomainError("reference sector has index zero")
    return a / b, d_rho / d_sigma


@dataclass(frozen=True)
class TensorReport:
    system: GradedSystem
    closed_form_residual: float
    square_residual: float
    index_product_residual: float


def tensor_supercharge(A: GradedSystem, B: GradedSystem, variant: str = "displayed",
                       beta: float = 1.0) -> TensorReport:
    """Q̃ on H̃_+ = H_+⊗H_+ ⊕ H_−⊗H_−, H̃_− = H_+⊗H_− ⊕ H_−⊗H_+, assembled block by block.

    ``displayed`` uses Q̃_+ = (Q_+⊗1 + 1⊗Q_+) ⊕ (Q_−⊗1 − 1⊗Q_−) and the matching
    Q̃_−, which is Q⊗1 + Γ⊗Q; ``permuted`` swaps the roles of the factors,
    giving 1⊗Q + Q⊗Γ.
    """
    if variant not in ("displayed", "permuted"):
        raise DomainError(f"unknown variant {variant!r}")
    nA, nB = A.dim, B.dim
    Q = np.zeros((nA * nB, nA * nB), dtype=complex)

    def idx(i, j):
        return i * nB + j

    # each elementary move changes the grade of exactly one factor
    for i, j in itertools.product(range(nA), range(nB)):
        src = idx(i, j)
        for k in range(nA):  # Q acting on the first factor
            if A.Q[k, i] != 0:
                s = 1.0 if variant == "displayed" else B.gamma[j]
                Q[idx(k, j), src] += s * A.Q[k, i]
        for k in range(nB):  # Q acting on the second factor, with the sign of the first grade
            if B.Q[k, j] != 0:
                s = A.gamma[i] if variant == "displayed" else 1.0
                Q[idx(i, k), src] += s * B.Q[k, j]
    gamma = np.kron(A.gamma, B.gamma)
    out = GradedSystem(gamma, Q, f"{A.name}*{B.name}")
    if variant == "displayed":
        closed = np.kron(A.Q, np.eye(nB)) + np.kron(A.Gamma, B.Q)
    else:
        closed = np.kron(np.eye(nA), B.Q) + np.kron(A.Q, B.Gamma)
    cf = float(np.abs(Q - closed).max())
    H = np.kron(A.H, np.eye(nB)) + np.kron(np.eye(nA), B.H)
    sq = float(np.abs(Q @ Q - H).max())
    ip = abs(supertrace_exp(out, beta) - supertrace_exp(A, beta) * supertrace_exp(B, beta))
    return TensorReport(out, cf, sq, ip)
