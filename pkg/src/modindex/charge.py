"""Implemented charges on finite systems.

Two models are available.

* ``abelian``: ρ = Ad(v) for a unitary v of the algebra, dimension 1.
* ``multiplicity``: ρ(x) = x ⊗ 1_d on the amplified algebra, dimension d,
  with left inverse id ⊗ (normalized trace).  Since a finite-dimensional
  factor has no proper endomorphisms of finite index, the cocycle of such a
  charge lives on the base algebra and is built from a surrogate state φ_ρ
  standing in for φ∘Φ_ρ.  Inside cocycle formulas ρ acts trivially on the
  base algebra.  This is a model, not an endomorphism of the base algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import cocycle as cc
from .errors import DomainError
from .qsys import (Dynamics, Element, MatrixAlgebra, State, exp_i, gibbs_state,
                   gns, relative_entropy)


@dataclass(frozen=True, eq=False)
class Charge:
    kind: str
    algebra: MatrixAlgebra
    v: Element | None = None
    d: int = 1
    surrogate: State | None = None
    c: float = 0.0
    # scalar solutions of the conjugate equations (abelian model); None = missing
    R: complex | None = 1.0
    Rbar: complex | None = 1.0
    name: str = ""
    conjugated: bool = False

    def __post_init__(self):
        if self.kind == "abelian":
            if self.v is None or self.v.algebra != self.algebra:
                raise DomainError("abelian charge needs a unitary of its algebra")
            if (self.v.adj() @ self.v - self.algebra.identity()).norm() > 1e-9:
                raise DomainError("abelian charge needs a unitary")
            if self.R is not None and self.Rbar is not None:
                if abs(np.conj(self.R) * self.Rbar - 1) > 1e-12:
                    raise DomainError("scalar conjugate data must satisfy conj(R)·R̄ = 1")
        elif self.kind == "multiplicity":
            if int(self.d) != self.d or self.d < 1:
                raise DomainError("multiplicity must be a positive integer")
            if self.surrogate is not None:
                if self.surrogate.algebra != self.algebra:
                    raise DomainError("surrogate state lives in a different algebra")
                if not self.surrogate.faithful:
                    raise DomainError("surrogate φ_ρ must be a faithful positive functional")
        else:
            raise DomainError(f"unknown charge kind {self.kind!r}")

    @property
    def dimension(self) -> float:
        return 1.0 if self.kind == "abelian" else float(self.d)

    def __call__(self, x: Element) -> Element:
        """ρ on the base algebra (the identity in the multiplicity model)."""
        if self.kind == "abelian":
            return self.v @ x @ self.v.adj()
        return x

    def conjugate(self) -> Charge:
        if self.kind == "abelian":
            return replace(self, v=self.v.adj(), c=-self.c, R=self.Rbar, Rbar=self.R,
                           conjugated=not self.conjugated)
        return replace(self, c=-self.c, conjugated=not self.conjugated)

    def compose(self, other: Charge) -> Charge:
        """ρσ for two abelian charges: Ad(v_ρ v_σ) with phases added."""
        if self.kind != "abelian" or other.kind != "abelian":
            raise DomainError("composition is implemented for abelian charges")
        return Charge("abelian", self.algebra, v=self.v @ other.v, c=self.c + other.c)

    def with_gauge(self, lam: complex) -> Charge:
        """Rescale the conjugate data R → λR, R̄ → λ̄⁻¹R̄."""
        if self.R is None or self.Rbar is None:
            raise DomainError("charge has no conjugate data")
        return replace(self, R=lam * self.R, Rbar=self.Rbar / np.conj(lam))

    # concrete amplification model

    def amplified_algebra(self) -> MatrixAlgebra:
        return MatrixAlgebra(tuple(n * self.d for n in self.algebra.blocks))

    def amplify(self, x: Element) -> Element:
        """ρ(x) = x ⊗ 1_d on the amplified algebra."""
        return self.amplified_algebra().element(np.kron(b, np.eye(self.d)) for b in x.blocks)

    def left_inverse(self, y: Element) -> Element:
        """Φ_ρ: Ad(v*) for abelian charges, id ⊗ tr/d for multiplicity ones."""
        if self.kind == "abelian":
            return self.v.adj() @ y @ self.v
        out = []
        for b, n in zip(y.blocks, self.algebra.blocks):
            out.append(np.einsum("iaja->ij", b.reshape(n, self.d, n, self.d)) / self.d)
        return self.algebra.element(out)

    def left_inverse_residual(self, x: Element) -> float:
        """‖Φ_ρ(ρ(x)) − x‖, using the amplification for multiplicity charges."""
        image = self(x) if self.kind == "abelian" else self.amplify(x)
        return (self.left_inverse(image) - x).norm()

    def apply_cocycle(self, u: cc.UnitaryCocycle) -> cc.UnitaryCocycle:
        """z ↦ ρ(u(z)), a cocycle for the dynamics transported by ρ."""
        if self.kind == "abelian":
            v = self.v
            k, _ = cc.derivative_shift(u)
            return cc.transformed(u, lambda x: v @ x @ v.adj(), f"rho({u.kind})",
                                  v @ k @ v.adj(), generator=v @ u.generator @ v.adj())
        return u


def identity_charge(algebra: MatrixAlgebra, c: float = 0.0) -> Charge:
    return Charge("abelian", algebra, v=algebra.identity(), c=c, name="id")


def abelian(v: Element, c: float = 0.0, name: str = "") -> Charge:
    return Charge("abelian", v.algebra, v=v, c=c, name=name)


def multiplicity(d: int, surrogate: State, c: float = 0.0, name: str = "") -> Charge:
    return Charge("multiplicity", surrogate.algebra, d=d, surrogate=surrogate, c=c, name=name)


def covariance_cocycle(rho: Charge, dyn: Dynamics, c: float | None = None) -> cc.UnitaryCocycle:
    """The covariance cocycle u(ρ, t) with explicit phase c.

    abelian: e^{ict} v α_t(v*).  multiplicity: e^{ict} d^{-it/β} times the
    physical Connes cocycle of the normalized surrogate against the Gibbs
    state of ``dyn``; its continuation to iβ is d·e^{-cβ} for the exact
    surrogate.
    """
    c = rho.c if c is None else float(c)
    if rho.algebra != dyn.algebra:
        raise DomainError("charge and dynamics live in different algebras")
    if rho.kind == "abelian":
        v, H = rho.v, dyn.H
        return cc.UnitaryCocycle(
            "covariance", H, 1j * dyn.beta,
            lambda z: (v @ exp_i(H, z) @ v.adj() @ exp_i(H, -z)) * np.exp(1j * c * z),
            v @ H @ v.adj() - H + rho.algebra.scalar(c),
            params={"c": c, "charge": rho.kind})
    if rho.surrogate is None:
        raise DomainError("multiplicity charge needs a surrogate state φ_ρ")
    phi = dyn.gibbs()
    conn = cc.connes_cocycle(rho.surrogate.normalized(), phi, dynamics=dyn)
    scal = cc.phase(c - math.log(rho.d) / dyn.beta, dyn)
    u = cc.composite([conn, scal])
    return replace(u, kind="covariance", params={"c": c, "charge": rho.kind})


def covariance_residual(rho: Charge, u: cc.UnitaryCocycle, dyn: Dynamics, t: float,
                        samples) -> float:
    """max ‖Ad u(t)∘α_t∘ρ∘α_{-t}(x) − ρ(x)‖ over sample elements.

    Multiplicity charges are checked in the amplification with u(t) ⊗ 1_d;
    only scalar (exact-surrogate) cocycles pass there.
    """
    worst = 0.0
    ut = u(t)
    for x in samples:
        if rho.kind == "abelian":
            y = ut @ dyn.alpha(rho(dyn.alpha(x, -t)), t) @ ut.adj()
            worst = max(worst, (y - rho(x)).norm())
        else:
            U = rho.amplify(ut)
            y = U @ rho.amplify(dyn.alpha(dyn.alpha(x, -t), t)) @ U.adj()
            worst = max(worst, (y - rho.amplify(x)).norm())
    return worst


def frobenius_dual_cocycle(rho: Charge, u: cc.UnitaryCocycle) -> cc.UnitaryCocycle:
    """u• = ρ̄(σ_t(R̄*) u*) R, a covariance cocycle for ρ̄.

    abelian: with scalar R, R̄ this is conj(R̄)·R·v* u(z̄)* v, entire in z.
    multiplicity: phase(-c)·d^{-it/β}·(Dφ_ρ̄:Dφ) with φ_ρ̄ = φ_ρ.
    """
    if rho.kind == "abelian":
        if rho.R is None or rho.Rbar is None:
            raise DomainError("charge has no conjugate data R, R̄")
        v = rho.v
        scale = np.conj(rho.Rbar) * rho.R
        k, _ = cc.derivative_shift(u)
        return cc.UnitaryCocycle(
            "frobenius_dual", u.generator, u.point,
            lambda z: (v.adj() @ u(np.conj(z)).adj() @ v) * scale,
            -(v.adj() @ k @ v), params={"c": -u.params.get("c", 0.0)})
    if "c" not in u.params:
        raise DomainError("multiplicity dual needs a cocycle built by covariance_cocycle")
    beta = u.beta
    H = u.generator
    dyn = Dynamics(H, beta)
    return covariance_cocycle(rho.conjugate(), dyn, c=-u.params["c"])


def geometric_dimension(rho: Charge, phi: State, dyn: Dynamics, c: float | None = None) -> float:
    """√(d_φ(u) d_φ(u•))."""
    u = covariance_cocycle(rho, dyn, c)
    ud = frobenius_dual_cocycle(rho, u)
    a = cc.holomorphic_dimension(u, phi, dyn.beta).value
    b = cc.holomorphic_dimension(ud, phi, dyn.beta).value
    cc.scalar_log(a * b, "product of holomorphic dimensions")
    return math.sqrt((a * b).real)


def product_form_dimension(rho: Charge, phi: State, dyn: Dynamics, c: float | None = None) -> complex:
    """Single continuation of t ↦ φ(u(t))φ(u•(t)) at iβ (normalized)."""
    u = covariance_cocycle(rho, dyn, c)
    ud = frobenius_dual_cocycle(rho, u)
    z = 1j * dyn.beta
    return cc.eval_complex(u, phi, z) * cc.eval_complex(ud, phi, z)


@dataclass(frozen=True)
class ChemicalPotentialSplit:
    log_d_phi: float
    log_d: float
    mu: float
    beta: float
    value: complex = 0j
    flag: str | None = None

    @property
    def splitting_residual(self) -> float:
        return abs(self.log_d_phi - self.log_d - self.beta * self.mu)


def chemical_potential(rho: Charge, phi: State, dyn: Dynamics, u: cc.UnitaryCocycle) -> ChemicalPotentialSplit:
    """μ_ρ(φ) = β⁻¹(log d_φ(u) − log d(ρ))."""
    hd = cc.holomorphic_dimension(u, phi, dyn.beta)
    log_d = math.log(rho.dimension)
    try:
        ld = cc.scalar_log(hd.value)
    except DomainError as exc:
        return ChemicalPotentialSplit(math.nan, log_d, math.nan, dyn.beta, hd.value, str(exc))
    return ChemicalPotentialSplit(ld, log_d, (ld - log_d) / dyn.beta, dyn.beta, hd.value, hd.warning)


@dataclass(frozen=True)
class FreeEnergy:
    """The free energy F(φ|φ_ρ) computed along independent routes.

    gns       -β⁻¹ log(e^{-βH_ρ}ξ, ξ) on the GNS space
    cocycle   -β⁻¹ log d_φ(u)
    entropy   (H_ρξ, ξ) − β⁻¹ S(φ‖φ̂_ρ)
    variational  φ̂_ρ(H_ρ) + β⁻¹ S(φ̂_ρ‖φ)
    where φ̂_ρ is the normalized vector state of e^{-βH_ρ/2}ξ.
    """

    gns: float
    cocycle: float
    entropy: float
    variational: float

    @property
    def value(self) -> float:
        return self.gns

    @property
    def spread(self) -> float:
        xs = (self.gns, self.cocycle, self.entropy, self.variational)
        return max(xs) - min(xs)


def free_energy(rho: Charge, phi: State, dyn: Dynamics, u: cc.UnitaryCocycle) -> FreeEnergy:
    beta = dyn.beta
    phi = phi.normalized()
    k, err = cc.derivative_shift(u)
    if not k.is_hermitian(1e-8):
        raise DomainError("generator shift of the cocycle is not Hermitian")
    space = gns(phi)
    # H_ρ = k (left) + H_gns with H_gns = -β⁻¹ log Δ = L(H) − R(H)
    H_rho = space.left(k) + space.hamiltonian(beta)
    H_rho = 0.5 * (H_rho + H_rho.conj().T)
    w, vec = np.linalg.eigh(H_rho)
    amp = vec.conj().T @ space.xi
    shift = w.min()
    log_pair = math.log(float(np.sum(np.exp(-beta * (w - shift)) * np.abs(amp) ** 2))) - beta * shift
    f_gns = -log_pair / beta

    hd = cc.holomorphic_dimension(u, phi, beta)
    f_cocycle = -cc.scalar_log(hd.value) / beta

    # vector state of η = e^{-βH_ρ/2}ξ, read off as a density on the algebra
    eta = vec @ (np.exp(-0.5 * beta * (w - shift)) * amp)
    eta_el = space.unvector(eta)
    rho_hat = State(phi.algebra, tuple(b @ b.conj().T for b in eta_el.blocks)).normalized()
    expect_xi = space.expect(H_rho).real
    f_entropy = expect_xi - relative_entropy(phi, rho_hat).value / beta
    eta_n = eta / np.linalg.norm(eta)
    f_var = space.expect(H_rho, eta_n).real + relative_entropy(rho_hat, phi).value / beta
    return FreeEnergy(f_gns, f_cocycle, f_entropy, f_var)


def conditional_entropy(rho: Charge) -> float:
    """S_c(ρ) = 2 log d(ρ)."""
    return 2.0 * math.log(rho.dimension)


def two_variable_residual(rho: Charge, sigma: Charge, dyn: Dynamics, t: float) -> float:
    """‖u(ρσ,t) − ρ(u(σ,t)) u(ρ,t)‖ for abelian charges."""
    lhs = covariance_cocycle(rho.compose(sigma), dyn)(t)
    rhs = rho(covariance_cocycle(sigma, dyn)(t)) @ covariance_cocycle(rho, dyn)(t)
    return (lhs - rhs).norm()


def pct_check(rho: Charge, dyn: Dynamics, samples, times=(0.3, 1.1)) -> dict[str, float]:
    """Residuals for the transpose anti-automorphism j(x) = xᵀ.

    φ∘j = φ needs a real symmetric H; j∘ρ∘j = ρ̄ needs v symmetric; then
    j(u(ρ,t)) = u(ρ̄,−t)*.
    """
    phi = dyn.gibbs()
    u = covariance_cocycle(rho, dyn)
    ud = covariance_cocycle(rho.conjugate(), dyn)
    return {
        "state": max(abs(phi(x.transpose()) - phi(x)) for x in samples),
        "charge": max((rho(x.transpose()).transpose() - rho.conjugate()(x)).norm() for x in samples),
        "cocycle": max((u(t).transpose() - ud(-t).adj()).norm() for t in times),
    }


@dataclass(frozen=True, eq=False)
class BlackHoleScenario:
    """A Gibbs stand-in for the Hartle–Hawking state at β = 2π/κ."""

    kappa: float
    H: Element

    def __post_init__(self):
        if not self.kappa > 0:
            raise DomainError("surface gravity must be positive")

    @property
    def beta(self) -> float:
        return 2 * math.pi / self.kappa

    @property
    def dynamics(self) -> Dynamics:
        return Dynamics(self.H, self.beta)

    @property
    def state(self) -> State:
        return gibbs_state(self.H, self.beta)


@dataclass(frozen=True)
class RelativeFreeEnergy:
    """F(φ_ρ|φ_σ) = β⁻¹ log(d_φ(u_ρ)/d_φ(u_σ)) along three routes."""

    cocycle: float
    entropy: float
    ratio: float

    @property
    def spread(self) -> float:
        xs = (self.cocycle, self.entropy, self.ratio)
        return max(xs) - min(xs)


def _log_d(u, phi, beta):
    return cc.scalar_log(cc.holomorphic_dimension(u, phi, beta).value)


def relative_free_energy(rho: Charge, u_rho: cc.UnitaryCocycle, sigma: Charge,
                         u_sigma: cc.UnitaryCocycle, u_sigma_dual: cc.UnitaryCocycle,
                         phi: State, beta: float) -> RelativeFreeEnergy:
    # relative cocycle u_{ρσ̄} = ρ(u_σ•) u_ρ, against the reference u_{σσ̄}
    rel = cc.composite([rho.apply_cocycle(u_sigma_dual), u_rho])
    ref = cc.composite([sigma.apply_cocycle(u_sigma_dual), u_sigma])
    f_cocycle = (_log_d(rel, phi, beta) - _log_d(ref, phi, beta)) / beta
    f_ratio = (_log_d(u_rho, phi, beta) - _log_d(u_sigma, phi, beta)) / beta
    om_r = gibbs_state(u_rho.perturbed_generator(), beta)
    om_s = gibbs_state(u_sigma.perturbed_generator(), beta)
    k_r, _ = cc.derivative_shift(u_rho)
    k_s, _ = cc.derivative_shift(u_sigma)
    f_entropy = om_r(k_s - k_r).real - relative_entropy(om_r, om_s).value / beta
    return RelativeFreeEnergy(f_cocycle, f_entropy, f_ratio)


@dataclass(frozen=True)
class BlackHoleReport:
    lhs: float
    rhs: float
    residual: float
    forward: RelativeFreeEnergy
    conjugate: RelativeFreeEnergy
    ife_lhs: float
    ife_rhs: float
    ife_residual: float
    route_spread: float
    beta_kappa: float = field(default=2 * math.pi)


def black_hole_identity(sc: BlackHoleScenario, rho: Charge, sigma: Charge) -> BlackHoleReport:
    """log d(ρ) − log d(σ) = (π/κ)(F(φ_ρ|φ_σ) + F(φ_ρ̄|φ_σ̄)) and the IFE splitting."""
    dyn, phi, beta = sc.dynamics, sc.state, sc.beta
    u_r = covariance_cocycle(rho, dyn)
    u_s = covariance_cocycle(sigma, dyn)
    ud_r = frobenius_dual_cocycle(rho, u_r)
    ud_s = frobenius_dual_cocycle(sigma, u_s)
    fwd = relative_free_energy(rho, u_r, sigma, u_s, ud_s, phi, beta)
    rb, sb = rho.conjugate(), sigma.conjugate()
    conj = relative_free_energy(rb, ud_r, sb, ud_s, frobenius_dual_cocycle(sb, ud_s), phi, beta)
    lhs = math.log(rho.dimension) - math.log(sigma.dimension)
    rhs = (math.pi / sc.kappa) * (fwd.cocycle + conj.cocycle)
    # F(φ_σ|φ_ρ) = ½β⁻¹(S_c(σ) − S_c(ρ)) + (μ_σ − μ_ρ)
    mu_r = chemical_potential(rho, phi, dyn, u_r).mu
    mu_s = chemical_potential(sigma, phi, dyn, u_s).mu
    back = relative_free_energy(sigma, u_s, rho, u_r, ud_r, phi, beta)
    ife_rhs = 0.5 * (conditional_entropy(sigma) - conditional_entropy(rho)) / beta + (mu_s - mu_r)
    return BlackHoleReport(lhs, rhs, abs(lhs - rhs), fwd, conj, back.cocycle, ife_rhs,
                           abs(back.cocycle - ife_rhs),
                           max(fwd.spread, conj.spread, back.spread), beta * sc.kappa)
