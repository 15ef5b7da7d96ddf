"""Finite-dimensional C*-algebras, states, dynamics and modular data.

Every algebra is a direct sum of full matrix blocks.  Elements and states
are stored block by block; all analytic functions (exponentials, complex
powers, logarithms) go through Hermitian eigendecompositions, so values
such as ``D**(iz)`` are exact up to rounding for every complex ``z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np
from scipy.linalg import block_diag
from scipy.stats import unitary_group

from .errors import DomainError
from .jsonio import dump_matrix, parse_matrix

FAITHFUL_RTOL = 1e-12
HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class MatrixAlgebra:
    """The algebra M_{n_1} ⊕ ... ⊕ M_{n_m}."""

    blocks: tuple[int, ...]

    def __post_init__(self):
        blocks = tuple(int(n) for n in self.blocks)
        if not blocks or any(n < 1 for n in blocks):
            raise DomainError(f"block dimensions must be positive, got {self.blocks!r}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def dim(self) -> int:
        return sum(n * n for n in self.blocks)

    @property
    def hilbert_dim(self) -> int:
        return sum(self.blocks)

    @property
    def center_dim(self) -> int:
        return len(self.blocks)

    def element(self, blocks: Iterable) -> Element:
        return Element(self, tuple(np.asarray(b, dtype=complex) for b in blocks))

    def identity(self) -> Element:
        return self.element(np.eye(n) for n in self.blocks)

    def zero(self) -> Element:
        return self.element(np.zeros((n, n)) for n in self.blocks)

    def scalar(self, c: complex) -> Element:
        return self.element(c * np.eye(n) for n in self.blocks)

    def central(self, values: Sequence[complex]) -> Element:
        """The central element taking value ``values[j]`` on block j."""
        return self.element(c * np.eye(n) for c, n in zip(values, self.blocks))

    def from_dense(self, m: np.ndarray) -> Element:
        """Cut the diagonal blocks out of a block-diagonal matrix."""
        out, k = [], 0
        for n in self.blocks:
            out.append(m[k:k + n, k:k + n])
            k += n
        return self.element(out)

    def basis(self) -> list[Element]:
        """Matrix units E_kl of every block."""
        out = []
        for j, n in enumerate(self.blocks):
            for k in range(n):
                for l in range(n):
                    data = [np.zeros((m, m), dtype=complex) for m in self.blocks]
                    data[j][k, l] = 1.0
                    out.append(self.element(data))
        return out

    def random_element(self, rng: np.random.Generator) -> Element:
        return self.element(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
                            for n in self.blocks)

    def random_hermitian(self, rng: np.random.Generator, scale: float = 1.0) -> Element:
        x = self.random_element(rng)
        return (x + x.adj()) * (0.5 * scale)

    def random_unitary(self, rng: np.random.Generator) -> Element:
        return self.element(
            unitary_group.rvs(n, random_state=rng) if n > 1
            else np.exp(2j * np.pi * rng.random()) * np.eye(1)
            for n in self.blocks)

    def random_state(self, rng: np.random.Generator, weight: float = 1.0) -> State:
        """A faithful state with well-conditioned random densities."""
        ds = []
        for n in self.blocks:
            g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            ds.append(g @ g.conj().T + 0.1 * np.eye(n))
        total = sum(np.trace(d).real for d in ds)
        return State(self, tuple(d * (weight / total) for d in ds))

    def to_json(self) -> dict:
        return {"blocks": list(self.blocks)}

    @classmethod
    def from_json(cls, doc: dict) -> MatrixAlgebra:
        try:
            return cls(tuple(doc["blocks"]))
        except (KeyError, TypeError) as exc:
            raise DomainError(f"bad algebra document: {exc}") from None


@dataclass(frozen=True, eq=False)
class Element:
    """An element of a MatrixAlgebra, one square matrix per block."""

    algebra: MatrixAlgebra
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.blocks) != len(self.algebra.blocks):
            raise DomainError("wrong number of blocks for the algebra")
        for b, n in zip(self.blocks, self.algebra.blocks):
            if b.shape != (n, n):
                raise DomainError(f"block shape {b.shape} does not match dimension {n}")

    def _check(self, other: Element) -> None:
        if other.algebra != self.algebra:
            raise DomainError("elements live in different algebras")

    def __add__(self, other: Element) -> Element:
        self._check(other)
        return Element(self.algebra, tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def __sub__(self, other: Element) -> Element:
        self._check(other)
        return Element(self.algebra, tuple(a - b for a, b in zip(self.blocks, other.blocks)))

    def __neg__(self) -> Element:
        return Element(self.algebra, tuple(-a for a in self.blocks))

    def __mul__(self, c: complex) -> Element:
        return Element(self.algebra, tuple(c * a for a in self.blocks))

    __rmul__ = __mul__

    def __matmul__(self, other: Element) -> Element:
        self._check(other)
        return Element(self.algebra, tuple(a @ b for a, b in zip(self.blocks, other.blocks)))

    def adj(self) -> Element:
        return Element(self.algebra, tuple(a.conj().T for a in self.blocks))

    def transpose(self) -> Element:
        return Element(self.algebra, tuple(a.T for a in self.blocks))

    def conj(self) -> Element:
        return Element(self.algebra, tuple(a.conj() for a in self.blocks))

    def norm(self) -> float:
        """Operator norm: the largest block spectral norm."""
        return max(float(np.linalg.norm(a, 2)) for a in self.blocks)

    def dense(self) -> np.ndarray:
        return block_diag(*self.blocks)

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return (self - self.adj()).norm() <= tol * max(1.0, self.norm())

    def is_central(self, tol: float = 1e-9) -> bool:
        return all(np.linalg.norm(a - (np.trace(a) / len(a)) * np.eye(len(a))) <= tol * max(1.0, np.linalg.norm(a))
                   for a in self.blocks)

    def to_json(self) -> dict:
        return {"blocks": [dump_matrix(b) for b in self.blocks]}

    @classmethod
    def from_json(cls, algebra: MatrixAlgebra, doc: dict) -> Element:
        try:
            return algebra.element(parse_matrix(m) for m in doc["blocks"])
        except (KeyError, TypeError) as exc:
            raise DomainError(f"bad element document: {exc}") from None


def dist(x: Element, y: Element) -> float:
    return (x - y).norm()


def hermitian_function(x: Element, f: Callable[[np.ndarray], np.ndarray]) -> Element:
    """Apply ``f`` to the spectrum of a Hermitian element."""
    out = []
    for a in x.blocks:
        w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
        out.append((v * f(w)) @ v.conj().T)
    return Element(x.algebra, tuple(out))


def exp_i(h: Element, z: complex) -> Element:
    """e^{izh} for Hermitian h and any complex z."""
    return hermitian_function(h, lambda w: np.exp(1j * z * w))


def log_h(x: Element) -> Element:
    return hermitian_function(x, np.log)


def commutator_norm(x: Element, y: Element) -> float:
    return (x @ y - y @ x).norm()


@dataclass(frozen=True, eq=False)
class State:
    """A positive functional φ(a) = Σ_j Tr(D_j a_j).

    The weight φ(1) is kept explicitly; it need not be 1.
    """

    algebra: MatrixAlgebra
    densities: tuple[np.ndarray, ...]

    def __post_init__(self):
        ds = tuple(np.asarray(d, dtype=complex) for d in self.densities)
        if len(ds) != len(self.algebra.blocks):
            raise DomainError("wrong number of density blocks")
        for d, n in zip(ds, self.algebra.blocks):
            if d.shape != (n, n):
                raise DomainError(f"density shape {d.shape} does not match dimension {n}")
            scale = max(1.0, float(np.abs(d).max()))
            if np.abs(d - d.conj().T).max() > HERMITIAN_TOL * scale:
                raise DomainError("density is not Hermitian")
            if np.linalg.eigvalsh(0.5 * (d + d.conj().T)).min() < -1e-10 * scale:
                raise DomainError("density is not positive semidefinite")
        object.__setattr__(self, "densities", tuple(0.5 * (d + d.conj().T) for d in ds))

    def __call__(self, a: Element) -> complex:
        if a.algebra != self.algebra:
            raise DomainError("state and element live in different algebras")
        return complex(sum(np.sum(d.T * x) for d, x in zip(self.densities, a.blocks)))

    @property
    def weight(self) -> float:
        return float(sum(np.trace(d).real for d in self.densities))

    def density(self) -> Element:
        return Element(self.algebra, self.densities)

    def spectrum(self) -> np.ndarray:
        return np.concatenate([np.linalg.eigvalsh(d) for d in self.densities])

    @property
    def faithful(self) -> bool:
        w = self.spectrum()
        return bool(w.max() > 0 and w.min() > FAITHFUL_RTOL * w.max())

    def require_faithful(self, what: str = "state") -> None:
        if not self.faithful:
            raise DomainError(f"{what} is not faithful")

    def scaled(self, c: float) -> State:
        if c <= 0:
            raise DomainError("states can only be rescaled by positive factors")
        return State(self.algebra, tuple(c * d for d in self.densities))

    def normalized(self) -> State:
        return self.scaled(1.0 / self.weight)

    def transformed(self, u: Element) -> State:
        """The state φ∘Ad(u), with density u* D u."""
        return State(self.algebra, tuple(x.conj().T @ d @ x for d, x in zip(self.densities, u.blocks)))

    def distance(self, other: State) -> float:
        """Trace norm ‖φ − ψ‖₁."""
        return float(sum(np.abs(np.linalg.eigvalsh(a - b)).sum()
                         for a, b in zip(self.densities, other.densities)))

    def to_json(self) -> dict:
        return {"densities": [dump_matrix(d) for d in self.densities]}

    @classmethod
    def from_json(cls, algebra: MatrixAlgebra, doc: dict) -> State:
        try:
            return cls(algebra, tuple(parse_matrix(m) for m in doc["densities"]))
        except (KeyError, TypeError) as exc:
            raise DomainError(f"bad state document: {exc}") from None


@dataclass(frozen=True, eq=False)
class Dynamics:
    """α_t = Ad(e^{itH}) together with an inverse temperature β."""

    H: Element
    beta: float

    def __post_init__(self):
        if not self.H.is_hermitian():
            raise DomainError("dynamics generator is not Hermitian")
        if not self.beta > 0:
            raise DomainError("inverse temperature must be positive")

    @property
    def algebra(self) -> MatrixAlgebra:
        return self.H.algebra

    def alpha(self, x: Element, z: complex) -> Element:
        """α_z(x) = e^{izH} x e^{-izH}, entire in z."""
        return exp_i(self.H, z) @ x @ exp_i(self.H, -z)

    def gibbs(self) -> State:
        return gibbs_state(self.H, self.beta)


def gibbs_state(H: Element, beta: float) -> State:
    """Normalized Gibbs state with densities e^{-βH}/Z."""
    if not H.is_hermitian():
        raise DomainError("Hamiltonian is not Hermitian")
    if not beta > 0:
        raise DomainError("inverse temperature must be positive")
    # shift by the ground energy so the exponentials never overflow
    e0 = min(np.linalg.eigvalsh(b).min() for b in H.blocks)
    rho = hermitian_function(H, lambda w: np.exp(-beta * (w - e0)))
    z = sum(np.trace(b).real for b in rho.blocks)
    return State(H.algebra, tuple(b / z for b in rho.blocks))


def is_kms(phi: State, dyn: Dynamics, tol: float = 1e-9) -> bool:
    """Whether D_φ e^{βH} is central, i.e. φ is a β-KMS state for α."""
    if phi.algebra != dyn.algebra:
        return False
    x = phi.density() @ hermitian_function(dyn.H, lambda w: np.exp(dyn.beta * (w - w.min())))
    return x.is_central(tol)


def kms_check(phi: State, dyn: Dynamics, a: Element, b: Element, t: float) -> float:
    """|F(t+iβ) − φ(α_t(b) a)| for F(t) = φ(a α_t(b)).

    F is continued to the strip boundary exactly through the eigenbasis of
    H, so the residual measures only how far φ is from being β-KMS.
    """
    phi.require_faithful()
    if phi.algebra != dyn.algebra:
        raise DomainError("state and dynamics live in different algebras")
    upper = phi(a @ dyn.alpha(b, t + 1j * dyn.beta))
    return abs(upper - phi(dyn.alpha(b, t) @ a))


@dataclass(frozen=True, eq=False)
class GnsSpace:
    """GNS data of a faithful state on ⊕ M_{n_j} realized on ⊕ M_{n_j} (Hilbert–Schmidt).

    Vectors are row-major flattenings of the blocks; π(a) acts by left
    multiplication, π(a)′ by right multiplication.
    """

    state: State
    xi: np.ndarray
    delta: np.ndarray

    @property
    def algebra(self) -> MatrixAlgebra:
        return self.state.algebra

    @property
    def dim(self) -> int:
        return self.algebra.dim

    def left(self, a: Element) -> np.ndarray:
        return left_mult(a)

    def right(self, b: Element) -> np.ndarray:
        return right_mult(b)

    def vector(self, x: Element) -> np.ndarray:
        return np.concatenate([b.reshape(-1) for b in x.blocks])

    def unvector(self, v: np.ndarray) -> Element:
        out, k = [], 0
        for n in self.algebra.blocks:
            out.append(v[k:k + n * n].reshape(n, n))
            k += n * n
        return Element(self.algebra, tuple(out))

    def J(self, v: np.ndarray) -> np.ndarray:
        """Modular conjugation X ↦ X*."""
        return self.vector(self.unvector(v).adj())

    def log_delta(self) -> np.ndarray:
        ld = log_h(self.state.density())
        return self.left(ld) - self.right(ld)

    def delta_it(self, t: float) -> np.ndarray:
        d = self.state.density()
        return self.left(hermitian_function(d, lambda w: w ** (1j * t))) @ \
            self.right(hermitian_function(d, lambda w: w ** (-1j * t)))

    def hamiltonian(self, beta: float) -> np.ndarray:
        """−β⁻¹ log Δ, the generator whose unitary group implements α_t."""
        return -self.log_delta() / beta

    def expect(self, op: np.ndarray, v: np.ndarray | None = None) -> complex:
        v = self.xi if v is None else v
        return complex(np.vdot(v, op @ v))

    def invariants(self, samples: Sequence[Element] = ()) -> dict[str, float]:
        """Residuals of the structural identities of the GNS construction."""
        basis = self.algebra.basis()
        lefts = np.array([self.left(e) @ self.xi for e in basis])
        rights = np.array([self.right(e) @ self.xi for e in basis])
        w = np.linalg.eigvalsh(0.5 * (self.delta + self.delta.conj().T))
        res = {
            "cyclic_rank_deficit": float(self.dim - np.linalg.matrix_rank(lefts)),
            "separating_rank_deficit": float(self.dim - np.linalg.matrix_rank(rights)),
            "delta_negativity": float(max(0.0, -w.min())),
            "J_xi": float(np.linalg.norm(self.J(self.xi) - self.xi)),
            "delta_xi": float(np.linalg.norm(self.delta @ self.xi - self.xi)),
        }
        if samples:
            res["expectation"] = max(
                abs(self.expect(self.left(a)) - self.state(a) / self.state.weight) for a in samples)
        return res


def left_mult(a: Element) -> np.ndarray:
    """Matrix of X ↦ aX on row-major flattened blocks."""
    return block_diag(*(np.kron(x, np.eye(len(x))) for x in a.blocks))


def right_mult(b: Element) -> np.ndarray:
    """Matrix of X ↦ Xb on row-major flattened blocks."""
    return block_diag(*(np.kron(np.eye(len(x)), x.T) for x in b.blocks))


def gns(phi: State) -> GnsSpace:
    phi.require_faithful()
    root = hermitian_function(phi.normalized().density(), np.sqrt)
    d = phi.density()
    delta = left_mult(d) @ right_mult(hermitian_function(d, lambda w: 1.0 / w))
    xi = np.concatenate([b.reshape(-1) for b in root.blocks])
    return GnsSpace(phi, xi, delta)


def modular_group(phi: State, x: Element, t: complex) -> Element:
    """σ^φ_t(x) = D^{it} x D^{-it}."""
    phi.require_faithful()
    logd = log_h(phi.density())
    return exp_i(logd, t) @ x @ exp_i(logd, -t)


class RelativeEntropy(NamedTuple):
    value: float
    support_violation: bool

    def __float__(self) -> float:
        return self.value


def _support_projection(d: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(d)
    keep = w > FAITHFUL_RTOL * max(w.max(), 0.0) if w.max() > 0 else np.zeros_like(w, dtype=bool)
    return v[:, keep] @ v[:, keep].conj().T


def relative_entropy(phi: State, psi: State) -> RelativeEntropy:
    """Umegaki relative entropy Σ_j Tr D_φ(log D_φ − log D_ψ), in nats.

    Returns +inf with the violation flag set when supp φ ⊄ supp ψ.
    """
    if phi.algebra != psi.algebra:
        raise DomainError("states live in different algebras")
    total = 0.0
    for dp, dq in zip(phi.densities, psi.densities):
        leak = dp - _support_projection(dq) @ dp @ _support_projection(dq)
        if np.abs(leak).max() > 1e-10 * max(1.0, np.abs(dp).max()):
            return RelativeEntropy(math.inf, True)
        wp, vp = np.linalg.eigh(dp)
        pos = wp > 0
        total += float(np.sum(wp[pos] * np.log(wp[pos])))
        wq, vq = np.linalg.eigh(dq)
        pos = wq > FAITHFUL_RTOL * max(wq.max(), 0.0)
        # ⟨v|D_φ|v⟩ for each eigenvector of D_ψ on its support
        weights = np.einsum("ij,ik,kj->j", vq.conj(), dp, vq).real
        total -= float(np.sum(weights[pos] * np.log(wq[pos])))
    return RelativeEntropy(total, False)


def von_neumann_entropy(phi: State) -> float:
    w = phi.spectrum()
    w = w[w > 0]
    return float(-np.sum(w * np.log(w)))


@dataclass(frozen=True)
class Representation:
    """A representation described by the multiplicity of each irreducible block."""

    algebra: MatrixAlgebra
    multiplicities: tuple[int, ...]

    def __post_init__(self):
        mult = tuple(int(m) for m in self.multiplicities)
        if len(mult) != len(self.algebra.blocks) or any(m < 0 for m in mult):
            raise DomainError("multiplicities must be nonnegative, one per block")
        object.__setattr__(self, "multiplicities", mult)

    @property
    def central_support(self) -> frozenset[int]:
        return frozenset(j for j, m in enumerate(self.multiplicities) if m > 0)

    def __add__(self, other: Representation) -> Representation:
        if other.algebra != self.algebra:
            raise DomainError("representations of different algebras")
        return Representation(self.algebra, tuple(a + b for a, b in zip(self.multiplicities, other.multiplicities)))

    @classmethod
    def of_state(cls, phi: State) -> Representation:
        """The GNS representation of φ: block j appears rank(D_j) times."""
        ranks = []
        for d in phi.densities:
            w = np.linalg.eigvalsh(d)
            top = max(phi.spectrum().max(), 0.0)
            ranks.append(int(np.sum(w > FAITHFUL_RTOL * top)) if top > 0 else 0)
        return cls(phi.algebra, tuple(ranks))


def quasi_equivalent(pi1: Representation, pi2: Representation) -> bool:
    if pi1.algebra != pi2.algebra:
        raise DomainError("representations of different algebras")
    return pi1.central_support == pi2.central_support
