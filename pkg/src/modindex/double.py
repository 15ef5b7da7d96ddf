"""The quantum double: {R_i}-expansions over a coefficient algebra.

An element is a finitely supported map i ↦ X(i) ∈ Ã, read as Σ_i X(i)R_i.
Products and adjoints follow from the structure constants C^k_ij, which
intertwine ρ̃_k with ρ̃_iρ̃_j.  Pointed categories (groups Z_n) also get a
concrete matrix realization in which every relation is a matrix identity;
finite-group doubles D(G) are handled at the level of dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.linalg import null_space

from .category import FusionRing, Group, character_table, pointed
from .errors import DomainError
from .qsys import Element, MatrixAlgebra

Endo = Callable[[Element], Element]


@dataclass(frozen=True, eq=False)
class Realization:
    """Matrices for the coefficient embedding and for each R_i."""

    embed: Callable[[Element], np.ndarray]
    R: tuple[np.ndarray, ...]


@dataclass(frozen=True, eq=False)
class DoubleSpec:
    ring: FusionRing
    coeff: MatrixAlgebra
    rho: tuple[Endo, ...]
    C: Mapping[tuple[int, int, int], Element]
    dims: tuple[float, ...]
    realization: Realization | None = None
    name: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.ring.rank
        if len(self.rho) != n or len(self.dims) != n:
            raise DomainError("need one endomorphism and one dimension per label")
        for (i, j, k) in self.C:
            if self.ring.N[i, j, k] == 0:
                raise DomainError(f"structure constant C^{k}_{{{i}{j}}} given for a zero multiplicity")

    def c(self, i: int, j: int, k: int) -> Element:
        return self.C.get((i, j, k), self.coeff.zero())

    def intertwiner_residual(self, samples) -> float:
        """max ‖C^k_ij ρ̃_k(x) − ρ̃_i ρ̃_j(x) C^k_ij‖ on samples."""
        worst = 0.0
        for (i, j, k), c in self.C.items():
            for x in samples:
                worst = max(worst, (c @ self.rho[k](x) - self.rho[i](self.rho[j](x)) @ c).norm())
        return worst

    def normalization_residual(self) -> float:
        """max |C^k_ij* C^k_ij − (d_i d_j/d_k)·1| for multiplicity-one entries."""
        worst = 0.0
        one = self.coeff.identity()
        for (i, j, k), c in self.C.items():
            target = one * (self.dims[i] * self.dims[j] / self.dims[k])
            worst = max(worst, (c.adj() @ c - target).norm())
        return worst


@dataclass(frozen=True, eq=False)
class DoubleElement:
    spec: DoubleSpec
    coeffs: Mapping[int, Element]

    def __post_init__(self):
        clean = {}
        for i, x in self.coeffs.items():
            if not (isinstance(i, (int, np.integer)) and 0 <= i < self.spec.ring.rank):
                raise DomainError(f"label {i!r} is outside the fusion ring")
            if x.algebra != self.spec.coeff:
                raise DomainError("coefficient lives in the wrong algebra")
            if x.norm() > 0:
                clean[int(i)] = x
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))

    def __call__(self, i: int) -> Element:
        return self.coeffs.get(i, self.spec.coeff.zero())

    @property
    def support(self) -> list[int]:
        return list(self.coeffs)

    def __add__(self, other: DoubleElement) -> DoubleElement:
        keys = set(self.coeffs) | set(other.coeffs)
        return DoubleElement(self.spec, {i: self(i) + other(i) for i in keys})

    def __sub__(self, other: DoubleElement) -> DoubleElement:
        return self + other * -1

    def __mul__(self, c: complex) -> DoubleElement:
        return DoubleElement(self.spec, {i: x * c for i, x in self.coeffs.items()})

    def __matmul__(self, other: DoubleElement) -> DoubleElement:
        return star_product(self, other)

    def adj(self) -> DoubleElement:
        return star_involution(self)

    def norm(self) -> float:
        """max_i ‖X(i)‖; a norm on expansions, not the C*-norm."""
        return max((x.norm() for x in self.coeffs.values()), default=0.0)


def coefficient(spec: DoubleSpec, x: Element) -> DoubleElement:
    return DoubleElement(spec, {spec.ring.unit: x})


def unit(spec: DoubleSpec) -> DoubleElement:
    return coefficient(spec, spec.coeff.identity())


def generator(spec: DoubleSpec, i: int) -> DoubleElement:
    """R_i: the function supported at i with value 1."""
    return DoubleElement(spec, {i: spec.coeff.identity()})


def random_element(spec: DoubleSpec, rng: np.random.Generator) -> DoubleElement:
    return DoubleElement(spec, {i: spec.coeff.random_element(rng) for i in range(spec.ring.rank)})


def star_product(X: DoubleElement, Y: DoubleElement) -> DoubleElement:
    """X⋆Y(k) = Σ_{i,j} X(i) ρ̃_i(Y(j)) C^k_ij."""
    spec = X.spec
    if Y.spec is not spec:
        raise DomainError("elements belong to different doubles")
    out: dict[int, Element] = {}
    for i, x in X.coeffs.items():
        for j, y in Y.coeffs.items():
            xy = x @ spec.rho[i](y)
            for k in np.flatnonzero(spec.ring.N[i, j]):
                term = xy @ spec.c(i, j, int(k))
                out[int(k)] = out[int(k)] + term if int(k) in out else term
    return DoubleElement(spec, out)


def star_involution(X: DoubleElement) -> DoubleElement:
    """X*(k) = C^{0*}_{k k̄} ρ̃_k(X(k̄)*)."""
    spec = X.spec
    bar, u = spec.ring.dual, spec.ring.unit
    out = {}
    for j, x in X.coeffs.items():
        k = bar[j]
        out[k] = spec.c(k, j, u).adj() @ spec.rho[k](x.adj())
    return DoubleElement(spec, out)


def expectation(X: DoubleElement) -> Element:
    """ε(X) = X(0)."""
    return X(X.spec.ring.unit)


def expansion_normalizer(spec: DoubleSpec, i: int) -> Element:
    """ν_i = ε(R_i⋆R_i*), so that X(i) = ε(X⋆R_i*) ν_i⁻¹."""
    return expectation(generator(spec, i) @ generator(spec, i).adj())


def expand(X: DoubleElement) -> dict[int, Element]:
    """Recover the coefficients of X from ε alone."""
    spec = X.spec
    out = {}
    for i in range(spec.ring.rank):
        nu = expansion_normalizer(spec, i)
        inv = spec.coeff.element(np.linalg.inv(b) for b in nu.blocks)
        out[i] = expectation(X @ generator(spec, i).adj()) @ inv
    return out


def realize(X: DoubleElement) -> np.ndarray:
    """Σ_i embed(X(i)) R_i in the concrete realization."""
    real = X.spec.realization
    if real is None:
        raise DomainError("this double has no concrete realization")
    n = real.R[0].shape[0]
    out = np.zeros((n, n), dtype=complex)
    for i, x in X.coeffs.items():
        out += real.embed(x) @ real.R[i]
    return out


@dataclass(frozen=True)
class RelationsReport:
    residuals: dict[str, float]
    relative_commutant_dim: int | None = None
    expected_commutant_dim: int | None = None
    trivial_commutant: bool | None = None

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def failures(self, tol: float) -> list[str]:
        return [k for k, v in self.residuals.items() if not v <= tol]


def _commutant_dim(gens: list[np.ndarray], span: list[np.ndarray]) -> int:
    """dim {Y ∈ span(span) : [g, Y] = 0 for all g}."""
    cols = np.array([s.ravel() for s in span]).T
    a = np.vstack([np.array([(g @ s - s @ g).ravel() for s in span]).T for g in gens])
    ns = null_space(a, rcond=1e-10)
    if ns.shape[1] == 0:
        return 0
    return int(np.linalg.matrix_rank(cols @ ns, tol=1e-9))


def relations_check(spec: DoubleSpec, rng: np.random.Generator, samples: int = 5) -> RelationsReport:
    """Residuals of the relations (r), structure-constant data and associativity.

    On the formal level R_i⋆R_j = Σ C^k_ij R_k holds by construction, so the
    informative checks are associativity (the cocycle condition on C),
    the intertwining of C, and, when a realization exists, the four
    relations as literal matrix identities.
    """
    n = spec.ring.rank
    u = spec.ring.unit
    xs = [spec.coeff.random_element(rng) for _ in range(samples)]
    res: dict[str, float] = {}
    res["C_intertwiner"] = spec.intertwiner_residual(xs)
    res["C_normalization"] = spec.normalization_residual()
    R = [generator(spec, i) for i in range(n)]
    one = spec.coeff.identity()
    # formal relations
    res["formal_RX"] = max((R[i] @ coefficient(spec, x) - coefficient(spec, spec.rho[i](x)) @ R[i]).norm()
                           for i in range(n) for x in xs)
    res["formal_RstarR"] = max(((R[i].adj() @ R[i]) - coefficient(spec, one * spec.dims[i] ** 2)).norm()
                               for i in range(n))
    res["formal_Rstar"] = max((R[i].adj() - DoubleElement(spec, {spec.ring.dual[i]:
                                                               spec.c(spec.ring.dual[i], i, u).adj()})).norm()
                              for i in range(n))
    res["associativity"] = max(((R[i] @ R[j]) @ R[k] - R[i] @ (R[j] @ R[k])).norm()
                               for i in range(n) for j in range(n) for k in range(n))
    rel_dim = exp_dim = None
    trivial = None
    real = spec.realization
    if real is not None:
        emb = real.embed
        res["RX"] = max(np.abs(real.R[i] @ emb(x) - emb(spec.rho[i](x)) @ real.R[i]).max()
                        for i in range(n) for x in xs)
        res["RstarR"] = max(np.abs(real.R[i].conj().T @ real.R[i] - spec.dims[i] ** 2 * emb(one)).max()
                            for i in range(n))
        res["RR"] = max(np.abs(real.R[i] @ real.R[j]
                               - sum(emb(spec.c(i, j, k)) @ real.R[k] for k in range(n))).max()
                        for i in range(n) for j in range(n))
        res["Rstar"] = max(np.abs(real.R[i].conj().T
                                  - emb(spec.c(spec.ring.dual[i], i, u).adj()) @ real.R[spec.ring.dual[i]]).max()
                           for i in range(n))
        res["unit"] = float(np.abs(emb(one) - np.eye(len(emb(one)))).max())
        rel_dim, exp_dim = relative_commutant(spec)
        trivial = rel_dim == 1
        res["relative_commutant"] = float(abs(rel_dim - exp_dim))
    return RelationsReport(res, rel_dim, exp_dim, trivial)


def relative_commutant(spec: DoubleSpec) -> tuple[int, int]:
    """dim(Ã′ ∩ 𝔅) in the realization, and Σ_i dim(ρ̃_i, ι) predicted by X(i) ∈ (ρ̃_i, ι).

    An element X = Σ X(i)R_i commutes with Ã exactly when each X(i)
    intertwines ρ̃_i with the identity.  Both sides are ℂ when the ρ̃_i are
    outer and Ã is a factor; inner ρ̃_i make the commutant larger.
    """
    real = spec.realization
    basis = spec.coeff.basis()
    span = [real.embed(b) @ real.R[i] for i in range(spec.ring.rank) for b in basis]
    gens = [real.embed(b) for b in basis]
    dim = _commutant_dim(gens, span)
    predicted = 0
    for i in range(spec.ring.rank):
        # T ρ̃_i(x) = x T for x in a basis of Ã, T ∈ Ã
        rows = []
        for x in basis:
            rows.append(np.array([(t @ spec.rho[i](x) - x @ t).dense().ravel() for t in basis]).T)
        a = np.vstack(rows)
        sv = np.linalg.svd(a, compute_uv=False)
        predicted += len(basis) - int(np.sum(sv > 1e-9))
    return dim, predicted


def index_check(spec: DoubleSpec) -> dict[str, float]:
    """[𝔅 : Ã] as a dimension ratio against the multiplicity Σ_i d_i²."""
    real = spec.realization
    if real is None:
        raise DomainError("index needs a concrete realization")
    basis = spec.coeff.basis()
    span = np.array([(real.embed(b) @ real.R[i]).ravel() for i in range(spec.ring.rank) for b in basis])
    dim_b = np.linalg.matrix_rank(span, tol=1e-9)
    ratio = dim_b / spec.coeff.dim
    mult = float(sum(d * d for d in spec.dims))
    return {"dim_B": float(dim_b), "dim_A": float(spec.coeff.dim), "ratio": float(ratio),
            "multiplicity": mult, "residual": abs(ratio - mult)}


def shift_matrix(n: int) -> np.ndarray:
    """e_k ↦ e_{k+1 mod n}."""
    return np.roll(np.eye(n), 1, axis=0)


def _pointed_constants(n: int, alg: MatrixAlgebra, signs: Mapping[tuple[int, int], complex] | None):
    C = {}
    for i in range(n):
        for j in range(n):
            c = (signs or {}).get((i, j), 1.0)
            C[(i, j, (i + j) % n)] = alg.scalar(c)
    return C


def pointed_inner(n: int, signs: Mapping[tuple[int, int], complex] | None = None) -> DoubleSpec:
    """Z_n with Ã = M_n, ρ̃_i = Ad(u^i), R_i = u^i ⊗ w^i inside M_n ⊗ M_n."""
    alg = MatrixAlgebra((n,))
    u = shift_matrix(n)
    pows = [np.linalg.matrix_power(u, i) for i in range(n)]

    def make_rho(i):
        p = alg.element([pows[i]])
        return lambda x: p @ x @ p.adj()

    def embed(x: Element) -> np.ndarray:
        return np.kron(x.blocks[0], np.eye(n))

    R = tuple(np.kron(pows[i], pows[i]) for i in range(n))
    return DoubleSpec(pointed(n), alg, tuple(make_rho(i) for i in range(n)),
                      _pointed_constants(n, alg, signs), (1.0,) * n, Realization(embed, R),
                      f"Z{n} inner", {"pointed": True, "variant": "inner", "n": n})


def pointed_outer(n: int, signs: Mapping[tuple[int, int], complex] | None = None) -> DoubleSpec:
    """Z_n acting on Ã = ℂ^n by cyclic shifts; the crossed product is M_n."""
    alg = MatrixAlgebra((1,) * n)
    u = shift_matrix(n)
    pows = [np.linalg.matrix_power(u, i) for i in range(n)]

    def embed(x: Element) -> np.ndarray:
        return np.diag([b[0, 0] for b in x.blocks])

    def make_rho(i):
        return lambda x: alg.element([[[b[0, 0]]] for b in np.roll([b for b in x.blocks], i, axis=0)])

    R = tuple(pows)
    return DoubleSpec(pointed(n), alg, tuple(make_rho(i) for i in range(n)),
                      _pointed_constants(n, alg, signs), (1.0,) * n, Realization(embed, R),
                      f"Z{n} outer", {"pointed": True, "variant": "outer", "n": n})


def trivial_double(alg: MatrixAlgebra) -> DoubleSpec:
    """Only the unit label: the double is Ã itself."""
    ring = pointed(1)
    return DoubleSpec(ring, alg, (lambda x: x,), {(0, 0, 0): alg.identity()}, (1.0,),
                      Realization(lambda x: x.dense(), (np.eye(alg.hilbert_dim),)), "trivial",
                      {"pointed": True, "variant": "trivial"})


@dataclass(frozen=True)
class ExpectationReport:
    unital: float
    idempotent: float
    positivity: float
    expansion: float
    faithful: bool


def expectation_check(spec: DoubleSpec, rng: np.random.Generator, samples: int = 5) -> ExpectationReport:
    """ε unital, idempotent onto the 0-component, positive and faithful, plus expansion recovery."""
    one = spec.coeff.identity()
    unital = (expectation(unit(spec)) - one).norm()
    idem, pos, exp_err = 0.0, 0.0, 0.0
    faithful = True
    for _ in range(samples):
        X = random_element(spec, rng)
        e = expectation(X)
        idem = max(idem, (expectation(coefficient(spec, e)) - e).norm())
        p = expectation(X.adj() @ X)
        herm = (p - p.adj()).norm()
        low = min(float(np.linalg.eigvalsh((b + b.conj().T) / 2).min()) for b in p.blocks)
        pos = max(pos, herm, max(0.0, -low))
        if X.norm() > 0 and max(np.trace(b).real for b in p.blocks) <= 1e-12:
            faithful = False
        rec = expand(X)
        exp_err = max(exp_err, max((rec[i] - X(i)).norm() for i in range(spec.ring.rank)))
    return ExpectationReport(unital, idem, pos, exp_err, faithful)


@dataclass(frozen=True)
class DoubleDimensions:
    group: str
    order: int
    rows: list[tuple[int, int, int]]  # (class index, centralizer irrep index, dimension)

    @property
    def dims(self) -> list[int]:
        return [d for _, _, d in self.rows]

    @property
    def sum_of_squares(self) -> int:
        return sum(d * d for d in self.dims)

    @property
    def balanced(self) -> bool:
        return self.sum_of_squares == self.order ** 2


def group_double_dimensions(G: Group) -> DoubleDimensions:
    """Irreducibles of D(G): pairs (class, irrep of its centralizer), of dimension |class|·dim."""
    if G.order > 256:
        raise DomainError(f"group order {G.order} exceeds 256")
    rows = []
    for r, cls in enumerate(G.conjugacy_classes()):
        cent = G.centralizer(cls[0])
        if len(cls) * len(cent) != G.order:
            raise DomainError("orbit-stabilizer fails; group table inconsistent")
        degrees = character_table(G.subgroup(cent)).degrees
        if sum(d * d for d in degrees) != len(cent):
            raise DomainError("centralizer character degrees are inconsistent")
        for s, deg in enumerate(degrees):
            rows.append((r, s, len(cls) * deg))
    out = DoubleDimensions(G.name, G.order, rows)
    if not out.balanced:
        raise DomainError(f"Σd² = {out.sum_of_squares} differs from |G|² = {G.order ** 2}")
    return out
