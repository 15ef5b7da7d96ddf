"""Fusion rings, finite groups and their unitary representations.

Group elements are the integers 0..|G|-1 with a Cayley table; characters
are found by simultaneously diagonalizing the class-sum operators
(Burnside's method).  Intertwiners between representations are plain
matrices, with (ρ, σ) = {T : T ρ(g) = σ(g) T}.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import null_space

from .errors import DomainError
from .qsys import Element

MAX_GROUP_ORDER = 1024


# finite groups

@dataclass(frozen=True, eq=False)
class Group:
    table: np.ndarray
    name: str = ""

    def __post_init__(self):
        t = np.asarray(self.table, dtype=int)
        n = len(t)
        if t.shape != (n, n) or n < 1:
            raise DomainError("Cayley table must be square and non-empty")
        if t.min() < 0 or t.max() >= n:
            raise DomainError("Cayley table entries out of range")
        for row in t:
            if len(set(row)) != n:
                raise DomainError("Cayley table rows are not permutations")
        for col in t.T:
            if len(set(col)) != n:
                raise DomainError("Cayley table columns are not permutations")
        e = [i for i in range(n) if np.array_equal(t[i], np.arange(n))]
        if not e or not np.array_equal(t[:, e[0]], np.arange(n)):
            raise DomainError("Cayley table has no identity")
        # associativity: (ab)c = a(bc) for all triples, vectorized per a
        for a in range(n):
            if not np.array_equal(t[t[a]][:, :], t[a][t]):
                raise DomainError("Cayley table is not associative")
        object.__setattr__(self, "table", t)

    @property
    def order(self) -> int:
        return len(self.table)

    @property
    def identity(self) -> int:
        return int(np.flatnonzero((self.table == np.arange(self.order)).all(axis=1))[0])

    def mul(self, a: int, b: int) -> int:
        return int(self.table[a, b])

    def inverse(self, a: int) -> int:
        return int(np.flatnonzero(self.table[a] == self.identity)[0])

    def inverses(self) -> np.ndarray:
        e = self.identity
        return np.array([np.flatnonzero(self.table[a] == e)[0] for a in range(self.order)])

    def conjugacy_classes(self) -> list[list[int]]:
        inv = self.inverses()
        seen, classes = set(), []
        for g in range(self.order):
            if g in seen:
                continue
            cls = sorted({int(self.table[self.table[h, g], inv[h]]) for h in range(self.order)})
            seen.update(cls)
            classes.append(cls)
        classes.sort(key=lambda c: (c[0] != self.identity, len(c), c[0]))
        return classes

    def centralizer(self, g: int) -> list[int]:
        return [h for h in range(self.order) if self.table[h, g] == self.table[g, h]]

    def subgroup(self, elements: Sequence[int], name: str = "") -> Group:
        elements = list(elements)
        index = {g: i for i, g in enumerate(elements)}
        try:
            sub = [[index[int(self.table[a, b])] for b in elements] for a in elements]
        except KeyError:
            raise DomainError("elements do not form a subgroup") from None
        return Group(np.array(sub), name)

    def generators(self) -> list[int]:
        """A small generating set, chosen greedily."""
        gens, span = [], {self.identity}
        for g in sorted(range(self.order), key=lambda g: -self.element_order(g)):
            if g in span:
                continue
            gens.append(g)
            span = self._closure(gens)
            if len(span) == self.order:
                break
        return gens

    def element_order(self, g: int) -> int:
        k, x = 1, g
        while x != self.identity:
            x = self.mul(x, g)
            k += 1
        return k

    def _closure(self, gens: Sequence[int]) -> set[int]:
        span, frontier = {self.identity}, [self.identity]
        while frontier:
            nxt = []
            for x in frontier:
                for g in gens:
                    y = self.mul(x, g)
                    if y not in span:
                        span.add(y)
                        nxt.append(y)
            frontier = nxt
        return span

    def to_json(self) -> dict:
        return {"order": self.order, "table": self.table.tolist()}

    @classmethod
    def from_json(cls, doc: dict, name: str = "") -> Group:
        try:
            order, table = int(doc["order"]), doc["table"]
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"bad group document: {exc}") from None
        g = cls(np.array(table), name)
        if g.order != order:
            raise DomainError(f"declared order {order} does not match table size {g.order}")
        return g


def permutation_group(perms: Sequence[tuple[int, ...]], name: str = "") -> Group:
    """Group table of a list of permutations closed under composition (p∘q)."""
    perms = [tuple(p) for p in perms]
    index = {p: i for i, p in enumerate(perms)}
    table = [[index[tuple(p[q[k]] for k in range(len(q)))] for q in perms] for p in perms]
    return Group(np.array(table), name)


def cyclic(n: int) -> Group:
    return Group(np.add.outer(np.arange(n), np.arange(n)) % n, f"Z{n}")


def symmetric(n: int) -> Group:
    return permutation_group(list(itertools.permutations(range(n))), f"S{n}")


def dihedral(n: int) -> Group:
    rots = [tuple((k + r) % n for k in range(n)) for r in range(n)]
    refl = [tuple((r - k) % n for k in range(n)) for r in range(n)]
    return permutation_group(rots + refl, f"D{n}")


def quaternion() -> Group:
    """Q_8 from its 2x2 complex matrix realization."""
    one = np.eye(2)
    i = np.array([[1j, 0], [0, -1j]])
    j = np.array([[0, 1], [-1, 0]])
    k = i @ j
    mats = [s * m for m in (one, i, j, k) for s in (1, -1)]
    table = [[next(c for c, m in enumerate(mats) if np.allclose(a @ b, m)) for b in mats] for a in mats]
    return Group(np.array(table), "Q8")


def direct_product(g: Group, h: Group) -> Group:
    n, m = g.order, h.order
    table = np.empty((n * m, n * m), dtype=int)
    for a, b in itertools.product(range(n), range(m)):
        for c, d in itertools.product(range(n), range(m)):
            table[a * m + b, c * m + d] = g.table[a, c] * m + h.table[b, d]
    return Group(table, f"{g.name}x{h.name}")


BUILTIN_GROUPS: dict[str, Callable[[], Group]] = {
    "Z2": lambda: cyclic(2), "Z3": lambda: cyclic(3), "Z4": lambda: cyclic(4),
    "Z5": lambda: cyclic(5), "Z6": lambda: cyclic(6), "S3": lambda: symmetric(3),
    "S4": lambda: symmetric(4), "D4": lambda: dihedral(4), "D5": lambda: dihedral(5),
    "Q8": quaternion, "Z2xZ2": lambda: direct_product(cyclic(2), cyclic(2)),
}


def builtin_group(name: str) -> Group:
    if name in BUILTIN_GROUPS:
        return BUILTIN_GROUPS[name]()
    if name.startswith("Z") and name[1:].isdigit():
        return cyclic(int(name[1:]))
    if name.startswith("S") and name[1:].isdigit() and int(name[1:]) <= 6:
        return symmetric(int(name[1:]))
    if name.startswith("D") and name[1:].isdigit():
        return dihedral(int(name[1:]))
    raise DomainError(f"unknown group {name!r}")


# character tables

@dataclass(frozen=True, eq=False)
class CharacterTable:
    group: Group
    classes: list[list[int]]
    chars: np.ndarray  # chars[χ, class]

    @property
    def degrees(self) -> list[int]:
        return [int(round(c.real)) for c in self.chars[:, 0]]

    def orthogonality_residual(self) -> float:
        sizes = np.array([len(c) for c in self.classes])
        gram = (self.chars * sizes) @ self.chars.conj().T / self.group.order
        return float(np.abs(gram - np.eye(len(gram))).max())

    def class_of(self) -> np.ndarray:
        out = np.empty(self.group.order, dtype=int)
        for r, cls in enumerate(self.classes):
            out[cls] = r
        return out


def character_table(G: Group, seed: int = 0) -> CharacterTable:
    """Irreducible characters by eigendecomposition of class-sum operators."""
    if G.order > MAX_GROUP_ORDER:
        raise DomainError(f"group order {G.order} exceeds {MAX_GROUP_ORDER}")
    classes = G.conjugacy_classes()
    k = len(classes)
    cls_of = np.empty(G.order, dtype=int)
    for r, c in enumerate(classes):
        cls_of[c] = r
    inv = G.inverses()
    # M[r][s, t] = #{x ∈ C_r : x⁻¹ z_t ∈ C_s} for a fixed z_t ∈ C_t
    M = np.zeros((k, k, k))
    for t, cls in enumerate(classes):
        z = cls[0]
        ys = G.table[inv, z]
        np.add.at(M, (cls_of, cls_of[ys], t), 1)
    rng = np.random.default_rng(seed)
    sizes = np.array([len(c) for c in classes], dtype=float)
    for _ in range(8):
        combo = np.tensordot(rng.standard_normal(k), M, axes=1)
        w, vecs = np.linalg.eig(combo)
        if np.min(np.abs(w[:, None] - w[None, :]) + np.eye(k) * 1e9) > 1e-6:
            break
    else:
        raise DomainError("class-sum operators could not be separated")
    omegas = (vecs / vecs[0]).T  # ω_χ(C_r) normalized by ω(C_identity) = 1
    chars = []
    for om in omegas:
        deg = math.sqrt(G.order / np.sum(np.abs(om) ** 2 / sizes))
        chars.append(om * deg / sizes)
    chars = np.array(chars)
    # integer degrees; trivial character first, then by degree
    order = sorted(range(k), key=lambda i: (not np.allclose(chars[i], 1), round(chars[i, 0].real),
                                             tuple(np.round(chars[i].real, 6)), tuple(np.round(chars[i].imag, 6))))
    chars = chars[order]
    re_, im_ = chars.real.copy(), chars.imag.copy()
    re_[np.abs(re_) < 1e-12] = 0.0
    im_[np.abs(im_) < 1e-12] = 0.0
    chars = re_ + 1j * im_
    table = CharacterTable(G, classes, chars)
    if table.orthogonality_residual() > 1e-8:
        raise DomainError("character table failed orthogonality; group table inconsistent")
    return table


# fusion rings

@dataclass(frozen=True, eq=False)
class FusionRing:
    """Labels with multiplicities N[i, j, k] = N^k_{ij} and a conjugation."""

    labels: tuple[str, ...]
    N: np.ndarray
    dual: tuple[int, ...]
    unit: int = 0
    name: str = ""

    def __post_init__(self):
        n = len(self.labels)
        N = np.asarray(self.N, dtype=np.int64)
        if N.shape != (n, n, n) or (N < 0).any():
            raise DomainError("multiplicity tensor must be nonnegative with shape (n, n, n)")
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "dual", tuple(int(x) for x in self.dual))
        self.validate()

    @property
    def rank(self) -> int:
        return len(self.labels)

    def index(self, label) -> int:
        if isinstance(label, (int, np.integer)) and 0 <= label < self.rank:
            return int(label)
        if label in self.labels:
            return self.labels.index(label)
        raise DomainError(f"label {label!r} is not in the ring")

    def validate(self) -> None:
        n, N, u, bar = self.rank, self.N, self.unit, self.dual
        if sorted(bar) != list(range(n)) or any(bar[bar[i]] != i for i in range(n)):
            raise DomainError("conjugation is not an involution on labels")
        eye = np.eye(n, dtype=np.int64)
        if not (np.array_equal(N[u], eye) and np.array_equal(N[:, u, :], eye)):
            raise DomainError("unit axiom N^k_{0j} = δ_jk fails")
        for i in range(n):
            for j in range(n):
                if N[i, j, u] != (1 if j == bar[i] else 0):
                    raise DomainError(f"N^0_{{{i}{j}}} must be δ_{{j, ī}}")
        lhs = np.einsum("ijm,mkl->ijkl", N, N)
        rhs = np.einsum("iml,jkm->ijkl", N, N)
        if not np.array_equal(lhs, rhs):
            raise DomainError("fusion rules are not associative")
        # Frobenius reciprocity N^k_{ij} = N^j_{īk}
        for i in range(n):
            if not np.array_equal(N[i], N[bar[i]].T):
                raise DomainError("Frobenius reciprocity fails")

    def fusion_matrix(self, i) -> np.ndarray:
        """(m^i)_{jk} = N^k_{ij}."""
        return self.N[self.index(i)].astype(float)

    def dimensions(self) -> np.ndarray:
        """The Perron–Frobenius dimension vector, normalized at the unit."""
        total = sum(self.fusion_matrix(i) + self.fusion_matrix(i).T for i in range(self.rank))
        w, v = np.linalg.eigh(total)
        d = np.abs(v[:, -1])
        return d / d[self.unit]

    def to_json(self) -> dict:
        entries = [[self.labels[i], self.labels[j], self.labels[k], int(self.N[i, j, k])]
                   for i, j, k in zip(*np.nonzero(self.N))]
        return {"labels": list(self.labels), "unit": self.labels[self.unit],
                "dual": {self.labels[i]: self.labels[self.dual[i]] for i in range(self.rank)},
                "N": entries}

    @classmethod
    def from_json(cls, doc: dict, name: str = "") -> FusionRing:
        try:
            labels = [str(x) for x in doc["labels"]]
            idx = {l: i for i, l in enumerate(labels)}
            unit = idx[str(doc["unit"])]
            dual_doc = doc["dual"]
            if isinstance(dual_doc, dict):
                dual = [idx[str(dual_doc[l])] for l in labels]
            else:
                dual = [idx[str(x)] for x in dual_doc]
            n = len(labels)
            N = np.zeros((n, n, n), dtype=np.int64)
            for entry in doc["N"]:
                i, j, k, m = entry
                N[idx[str(i)], idx[str(j)], idx[str(k)]] = int(m)
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"bad fusion ring document: {exc!r}") from None
        return cls(tuple(labels), N, tuple(dual), unit, name)


def fibonacci() -> FusionRing:
    N = np.zeros((2, 2, 2), dtype=int)
    N[0, 0, 0] = N[0, 1, 1] = N[1, 0, 1] = N[1, 1, 0] = N[1, 1, 1] = 1
    return FusionRing(("1", "tau"), N, (0, 1), 0, "Fibonacci")


def ising() -> FusionRing:
    one, sig, psi = 0, 1, 2
    N = np.zeros((3, 3, 3), dtype=int)
    for j in range(3):
        N[one, j, j] = N[j, one, j] = 1
    N[sig, sig, one] = N[sig, sig, psi] = 1
    N[sig, psi, sig] = N[psi, sig, sig] = 1
    N[psi, psi, one] = 1
    return FusionRing(("1", "sigma", "psi"), N, (0, 1, 2), 0, "Ising")


def pointed(n: int) -> FusionRing:
    """The group ring of Z_n: i ⊗ j = i + j mod n."""
    N = np.zeros((n, n, n), dtype=int)
    for i in range(n):
        for j in range(n):
            N[i, j, (i + j) % n] = 1
    return FusionRing(tuple(str(i) for i in range(n)), N, tuple((-i) % n for i in range(n)), 0, f"Vec(Z{n})")


BUILTIN_RINGS: dict[str, Callable[[], FusionRing]] = {"fibonacci": fibonacci, "ising": ising}


def builtin_ring(name: str) -> FusionRing:
    key = name.lower()
    if key in BUILTIN_RINGS:
        return BUILTIN_RINGS[key]()
    if key.startswith("vec_z") and key[5:].isdigit():
        return pointed(int(key[5:]))
    if key.startswith("rep_"):
        return rep_fusion_ring(builtin_group(name[4:]))
    raise DomainError(f"unknown fusion ring {name!r}")


def pf_dimension(fr: FusionRing, label) -> float:
    """Perron–Frobenius eigenvalue of the fusion matrix m^label."""
    w = np.linalg.eigvals(fr.fusion_matrix(label))
    return float(np.max(np.abs(w)))


def amenability_check(fr: FusionRing, label) -> float:
    """|PF dimension − ‖m^label‖|."""
    return abs(pf_dimension(fr, label) - float(np.linalg.norm(fr.fusion_matrix(label), 2)))


def homomorphism_residual(fr: FusionRing, d: Sequence[float]) -> float:
    """max |d_i d_j − Σ_k N^k_ij d_k|."""
    d = np.asarray(d, dtype=float)
    return float(np.abs(np.outer(d, d) - np.einsum("ijk,k->ij", fr.N, d)).max())


@dataclass(frozen=True)
class CharacterVerdict:
    accepted: bool
    positive: bool
    homomorphism_residual: float
    distance_to_pf: float


def positive_character_check(fr: FusionRing, d: Sequence[float], tol: float = 1e-10) -> CharacterVerdict:
    """Accept ``d`` only if it is a positive ring character; such a character is the PF one."""
    d = np.asarray(d, dtype=float)
    positive = bool((d > 0).all())
    res = homomorphism_residual(fr, d)
    dist = float(np.abs(d - fr.dimensions()).max())
    return CharacterVerdict(positive and res <= tol, positive, res, dist)


def rep_fusion_ring(G: Group) -> FusionRing:
    """Fusion ring of Rep(G) from its character table."""
    ct = character_table(G)
    sizes = np.array([len(c) for c in ct.classes])
    chi = ct.chars
    k = len(chi)
    prod = np.einsum("ir,jr,kr,r->ijk", chi, chi, chi.conj(), sizes) / G.order
    N = np.rint(prod.real).astype(np.int64)
    if np.abs(prod - N).max() > 1e-6:
        raise DomainError("fusion multiplicities are not integers; group table inconsistent")
    dual = [int(np.argmin([np.abs(chi[j] - chi[i].conj()).max() for j in range(k)])) for i in range(k)]
    labels = tuple(f"chi{i}" for i in range(k))
    return FusionRing(labels, N, tuple(dual), 0, f"Rep({G.name})")


# unitary representations and conjugates

@dataclass(frozen=True, eq=False)
class RepObject:
    """A unitary representation given on every group element."""

    group: Group
    matrices: tuple[np.ndarray, ...]
    name: str = ""

    def __post_init__(self):
        mats = tuple(np.asarray(m, dtype=complex) for m in self.matrices)
        if len(mats) != self.group.order:
            raise DomainError("need one matrix per group element")
        n = mats[0].shape[0]
        for m in mats:
            if m.shape != (n, n) or np.abs(m @ m.conj().T - np.eye(n)).max() > 1e-10:
                raise DomainError("representation matrices must be unitary")
        object.__setattr__(self, "matrices", mats)

    @property
    def dim(self) -> int:
        return self.matrices[0].shape[0]

    def homomorphism_residual(self) -> float:
        t = self.group.table
        return max(float(np.abs(self.matrices[a] @ self.matrices[b] - self.matrices[t[a, b]]).max())
                   for a in range(self.group.order) for b in range(self.group.order))

    def conjugate(self) -> RepObject:
        return RepObject(self.group, tuple(m.conj() for m in self.matrices), f"{self.name}bar")

    def __add__(self, other: RepObject) -> RepObject:
        from scipy.linalg import block_diag
        return RepObject(self.group, tuple(block_diag(a, b) for a, b in zip(self.matrices, other.matrices)),
                         f"{self.name}+{other.name}")

    def tensor(self, other: RepObject) -> RepObject:
        return RepObject(self.group, tuple(np.kron(a, b) for a, b in zip(self.matrices, other.matrices)),
                         f"{self.name}{other.name}")

    def character(self) -> np.ndarray:
        return np.array([np.trace(m) for m in self.matrices])

    @classmethod
    def from_generators(cls, G: Group, images: dict[int, np.ndarray], name: str = "") -> RepObject:
        """Extend generator images to the whole group by breadth-first search."""
        n = next(iter(images.values())).shape[0]
        mats = {G.identity: np.eye(n, dtype=complex)}
        frontier = [G.identity]
        while frontier:
            nxt = []
            for x in frontier:
                for g, m in images.items():
                    y = G.mul(x, g)
                    if y not in mats:
                        mats[y] = mats[x] @ m
                        nxt.append(y)
            frontier = nxt
        if len(mats) != G.order:
            raise DomainError("generator images do not reach the whole group")
        rep = cls(G, tuple(mats[g] for g in range(G.order)), name)
        if rep.homomorphism_residual() > 1e-10:
            raise DomainError("generator images do not define a representation")
        return rep


def intertwiners(rho1: RepObject, rho2: RepObject) -> list[np.ndarray]:
    """Orthonormal basis of (ρ1, ρ2) = {T : T ρ1(g) = ρ2(g) T}."""
    n1, n2 = rho1.dim, rho2.dim
    rows = []
    for g in rho1.group.generators() or [rho1.group.identity]:
        a, b = rho1.matrices[g], rho2.matrices[g]
        # row-major vec(T A) = (I ⊗ Aᵀ) vec T, vec(B T) = (B ⊗ I) vec T
        rows.append(np.kron(np.eye(n2), a.T) - np.kron(b, np.eye(n1)))
    ns = null_space(np.vstack(rows), rcond=1e-10)
    return [ns[:, i].reshape(n2, n1) for i in range(ns.shape[1])]


def is_irreducible(rho: RepObject) -> bool:
    return len(intertwiners(rho, rho)) == 1


def trivial_rep(G: Group) -> RepObject:
    return RepObject(G, tuple(np.eye(1) for _ in range(G.order)), "1")


def permutation_matrix(p: Sequence[int]) -> np.ndarray:
    m = np.zeros((len(p), len(p)))
    for k, pk in enumerate(p):
        m[pk, k] = 1
    return m


def s3_standard() -> RepObject:
    """The 2-dimensional irreducible representation of S_3."""
    G = symmetric(3)
    perms = list(itertools.permutations(range(3)))
    # restrict the permutation representation to the sum-zero plane
    basis = np.array([[1, -1, 0], [1, 1, -2]], dtype=float).T
    basis /= np.linalg.norm(basis, axis=0)
    mats = tuple(basis.T @ permutation_matrix(p) @ basis for p in perms)
    return RepObject(G, mats, "std")


def s3_sign() -> RepObject:
    G = symmetric(3)
    perms = list(itertools.permutations(range(3)))
    return RepObject(G, tuple(np.array([[np.linalg.det(permutation_matrix(p))]]) for p in perms), "sgn")


def cyclic_character_rep(n: int, k: int = 1) -> RepObject:
    """g ↦ e^{2πi k g / n}, the defining rep of Z_n ⊂ U(1) for k = 1."""
    G = cyclic(n)
    return RepObject(G, tuple(np.array([[np.exp(2j * np.pi * k * g / n)]]) for g in range(n)), f"z{k}")


def q8_spin() -> RepObject:
    """The 2-dimensional irreducible representation of Q_8."""
    one = np.eye(2)
    i = np.array([[1j, 0], [0, -1j]])
    j = np.array([[0, 1], [-1, 0]])
    k = i @ j
    mats = tuple(s * m for m in (one, i, j, k) for s in (1, -1))
    return RepObject(quaternion(), mats, "spin")


BUILTIN_REPS: dict[str, Callable[[], RepObject]] = {
    "S3.std": s3_standard, "S3.sgn": s3_sign, "S3.triv": lambda: trivial_rep(symmetric(3)),
    "Q8.spin": q8_spin, "Z4.defining": lambda: cyclic_character_rep(4),
    "Z3.defining": lambda: cyclic_character_rep(3),
}


def builtin_rep(name: str) -> RepObject:
    parts = [p.strip() for p in name.split("+")]
    reps = []
    for p in parts:
        if p not in BUILTIN_REPS:
            raise DomainError(f"unknown representation {p!r}")
        reps.append(BUILTIN_REPS[p]())
    out = reps[0]
    for r in reps[1:]:
        out = out + r
    return out


@dataclass(frozen=True, eq=False)
class ConjugateSolution:
    """R ∈ (ι, ρ̄⊗ρ) and R̄ ∈ (ι, ρ⊗ρ̄) as column vectors."""

    rep: RepObject
    conj: RepObject
    R: np.ndarray
    Rbar: np.ndarray

    @property
    def norms(self) -> tuple[float, float]:
        return float(np.linalg.norm(self.R)), float(np.linalg.norm(self.Rbar))

    def equation_residuals(self) -> tuple[float, float]:
        """Residuals of (R*⊗1)(1⊗R̄) = 1_ρ̄ and (R̄*⊗1)(1⊗R) = 1_ρ."""
        n = self.rep.dim
        eye = np.eye(n)
        a = np.kron(self.R.conj().T, eye) @ np.kron(eye, self.Rbar)
        b = np.kron(self.Rbar.conj().T, eye) @ np.kron(eye, self.R)
        return float(np.abs(a - eye).max()), float(np.abs(b - eye).max())

    def intertwining_residuals(self) -> tuple[float, float]:
        """‖(ρ̄⊗ρ)(g)R − R‖ and ‖(ρ⊗ρ̄)(g)R̄ − R̄‖ over the group."""
        r = max(float(np.abs(np.kron(c, m) @ self.R - self.R).max())
                for m, c in zip(self.rep.matrices, self.conj.matrices))
        rb = max(float(np.abs(np.kron(m, c) @ self.Rbar - self.Rbar).max())
                 for m, c in zip(self.rep.matrices, self.conj.matrices))
        return r, rb

    def gauged(self, lam: complex) -> ConjugateSolution:
        """(λR, λ̄⁻¹R̄)."""
        return ConjugateSolution(self.rep, self.conj, lam * self.R, self.Rbar / np.conj(lam))

    def gauged_by(self, v: np.ndarray) -> ConjugateSolution:
        """((1⊗v)R, (v*⁻¹⊗1)R̄) for invertible v ∈ (ρ, ρ)."""
        n = self.rep.dim
        vinv_adj = np.linalg.inv(v.conj().T)
        return ConjugateSolution(self.rep, self.conj, np.kron(np.eye(n), v) @ self.R,
                                 np.kron(vinv_adj, np.eye(n)) @ self.Rbar)


def solve_conjugate(rho: RepObject) -> ConjugateSolution:
    """Standard solution R = R̄ = Σ_i e_i ⊗ e_i with ρ̄ the conjugate representation."""
    n = rho.dim
    for m in rho.matrices:
        if np.abs(m @ m.conj().T - np.eye(n)).max() > 1e-10:
            raise DomainError("representation is not unitary")
    vec = np.eye(n).reshape(n * n, 1).astype(complex)
    return ConjugateSolution(rho, rho.conjugate(), vec.copy(), vec.copy())


@dataclass(frozen=True)
class IntrinsicDimension:
    value: float
    irreducible: bool
    flagged: bool = False
    parts: tuple[float, ...] = ()


def intrinsic_dimension(sol: ConjugateSolution,
                        decomposition: Sequence[RepObject] | None = None) -> IntrinsicDimension:
    """‖R‖‖R̄‖ for irreducibles; additive over a supplied decomposition otherwise."""
    a, b = sol.equation_residuals()
    if max(a, b) > 1e-9:
        raise DomainError("conjugate equations are not satisfied", max(a, b))
    if is_irreducible(sol.rep):
        return IntrinsicDimension(sol.norms[0] * sol.norms[1], True)
    if decomposition is None:
        return IntrinsicDimension(sol.norms[0] * sol.norms[1], False, flagged=True)
    if sum(r.dim for r in decomposition) != sol.rep.dim:
        raise DomainError("decomposition dimensions do not add up")
    parts = []
    for r in decomposition:
        if not is_irreducible(r):
            raise DomainError("decomposition contains a reducible summand")
        if not intertwiners(r, sol.rep):
            raise DomainError("decomposition summand does not occur in the representation")
        parts.append(intrinsic_dimension(solve_conjugate(r)).value)
    return IntrinsicDimension(float(sum(parts)), False, parts=tuple(parts))


def frobenius_map(T: np.ndarray, sol1: ConjugateSolution, sol2: ConjugateSolution) -> np.ndarray:
    """T• = (1_ρ̄₂ ⊗ R̄₁*(T*⊗1_ρ̄₁))(R₂ ⊗ 1_ρ̄₁) for T ∈ (ρ₁, ρ₂)."""
    n1, n2 = sol1.rep.dim, sol2.rep.dim
    T = np.asarray(T, dtype=complex)
    if T.shape != (n2, n1):
        raise DomainError("intertwiner has the wrong shape")
    res = max(float(np.abs(T @ a - b @ T).max()) for a, b in zip(sol1.rep.matrices, sol2.rep.matrices))
    if res > 1e-9 * max(1.0, np.abs(T).max()):
        raise DomainError("T is not an intertwiner", res)
    inner = sol1.Rbar.conj().T @ np.kron(T.conj().T, np.eye(n1))
    return np.kron(np.eye(n2), inner) @ np.kron(sol2.R, np.eye(n1))


@dataclass(frozen=True)
class CanonicalReport:
    equation: float
    s_lambda_t: complex
    t_s: complex
    scalar_residuals: tuple[float, float]
    intertwining: tuple[float, float]
    expectation: dict[str, float] = field(default_factory=dict)

    @property
    def residual(self) -> float:
        return max(self.equation, *self.scalar_residuals, *self.intertwining,
                   *self.expectation.values(), 0.0)

    @property
    def nonzero(self) -> bool:
        return abs(self.s_lambda_t) > 1e-9 and abs(self.t_s) > 1e-9


def _scalar_part(x: Element) -> tuple[complex, float]:
    c = x.blocks[0][0, 0] if x.blocks[0].size else 0
    return complex(c), (x - x.algebra.scalar(c)).norm()


def canonical_endo_check(lam: Callable[[Element], Element], T: Element, S: Element,
                         samples: Sequence[Element], subalgebra: Callable[[Element], bool] | None = None
                         ) -> CanonicalReport:
    """Check λ(S)S = S², S*λ(T), T*S ∈ ℂ∖{0}, and E = S*λ(·)S.

    ``lam`` must be a unital *-endomorphism; multiplicativity and unitality
    are tested on ``samples`` first.  With ``subalgebra`` (a membership
    predicate) S is also required to lie in 𝔅.
    """
    alg = T.algebra
    bad = max([(lam(x @ y) - lam(x) @ lam(y)).norm() for x in samples for y in samples]
              + [(lam(alg.identity()) - alg.identity()).norm()]
              + [(lam(x.adj()) - lam(x).adj()).norm() for x in samples])
    if bad > 1e-9:
        raise DomainError("λ is not a unital *-endomorphism on the samples", bad)
    eq = (lam(S) @ S - S @ S).norm()
    a, ra = _scalar_part(S.adj() @ lam(T))
    b, rb = _scalar_part(T.adj() @ S)
    it_t = max((T @ x - lam(x) @ T).norm() for x in samples)
    if subalgebra is None:
        it_s = max((S @ lam(x) - lam(lam(x)) @ S).norm() for x in samples)
    else:
        it_s = 0.0 if subalgebra(S) else 1.0
    def E(x):
        return S.adj() @ lam(x) @ S
    exp = {
        "unital": (E(alg.identity()) - alg.identity()).norm(),
        "idempotent": max((E(E(x)) - E(x)).norm() for x in samples),
        "positivity": max(max(0.0, -min(np.linalg.eigvalsh(b).min() for b in E(x.adj() @ x).blocks))
                          for x in samples),
    }
    return CanonicalReport(eq, a, b, (ra, rb), (it_t, it_s), exp)


def conjugate_canonical_check(sol: ConjugateSolution) -> CanonicalReport:
    """(can2) for λ = ρρ̄ with T = R̄ and S = ρ(R), in the intertwiner calculus.

    Products of intertwiners are compositions after padding with identities
    on the right, the usual reading of algebra products of DHR intertwiners.
    """
    n = sol.rep.dim
    eye = np.eye(n)
    S = np.kron(eye, sol.R)                         # 1_ρ ⊗ R : ρ → ρρ̄ρ
    lam_T = np.kron(np.eye(n * n), sol.Rbar)        # 1_{ρρ̄} ⊗ R̄ : ρρ̄ → ρρ̄ρρ̄
    s_lam_t = np.kron(S, eye).conj().T @ lam_T      # (S ⊗ 1_ρ̄)* λ(T) ∈ (λ, λ)
    t_s = np.kron(sol.Rbar.conj().T, eye) @ S       # (R̄* ⊗ 1_ρ) S ∈ (ρ, ρ)
    a, ra = complex(s_lam_t[0, 0]), float(np.abs(s_lam_t - s_lam_t[0, 0] * np.eye(n * n)).max())
    b, rb = complex(t_s[0, 0]), float(np.abs(t_s - t_s[0, 0] * eye).max())
    it = sol.intertwining_residuals()
    return CanonicalReport(0.0, a, b, (ra, rb), it)
