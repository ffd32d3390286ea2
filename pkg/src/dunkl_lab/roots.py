"""Root systems, multiplicity functions and the reflection group they generate.

All roots are stored with squared length 2.  A system is described by its
positive roots (one representative per ``±`` pair, the one whose first
nonzero coordinate is positive) together with a multiplicity per positive
root; the full system ``R`` is recovered by adding the negatives.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    GroupTooLarge,
    MTooSmall,
    NonInvariantMultiplicity,
    NotARootSystem,
    UnnormalizedRoot,
    ValidationError,
)

STRUCT_TOL = 1e-12
NORM_TOL = 1e-9
DEDUP_TOL = 1e-8
DEFAULT_GROUP_CAP = 10_000

FAMILIES = ("A1_product", "dihedral", "B_rank2", "custom")


def _positive_representative(v: np.ndarray) -> np.ndarray:
    for c in v:
        if abs(c) > STRUCT_TOL:
            return v if c > 0 else -v
    raise NotARootSystem("zero vector is not a root")


def reflect(alpha, x):
    """Reflect ``x`` in the hyperplane orthogonal to ``alpha``.

    ``x`` may be a single point or an array of points stacked along the
    leading axes.
    """
    alpha = np.asarray(alpha, dtype=float)
    x = np.asarray(x, dtype=float)
    a2 = float(alpha @ alpha)
    if a2 == 0.0:
        raise ValidationError("cannot reflect in a zero root")
    coef = 2.0 * (x @ alpha) / a2
    return x - np.multiply.outer(coef, alpha)


@dataclass(frozen=True)
class GroupElement:
    matrix: np.ndarray
    word_length: int

    def __post_init__(self):
        self.matrix.setflags(write=False)


@dataclass(frozen=True)
class RootSystemData:
    """A validated reduced root system with a W-invariant multiplicity."""

    d: int
    positive_roots: np.ndarray  # shape (n, d), |alpha|^2 = 2
    multiplicity: np.ndarray  # shape (n,), k(alpha) >= 0
    family: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.positive_roots.setflags(write=False)
        self.multiplicity.setflags(write=False)

    @property
    def roots(self) -> np.ndarray:
        """The full system ``R = R_+ ∪ -R_+``."""
        return np.vstack([self.positive_roots, -self.positive_roots])

    @property
    def full_multiplicity(self) -> np.ndarray:
        return np.concatenate([self.multiplicity, self.multiplicity])

    @property
    def m(self) -> float:
        return effective_dimension(self)

    def k_of(self, alpha) -> float:
        """Multiplicity of an arbitrary root (either sign)."""
        alpha = np.asarray(alpha, dtype=float)
        idx = _match_root(self.positive_roots, alpha)
        if idx is None:
            raise NotARootSystem(f"{alpha!r} is not a root of this system")
        return float(self.multiplicity[idx])

    def to_dict(self) -> dict:
        return {
            "family": "custom",
            "d": self.d,
            "roots": self.positive_roots.tolist(),
            "k": self.multiplicity.tolist(),
        }


def _match_root(pos: np.ndarray, v: np.ndarray, tol: float = 1e-9) -> int | None:
    diff_p = np.abs(pos - v).max(axis=1)
    diff_m = np.abs(pos + v).max(axis=1)
    hits = np.nonzero(np.minimum(diff_p, diff_m) < tol)[0]
    return int(hits[0]) if hits.size else None


def effective_dimension(sys: RootSystemData) -> float:
    """``m = d + sum over the full system of k(alpha)``."""
    return float(sys.d + 2.0 * np.sum(sys.multiplicity))


def weight(sys: RootSystemData, x) -> np.ndarray | float:
    """The homogeneous weight ``w_k(x) = prod_{alpha in R} |<x, alpha>|^k(alpha)``."""
    x = np.asarray(x, dtype=float)
    proj = np.abs(x @ sys.positive_roots.T)
    # each +/- pair contributes the same factor twice
    out = np.prod(proj ** (2.0 * sys.multiplicity), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def _validate(d: int, roots: np.ndarray, k: np.ndarray) -> None:
    if roots.ndim != 2 or roots.shape[1] != d:
        raise NotARootSystem(f"roots must have shape (n, {d})")
    if np.any(k < 0):
        raise ValidationError("multiplicities must be nonnegative")
    norms = np.einsum("ij,ij->i", roots, roots)
    bad = np.nonzero(np.abs(norms - 2.0) > NORM_TOL)[0]
    if bad.size:
        raise UnnormalizedRoot(f"root {roots[bad[0]].tolist()} has |alpha|^2 = {norms[bad[0]]!r}, expected 2")
    n = len(roots)
    for i in range(n):
        for j in range(i + 1, n):
            cos = abs(roots[i] @ roots[j]) / 2.0
            if abs(cos - 1.0) < STRUCT_TOL:
                raise NotARootSystem("duplicate or parallel roots")
    for i in range(n):
        for j in range(n):
            img = reflect(roots[i], roots[j])
            idx = _match_root(roots, img, tol=1e-10)
            if idx is None:
                raise NotARootSystem(
                    f"reflection of {roots[j].tolist()} in {roots[i].tolist()} leaves the system"
                )
            if abs(k[idx] - k[j]) > STRUCT_TOL:
                raise NonInvariantMultiplicity(
                    f"k differs on the W-orbit: k({roots[j].tolist()}) = {k[j]} but its image has k = {k[idx]}"
                )


def _from_vectors(d: int, vectors: Iterable[Sequence[float]], ks: Iterable[float], family: str, params: dict) -> RootSystemData:
    pos: list[np.ndarray] = []
    kk: list[float] = []
    for v, kv in zip(vectors, ks):
        v = np.asarray(v, dtype=float)
        if not np.any(np.abs(v) > STRUCT_TOL):
            raise NotARootSystem("roots must be nonzero")
        v = _positive_representative(v)
        if pos:
            idx = _match_root(np.array(pos), v)
            if idx is not None:
                if abs(kk[idx] - float(kv)) > STRUCT_TOL:
                    raise NonInvariantMultiplicity("k(alpha) != k(-alpha)")
                continue
        pos.append(v)
        kk.append(float(kv))
    if not pos:
        raise NotARootSystem("empty root system")
    roots = np.array(pos, dtype=float)
    k = np.array(kk, dtype=float)
    _validate(d, roots, k)
    m = d + 2.0 * k.sum()
    if m <= 2.0:
        raise MTooSmall(f"m = {m} must exceed 2")
    return RootSystemData(d=d, positive_roots=roots, multiplicity=k, family=family, params=params)


def _dihedral_roots(order: int) -> list[np.ndarray]:
    # mirror lines at angles pi*j/order; roots are their normals
    s2 = np.sqrt(2.0)
    out = []
    for j in range(order):
        theta = np.pi * j / order + np.pi / 2.0
        v = s2 * np.array([np.cos(theta), np.sin(theta)])
        v[np.abs(v) < 1e-15] = 0.0
        out.append(v)
    return out


def build_root_system(family: str, **params) -> RootSystemData:
    """Build and validate a root system from the catalog.

    Families and their parameters:

    ``A1_product``
        ``d`` and ``k`` (scalar or one value per coordinate); roots ``√2 e_i``.
    ``dihedral``
        ``order`` (n >= 2) and ``k``.  For even ``n`` the two root orbits may
        carry different multiplicities, ``k=(k_odd, k_even)``.
    ``B_rank2``
        dihedral of order 4 with ``k=(k_axes, k_diagonals)``.
    ``custom``
        ``roots`` (already normalised to ``|alpha|^2 = 2``) and ``k``, either a
        scalar or one value per listed root; ``d`` defaults to the root length.
    """
    if family == "A1_product":
        d = int(params.get("d", 1))
        if d < 1:
            raise ValidationError("d must be positive")
        k = np.broadcast_to(np.asarray(params.get("k", 1.0), dtype=float), (d,))
        vecs = [np.sqrt(2.0) * np.eye(d)[i] for i in range(d)]
        return _from_vectors(d, vecs, k, family, {"d": d, "k": k.tolist()})
    if family in ("dihedral", "B_rank2"):
        order = 4 if family == "B_rank2" else int(params.get("order", 0))
        if order < 2:
            raise ValidationError("dihedral order must be >= 2")
        kp = np.atleast_1d(np.asarray(params.get("k", 1.0), dtype=float))
        if kp.size == 1:
            kp = np.repeat(kp, 2)
        if kp.size != 2:
            raise ValidationError("k must be a scalar or a pair")
        if order % 2 == 1 and kp[0] != kp[1]:
            raise NonInvariantMultiplicity("odd dihedral groups have a single root orbit")
        vecs = _dihedral_roots(order)
        ks = [kp[j % 2] for j in range(order)]
        return _from_vectors(2, vecs, ks, family, {"order": order, "k": kp.tolist()})
    if family == "custom":
        roots = np.atleast_2d(np.asarray(params["roots"], dtype=float))
        d = int(params.get("d", roots.shape[1]))
        k = np.broadcast_to(np.asarray(params.get("k", 1.0), dtype=float), (len(roots),))
        return _from_vectors(d, roots, k, family, {})
    raise ValidationError(f"unknown root-system family {family!r}; expected one of {FAMILIES}")


def root_system_from_dict(doc: dict) -> RootSystemData:
    """Load ``{"family": ..., "d": ..., "roots": [[...]], "k": [...], "order": ...}``."""
    allowed = {"family", "d", "roots", "k", "order"}
    unknown = set(doc) - allowed
    if unknown:
        raise ValidationError(f"unknown root-system fields: {sorted(unknown)}")
    family = doc.get("family", "custom")
    params = {key: doc[key] for key in ("d", "roots", "k", "order") if key in doc}
    return build_root_system(family, **params)


def enumerate_group(sys: RootSystemData, cap: int = DEFAULT_GROUP_CAP) -> list[GroupElement]:
    """Breadth-first closure of products of the root reflections."""
    d = sys.d
    gens = [np.eye(d) - np.outer(a, a) for a in sys.positive_roots]  # |a|^2 = 2
    found: list[GroupElement] = [GroupElement(np.eye(d), 0)]
    buckets: dict[tuple, list[np.ndarray]] = {_key(np.eye(d)): [found[0].matrix]}
    queue = deque([found[0]])
    while queue:
        g = queue.popleft()
        for s in gens:
            h = s @ g.matrix
            key = _key(h)
            bucket = buckets.setdefault(key, [])
            if any(np.abs(h - other).max() < DEDUP_TOL for other in bucket):
                continue
            if len(found) >= cap:
                raise GroupTooLarge(f"group enumeration exceeded {cap} elements")
            bucket.append(h)
            el = GroupElement(h, g.word_length + 1)
            found.append(el)
            queue.append(el)
    return found


def _key(mat: np.ndarray) -> tuple:
    return tuple(np.round(mat, 6).ravel() + 0.0)


def orbit(group: Sequence[GroupElement], x) -> np.ndarray:
    """All images ``w x`` (with repetitions) as an array of shape ``(|W|, d)``."""
    mats = np.stack([g.matrix for g in group])
    return mats @ np.asarray(x, dtype=float)


def parse_system(text: str) -> RootSystemData:
    """Parse the compact command-line grammar for root systems.

    ``a1:k`` (rank one), ``a1xa1:k`` or ``a1^d:k`` (product in dimension d),
    ``dihedral:n:k`` or ``dihedral:n:k1,k2``, ``b2:k1,k2``.
    """
    try:
        name, _, rest = text.partition(":")
        name = name.strip().lower()
        if name.startswith("a1"):
            if name == "a1":
                d = 1
            elif "^" in name:
                d = int(name.split("^")[1])
            else:
                d = name.count("a1")
            ks = [float(v) for v in rest.split(",")] if rest else [1.0]
            return build_root_system("A1_product", d=d, k=ks if len(ks) > 1 else ks[0])
        if name == "dihedral":
            order, _, kpart = rest.partition(":")
            ks = [float(v) for v in kpart.split(",")] if kpart else [1.0]
            return build_root_system("dihedral", order=int(order), k=ks)
        if name == "b2":
            ks = [float(v) for v in rest.split(",")] if rest else [1.0]
            return build_root_system("B_rank2", k=ks)
    except (ValueError, IndexError) as exc:
        raise ValidationError(f"malformed root system {text!r}: {exc}") from exc
    raise ValidationError(f"unknown root system {text!r}")
