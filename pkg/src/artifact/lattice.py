"""Even lattices, discriminant groups, majorants and lattice-point enumeration.

Lattices are given by an integer Gram matrix G of the bilinear form, so
Q(x) = x^T G x / 2.  Everything that feeds a root of unity (Q mod 1 on the
discriminant group, the bilinear form mod 1) is kept in exact rational
arithmetic; majorants and enumeration bounds live in floating point.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import (
    BoundTooLarge,
    IndefiniteWithoutMajorant,
    NotEven,
    NotNegativeDefinite,
    NotSymmetric,
    Singular,
    WrongDimension,
)

log = logging.getLogger(__name__)

CACHE_FORMAT = "RLT1"
DEFAULT_ENUM_CAP = 4_000_000


# --------------------------------------------------------------------------
# exact integer linear algebra

def _identity(n):
    return [[int(i == j) for j in range(n)] for i in range(n)]


def _frac_inverse(a):
    """Inverse of a square integer/rational matrix by Gauss-Jordan over Q."""
    n = len(a)
    m = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise Singular("matrix is singular")
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        m[col] = [x / p for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [row[n:] for row in m]


def smith_normal_form(a):
    """Return (d, U, V) with U a V = diag(d), U and V unimodular, d_i | d_{i+1}.

    Plain pivot-and-reduce; the matrices here are tiny.
    """
    n = len(a)
    m = [list(map(int, row)) for row in a]
    u = _identity(n)
    v = _identity(n)

    def swap_rows(i, j):
        m[i], m[j] = m[j], m[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for row in m:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, f):
        m[dst] = [x + f * y for x, y in zip(m[dst], m[src])]
        u[dst] = [x + f * y for x, y in zip(u[dst], u[src])]

    def add_col(dst, src, f):
        for row in m:
            row[dst] += f * row[src]
        for row in v:
            row[dst] += f * row[src]

    for t in range(n):
        while True:
            entries = [(abs(m[i][j]), i, j) for i in range(t, n) for j in range(t, n) if m[i][j]]
            if not entries:
                break
            _, i, j = min(entries)
            swap_rows(t, i)
            swap_cols(t, j)
            p = m[t][t]
            dirty = False
            for i in range(t + 1, n):
                q = m[i][t] // p
                add_row(i, t, -q)
                dirty |= m[i][t] != 0
            for j in range(t + 1, n):
                q = m[t][j] // p
                add_col(j, t, -q)
                dirty |= m[t][j] != 0
            if dirty:
                continue
            bad = next(((i, j) for i in range(t + 1, n) for j in range(t + 1, n)
                        if m[i][j] % p), None)
            if bad is None:
                break
            add_row(t, bad[0], 1)
        if m[t][t] < 0:
            m[t] = [-x for x in m[t]]
            u[t] = [-x for x in u[t]]
    d = [m[i][i] for i in range(n)]
    return d, u, v


# --------------------------------------------------------------------------
# lattices

@dataclass(frozen=True)
class EvenLattice:
    gram: tuple
    rank: int
    signature: tuple
    level: int
    det: int
    name: str = ""

    @property
    def G(self):
        return np.array(self.gram, dtype=float)

    @property
    def Gint(self):
        return np.array(self.gram, dtype=np.int64)

    @property
    def key(self):
        return hashlib.sha256(json.dumps(self.gram).encode()).hexdigest()[:16]

    @property
    def is_definite(self):
        return self.signature[1] == 0

    def Q(self, x):
        """Exact Q for a rational/integer vector."""
        x = [Fraction(t) for t in x]
        return sum(x[i] * self.gram[i][j] * x[j]
                   for i in range(self.rank) for j in range(self.rank)) / 2

    def b(self, x, y):
        x = [Fraction(t) for t in x]
        y = [Fraction(t) for t in y]
        return sum(x[i] * self.gram[i][j] * y[j]
                   for i in range(self.rank) for j in range(self.rank))

    def __repr__(self):
        tag = f" {self.name}" if self.name else ""
        return f"EvenLattice({tag.strip() or 'rank ' + str(self.rank)}, sig={self.signature})"


def _direct_sum(*blocks):
    n = sum(len(b) for b in blocks)
    g = [[0] * n for _ in range(n)]
    off = 0
    for b in blocks:
        for i, row in enumerate(b):
            for j, x in enumerate(row):
                g[off + i][off + j] = x
        off += len(b)
    return g


def direct_sum(*lattices, name=""):
    return build_lattice(_direct_sum(*[l.gram for l in lattices]), name=name)


def scale(L, c, name=""):
    return build_lattice([[c * x for x in row] for row in L.gram], name=name)


def build_lattice(gram, name=""):
    try:
        g = [[Fraction(x) for x in row] for row in gram]
    except (TypeError, ValueError) as exc:
        raise NotEven(f"gram entries must be integers: {exc}") from None
    if any(x.denominator != 1 for row in g for x in row):
        raise NotEven("gram entries must be integers")
    g = [[int(x) for x in row] for row in g]
    n = len(g)
    if n == 0 or any(len(row) != n for row in g):
        raise NotSymmetric("gram must be a non-empty square matrix")
    if any(g[i][j] != g[j][i] for i in range(n) for j in range(n)):
        raise NotSymmetric("gram is not symmetric")
    if any(g[i][i] % 2 for i in range(n)):
        raise NotEven("odd diagonal entry")
    d, _, _ = smith_normal_form(g)
    if any(x == 0 for x in d):
        raise Singular("det(gram) = 0")
    det = int(round(np.linalg.det(np.array(g, dtype=float))))
    ev = np.linalg.eigvalsh(np.array(g, dtype=float))
    sig = (int((ev > 0).sum()), int((ev < 0).sum()))
    inv = _frac_inverse(g)
    den = 1
    for i in range(n):
        den = math.lcm(den, (inv[i][i] / 2).denominator)
        for j in range(n):
            den = math.lcm(den, inv[i][j].denominator)
    return EvenLattice(gram=tuple(tuple(r) for r in g), rank=n, signature=sig,
                       level=den, det=det, name=name)


# --------------------------------------------------------------------------
# discriminant group

@dataclass(frozen=True)
class DiscriminantGroup:
    lattice: EvenLattice
    order: int
    elementary: tuple          # nontrivial invariant factors d_i
    labels: tuple              # per coset: tuple a_i with 0 <= a_i < d_i
    reps: tuple                # per coset: rational vector in [0,1)-coordinates
    q_values: tuple            # Q(mu) mod 1 as Fraction
    b_values: tuple            # b(mu, nu) mod 1 as Fraction (matrix)
    neg: tuple                 # index of -mu
    _vinv: tuple = field(repr=False, default=())
    _scale: tuple = field(repr=False, default=())

    def __len__(self):
        return self.order

    def add(self, i, j):
        a = tuple((x + y) % d for x, y, d in zip(self.labels[i], self.labels[j], self.elementary))
        return self._index[a]

    @property
    def _index(self):
        return {lab: i for i, lab in enumerate(self.labels)}

    def index_of(self, x):
        """Coset index of a dual-lattice vector (rational coordinates)."""
        x = [Fraction(t) for t in x]
        a = []
        for (row, d) in zip(self._vinv, self._scale):
            t = d * sum(Fraction(c) * xi for c, xi in zip(row, x))
            if t.denominator != 1:
                raise ValueError("vector is not in the dual lattice")
            a.append(int(t) % d)
        lab = tuple(ai for ai, d in zip(a, self._scale) if d > 1)
        return self._index[lab]

    def rep_float(self, i):
        return np.array([float(t) for t in self.reps[i]])

    def rep_gram(self, i):
        """G r for the coset representative r: an integer vector."""
        r = self.reps[i]
        g = self.lattice.gram
        out = [sum(g[a][b] * r[b] for b in range(len(r))) for a in range(len(r))]
        assert all(t.denominator == 1 for t in out)
        return np.array([int(t) for t in out], dtype=np.int64)

    def rep_Q(self, i):
        return self.lattice.Q(self.reps[i])


@lru_cache(maxsize=None)
def discriminant_group(L: EvenLattice) -> DiscriminantGroup:
    d, u, v = smith_normal_form([list(r) for r in L.gram])
    n = L.rank
    nontriv = [i for i in range(n) if d[i] > 1]
    elementary = tuple(d[i] for i in nontriv)
    labels = [()]
    for di in elementary:
        labels = [lab + (a,) for lab in labels for a in range(di)]
    labels.sort(key=lambda lab: tuple(Fraction(a, di) for a, di in zip(lab, elementary)))
    reps = []
    for lab in labels:
        coeff = [Fraction(0)] * n
        for a, i in zip(lab, nontriv):
            coeff[i] = Fraction(a, d[i])
        reps.append(tuple(sum(Fraction(v[r][c]) * coeff[c] for c in range(n)) for r in range(n)))
    q = tuple(L.Q(r) % 1 for r in reps)
    b = tuple(tuple(L.b(r, s) % 1 for s in reps) for r in reps)
    index = {lab: i for i, lab in enumerate(labels)}
    neg = tuple(index[tuple((-a) % di for a, di in zip(lab, elementary))] for lab in labels)
    vinv = _frac_inverse(v)
    return DiscriminantGroup(lattice=L, order=len(labels), elementary=elementary,
                             labels=tuple(labels), reps=tuple(reps), q_values=q,
                             b_values=b, neg=neg, _vinv=tuple(tuple(r) for r in vinv),
                             _scale=tuple(d))


# --------------------------------------------------------------------------
# majorants

@dataclass(frozen=True, eq=False)
class MajorantPoint:
    lattice: EvenLattice
    basis_z: np.ndarray        # q x n, orthonormal for -(.,.)
    majorant: np.ndarray       # n x n, Q_z(x) = x^T M x / 2

    def Qz(self, x):
        x = np.atleast_2d(x)
        return 0.5 * np.einsum("ij,jk,ik->i", x, self.majorant, x)

    def R0(self, x):
        """R°(x, z) = -2 Q(proj_z x) = sum_j (x, u_j)^2."""
        x = np.atleast_2d(x)
        if len(self.basis_z) == 0:
            return np.zeros(len(x))
        p = x @ (self.lattice.G @ self.basis_z.T)
        return np.sum(p * p, axis=1)

    @property
    def key(self):
        return hashlib.sha256(np.round(self.majorant, 12).tobytes()).hexdigest()[:16]


def majorant(L: EvenLattice, basis_z, pivot_tol=1e-10) -> MajorantPoint:
    G = L.G
    q = L.signature[1]
    vecs = [np.asarray(b, dtype=float) for b in (basis_z if basis_z is not None else [])]
    if len(vecs) != q:
        raise WrongDimension(f"need {q} vectors spanning z, got {len(vecs)}")
    if q:
        B = np.array(vecs)
        if B.shape[1] != L.rank:
            raise WrongDimension("basis vectors have wrong length")
        ev = np.linalg.eigvalsh(B @ G @ B.T)
        if np.any(ev >= -pivot_tol * max(1.0, np.abs(ev).max())):
            raise NotNegativeDefinite("span of basis_z is not negative definite")
    ortho = []
    for b in vecs:
        u = b.copy()
        for w in ortho:
            u = u + (u @ G @ w) * w
        n2 = -(u @ G @ u)
        if n2 <= pivot_tol:
            raise NotNegativeDefinite("degenerate basis for z")
        ortho.append(u / math.sqrt(n2))
    U = np.array(ortho).reshape(q, L.rank)
    GU = G @ U.T
    M = G + 2.0 * GU @ GU.T
    M = 0.5 * (M + M.T)
    if np.linalg.eigvalsh(M).min() <= 0:
        raise NotNegativeDefinite("majorant is not positive definite")
    return MajorantPoint(lattice=L, basis_z=U, majorant=M)


def definite_majorant(L: EvenLattice) -> MajorantPoint:
    if not L.is_definite or L.signature[0] == 0:
        raise IndefiniteWithoutMajorant("lattice is not positive definite")
    return MajorantPoint(lattice=L, basis_z=np.zeros((0, L.rank)), majorant=L.G)


# --------------------------------------------------------------------------
# enumeration

@dataclass(frozen=True, eq=False)
class CosetVectors:
    """All x = r_mu + y found by an enumeration; `y` integral, `Q` exact."""

    lattice: EvenLattice
    mu: int
    y: np.ndarray              # N x n int64
    q_num: np.ndarray          # N int64; Q(x) = Q(r_mu) + q_num
    q_rep: Fraction

    def __len__(self):
        return len(self.y)

    @property
    def x(self):
        D = discriminant_group(self.lattice)
        return D.rep_float(self.mu)[None, :] + self.y

    @property
    def Q(self):
        return float(self.q_rep) + self.q_num.astype(float)

    def as_fractions(self):
        D = discriminant_group(self.lattice)
        r = D.reps[self.mu]
        return [tuple(ri + int(yi) for ri, yi in zip(r, row)) for row in self.y]

    def select_Q(self, m):
        m = Fraction(m)
        t = m - self.q_rep
        if t.denominator != 1:
            keep = np.zeros(len(self.y), dtype=bool)
        else:
            keep = self.q_num == int(t)
        return CosetVectors(self.lattice, self.mu, self.y[keep], self.q_num[keep], self.q_rep)


def ellipsoid_count_estimate(M, bound):
    """Volume of {x : x^T M x / 2 <= bound}, the expected point count."""
    n = len(M)
    det = np.linalg.det(M / 2.0)
    return math.pi ** (n / 2) * bound ** (n / 2) / (math.gamma(n / 2 + 1) * math.sqrt(det))


def _fincke_pohst(M, shift, bound, cap):
    """All integer y with (shift+y)^T M (shift+y)/2 <= bound.

    Breadth-first over coordinates from last to first on the Cholesky factor
    of M/2, fully vectorised per level.
    """
    n = len(M)
    R = np.linalg.cholesky(M / 2.0).T        # upper: x^T (M/2) x = |R x|^2
    slack = 1e-9 * max(1.0, bound)
    Y = np.zeros((1, n), dtype=np.int64)
    X = np.zeros((1, n))
    P = np.zeros(1)
    for i in range(n - 1, -1, -1):
        rii = R[i, i]
        c = -(X[:, i + 1:] @ R[i, i + 1:]) / rii
        rad = np.sqrt(np.maximum(bound + slack - P, 0.0)) / rii
        lo = np.ceil(c - rad - shift[i]).astype(np.int64)
        hi = np.floor(c + rad - shift[i]).astype(np.int64)
        cnt = np.maximum(hi - lo + 1, 0)
        total = int(cnt.sum())
        if total > cap:
            raise BoundTooLarge(f"enumeration exceeds cap ({total} > {cap})")
        idx = np.repeat(np.arange(len(cnt)), cnt)
        start = np.repeat(np.cumsum(cnt) - cnt, cnt)
        yi = lo[idx] + (np.arange(total) - start)
        Y = Y[idx]
        X = X[idx]
        Y[:, i] = yi
        X[:, i] = shift[i] + yi
        P = P[idx] + (rii * (X[:, i] - c[idx])) ** 2
    keep = P <= bound + slack
    return Y[keep]


class EnumerationCache:
    """Insert-only map with a lock around writes.

    Plain dict reads are atomic in CPython, so readers never block.
    Entries whose key carries no majorant (definite lattices) may be
    persisted to `$RLT_CACHE_DIR/enum_cache.json`.
    """

    def __init__(self):
        self._data = {}
        self._lock = threading.Lock()
        self._loaded_from = None

    def get(self, key):
        return self._data.get(key)

    def put(self, key, value):
        with self._lock:
            self._data.setdefault(key, value)
            return self._data[key]

    def clear(self):
        with self._lock:
            self._data.clear()

    def __len__(self):
        return len(self._data)

    def persistable(self):
        return {k: v for k, v in self._data.items() if k[2] == "definite"}


_CACHE = EnumerationCache()


def cache_dir(default=None):
    d = os.environ.get("RLT_CACHE_DIR") or default
    return Path(d) if d else None


def _payload_checksum(entries):
    blob = json.dumps(entries, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _key_str(key):
    return json.dumps([key[0], key[1], key[2], str(key[3])])


def save_cache(path=None):
    path = Path(path) if path else None
    if path is None:
        d = cache_dir()
        if d is None:
            return None
        path = d / "enum_cache.json"
    entries = {}
    for key, cv in sorted(_CACHE.persistable().items(), key=lambda kv: _key_str(kv[0])):
        entries[_key_str(key)] = {"gram": [list(r) for r in cv.lattice.gram],
                                  "y": cv.y.tolist()}
    doc = {"format": CACHE_FORMAT, "checksum": _payload_checksum(entries), "entries": entries}
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(doc, sort_keys=True))
    tmp.replace(path)
    return path


def load_cache(path=None):
    """Load persisted entries; returns the number loaded.

    A file with a bad header or checksum is discarded (with a warning) and
    replaced by an empty cache.
    """
    if path is None:
        d = cache_dir()
        if d is None:
            return 0
        path = d / "enum_cache.json"
    path = Path(path)
    if not path.exists():
        return 0
    try:
        doc = json.loads(path.read_text())
        ok = doc.get("format") == CACHE_FORMAT and doc.get("checksum") == _payload_checksum(doc["entries"])
    except (ValueError, KeyError, TypeError):
        ok = False
    if not ok:
        log.warning("enumeration cache %s is corrupted; rebuilding", path)
        path.unlink()
        doc = {"format": CACHE_FORMAT, "entries": {}}
        doc["checksum"] = _payload_checksum(doc["entries"])
        path.write_text(json.dumps(doc))
        return -1
    count = 0
    for ks, ent in doc["entries"].items():
        lk, mu, kind, bound = json.loads(ks)
        L = build_lattice(ent["gram"])
        y = np.array(ent["y"], dtype=np.int64).reshape(-1, L.rank)
        cv = _make_coset_vectors(L, mu, y)
        _CACHE.put((lk, mu, kind, Fraction(bound)), cv)
        count += 1
    return count


def cache_stats():
    return {"entries": len(_CACHE), "persistable": len(_CACHE.persistable())}


def clear_cache(path=None):
    _CACHE.clear()
    if path is not None and Path(path).exists():
        Path(path).unlink()


def _make_coset_vectors(L, mu, y):
    D = discriminant_group(L)
    gr = D.rep_gram(mu)
    Gi = L.Gint
    q_num = y @ gr + np.einsum("ij,jk,ik->i", y, Gi, y) // 2
    return CosetVectors(L, mu, y, q_num.astype(np.int64), D.rep_Q(mu))


def enumerate_coset_vectors(L: EvenLattice, mu: int = 0, target=None, z: MajorantPoint | None = None,
                            bound=None, cap=DEFAULT_ENUM_CAP) -> CosetVectors:
    """All x in mu + L with Q_z(x) <= bound (optionally Q(x) = target).

    For a positive definite L the majorant defaults to Q itself and a bare
    `target` suffices.  For indefinite L a MajorantPoint and bound are needed.
    """
    if z is None:
        if not L.is_definite:
            raise IndefiniteWithoutMajorant("indefinite lattice needs a majorant point and bound")
        if bound is None:
            if target is None:
                raise ValueError("need a target or a bound")
            bound = target
        if Fraction(bound) < 0:
            bound = Fraction(-1)
        kind, M = "definite", L.G
    else:
        if bound is None:
            raise ValueError("an explicit bound is required with a majorant")
        kind, M = "z:" + z.key, z.majorant
    bound = Fraction(bound) if not isinstance(bound, float) else Fraction(bound).limit_denominator(10**9)
    key = (L.key, int(mu), kind, bound)
    cv = _CACHE.get(key)
    if cv is None:
        if bound < 0:
            y = np.zeros((0, L.rank), dtype=np.int64)
        else:
            if ellipsoid_count_estimate(M, float(bound)) > cap:
                raise BoundTooLarge(f"estimated enumeration size exceeds cap {cap}")
            D = discriminant_group(L)
            y = _fincke_pohst(M, D.rep_float(mu), float(bound), cap)
            order = np.lexsort(y.T[::-1])
            y = y[order]
        cv = _CACHE.put(key, _make_coset_vectors(L, int(mu), y))
    if target is not None:
        return cv.select_Q(target)
    return cv


def representation_numbers(L: EvenLattice, m_max, mu: int = 0):
    """#{x in mu + L : Q(x) = m} for the m in Q(mu) + Z up to m_max (definite L)."""
    cv = enumerate_coset_vectors(L, mu, bound=m_max)
    out = {}
    for qn in cv.q_num:
        m = cv.q_rep + int(qn)
        out[m] = out.get(m, 0) + 1
    return dict(sorted(out.items()))


# --------------------------------------------------------------------------
# fixtures

A1 = [[2]]
U = [[0, 1], [1, 0]]
D4 = [[2, -1, 0, 0], [-1, 2, -1, -1], [0, -1, 2, 0], [0, -1, 0, 2]]
E8 = [[2, -1, 0, 0, 0, 0, 0, 0],
      [-1, 2, -1, 0, 0, 0, 0, 0],
      [0, -1, 2, -1, 0, 0, 0, -1],
      [0, 0, -1, 2, -1, 0, 0, 0],
      [0, 0, 0, -1, 2, -1, 0, 0],
      [0, 0, 0, 0, -1, 2, -1, 0],
      [0, 0, 0, 0, 0, -1, 2, 0],
      [0, 0, -1, 0, 0, 0, 0, 2]]

FIXTURES = {
    "A1": A1,
    "A1A1": _direct_sum(A1, A1),
    "A2": [[2, -1], [-1, 2]],
    "D4": D4,
    "E8": E8,
    "U": U,
    "2U": _direct_sum(U, U),
    "UA1": _direct_sum(U, A1),
    "2UA1": _direct_sum(U, U, A1),
    "A2neg": [[-2, 1], [1, -2]],
}


def fixture(name) -> EvenLattice:
    return build_lattice(FIXTURES[name], name=name)


def load_lattice(spec) -> EvenLattice:
    """A fixture name, a JSON file path, or a dict {"gram": ..., "name": ...}."""
    if isinstance(spec, dict):
        return build_lattice(spec["gram"], name=spec.get("name", ""))
    if isinstance(spec, str) and spec in FIXTURES:
        return fixture(spec)
    doc = json.loads(Path(spec).read_text())
    return build_lattice(doc["gram"], name=doc.get("name", Path(spec).stem))
