"""Deterministic random generators shared across the test modules."""

from fractions import Fraction
from itertools import combinations

from superproj.densities import BracketTriple
from superproj.geometry import (
    Connection,
    CoordinateChange,
    CovectorField,
    Sym2Upper,
    projective_class,
)
from superproj.graded_algebra import Dimension, SuperFunction, scalar_field


def rand_scalar(rng, dim, deg=1, terms=2):
    fld, gens = scalar_field(dim)
    val = fld(rng.randint(-2, 2))
    for _ in range(rng.randint(0, terms)):
        term = fld(rng.randint(-2, 2))
        for g in gens:
            term = term * g ** rng.randint(0, deg)
        val = val + term
    return val


def rand_super(rng, dim, parity=None, deg=1):
    terms = {}
    for r in range(dim.m + 1):
        for combo in combinations(range(dim.m), r):
            if parity is None or r % 2 == parity:
                if rng.random() < 0.8:
                    terms[combo] = rand_scalar(rng, dim, deg)
    return SuperFunction(dim, terms)


def rand_covector(rng, dim, eps=0):
    return CovectorField(
        dim,
        {i: rand_super(rng, dim, (dim.parity(i) + eps) % 2) for i in range(dim.size)},
        eps,
    )


def rand_connection(rng, dim, deg=1):
    comps = {}
    for k in range(dim.size):
        for i in range(dim.size):
            for j in range(i, dim.size):
                if i == j and dim.parity(i):
                    continue
                p = (dim.parity(i) + dim.parity(j) + dim.parity(k)) % 2
                v = rand_super(rng, dim, p, deg)
                comps[(k, i, j)] = v
                if i != j:
                    sign = -1 if dim.parity(i) and dim.parity(j) else 1
                    comps[(k, j, i)] = v.scale(sign)
    return Connection(dim, comps)


def rand_projective_class(rng, dim, deg=1):
    return projective_class(rand_connection(rng, dim, deg))


def rand_upper(rng, dim, eps, deg=1):
    comps = {}
    for i in range(dim.size):
        for j in range(i, dim.size):
            if i == j and dim.parity(i):
                continue
            p = (dim.parity(i) + dim.parity(j) + eps) % 2
            v = rand_super(rng, dim, p, deg)
            comps[(i, j)] = v
            if i != j:
                sign = -1 if dim.parity(i) and dim.parity(j) else 1
                comps[(j, i)] = v.scale(sign)
    return Sym2Upper(dim, comps, eps)


def rand_triple(rng, dim, eps, lam):
    s = rand_upper(rng, dim, eps)
    gamma = {i: rand_super(rng, dim, (dim.parity(i) + eps) % 2)
             for i in range(dim.size)}
    theta = rand_super(rng, dim, eps)
    return BracketTriple(s, gamma, theta, eps, Fraction(lam))


def darboux_odd(dim):
    """Constant odd symplectic tensor pairing x_i with th_i (needs n == m)."""
    comps = {}
    one = SuperFunction.one(dim)
    for i in range(dim.n):
        comps[(i, dim.n + i)] = one
        comps[(dim.n + i, i)] = one
    return Sym2Upper(dim, comps, 1)


def rand_linear_change(rng, dim):
    """Random invertible block-diagonal linear change with rational entries."""

    def rand_block(size):
        while True:
            rows = [[Fraction(rng.randint(-3, 3)) for _ in range(size)]
                    for _ in range(size)]
            det = _rational_det(rows)
            if det:
                return rows

    def _rational_det(rows):
        size = len(rows)
        if size == 0:
            return Fraction(1)
        if size == 1:
            return rows[0][0]
        total = Fraction(0)
        for c in range(size):
            minor = [[row[cc] for cc in range(size) if cc != c]
                     for row in rows[1:]]
            total += (-1) ** c * rows[0][c] * _rational_det(minor)
        return total

    def _rational_inv(rows):
        size = len(rows)
        det = _rational_det(rows)
        inv = [[Fraction(0)] * size for _ in range(size)]
        for i in range(size):
            for j in range(size):
                minor = [[rows[r][c] for c in range(size) if c != i]
                         for r in range(size) if r != j]
                inv[i][j] = (-1) ** (i + j) * _rational_det(minor) / det
        return inv

    eb = rand_block(dim.n)
    ob = rand_block(dim.m)
    ebi = _rational_inv(eb)
    obi = _rational_inv(ob)

    def assemble(block_e, block_o):
        out = []
        for a in range(dim.n):
            acc = SuperFunction.zero(dim)
            for b in range(dim.n):
                if block_e[a][b]:
                    acc = acc + SuperFunction.coordinate(dim, b).scale(block_e[a][b])
            out.append(acc)
        for a in range(dim.m):
            acc = SuperFunction.zero(dim)
            for b in range(dim.m):
                if block_o[a][b]:
                    acc = acc + SuperFunction.coordinate(dim, dim.n + b).scale(
                        block_o[a][b])
            out.append(acc)
        return tuple(out)

    return CoordinateChange(dim, assemble(eb, ob), assemble(ebi, obi))


DIMS_FOUR = [Dimension.of(2, 0), Dimension.of(1, 1),
             Dimension.of(2, 1), Dimension.of(2, 2)]
