"""Extension of the base supermanifold by a volume coordinate: lifted
connections and projective classes, the curvature-like lower tensor, the
extension operator for brackets, and the weight-dependent completion of a
tensor to a bracket triple.

The extended chart adds one even coordinate ``x0`` in front of the base
ones; Gothic index g = 0 is ``x0`` and g >= 1 is base coordinate g - 1.
Functions of the form ``f(x) e^{w x0}`` are identified with weight-w
densities, so ``d_0`` acts as the weight operator and no symbolic
exponential ever appears.

Sign conventions settled by the consistency requirement
``canonical_operator(extend_bracket(S, Pi)) == extension_operator``:

* the lifted class satisfies Pi~^k_{j0} = -delta^k_j / ((n0+1)(n0+2))
  (the sign is forced by trace-freeness in the extended dimension);
* the lower tensor entering the extension operator and theta is the
  x0-row of the lifted connection,
  G0_kj = (n0+1)/(n0-1) (d_q Pi^q_kj - Pi^p_qk Pi^q_pj)(-1)^{q~(1+k~+j~)}
  (`b_tensor` keeps the variant with the plus sign as a separate surface);
* the first-order coefficient of the extension operator carries the
  prefactor 2/(n0+4) on d_j S^ji.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .densities import BracketTriple, DensityElement, DensityOperator
from .errors import SingularDimension, SingularWeight
from .geometry import (
    Connection,
    ProjectiveClass,
    Sym2Cov,
    Sym2Upper,
    projective_class,
)
from .graded_algebra import Dimension, SuperFunction

# ---------------------------------------------------------------------------
# the extended chart
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TildeChart:
    """Base dimension together with its volume-coordinate extension."""

    base: Dimension

    @property
    def ext(self) -> Dimension:
        return Dimension(("x0",) + self.base.even_names, self.base.odd_names)

    def to_ext(self, base_index: int) -> int:
        """Base coordinate index -> extended (Gothic) index."""
        return base_index + 1

    def to_base(self, gothic: int) -> int:
        if gothic == 0:
            raise ValueError("Gothic index 0 is the volume coordinate")
        return gothic - 1

    def embed(self, f: SuperFunction) -> SuperFunction:
        return f.migrate(self.ext)

    def restrict(self, f: SuperFunction) -> SuperFunction:
        return f.migrate(self.base)


def _q_sign(dim: Dimension, q: int, i: int, j: int) -> int:
    return (-1) ** (dim.parity(q) * (1 + dim.parity(i) + dim.parity(j)))


def _ricci_combination(pi: ProjectiveClass, pp_sign: int) -> dict:
    """comps[(k, j)] = (n0+1)/(n0-1) (d_q Pi^q_kj + pp_sign Pi^p_qk Pi^q_pj)
    (-1)^{q~(1 + k~ + j~)}."""
    dim = pi.dim
    n0 = dim.n0
    pref = Fraction(n0 + 1, n0 - 1)
    out = {}
    for k in range(dim.size):
        for j in range(dim.size):
            acc = SuperFunction.zero(dim)
            for q in range(dim.size):
                sign = _q_sign(dim, q, k, j)
                d_term = pi.component(q, k, j).partial(q)
                if not d_term.is_zero():
                    acc = acc + d_term.scale(sign)
                for p in range(dim.size):
                    left = pi.component(p, q, k)
                    right = pi.component(q, p, j)
                    if left.is_zero() or right.is_zero():
                        continue
                    acc = acc + (left * right).scale(pp_sign * sign)
            if not acc.is_zero():
                out[(k, j)] = acc.scale(pref)
    return out


def b_tensor(pi: ProjectiveClass) -> dict:
    """B_kj = (n0+1)/(n0-1) (d_q Pi^q_kj + Pi^p_qk Pi^q_pj)(-1)^{q~(1+k~+j~)},
    as displayed; see `tilde_ricci` for the variant the consistency checks
    single out."""
    n0 = pi.dim.n0
    if n0 in (1, -1):
        raise SingularDimension(f"n - m = {n0}: B tensor undefined")
    return _ricci_combination(pi, +1)


def tilde_ricci(pi: ProjectiveClass) -> dict:
    """The x0-row of the lifted connection:
    (n0+1)/(n0-1) (d_q Pi^q_kj - Pi^p_qk Pi^q_pj)(-1)^{q~(1+k~+j~)}."""
    n0 = pi.dim.n0
    if n0 in (1, -1):
        raise SingularDimension(f"n - m = {n0}: lifted curvature undefined")
    return _ricci_combination(pi, -1)


# ---------------------------------------------------------------------------
# lifts
# ---------------------------------------------------------------------------


def lift_connection(pi: ProjectiveClass) -> Connection:
    """Linear connection on the extended chart determined by a projective
    class: base block Pi, mixed block -delta/(n0+1), and the x0-row
    `tilde_ricci`."""
    dim = pi.dim
    n0 = dim.n0
    if n0 in (1, -1):
        raise SingularDimension(f"n - m = {n0}: connection lift undefined")
    chart = TildeChart(dim)
    ext = chart.ext
    comps: dict = {}
    for (k, i, j), val in pi.comps.items():
        comps[(k + 1, i + 1, j + 1)] = chart.embed(val)
    mixed = SuperFunction.constant(ext, Fraction(-1, n0 + 1))
    for g in range(ext.size):
        comps[(g, 0, g)] = mixed
        if g:
            comps[(g, g, 0)] = mixed
    for (k, j), val in tilde_ricci(pi).items():
        comps[(0, k + 1, j + 1)] = chart.embed(val)
    return Connection(ext, comps)


def lift_projective_class(pi: ProjectiveClass) -> ProjectiveClass:
    """Projective class on the extended chart: the trace-free part of the
    lifted connection.  Closed form of the extra components:
    Pi~^k_{j0} = -delta^k_j/((n0+1)(n0+2)), Pi~^0_{00} = n0/((n0+1)(n0+2)),
    Pi~^0_{ji} = tilde_ricci, Pi~^0_{j0} = Pi~^k_{00} = 0."""
    n0 = pi.dim.n0
    if n0 in (1, -1, -2):
        raise SingularDimension(f"n - m = {n0}: projective class lift undefined")
    return projective_class(lift_connection(pi))


def restrict_to_base(tilde: Sym2Cov, chart: TildeChart) -> dict:
    """Components of a Gothic-index tensor at base index positions."""
    out = {}
    for (k, i, j), val in tilde.comps.items():
        if 0 not in (k, i, j):
            out[(k - 1, i - 1, j - 1)] = chart.restrict(val)
    return out


# ---------------------------------------------------------------------------
# extension operator and bracket extension
# ---------------------------------------------------------------------------


def _first_order_data(s: Sym2Upper, pi: ProjectiveClass, gamma: dict):
    """d_j S^ji with the parity sign, and contractions S Pi, S G0."""
    dim = s.dim
    eps = s.parity
    div_s = {}
    s_pi = {}
    for i in range(dim.size):
        acc = SuperFunction.zero(dim)
        for j in range(dim.size):
            val = s.component(j, i)
            if not val.is_zero():
                sign = (-1) ** (dim.parity(j) * (eps + 1))
                acc = acc + val.partial(j).scale(sign)
        if not acc.is_zero():
            div_s[i] = acc
        acc = SuperFunction.zero(dim)
        for j in range(dim.size):
            for k in range(dim.size):
                sv = s.component(j, k)
                pv = pi.component(i, k, j)
                if sv.is_zero() or pv.is_zero():
                    continue
                acc = acc + sv * pv
        if not acc.is_zero():
            s_pi[i] = acc
    div_gamma = SuperFunction.zero(dim)
    for k, g in gamma.items():
        sign = (-1) ** (dim.parity(k) * (eps + 1))
        div_gamma = div_gamma + g.partial(k).scale(sign)
    return div_s, s_pi, div_gamma


def _contract_lower(s: Sym2Upper, lower: dict) -> SuperFunction:
    """S^jk L_kj summed in written order."""
    dim = s.dim
    acc = SuperFunction.zero(dim)
    for (j, k), sv in s.comps.items():
        lv = lower.get((k, j))
        if lv is None or lv.is_zero():
            continue
        acc = acc + sv * lv
    return acc


def extension_operator(triple: BracketTriple, pi: ProjectiveClass) -> DensityOperator:
    """Generating operator for the triple's bracket obtained from the
    extended-chart Laplacian, with d_0 realized as the weight operator:

        (1/2) |Dx|^lam ( S^ij d_j d_i + 2 gamma^i w d_i + theta w^2
          + ( 2/(n0+4) d_j S^ji (-1)^{j~(eps+1)}
              + 2(lam(n0+1)+1)/((n0+1)(n0+4)) gamma^i
              - (n0+2)/(n0+4) S^jk Pi^i_kj ) d_i
          + ( 2/(n0+4) d_k gamma^k (-1)^{k~(eps+1)}
              + (2 lam(n0+1) - n0)/((n0+1)(n0+4)) theta
              - (n0+2)/(n0+4) S^jk G0_kj ) w ).
    """
    dim = triple.dim
    if pi.dim != dim:
        raise SingularDimension("triple and class over different dimensions")
    n0 = dim.n0
    if n0 in (1, -1, -4):
        raise SingularDimension(f"n - m = {n0}: extension operator undefined")
    lam = triple.weight
    s = triple.s
    gamma = dict(triple.gamma)
    div_s, s_pi, div_gamma = _first_order_data(s, pi, gamma)
    g0 = tilde_ricci(pi)
    half = Fraction(1, 2)

    def wrap(f: SuperFunction) -> DensityElement:
        return DensityElement(dim, {lam: f.scale(half)})

    total = DensityOperator.zero(dim)
    for (i, j), val in s.comps.items():
        total = total + DensityOperator.from_written(wrap(val), [j, i])
    for i, g in gamma.items():
        total = total + DensityOperator.from_written(wrap(g.scale(2)), [i], wpow=1)
    if not triple.theta.is_zero():
        total = total + DensityOperator.from_written(wrap(triple.theta), [], wpow=2)
    c_div = Fraction(2, n0 + 4)
    c_gamma = Fraction(2 * (lam * (n0 + 1) + 1), (n0 + 1) * (n0 + 4))
    c_pi = Fraction(n0 + 2, n0 + 4)
    for i in range(dim.size):
        acc = div_s.get(i, SuperFunction.zero(dim)).scale(c_div)
        if i in gamma:
            acc = acc + gamma[i].scale(c_gamma)
        if i in s_pi:
            acc = acc - s_pi[i].scale(c_pi)
        if not acc.is_zero():
            total = total + DensityOperator.from_written(wrap(acc), [i])
    c_theta = Fraction(2 * lam * (n0 + 1) - n0, (n0 + 1) * (n0 + 4))
    acc = div_gamma.scale(c_div) + triple.theta.scale(c_theta)
    acc = acc - _contract_lower(s, g0).scale(c_pi)
    if not acc.is_zero():
        total = total + DensityOperator.from_written(wrap(acc), [], wpow=1)
    return total


def gamma_theta_from_s(s: Sym2Upper, pi: ProjectiveClass, lam) -> tuple:
    """The volume-connection and scalar components completing a weight-lam
    tensor S^ij to a bracket triple:

        gamma^i = (n0+1)/((n0+3) - lam(n0+1))
                  (d_j S^ji (-1)^{j~(S~+1)} + S^jk Pi^i_kj)
        theta   = (n0+1)/((n0+2) - lam(n0+1))
                  (d_k gamma^k (-1)^{k~(S~+1)} + S^jk G0_kj).
    """
    dim = s.dim
    n0 = dim.n0
    if n0 in (1, -1):
        raise SingularDimension(f"n - m = {n0}: bracket extension undefined")
    lam = lam if isinstance(lam, Fraction) else Fraction(lam)
    den_gamma = Fraction(n0 + 3) - lam * (n0 + 1)
    den_theta = Fraction(n0 + 2) - lam * (n0 + 1)
    if den_gamma == 0 or den_theta == 0:
        raise SingularWeight(
            f"weight {lam} is singular for n - m = {n0}")
    div_s, s_pi, _ = _first_order_data(s, pi, {})
    gamma = {}
    qg = Fraction(n0 + 1) / den_gamma
    for i in range(dim.size):
        acc = div_s.get(i, SuperFunction.zero(dim))
        acc = acc + s_pi.get(i, SuperFunction.zero(dim))
        if not acc.is_zero():
            gamma[i] = acc.scale(qg)
    _, _, div_gamma = _first_order_data(s, pi, gamma)
    qt = Fraction(n0 + 1) / den_theta
    theta = (div_gamma + _contract_lower(s, tilde_ricci(pi))).scale(qt)
    return gamma, theta


def extend_bracket(s: Sym2Upper, pi: ProjectiveClass, lam) -> BracketTriple:
    """Complete a weight-lam tensor to the canonical bracket triple."""
    gamma, theta = gamma_theta_from_s(s, pi, lam)
    return BracketTriple(s, gamma, theta, s.parity, lam)
