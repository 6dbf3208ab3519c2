"""Left action of the left tau-convolution algebra on L^p(G)."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .algebra import (
    GFunction,
    GroupMismatch,
    PhiDensity,
    _conv_left_fixed,
    _tilde_values,
    k_point_mass,
    lconv,
    lift_phi,
    norm,
)
from .scalars import exact_mul

__all__ = [
    "LpElement",
    "module_action",
    "module_action_by_sections",
    "check_module_associativity",
    "approx_identity_action",
    "contraction",
]


@dataclass(frozen=True)
class LpElement:
    u: GFunction
    p: float = 1

    def __post_init__(self):
        if self.p != np.inf and self.p < 1:
            raise ValueError("p must be >= 1 or inf")

    @property
    def group(self):
        return self.u.group

    def norm(self):
        return norm(self.u, self.p)


def _as_lp(u, p=1):
    return u if isinstance(u, LpElement) else LpElement(u, p)


def module_action(f: GFunction, u) -> LpElement:
    """Row h of the result is ``tilde(f) * u_h``."""
    u = _as_lp(u)
    if f.group is not u.group:
        raise GroupMismatch("f and u live on different groups")
    G = f.group
    return LpElement(GFunction(G, _conv_left_fixed(_tilde_values(f.values, G), u.u.values, G.K, G.haar.k_weights)), u.p)


def module_action_by_sections(f: GFunction, u) -> LpElement:
    """The same action from its defining sum ``sum_t delta(t) f_t * u_h``, one H-node at a time.

    Slow; exists as an independent route for tests.
    """
    u = _as_lp(u)
    G = f.group
    wt = np.asarray(G.haar.h_weights) * np.asarray(G.haar.delta)
    acc = None
    for t in range(G.H.order):
        term = _conv_left_fixed(f.values[..., t, :], u.u.values, G.K, G.haar.k_weights)
        if wt[t] != 1:
            term = term * wt[t]
        acc = term if acc is None else acc + term
    return LpElement(GFunction(G, acc), u.p)


def check_module_associativity(f: GFunction, g: GFunction, u):
    """Max-entry size of ``lconv(f, g) . u - f . (g . u)``; exact 0 when the law holds."""
    u = _as_lp(u)
    lhs = module_action(lconv(f, g), u).u
    rhs = module_action(f, module_action(g, u)).u
    return _max_entry(lhs - rhs)


def approx_identity_action(Phi: PhiDensity, u, p=None):
    """``|| Phi(1_e) . u - u ||_p``."""
    u = _as_lp(u, 1 if p is None else p)
    G = Phi.group
    unit = lift_phi(Phi, k_point_mass(G.K, G.K.identity, backend=Phi.phi.backend))
    return norm(module_action(unit, u).u - u.u, u.p)


def contraction(f: GFunction, u):
    """``(||f . u||_p, ||f||_1 * ||u||_p)``."""
    u = _as_lp(u)
    lhs, a, b = norm(module_action(f, u).u, u.p), norm(f, 1), u.norm()
    return lhs, (a * b if f.backend == "float" else exact_mul(a, b))


def _max_entry(d: GFunction):
    v = d.values
    if d.backend == "exact":
        return Fraction(0) if v.is_zero() else float(max(v.abs2().flat)) ** 0.5
    return float(np.abs(v).max()) if v.size else 0.0
