"""Two-body pair potentials and the molecule-wall van der Waals interaction.

Three pair forms are supported:

``square_well``
    ``V(r) = -V0`` for ``r < R`` and 0 outside.
``yamaguchi``
    Rank-one separable (nonlocal) potential with form factor
    ``g(p) = 1/(p^2 + b^2)``.  It has no coordinate-space representation
    and is consumed directly by the momentum-space three-body solver.
``repulsion_dispersion``
    Exponential repulsion plus damped dispersion,
    ``V(r) = A exp(-a r) - sum_n f_2n(r/r_d) C_2n / r^2n`` (n = 3, 4, 5),
    where ``f_2n(x) = P(2n+1, x)`` is the regularized lower incomplete gamma
    function.  The damping vanishes as ``x^(2n+1)`` so V stays finite at r=0.

All parameters are SI.  Potential files use the key-value format of
:mod:`trimer_optics.config`: one ``form = <name>`` line followed by the
parameters of that form.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from importlib import resources

import numpy as np
from scipy.special import gammainc

from .config import format_float, parse_blocks, reject_unknown, take_float
from .errors import ParseError


@dataclass(frozen=True)
class SquareWell:
    V0: float
    R: float

    form = "square_well"
    local = True

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError("square well range R must be positive")

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r < self.R, -self.V0, 0.0)

    def critical_depth(self, mu):
        """Depth at which the first s-wave state sits exactly at threshold."""
        from .units import HBAR

        return np.pi**2 * HBAR**2 / (8.0 * mu * self.R**2)


@dataclass(frozen=True)
class Yamaguchi:
    strength: float
    b: float

    form = "yamaguchi"
    local = False

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError("Yamaguchi inverse range b must be positive")

    def evaluate(self, r):
        raise TypeError("yamaguchi potential is nonlocal; it has no V(r)")


@dataclass(frozen=True)
class RepulsionDispersion:
    A: float
    a: float
    C6: float
    C8: float
    C10: float
    r_d: float

    form = "repulsion_dispersion"
    local = True

    def __post_init__(self):
        if not (self.a > 0 and self.r_d > 0):
            raise ValueError("a and r_d must be positive")

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        x = r / self.r_d
        v = self.A * np.exp(-self.a * r)
        safe = np.where(r > 0, r, 1.0)
        for n2, c in ((6, self.C6), (8, self.C8), (10, self.C10)):
            damped = gammainc(n2 + 1, x) * c / safe**n2
            v = v - np.where(r > 0, damped, 0.0)
        return v


PairPotential = SquareWell | Yamaguchi | RepulsionDispersion

FORMS = {cls.form: cls for cls in (SquareWell, Yamaguchi, RepulsionDispersion)}


def evaluate(potential, r):
    """V(r) in J.  Raises TypeError for the nonlocal Yamaguchi form."""
    return potential.evaluate(r)


def potential_from_block(block, section=None) -> PairPotential:
    if "form" not in block:
        raise ParseError("missing 'form' line", key="form")
    name = block["form"].value
    if name not in FORMS:
        raise ParseError(f"unknown potential form {name!r}", line=block["form"].line, key="form")
    cls = FORMS[name]
    names = [f.name for f in fields(cls)]
    reject_unknown(block, ["form", *names], section)
    values = {key: take_float(block, key, form=name) for key in names}
    try:
        return cls(**values)
    except ValueError as exc:
        raise ParseError(str(exc), line=block["form"].line) from None


def load_potential(text: str) -> PairPotential:
    """Parse potential config text (see module docstring for the format)."""
    blocks = parse_blocks(text)
    extra = [name for name in blocks if name is not None]
    if extra:
        raise ParseError(f"unexpected section [{extra[0]}] in potential file")
    return potential_from_block(blocks[None])


def save_potential(potential: PairPotential) -> str:
    lines = [f"form = {potential.form}"]
    lines += [f"{k} = {format_float(v)}" for k, v in asdict(potential).items()]
    return "\n".join(lines) + "\n"


def sample_potential(name: str = "he-he-sample") -> PairPotential:
    """Load one of the potential files shipped in ``trimer_optics/data``."""
    text = resources.files("trimer_optics.data").joinpath(f"{name}.pot").read_text()
    return load_potential(text)


@dataclass(frozen=True)
class SurfaceInteraction:
    """Molecule-wall attraction ``V(l) = -C3/l^3``, clamped below ``l_min``."""

    C3: float
    l_min: float

    def __post_init__(self):
        if self.C3 < 0:
            raise ValueError("C3 must be non-negative")
        if not self.l_min > 0:
            raise ValueError("l_min must be positive")

    def wall_potential(self, distance):
        distance = np.maximum(np.asarray(distance, dtype=float), self.l_min)
        return -self.C3 / distance**3
