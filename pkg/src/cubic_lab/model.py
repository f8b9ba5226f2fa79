"""Coupling parameter, potential, turning points and rescaling frames.

The coupling ``beta`` lives in the plane cut along the closed negative real
axis.  It is stored in polar form so that the two boundary arguments
``+pi`` and ``-pi`` stay distinct; the square root branch is derived from the
polar data and never from a rectangular value.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CutParameter",
    "Potential",
    "TurningPoints",
    "ScalingFrame",
    "FRAME_KINDS",
    "potential_value",
    "polynomial_roots",
    "turning_points",
    "make_frame",
    "lower_turning_points",
]


_PI_TOKENS = {"pi": math.pi, "+pi": math.pi, "-pi": -math.pi}


@dataclass(frozen=True)
class CutParameter:
    """Coupling ``beta = modulus * exp(i * argument)`` on the cut plane.

    Parameters
    ----------
    modulus : float
        Non-negative modulus.  Zero is accepted only as the formal base
        point of the perturbation series.
    argument : float
        Argument in ``[-pi, pi]``.  The endpoints denote the two sides of
        the cut and compare unequal.
    """

    modulus: float
    argument: float = 0.0

    def __post_init__(self):
        modulus = float(self.modulus)
        argument = float(self.argument)
        if not math.isfinite(modulus) or modulus < 0:
            raise ValueError(f"modulus must be finite and non-negative, got {self.modulus!r}")
        if not math.isfinite(argument) or abs(argument) > math.pi:
            raise ValueError(f"argument must lie in [-pi, pi], got {self.argument!r}")
        object.__setattr__(self, "modulus", modulus)
        object.__setattr__(self, "argument", argument)

    @classmethod
    def parse(cls, text: str) -> "CutParameter":
        """Parse ``"MOD@ARG"``; ``ARG`` may be a float or ``pi``/``-pi``.

        A bare number is read as a modulus with argument zero.
        """
        text = text.strip()
        if "@" in text:
            mod_text, arg_text = text.split("@", 1)
        else:
            mod_text, arg_text = text, "0"
        arg_key = arg_text.strip().lower()
        argument = _PI_TOKENS[arg_key] if arg_key in _PI_TOKENS else float(arg_text)
        return cls(float(mod_text), argument)

    def __str__(self) -> str:
        if self.argument == math.pi:
            arg = "pi"
        elif self.argument == -math.pi:
            arg = "-pi"
        else:
            arg = repr(self.argument)
        return f"{self.modulus!r}@{arg}"

    @property
    def is_zero(self) -> bool:
        return self.modulus == 0.0

    @property
    def on_cut(self) -> bool:
        """True on either side of the cut (argument exactly +-pi)."""
        return abs(self.argument) == math.pi

    @property
    def sqrt(self) -> complex:
        """Principal branch ``modulus**0.5 * exp(i * argument / 2)``."""
        return self.power(0.5)

    def power(self, p: float) -> complex:
        """``beta**p`` on the branch fixed by the stored argument."""
        if self.modulus == 0.0:
            if p > 0:
                return 0j
            raise ValueError("non-positive power of a zero coupling")
        return self.modulus ** p * cmath.exp(1j * p * self.argument)

    @property
    def value(self) -> complex:
        """Rectangular value.  Lossy on the cut: both sides map to ``-modulus``."""
        return self.modulus * cmath.exp(1j * self.argument)

    def conjugate(self) -> "CutParameter":
        return CutParameter(self.modulus, -self.argument)


@dataclass(frozen=True)
class Potential:
    """The cubic potential ``x**2 + i * sqrt(beta) * x**3``."""

    beta: CutParameter

    @property
    def cubic_coefficient(self) -> complex:
        return 1j * self.beta.sqrt

    def value(self, x):
        x = np.asarray(x, dtype=complex) if not np.isscalar(x) else complex(x)
        return x * x + self.cubic_coefficient * x ** 3

    def derivative(self, x):
        x = np.asarray(x, dtype=complex) if not np.isscalar(x) else complex(x)
        return 2 * x + 3 * self.cubic_coefficient * x * x


def potential_value(p: Potential, x):
    """Evaluate ``V_beta(x)``; vectorised over ``x``."""
    return p.value(x)


@dataclass(frozen=True)
class TurningPoints:
    """Roots of a cubic with their residuals.

    Attributes
    ----------
    roots : tuple of complex
        Sorted by argument in ``(-pi, pi]``.
    residuals : tuple of float
        ``|V(root) - E|`` for each root.
    ill_conditioned : bool
        Set when two roots nearly coincide; the roots are still returned.
    """

    roots: tuple
    residuals: tuple
    ill_conditioned: bool = False

    def __iter__(self):
        return iter(self.roots)

    def __len__(self):
        return len(self.roots)

    def __getitem__(self, i):
        return self.roots[i]


def polynomial_roots(c3: complex, c2: complex, c1: complex, c0: complex) -> TurningPoints:
    """Roots of ``c3 y^3 + c2 y^2 + c1 y + c0`` by companion matrix plus Newton.

    One Newton polish per root keeps the residual at rounding level even
    near a double root, without any case analysis.
    """
    c3, c2, c1, c0 = (complex(c) for c in (c3, c2, c1, c0))
    if c3 == 0:
        raise ValueError("leading coefficient must be nonzero")
    a2, a1, a0 = c2 / c3, c1 / c3, c0 / c3
    companion = np.array([[-a2, -a1, -a0], [1, 0, 0], [0, 1, 0]], dtype=complex)
    roots = np.linalg.eigvals(companion)

    def poly(y):
        return ((c3 * y + c2) * y + c1) * y + c0

    def dpoly(y):
        return (3 * c3 * y + 2 * c2) * y + c1

    polished = []
    for y in roots:
        d = dpoly(y)
        if d != 0:
            step = poly(y) / d
            trial = y - step
            if abs(poly(trial)) <= abs(poly(y)):
                y = trial
        polished.append(complex(y))
    polished.sort(key=lambda y: cmath.phase(y) if y != 0 else 0.0)
    scale = max(1.0, max(abs(y) for y in polished))
    gaps = [abs(polished[i] - polished[k]) for i in range(3) for k in range(i + 1, 3)]
    ill = min(gaps) < 1e-6 * scale
    residuals = tuple(abs(poly(y)) for y in polished)
    return TurningPoints(tuple(polished), residuals, ill)


def turning_points(p: Potential, E: complex) -> TurningPoints:
    """All three roots of ``V_beta(x) = E`` sorted by argument.

    Raises
    ------
    ValueError
        If ``beta`` is zero (the equation is then quadratic).
    """
    if p.beta.is_zero:
        raise ValueError("turning points need a nonzero coupling")
    return polynomial_roots(p.cubic_coefficient, 1.0, 0.0, -complex(E))


FRAME_KINDS = ("energy-dominant", "coupling-small-A", "coupling-small-B", "beta-large")


@dataclass(frozen=True)
class ScalingFrame:
    """Exact rescaling ``x = x_map * y`` of the eigenvalue problem.

    In every frame the equation reads ``-h^2 k u'' + P(y) u = lam u`` where
    ``P(y) = quadratic * y**2 + cubic * y**3`` and ``k`` is the unit
    ``kinetic_phase``.  ``lam`` has modulus one whenever the energy is
    nonzero.

    Attributes
    ----------
    kind : str
        One of :data:`FRAME_KINDS`.
    h : float
        Effective semiclassical parameter.
    lam : complex
        Rescaled energy.
    alpha : float
        Auxiliary real coefficient of the frame (see :func:`make_frame`).
    x_map : complex
        Position scale factor.
    beta : CutParameter
    energy : complex
    cubic, quadratic : complex
        Coefficients of ``P``.
    kinetic_phase : complex
        Unit factor multiplying ``-h^2 d^2/dy^2``.
    """

    kind: str
    h: float
    lam: complex
    alpha: float
    x_map: complex
    beta: CutParameter
    energy: complex
    cubic: complex
    quadratic: complex
    kinetic_phase: complex = 1.0 + 0j
    strip_constant: float = field(default=1.0)

    def to_frame(self, x):
        return np.asarray(x) / self.x_map

    def from_frame(self, y):
        return self.x_map * np.asarray(y)

    def frame_polynomial(self, y, drop_h_terms: bool = False):
        """``P(y) - lam``; the quadratic term is omitted with ``drop_h_terms``."""
        y = np.asarray(y, dtype=complex)
        quad = 0.0 if drop_h_terms else self.quadratic
        return self.cubic * y ** 3 + quad * y ** 2 - self.lam


def make_frame(kind: str, E: complex, beta: CutParameter, strip_constant: float = 1.0) -> ScalingFrame:
    """Build one of the four rescaling frames.

    Parameters
    ----------
    kind : {"energy-dominant", "coupling-small-A", "coupling-small-B", "beta-large"}
        ``energy-dominant``: ``x = |E|^{1/3} e^{-i theta/10} y``, ``h = |E|^{-5/6}``
        and ``alpha = h^{2/5}`` (modulus of the quadratic coefficient).
        ``coupling-small-A``: ``x = |E|^{1/2} y``, ``h = 1/|E|`` and
        ``alpha = sqrt(|beta| |E|)``.
        ``coupling-small-B``: ``x = |E|^{1/3} beta^{-1/6} y``,
        ``h = |beta|^{1/6} |E|^{-5/6}`` and ``alpha = (|beta| |E|)^{-1/3}``.
        ``beta-large``: ``x = beta^{-1/10} y`` giving
        ``beta^{1/5} (-d^2 + alpha' y^2 + i y^3)`` with
        ``alpha = |beta|^{-2/5}``; ``h`` is the energy-dominant parameter of
        the rescaled energy ``beta^{-1/5} E``.
    E : complex
        Energy (nonzero).
    beta : CutParameter
        Coupling (nonzero).
    strip_constant : float
        Constant ``C`` of the lower region ``{Im y < C h^{2/5}}``.
    """
    if kind not in FRAME_KINDS:
        raise ValueError(f"unknown frame kind {kind!r}; expected one of {FRAME_KINDS}")
    E = complex(E)
    if E == 0:
        raise ValueError("frames need a nonzero energy")
    if beta.is_zero:
        raise ValueError("frames need a nonzero coupling")
    absE = abs(E)
    theta = beta.argument
    b = beta.modulus
    sb = beta.sqrt
    if kind == "energy-dominant":
        x_map = absE ** (1 / 3) * cmath.exp(-1j * theta / 10)
        h = absE ** (-5 / 6)
        lam = E * cmath.exp(-1j * theta / 5) / absE
        cubic = 1j * math.sqrt(b)
        quadratic = h ** 0.4 * cmath.exp(-2j * theta / 5)
        kinetic = 1.0 + 0j
        alpha = h ** 0.4
    elif kind == "coupling-small-A":
        x_map = complex(math.sqrt(absE))
        h = 1.0 / absE
        lam = E / absE
        alpha = math.sqrt(b * absE)
        cubic = 1j * alpha * cmath.exp(1j * theta / 2)
        quadratic = 1.0 + 0j
        kinetic = 1.0 + 0j
    elif kind == "coupling-small-B":
        x_map = absE ** (1 / 3) * beta.power(-1 / 6)
        h = b ** (1 / 6) * absE ** (-5 / 6)
        lam = E / absE
        alpha = (b * absE) ** (-1 / 3)
        cubic = 1j + 0j
        quadratic = alpha * cmath.exp(-1j * theta / 3)
        kinetic = cmath.exp(1j * theta / 3)
    else:
        x_map = beta.power(-0.1)
        scaled = E * beta.power(-0.2)
        h = abs(scaled) ** (-5 / 6)
        lam = scaled / abs(scaled)
        alpha = b ** (-0.4)
        cubic = 1j + 0j
        quadratic = beta.power(-0.4)
        kinetic = 1.0 + 0j
    return ScalingFrame(kind, h, lam, alpha, complex(x_map), beta, E, complex(cubic),
                        complex(quadratic), complex(kinetic), float(strip_constant))


def lower_turning_points(frame: ScalingFrame, drop_h_terms: bool = False):
    """Split the frame turning points by the line ``Im y = C h^{2/5}``.

    Returns
    -------
    lower, upper : list of complex
    """
    quad = 0.0 if drop_h_terms else frame.quadratic
    roots = polynomial_roots(frame.cubic, quad, 0.0, -frame.lam).roots
    level = frame.strip_constant * frame.h ** 0.4
    lower = [y for y in roots if y.imag < level]
    upper = [y for y in roots if y.imag >= level]
    return lower, upper
