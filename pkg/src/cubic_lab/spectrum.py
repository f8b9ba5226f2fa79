"""Converged levels ``E_n(beta)``, continuation, boundary values and the large-coupling limit.

Eigenvalues come from the rotated Galerkin matrix
``e^{2i a} P + e^{-2i a} x^2 + i sqrt(beta) e^{-3i a} x^3`` with ``a = theta/10``;
this rotation points the real axis of the basis along the bisector of the
two decaying sectors, so the discretisation converges for every argument
in ``[-pi, pi]``.  A truncated non-normal matrix also carries spurious
eigenvalues of huge modulus; only eigenvalues that persist when the basis
is doubled are accepted.

A level is labelled by the number of nodes of its eigenfunction, counted
with :mod:`cubic_lab.nodes`.  Above ``|beta| = 1e4`` the label is carried by
continuation from a node-verified anchor instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .eigensolver import all_eigenvalues, eigenvector_near
from .hermite_basis import assemble_cubic, assemble_limit, assemble_rotated
from .model import CutParameter

__all__ = [
    "LevelValue",
    "ParameterPath",
    "BoundaryValue",
    "LimitValue",
    "ScalingPoint",
    "SpectrumError",
    "LevelLabelError",
    "BranchAmbiguityError",
    "BoundaryLimitError",
    "default_omega",
    "converged_spectrum",
    "level",
    "levels",
    "continue_level",
    "boundary_limit",
    "limit_eigenvalue",
    "scaling_check",
    "perturbative_coefficients",
    "richardson_derivative",
    "NODE_LIMIT",
    "ALPHA_LADDER",
]

NODE_LIMIT = 1e4
ALPHA_LADDER = (0.10, 0.15, 0.20, 0.25)
LIMIT_OMEGA = 1.5


class SpectrumError(RuntimeError):
    """Non-convergence of a spectral computation."""


class LevelLabelError(SpectrumError):
    """Node count of the selected eigenvalue disagrees with its index."""

    def __init__(self, message, index, node_count):
        super().__init__(message)
        self.index = index
        self.node_count = node_count


class BranchAmbiguityError(SpectrumError):
    """Continuation could not separate two competing eigenvalues."""

    def __init__(self, message, values):
        super().__init__(message)
        self.values = values


class BoundaryLimitError(SpectrumError):
    """The rotation ladder on the cut has no plateau or the wrong sign."""

    def __init__(self, message, ladder):
        super().__init__(message)
        self.ladder = ladder


def default_omega(beta: CutParameter) -> float:
    """Basis frequency ``max(1, |beta|^{1/5})``, the natural scale of the cubic well."""
    return max(1.0, beta.modulus ** 0.2)


@dataclass
class LevelValue:
    """One converged eigenvalue ``E_n(beta)``.

    Attributes
    ----------
    truncation : float
        ``|E(N) - E(N/2)|``.
    residual : float
        Residual of the inverse-iteration eigenvector.
    gap : float
        Distance to the nearest other converged eigenvalue.
    coeffs : ndarray
        Eigenvector in the rotated basis (``rotation`` and ``omega``).
    labeling : str
        How the index was established.
    """

    n: int
    beta: CutParameter
    energy: complex
    N: int
    truncation: float
    residual: float
    node_count: int | None = None
    gap: float = float("inf")
    omega: float = 1.0
    rotation: float = 0.0
    coeffs: np.ndarray | None = field(default=None, repr=False)
    labeling: str = "node count"

    @property
    def simple(self) -> bool:
        """Simplicity witness: gap larger than ten truncation estimates."""
        return self.gap > 10 * self.truncation

    def to_row(self) -> dict:
        return {"n": self.n, "modulus": self.beta.modulus, "argument": self.beta.argument,
                "re": self.energy.real, "im": self.energy.imag, "N": self.N,
                "truncation": self.truncation, "residual": self.residual,
                "nodes": "" if self.node_count is None else self.node_count,
                "labeling": self.labeling}


def _log_polar_distance(a: CutParameter, b: CutParameter) -> float:
    return math.hypot(math.log(a.modulus / b.modulus), a.argument - b.argument)


@dataclass
class ParameterPath:
    """Ordered waypoints in the cut plane, spaced by at most ``max_step``.

    Distances are measured in ``(log|beta|, arg beta)``.
    """

    waypoints: list
    max_step: float = 0.1

    def __post_init__(self):
        if not self.waypoints:
            raise ValueError("a path needs at least one waypoint")
        for w in self.waypoints:
            if w.is_zero:
                raise ValueError("paths must avoid beta = 0")
        self.waypoints = self._refine(list(self.waypoints))

    def _refine(self, pts):
        out = [pts[0]]
        for a, b in zip(pts[:-1], pts[1:]):
            k = max(1, math.ceil(_log_polar_distance(a, b) / self.max_step))
            la, lb = math.log(a.modulus), math.log(b.modulus)
            for j in range(1, k + 1):
                t = j / k
                out.append(CutParameter(math.exp(la + t * (lb - la)),
                                        a.argument + t * (b.argument - a.argument)))
        return out

    def __len__(self):
        return len(self.waypoints)

    def __iter__(self):
        return iter(self.waypoints)

    @classmethod
    def radial(cls, argument: float, start: float, stop: float, max_step: float = 0.1):
        return cls([CutParameter(start, argument), CutParameter(stop, argument)], max_step)

    @classmethod
    def arc(cls, modulus: float, start: float, stop: float, max_step: float = 0.1):
        return cls([CutParameter(modulus, start), CutParameter(modulus, stop)], max_step)

    @classmethod
    def rectangle(cls, mod_lo: float, mod_hi: float, arg_lo: float, arg_hi: float,
                  max_step: float = 0.1):
        """Closed loop through ``(mod_lo, arg_lo) -> (mod_lo, arg_hi) -> (mod_hi, arg_hi) -> (mod_hi, arg_lo)``."""
        corners = [CutParameter(mod_lo, arg_lo), CutParameter(mod_lo, arg_hi),
                   CutParameter(mod_hi, arg_hi), CutParameter(mod_hi, arg_lo),
                   CutParameter(mod_lo, arg_lo)]
        return cls(corners, max_step)


def _cubic_matrix(beta, N, omega, rotation):
    return assemble_cubic(beta, N, omega, rotation)


def _matched(fine, coarse, tol):
    """Eigenvalues of ``fine`` that reappear in ``coarse`` within ``tol * max(1, |E|)``."""
    coarse = np.asarray(coarse)
    keep, est = [], []
    for z in fine:
        d = np.min(np.abs(coarse - z))
        if d <= tol * max(1.0, abs(z)):
            keep.append(z)
            est.append(d)
    order = np.argsort(np.real(keep))
    return np.asarray(keep)[order], np.asarray(est)[order]


def converged_spectrum(builder, count: int, tol: float = 1e-9, N0: int = 64, Nmax: int = 1024,
                       method: str | None = None):
    """Lowest ``count`` eigenvalues (by real part) stable under basis doubling.

    Parameters
    ----------
    builder : callable
        ``builder(N)`` returns a :class:`BandedComplexMatrix`.
    count : int
        Number of eigenvalues required.
    tol : float
        Relative agreement ``|E(N) - E(N/2)| <= tol * max(1, |E|)``.

    Returns
    -------
    values : ndarray
        Converged eigenvalues ordered by real part.
    estimates : ndarray
        ``|E(N) - E(N/2)|`` for each.
    N : int
        Basis size of ``values``.
    all_values : ndarray
        Every eigenvalue at size ``N``.

    Raises
    ------
    SpectrumError
        If ``Nmax`` is reached first.
    """
    N = N0
    prev, _ = all_eigenvalues(builder(N), method=method)
    while 2 * N <= Nmax:
        N *= 2
        cur, rep = all_eigenvalues(builder(N), method=method)
        vals, est = _matched(cur, prev, tol)
        if len(vals) >= count:
            top = vals[count - 1]
            # an unconverged eigenvalue of comparable size could still belong below
            pending = [z for z in cur if np.min(np.abs(vals - z)) > 0
                       and abs(z) < 1.5 * abs(top) + 1 and z.real < top.real]
            if not pending:
                return vals, est, N, cur
        prev = cur
    raise SpectrumError(f"fewer than {count} eigenvalues converged up to N = {Nmax}")


def _eigenvector(matrix, E, all_values, tol=1e-12):
    return eigenvector_near(matrix, E, tol=tol)


def level(beta: CutParameter, n: int, tol: float = 1e-9, *, verify_nodes: bool = True,
          N0: int = 64, Nmax: int = 1024, omega: float | None = None,
          rotation: float | None = None, method: str | None = None) -> LevelValue:
    """Converged eigenvalue with ``n`` nodes.

    Parameters
    ----------
    beta : CutParameter
        Nonzero coupling (either side of the cut allowed).
    n : int
    tol : float
        Relative truncation target, ``|E(N) - E(N/2)| <= tol * max(1, |E|)``.
    verify_nodes : bool
        Count nodes of the selected eigenfunction.  Above ``NODE_LIMIT`` the
        label is obtained by radial continuation from ``|beta| = NODE_LIMIT``.

    Raises
    ------
    LevelLabelError
        When the node count of the ``n``-th eigenvalue is not ``n``.
    SpectrumError
        When the basis limit is reached.
    """
    if beta.is_zero:
        raise ValueError("level needs a nonzero coupling; E_n(0) = 2n + 1")
    if n < 0:
        raise ValueError("n must be non-negative")
    if tol < 1e-12:
        raise ValueError("tolerance below 1e-12 is not attainable in double precision")
    if verify_nodes and beta.modulus > NODE_LIMIT:
        anchor = CutParameter(NODE_LIMIT, beta.argument)
        path = ParameterPath.radial(beta.argument, NODE_LIMIT, beta.modulus, max_step=0.25)
        out = continue_level(path, n, tol=tol, checkpoint_every=0, method=method)[-1]
        out.labeling = f"continuation from node-verified anchor at {anchor}"
        return out
    w = default_omega(beta) if omega is None else omega
    a = beta.argument / 10 if rotation is None else rotation
    vals, est, N, allv = converged_spectrum(lambda k: _cubic_matrix(beta, k, w, a), n + 1, tol,
                                            N0, Nmax, method)
    E = complex(vals[n])
    M = _cubic_matrix(beta, N, w, a)
    pair = _eigenvector(M, E, allv)
    others = np.delete(vals, n)
    gap = float(np.min(np.abs(others - E))) if len(others) else float("inf")
    out = LevelValue(n, beta, E, N, float(est[n]), pair.residual, None, gap, w, a, pair.vector,
                     "real-part order")
    if verify_nodes:
        from .nodes import count_nodes

        nc = count_nodes(pair.vector, w, beta, E, rotation=a)
        out.node_count = nc.count
        out.labeling = "node count"
        if nc.count != n:
            raise LevelLabelError(
                f"eigenvalue {E} at position {n} has {nc.count} nodes (beta = {beta})", n, nc.count)
    return out


def levels(beta: CutParameter, count: int, tol: float = 1e-9, verify_nodes: bool = True,
           method: str | None = None) -> list:
    """The lowest ``count`` levels at one coupling, sharing one eigenvalue solve."""
    if beta.modulus > NODE_LIMIT and verify_nodes:
        return [level(beta, n, tol, method=method) for n in range(count)]
    w = default_omega(beta)
    a = beta.argument / 10
    vals, est, N, allv = converged_spectrum(lambda k: _cubic_matrix(beta, k, w, a), count, tol,
                                            method=method)
    M = _cubic_matrix(beta, N, w, a)
    out = []
    for n in range(count):
        E = complex(vals[n])
        pair = _eigenvector(M, E, allv)
        others = np.delete(vals, n)
        gap = float(np.min(np.abs(others - E))) if len(others) else float("inf")
        lv = LevelValue(n, beta, E, N, float(est[n]), pair.residual, None, gap, w, a, pair.vector,
                        "real-part order")
        if verify_nodes:
            from .nodes import count_nodes

            nc = count_nodes(pair.vector, w, beta, E, rotation=a)
            lv.node_count = nc.count
            lv.labeling = "node count"
            if nc.count != n:
                raise LevelLabelError(
                    f"eigenvalue {E} at position {n} has {nc.count} nodes (beta = {beta})", n, nc.count)
        out.append(lv)
    return out


def _predict(ss, es, s):
    """Quadratic (or lower) Lagrange extrapolation of ``E(s)``."""
    k = min(3, len(ss))
    xs, ys = ss[-k:], es[-k:]
    total = 0j
    for i in range(k):
        term = ys[i]
        for j in range(k):
            if j != i:
                term *= (s - xs[j]) / (xs[i] - xs[j])
        total += term
    return total


def continue_level(path: ParameterPath, n: int, tol: float = 1e-9, checkpoint_every: int = 10,
                   max_halvings: int = 8, Nmax: int = 1024, method: str | None = None) -> list:
    """Follow ``E_n`` along a path by predictor-selection steps.

    At each waypoint every eigenvalue is computed and the one closest to a
    quadratic extrapolation of the previous values is selected.  The step is
    halved while a competing eigenvalue lies within three times the
    predicted motion.  Node counts are re-verified every
    ``checkpoint_every`` waypoints and at the end (``0`` disables
    checkpoints).

    Returns
    -------
    list of LevelValue
        One entry per waypoint of ``path``.

    Raises
    ------
    BranchAmbiguityError
        If the halving limit is reached.
    """
    from .nodes import count_nodes

    pts = list(path.waypoints)
    first = level(pts[0], n, tol, verify_nodes=pts[0].modulus <= NODE_LIMIT, method=method)
    out = [first]
    N = first.N
    ss = [0.0]
    es = [first.energy]
    s_here = 0.0
    prev = pts[0]
    for idx, target in enumerate(pts[1:], start=1):
        # sub-steps between prev and target, refined on ambiguity
        queue = [target]
        depth = 0
        while queue:
            goal = queue[0]
            ds = _log_polar_distance(prev, goal)
            s_goal = s_here + ds
            pred = _predict(ss, es, s_goal)
            w = default_omega(goal)
            a = goal.argument / 10
            while True:
                vals, _ = all_eigenvalues(_cubic_matrix(goal, N, w, a), method=method)
                d = np.abs(vals - pred)
                order = np.argsort(d)
                E = complex(vals[order[0]])
                half = eigenvector_near(_cubic_matrix(goal, N // 2, w, a), E, tol=1e-12)
                trunc = abs(half.value - E)
                if trunc <= tol * max(1.0, abs(E)):
                    break
                if 2 * N > Nmax:
                    raise SpectrumError(f"continuation lost convergence at {goal} (N = {N})")
                N *= 2
            motion = abs(pred - es[-1])
            d1, d2 = d[order[0]], d[order[1]]
            if d2 < 3 * max(motion, d1):
                depth += 1
                if depth > max_halvings:
                    raise BranchAmbiguityError(
                        f"cannot separate eigenvalues near {goal}",
                        (complex(vals[order[0]]), complex(vals[order[1]])))
                mid = CutParameter(math.sqrt(prev.modulus * goal.modulus),
                                   0.5 * (prev.argument + goal.argument))
                queue.insert(0, mid)
                continue
            queue.pop(0)
            ss.append(s_goal)
            es.append(E)
            s_here = s_goal
            prev = goal
        M = _cubic_matrix(target, N, w, a)
        pair = eigenvector_near(M, E, tol=1e-12)
        gap = float(np.min(np.abs(np.delete(vals, order[0]) - E)))
        lv = LevelValue(n, target, E, N, trunc, pair.residual, None, gap, w, a, pair.vector,
                        "continuation")
        last = idx == len(pts) - 1
        if checkpoint_every and target.modulus <= NODE_LIMIT and (idx % checkpoint_every == 0 or last):
            nc = count_nodes(pair.vector, w, target, E, rotation=a)
            lv.node_count = nc.count
            if nc.count != n:
                from .nodes import NodeInvarianceError

                raise NodeInvarianceError(
                    f"node count {nc.count} differs from {n} at {target}", target, nc.count, n)
        out.append(lv)
    return out


@dataclass
class BoundaryValue:
    """Boundary value ``E_n^{sign}(-b)`` of a level on the cut."""

    b: float
    sign: int
    n: int
    energy: complex
    alpha: float
    stability: float
    ladder: dict = field(default_factory=dict)
    N: int = 0
    truncation: float = 0.0

    def to_row(self) -> dict:
        return {"n": self.n, "b": self.b, "sign": self.sign, "re": self.energy.real,
                "im": self.energy.imag, "alpha": self.alpha, "stability": self.stability,
                "N": self.N, "truncation": self.truncation}


def boundary_limit(b: float, sign: int, n: int, tol: float = 1e-9, alphas=ALPHA_LADDER,
                   Nmax: int = 1024, method: str | None = None) -> BoundaryValue:
    """Boundary value on the cut from the rotated operator at several rotations.

    The eigenvalue does not depend on the rotation; the largest pairwise
    deviation over the ladder is the stability certificate.  The returned
    energy is the ladder value with the smallest truncation estimate.

    Raises
    ------
    BoundaryLimitError
        If the ladder spread exceeds ``10 * tol * max(1, |E|)``, or the
        imaginary part does not have the sign of ``sign``.
    """
    if not b > 0:
        raise ValueError("b must be positive")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    w = max(1.0, b ** 0.2)
    ladder = {}
    best = None
    for alpha in alphas:
        vals, est, N, _ = converged_spectrum(lambda k: assemble_rotated(b, alpha, sign, k, w),
                                             n + 1, tol, Nmax=Nmax, method=method)
        ladder[alpha] = complex(vals[n])
        if best is None or est[n] < best[1]:
            best = (alpha, float(est[n]), N)
    values = np.array(list(ladder.values()))
    spread = float(np.max(np.abs(values[:, None] - values[None, :])))
    E = ladder[best[0]]
    if spread > 10 * tol * max(1.0, abs(E)):
        raise BoundaryLimitError(f"no rotation plateau at b = {b}, n = {n}: spread {spread:.3g}",
                                 ladder)
    if sign * E.imag <= 0:
        raise BoundaryLimitError(
            f"imaginary part {E.imag:.3g} at b = {b}, n = {n} is not resolved with sign {sign}", ladder)
    return BoundaryValue(b, sign, n, E, best[0], spread, ladder, best[2], best[1])


@dataclass
class LimitValue:
    """Eigenvalue ``L_n`` of ``-d^2/dx^2 + i x^3``."""

    n: int
    value: complex
    truncation: float
    omega_spread: float
    N: int


def limit_eigenvalue(n: int, tol: float = 1e-10, omegas=(LIMIT_OMEGA, 1.0),
                     method: str | None = None) -> LimitValue:
    """``L_n`` converged in the basis size and checked across basis frequencies."""
    results = []
    for w in omegas:
        vals, est, N, _ = converged_spectrum(lambda k: assemble_limit(k, w), n + 1, tol, N0=64,
                                             method=method)
        results.append((complex(vals[n]), float(est[n]), N))
    values = np.array([r[0] for r in results])
    spread = float(np.max(np.abs(values - values[0])))
    L, est, N = results[0]
    if L.real <= 0:
        raise SpectrumError(f"limit eigenvalue {L} is not positive")
    return LimitValue(n, L, est, spread, N)


@dataclass
class ScalingPoint:
    """``beta^{-1/5} E_n(beta)`` compared with ``L_n``."""

    modulus: float
    argument: float
    energy: complex
    scaled: complex
    deviation: float


def scaling_check(moduli, n: int, argument: float = 0.0, tol: float = 1e-10,
                  limit: LimitValue | None = None, method: str | None = None) -> list:
    """Relative deviation of ``beta^{-1/5} E_n(beta)`` from ``L_n`` along a modulus ladder.

    ``beta^{-1/5}`` is taken on the branch of the stored argument, i.e.
    ``|beta|^{-1/5} exp(-i arg(beta)/5)``.
    """
    limit = limit or limit_eigenvalue(n, method=method)
    moduli = sorted(float(m) for m in moduli)
    out = []
    path = ParameterPath([CutParameter(m, argument) for m in moduli], max_step=0.25)
    # one continuation covers the ladder; waypoints are a superset of ``moduli``
    start = moduli[0]
    if start > NODE_LIMIT:
        values = {}
        for m in moduli:
            lv = level(CutParameter(m, argument), n, tol, method=method)
            values[m] = lv.energy
    else:
        traj = continue_level(path, n, tol=tol, checkpoint_every=0, method=method)
        values = {}
        for lv in traj:
            values[lv.beta.modulus] = lv.energy
    for m in moduli:
        key = min(values, key=lambda k: abs(math.log(k / m)))
        E = values[key]
        beta = CutParameter(m, argument)
        scaled = E * beta.power(-0.2)
        out.append(ScalingPoint(m, argument, E, scaled, abs(scaled - limit.value) / abs(limit.value)))
    return out


def perturbative_coefficients(n: int, betas=None, degree: int = 6, tol: float = 1e-11):
    """Estimate ``e_{n,1}`` and ``e_{n,2}`` from levels at small positive coupling.

    Fits ``(E_n(beta) - (2n+1)) / beta`` by a polynomial of ``degree`` on
    ``betas`` (default ``0.001 * k``, ``k = 1..8``) and returns its value and
    slope at zero.
    """
    betas = np.arange(1, 9) * 1e-3 if betas is None else np.asarray(betas, dtype=float)
    F = []
    for b in betas:
        lv = level(CutParameter(float(b)), n, tol, verify_nodes=False)
        F.append((lv.energy.real - (2 * n + 1)) / b)
    coef = np.polyfit(betas, F, min(degree, len(betas) - 1))
    return float(coef[-1]), float(coef[-2])


def richardson_derivative(n: int, h: float = 1e-4, levels_count: int = 4, tol: float = 1e-11) -> float:
    """Derivative of ``E_n`` at zero from one-sided quotients with steps ``h, h/2, ...``.

    The quotients ``D(h) = (E_n(h) - (2n+1)) / h = e_1 + e_2 h + ...`` are
    extrapolated to ``h = 0`` with a Richardson table.
    """
    hs = [h / 2 ** k for k in range(levels_count)]
    D = [(level(CutParameter(x), n, tol, verify_nodes=False).energy.real - (2 * n + 1)) / x for x in hs]
    table = [D]
    for k in range(1, levels_count):
        prev = table[-1]
        table.append([(2 ** k * prev[i + 1] - prev[i]) / (2 ** k - 1) for i in range(len(prev) - 1)])
    return float(table[-1][0])
