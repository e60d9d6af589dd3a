"""
Closed-form kinematics and statics of a simply supported beam under two point
loads. Positions are measured along the beam axis from its left end.
"""

from typing import Sequence

import numpy as np

from dualgraph.exceptions import CaseInvariantError, InvalidInputError
from dualgraph.synth.types import BeamSpec

REACTION_TOLERANCE = 1e-9


def check_load_positions(spec: BeamSpec, positions: Sequence[float]):
    half = 0.5 * spec.block_width
    a, b = sorted(positions)
    for p in (a, b):
        if p - half < spec.left_support or p + half > spec.right_support:
            raise InvalidInputError(
                f"load block at {p} mm leaves the span [{spec.left_support}, {spec.right_support}]"
            )
    if a + half >= b - half:
        raise InvalidInputError(f"load blocks at {a} and {b} mm overlap")


def force_at(spec: BeamSpec, deflection):
    """
    Bilinear force law through (0, 0), (yield deflection, yield force) and
    (ultimate deflection, ultimate force). kN.
    """
    return np.interp(
        deflection,
        [0.0, spec.yield_deflection, spec.ultimate_deflection],
        [0.0, spec.yield_force, spec.ultimate_force],
    )


def support_reactions(spec: BeamSpec, positions: Sequence[float], force) -> tuple:
    """
    Left and right support reactions for a total force shared equally by the two
    blocks. Same units as `force`.
    """
    force = np.asarray(force, dtype=np.float64)
    left = np.zeros_like(force)
    right = np.zeros_like(force)
    for p in positions:
        a = p - spec.left_support
        left = left + 0.5 * force * (spec.span - a) / spec.span
        right = right + 0.5 * force * a / spec.span
    return left, right


def check_reactions(spec: BeamSpec, positions: Sequence[float], force):
    left, right = support_reactions(spec, positions, force)
    force = np.asarray(force, dtype=np.float64)
    residual = np.abs(left + right - force)
    if np.any(residual > REACTION_TOLERANCE * np.maximum(np.abs(force), 1.0)):
        raise CaseInvariantError(
            f"support reactions miss the applied load by up to {residual.max():.3e}"
        )


def bending_moment(spec: BeamSpec, positions: Sequence[float], x, force_kn: float = 1.0):
    """
    Sagging moment M(x) in N mm; zero over the overhangs.
    """
    x = np.asarray(x, dtype=np.float64)
    left, _ = support_reactions(spec, positions, 1000.0 * force_kn)
    xi = x - spec.left_support
    moment = left * xi
    for p in positions:
        moment = moment - 0.5 * 1000.0 * force_kn * np.maximum(0.0, xi - (p - spec.left_support))
    inside = (xi >= 0.0) & (xi <= spec.span)
    return np.where(inside, moment, 0.0)


def _point_load_deflection(span: float, a: float, xi: np.ndarray, rigidity: float):
    """Deflection and slope (downward positive) of a unit point load at `a`."""
    b = span - a
    left = xi <= a
    y = span - xi
    w = np.where(
        left,
        b * xi * (span**2 - b**2 - xi**2),
        a * y * (span**2 - a**2 - y**2),
    )
    dw = np.where(
        left,
        b * (span**2 - b**2 - 3.0 * xi**2),
        -a * (span**2 - a**2 - 3.0 * y**2),
    )
    scale = 6.0 * rigidity * span
    return w / scale, dw / scale


def deflection_shape(spec: BeamSpec, positions: Sequence[float], x):
    """
    Superposed deflection w(x) and slope w'(x) for unit loads on both blocks. The
    overhangs rotate rigidly about the supports.

    Returns:
        (w, w') with w positive downwards
    """
    xi = np.asarray(x, dtype=np.float64) - spec.left_support
    inner = np.clip(xi, 0.0, spec.span)
    w = np.zeros_like(inner)
    dw = np.zeros_like(inner)
    for p in positions:
        wi, dwi = _point_load_deflection(
            spec.span, p - spec.left_support, inner, spec.flexural_rigidity
        )
        w += wi
        dw += dwi
    # rigid overhang: w = w'(support) * distance beyond it, w(support) = 0
    w = np.where(xi < 0.0, dw * xi, w)
    w = np.where(xi > spec.span, dw * (xi - spec.span), w)
    return w, dw


def localization_fraction(values: np.ndarray) -> float:
    """Share of entries above half the peak value."""
    values = np.asarray(values, dtype=np.float64)
    peak = values.max()
    if peak <= 0:
        return 0.0
    return float(np.mean(values > 0.5 * peak))
