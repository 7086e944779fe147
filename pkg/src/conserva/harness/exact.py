"""Exact-solution oracles: ideal-gas Riemann problems and Burgers solutions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import BranchError, ConfigError, VacuumError


@dataclass
class RiemannSolution:
    """Self-similar solution of a 1D ideal-gas Riemann problem.

    Sampling is by the similarity variable xi = (x - x0)/t and returns
    primitive states (rho, v, p).
    """

    left: tuple
    right: tuple
    gamma: float
    p_star: float
    u_star: float
    pressure_residual: float

    def sample(self, xi):
        xi = np.asarray(xi, dtype=float)
        g = self.gamma
        rl, ul, pl = self.left
        rr, ur, pr = self.right
        cl = np.sqrt(g * pl / rl)
        cr = np.sqrt(g * pr / rr)
        ps, us = self.p_star, self.u_star
        gm, gp = g - 1.0, g + 1.0

        out = np.empty(xi.shape + (3,))
        left_side = xi <= us

        # left wave
        if ps > pl:  # shock
            s_l = ul - cl * np.sqrt(0.5 * gp / g * ps / pl + 0.5 * gm / g)
            rho_star = rl * (ps / pl + gm / gp) / (gm / gp * ps / pl + 1.0)
            ahead = xi < s_l
            out[left_side & ahead] = (rl, ul, pl)
            out[left_side & ~ahead] = (rho_star, us, ps)
        else:  # rarefaction
            c_star = cl * (ps / pl) ** (0.5 * gm / g)
            head, tail = ul - cl, us - c_star
            ahead = xi < head
            inside = (~ahead) & (xi < tail)
            behind = left_side & (xi >= tail)
            out[left_side & ahead] = (rl, ul, pl)
            xif = xi[left_side & inside]
            c = 2.0 / gp * (cl + 0.5 * gm * (ul - xif))
            u = 2.0 / gp * (cl + 0.5 * gm * ul + xif)
            fan = np.stack(
                [rl * (c / cl) ** (2.0 / gm), u, pl * (c / cl) ** (2.0 * g / gm)], axis=-1
            )
            out[left_side & inside] = fan
            out[behind] = (rl * (ps / pl) ** (1.0 / g), us, ps)

        right_side = ~left_side
        if ps > pr:  # shock
            s_r = ur + cr * np.sqrt(0.5 * gp / g * ps / pr + 0.5 * gm / g)
            rho_star = rr * (ps / pr + gm / gp) / (gm / gp * ps / pr + 1.0)
            ahead = xi > s_r
            out[right_side & ahead] = (rr, ur, pr)
            out[right_side & ~ahead] = (rho_star, us, ps)
        else:
            c_star = cr * (ps / pr) ** (0.5 * gm / g)
            head, tail = ur + cr, us + c_star
            ahead = xi > head
            inside = (~ahead) & (xi > tail)
            behind = right_side & (xi <= tail)
            out[right_side & ahead] = (rr, ur, pr)
            xif = xi[right_side & inside]
            c = 2.0 / gp * (cr - 0.5 * gm * (ur - xif))
            u = 2.0 / gp * (-cr + 0.5 * gm * ur + xif)
            fan = np.stack(
                [rr * (c / cr) ** (2.0 / gm), u, pr * (c / cr) ** (2.0 * g / gm)], axis=-1
            )
            out[right_side & inside] = fan
            out[behind] = (rr * (ps / pr) ** (1.0 / g), us, ps)
        return out


def _wave_function(p, rho_k, p_k, c_k, gamma):
    """Velocity jump across one wave and its pressure derivative."""
    gm, gp = gamma - 1.0, gamma + 1.0
    if p > p_k:  # shock branch
        a = 2.0 / (gp * rho_k)
        b = gm / gp * p_k
        f = (p - p_k) * np.sqrt(a / (p + b))
        df = np.sqrt(a / (p + b)) * (1.0 - 0.5 * (p - p_k) / (p + b))
    else:  # rarefaction branch
        f = 2.0 * c_k / gm * ((p / p_k) ** (0.5 * gm / gamma) - 1.0)
        df = (p / p_k) ** (-0.5 * gp / gamma) / (rho_k * c_k)
    return f, df


def exact_riemann_euler(left, right, gamma=1.4, tol=1e-12, max_iter=200):
    """Star-region solve of the ideal-gas Riemann problem.

    left, right: primitive states (rho, v, p).  Newton iteration on the
    pressure function starting from the two-rarefaction guess; converges to
    ``tol`` relative.  Raises VacuumError when the data generate vacuum.
    """
    rl, ul, pl = map(float, left)
    rr, ur, pr = map(float, right)
    if min(rl, rr, pl, pr) <= 0:
        raise ConfigError("Riemann data must have positive density and pressure")
    g = gamma
    cl = np.sqrt(g * pl / rl)
    cr = np.sqrt(g * pr / rr)
    if 2.0 * (cl + cr) / (g - 1.0) <= ur - ul:
        raise VacuumError("initial states generate vacuum; oracle does not cover it")

    # two-rarefaction initial guess
    z = 0.5 * (g - 1.0) / g
    p = ((cl + cr - 0.5 * (g - 1.0) * (ur - ul)) / (cl / pl**z + cr / pr**z)) ** (1.0 / z)
    p = max(p, 1e-14)
    for _ in range(max_iter):
        fl, dfl = _wave_function(p, rl, pl, cl, g)
        fr, dfr = _wave_function(p, rr, pr, cr, g)
        delta = (fl + fr + (ur - ul)) / (dfl + dfr)
        p_new = max(p - delta, 1e-14)
        if abs(p_new - p) < tol * p_new:
            p = p_new
            break
        p = p_new
    fl, _ = _wave_function(p, rl, pl, cl, g)
    fr, _ = _wave_function(p, rr, pr, cr, g)
    u_star = 0.5 * (ul + ur) + 0.5 * (fr - fl)
    return RiemannSolution(
        left=(rl, ul, pl),
        right=(rr, ur, pr),
        gamma=g,
        p_star=p,
        u_star=u_star,
        pressure_residual=abs(fl + fr + (ur - ul)),
    )


def burgers_riemann(u_left, u_right, x, t):
    """Entropy solution of the Burgers Riemann problem with jump at x = 0."""
    x = np.asarray(x, dtype=float)
    if t < 0:
        raise ConfigError("t must be nonnegative")
    if t == 0:
        return np.where(x < 0, u_left, u_right)
    if u_left > u_right:  # shock with the Rankine-Hugoniot speed
        s = 0.5 * (u_left + u_right)
        return np.where(x < s * t, u_left, u_right)
    out = np.clip(x / t, u_left, u_right)  # rarefaction fan
    return out


def burgers_sine_exact(x, t, max_iter=100, tol=1e-14):
    """Smooth solution of u_t + (u^2/2)_x = 0 with u(x, 0) = sin(pi x).

    Characteristics give u = sin(pi (x - u t)); Newton converges for
    t < 1/pi, before the first shock forms.  Later times raise BranchError.
    """
    t = float(t)
    if t >= 1.0 / np.pi:
        raise BranchError(
            f"sine data shocks at t = 1/pi ~ {1.0 / np.pi:.6f}; requested t = {t}"
        )
    x = np.asarray(x, dtype=float)
    u = np.sin(np.pi * x)
    for _ in range(max_iter):
        residual = u - np.sin(np.pi * (x - u * t))
        slope = 1.0 + np.pi * t * np.cos(np.pi * (x - u * t))
        du = residual / slope
        u = u - du
        if np.abs(du).max() < tol:
            break
    return u


BURGERS_SINE_BREAKDOWN = 1.0 / np.pi


def burgers_exact(kind, x, t, u_left=1.0, u_right=0.0):
    """Dispatch between the supported exact Burgers branches."""
    if kind == "sine":
        return burgers_sine_exact(x, t)
    if kind == "riemann":
        return burgers_riemann(u_left, u_right, x, t)
    raise ConfigError(f"unknown exact-solution kind {kind!r}")
