"""Piecewise-affine dynamics of a two-display-case refrigeration loop.

Two open display cases share a suction manifold and a fixed-capacity
compressor rack.  Each case i has an air temperature T_i [degC] and an inlet
valve delta_i in {0, 1}; the manifold has a suction pressure P [bar].  With
the valve closed (delta_i = 0) the case warms toward the ambient heat load;
with the valve open it is cooled at a rate that grows with suction pressure.
Pressure relaxes toward a level set by how many valves currently feed the
manifold.  In reduced coefficients the continuous dynamics in a fixed valve
configuration are affine:

    dT_i/dt = -a*T_i + b - delta_i*(c*T_i - d*P - e)        i = 1, 2
    dP/dt   = -alpha*P + beta + valve_gain*(delta1 + delta2)

All coefficients are per second; temperatures in degC, pressure in bar.

Because each mode is affine and the pressure equation is autonomous, the
flow has a closed form: P relaxes exponentially to its mode equilibrium and
each temperature is a scalar linear ODE driven by a constant plus a single
exponential, solved by two decaying exponentials (plus a t*exp(-t) term in
the measure-zero resonant case).  `propagate_exact` evaluates that closed
form; `propagate_rk4` is the independent fixed-step integrator used to
cross-check it and to drive the stochastic executor.

`ReducedCoefficients.canonical()` is the coefficient set used everywhere by
default.  `reduce_physical` derives reduced coefficients from a physical
cabinet/compressor parameter table; for two of the coefficients the bundled
reference table does not reproduce the canonical values (see README), which
is why the derived set is reported but never silently substituted.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict, fields

import numpy as np

from ._kernels import rk4_n_steps

__all__ = [
    "Mode",
    "State",
    "ReducedCoefficients",
    "PhysicalParameters",
    "CANONICAL_COEFFICIENTS",
    "REFERENCE_PLANT",
    "vector_field",
    "affine_fixed_point",
    "propagate_exact",
    "propagate_rk4",
    "reduce_physical",
]

# Switching coefficients whose closed-form solution degenerates to the
# resonant t*exp branch when the temperature and pressure rates collide.
RESONANCE_TOL = 1e-9


@dataclass(frozen=True)
class Mode:
    """Valve configuration (delta1, delta2), each 0 (closed) or 1 (open)."""

    delta1: int
    delta2: int

    def __post_init__(self) -> None:
        for v in (self.delta1, self.delta2):
            if v not in (0, 1):
                raise ValueError(f"valve flags must be 0 or 1, got {v!r}")

    def as_tuple(self) -> tuple[int, int]:
        return (self.delta1, self.delta2)

    def delta(self, axis: int) -> int:
        """Valve flag for axis 1 or 2."""
        if axis == 1:
            return self.delta1
        if axis == 2:
            return self.delta2
        raise ValueError(f"axis must be 1 or 2, got {axis!r}")

    @property
    def valves_open(self) -> int:
        return self.delta1 + self.delta2


@dataclass(frozen=True)
class State:
    """Continuous state: case temperatures [degC] and suction pressure [bar]."""

    T1: float
    T2: float
    P: float

    def __post_init__(self) -> None:
        for name in ("T1", "T2", "P"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite, got {getattr(self, name)!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.T1, self.T2, self.P], dtype=float)

    @classmethod
    def from_array(cls, x) -> "State":
        T1, T2, P = np.asarray(x, dtype=float)
        return cls(float(T1), float(T2), float(P))


@dataclass(frozen=True)
class ReducedCoefficients:
    """Reduced per-second coefficients of the piecewise-affine model.

    a          temperature self-relaxation, valve closed  [1/s]
    b          warming drive from the ambient heat load   [degC/s]
    c          extra temperature coupling while cooling   [1/s]
    d          pressure->cooling-rate coupling            [degC/(s*bar)]
    e          constant cooling offset, valve open        [degC/s]
    alpha      suction-pressure self-relaxation           [1/s]
    beta       pressure drive with all valves closed      [bar/s]
    valve_gain pressure drive per open valve              [bar/s]
    """

    a: float
    b: float
    c: float
    d: float
    e: float
    alpha: float
    beta: float
    valve_gain: float

    def __post_init__(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise ValueError(f"coefficient {f.name} must be finite, got {v!r}")
        if self.a <= 0:
            raise ValueError(f"a must be positive, got {self.a!r}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")

    @classmethod
    def canonical(cls) -> "ReducedCoefficients":
        """The reference coefficient set used by default throughout."""
        return cls(
            a=0.0019,
            b=0.0244,
            c=-0.0012,
            d=-0.0506,
            e=-0.1065,
            alpha=0.056,
            beta=0.0038,
            valve_gain=1.0,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "ReducedCoefficients":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown coefficient keys: {sorted(unknown)}")
        merged = {f.name: float(doc.get(f.name, getattr(cls.canonical(), f.name))) for f in fields(cls)}
        return cls(**merged)

    @classmethod
    def from_json(cls, text: str) -> "ReducedCoefficients":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class PhysicalParameters:
    """Cabinet and compressor-rack parameters of the reference plant.

    Heat-transfer coefficients in J/(s*degC), masses in kg, heat capacity in
    J/(kg*degC), flows in kg/s or m^3/s, temperatures in degC.  The
    evaporation-temperature and suction-density fits are affine in pressure:
    T_evap ~ a_T*P + b_T and rho_suc ~ a_rho*P + b_rho.
    """

    UA_wall_ref_max: float = 500.0   # wall <-> refrigerant, valve open
    UA_goods_air: float = 300.0      # stored goods <-> case air
    UA_air_wall: float = 500.0       # case air <-> evaporator wall
    T_goods: float = 3.0             # goods temperature held by control [degC]
    m_dot_valve: float = 1.0         # refrigerant mass flow per open valve [kg/s]
    m_dot_const: float = 0.2         # bypass mass flow into the manifold [kg/s]
    Q_load: float = 3000.0           # ambient heat load per case [J/s]
    M_wall: float = 260.0            # evaporator wall mass [kg]
    Cp_wall: float = 385.0           # evaporator wall heat capacity [J/(kg*degC)]
    grad_rho_suc: float = 4.6        # suction-density sensitivity to pressure
    V_dot_comp: float = 0.28         # compressor volume flow [m^3/s]
    V_suc: float = 5.0               # suction manifold volume [m^3]
    T_lower: float = 0.0             # hysteresis band, valve closes [degC]
    T_upper: float = 5.0             # hysteresis band, valve opens [degC]
    a_T: float = -16.2072            # evaporation-temperature fit slope
    b_T: float = -41.9095            # evaporation-temperature fit offset
    a_rho: float = 4.6               # suction-density fit slope
    b_rho: float = 0.4               # suction-density fit offset

    def __post_init__(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise ValueError(f"parameter {f.name} must be finite, got {v!r}")
        for name in ("UA_goods_air", "UA_air_wall", "M_wall", "Cp_wall",
                     "V_dot_comp", "V_suc", "grad_rho_suc"):
            if getattr(self, name) <= 0:
                raise ValueError(f"parameter {name} must be positive")
        if self.T_upper <= self.T_lower:
            raise ValueError("T_upper must exceed T_lower")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "PhysicalParameters":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown physical parameter keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in doc.items()})

    @classmethod
    def from_json(cls, path) -> "PhysicalParameters":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


CANONICAL_COEFFICIENTS = ReducedCoefficients.canonical()
REFERENCE_PLANT = PhysicalParameters()


def reduce_physical(params: PhysicalParameters) -> ReducedCoefficients:
    """Collapse the physical parameter table to reduced coefficients.

    The case air and goods are eliminated through a quasi-static balance: the
    wall temperature is affine in the air temperature,
    T_wall = kappa*T - tau with kappa = 1 + UA_goods_air/UA_air_wall, and the
    lumped thermal mass is D = kappa*M_wall*Cp_wall.  The open-valve cooling
    term UA_wall_ref_max*(T_wall - T_evap(P)) then expands to the affine
    c*T - d*P - e form; the manifold mass balance divided by the suction
    volume times the density sensitivity gives alpha, beta and valve_gain.

    Note the derived c and valve_gain do not match the canonical set for the
    bundled reference plant (sign of c, magnitude of valve_gain); callers
    wanting the canonical behavior must keep using
    ``ReducedCoefficients.canonical()``.  See README.
    """
    kappa = 1.0 + params.UA_goods_air / params.UA_air_wall
    D = kappa * params.M_wall * params.Cp_wall
    tau = (params.UA_goods_air * params.T_goods + params.Q_load) / params.UA_air_wall

    a = params.UA_goods_air / D
    b = (params.UA_goods_air * params.T_goods + params.Q_load) / D
    c = params.UA_wall_ref_max * kappa / D
    d = params.UA_wall_ref_max * params.a_T / D
    e = params.UA_wall_ref_max * (tau + params.b_T) / D

    denom = params.V_suc * params.grad_rho_suc
    alpha = params.V_dot_comp * params.a_rho / denom
    beta = (params.m_dot_const - params.V_dot_comp * params.b_rho) / denom
    valve_gain = params.m_dot_valve / denom

    return ReducedCoefficients(a=a, b=b, c=c, d=d, e=e,
                               alpha=alpha, beta=beta, valve_gain=valve_gain)


def _coeff_tuple(coeffs: ReducedCoefficients) -> tuple[float, ...]:
    return (coeffs.a, coeffs.b, coeffs.c, coeffs.d, coeffs.e,
            coeffs.alpha, coeffs.beta, coeffs.valve_gain)


def vector_field(x, mode: Mode, coeffs: ReducedCoefficients = CANONICAL_COEFFICIENTS) -> np.ndarray:
    """Right-hand side (dT1, dT2, dP) at state x = (T1, T2, P) in a fixed mode."""
    x = np.asarray(x, dtype=float)
    if x.shape != (3,):
        raise ValueError(f"state must have shape (3,), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"state must be finite, got {x!r}")
    a, b, c, d, e, alpha, beta, gain = _coeff_tuple(coeffs)
    T1, T2, P = x
    d1, d2 = mode.delta1, mode.delta2
    return np.array([
        -a * T1 + b - d1 * (c * T1 - d * P - e),
        -a * T2 + b - d2 * (c * T2 - d * P - e),
        -alpha * P + beta + gain * (d1 + d2),
    ])


def affine_fixed_point(mode: Mode, coeffs: ReducedCoefficients = CANONICAL_COEFFICIENTS) -> np.ndarray:
    """Equilibrium (T1*, T2*, P*) of the affine field in the given mode.

    P* = (beta + valve_gain*(delta1+delta2))/alpha, and each temperature
    settles where its own relaxation balances the constant drive at P = P*.
    """
    a, b, c, d, e, alpha, beta, gain = _coeff_tuple(coeffs)
    p_star = (beta + gain * mode.valves_open) / alpha
    out = np.empty(3)
    for i, di in enumerate(mode.as_tuple()):
        lam = a + di * c
        if lam == 0.0:
            raise ValueError("degenerate mode: temperature relaxation rate is zero")
        out[i] = (di * d * p_star + b + di * e) / lam
    out[2] = p_star
    return out


def _arc_terms(x0, mode: Mode, coeffs: ReducedCoefficients):
    """Closed-form building blocks of the flow from x0 in a fixed mode.

    Returns (p_star, dP0, [(lam, T_star, K, E, resonant), ...]) where each
    temperature solves  T(t) = T_star + K*exp(-lam*t) + E*exp(-alpha*t)
    (or + E*t*exp(-alpha*t) when resonant).
    """
    a, b, c, d, e, alpha, beta, gain = _coeff_tuple(coeffs)
    T0 = (x0[0], x0[1])
    p_star = (beta + gain * mode.valves_open) / alpha
    dP0 = x0[2] - p_star
    axes = []
    for T0_i, di in zip(T0, mode.as_tuple()):
        lam = a + di * c
        if lam <= 0.0:
            raise ValueError("temperature relaxation rate must be positive in every mode")
        C = di * d * p_star + b + di * e
        D = di * d * dP0
        T_star = C / lam
        if abs(lam - alpha) < RESONANCE_TOL:
            # resonant limit: the forcing exponential matches the decay rate
            axes.append((lam, T_star, T0_i - T_star, D, True))
        else:
            E = D / (lam - alpha)
            axes.append((lam, T_star, T0_i - T_star - E, E, False))
    return p_star, dP0, axes


def propagate_exact(x0, mode: Mode, t, coeffs: ReducedCoefficients = CANONICAL_COEFFICIENTS) -> np.ndarray:
    """Closed-form flow of the fixed-mode affine field.

    t may be a scalar (returns shape (3,)) or an array (returns (len(t), 3)).
    Negative t is allowed (the affine flow is a group).
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (3,):
        raise ValueError(f"state must have shape (3,), got {x0.shape}")
    if not np.all(np.isfinite(x0)):
        raise ValueError(f"state must be finite, got {x0!r}")
    alpha = coeffs.alpha
    p_star, dP0, axes = _arc_terms(x0, mode, coeffs)

    t_arr = np.asarray(t, dtype=float)
    scalar = t_arr.ndim == 0
    t_arr = np.atleast_1d(t_arr)
    ea = np.exp(-alpha * t_arr)

    out = np.empty((t_arr.size, 3))
    for i, (lam, T_star, K, E, resonant) in enumerate(axes):
        el = np.exp(-lam * t_arr)
        if resonant:
            out[:, i] = T_star + K * el + E * t_arr * ea
        else:
            out[:, i] = T_star + K * el + E * ea
    out[:, 2] = p_star + dP0 * ea
    return out[0] if scalar else out


def propagate_rk4(x0, mode: Mode, t: float, dt: float = 0.1,
                  coeffs: ReducedCoefficients = CANONICAL_COEFFICIENTS) -> np.ndarray:
    """Classical fixed-step 4th-order integration of the fixed-mode field.

    Advances by full steps of dt and one final partial step for the
    remainder, so any t >= 0 is reachable.  This path shares no algebra with
    `propagate_exact` and serves as its independent cross-check.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (3,):
        raise ValueError(f"state must have shape (3,), got {x0.shape}")
    if not np.all(np.isfinite(x0)):
        raise ValueError(f"state must be finite, got {x0!r}")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if t < 0:
        raise ValueError(f"propagate_rk4 requires t >= 0, got {t!r}")
    n = int(math.floor(t / dt + 1e-12))
    rem = t - n * dt
    a, b, c, d, e, alpha, beta, gain = _coeff_tuple(coeffs)
    T1, T2, P = rk4_n_steps(x0[0], x0[1], x0[2],
                            float(mode.delta1), float(mode.delta2),
                            a, b, c, d, e, alpha, beta, gain, dt, n)
    if rem > 1e-12:
        T1, T2, P = rk4_n_steps(T1, T2, P,
                                float(mode.delta1), float(mode.delta2),
                                a, b, c, d, e, alpha, beta, gain, rem, 1)
    return np.array([T1, T2, P])
