"""The five built-in designs, their parameter records, and the preset registry.

Each make_* constructor validates its parameter inequalities, derives the
closed forms (immersion, implicit map, feedback, on-manifold control,
off-manifold dynamics), and returns an immutable bundle ready for residual
checks and simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .core import (
    Controller,
    ControlAffineSystem,
    FAMILY_OF_ORBITS,
    IandIBundle,
    ImmersionMap,
    ImplicitManifold,
    ParameterError,
    TargetDynamics,
    UNIQUE_ATTRACTIVE_ORBIT,
)
from .odesim import FieldEvaluationError

_J = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _slow_pole_rate(gamma1: float, gamma2: float) -> float:
    """Decay rate of the slowest root of s^2 + gamma1 s + gamma2."""
    roots = np.roots([1.0, gamma1, gamma2])
    return float(-np.max(roots.real))


def _box(rows) -> np.ndarray:
    return np.array(rows, dtype=float)


@dataclass(frozen=True)
class LtiParams:
    """Double-integrator-like linear plant: x_b' = -P x_a - R x_b + u."""

    P: np.ndarray
    R: np.ndarray


@dataclass(frozen=True)
class IwpParams:
    """Inertia wheel pendulum (normalized).

    m is the gravity torque coefficient, b the input coupling on the link
    acceleration, k the manifold slope, gamma1/gamma2 the off-manifold gains.
    k < -1/b is required so the effective restoring coefficient
    a = -m/(1 + b k) is positive.
    """

    m: float
    b: float
    k: float
    gamma1: float
    gamma2: float

    def __post_init__(self):
        if self.m <= 0 or self.b <= 0:
            raise ParameterError("m and b must be positive")
        if self.gamma1 <= 0 or self.gamma2 <= 0:
            raise ParameterError("gamma1 and gamma2 must be positive")
        if self.k >= -1.0 / self.b:
            raise ParameterError(
                f"k must satisfy k < -1/b (got k={self.k}, -1/b={-1.0 / self.b}); "
                "the restoring coefficient -m/(1+bk) is not positive otherwise"
            )

    @property
    def a(self) -> float:
        return -self.m / (1.0 + self.b * self.k)


@dataclass(frozen=True)
class CartPendLinearParams:
    """Cart-pendulum, design with a linear manifold map.

    a1 = g/l, a2 = 1/l in the normalized model. k < -1/a2 keeps the control
    denominator 1 + k a2 cos(x1) negative on the admissible cone
    cos(x1) > -1/(k a2).
    """

    a1: float
    a2: float
    k: float
    gamma1: float
    gamma2: float

    def __post_init__(self):
        if self.a1 <= 0 or self.a2 <= 0:
            raise ParameterError("a1 and a2 must be positive")
        if self.gamma1 <= 0 or self.gamma2 <= 0:
            raise ParameterError("gamma1 and gamma2 must be positive")
        if self.k >= -1.0 / self.a2:
            raise ParameterError(
                f"k must satisfy k < -1/a2 (got k={self.k}, -1/a2={-1.0 / self.a2}); "
                "the control denominator 1 + k a2 cos(x1) changes sign otherwise"
            )

    @property
    def beta_star(self) -> float:
        """Half-width of the admissible angle cone."""
        return math.acos(-1.0 / (self.k * self.a2))


@dataclass(frozen=True)
class CartPendNonlinearParams:
    """Cart-pendulum, design with a curved manifold map.

    a > 0 is the design constant that keeps the target's potential minimum
    at the upright; a0 shifts the cart's rest position.
    """

    a1: float
    a2: float
    a: float
    a0: float
    gamma1: float
    gamma2: float

    def __post_init__(self):
        if self.a1 <= 0 or self.a2 <= 0:
            raise ParameterError("a1 and a2 must be positive")
        if self.a <= 0:
            raise ParameterError(f"a must be positive (got {self.a})")
        if self.gamma1 <= 0 or self.gamma2 <= 0:
            raise ParameterError("gamma1 and gamma2 must be positive")


@dataclass(frozen=True)
class DcAcParams:
    """Averaged single-phase inverter in the stationary two-axis frame.

    R (ohm), C (farad), L (henry), E (DC source, volt); A and omega set the
    amplitude and angular frequency of the target orbit; gamma scales the
    off-manifold feedback. The duty-cycle inputs should stay inside [-1, 1]:
    the bundle records that limit for monitoring, it is never enforced.
    """

    R: float
    C: float
    L: float
    E: float
    A: float
    omega: float
    gamma: float

    def __post_init__(self):
        for name in ("R", "C", "L", "E", "A", "omega", "gamma"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive")


def make_lti(params: LtiParams) -> IandIBundle:
    """Linear plant tracking a pure rotation.

    The feedback cancels P and R and leaves the closed loop with the block
    matrix [[0, I], [J, J - I]], whose spectrum is {i, -i, -1, -1} for any
    P, R.
    """
    P = np.asarray(params.P, dtype=float)
    R = np.asarray(params.R, dtype=float)
    if P.shape != (2, 2) or R.shape != (2, 2):
        raise ParameterError("P and R must be 2x2")
    T = np.vstack([np.eye(2), _J])  # pi(xi) = T xi
    RJ = R + _J
    K = np.hstack([P, RJ])
    G = np.vstack([np.zeros((2, 2)), np.eye(2)])
    Jphi = np.hstack([-_J, np.eye(2)])

    def f(x):
        out = np.empty(4)
        out[0] = x[2]
        out[1] = x[3]
        out[2:] = -P @ x[:2] - R @ x[2:]
        return out

    def v(x, z):
        return P @ x[:2] + RJ @ x[2:] - z

    bundle = IandIBundle(
        name="lti",
        plant=ControlAffineSystem(n=4, m=2, f=f, g=lambda x: G),
        target=TargetDynamics(
            p=2,
            alpha=lambda xi: _J @ xi,
            first_integral=lambda xi: 0.5 * float(xi @ xi),
            orbit_kind=FAMILY_OF_ORBITS,
        ),
        immersion=ImmersionMap(pi=lambda xi: T @ xi, jacobian=lambda xi: T),
        manifold=ImplicitManifold(phi=lambda x: Jphi @ x, jacobian=lambda x: Jphi),
        controller=Controller(v=v),
        xi_sample_box=_box([[-2, 2], [-2, 2]]),
        x_sample_box=_box([[-2, 2]] * 4),
        closed_form_c=lambda xi: K @ (T @ xi),
        z_dynamics=lambda x, z: -z,
        xi_projection=(0, 1),
        section_index=1,
        info={"z_rate": 1.0},
    )
    return bundle


def make_iwp(params: IwpParams) -> IandIBundle:
    """Inertia wheel pendulum oscillating about the upright.

    The manifold ties the disk coordinates to the link by the slope k; on it
    the link obeys a pendulum with restoring coefficient a = -m/(1+bk).
    """
    m, b, k = params.m, params.b, params.k
    g1, g2 = params.gamma1, params.gamma2
    a = params.a
    Jpi = np.array([[1.0, 0.0], [k, 0.0], [0.0, 1.0], [0.0, k]])
    Jphi = np.array([[-k, 1.0, 0.0, 0.0], [0.0, 0.0, -k, 1.0]])
    G = np.array([[0.0], [0.0], [-b], [1.0]])
    inv_den = 1.0 / (1.0 + k * b)
    km = k * m

    def f(x):
        return np.array([x[2], x[3], m * math.sin(x[0]), 0.0])

    def v(x, z):
        return np.array([inv_den * (-g1 * z[1] - g2 * z[0] + km * math.sin(x[0]))])

    def alpha(xi):
        return np.array([xi[1], -a * math.sin(xi[0])])

    bundle = IandIBundle(
        name="iwp",
        plant=ControlAffineSystem(n=4, m=1, f=f, g=lambda x: G),
        target=TargetDynamics(
            p=2,
            alpha=alpha,
            first_integral=lambda xi: 0.5 * xi[1] ** 2 - a * math.cos(xi[0]),
            orbit_kind=FAMILY_OF_ORBITS,
        ),
        immersion=ImmersionMap(
            pi=lambda xi: np.array([xi[0], k * xi[0], xi[1], k * xi[1]]),
            jacobian=lambda xi: Jpi,
        ),
        manifold=ImplicitManifold(phi=lambda x: Jphi @ x, jacobian=lambda x: Jphi),
        controller=Controller(v=v),
        xi_sample_box=_box([[-3, 3], [-3, 3]]),
        x_sample_box=_box([[-3, 3]] * 4),
        closed_form_c=lambda xi: np.array([-a * k * math.sin(xi[0])]),
        z_dynamics=lambda x, z: np.array([z[1], -g2 * z[0] - g1 * z[1]]),
        xi_projection=(0, 2),
        angle_indices=(0, 1),
        section_index=2,
        info={"a": a, "z_rate": _slow_pole_rate(g1, g2)},
    )
    return bundle


def iwp_energy(params: IwpParams, xi1: float, xi2: float) -> float:
    """Pendulum energy 0.5 xi2^2 - a cos(xi1) of the wheel pendulum's target."""
    return 0.5 * xi2**2 - params.a * math.cos(xi1)


def _cartpend_plant(a1: float, a2: float, admissible) -> ControlAffineSystem:
    def f(x):
        return np.array([x[2], x[3], a1 * math.sin(x[0]), 0.0])

    def g(x):
        return np.array([[0.0], [0.0], [-a2 * math.cos(x[0])], [1.0]])

    return ControlAffineSystem(n=4, m=1, f=f, g=g, admissible=admissible)


def make_cartpend_linear(params: CartPendLinearParams) -> IandIBundle:
    """Cart-pendulum design with linear manifold map.

    Valid on the cone cos(x1) > -1/(k a2), where the control denominator
    1 + k a2 cos(x1) stays negative; evaluating the feedback outside raises
    and aborts the surrounding integration.
    """
    a1, a2, k = params.a1, params.a2, params.k
    g1, g2 = params.gamma1, params.gamma2
    beta_star = params.beta_star
    Jpi = np.array([[1.0, 0.0], [k, 0.0], [0.0, 1.0], [0.0, k]])
    Jphi = np.array([[-k, 1.0, 0.0, 0.0], [0.0, 0.0, -k, 1.0]])
    ka1, ka2 = k * a1, k * a2

    def admissible(x) -> bool:
        return 1.0 + ka2 * math.cos(x[0]) < 0.0

    def denom(x1: float) -> float:
        d = 1.0 + ka2 * math.cos(x1)
        if d >= 0.0:
            raise FieldEvaluationError(
                f"x1={x1!r} leaves the admissible cone (|x1| < {beta_star:.6f})"
            )
        return d

    def v(x, z):
        return np.array(
            [(-g1 * z[1] - g2 * z[0] + ka1 * math.sin(x[0])) / denom(x[0])]
        )

    def alpha2(s: float) -> float:
        return a1 * math.sin(s) / (1.0 + ka2 * math.cos(s))

    # Potential of the on-manifold dynamics, -integral of alpha2, tabulated by
    # adaptive quadrature and interpolated with a cubic spline. Only used for
    # energy diagnostics.
    s_max = beta_star - 1e-3
    nodes = np.linspace(-s_max, s_max, 4097)
    vals = np.empty_like(nodes)
    i0 = len(nodes) // 2
    vals[i0] = 0.0
    for i in range(i0 + 1, len(nodes)):
        seg, _ = quad(alpha2, nodes[i - 1], nodes[i], epsabs=1e-12, epsrel=1e-10)
        vals[i] = vals[i - 1] - seg
    for i in range(i0 - 1, -1, -1):
        seg, _ = quad(alpha2, nodes[i], nodes[i + 1], epsabs=1e-12, epsrel=1e-10)
        vals[i] = vals[i + 1] + seg
    potential = CubicSpline(nodes, vals)

    bundle = IandIBundle(
        name="cartpend-linear",
        plant=_cartpend_plant(a1, a2, admissible),
        target=TargetDynamics(
            p=2,
            alpha=lambda xi: np.array([xi[1], alpha2(xi[0])]),
            first_integral=lambda xi: 0.5 * xi[1] ** 2 + float(potential(xi[0])),
            orbit_kind=FAMILY_OF_ORBITS,
        ),
        immersion=ImmersionMap(
            pi=lambda xi: np.array([xi[0], k * xi[0], xi[1], k * xi[1]]),
            jacobian=lambda xi: Jpi,
        ),
        manifold=ImplicitManifold(phi=lambda x: Jphi @ x, jacobian=lambda x: Jphi),
        controller=Controller(v=v, admissible=lambda x, z: admissible(x)),
        xi_sample_box=_box([[-(beta_star - 0.05), beta_star - 0.05], [-1.5, 1.5]]),
        x_sample_box=_box(
            [[-(beta_star - 0.05), beta_star - 0.05], [-3, 3], [-2, 2], [-3, 3]]
        ),
        closed_form_c=lambda xi: np.array(
            [ka1 * math.sin(xi[0]) / (1.0 + ka2 * math.cos(xi[0]))]
        ),
        z_dynamics=lambda x, z: np.array([z[1], -g2 * z[0] - g1 * z[1]]),
        xi_projection=(0, 2),
        angle_indices=(0,),
        section_index=2,
        info={
            "beta_star": beta_star,
            "k": k,
            "a1": a1,
            "a2": a2,
            "z_rate": _slow_pole_rate(g1, g2),
        },
    )
    return bundle


def cartpend_singularity_margin(bundle: IandIBundle, x) -> float:
    """|1 + k a2 cos(x1)|: distance of design 1's control denominator from
    zero. Only defined for the linear cart-pendulum design."""
    if bundle.name != "cartpend-linear":
        raise ValueError(f"singularity margin is undefined for bundle {bundle.name}")
    ka2 = bundle.info["k"] * bundle.info["a2"]
    return abs(1.0 + ka2 * math.cos(np.asarray(x)[0]))


def make_cartpend_nonlinear(params: CartPendNonlinearParams) -> IandIBundle:
    """Cart-pendulum design with curved manifold map, valid on the whole
    upper half plane |x1| < pi/2.

    The cart coordinate is slaved to the link through
    kfun(s) = -((1+a)/a2) ln((1+sin s)/cos s) + a0, which makes the control
    denominator the constant -a.
    """
    a1, a2, a, a0 = params.a1, params.a2, params.a, params.a0
    g1, g2 = params.gamma1, params.gamma2
    c1 = (1.0 + a) / a2

    def check_angle(s: float) -> None:
        if not -math.pi / 2 < s < math.pi / 2:
            raise FieldEvaluationError(f"link angle {s!r} outside (-pi/2, pi/2)")

    def kfun(s: float) -> float:
        check_angle(s)
        return -c1 * math.log((1.0 + math.sin(s)) / math.cos(s)) + a0

    def kprime(s: float) -> float:
        check_angle(s)
        return -c1 / math.cos(s)

    def ksecond(s: float) -> float:
        check_angle(s)
        return -c1 * math.sin(s) / math.cos(s) ** 2

    def pi_map(xi):
        return np.array([xi[0], kfun(xi[0]), xi[1], kprime(xi[0]) * xi[1]])

    def pi_jac(xi):
        return np.array(
            [
                [1.0, 0.0],
                [kprime(xi[0]), 0.0],
                [0.0, 1.0],
                [ksecond(xi[0]) * xi[1], kprime(xi[0])],
            ]
        )

    def phi(x):
        return np.array([x[1] - kfun(x[0]), x[3] - kprime(x[0]) * x[2]])

    def phi_jac(x):
        return np.array(
            [
                [-kprime(x[0]), 1.0, 0.0, 0.0],
                [-ksecond(x[0]) * x[2], 0.0, -kprime(x[0]), 1.0],
            ]
        )

    def v(x, z):
        return np.array(
            [
                -(
                    ksecond(x[0]) * x[2] ** 2
                    + a1 * kprime(x[0]) * math.sin(x[0])
                    - g2 * z[0]
                    - g1 * z[1]
                )
                / a
            ]
        )

    def alpha(xi):
        rho = -(a1 / a) * math.sin(xi[0])
        beta = -((1.0 + a) / a) * math.tan(xi[0])
        return np.array([xi[1], rho + beta * xi[1] ** 2])

    exp_m = -2.0 * (1.0 + 1.0 / a)
    exp_u = -(1.0 + 2.0 / a)
    u_scale = a1 / (a + 2.0)

    def first_integral(xi):
        c = math.cos(xi[0])
        return 0.5 * abs(c) ** exp_m * xi[1] ** 2 + u_scale * c**exp_u

    s_lim = math.pi / 2 - 0.05
    bundle = IandIBundle(
        name="cartpend-nonlinear",
        plant=_cartpend_plant(
            a1, a2, lambda x: -math.pi / 2 < x[0] < math.pi / 2
        ),
        target=TargetDynamics(
            p=2, alpha=alpha, first_integral=first_integral, orbit_kind=FAMILY_OF_ORBITS
        ),
        immersion=ImmersionMap(pi=pi_map, jacobian=pi_jac),
        manifold=ImplicitManifold(phi=phi, jacobian=phi_jac),
        controller=Controller(
            v=v, admissible=lambda x, z: -math.pi / 2 < x[0] < math.pi / 2
        ),
        xi_sample_box=_box([[-s_lim, s_lim], [-1.0, 1.0]]),
        x_sample_box=_box([[-s_lim, s_lim], [-3, 3], [-1.5, 1.5], [-3, 3]]),
        closed_form_c=lambda xi: np.array(
            [
                -(
                    ksecond(xi[0]) * xi[1] ** 2
                    + a1 * kprime(xi[0]) * math.sin(xi[0])
                )
                / a
            ]
        ),
        z_dynamics=lambda x, z: np.array([z[1], -g2 * z[0] - g1 * z[1]]),
        xi_projection=(0, 2),
        angle_indices=(0,),
        section_index=2,
        info={
            "kfun": kfun,
            "kprime": kprime,
            "ksecond": ksecond,
            "z_rate": _slow_pole_rate(g1, g2),
        },
    )
    return bundle


def make_dcac(params: DcAcParams) -> IandIBundle:
    """Averaged inverter driven onto a circular voltage/current orbit.

    The target has a single attractive orbit |xi| = A, so no first integral
    is recorded. The duty-cycle magnitude limit |u| <= 1 is exposed through
    info["u_limit"] for monitoring.
    """
    R, C, L, E = params.R, params.C, params.L, params.E
    A, omega, gamma = params.A, params.omega, params.gamma
    A2 = A * A
    G = np.vstack([np.zeros((2, 2)), (E / L) * np.eye(2)])

    def f(x):
        return np.array(
            [
                -x[0] / (R * C) + x[2] / C,
                -x[1] / (R * C) + x[3] / C,
                -x[0] / L,
                -x[1] / L,
            ]
        )

    def beta(x1: float, x2: float) -> np.ndarray:
        r2 = x1 * x1 + x2 * x2 - A2
        return np.array(
            [
                x1 / R - C * r2 * x1 + C * omega * x2,
                x2 / R - C * omega * x1 - C * r2 * x2,
            ]
        )

    def beta_jac(x1: float, x2: float) -> np.ndarray:
        return np.array(
            [
                [
                    1.0 / R - C * (3.0 * x1 * x1 + x2 * x2 - A2),
                    C * omega - 2.0 * C * x1 * x2,
                ],
                [
                    -C * omega - 2.0 * C * x1 * x2,
                    1.0 / R - C * (x1 * x1 + 3.0 * x2 * x2 - A2),
                ],
            ]
        )

    def f0(x) -> np.ndarray:
        return np.array(
            [-x[0] / (R * C) + x[2] / C, -x[1] / (R * C) + x[3] / C]
        )

    def v(x, z):
        return (
            np.array([x[0], x[1]]) / E
            + (L / E) * (beta_jac(x[0], x[1]) @ f0(x))
            - gamma * z
        )

    def alpha(xi):
        r2 = xi[0] * xi[0] + xi[1] * xi[1] - A2
        return np.array([-r2 * xi[0] + omega * xi[1], -omega * xi[0] - r2 * xi[1]])

    def pi_map(xi):
        b = beta(xi[0], xi[1])
        return np.array([xi[0], xi[1], b[0], b[1]])

    def pi_jac(xi):
        return np.vstack([np.eye(2), beta_jac(xi[0], xi[1])])

    def phi(x):
        return np.array([x[2], x[3]]) - beta(x[0], x[1])

    def phi_jac(x):
        Jb = beta_jac(x[0], x[1])
        return np.hstack([-Jb, np.eye(2)])

    def closed_form_c(xi):
        x = pi_map(xi)
        return np.array([x[0], x[1]]) / E + (L / E) * (beta_jac(x[0], x[1]) @ f0(x))

    z_rate = gamma * E / L
    bundle = IandIBundle(
        name="dcac",
        plant=ControlAffineSystem(n=4, m=2, f=f, g=lambda x: G),
        target=TargetDynamics(p=2, alpha=alpha, orbit_kind=UNIQUE_ATTRACTIVE_ORBIT),
        immersion=ImmersionMap(pi=pi_map, jacobian=pi_jac),
        manifold=ImplicitManifold(phi=phi, jacobian=phi_jac),
        controller=Controller(v=v),
        xi_sample_box=_box([[-1.25 * A, 1.25 * A]] * 2),
        x_sample_box=_box(
            [[-1.25 * A, 1.25 * A]] * 2 + [[-5.0 * A * C * omega, 5.0 * A * C * omega]] * 2
        ),
        closed_form_c=closed_form_c,
        z_dynamics=lambda x, z: -z_rate * z,
        xi_projection=(0, 1),
        section_index=0,
        info={"A": A, "omega": omega, "z_rate": z_rate, "u_limit": 1.0},
    )
    return bundle


_PRESET_FACTORIES: dict[str, Callable[[], IandIBundle]] = {}
_PRESET_PARAMS: dict[str, object] = {}


def _register(name: str, params, make) -> None:
    _PRESET_PARAMS[name] = params
    _PRESET_FACTORIES[name] = lambda: make(params)


_register("lti-identity", LtiParams(P=np.eye(2), R=np.eye(2)), make_lti)
_register(
    "iwp-default",
    IwpParams(m=1.962, b=10.0, k=-1.6, gamma1=2.0, gamma2=1.0),
    make_iwp,
)
_register(
    "cartpend-lin-default",
    CartPendLinearParams(a1=9.8, a2=1.0, k=-4.0, gamma1=2.0, gamma2=2.0),
    make_cartpend_linear,
)
_register(
    "cartpend-nl-default",
    CartPendNonlinearParams(a1=9.8, a2=1.0, a=2.0, a0=0.0, gamma1=1.0, gamma2=1.0),
    make_cartpend_nonlinear,
)
_register(
    "dcac-default",
    DcAcParams(R=10.0, C=1e-3, L=1e-3, E=24.0, A=12.0, omega=100.0 * math.pi, gamma=0.01),
    make_dcac,
)

PRESETS = tuple(sorted(_PRESET_FACTORIES))

_KIND_MAKERS = {
    "lti": (LtiParams, make_lti),
    "iwp": (IwpParams, make_iwp),
    "cartpend-linear": (CartPendLinearParams, make_cartpend_linear),
    "cartpend-nonlinear": (CartPendNonlinearParams, make_cartpend_nonlinear),
    "dcac": (DcAcParams, make_dcac),
}


def preset_params(name: str):
    """The parameter record behind a named preset."""
    try:
        return _PRESET_PARAMS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}") from None


def make_preset(name: str, **overrides) -> IandIBundle:
    """Build a preset bundle, optionally overriding parameter fields.

    Overriding a field re-runs the parameter record's validation, so an
    out-of-range value raises ParameterError before anything is simulated.
    """
    params = preset_params(name)
    if overrides:
        params = _apply_overrides(params, overrides)
    return _maker_for(params)(params)


def _maker_for(params) -> Callable:
    for cls, make in ((LtiParams, make_lti), (IwpParams, make_iwp),
                      (CartPendLinearParams, make_cartpend_linear),
                      (CartPendNonlinearParams, make_cartpend_nonlinear),
                      (DcAcParams, make_dcac)):
        if isinstance(params, cls):
            return make
    raise TypeError(f"no constructor for parameter record {type(params).__name__}")


def _apply_overrides(params, overrides: dict):
    import dataclasses

    unknown = set(overrides) - {f.name for f in dataclasses.fields(params)}
    if unknown:
        raise ParameterError(
            f"unknown parameter(s) {sorted(unknown)} for {type(params).__name__}"
        )
    return dataclasses.replace(params, **overrides)


def make_inline(kind: str, **kwargs) -> IandIBundle:
    """Build a bundle from an inline parameter block (CLI config path)."""
    try:
        cls, make = _KIND_MAKERS[kind]
    except KeyError:
        raise KeyError(
            f"unknown bundle kind {kind!r}; known: {', '.join(sorted(_KIND_MAKERS))}"
        ) from None
    return make(cls(**kwargs))
