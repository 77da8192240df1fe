"""Gaussian energies, frequency quotient, and flow-comparison monitors.

Everything here lives in the Gaussian-weighted inner product of a base
curve. The central objects:

  I      = integral of u^2 dmu          (energy of a graph field u)
  U      = 2 form(u, u) / I             (frequency: doubled Rayleigh quotient)
  Itilde = integral of phi^2 dmu        (squared shrinker deviation; equals
                                         -dF/dtau along any rescaled flow)
  D(tau) = sup-norm error budget of the moving base
  C(tau) = fitted pointwise linearization constant of the graph evolution

The monitor pairs two rescaled trajectories frame by frame, writes one record
per interior frame, and checks the inequalities that make the frequency
argument run: the logarithmic derivative of I stays within the C/D error
budget of U, U never exceeds the spectral bound, and log I admits a linear
lower support line (no super-exponential collapse).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import fourier, ioutil, spectral
from .curvegeo import (
    TWO_PI,
    DiscreteCurve,
    f_functional,
    gaussian_weights,
    geometry,
    shrinker_quantity,
)
from .errors import (
    EnergyUnderflow,
    ExactShrinker,
    FrameMissing,
    WindowTooShort,
)
from .gauge import GraphFunction, apply_L, normal_graph

__all__ = [
    "ENERGY_FLOOR",
    "ROUND_F_VALUE",
    "FrequencyTrace",
    "LojasiewiczFit",
    "energy_I",
    "dirichlet_energy",
    "frequency_U",
    "shrinker_energy",
    "dirichlet_einstein",
    "phi_c2_norm",
    "d_coefficient",
    "approach_series",
    "lojasiewicz_fit",
    "superexponential_flag",
    "monitor",
]

ENERGY_FLOOR = 1e-14
# Gaussian area of the round shrinking circle, the F level every convex
# rescaled flow converges to: sqrt(2 pi) e^(-1/2)
ROUND_F_VALUE = math.sqrt(2.0 * math.pi) * math.exp(-0.5)

TRACE_COLUMNS = ("tau", "I", "U", "Itilde", "F", "dFdtau", "phiL2", "D",
                 "fittedC", "dlogI", "Vmain", "Verr", "underflow")


def _field_values(base: DiscreteCurve, u) -> np.ndarray:
    if isinstance(u, GraphFunction):
        if u.base.m != base.m:
            raise ValueError("graph field lives on a different discretization")
        u = u.values
    u = np.asarray(u, dtype=float)
    if u.shape != (base.m,):
        raise ValueError("field shape %r does not match m = %d"
                         % (u.shape, base.m))
    return u


def energy_I(base: DiscreteCurve, u) -> float:
    """Gaussian energy of a field: quadrature of u^2 dmu."""
    vals = _field_values(base, u)
    return float(np.sum(gaussian_weights(base) * vals * vals))


def dirichlet_energy(base: DiscreteCurve, u, scheme: str = "spectral") -> float:
    """Gaussian Dirichlet energy: quadrature of |grad u|^2 dmu.

    Uses the same staggered half-grid stiffness as the assembled operator,
    so Rayleigh comparisons against the matrix spectrum are exact.
    """
    vals = _field_values(base, u)
    fields = geometry(base, scheme=scheme)
    rho = np.exp(-0.25 * np.sum(base.points ** 2, axis=1))
    if scheme == "spectral":
        c_half = fourier.staggered_interp(rho / fields.metric_speed)
        du_half = fourier.staggered_deriv(vals)
    else:
        c_half = fourier.fd4_staggered_interp(rho / fields.metric_speed)
        du_half = fourier.fd4_staggered_deriv(vals)
    return float((TWO_PI / base.m) * np.sum(c_half * du_half * du_half))


def frequency_U(base: DiscreteCurve, u, scheme: str = "spectral") -> float:
    """Doubled Rayleigh quotient of the drift operator at u.

    U = 2 (-dirichlet + potential) / I with the potential H^2 + 1/2; the
    doubling matches the convention in which a pure decaying mode of rate
    lam contributes dlogI/dtau = 2 lam = U.

    Raises
    ------
    EnergyUnderflow
        If I <= ENERGY_FLOOR, where the quotient is meaningless.
    """
    vals = _field_values(base, u)
    i_val = energy_I(base, vals)
    if i_val <= ENERGY_FLOOR:
        raise EnergyUnderflow("energy %.3g at or below floor %.1g"
                              % (i_val, ENERGY_FLOOR))
    h = geometry(base, scheme=scheme).curvature
    pot = float(np.sum(gaussian_weights(base) * (h * h + 0.5) * vals * vals))
    return 2.0 * (pot - dirichlet_energy(base, vals, scheme=scheme)) / i_val


def shrinker_energy(curve: DiscreteCurve) -> float:
    """Squared Gaussian norm of the shrinker deviation field.

    Carries the same (4 pi)^(-1/2) normalization as the Gaussian area
    functional, so that along any rescaled flow it equals minus the time
    derivative of that functional exactly. Vanishes on centered round
    shrinkers.
    """
    phi = shrinker_quantity(curve)
    raw = float(np.sum(gaussian_weights(curve) * phi * phi))
    return raw / math.sqrt(4.0 * math.pi)


dirichlet_einstein = shrinker_energy


def _arc_deriv12(curve: DiscreteCurve, vals: np.ndarray):
    g = geometry(curve).metric_speed
    d1 = fourier.deriv(vals) / g
    d2 = fourier.deriv(d1) / g
    return d1, d2


def phi_c2_norm(curve: DiscreteCurve) -> float:
    """Sup norm of the shrinker deviation and its first two arc derivatives."""
    phi = shrinker_quantity(curve)
    d1, d2 = _arc_deriv12(curve, phi)
    return float(np.abs(phi).max() + np.abs(d1).max() + np.abs(d2).max())


def _frame_index(traj, tau: float) -> int:
    times = np.asarray(traj.times, dtype=float)
    j = int(np.argmin(np.abs(times - tau)))
    if abs(times[j] - tau) > 1e-9 * (1.0 + abs(tau)):
        raise FrameMissing("no frame at tau = %.6g" % tau)
    return j


def _d_terms(curve: DiscreteCurve, dphi_dtau: np.ndarray) -> float:
    phi = shrinker_quantity(curve)
    h = geometry(curve).curvature
    _, phi_ss = _arc_deriv12(curve, phi)
    metric_term = np.abs(2.0 * phi * h).max()
    curv_term = np.abs(2.0 * h * phi_ss + 2.0 * phi * h ** 3).max()
    return float(metric_term + curv_term + np.abs(phi).max()
                 + np.abs(dphi_dtau).max())


def d_coefficient(traj, tau: float) -> float:
    """Sup-norm error budget of the base frame nearest tau.

    Collects the terms through which a non-shrinker base perturbs the linear
    evolution of a graph field: metric drift, curvature drift, the deviation
    itself, and its time derivative (central difference over the two
    neighboring frames).

    Raises
    ------
    FrameMissing
        If tau matches no frame or sits at the trajectory boundary.
    """
    j = _frame_index(traj, tau)
    if j == 0 or j == len(traj) - 1:
        raise FrameMissing("tau = %.6g has no two-sided neighbors" % tau)
    phi_prev = shrinker_quantity(traj.curves[j - 1])
    phi_next = shrinker_quantity(traj.curves[j + 1])
    span = traj.times[j + 1] - traj.times[j - 1]
    return _d_terms(traj.curves[j], (phi_next - phi_prev) / span)


def approach_series(traj) -> dict:
    """Per-frame convergence diagnostics of one rescaled trajectory.

    Returns arrays over the interior frames: the sup-norm error budget D,
    both deviation norms, and running integrals of D and of the C2 norm
    (trapezoid rule). The increments of the running integrals are the
    quantities whose summability certifies convergence to the round shrinker.
    """
    n = len(traj)
    if n < 3:
        raise WindowTooShort("need at least 3 frames, got %d" % n)
    taus = np.asarray(traj.times, dtype=float)[1:-1]
    d_vals = np.empty(n - 2)
    c2_vals = np.empty(n - 2)
    l2_vals = np.empty(n - 2)
    for k, j in enumerate(range(1, n - 1)):
        curve = traj.curves[j]
        phi_prev = shrinker_quantity(traj.curves[j - 1])
        phi_next = shrinker_quantity(traj.curves[j + 1])
        span = traj.times[j + 1] - traj.times[j - 1]
        d_vals[k] = _d_terms(curve, (phi_next - phi_prev) / span)
        c2_vals[k] = phi_c2_norm(curve)
        l2_vals[k] = math.sqrt(shrinker_energy(curve))
    int_d = _cumtrapz(taus, d_vals)
    int_c2 = _cumtrapz(taus, c2_vals)
    return {"tau": taus, "D": d_vals, "phiC2": c2_vals, "phiL2": l2_vals,
            "intD": int_d, "intC2": int_c2}


def _cumtrapz(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y)
    if len(y) > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out


@dataclass(frozen=True)
class LojasiewiczFit:
    """Power-law fit of the deviation norm against the energy gap.

    The exponent theta fits ||phi||_L2 ~ (F - F_limit)^(1 - theta); the
    bound constant is the smallest C making
    (F - F_limit)^(1 - theta) <= C ||phi||_L2 hold at every fitted frame.
    """

    theta: float
    tau0: float
    taus: np.ndarray
    gap: np.ndarray
    phi_l2: np.ndarray
    partial_sums: np.ndarray
    bound_constant: float


def lojasiewicz_fit(traj, f_limit: float = ROUND_F_VALUE) -> LojasiewiczFit:
    """Fit the energy-gap power law along a rescaled trajectory.

    Raises
    ------
    ExactShrinker
        If the trajectory never leaves the limit level set (gap and
        deviation both at rounding level) so no law is fittable.
    WindowTooShort
        If fewer than 20 frames have a usable positive gap.
    """
    n = len(traj)
    taus = np.asarray(traj.times, dtype=float)
    phi_l2 = np.empty(n)
    gap = np.empty(n)
    for j in range(n):
        phi_l2[j] = math.sqrt(shrinker_energy(traj.curves[j]))
        gap[j] = f_functional(traj.curves[j]) - f_limit
    usable = (gap > 1e-13) & (phi_l2 > 1e-13)
    if not usable.any():
        raise ExactShrinker("trajectory sits on the limit shrinker; "
                            "no gap to fit")
    if int(usable.sum()) < 20:
        raise WindowTooShort("only %d usable frames, need 20"
                             % int(usable.sum()))
    lg = np.log(gap[usable])
    lp = np.log(phi_l2[usable])
    design = np.column_stack([lg, np.ones(lg.size)])
    (slope, _), *_ = np.linalg.lstsq(design, lp, rcond=None)
    theta = 1.0 - float(slope)
    bound = float(np.exp(((1.0 - theta) * lg - lp).max()))
    return LojasiewiczFit(theta=theta,
                          tau0=float(taus[usable][0]),
                          taus=taus,
                          gap=gap,
                          phi_l2=phi_l2,
                          partial_sums=_cumtrapz(taus, phi_l2),
                          bound_constant=bound)


def superexponential_flag(taus: np.ndarray, log_i: np.ndarray):
    """Detect downward curvature in log I strong enough to beat every
    exponential over the window.

    Fits a quadratic in tau; flags when the quadratic coefficient is
    negative and bends the window by more than 4 (a factor e^4 beyond
    linear decay). Returns (flagged, quadratic_coefficient).
    """
    taus = np.asarray(taus, dtype=float)
    log_i = np.asarray(log_i, dtype=float)
    if taus.size < 5:
        return False, 0.0
    t = taus - taus.mean()
    design = np.column_stack([t * t, t, np.ones(t.size)])
    (a, _, _), *_ = np.linalg.lstsq(design, log_i, rcond=None)
    span = taus[-1] - taus[0]
    return bool(a < 0.0 and abs(a) * span * span > 4.0), float(a)


@dataclass
class FrequencyTrace:
    """Per-frame records of the two-flow frequency monitor.

    columns holds one array per CSV column (TRACE_COLUMNS order); underflow
    rows carry zeros in the quotient fields and are excluded from every fit.
    The check arrays and fitted scalars summarize the verified inequalities.
    """

    columns: dict
    lower_envelope: np.ndarray
    inequality_margin: np.ndarray
    rayleigh_ok: np.ndarray
    lambda_bound: float
    lambda_fit: float
    offset_fit: float
    u_inf: float
    theta_fit: float | None
    integral_d: float
    integral_c2: float
    flags: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.columns["tau"])

    def save_csv(self, path) -> None:
        rows = [",".join(TRACE_COLUMNS)]
        cols = [self.columns[name] for name in TRACE_COLUMNS]
        for j in range(len(self)):
            parts = []
            for name, col in zip(TRACE_COLUMNS, cols):
                if name == "underflow":
                    parts.append(str(int(col[j])))
                else:
                    parts.append(ioutil.format_float(float(col[j])))
            rows.append(",".join(parts))
        with open(path, "w") as fh:
            fh.write("\n".join(rows) + "\n")

    def summary_dict(self) -> dict:
        return {
            "lambdaFit": self.lambda_fit,
            "offsetFit": self.offset_fit,
            "Uinf": self.u_inf,
            "Lambda": self.lambda_bound,
            "thetaFit": self.theta_fit,
            "integralD": self.integral_d,
            "integralC2": self.integral_c2,
        }

    def save_summary(self, path) -> None:
        ioutil.dump_json(self.summary_dict(), path)


def _common_frames(base_traj, target_traj):
    ta = np.asarray(base_traj.times, dtype=float)
    tb = np.asarray(target_traj.times, dtype=float)
    pairs = []
    i = j = 0
    while i < ta.size and j < tb.size:
        if abs(ta[i] - tb[j]) <= 1e-9 * (1.0 + abs(ta[i])):
            pairs.append((ta[i], base_traj.curves[i], target_traj.curves[j]))
            i += 1
            j += 1
        elif ta[i] < tb[j]:
            i += 1
        else:
            j += 1
    return pairs


def monitor(base_traj, target_traj, *, lambda_bound: float | None = None,
            fit_fraction: float = 0.4,
            rayleigh_stride: int | None = None) -> FrequencyTrace:
    """Track one flow as a normal graph over another and verify the
    frequency inequalities frame by frame.

    Per interior common frame: the graph energy I, frequency U, deviation
    energies of the base, the error budget D, the fitted linearization
    constant C, and the decomposition of dU/dtau into its nonnegative
    main part and the remainder. Checks recorded in flags:

      * the logarithmic derivative of I matches U minus the measure
        correction within 3(C + D) + C * (dirichlet ratio);
      * U <= 2 Lambda + 1e-10 against the spectral bound;
      * no super-exponential collapse of I over the fit window.

    lambda_bound (the top eigenvalue along the base) is computed via a
    strided eigensolve when not supplied. Fits use the trailing
    fit_fraction of non-underflow rows.
    """
    if getattr(base_traj, "picture", "rmcf") != "rmcf" or \
            getattr(target_traj, "picture", "rmcf") != "rmcf":
        raise ValueError("monitor expects two rescaled trajectories")
    pairs = _common_frames(base_traj, target_traj)
    if len(pairs) < 5:
        raise FrameMissing("only %d common frames between the trajectories"
                           % len(pairs))
    k = len(pairs)

    taus = np.array([p[0] for p in pairs])
    u_fields, w_fields, lu_fields = [], [], []
    i_vals = np.empty(k)
    f_vals = np.empty(k)
    itilde = np.empty(k)
    phi_fields = []
    for j, (tau, bc, tc) in enumerate(pairs):
        u = normal_graph(bc, tc).values
        u_fields.append(u)
        w_fields.append(gaussian_weights(bc))
        lu_fields.append(apply_L(bc, u))
        i_vals[j] = float(np.sum(w_fields[j] * u * u))
        f_vals[j] = f_functional(bc)
        itilde[j] = shrinker_energy(bc)
        phi_fields.append(shrinker_quantity(bc))

    under = i_vals <= ENERGY_FLOOR
    u_quot = np.zeros(k)
    corr = np.zeros(k)
    dirat = np.zeros(k)
    for j, (tau, bc, tc) in enumerate(pairs):
        if under[j]:
            continue
        u = u_fields[j]
        u_quot[j] = frequency_U(bc, u)
        corr[j] = float(np.sum(w_fields[j] * phi_fields[j] ** 2 * u * u)) \
            / i_vals[j]
        dirat[j] = dirichlet_energy(bc, u) / i_vals[j]

    if lambda_bound is None:
        if rayleigh_stride is None:
            rayleigh_stride = max(1, k // 12)
        _, _, lambda_bound = spectral.rayleigh_bound(base_traj,
                                                     stride=rayleigh_stride)

    n_rows = k - 2
    cols = {name: np.zeros(n_rows) for name in TRACE_COLUMNS}
    margin = np.zeros(n_rows)
    ray_ok = np.ones(n_rows, dtype=bool)
    flags: list = []
    for r, j in enumerate(range(1, k - 1)):
        tau, bc, tc = pairs[j]
        span = taus[j + 1] - taus[j - 1]
        g = geometry(bc).metric_speed
        u = u_fields[j]
        du_dtau = (u_fields[j + 1] - u_fields[j - 1]) / span
        resid = du_dtau - lu_fields[j]
        u_arc = fourier.deriv(u) / g
        fitted_c = float((np.abs(resid) / (np.abs(u) + np.abs(u_arc)
                                           + 1e-14)).max())
        d_val = _d_terms(bc, (phi_fields[j + 1] - phi_fields[j - 1]) / span)
        row_under = bool(under[j - 1] or under[j] or under[j + 1])
        dlog_i = 0.0 if row_under else \
            (math.log(i_vals[j + 1]) - math.log(i_vals[j - 1])) / span
        v_main = 0.0
        v_err = 0.0
        if not row_under:
            v_main = 4.0 * float(np.sum(w_fields[j] * lu_fields[j] ** 2)) \
                / i_vals[j] - u_quot[j] ** 2
            v_err = (u_quot[j + 1] - u_quot[j - 1]) / span - v_main

        cols["tau"][r] = tau
        cols["I"][r] = i_vals[j]
        cols["U"][r] = u_quot[j]
        cols["Itilde"][r] = itilde[j]
        cols["F"][r] = f_vals[j]
        cols["dFdtau"][r] = (f_vals[j + 1] - f_vals[j - 1]) / span
        cols["phiL2"][r] = math.sqrt(itilde[j])
        cols["D"][r] = d_val
        cols["fittedC"][r] = fitted_c
        cols["dlogI"][r] = dlog_i
        cols["Vmain"][r] = v_main
        cols["Verr"][r] = v_err
        cols["underflow"][r] = float(row_under)

        if row_under:
            margin[r] = 0.0
            continue
        lhs = abs(dlog_i - (u_quot[j] - corr[j]))
        rhs = 3.0 * (fitted_c + d_val) + fitted_c * dirat[j]
        margin[r] = rhs - lhs
        if margin[r] < -1e-9:
            flags.append("frequency-inequality violated at tau = %.6g "
                         "(lhs %.3g > rhs %.3g)" % (tau, lhs, rhs))
        if u_quot[j] > 2.0 * lambda_bound + 1e-10:
            ray_ok[r] = False
            flags.append("rayleigh bound violated at tau = %.6g "
                         "(U = %.6g, Lambda = %.6g)"
                         % (tau, u_quot[j], lambda_bound))

    good = cols["underflow"] == 0.0
    lam_fit = offset_fit = 0.0
    u_inf = 0.0
    envelope = np.zeros(n_rows)
    if good.any():
        u_good = cols["U"][good]
        env = np.minimum.accumulate(u_good[::-1])[::-1]
        envelope[good] = env
        start = int(math.ceil((1.0 - fit_fraction) * int(good.sum())))
        start = min(start, int(good.sum()) - 2) if good.sum() > 2 else 0
        tw = cols["tau"][good][start:]
        lw = np.log(cols["I"][good][start:])
        if tw.size >= 2:
            design = np.column_stack([tw, np.ones(tw.size)])
            (slope, _), *_ = np.linalg.lstsq(design, lw, rcond=None)
            lam_fit = -float(slope)
            offset_fit = float((-lam_fit * tw - lw).max())
            u_inf = float(u_good[start:].min())
            collapsed, _ = superexponential_flag(tw, lw)
            if collapsed:
                flags.append("super-exponential collapse of I over the "
                             "fit window")

    integral_d = float(np.trapezoid(cols["D"], cols["tau"]))
    c2_vals = np.array([phi_c2_norm(pairs[j][1]) for j in range(1, k - 1)])
    integral_c2 = float(np.trapezoid(c2_vals, cols["tau"]))

    theta_fit: float | None = None
    try:
        theta_fit = lojasiewicz_fit(base_traj).theta
    except (ExactShrinker, WindowTooShort):
        theta_fit = None

    return FrequencyTrace(columns=cols,
                          lower_envelope=envelope,
                          inequality_margin=margin,
                          rayleigh_ok=ray_ok,
                          lambda_bound=float(lambda_bound),
                          lambda_fit=lam_fit,
                          offset_fit=offset_fit,
                          u_inf=u_inf,
                          theta_fit=theta_fit,
                          integral_d=integral_d,
                          integral_c2=integral_c2,
                          flags=flags)
