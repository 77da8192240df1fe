"""Normal graphs over a base curve and the linearized drift operator.

A nearby curve is written as x + u(x) * nu(x) over a base curve (the graph
gauge). `normal_graph` extracts u by intersecting each base normal line with
the target and polishing on the target's trigonometric interpolant;
`reconstruct` goes the other way. `apply_L` is the linearization of the
rescaled flow at a stationary base:

    L u = u'' - <x, T>/2 * u' + (H^2 + 1/2) u      (' = arclength derivative)

computed in divergence form (1/(g rho)) d_theta((rho/g) d_theta u) + V u with
rho = exp(-|x|^2/4), which makes it exactly self-adjoint in the discrete
Gaussian inner product for arbitrary grid functions. On the round base of
radius sqrt(2) the eigenfunctions are Fourier modes with L cos(k theta) =
(1 - k^2/2) cos(k theta).

`residual` measures how well a sequence of graphs over a fixed base solves
du/dtau = L u, quantifying the quadratic error term of the linearization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fourier, ioutil
from .curvegeo import TWO_PI, DiscreteCurve, geometry
from .errors import NotAGraph

#: relative u-gap below which two normal-line hits count as the same point
_CLUSTER_TOL = 1e-8


@dataclass
class GraphFunction:
    """Scalar field u over the nodes of a base curve (normal-graph height)."""

    base: DiscreteCurve
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.base.m,):
            raise ValueError("values must have shape (%d,)" % self.base.m)
        self.values = vals

    def arc_derivatives(self):
        """(u, u', u'') with ' the arclength derivative along the base."""
        g = geometry(self.base).metric_speed
        du = fourier.deriv(self.values, 1) / g
        d2u = fourier.deriv(du, 1) / g
        return self.values, du, d2u

    def seminorms(self):
        """(sup|u|, sup|u'|, sup|u''|)."""
        u, du, d2u = self.arc_derivatives()
        return (float(np.abs(u).max()), float(np.abs(du).max()),
                float(np.abs(d2u).max()))


def reconstruct(base: DiscreteCurve, values) -> DiscreteCurve:
    """Curve traced by x + u * nu over the base (validated)."""
    values = np.asarray(values, dtype=float)
    normal = geometry(base).normal
    return DiscreteCurve(base.points + values[:, None] * normal)


def normal_graph(base: DiscreteCurve, target: DiscreteCurve,
                 reach: float | None = None) -> GraphFunction:
    """Write `target` as a normal graph over `base`.

    Each base normal line is intersected with the target polyline (exact
    segment test, all crossings found); the unique crossing with |u| below
    reach/2 seeds a 2x2 Newton iteration on the target's trigonometric
    interpolant. NotAGraph if a normal line finds no crossing or more than
    one within the window, or if the final height reaches reach/2.

    reach defaults to 1/max|H| of the target.
    """
    if reach is None:
        reach = 1.0 / float(np.abs(geometry(target).curvature).max())
    half = 0.5 * reach
    base_geom = geometry(base)
    x = base.points
    nu = base_geom.normal
    p = target.points
    d = np.roll(p, -1, axis=0) - p

    # all base-node x target-segment crossings: x_j + u nu_j = p_i + s d_i
    rx = p[None, :, 0] - x[:, None, 0]
    ry = p[None, :, 1] - x[:, None, 1]
    den = nu[:, None, 0] * d[None, :, 1] - nu[:, None, 1] * d[None, :, 0]
    ok = np.abs(den) > 1e-14
    safe_den = np.where(ok, den, 1.0)
    u_all = (rx * d[None, :, 1] - ry * d[None, :, 0]) / safe_den
    s_all = (rx * nu[:, None, 1] - ry * nu[:, None, 0]) / safe_den
    hit = ok & (s_all >= -1e-9) & (s_all <= 1.0 + 1e-9) & (np.abs(u_all) < half)

    m = base.m
    tol = _CLUSTER_TOL * (1.0 + reach)
    counts = hit.sum(axis=1)
    # group the crossings by normal, ordered by height within each group;
    # crossings at shared segment endpoints appear twice, so real
    # multiplicity shows as u-gaps far above rounding
    rows, cols = np.nonzero(hit)
    uvals = u_all[rows, cols]
    order = np.lexsort((uvals, rows))
    rows_s = rows[order]
    cols_s = cols[order]
    u_s = uvals[order]
    gap = (np.diff(u_s) > tol) & (rows_s[1:] == rows_s[:-1])
    no_hit = np.nonzero(counts == 0)[0]
    j_zero = int(no_hit[0]) if no_hit.size else m
    bad = rows_s[1:][gap]
    j_gap = int(bad.min()) if bad.size else m
    if min(j_zero, j_gap) < m:
        if j_zero < j_gap:
            raise NotAGraph("no target point within reach/2 along normal %d"
                            % j_zero)
        uj = np.sort(u_all[j_gap, np.nonzero(hit[j_gap])[0]])
        clusters = 1 + int(np.count_nonzero(np.diff(uj) > tol))
        raise NotAGraph("normal %d crosses the target %d times within "
                        "reach/2" % (j_gap, clusters))
    starts = np.searchsorted(rows_s, np.arange(m))
    u0 = u_s[starts]
    seg = cols_s[starts]
    frac = np.clip(s_all[rows_s[starts], seg], 0.0, 1.0)

    # Newton polish on the target interpolant: c(theta) - x - u nu = 0
    c_coef = fourier.coeffs(p)
    theta = (seg + frac) * (TWO_PI / target.m)
    u = u0.copy()
    for _ in range(4):
        c_val, c_der = fourier.trig_eval_pair(c_coef, target.m, theta)
        fx = c_val[:, 0] - x[:, 0] - u * nu[:, 0]
        fy = c_val[:, 1] - x[:, 1] - u * nu[:, 1]
        det = -(c_der[:, 0] * nu[:, 1] - c_der[:, 1] * nu[:, 0])
        dth = (fx * nu[:, 1] - fy * nu[:, 0]) / det
        theta += dth
        u += (c_der[:, 1] * fx - c_der[:, 0] * fy) / det
        if float(np.abs(dth).max()) < 1e-12:
            break
    c_val = fourier.trig_eval(c_coef, target.m, theta)
    err = np.hypot(c_val[:, 0] - x[:, 0] - u * nu[:, 0],
                   c_val[:, 1] - x[:, 1] - u * nu[:, 1])
    if float(err.max()) > 1e-9 * (1.0 + float(np.abs(u).max())):
        raise NotAGraph("graph iteration failed to converge onto the target")
    if float(np.abs(u).max()) >= half:
        raise NotAGraph("graph height %.3g reaches reach/2 = %.3g"
                        % (np.abs(u).max(), half))
    return GraphFunction(base=base, values=u)


def apply_L(base: DiscreteCurve, values) -> np.ndarray:
    """Drift-Laplacian linearization at `base` applied to a grid function.

    Divergence form (1/(g rho)) d_theta((rho/g) d_theta u) + (H^2 + 1/2) u,
    exactly self-adjoint under the Gaussian weights of the base.
    """
    values = np.asarray(values, dtype=float)
    geom = geometry(base)
    g = geom.metric_speed
    rho = np.exp(-0.25 * np.einsum("ij,ij->i", base.points, base.points))
    inner = (rho / g) * fourier.deriv(values, 1)
    div = fourier.deriv(inner, 1) / (g * rho)
    potential = geom.norm_sq_a + 0.5
    return div + potential * values


@dataclass
class ResidualReport:
    """How far three consecutive graphs are from solving du/dtau = L u.

    max_residual = sup |du/dtau - L u| at the middle frame; fitted_c is the
    smallest C with |residual| <= C (|u| + |u'|) pointwise; quad_ratio
    normalizes by the quadratic smallness scale ||u||_C2 (sup|u|+sup|u'|).
    """

    tau: float
    max_residual: float
    fitted_c: float
    norms_u: tuple
    quad_ratio: float
    residual: np.ndarray

    def to_dict(self):
        return {
            "tau": self.tau,
            "maxResidual": self.max_residual,
            "fittedC": self.fitted_c,
            "normsU": [self.norms_u[0], self.norms_u[1], self.norms_u[2]],
            "quadRatio": self.quad_ratio,
        }

    def save(self, path):
        ioutil.dump_json(self.to_dict(), path)


def residual(base: DiscreteCurve, u_prev, u_mid, u_next, dtau: float,
             tau: float = 0.0) -> ResidualReport:
    """Linearization residual at the middle of three equally spaced graphs.

    du/dtau is the centered difference across the outer graphs; the residual
    is du/dtau - L u_mid, evaluated nodewise over the fixed base.
    """
    vals = []
    for u in (u_prev, u_mid, u_next):
        vals.append(u.values if isinstance(u, GraphFunction) else
                    np.asarray(u, dtype=float))
    u_prev, u_mid, u_next = vals
    du_dt = (u_next - u_prev) / (2.0 * dtau)
    res = du_dt - apply_L(base, u_mid)
    graph = GraphFunction(base=base, values=u_mid)
    c0, c1, c2 = graph.seminorms()
    _, du, _ = graph.arc_derivatives()
    gauge_size = np.abs(u_mid) + np.abs(du)
    fitted_c = float((np.abs(res) / (gauge_size + 1e-14)).max())
    cum_c2 = c0 + c1 + c2
    quad_ratio = float(np.abs(res).max() / (cum_c2 * (c0 + c1) + 1e-300))
    return ResidualReport(
        tau=float(tau),
        max_residual=float(np.abs(res).max()),
        fitted_c=fitted_c,
        norms_u=(c0, c0 + c1, cum_c2),
        quad_ratio=quad_ratio,
        residual=res,
    )
