"""Evolution drivers: curve shortening flow and its rescaled form.

Two pictures of the same evolution. The unrescaled flow moves each point with
normal speed equal to the curvature and shrinks embedded curves to a round
point in finite time T with enclosed area A(t) = A(0) - 2*pi*t. The rescaled
flow zooms in on the singular spacetime point (x0, T): with
N(tau) = (M(t) - x0) / sqrt(T - t) and tau = -log(T - t) the normal speed
becomes the stationarity defect phi = H + <x, nu>/2, whose zero set is the
round profile of radius sqrt(2). Under the rescaled flow the enclosed area
satisfies dA/dtau = A - 2*pi exactly, which pins the one unstable dilation
direction: gauging the initial area to exactly 2*pi removes it analytically.

Time stepping is explicit Heun (two-stage Runge-Kutta) with the spectral
stability bound dt <= cfl * (2/pi^2) * h_min^2, h_min the smallest node
spacing. Frames are emitted at exact times: fixed tau multiples for the
rescaled flow, fixed area levels A(0) * exp(-j * dtau) for the unrescaled
flow (by the area law these are the same tau grid, without knowing T).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import fourier, ioutil
from .curvegeo import (
    TWO_PI,
    DiscreteCurve,
    geometry,
    resample,
    segment_lengths,
)
from .errors import (
    BlowupDetected,
    ConvexityLost,
    FrameMissing,
    InvalidCurve,
    NotShrinking,
    StepRejected,
    TimeOutOfRange,
)

#: Heun's method is stable on the negative real axis down to -2; the stiffest
#: mode of the arclength Laplacian on spacing h has eigenvalue -(pi/h)^2.
HEUN_STABILITY = 2.0 / math.pi**2

# Full-array guard cadence inside the run loops. A scalar NaN sentinel runs
# every step; divergence grows geometrically, so an 8-step window cannot
# carry a blowup past the next full check.
_GUARD_STRIDE = 8


@dataclass
class StepControl:
    """Knobs of the explicit stepping loop.

    cfl scales the stability-limited time step. Frames are revalidated and,
    when the node spacing ratio exceeds `resample_ratio`, redistributed by
    arclength. `stop_curvature` ends unrescaled runs before the singular
    time. `max_h` (if set) caps the largest node spacing by refining the
    sample count at frame times. `require_convex` aborts when the curvature
    changes sign.
    """

    cfl: float = 0.8
    scheme: str = "spectral"
    resample_ratio: float = 1.05
    stop_curvature: float = 50.0
    max_h: float | None = None
    require_convex: bool = False


def _velocity(pts: np.ndarray, rescaled: bool, scheme: str, coef=None):
    """Normal velocity field and the geometry it was computed from.

    Returns (velocity, d1, metric_speed, curvature). The velocity is H*nu for
    the unrescaled flow and phi*nu for the rescaled one, nu the inner normal.
    `coef` optionally carries a precomputed rfft of pts (spectral scheme).
    """
    if scheme == "spectral":
        d1, d2 = fourier.deriv12(pts, coef)
    else:
        d1 = fourier.deriv_any(pts, 1, scheme)
        d2 = fourier.deriv_any(pts, 2, scheme)
    gx = d1[:, 0]
    gy = d1[:, 1]
    g2 = gx * gx + gy * gy
    g = np.sqrt(g2)
    curv = (gx * d2[:, 1] - gy * d2[:, 0]) / (g2 * g)
    speed = curv
    if rescaled:
        # <x, nu> with nu = (-gy, gx)/g
        speed = curv + 0.5 * (pts[:, 1] * gx - pts[:, 0] * gy) / g
    vel = np.empty_like(pts)
    ratio = speed / g
    vel[:, 0] = -ratio * gy
    vel[:, 1] = ratio * gx
    return vel, d1, g, curv


def _velocity_only(pts: np.ndarray, rescaled: bool, scheme: str) -> np.ndarray:
    """Corrector-stage velocity: same field as :func:`_velocity`, no extras.

    Avoids the square root: H/g = cross/(g^2)^2 and <x, nu>/g = <x, n>/g^2.
    """
    if scheme == "spectral":
        d1, d2 = fourier.deriv12(pts)
    else:
        d1 = fourier.deriv_any(pts, 1, scheme)
        d2 = fourier.deriv_any(pts, 2, scheme)
    gx = d1[:, 0]
    gy = d1[:, 1]
    g2 = gx * gx + gy * gy
    ratio = (gx * d2[:, 1] - gy * d2[:, 0]) / (g2 * g2)
    if rescaled:
        ratio = ratio + 0.5 * (pts[:, 1] * gx - pts[:, 0] * gy) / g2
    vel = np.empty_like(pts)
    vel[:, 0] = -ratio * gy
    vel[:, 1] = ratio * gx
    return vel


def _heun(pts, dt, v1, rescaled, scheme, with_coef=False):
    mid = pts + dt * v1
    v2 = _velocity_only(mid, rescaled, scheme)
    # the filter clamps neutral near-Nyquist reparametrization jitter that
    # explicit stepping would otherwise let grow through aliasing
    np.add(v1, v2, out=v2)
    v2 *= 0.5 * dt
    np.add(pts, v2, out=v2)
    return fourier.smooth(v2, with_coef=with_coef)


def _area_of(pts, d1) -> float:
    w = TWO_PI / pts.shape[0]
    return 0.5 * w * (np.einsum("i,i->", pts[:, 0], d1[:, 1])
                      - np.einsum("i,i->", pts[:, 1], d1[:, 0]))


def _area_centroid(pts, d1):
    m = pts.shape[0]
    x = pts[:, 0]
    y = pts[:, 1]
    w = TWO_PI / m
    area = 0.5 * w * float(np.sum(x * d1[:, 1] - y * d1[:, 0]))
    cx = 0.5 * w * float(np.sum(x * x * d1[:, 1])) / area
    cy = -0.5 * w * float(np.sum(y * y * d1[:, 0])) / area
    return area, cx, cy


def _cheap_guards(pts, g, curv, control, time_label):
    if not np.all(np.isfinite(pts)):
        raise BlowupDetected("non-finite positions at %s" % time_label)
    if float(g.min()) < 1e-12:
        raise BlowupDetected("parametrization collapsed at %s" % time_label)
    if float(np.abs(curv).max()) > 1e6:
        raise BlowupDetected("curvature exceeded 1e6 at %s" % time_label)
    if control.require_convex and float(curv.min()) < 0.0:
        raise ConvexityLost("curvature changed sign at %s" % time_label)


def cfl_timestep(curve: DiscreteCurve, control: StepControl | None = None) -> float:
    """Largest stable explicit step for this curve under `control`."""
    control = control or StepControl()
    g = geometry(curve, control.scheme).metric_speed
    h_min = (TWO_PI / curve.m) * float(g.min())
    return control.cfl * HEUN_STABILITY * h_min * h_min


def _public_step(curve, dt, control, rescaled):
    if not isinstance(curve, DiscreteCurve):
        raise InvalidCurve("expected a DiscreteCurve")
    if dt < 0.0:
        raise StepRejected("negative time step %g" % dt)
    if dt == 0.0:
        return curve
    bound = cfl_timestep(curve, control)
    if dt > bound:
        raise StepRejected("step %g exceeds stability bound %g" % (dt, bound))
    v1, _, g, curv = _velocity(curve.points, rescaled, control.scheme)
    _cheap_guards(curve.points, g, curv, control, "input")
    new_pts = _heun(curve.points, dt, v1, rescaled, control.scheme)
    if not np.all(np.isfinite(new_pts)):
        raise BlowupDetected("step produced non-finite positions")
    stepped = DiscreteCurve(new_pts)
    out = resample(stepped)
    if control.require_convex and float(geometry(out, control.scheme).curvature.min()) < 0:
        raise ConvexityLost("curvature changed sign within the step")
    return out


def mcf_step(curve: DiscreteCurve, dt: float,
             control: StepControl | None = None) -> DiscreteCurve:
    """One validated, resampled step of the unrescaled flow.

    dt must respect `cfl_timestep`; dt = 0 returns the input unchanged.
    """
    return _public_step(curve, dt, control or StepControl(), rescaled=False)


def rmcf_step(curve: DiscreteCurve, dt: float,
              control: StepControl | None = None) -> DiscreteCurve:
    """One validated, resampled step of the rescaled flow."""
    return _public_step(curve, dt, control or StepControl(), rescaled=True)


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------

_SERIES_COLUMNS = ("time", "area", "cx", "cy", "max_curvature", "gauge_shift")


@dataclass
class FlowTrajectory:
    """Ordered frames of one flow, with per-frame scalar series.

    picture is "mcf" (unrescaled, times are t) or "rmcf" (rescaled, times are
    tau). The series maps column name -> per-frame array; columns are listed
    in _SERIES_COLUMNS.
    """

    picture: str
    m: int
    times: list = field(default_factory=list)
    curves: list = field(default_factory=list)
    singular_data: dict | None = None
    series: dict | None = None

    def __len__(self):
        return len(self.times)

    def frame(self, i):
        return self.times[i], self.curves[i]

    def save(self, outdir) -> list:
        """Write frames/, index.json and series.csv; returns written paths."""
        outdir = os.fspath(outdir)
        frame_dir = os.path.join(outdir, "frames")
        os.makedirs(frame_dir, exist_ok=True)
        written = []
        for i, curve in enumerate(self.curves):
            path = os.path.join(frame_dir, "frame_%05d.csv" % i)
            curve.to_csv(path)
            written.append(path)
        index = {
            "picture": self.picture,
            "times": [float(t) for t in self.times],
            "m": self.m,
            "singularData": self.singular_data,
        }
        index_path = os.path.join(outdir, "index.json")
        ioutil.dump_json(index, index_path)
        written.append(index_path)
        if self.series is not None:
            series_path = os.path.join(outdir, "series.csv")
            with open(series_path, "w") as fh:
                fh.write(",".join(_SERIES_COLUMNS) + "\n")
                cols = [self.series[c] for c in _SERIES_COLUMNS]
                for row in zip(*cols):
                    fh.write(",".join(ioutil.format_float(v) for v in row) + "\n")
            written.append(series_path)
        return written

    @classmethod
    def load(cls, outdir) -> "FlowTrajectory":
        import json

        outdir = os.fspath(outdir)
        index_path = os.path.join(outdir, "index.json")
        if not os.path.exists(index_path):
            raise FrameMissing("no index.json under %s" % outdir)
        with open(index_path) as fh:
            index = json.load(fh)
        traj = cls(picture=index["picture"], m=int(index["m"]),
                   singular_data=index.get("singularData"))
        for i, t in enumerate(index["times"]):
            path = os.path.join(outdir, "frames", "frame_%05d.csv" % i)
            if not os.path.exists(path):
                raise FrameMissing("missing frame file %s" % path)
            traj.times.append(float(t))
            traj.curves.append(DiscreteCurve.from_csv(path))
        series_path = os.path.join(outdir, "series.csv")
        if os.path.exists(series_path):
            data = np.genfromtxt(series_path, delimiter=",", names=True)
            data = np.atleast_1d(data)
            traj.series = {name: np.asarray(data[name], dtype=float)
                           for name in data.dtype.names}
        return traj


def _even_at_least(n: int, floor: int = 16) -> int:
    n = max(int(math.ceil(n)), floor)
    return n + (n % 2)


def _emit_frame(traj, t, pts, control, gauge):
    """Validate, optionally resample/gauge, record a frame; return working points."""
    curve = DiscreteCurve(pts)
    if curve.spacing_ratio() > control.resample_ratio:
        curve = resample(curve)
    if control.max_h is not None:
        lengths = segment_lengths(curve.points)
        if float(lengths.max()) > control.max_h:
            target = _even_at_least(curve.polyline_length() / control.max_h, curve.m)
            curve = resample(curve, target)
    gauge_shift = 0.0
    if gauge and gauge != "none":
        d1 = fourier.deriv(curve.points, 1)
        area, cx, cy = _area_centroid(curve.points, d1)
        scale = math.sqrt(TWO_PI / area)
        new_pts = scale * curve.points
        gauge_shift = abs(scale - 1.0)
        if gauge == "area-centroid":
            new_pts = new_pts - scale * np.array([cx, cy])
            gauge_shift += math.hypot(cx, cy)
        curve = DiscreteCurve(new_pts, validate=False)
    d1 = fourier.deriv(curve.points, 1)
    area, cx, cy = _area_centroid(curve.points, d1)
    max_curv = float(np.abs(geometry(curve, control.scheme).curvature).max())
    traj.times.append(float(t))
    traj.curves.append(curve)
    s = traj.series
    s["time"].append(float(t))
    s["area"].append(area)
    s["cx"].append(cx)
    s["cy"].append(cy)
    s["max_curvature"].append(max_curv)
    s["gauge_shift"].append(gauge_shift)
    return curve.points.copy(), area, max_curv


def _finalize_series(traj):
    traj.series = {k: np.asarray(v, dtype=float) for k, v in traj.series.items()}


def run_mcf(curve: DiscreteCurve, *, t_end: float | None = None,
            frame_dtau: float = 0.02,
            control: StepControl | None = None) -> FlowTrajectory:
    """Run the unrescaled flow, emitting frames at fixed area levels.

    Frame j sits at enclosed area A(0) * exp(-j * frame_dtau), so the frames
    are uniform in the rescaled time of the eventual singularity without
    knowing it. The run stops when max |H| reaches control.stop_curvature,
    or at t_end if given (with a final frame there).
    """
    control = control or StepControl()
    traj = FlowTrajectory(picture="mcf", m=curve.m)
    traj.series = {c: [] for c in _SERIES_COLUMNS}
    pts, area, max_curv = _emit_frame(traj, 0.0, curve.points, control, None)
    if max_curv >= control.stop_curvature:
        _finalize_series(traj)
        return traj
    level_ratio = math.exp(-frame_dtau)
    target = area * level_ratio
    t = 0.0
    coef = None
    since_guard = _GUARD_STRIDE  # full guards on the first step
    while True:
        v1, d1, g, curv = _velocity(pts, False, control.scheme, coef=coef)
        h_min = (TWO_PI / pts.shape[0]) * float(g.min())
        if math.isnan(h_min):
            raise BlowupDetected("non-finite geometry at t=%.6g" % t)
        since_guard += 1
        if since_guard >= _GUARD_STRIDE:
            _cheap_guards(pts, g, curv, control, "t=%.6g" % t)
            since_guard = 0
        area = _area_of(pts, d1)
        dt = control.cfl * HEUN_STABILITY * h_min * h_min
        # land exactly on the next area level: dA/dt = -2*pi along the flow
        landing = False
        dt_land = (area - target) / TWO_PI
        if dt_land <= dt:
            dt = max(dt_land, 0.0)
            landing = True
        at_end = False
        if t_end is not None and t_end - t <= dt:
            dt = t_end - t
            landing = False
            at_end = True
        if dt > 0.0:
            pts, coef = _heun(pts, dt, v1, False, control.scheme,
                              with_coef=True)
            t += dt
        if landing or at_end:
            pts, area, max_curv = _emit_frame(traj, t, pts, control, None)
            coef = None  # emit may have resampled
            if landing:
                target *= level_ratio
            if at_end or max_curv >= control.stop_curvature:
                break
    _finalize_series(traj)
    return traj


def run_rmcf(curve: DiscreteCurve, tau_end: float, *,
             frame_dtau: float = 0.02, gauge: str = "none",
             control: StepControl | None = None) -> FlowTrajectory:
    """Run the rescaled flow to tau_end, emitting frames at exact tau values.

    gauge:
      "none"          plain rescaled flow.
      "area"          rescale to enclosed area exactly 2*pi at every frame.
      "area-centroid" additionally recenter the region centroid at the origin.

    The gauge moves correspond to re-choosing the singular spacetime point of
    the underlying unrescaled flow, so gauged runs remain rescaled flows of
    the same evolution; they suppress the unstable dilation (e^tau) and
    translation (e^(tau/2)) drifts seeded by floating-point error.
    """
    if tau_end <= 0:
        raise TimeOutOfRange("tau_end must be positive")
    if gauge not in ("none", "area", "area-centroid"):
        raise ValueError("unknown gauge %r" % gauge)
    control = control or StepControl()
    traj = FlowTrajectory(picture="rmcf", m=curve.m)
    traj.series = {c: [] for c in _SERIES_COLUMNS}
    pts, _, _ = _emit_frame(traj, 0.0, curve.points, control, gauge)
    n_frames = int(math.floor(tau_end / frame_dtau + 1e-9))
    frame_times = [frame_dtau * j for j in range(1, n_frames + 1)]
    if not frame_times or frame_times[-1] < tau_end - 1e-12:
        frame_times.append(tau_end)
    tau = 0.0
    coef = None
    since_guard = _GUARD_STRIDE  # full guards on the first step
    for tau_next in frame_times:
        while tau < tau_next:
            v1, _, g, curv = _velocity(pts, True, control.scheme, coef=coef)
            h_min = (TWO_PI / pts.shape[0]) * float(g.min())
            if math.isnan(h_min):
                raise BlowupDetected("non-finite geometry at tau=%.6g" % tau)
            since_guard += 1
            if since_guard >= _GUARD_STRIDE:
                _cheap_guards(pts, g, curv, control, "tau=%.6g" % tau)
                since_guard = 0
            dt = control.cfl * HEUN_STABILITY * h_min * h_min
            remaining = tau_next - tau
            if dt >= remaining:
                pts, coef = _heun(pts, remaining, v1, True, control.scheme,
                                  with_coef=True)
                tau = tau_next
            else:
                pts, coef = _heun(pts, dt, v1, True, control.scheme,
                                  with_coef=True)
                tau += dt
        pts, _, _ = _emit_frame(traj, tau_next, pts, control, gauge)
        coef = None  # emit may have resampled or regauged
    _finalize_series(traj)
    return traj


# ---------------------------------------------------------------------------
# Singularity estimation and change of picture
# ---------------------------------------------------------------------------

@dataclass
class SingularityEstimate:
    """Fitted singular spacetime point of an unrescaled run."""

    time: float
    center: np.ndarray
    time_err: float
    center_err: float
    window: tuple

    def to_dict(self):
        return {
            "time": self.time,
            "center": [float(self.center[0]), float(self.center[1])],
            "timeErr": self.time_err,
            "centerErr": self.center_err,
        }


def estimate_singularity(traj: FlowTrajectory,
                         window_fraction: float = 0.25) -> SingularityEstimate:
    """Extrapolate the singular time and point from an unrescaled run.

    The singular time comes from the exact area law A(t) = 2*pi*(T - t):
    each late frame gives T_j = t_j + A_j/(2*pi), and their late-window mean
    is the estimate. The center comes from the region centroid, which
    approaches x0 linearly in T - t, via an affine fit extrapolated to t = T.
    """
    if traj.picture != "mcf":
        raise NotShrinking("singularity estimation needs an unrescaled trajectory")
    if traj.series is None or len(traj) < 8:
        raise NotShrinking("need at least 8 frames, got %d" % len(traj))
    t = traj.series["time"]
    area = traj.series["area"]
    if np.any(np.diff(area) >= 0.0):
        raise NotShrinking("enclosed area is not strictly decreasing")
    if area[-1] > 0.5 * area[0]:
        raise NotShrinking("flow did not get close enough to the singular time")
    n = len(t)
    k = max(5, int(round(window_fraction * n)))
    lo = n - k
    t_win = t[lo:]
    t_hats = t_win + area[lo:] / TWO_PI
    t_hat = float(np.mean(t_hats))
    time_err = float(np.ptp(t_hats)) / 2.0 + 1e-12
    if t_hat <= t[-1]:
        raise NotShrinking("extrapolated singular time does not exceed the run")
    # centroid -> x0 + b*(T - t): affine fit, evaluate at T - t = 0
    gap = t_hat - t_win
    design = np.column_stack([np.ones_like(gap), gap])
    cx = traj.series["cx"][lo:]
    cy = traj.series["cy"][lo:]
    coef, *_ = np.linalg.lstsq(design, np.column_stack([cx, cy]), rcond=None)
    center = coef[0]
    resid = design @ coef - np.column_stack([cx, cy])
    slope = np.hypot(coef[1, 0], coef[1, 1])
    center_err = float(np.abs(resid).max()) + slope * time_err + 1e-12
    return SingularityEstimate(time=t_hat, center=center.copy(),
                               time_err=time_err, center_err=center_err,
                               window=(lo, n))


def rescale_to_rmcf(traj: FlowTrajectory, time: float, center) -> FlowTrajectory:
    """Map an unrescaled trajectory into the rescaled picture about (center, time).

    N = (M - center) / sqrt(time - t), tau = -log(time - t). Raises
    TimeOutOfRange if any frame sits at or past the singular time. Frame
    validity is preserved by the similarity map, so curves are not re-checked.
    """
    if traj.picture != "mcf":
        raise ValueError("expected an unrescaled trajectory")
    center = np.asarray(center, dtype=float)
    out = FlowTrajectory(picture="rmcf", m=traj.m, singular_data=traj.singular_data)
    for t, curve in zip(traj.times, traj.curves):
        gap = time - t
        if gap <= 0.0:
            raise TimeOutOfRange("frame at t=%.6g is not before time=%.6g" % (t, time))
        scale = 1.0 / math.sqrt(gap)
        pts = (curve.points - center) * scale
        out.times.append(-math.log(gap))
        out.curves.append(DiscreteCurve(pts, validate=False))
    return out


def from_rmcf(traj: FlowTrajectory, time: float, center) -> FlowTrajectory:
    """Inverse of `rescale_to_rmcf`: back to the unrescaled picture."""
    if traj.picture != "rmcf":
        raise ValueError("expected a rescaled trajectory")
    center = np.asarray(center, dtype=float)
    out = FlowTrajectory(picture="mcf", m=traj.m, singular_data=traj.singular_data)
    for tau, curve in zip(traj.times, traj.curves):
        gap = math.exp(-tau)
        pts = center + curve.points * math.sqrt(gap)
        out.times.append(time - gap)
        out.curves.append(DiscreteCurve(pts, validate=False))
    return out
