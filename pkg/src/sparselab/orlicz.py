"""Young functions, complementary functions, Luxemburg norms and Orlicz
maximal functions on the dyadic grid.

Supported families:

  power:r=R          phi(t) = t^R, R >= 1
  llog:eps=E         phi(t) = t (log_1 t)^E,            0 < E < 1
  llog2:alpha=A      phi(t) = t (log_2 t)^A,            1 < A < 2
  llog2log3:alpha=A  phi(t) = t log_2 t (log_3 t)^A,    1 < A < 2

plus a generic tabulated convex family. Here log_1 x = 1 + log_+ x and
log_k x = log_1 log_{k-1} x, so every iterated log is >= 1.

The complementary function psi(s) = sup_t {st - phi(t)} is computed by a
numerical Legendre transform. Arguments like 2^(2^k) overflow doubles past
k ~ 9, so the series constant is evaluated in log2 space throughout: cube
averages never meet those magnitudes, only the transform does.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import Cube, StepFunction

__all__ = [
    "PowerYoung",
    "LLogEpsYoung",
    "LLog2AlphaYoung",
    "LLog2Log3AlphaYoung",
    "TabulatedYoung",
    "ComplementaryTable",
    "CphiResult",
    "UnboundedComplementaryError",
    "CphiDivergenceError",
    "log_k",
    "parse_young",
    "complementary_value",
    "complementary_table",
    "inverse_complementary",
    "log2_inverse_complementary",
    "surrogate_l",
    "log2_surrogate_l",
    "verify_surrogate",
    "luxemburg_norm",
    "c_phi",
    "orlicz_maximal",
]

LN2 = math.log(2.0)

# Legendre transform grid (log-spaced) and refinement tolerance.
_LEGENDRE_T_LO = 1e-9
_LEGENDRE_T_HI = 1e12
_LEGENDRE_NODES = 2048
_LEGENDRE_RTOL = 1e-9

_CPHI_MAX_K = 64


class UnboundedComplementaryError(ValueError):
    """Raised when sup_t {st - phi(t)} does not stabilize (phi not superlinear)."""


class CphiDivergenceError(ValueError):
    """Raised when the series terms fail to decay by the truncation cap."""


def log_k(k: int, x) -> float | np.ndarray:
    """Iterated logarithm log_k(x); always >= 1 for x >= 0."""
    if k < 1:
        raise ValueError("k must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise ValueError("log_k requires x >= 0")
    out = 1.0 + np.log(np.maximum(x, 1.0))
    for _ in range(k - 1):
        out = 1.0 + np.log(out)  # previous iterate is >= 1 already
    if out.ndim == 0:
        return float(out)
    return out


def _check_nonnegative(t) -> np.ndarray:
    arr = np.asarray(t, dtype=np.float64)
    if np.any(arr < 0):
        raise ValueError("Young functions are defined for t >= 0 only")
    return arr


def _scalarize(arr, scalar: bool):
    return float(arr) if scalar else arr


@dataclass(frozen=True)
class PowerYoung:
    """phi(t) = t^r."""

    r: float

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("power exponent must be >= 1")

    @property
    def spec(self) -> str:
        return f"power:r={self.r:g}"

    @property
    def superlinear(self) -> bool:
        return self.r > 1

    def evaluate(self, t):
        arr = _check_nonnegative(t)
        return _scalarize(arr ** self.r, np.isscalar(t))


@dataclass(frozen=True)
class LLogEpsYoung:
    """phi(t) = t (log_1 t)^eps."""

    eps: float

    def __post_init__(self):
        if not (0 < self.eps < 1):
            raise ValueError("eps must lie in (0, 1)")

    @property
    def spec(self) -> str:
        return f"llog:eps={self.eps:g}"

    superlinear = True

    def evaluate(self, t):
        arr = _check_nonnegative(t)
        return _scalarize(arr * log_k(1, arr) ** self.eps, np.isscalar(t))

    def log_part(self, t):
        return log_k(1, _check_nonnegative(t)) ** self.eps

    def log_part_from_log2(self, u: float) -> float:
        # L(2^u) for u >= 0
        return (1.0 + u * LN2) ** self.eps


@dataclass(frozen=True)
class LLog2AlphaYoung:
    """phi(t) = t (log_2 t)^alpha."""

    alpha: float

    def __post_init__(self):
        if not (1 < self.alpha < 2):
            raise ValueError("alpha must lie in (1, 2)")

    @property
    def spec(self) -> str:
        return f"llog2:alpha={self.alpha:g}"

    superlinear = True

    def evaluate(self, t):
        arr = _check_nonnegative(t)
        return _scalarize(arr * log_k(2, arr) ** self.alpha, np.isscalar(t))

    def log_part(self, t):
        return log_k(2, _check_nonnegative(t)) ** self.alpha

    def log_part_from_log2(self, u: float) -> float:
        return (1.0 + math.log(1.0 + u * LN2)) ** self.alpha


@dataclass(frozen=True)
class LLog2Log3AlphaYoung:
    """phi(t) = t log_2 t (log_3 t)^alpha."""

    alpha: float

    def __post_init__(self):
        if not (1 < self.alpha < 2):
            raise ValueError("alpha must lie in (1, 2)")

    @property
    def spec(self) -> str:
        return f"llog2log3:alpha={self.alpha:g}"

    superlinear = True

    def evaluate(self, t):
        arr = _check_nonnegative(t)
        out = arr * log_k(2, arr) * log_k(3, arr) ** self.alpha
        return _scalarize(out, np.isscalar(t))

    def log_part(self, t):
        arr = _check_nonnegative(t)
        return log_k(2, arr) * log_k(3, arr) ** self.alpha

    def log_part_from_log2(self, u: float) -> float:
        g2 = 1.0 + math.log(1.0 + u * LN2)
        g3 = 1.0 + math.log(g2)
        return g2 * g3 ** self.alpha


@dataclass(frozen=True)
class TabulatedYoung:
    """Generic convex family given by node values; linear between nodes,
    linear continuation beyond the last node (hence not superlinear there).
    """

    nodes: tuple = ()
    values: tuple = ()
    phi_at_one: float = field(default=float("nan"))

    def __post_init__(self):
        t = np.asarray(self.nodes, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if t.size < 2 or t.size != v.size:
            raise ValueError("need matching node/value arrays of length >= 2")
        if t[0] != 0.0 or v[0] != 0.0:
            raise ValueError("tabulated Young function must start at phi(0)=0")
        if np.any(np.diff(t) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(np.diff(v) < 0):
            raise ValueError("tabulated phi must be nondecreasing")
        slopes = np.diff(v) / np.diff(t)
        if np.any(np.diff(slopes) < -1e-12 * np.maximum(slopes[1:], 1.0)):
            raise ValueError("tabulated phi must have nondecreasing slopes (convexity)")
        if math.isnan(self.phi_at_one):
            raise ValueError("a tabulated family must declare phi(1)")

    @property
    def spec(self) -> str:
        return f"tabulated:n={len(self.nodes)}"

    superlinear = False  # linear tail beyond the table

    def evaluate(self, t):
        arr = _check_nonnegative(t)
        x = np.asarray(self.nodes)
        y = np.asarray(self.values)
        out = np.interp(arr, x, y)
        slope = (y[-1] - y[-2]) / (x[-1] - x[-2])
        beyond = arr > x[-1]
        out = np.where(beyond, y[-1] + slope * (arr - x[-1]), out)
        return _scalarize(out, np.isscalar(t))


YoungFunction = (PowerYoung | LLogEpsYoung | LLog2AlphaYoung
                 | LLog2Log3AlphaYoung | TabulatedYoung)

_LOG_FAMILIES = (LLogEpsYoung, LLog2AlphaYoung, LLog2Log3AlphaYoung)


def parse_young(spec: str) -> YoungFunction:
    """Parse a family spec string like "power:r=2" or "llog:eps=0.5"."""
    name, _, rest = spec.partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            key, _, val = item.partition("=")
            if not val:
                # bare value shorthand, e.g. "power:2"
                key, val = {"power": "r", "llog": "eps",
                            "llog2": "alpha", "llog2log3": "alpha"}.get(name, "r"), key
            params[key.strip()] = float(val)
    try:
        if name == "power":
            return PowerYoung(params["r"])
        if name == "llog":
            return LLogEpsYoung(params["eps"])
        if name == "llog2":
            return LLog2AlphaYoung(params["alpha"])
        if name == "llog2log3":
            return LLog2Log3AlphaYoung(params["alpha"])
    except KeyError as exc:
        raise ValueError(f"missing parameter for family {name!r}: {exc}") from None
    raise ValueError(f"unknown Young family {name!r}")


def inverse_at_one(phi) -> float:
    """Solve phi(x) = 1; the named families all give exactly 1."""
    if isinstance(phi, _LOG_FAMILIES) or isinstance(phi, PowerYoung):
        return 1.0
    lo, hi = 1e-12, 1.0
    while phi.evaluate(hi) < 1.0:
        hi *= 2.0
        if hi > 1e300:
            raise ValueError("phi never reaches 1")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if phi.evaluate(mid) < 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * hi:
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Complementary function: numerical Legendre transform
# ---------------------------------------------------------------------------

def complementary_value(phi, s: float) -> float:
    """psi(s) = sup_{t>0} {s t - phi(t)} on a log grid with golden refinement.

    Raises UnboundedComplementaryError when the supremum keeps growing at the
    right end of the grid (phi with a linear tail, or power r=1 with s > 1).
    """
    if s < 0:
        raise ValueError("psi is defined for s >= 0")
    if s == 0.0:
        return 0.0
    ts = np.geomspace(_LEGENDRE_T_LO, _LEGENDRE_T_HI, _LEGENDRE_NODES)
    vals = s * ts - phi.evaluate(ts)
    i = int(np.argmax(vals))
    best_grid = float(vals[i])
    if best_grid <= 0.0 and s * ts[0] - phi.evaluate(float(ts[0])) <= 0.0:
        # supremum over t -> 0 is 0 when the integrand never goes positive
        if i >= _LEGENDRE_NODES - 1 and vals[-1] > vals[-2]:
            raise UnboundedComplementaryError(
                f"st - phi(t) still increasing at t = {ts[-1]:.3g} for s = {s:.3g}")
        return 0.0
    if i >= _LEGENDRE_NODES - 1:
        raise UnboundedComplementaryError(
            f"argmax at grid edge t = {ts[-1]:.3g} for s = {s:.3g}; phi not superlinear?")
    a = float(ts[i - 1]) if i > 0 else float(ts[0]) * 1e-2
    b = float(ts[i + 1])

    def g(t):
        return s * t - float(phi.evaluate(t))

    inv = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - inv * (b - a)
    d = a + inv * (b - a)
    fc, fd = g(c), g(d)
    for _ in range(200):
        if b - a <= _LEGENDRE_RTOL * max(abs(a), 1e-300):
            break
        if fc < fd:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = g(d)
        else:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = g(c)
    return max(best_grid, fc, fd, 0.0)


@dataclass(frozen=True)
class ComplementaryTable:
    """Tabulated complementary function psi on a log-spaced s grid.

    Piecewise-linear interpolation between nodes keeps convexity; beyond the
    last node the final slope is continued. psi(s) = 0 below the first
    positive node by convention (true for the named log families on s <= 1).
    """

    s_nodes: tuple
    psi_values: tuple

    def __post_init__(self):
        s = np.asarray(self.s_nodes)
        v = np.asarray(self.psi_values)
        if np.any(np.diff(v) < 0):
            raise ValueError("psi must be nondecreasing")
        pos = v > 0
        ratios = v[pos] / s[pos]
        if np.any(np.diff(ratios) < -1e-9 * ratios[1:]):
            raise ValueError("psi(s)/s must be nondecreasing (convexity proxy)")

    def evaluate(self, s):
        arr = _check_nonnegative(s)
        x = np.asarray(self.s_nodes)
        y = np.asarray(self.psi_values)
        out = np.interp(arr, x, y)
        slope = (y[-1] - y[-2]) / (x[-1] - x[-2])
        out = np.where(arr > x[-1], y[-1] + slope * (arr - x[-1]), out)
        return _scalarize(out, np.isscalar(s))


def complementary_table(phi, s_lo: float = 1e-6, s_hi: float = 1e6,
                        n: int = 512) -> ComplementaryTable:
    """Eagerly tabulate psi over a log-spaced s grid via the Legendre transform.

    For log families psi explodes past L(t_hi); the table truncates at the
    last grid-computable node (callers stay within that range).
    """
    ss_grid = np.geomspace(s_lo, s_hi, n)
    ss = [0.0]
    psis = [0.0]
    for s in ss_grid:
        try:
            psis.append(complementary_value(phi, float(s)))
        except UnboundedComplementaryError:
            break
        ss.append(float(s))
    if len(ss) < 32:
        raise UnboundedComplementaryError(
            f"complementary table for {phi.spec} collapsed to {len(ss)} nodes")
    return ComplementaryTable(tuple(ss), tuple(psis))


def inverse_complementary(phi, y: float) -> float:
    """psi^{-1}(y) by monotone bisection on complementary_value.

    During bracketing, an unbounded signal from the transform grid counts as
    "psi too large"; if the converged point cannot reproduce y on the grid the
    target is genuinely out of the grid's reach and the error propagates
    (log2_inverse_complementary covers those magnitudes).
    """
    if y <= 0:
        raise ValueError("psi^{-1} requires y > 0")

    def psi_or_inf(s: float) -> float:
        try:
            return complementary_value(phi, s)
        except UnboundedComplementaryError:
            return math.inf

    lo, hi = 1e-12, 1.0
    while psi_or_inf(hi) < y:
        hi *= 2.0
        if hi > 1e200:
            raise UnboundedComplementaryError("psi^{-1} bracket escaped to infinity")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if psi_or_inf(mid) < y:
            lo = mid
        else:
            hi = mid
        if hi - lo <= _LEGENDRE_RTOL * hi:
            break
    result = 0.5 * (lo + hi)
    check = psi_or_inf(result)
    if not (abs(check - y) <= 1e-3 * y):
        raise UnboundedComplementaryError(
            f"psi^{{-1}}({y:.3g}) needs t beyond the transform grid "
            f"(converged to s = {result:.6g} with psi = {check:.3g})")
    return result


# --- log2-space evaluation, used for arguments like 2^(2^k) ----------------

def _log2_one_minus_pow2(x: float) -> float:
    """log2(1 - 2^x) for x < 0, stable near 0."""
    v = -math.expm1(x * LN2)
    if v <= 0.0:
        return -math.inf
    return math.log(v) / LN2


def _maximize_edge(g, umax: float) -> float:
    """Max of g over [0, umax] when the argmax may hug the right edge.

    Scans a geometric grid of distances from umax, then golden-refines the
    bracketing interval.
    """
    points = [0.0]
    d = umax
    while d > umax * 1e-18 + 1e-300:
        u = umax - d
        if u > 0.0:
            points.append(u)
        nd = 0.5 * d
        if nd == d:
            break
        d = nd
    us = sorted(set(points))
    vals = [g(u) for u in us]
    i = max(range(len(us)), key=lambda j: vals[j])
    a = us[max(i - 1, 0)]
    b = us[min(i + 1, len(us) - 1)]
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - inv * (b - a)
    d2 = a + inv * (b - a)
    fc, fd = g(c), g(d2)
    for _ in range(200):
        if b - a <= 1e-14 * max(1.0, abs(b)):
            break
        if fc < fd:
            a, c, fc = c, d2, fd
            d2 = a + inv * (b - a)
            fd = g(d2)
        else:
            b, d2, fd = d2, c, fc
            c = b - inv * (b - a)
            fc = g(c)
    return max(vals[i], fc, fd)


def _log2_psi_power(r: float, log2_s: float) -> float:
    # psi(s) = sup_t (s t - t^r); with u = log2 t the objective is
    # u + log2_s + log2(1 - 2^{u(r-1) - log2_s}) on u < umax = log2_s/(r-1).
    # In the edge distance delta = umax - u the argmax sits at
    # log2(r)/(r-1) <= 1/ln2, so a fixed window suffices for every r and s.
    if r <= 1:
        return -math.inf if log2_s <= 0 else math.inf
    umax = log2_s / (r - 1.0)

    def g_delta(delta):
        return (umax - delta) + log2_s + _log2_one_minus_pow2(-(r - 1.0) * delta)

    deltas = np.geomspace(1e-12, 8.0, 120)
    vals = [g_delta(float(d)) for d in deltas]
    i = max(range(len(deltas)), key=lambda j: vals[j])
    a = float(deltas[max(i - 1, 0)])
    b = float(deltas[min(i + 1, len(deltas) - 1)])
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - inv * (b - a)
    d = a + inv * (b - a)
    fc, fd = g_delta(c), g_delta(d)
    for _ in range(120):
        if b - a <= 1e-15 * b:
            break
        if fc < fd:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = g_delta(d)
        else:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = g_delta(c)
    return max(vals[i], fc, fd)


def _log2_psi_logfamily(phi, s: float) -> float:
    # phi(t) = t L(t): psi(s) = sup_u 2^u (s - L(2^u)); work with log2 of it.
    if s <= 1.0:
        return -math.inf
    lo, hi = 0.0, 1.0
    while phi.log_part_from_log2(hi) < s:
        hi *= 2.0
        if hi > 1e300:
            return math.inf
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if phi.log_part_from_log2(mid) < s:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(hi, 1.0):
            break
    umax = lo

    def g(u):
        diff = s - phi.log_part_from_log2(u)
        if diff <= 0.0:
            return -math.inf
        return u + math.log2(diff)

    return _maximize_edge(g, umax)


def log2_inverse_complementary(phi, log2_y: float) -> float:
    """log2 of psi^{-1}(2^log2_y), entirely in log2 space.

    This is the numerical Legendre route that stays finite for arguments like
    2^(2^k) with k up to 64.
    """
    if isinstance(phi, PowerYoung):
        if phi.r <= 1.0:
            raise UnboundedComplementaryError("power r=1 has no finite complementary")
        lo, hi = -8.0, 8.0
        while _log2_psi_power(phi.r, hi) < log2_y:
            hi *= 2.0
        while _log2_psi_power(phi.r, lo) >= log2_y:
            lo *= 2.0
        for _ in range(300):
            mid = 0.5 * (lo + hi)
            if _log2_psi_power(phi.r, mid) < log2_y:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-13 * max(abs(hi), 1.0):
                break
        return 0.5 * (lo + hi)
    if isinstance(phi, _LOG_FAMILIES):
        lo, hi = 1.0, 2.0
        while _log2_psi_logfamily(phi, hi) < log2_y:
            hi *= 2.0
        for _ in range(300):
            mid = 0.5 * (lo + hi)
            if _log2_psi_logfamily(phi, mid) < log2_y:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-13 * hi:
                break
        return math.log2(0.5 * (lo + hi))
    raise UnboundedComplementaryError(
        f"log2-space inversion unsupported for {phi.spec}")


# ---------------------------------------------------------------------------
# Surrogate logarithmic part
# ---------------------------------------------------------------------------

def surrogate_l(phi, t):
    """The logarithmic part L with phi(t) = t L(t), for the three log families."""
    if not isinstance(phi, _LOG_FAMILIES):
        raise ValueError(f"no logarithmic surrogate for family {phi.spec}")
    out = phi.log_part(t)
    return _scalarize(np.asarray(out), np.isscalar(t))


def log2_surrogate_l(phi, log2_t: float) -> float:
    """log2 of L(2^log2_t) for log2_t >= 0, without forming 2^log2_t."""
    if not isinstance(phi, _LOG_FAMILIES):
        raise ValueError(f"no logarithmic surrogate for family {phi.spec}")
    return math.log2(phi.log_part_from_log2(log2_t))


def verify_surrogate(phi, t_max: float, n_t: int = 96, n_s: int = 512) -> float:
    """max over t <= t_max of sup_{0<s<t} s (L(t) - L(s)) / t.

    A bounded value certifies psi(L(t)) <= C t for the surrogate swap; the
    observed max is returned for recording.
    """
    if not isinstance(phi, _LOG_FAMILIES):
        raise ValueError(f"no logarithmic surrogate for family {phi.spec}")
    worst = 0.0
    for t in np.geomspace(1.0, t_max, n_t):
        lt = float(phi.log_part(float(t)))
        ss = t * np.exp(np.linspace(math.log(1e-16), 0.0, n_s))
        inner = ss * (lt - phi.log_part(ss))
        worst = max(worst, float(inner.max()) / t)
    return worst


# ---------------------------------------------------------------------------
# Luxemburg norm and Orlicz maximal function
# ---------------------------------------------------------------------------

def _luxemburg_rows(rows: np.ndarray, phi, rtol: float = 1e-10) -> np.ndarray:
    """Vectorized Luxemburg norms of the rows of a 2-D array.

    Bisection on lambda for each row, using the Jensen bracket
    [mean / phi^{-1}(1), max / phi^{-1}(1)].
    """
    inv1 = inverse_at_one(phi)
    means = rows.mean(axis=1)
    maxes = rows.max(axis=1)
    live = maxes > 0
    out = np.zeros(rows.shape[0])
    if not live.any():
        return out
    sub = rows[live]
    lo = (means[live] / inv1) * (1.0 - 1e-12)
    hi = (maxes[live] / inv1) * (1.0 + 1e-12)
    # safety expansion in case phi(1) != 1 bracket assumptions are off
    for _ in range(200):
        mask = phi.evaluate(sub / hi[:, None]).mean(axis=1) > 1.0
        if not mask.any():
            break
        hi[mask] *= 2.0
    n_iter = int(math.ceil(math.log2(float(np.max(hi / np.maximum(lo, 1e-300))) / rtol))) + 2
    n_iter = min(max(n_iter, 40), 220)
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        g = phi.evaluate(sub / mid[:, None]).mean(axis=1)
        too_small = g > 1.0
        lo = np.where(too_small, mid, lo)
        hi = np.where(too_small, hi, mid)
    out[live] = 0.5 * (lo + hi)
    return out


def luxemburg_norm(f: StepFunction, q: Cube, phi, rtol: float = 1e-10) -> float:
    """||f||_{phi(L),Q} = inf { lam > 0 : <phi(f/lam)>_Q <= 1 }."""
    a, b = f.grid.cell_span(q)
    row = f.values[a:b][None, :]
    return float(_luxemburg_rows(row, phi, rtol)[0])


def orlicz_maximal(w: StepFunction, phi) -> StepFunction:
    """M_{phi(L)} w (x) = sup over dyadic Q containing x of ||w||_{phi(L),Q}.

    Luxemburg norms are computed level by level (vectorized bisection), then
    the ancestor max is propagated top-down exactly as for dyadic_maximal.
    """
    depth = w.depth
    best = None
    for level in range(depth + 1):
        rows = w.values.reshape(1 << level, 1 << (depth - level))
        norms = _luxemburg_rows(rows, phi)
        if best is None:
            best = norms
        else:
            best = np.maximum(np.repeat(best, 2), norms)
    return StepFunction(w.grid, best)


# ---------------------------------------------------------------------------
# The series constant c_phi
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CphiResult:
    """Value of sum_k 1 / psi^{-1}(2^(2^k)) with truncation diagnostics."""

    family: str
    value: float
    terms: int
    truncation_k: int
    surrogate: bool
    tail_bound: float

    def to_dict(self) -> dict:
        return {"family": self.family, "value": self.value, "terms": self.terms,
                "truncation_k": self.truncation_k, "surrogate": self.surrogate,
                "tail_bound": self.tail_bound}


def c_phi(phi, use_surrogate: bool = False, rtol: float = 1e-9) -> CphiResult:
    """Partial sums of 1/psi^{-1}(2^(2^k)) until the term drops below
    rtol times the running sum, capped at k = 64.

    With use_surrogate=True (log families only) psi^{-1} is replaced by the
    logarithmic part L, exactly as the surrogate bound licenses.
    """
    if use_surrogate and not isinstance(phi, _LOG_FAMILIES):
        raise ValueError(f"surrogate c_phi undefined for family {phi.spec}")

    def log2_denominator(k: int) -> float:
        if use_surrogate:
            return log2_surrogate_l(phi, 2.0 ** k)
        if isinstance(phi, TabulatedYoung):
            # linear tail: stay in double range, the unbounded signal will fire
            return math.log2(inverse_complementary(phi, 2.0 ** (2.0 ** k)))
        return log2_inverse_complementary(phi, 2.0 ** k)

    if isinstance(phi, PowerYoung) and phi.r <= 1.0:
        raise CphiDivergenceError("power r=1: psi^{-1} is identically 1")

    total = 0.0
    first_term = None
    term = 0.0
    k = 0
    for k in range(1, _CPHI_MAX_K + 1):
        try:
            term = 2.0 ** (-log2_denominator(k))
        except (UnboundedComplementaryError, OverflowError) as exc:
            raise CphiDivergenceError(
                f"psi^{{-1}} unavailable at k = {k} for {phi.spec}: {exc}") from exc
        total += term
        if first_term is None:
            first_term = term
        if total > 0 and term < rtol * total:
            break
    truncated_at = k
    if truncated_at == _CPHI_MAX_K and term >= 0.9 * first_term:
        raise CphiDivergenceError(
            f"series terms failed to decay by k = {_CPHI_MAX_K} for {phi.spec}")
    # next omitted term as a tail size estimate
    tail = 2.0 ** (-log2_denominator(truncated_at + 1)) if truncated_at < _CPHI_MAX_K else term
    return CphiResult(family=phi.spec, value=total, terms=truncated_at,
                      truncation_k=truncated_at, surrogate=use_surrogate,
                      tail_bound=tail)
