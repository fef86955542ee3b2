"""Numerical principal-value quadrature of the frequency integrals.

This is the third evaluation path.  It consumes the same pole/piece algebra
as the residue engine (:mod:`resvdw.poles`) but computes every integral
numerically:

* the finite segment [-L, L] with vectorized adaptive Gauss-Kronrod (15/31)
  panels;
* each pole p gets a window |k - Re p| < delta where r_p / (k - p) is
  subtracted, so the panels only see a smooth remainder.  Real poles get a
  symmetric excision of half-width epsilon and contribute nothing from the
  subtracted part (principal value); displaced poles add the analytic
  window integral r_p [log(a + delta - p) - log(a - delta - p)];
* the oscillatory tails beyond L are rotated by 90 degrees onto vertical rays
  in the half plane where e^{ikf} decays, or alternatively damped with a
  Gaussian window and Richardson-extrapolated in the window width.

Coupled 1/(k' - k) terms are reduced by partial fractions in k':

    1 / [prod_j (k' - q_j) (k' - k)]
        = sum_j 1 / [(k' - q_j) prod_{l!=j} (q_j - q_l) (q_j - k)]
          + 1 / [prod_j (k - q_j) (k' - k)],

so the inner integral becomes constants N_j = PV int h(k')/(k' - q_j) dk'
and the moving-pole transform PV int h(k')/(k' - k) dk', which for
h = k'^b e^{ik'f} equals e^{ikf} sum_m C(b, m) k^{b-m} M_m(f) with
M_m = PV int u^{m-1} e^{iuf} du.  All of N_j and M_m are numerical
integrals; the outer k-integral of the resulting pieces is one more call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Literal, Sequence

import numpy as np

from .atoms import C_LIGHT, PairSystem
from .closed_form import EnergyResult, make_result
from .errors import CausalityError, ConfigError, NonConvergence
from .poles import (
    Piece,
    Pole,
    PoleSpec,
    Term2D,
    channel_weights,
    kernel_pieces,
    pole_specs,
    reduced,
    swap,
)

class Rule:
    """Gauss-Kronrod pair on [-1, 1] built from the nonnegative half of each table.

    ``xgk``/``wgk`` list the Kronrod abscissae and weights in descending order
    ending at 0; ``wg`` holds the Gauss weights of the even-indexed abscissae,
    also descending.
    """

    def __init__(self, xgk: Sequence[float], wgk: Sequence[float], wg: Sequence[float]):
        xgk, wgk, wg = (np.asarray(v, dtype=float) for v in (xgk, wgk, wg))
        self.nodes = np.concatenate([-xgk[:-1], xgk[::-1]])  # ascending
        self.w_kronrod = np.concatenate([wgk[:-1], wgk[::-1]])
        half = np.zeros(xgk.size)
        half[1::2] = wg
        self.w_gauss = np.concatenate([half[:-1], half[::-1]])
        self.size = self.nodes.size


# Gauss-Kronrod 7/15 (nonnegative half).
GK15 = Rule(
    [0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
     0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
     0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
     0.207784955007898467600689403773245, 0.0],
    [0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
     0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
     0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
     0.204432940075298892414161999234649, 0.209482141084727828012999174891714],
    [0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
     0.381830050505118944950369775488975, 0.417959183673469387755102040816327],
)

# Gauss-Kronrod 15/31 (nonnegative half); used on the long oscillatory segment.
GK31 = Rule(
    [0.9980022986933970602851728, 0.9879925180204854284895657, 0.9677390756791391342573480,
     0.9372733924007059043077589, 0.8972645323440819008825097, 0.8482065834104272162006483,
     0.7904185014424659329676493, 0.7244177313601700474161861, 0.6509967412974169705337359,
     0.5709721726085388475372267, 0.4850818636402396806936557, 0.3941513470775633698972074,
     0.2991800071531688121667800, 0.2011940939974345223006283, 0.1011420669187174990270742, 0.0],
    [0.005377479872923348987792051, 0.01500794732931612253837476, 0.02546084732671532018687400,
     0.03534636079137584622203795, 0.04458975132476487660822730, 0.05348152469092808726534315,
     0.06200956780067064028513923, 0.06985412131872825870952008, 0.07684968075772037889443278,
     0.08308050282313302103828925, 0.08856444305621177064727544, 0.09312659817082532122548687,
     0.09664272698362367850517991, 0.09917359872179195933239317, 0.1007698455238755950449467,
     0.1013300070147915490173748],
    [0.03075324199611726835462839, 0.07036604748810812470926742, 0.1071592204671719350118695,
     0.1395706779261543144478048, 0.1662692058169939335532009, 0.1861610000155622110268006,
     0.1984314853271115764561183, 0.2025782419255612728806202],
)

MAX_NODES = 40_000_000
#: L = CUTOFF_FACTOR * max|pole|, a little above the required 50.
CUTOFF_FACTOR = 52.0
PANEL_PERIODS = 4.0  # initial GK31 panel width in oscillation periods of the fastest piece


def adaptive_gk(func: Callable[[np.ndarray], np.ndarray], edges: Sequence[float], rel_tol: float,
                abs_tol: float = 0.0, max_nodes: int = MAX_NODES, rule: Rule = GK15) -> tuple[complex, float]:
    """Integrate ``func`` over consecutive panels, bisecting until converged.

    ``func`` maps an array of abscissae to complex values.  Returns the
    integral and the summed error estimate |K15 - G7|.
    """
    edges = np.asarray(edges, dtype=float)
    return adaptive_gk_panels(func, edges[:-1], edges[1:], rel_tol, abs_tol, max_nodes, rule)


def adaptive_gk_panels(func, a: np.ndarray, b: np.ndarray, rel_tol: float, abs_tol: float = 0.0,
                       max_nodes: int = MAX_NODES, rule: Rule = GK15) -> tuple[complex, float]:
    """As :func:`adaptive_gk` for arbitrary (possibly non-adjacent) panels [a_i, b_i]."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    width = float(np.sum(b - a))
    parent = np.full(a.shape, np.inf)
    stall = np.zeros(a.shape, dtype=int)
    done_val, done_err, done_abs = 0j, 0.0, 0.0
    used = 0
    scalar = None
    while a.size:
        used += rule.size * a.size
        if used > max_nodes:
            raise NonConvergence(f"quadrature exceeded {max_nodes} function evaluations")
        half, mid = 0.5 * (b - a), 0.5 * (b + a)
        x = mid[:, None] + half[:, None] * rule.nodes[None, :]
        fx = np.asarray(func(x.ravel()))
        if scalar is None:
            scalar = fx.ndim == 1
        fx = fx.reshape((-1,) + x.shape)  # (rows, panels, nodes)
        K = half * (fx @ rule.w_kronrod)
        G = half * (fx @ rule.w_gauss)
        err = np.abs(K - G)
        scale = half * (np.abs(fx) @ rule.w_kronrod)
        total = done_val + K.sum(axis=-1)
        floor = 1e-14 * (scale.sum(axis=-1) + done_abs)
        tol = np.maximum(np.maximum(abs_tol, rel_tol * np.abs(total)), np.maximum(floor, 1e-300))[:, None]
        # an error estimate that stops shrinking under bisection is rounding noise
        worst = np.max(err / tol, axis=0)
        stall = np.where(np.all(err > 0.25 * parent, axis=0), stall + 1, 0)
        noisy = (stall >= 2) & np.all(err <= 1e-9 * scale, axis=0)
        ok = (worst <= (b - a) / width) | (b - a < 1e-13 * width) | noisy
        if np.all(err.sum(axis=-1) + done_err <= tol[:, 0]):
            ok[:] = True
        done_val = done_val + K[:, ok].sum(axis=-1)
        done_err = done_err + err[:, ok].sum(axis=-1)
        done_abs = done_abs + scale[:, ok].sum(axis=-1)
        a, b, m = a[~ok], b[~ok], mid[~ok]
        e, st = err[:, ~ok], stall[~ok]
        a, b = np.concatenate([a, m]), np.concatenate([m, b])
        parent, stall = np.concatenate([e, e], axis=-1), np.concatenate([st, st])
    done_val = np.broadcast_to(np.asarray(done_val, dtype=complex), (1,) if scalar else np.shape(done_val))
    done_err = np.broadcast_to(np.asarray(done_err, dtype=float), done_val.shape)
    if scalar:
        return complex(done_val[0]), float(done_err[0])
    return np.array(done_val), np.array(done_err)


def _subdivide(breaks: Sequence[float], h: float) -> np.ndarray:
    out = [breaks[0]]
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        n = max(1, int(math.ceil((hi - lo) / h)))
        out.extend(np.linspace(lo, hi, n + 1)[1:])
    return np.asarray(out)


@dataclass(frozen=True)
class QuadratureConfig:
    """Numerical settings; wavenumbers in 1/m (``None`` picks a default).

    epsilon: half-width of the symmetric excision around real poles.
    cutoff: L, where the finite segment [-L, L] ends and the tail method takes over.
    """

    epsilon: float | None = None
    cutoff: float | None = None
    rel_tol: float = 1e-8
    subtraction: bool = True
    tail_method: TailMethod = "contour-rotation"

    def __post_init__(self):
        if not (0 < self.rel_tol < 1):
            raise ConfigError(f"rel_tol must lie in (0, 1), got {self.rel_tol!r}", "rel_tol")
        if self.tail_method not in ("contour-rotation", "window-extrapolation"):
            raise ConfigError(f"unknown tail method {self.tail_method!r}", "tail_method")
        for name in ("epsilon", "cutoff"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v > 0):
                raise ConfigError(f"must be positive, got {v!r}", name)

    def resolve(self, R: float, poles: Iterable[complex]) -> "_Reduced":
        """Settings in reduced units (k R) for a given pole set; checks invariants."""
        locs = sorted({float(np.real(p)) for p in poles})
        x_max = max([abs(x) for x in locs] + [0.1])
        gaps = np.diff(locs)
        spacing = float(gaps.min()) if gaps.size else 1.0
        delta = min(1.0, 0.45 * spacing)
        eps = 1e-9 * delta if self.epsilon is None else self.epsilon * R
        lam = CUTOFF_FACTOR * x_max if self.cutoff is None else self.cutoff * R
        if eps >= spacing / 10 or eps >= delta:
            raise ConfigError(f"epsilon must be below a tenth of the pole spacing ({spacing / 10 / R:.4g} 1/m)",
                              "epsilon")
        if lam <= 50 * x_max:
            raise ConfigError(f"cutoff must exceed 50 max(k) = {50 * x_max / R:.4g} 1/m", "cutoff")
        return _Reduced(eps, lam, delta, self.rel_tol, self.subtraction, self.tail_method)


@dataclass(frozen=True)
class _Reduced:
    eps: float
    lam: float
    delta: float
    rel_tol: float
    subtraction: bool
    tail_method: str


# ------------------------------------------------------------ 1-D engine

class _Integrand:
    """Sum of pieces grouped by (freq, poles) into polynomial numerators."""

    def __init__(self, pieces: Iterable[Piece]):
        groups: dict[tuple, np.ndarray] = {}
        for p in pieces:
            key = (float(p.freq), tuple(p.poles))
            poly = groups.get(key, np.zeros(0, dtype=complex))
            if poly.size <= p.power:
                poly = np.concatenate([poly, np.zeros(p.power + 1 - poly.size, dtype=complex)])
            poly[p.power] += p.coef
            groups[key] = poly
        self.groups = {k: v for k, v in groups.items() if np.any(v)}
        self.poles = sorted({q for _, ps in self.groups for q in ps}, key=lambda q: (q.loc.real, q.loc.imag))
        self.freqs = sorted({f for f, _ in self.groups})

    def __call__(self, k: np.ndarray, freqs: Sequence[float] | None = None, cache: dict | None = None) -> np.ndarray:
        """Evaluate at k; ``cache`` shares exponentials, powers and pole factors between integrands."""
        k = np.asarray(k)
        cache = {} if cache is None else cache
        out = np.zeros(k.shape, dtype=complex)
        for (f, ps), poly in self.groups.items():
            if freqs is not None and f not in freqs:
                continue
            if f not in cache:
                cache[f] = np.exp(1j * f * k)
            if ps not in cache:
                d = np.ones(k.shape, dtype=complex)
                for q in ps:
                    d = d * (k - q.loc)
                cache[ps] = 1.0 / d
            nz = np.flatnonzero(poly)
            if nz.size == 1:
                val = poly[nz[0]] * _power(k, int(nz[0]), cache)
            else:
                val = sum(poly[n] * _power(k, int(n), cache) for n in nz)
            out += val * cache[f] * cache[ps]
        return out

    def residue(self, pole: Pole, weight: Callable[[complex], complex] = lambda z: 1.0) -> complex:
        r = 0j
        for (f, ps), poly in self.groups.items():
            if pole not in ps:
                continue
            p = pole.loc
            den = np.prod([p - q.loc for q in ps if q != pole]) if len(ps) > 1 else 1.0
            r += np.polyval(poly[::-1], p) * np.exp(1j * f * p) / den
        return complex(r * weight(pole.loc))


def _power(k: np.ndarray, n: int, cache: dict) -> np.ndarray:
    if n == 0:
        return 1.0
    key = ("pow", n)
    if key not in cache:
        cache[key] = k if n == 1 else _power(k, n - 1, cache) * k
    return cache[key]


def _segment_integrals(hs: Sequence[_Integrand], rc: _Reduced, lo: float, hi: float,
                       window: Callable[[np.ndarray], np.ndarray] | None = None) -> np.ndarray:
    """Integrals over [lo, hi] of each h (times window), sharing one panel set."""
    wfun = window or (lambda z: 1.0)
    fmax = max([abs(f) for h in hs for f in h.freqs] + [1e-300])
    h0 = min(PANEL_PERIODS * 2.0 * math.pi / fmax, (hi - lo) / 8.0)
    breaks = {lo, hi}
    gaps = set()
    subs = []
    extra = np.zeros(len(hs), dtype=complex)
    for i, h in enumerate(hs):
        sub = []
        for q in h.poles:
            a = q.loc.real
            r = h.residue(q, wfun)
            real = q.loc.imag == 0
            if real:
                # infinitesimal shift: 1/(k - a -+ i0) = PV +- i pi delta(k - a)
                extra[i] += q.side * 1j * math.pi * r
                breaks |= {a - rc.delta, a - rc.eps, a + rc.eps, a + rc.delta}
                gaps.add((a - rc.eps, a + rc.eps))
            else:
                breaks |= {a - rc.delta, a, a + rc.delta}
            if rc.subtraction:
                sub.append((q, r))
                if not real:
                    extra[i] += r * (np.log(a + rc.delta - q.loc) - np.log(a - rc.delta - q.loc))
        subs.append(sub)
    breaks = sorted(breaks)
    pa, pb = [], []
    for l, u in zip(breaks[:-1], breaks[1:]):
        if (l, u) in gaps:
            continue
        e = _subdivide([l, u], h0)
        pa.append(e[:-1])
        pb.append(e[1:])

    def f(x):
        cache = {}
        w = None if window is None else window(x)
        out = np.empty((len(hs), x.size), dtype=complex)
        for i, h in enumerate(hs):
            v = h(x, cache=cache)
            if w is not None:
                v = v * w
            for q, r in subs[i]:
                key = ("window", q)
                if key not in cache:
                    m = np.flatnonzero(np.abs(x - q.loc.real) < rc.delta)
                    cache[key] = (m, 1.0 / (x[m] - q.loc))
                m, inv = cache[key]
                if m.size:
                    v[m] -= r * inv
            out[i] = v
        return out

    val, _ = adaptive_gk_panels(f, np.concatenate(pa), np.concatenate(pb), rc.rel_tol, rule=GK31)
    # excised gaps: trapezoid on the smooth remainder, O(eps^3); the odd
    # r/(k - a) part cancels between the two sample points
    for l, u in sorted(gaps):
        extra += 0.5 * (u - l) * f(np.array([l, u])).sum(axis=1)
    return extra + val


def _rays(hs: Sequence[_Integrand], f: float, start: float, rc: _Reduced) -> np.ndarray:
    """int_start^{+-inf} of each freq-f group, along the rotated vertical ray."""
    sg = 1.0 if f > 0 else -1.0
    direction = 1.0 if start > 0 else -1.0

    def g(t):
        s = t / (1.0 - t) / abs(f)
        jac = 1.0 / (1.0 - t) ** 2 / abs(f)
        k = start + 1j * sg * s
        cache = {}
        return np.stack([h(k, freqs=(f,), cache=cache) * jac for h in hs])

    val, err = adaptive_gk(g, np.linspace(0.0, 1.0, 17), rc.rel_tol)
    return direction * 1j * sg * val


def _algebraic_tails(hs: Sequence[_Integrand], start: float, rc: _Reduced) -> np.ndarray:
    """Tails of non-oscillating groups; they must decay faster than 1/k."""
    for h in hs:
        for (f, ps), poly in h.groups.items():
            if f == 0 and len(poly) - 1 > len(ps) - 2:
                raise NonConvergence("non-oscillating piece does not decay fast enough")

    def g(t):
        cache = {}
        return np.stack([h(start / t, freqs=(0.0,), cache=cache) * abs(start) / t**2 for h in hs])

    val, _ = adaptive_gk(g, np.linspace(0.0, 1.0, 9), rc.rel_tol)
    return val


def pv_integrate_many(piece_lists: Sequence[Iterable[Piece]], rc: _Reduced) -> np.ndarray:
    """PV integrals over the real line of several piece sums (reduced units)."""
    hs = [_Integrand(p) for p in piece_lists]
    out = np.zeros(len(hs), dtype=complex)
    live = [i for i, h in enumerate(hs) if h.groups]
    if not live:
        return out
    hs = [hs[i] for i in live]
    lam = rc.lam
    if rc.tail_method == "contour-rotation":
        total = _segment_integrals(hs, rc, -lam, lam)
        for f in sorted({f for h in hs for f in h.freqs}):
            if f == 0:
                total += _algebraic_tails(hs, lam, rc) + _algebraic_tails(hs, -lam, rc)
            else:
                total += _rays(hs, f, lam, rc) + _rays(hs, f, -lam, rc)
    else:
        # Gaussian window of width L; the windowed value is analytic in 1/L^2
        Ls = np.array([1.0, math.sqrt(2.0), 2.0]) * lam
        vals = [_segment_integrals(hs, rc, -8.0 * L, 8.0 * L, window=lambda z, L=L: np.exp(-(z / L) ** 2))
                for L in Ls]
        total = np.array([_poly_extrapolate(1.0 / Ls**2, np.array([v[i] for v in vals]))
                          for i in range(len(hs))])
    out[live] = total
    return out


def pv_integrate(pieces: Iterable[Piece], rc: _Reduced) -> complex:
    """PV integral over the whole real line of a sum of pieces (reduced units)."""
    return complex(pv_integrate_many([list(pieces)], rc)[0])


def _poly_extrapolate(u: np.ndarray, v: np.ndarray) -> complex:
    """Value at u = 0 of the interpolating polynomial (Neville)."""
    p = list(v.astype(complex))
    n = len(u)
    for m in range(1, n):
        for i in range(n - m):
            p[i] = (u[i + m] * p[i] - u[i] * p[i + 1]) / (u[i + m] - u[i])
    return p[0]


# ------------------------------------------------------------ kernel catalogue

def catalogue_pieces(kernel: str) -> tuple[list[Piece], int]:
    """Pieces of a catalogued kernel in reduced units, and the power of 1/R it carries.

    "exp+", "exp-": e^{+-ikR};  "sin", "cos": sin(kR), cos(kR);
    "alpha", "beta": k^3 times the alpha / beta part of F(kR).
    """
    if kernel == "exp+":
        return [Piece(1.0, 0, 1.0)], 0
    if kernel == "exp-":
        return [Piece(1.0, 0, -1.0)], 0
    if kernel == "sin":
        return [Piece(-0.5j, 0, 1.0), Piece(0.5j, 0, -1.0)], 0
    if kernel == "cos":
        return [Piece(0.5, 0, 1.0), Piece(0.5, 0, -1.0)], 0
    if kernel in ("alpha", "beta"):
        return kernel_pieces(kernel[0]), 3
    raise ValueError(f"kernel {kernel!r} is not in the catalogue")


KERNELS = ("exp+", "exp-", "sin", "cos", "alpha", "beta")


def pv_integral_1d(kernel: str, k0: float, R: float = 1.0, cfg: QuadratureConfig | None = None,
                   side: int = 0, eta: float = 0.0) -> complex:
    """PV int F(k) / (k - k0) dk over the real line for a catalogued F.

    ``k0`` and ``eta`` in 1/m, R in m; ``side`` shifts the pole off the axis
    infinitesimally (+1 up, -1 down) when ``eta`` is 0.
    """
    cfg = cfg or QuadratureConfig()
    pieces, rpow = catalogue_pieces(kernel)
    pole = Pole(complex(k0 * R, side * eta * R), side)
    rc = cfg.resolve(R, [pole.loc])
    val = pv_integrate([p._replace(poles=(pole,)) for p in pieces], rc)
    return val / R**rpow


# ------------------------------------------------------------ 2-D terms

class _TermIntegrator:
    """Numerical evaluation of Term2D sums with cached 1-D integrals."""

    def __init__(self, rc: _Reduced):
        self.rc = rc
        self.cache: dict = {}

    def prefetch(self, keys: Iterable[tuple]) -> None:
        """Compute 1-D integrals k^power e^{ik freq} / prod(k - p) in batches.

        Integrands sharing a frequency scale share one panel set, so slow
        pieces do not pay for the resolution that fast ones need.
        """
        todo = sorted({self._base(k)[0] for k in keys if k not in self.cache} - set(self.cache),
                      key=lambda k: (abs(k[1]), repr(k)))
        batches: dict[bool, list] = {}
        for k in todo:
            batches.setdefault(abs(k[1]) > 2.0, []).append(k)
        for batch in batches.values():
            vals = pv_integrate_many([[Piece(1.0, p, f, ps)] for p, f, ps in batch], self.rc)
            self.cache.update(zip(batch, vals))

    @staticmethod
    def _base(key: tuple) -> tuple[tuple, complex]:
        """k^p / (k - q) = q^p / (k - q) + polynomial, and a polynomial times
        e^{ikf} integrates to zero for f != 0; so one pole needs only p = 0."""
        power, freq, poles = key
        if power and freq != 0 and len(poles) == 1:
            return (0, freq, poles), poles[0].loc ** power
        return key, 1.0

    def single(self, power: int, freq: float, poles: tuple) -> complex:
        key = (power, freq, poles)
        if key not in self.cache:
            base, factor = self._base(key)
            if base not in self.cache:
                self.prefetch([base])
            self.cache[key] = factor * self.cache[base]
        return self.cache[key]

    def moment(self, m: int, f: float, upto: int = 0) -> complex:
        """PV int u^{m-1} e^{iuf} du (m = 0 is PV int e^{iuf}/u du).

        The only pole sits at u = 0, so a real segment of a few periods
        before the rotated rays suffices; orders up to ``upto`` are batched.
        """
        key = ("moment", m, f)
        if key not in self.cache:
            lam = max(2.0, 8.0 * math.pi / abs(f))
            rc = replace(self.rc, lam=lam, delta=min(1.0, self.rc.delta), eps=min(self.rc.eps, 1e-9))
            orders = range(max(m, upto) + 1)
            lists = [[Piece(1.0, max(j - 1, 0), f, (Pole(0.0, 0),) if j == 0 else ())] for j in orders]
            vals = pv_integrate_many(lists, rc)
            self.cache.update({("moment", j, f): v for j, v in zip(orders, vals)})
        return self.cache[key]

    def outer_pieces(self, t: Term2D) -> list[Piece]:
        """k-integrand left after integrating a coupled term over k'."""
        out = []
        qs, b, f = t.poles_kp, t.power_kp, t.freq_kp
        for j, q in enumerate(qs):
            den = 1.0
            for l, r in enumerate(qs):
                if l != j:
                    den *= q.loc - r.loc
            n_j = self.single(b, f, (q,))
            out.append(Piece(-t.coef * n_j / den, t.power_k, t.freq_k, t.poles_k + (q,)))
        for m in range(b + 1):
            c = t.coef * math.comb(b, m) * self.moment(m, f, upto=2)
            out.append(Piece(c, t.power_k + b - m, t.freq_k + f, t.poles_k + qs))
        return out

    def integrate(self, terms: Iterable[Term2D]) -> complex:
        terms = list(terms)
        keys = []
        for t in terms:
            if t.coupled:
                keys += [(t.power_kp, t.freq_kp, (q,)) for q in t.poles_kp]
            else:
                keys += [(t.power_k, t.freq_k, t.poles_k), (t.power_kp, t.freq_kp, t.poles_kp)]
        self.prefetch(keys)
        total = 0j
        outer = []
        for t in terms:
            if t.coupled:
                outer.extend(self.outer_pieces(t))
            else:
                total += t.coef * self.single(t.power_k, t.freq_k, t.poles_k) * self.single(
                    t.power_kp, t.freq_kp, t.poles_kp)
        if outer:
            total += pv_integrate(outer, self.rc)
        return total


def _spec_poles(specs: Iterable[PoleSpec]) -> list[complex]:
    return [q.loc for s in specs for q in s.poles_k + s.poles_k1]


def _terms(specs: Iterable[PoleSpec], weights: dict, scale: float, order: str):
    for spec in specs:
        for (X, Y), s in weights.items():
            if s == 0:
                continue
            for t in spec.terms(X, Y, scale * s):
                yield swap(t) if order == "k-first" else t


def pv_integral_2d_coupled(spec: PoleSpec, cfg: QuadratureConfig | None = None, X: str = "a", Y: str = "a",
                           order: str = "kprime-first", R: float = 1.0) -> complex:
    """Iterated PV double integral of one coupled term for tensor channels X (k) and Y (k').

    Reduced units when R = 1; the value is the plain double integral of
    k^3 F_X(k) k'^3 F_Y(k') times the PoleSpec pole and time factors.
    """
    if spec.coupling != "coupled":
        raise ValueError("pv_integral_2d_coupled needs a coupled term")
    if order not in ("kprime-first", "k-first"):
        raise ValueError(f"unknown order {order!r}")
    rc = (cfg or QuadratureConfig()).resolve(R, _spec_poles([spec]))
    return _TermIntegrator(rc).integrate(_terms([spec], {(X, Y): 1.0}, 1.0, order))


def quadrature_bracket(specs: Sequence[PoleSpec], weights: dict, xA: float, xB: float,
                       cfg: QuadratureConfig | None = None, order: str = "kprime-first", R: float = 1.0) -> complex:
    """W R^6 / U for a list of specs, all integrals numerical."""
    rc = (cfg or QuadratureConfig()).resolve(R, _spec_poles(specs) + [xA, xB])
    return _TermIntegrator(rc).integrate(_terms(specs, weights, (xA - xB) / math.pi**2, order))


def energy_quadrature(system: PairSystem, T: float | None, prescription: str = "causal",
                      cfg: QuadratureConfig | None = None, order: str = "kprime-first",
                      eta: float = 0.0) -> EnergyResult:
    """Energy from fully numerical integration (J); real part, as in the residue path.

    ``eta`` (rad/s) shifts poles off the axis for the adiabatic and pt1995
    prescriptions; 0 means the infinitesimal shift.
    """
    R = system.R
    if prescription == "causal":
        if T is None:
            raise CausalityError("the causal prescription needs an observation time")
        if T <= 2.0 * R / C_LIGHT:
            return make_result(system, 0.0, "quadrature", T, prescription=prescription)
    per_line, imag = [], 0.0
    for i in range(len(system.lines_B)):
        xA, xB, tau = reduced(system, T, i)
        specs = pole_specs(prescription, xA, xB, tau, eta * R / C_LIGHT)
        c = system.contractions(i)
        w = channel_weights(c.unit_bb, c.unit_ab, c.unit_aa)
        v = system.prefactor(i) / R**6 * quadrature_bracket(specs, w, xA, xB, cfg, order, R)
        per_line.append(v.real)
        imag += v.imag
    return make_result(system, sum(per_line), "quadrature", T, prescription=prescription,
                       per_line=per_line, imag=imag)


@dataclass(frozen=True)
class EtaExtrapolation:
    etas: np.ndarray  # rad/s
    values: np.ndarray  # J, quadrature at each eta
    extrapolated: float
    reference: float  # residue engine, eta -> 0
    ratios: np.ndarray  # successive difference ratios (about 2 for linear convergence)

    @property
    def rel_error(self) -> float:
        return abs(self.extrapolated - self.reference) / abs(self.reference)


def adiabatic_eta_extrapolation(system: PairSystem, eta0: float | None = None, n: int = 7,
                                cfg: QuadratureConfig | None = None) -> EtaExtrapolation:
    """Adiabatic quadrature at eta0 / 2^j (j < n), extrapolated to eta = 0."""
    from .contour import evaluate_prescription

    if eta0 is None:
        eta0 = 1e-3 * abs(system.mean_detuning)
    cfg = cfg or QuadratureConfig(rel_tol=1e-12)
    etas = eta0 / 2.0 ** np.arange(n)
    vals = np.array([energy_quadrature(system, None, "adiabatic", cfg, eta=e).value for e in etas])
    ext = float(np.real(_poly_extrapolate(etas, vals)))
    d = np.diff(vals)
    ratios = d[:-1] / d[1:]
    ref = evaluate_prescription(system, "adiabatic").value
    return EtaExtrapolation(etas, vals, ext, ref, ratios)
