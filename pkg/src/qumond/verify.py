"""The verification suite: property checks with pinned tolerances.

Each check produces one or more :class:`CheckResult` rows; ``run_suite``
collects them and ``write_report`` emits
``check_id,lemma,observed,bound,pass`` CSV preceded by a ``# seed=`` line.
The ``lemma`` column carries a short descriptive tag for the property
being checked.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from . import counterexamples as cx
from . import helmholtz as hz
from . import mond
from . import newtonian as nw
from . import oracles
from . import singular as sg
from . import spherical as sp
from .densities import parse_density
from .grid import RadialProfile, cell_centres, l2_norm

__all__ = ["CheckResult", "VerifyContext", "CHECKS", "run_suite", "write_report", "regularity_envelope", "blowup_bound"]


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    lemma: str
    observed: float
    bound: float
    upper: bool = True  # pass iff observed <= bound; else observed >= bound

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.observed):
            return False
        return self.observed <= self.bound if self.upper else self.observed >= self.bound


@dataclass
class VerifyContext:
    n: int = 64
    L: float = 2.0
    seed: int = 0
    lam: mond.InterpolationFunction = field(default_factory=mond.lambda_deep_mond)
    schedule: str | None = None  # text form, parsed against the grid spacing
    tol: dict = field(default_factory=dict)
    q: float | None = None

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    def sched(self) -> sg.EpsilonSchedule:
        if self.schedule is None:
            return sg.default_schedule(self.h)
        return sg.EpsilonSchedule.parse(self.schedule, self.h)

    def rng(self, salt: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, salt])

    def bound(self, check_id: str, default: float) -> float:
        return float(self.tol.get(check_id, self.tol.get("*", default)))

    def upper(self, check_id, tag, observed, default) -> CheckResult:
        return CheckResult(check_id, tag, float(observed), self.bound(check_id, default), True)

    def lower(self, check_id, tag, observed, default) -> CheckResult:
        return CheckResult(check_id, tag, float(observed), self.bound(check_id, default), False)


def _rel(a, b) -> float:
    den = l2_norm(b)
    return l2_norm(a - b) / den if den else l2_norm(a)


# --------------------------------------------------------------------------
# Newtonian layer


def check_poisson(ctx: VerifyContext):
    g = oracles.gaussian_mixture(ctx.n, ctx.L, ctx.rng(1))
    tr = nw.hessian_trace(nw.hessian(g, ctx.sched()))
    src = 4.0 * np.pi * g
    return [ctx.upper("poisson-identity", "poisson-identity", _rel(tr, src), 1e-3)]


def check_shell(ctx: VerifyContext):
    R = 0.5
    rho0 = 1.0 / (4.0 * np.pi / 3.0 * R**3)
    dens = parse_density(f"uniform-ball:{rho0!r},{R!r}")
    field_ = nw.solve_field(dens.sample(ctx.n, ctx.L))
    c = cell_centres(ctx.n, ctx.L)
    rng = ctx.rng(2)
    worst = 0.0
    targets = [r for r in np.linspace(0.1, 1.8, 26) if abs(r - R) > 1.5 * ctx.h][:20]
    for r in targets:
        d = rng.standard_normal(3)
        x = r * d / np.linalg.norm(d)
        idx = tuple(int(np.argmin(np.abs(c - xk))) for xk in x)
        xc = np.array([c[i] for i in idx])
        rc = float(np.linalg.norm(xc))
        expect = dens.radial.enclosed_mass(rc) / rc**2
        got = float(np.linalg.norm([field_[k].data[idx] for k in range(3)]))
        worst = max(worst, abs(got - expect) / expect)
    return [ctx.upper("shell-theorem", "shell-theorem", worst, 0.02)]


def check_singular_trace(ctx: VerifyContext):
    g = oracles.random_smooth_scalar(ctx.n, ctx.L, ctx.rng(3))
    sched = ctx.sched()
    total = sum(sg.t_ij(g, (i, i), sched) for i in (1, 2, 3))
    rows = [ctx.upper("singular-trace", "singular-trace", l2_norm(total) / l2_norm(g), 1e-3)]
    rng = ctx.rng(4)
    pts = rng.standard_normal((100_000, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    worst = 0.0
    for i in (1, 2, 3):
        vals = sg.omega(i, i, pts)
        se = vals.std(ddof=1) / math.sqrt(len(vals))
        worst = max(worst, abs(vals.mean()) / (3.0 * se))
    rows.append(ctx.upper("kernel-cancellation", "singular-trace", worst, 1.0))
    return rows


# --------------------------------------------------------------------------
# projector


def check_helmholtz(ctx: VerifyContext):
    n, L, sched = ctx.n, ctx.L, ctx.sched()
    H = lambda v: hz.project_irrotational(v, sched)  # noqa: E731
    tag = "helmholtz"
    rows = []
    grad, _ = oracles.gradient_field(n, L)
    rows.append(ctx.upper("helmholtz-gradient", tag, _rel(H(grad), grad), 0.02))
    sol = oracles.solenoidal_field(n, L)
    rows.append(ctx.upper("helmholtz-solenoidal", tag, l2_norm(H(sol)) / l2_norm(sol), 0.02))
    rng = ctx.rng(5)
    v = oracles.random_smooth_vector(n, L, rng)
    hv = H(v)
    rows.append(ctx.upper("helmholtz-idempotence", tag, l2_norm(H(hv) - hv) / l2_norm(v), 0.02))
    rad = oracles.radial_field(n, L)
    rows.append(ctx.upper("helmholtz-spherical", tag, _rel(H(rad), rad), 0.02))
    w = oracles.random_smooth_vector(n, L, rng)
    a, b = hz.inner_product_symmetry_check(v, w, sched)
    gap = abs(a - b) / max(abs(a), abs(b), 1e-300)
    rows.append(ctx.upper("helmholtz-symmetry", tag, gap, 0.02))
    rows.append(ctx.upper("helmholtz-divergence", tag, hz.divergence_preservation_check(v, sched), 0.02))
    return rows


# --------------------------------------------------------------------------
# MOND layer


def check_milgrom(ctx: VerifyContext):
    n, L = ctx.n, ctx.L
    rho = oracles.gaussian(n, L, 1.0, 0.3)
    w = mond.phantom_field(nw.solve_field(rho), ctx.lam)
    c = cell_centres(n, L)
    h = ctx.h
    rng = ctx.rng(6)
    probes = []
    while len(probes) < 10:
        idx = tuple(int(i) for i in rng.integers(1, n - 1, 3))
        r = math.sqrt(sum(c[i] ** 2 for i in idx))
        if 0.3 <= r <= 0.9 and idx not in probes:
            probes.append(idx)
    worst = 0.0
    for idx in probes:
        x = np.array([c[i] for i in idx])
        pts = []
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            pts += [x + e, x - e]
        U = mond.milgrom_potential(rho, ctx.lam, pts, phantom=w)
        grad = np.array([(U[2 * k] - U[2 * k + 1]) / (2 * h) for k in range(3)])
        wv = np.array([w[k].data[idx] for k in range(3)])
        worst = max(worst, np.linalg.norm(grad - wv) / np.linalg.norm(wv))
    return [ctx.upper("milgrom-formula", "milgrom-formula", worst, 0.03)]


TWO_BALLS = "uniform-ball:2.0,0.35,-0.4,0,0 + uniform-ball:4.0,0.25,0.45,0.1,0"


def check_weak_pde(ctx: VerifyContext):
    rho = parse_density(TWO_BALLS).sample(ctx.n, ctx.L)
    rng = ctx.rng(7)
    bumps = [oracles.Bump.random(rng) for _ in range(5)]
    res = mond.weak_pde_residual(rho, ctx.lam, [b.gradient(ctx.n, ctx.L) for b in bumps], ctx.sched())
    return [ctx.upper("weak-pde", "weak-pde", max(r.gap for r in res), 3e-2)]


# --------------------------------------------------------------------------
# radial regularity


def regularity_envelope(q: float = 1.5, R: float = 4.0, support: float = 2.0) -> float:
    """Upper bound for ``||Delta U^M||_{L^q(B_R)} / ||rho||_inf^(1/2)`` over
    densities with ``0 <= rho <= 1`` supported in ``B_support`` (deep MOND,
    a0 = 1), valid for 1 <= q < 2.

    Sum of bounds for ``4 pi rho``, ``sqrt(M)/r^2`` (via ``M <= (4 pi/3) r^3``
    capped at the maximal mass) and ``sqrt(M)'/r`` (via
    ``(2 pi r rho/sqrt(M))^q 4 pi r^2 <= (2 pi support)^q M' M^{-q/2}``).
    Each bound scales as ``||rho||_inf^(1/2)`` so the worst case is
    ``||rho||_inf = 1``.
    """
    if not 1 <= q < 2:
        raise ValueError("the envelope needs 1 <= q < 2")
    vol = 4.0 * math.pi / 3.0 * support**3
    t1 = 4.0 * math.pi * vol ** (1.0 / q)

    def integrand(r):
        m = min(4.0 * math.pi / 3.0 * r**3, vol)
        return 4.0 * math.pi * r * r * (math.sqrt(m) / r**2) ** q

    t2 = (quad(integrand, 0.0, support)[0] + quad(integrand, support, R)[0]) ** (1.0 / q)
    t3 = 2.0 * math.pi * support * (vol ** (1.0 - q / 2.0) / (1.0 - q / 2.0)) ** (1.0 / q)
    return t1 + t2 + t3


def random_radial_density(rng) -> tuple:
    """Bounded nonnegative radial density supported in B_2 as (callable, max)."""
    k = int(rng.integers(1, 4))
    centres = rng.uniform(0.0, 1.5, k)
    widths = rng.uniform(0.2, 0.5, k)
    heights = rng.uniform(0.2, 1.0, k)
    peak = rng.uniform(0.2, 1.0)

    def raw(r):
        r = np.asarray(r, dtype=float)[..., None]
        t = (r - centres) / widths
        return np.sum(heights * np.clip(1.0 - t * t, 0.0, None) ** 2, axis=-1)

    scale = peak / raw(np.linspace(0.0, 2.0, 20001)).max()
    return (lambda r: scale * raw(r)), peak


def radial_laplacian_norm(fn, lam, q: float, R: float, per_decade: int) -> float:
    r = sp.geometric_mesh(1e-4, R, per_decade)
    prof = RadialProfile(r, fn(r))
    model = sp.SphericalModel.from_profile(prof)
    lap = np.asarray(sp.mond_laplacian(model, lam, r))
    return sp.lq_norm_radial(RadialProfile(r, lap), q, R)


def check_regularity(ctx: VerifyContext):
    q, R = 1.5, 4.0
    env = regularity_envelope(q, R)
    rng = ctx.rng(8)
    worst_ratio, worst_slope = 0.0, -math.inf
    for _ in range(10):
        fn, _ = random_radial_density(rng)
        rmax = float(np.max(fn(sp.geometric_mesh(1e-4, 2.0, 2000))))
        norms = [radial_laplacian_norm(fn, ctx.lam, q, R, m) / math.sqrt(rmax) for m in (100, 200)]
        worst_ratio = max(worst_ratio, *norms)
        worst_slope = max(worst_slope, math.log(norms[1] / norms[0]) / math.log(2.0))
    return [
        ctx.upper("regularity-envelope", "regularity-bound", worst_ratio, env),
        ctx.upper("regularity-refinement", "regularity-bound", worst_slope, 0.05),
    ]


def blowup_bound(q: float) -> tuple[float, bool]:
    """Slope threshold and direction: ``0.8 (1/2 - 1/q)`` from below for
    2 < q < 6, at most 0.05 for q <= 2."""
    if 2 < q < 6:
        return round(0.8 * (0.5 - 1.0 / q), 2), False
    if q <= 2:
        return 0.05, True
    raise ValueError("blowup checks need q < 6")


def check_blowup(ctx: VerifyContext):
    qs = (4.0, 3.0, 1.5) if ctx.q is None else (float(ctx.q),)
    rows = []
    for q in qs:
        bound, upper = blowup_bound(q)
        for terms, cid, tag in (("full", "blowup", "dyadic-blowup"), ("singular", "blowup-singular", "dyadic-blowup-singular")):
            fit = cx.blowup_exponent(q, terms=terms)
            make = ctx.upper if upper else ctx.lower
            rows.append(make(f"{cid}-q{q:g}", tag, fit.slope, bound))
    return rows


def check_signed(ctx: VerifyContext):
    big = cx.signed_w11_divergence(10_000)
    ratio = big.partial_sums / big.harmonic_bounds
    rows = [ctx.lower("signed-harmonic-bound", "signed-density", float(ratio.min()) if big.ok else 0.0, 1.0)]
    s1 = cx.signed_w11_divergence(1000).S_N
    s2 = cx.signed_w11_divergence(2000).S_N
    target = math.log(2000) / math.log(1000)
    rows.append(ctx.upper("signed-log-growth", "signed-density", abs(s2 / s1 / target - 1.0), 0.10))
    return rows


def asymptote_models():
    """Three spherical models well inside the deep-MOND regime."""
    bump = lambda r: 0.004 * np.clip(1.0 - (np.asarray(r) / 1.5) ** 2, 0.0, None) ** 2  # noqa: E731
    r = sp.geometric_mesh(1e-4, 1.5, 400)
    return {
        "uniform-ball": parse_density("uniform-ball:0.0025,1").radial,
        "gaussian": parse_density("gaussian:0.01,0.25").radial,
        "bump-profile": sp.SphericalModel.from_profile(RadialProfile(r, bump(r))),
    }


def check_asymptote(ctx: VerifyContext):
    lam = ctx.lam
    worst = 0.0
    for model in asymptote_models().values():
        r = 100.0 * model.support_radius
        v = sp.circular_velocity(model, lam, r)
        worst = max(worst, abs(v**4 / (lam.a0 * model.total_mass) - 1.0))
    return [ctx.upper("deep-mond-asymptote", "deep-mond-asymptote", worst, 0.01)]


def check_lambda(ctx: VerifyContext):
    lam = mond.lambda_deep_mond(1.0)
    scan = lam.scan(12.0)
    failed = sum(not ok for ok in (scan.upper_bound, scan.derivative_bounds, scan.decay))
    rows = [ctx.upper("lambda-admissibility", "lambda-holder", failed, 0)]
    s1 = mond.empirical_holder_sup(lam, ctx.rng(9), 100_000)
    s2 = mond.empirical_holder_sup(lam, ctx.rng(10), 200_000)
    rows.append(ctx.upper("holder-stability", "lambda-holder", abs(s2 - s1) / s1, 0.05))
    return rows


CHECKS = {
    "poisson-identity": check_poisson,
    "shell-theorem": check_shell,
    "singular-trace": check_singular_trace,
    "helmholtz": check_helmholtz,
    "milgrom-formula": check_milgrom,
    "weak-pde": check_weak_pde,
    "regularity-bound": check_regularity,
    "dyadic-blowup": check_blowup,
    "signed-density": check_signed,
    "deep-mond-asymptote": check_asymptote,
    "lambda-holder": check_lambda,
}


def run_suite(ctx: VerifyContext, only=None) -> list[CheckResult]:
    """Run every group, or those whose name is in ``only``."""
    names = list(CHECKS) if not only else list(only)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown check group(s) {unknown}; choose from {sorted(CHECKS)}")
    rows = []
    for name in names:
        rows.extend(CHECKS[name](ctx))
    return rows


def write_report(fh, rows, seed: int) -> None:
    fh.write(f"# seed={seed}\n")
    fh.write("check_id,lemma,observed,bound,pass\n")
    for r in rows:
        fh.write(f"{r.check_id},{r.lemma},{r.observed!r},{r.bound!r},{'true' if r.passed else 'false'}\n")
