"""Linear equivalence of sections and the induced cylinder classification.

A body whose sections over a region of k-planes are pairwise linearly
equivalent satisfies the same local trichotomy as the contracting-direction
classifier, so the pipeline here verifies the equivalence hypothesis on a
plane grid and then delegates the verdict.  The module also evaluates the
quadratic tangent field attached to a trace-free tensor R and verifies the
tangency transfer (tangency at kernel points implies tangency everywhere)
for a supplied R; constructing R from section data is out of scope.
"""

from dataclasses import dataclass

import numpy as np

from .bodies import Body, SectionBody, section_samples
from .classifier import ClassifyOptions, classify
from .errors import HypothesisFailed
from .linalg import GrassmannChart, Subspace, sphere_directions

# Equivalence witnesses must stay honestly invertible.
DET_MIN = 1e-8
# Signature resolution: 0.5 degree scan, golden-refined to machine level.
SCAN_OFFSETS = 720
REFINE_TOL = 1e-12


@dataclass
class RTensor:
    """Trace-free tensor R: X* -> Hom(X, X), with entries[i, j] = R(e_i*)(e_j).

    nu, when present, is an ambient vector outside X used by the tangency
    check one dimension up.
    """

    entries: np.ndarray
    nu: np.ndarray = None

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=float)
        k = self.entries.shape[0]
        if self.entries.shape != (k, k, k) or k not in (2, 3):
            raise ValueError("entries must be (k, k, k) with k in {2, 3}")
        traces = np.einsum("ijj->i", self.entries)
        if np.abs(traces).max() > 1e-10:
            raise ValueError(f"tensor is not trace-free: {traces}")
        if self.nu is not None:
            self.nu = np.asarray(self.nu, dtype=float)

    @property
    def k(self) -> int:
        return self.entries.shape[0]

    def matrix(self, lam) -> np.ndarray:
        """The matrix of R_lam = sum_i lam_i R(e_i*); columns are images of e_j."""
        return np.einsum("i,ijc->cj", np.asarray(lam, dtype=float), self.entries)


@dataclass
class EquivalenceWitness:
    map: np.ndarray
    residual: float


@dataclass
class TangencyReport:
    hypothesis_ok: bool
    conclusion_ok: bool
    worst_violation: float
    witness: tuple


def quadratic_field(R: RTensor, p) -> np.ndarray:
    """W(p) = xy (R11 - R22) - x^2 R21 + y^2 R12 for p = (x, y)."""
    if R.k != 2:
        raise ValueError("quadratic_field is the planar k = 2 field")
    x, y = np.asarray(p, dtype=float)
    E = R.entries
    return x * y * (E[0, 0] - E[1, 1]) - x * x * E[1, 0] + y * y * E[0, 1]


# ------------------------------------------------------- inscribed ellipsoid


def max_inscribed_ellipsoid(functionals):
    """(M, c) of the maximal-volume ellipsoid {M u + c : |u| <= 1} inside
    {x : ell_i . x <= 1}, with M symmetric positive definite.

    Log-det barrier with damped Newton along a mu continuation; the Hessian
    is a finite difference of the analytic gradient with a step kept well
    inside the current slacks.  The last two continuation stages are
    Richardson-extrapolated to mu = 0 (the central path is smooth in mu),
    which reaches the exact solution even when every sampled constraint is
    active, as happens for smooth sections.
    """
    ell = np.asarray(functionals, dtype=float)
    m, k = ell.shape
    tril = np.tril_indices(k, -1)
    n_off = len(tril[0])
    dim = 2 * k + n_off
    ell_scale = np.linalg.norm(ell, axis=1).max()

    def unpack(theta):
        L = np.zeros((k, k))
        L[np.diag_indices(k)] = np.exp(theta[:k])
        L[tril] = theta[k : k + n_off]
        c = theta[k + n_off :]
        return L, c

    def value_grad(theta, mu):
        L, c = unpack(theta)
        V = ell @ L
        n = np.linalg.norm(V, axis=1)
        s = 1.0 - ell @ c - n
        if s.min() <= 0.0:
            return np.inf, None, 0.0
        f = -np.sum(theta[:k]) - mu * np.sum(np.log(s))
        U = V / n[:, None]
        w = mu / s
        GL = np.einsum("i,ij,ik->jk", w, ell, U)
        g = np.empty(dim)
        g[:k] = -1.0 + np.diag(GL) * np.diag(L)
        g[k : k + n_off] = GL[tril]
        g[k + n_off :] = ell.T @ w
        return f, g, float(s.min())

    r0 = 0.45 / ell_scale
    theta = np.zeros(dim)
    theta[:k] = np.log(r0)
    stages = []
    mu = 1e-2
    while mu >= 0.999e-9:
        for _ in range(40):
            f, g, s_min = value_grad(theta, mu)
            # probe step small against the active slacks so finite
            # differences never cross the boundary
            h = min(1e-6, 0.02 * s_min / (ell_scale * (1.0 + np.exp(theta[:k]).max())))
            h = max(h, 1e-13)
            H = np.empty((dim, dim))
            for i in range(dim):
                e = np.zeros(dim)
                e[i] = h
                _, gp, _ = value_grad(theta + e, mu)
                _, gm, _ = value_grad(theta - e, mu)
                if gp is None:
                    gp = g
                if gm is None:
                    gm = g
                H[i] = (gp - gm) / (2.0 * h)
            H = 0.5 * (H + H.T)
            try:
                step = np.linalg.solve(H + 1e-14 * np.eye(dim), -g)
            except np.linalg.LinAlgError:
                step = -g
            if step @ g > 0:
                step = -g
            alpha = 1.0
            while alpha > 1e-16:
                fn, _, _ = value_grad(theta + alpha * step, mu)
                if fn < f + 0.25 * alpha * (g @ step):
                    break
                alpha *= 0.5
            else:
                break
            theta = theta + alpha * step
            if np.linalg.norm(alpha * step) <= 1e-15 * (1.0 + np.linalg.norm(theta)):
                break
        stages.append((mu, theta.copy()))
        mu *= 0.1

    (mu1, th1), (mu2, th2) = stages[-2], stages[-1]
    L1, c1 = unpack(th1)
    L2, c2 = unpack(th2)
    E1, E2 = L1 @ L1.T, L2 @ L2.T
    # linear-in-mu extrapolation of the central path to mu = 0
    E = E2 + (E2 - E1) * (mu2 / (mu1 - mu2))
    c = c2 + (c2 - c1) * (mu2 / (mu1 - mu2))
    w, U = np.linalg.eigh(E)
    M = (U * np.sqrt(np.maximum(w, 0.0))) @ U.T
    return M, c


# --------------------------------------------------------- radial signatures


def _radials(sec: SectionBody, M, c, dirs):
    """Radial extents of the normalized section along unit frame directions."""
    W = dirs @ M.T
    if np.linalg.norm(c) <= 1e-12:
        return 1.0 / sec.gauge_many(W)
    # general center: solve gauge(c + t w) = 1 by vectorized bisection
    t_hi = np.ones(len(W))
    for _ in range(60):
        mask = sec.gauge_many(c[None, :] + t_hi[:, None] * W) < 1.0
        if not mask.any():
            break
        t_hi[mask] *= 2.0
    t_lo = np.zeros(len(W))
    for _ in range(80):
        mid = 0.5 * (t_lo + t_hi)
        inside = sec.gauge_many(c[None, :] + mid[:, None] * W) <= 1.0
        t_lo = np.where(inside, mid, t_lo)
        t_hi = np.where(inside, t_hi, mid)
    return 0.5 * (t_lo + t_hi)


def _rot(a):
    return np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])


def _match_planar(sec1, M1, c1, sec2, M2, c2, offsets=SCAN_OFFSETS):
    """Best rotation/reflection aligning two normalized planar signatures.

    Coarse scan over grid shifts (array rolls, exact on the shared angle
    grid), then golden-section refinement of the shift with true radial
    re-evaluation.  Returns (map in frame coordinates, residual).
    """
    ang = np.linspace(0.0, 2.0 * np.pi, offsets, endpoint=False)
    circle = np.column_stack([np.cos(ang), np.sin(ang)])
    r1 = _radials(sec1, M1, c1, circle)
    s2 = _radials(sec2, M2, c2, circle)

    # grid scan: r1(theta_i + j d) = roll(r1, -j)[i] and
    # r1(-theta_i + j d) = roll(r1[::-1], j + 1)[i] on the shared grid
    best = (np.inf, 0, +1)
    rev = r1[::-1]
    for j in range(offsets):
        res = float(np.abs(np.roll(r1, -j) - s2).max())
        if res < best[0]:
            best = (res, j, +1)
        res = float(np.abs(np.roll(rev, j + 1) - s2).max())
        if res < best[0]:
            best = (res, j, -1)
    _, j0, flip = best
    phi0 = float(ang[j0])

    def residual(phi):
        theta = flip * ang + phi
        pts = np.column_stack([np.cos(theta), np.sin(theta)])
        return float(np.abs(_radials(sec1, M1, c1, pts) - s2).max())

    span = 2.0 * np.pi / offsets
    gr = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = phi0 - span, phi0 + span
    x1 = b - gr * (b - a)
    x2 = a + gr * (b - a)
    f1, f2 = residual(x1), residual(x2)
    while b - a > REFINE_TOL:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - gr * (b - a)
            f1 = residual(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + gr * (b - a)
            f2 = residual(x2)
    phi, res = (x1, f1) if f1 <= f2 else (x2, f2)
    # matched r1(flip theta + phi) = r2(theta): on normalized bodies the map
    # sends the direction at angle alpha to flip (alpha - phi)
    T = _rot(-flip * phi) @ np.diag([1.0, float(flip)])
    Lmap = M2 @ T @ np.linalg.inv(M1)
    return Lmap, res


_SIGNED_PERMS = None


def _signed_permutations():
    global _SIGNED_PERMS
    if _SIGNED_PERMS is None:
        from itertools import permutations, product

        out = []
        for perm in permutations(range(3)):
            for signs in product((1.0, -1.0), repeat=3):
                P = np.zeros((3, 3))
                for r, (col, sg) in enumerate(zip(perm, signs)):
                    P[r, col] = sg
                out.append(P)
        _SIGNED_PERMS = out
    return _SIGNED_PERMS


def _match_spatial(sec1, M1, c1, sec2, M2, c2, design=1024):
    """Heuristic 3D signature alignment over moment principal frames."""
    dirs = sphere_directions(3, design)
    r1 = _radials(sec1, M1, c1, dirs)
    r2 = _radials(sec2, M2, c2, dirs)
    P1 = dirs * r1[:, None]
    P2 = dirs * r2[:, None]
    _, V1 = np.linalg.eigh(P1.T @ P1)
    _, V2 = np.linalg.eigh(P2.T @ P2)
    best = (float(np.abs(r1 - r2).max()), np.eye(3))
    for P in _signed_permutations():
        O = V1 @ P @ V2.T
        res = float(np.abs(_radials(sec1, M1, c1, dirs @ O.T) - r2).max())
        if res < best[0]:
            best = (res, O)
    res, O = best
    Lmap = M2 @ O.T @ np.linalg.inv(M1)
    return Lmap, res


def _section_match(body: Body, X1: Subspace, X2: Subspace, cache=None):
    """(map, residual, heuristic) between two sections in frame coordinates."""
    if X1.dim != X2.dim or X1.dim not in (2, 3):
        raise ValueError("sections must share dimension k in {2, 3}")

    def canon(X):
        if cache is not None and id(X) in cache:
            return cache[id(X)]
        sam = section_samples(body, X, 256)
        M, c = max_inscribed_ellipsoid(sam.functionals)
        out = (SectionBody(body, X), M, c)
        if cache is not None:
            cache[id(X)] = out
        return out

    sec1, M1, c1 = canon(X1)
    sec2, M2, c2 = canon(X2)
    if X1.dim == 2:
        Lmap, res = _match_planar(sec1, M1, c1, sec2, M2, c2)
        return Lmap, res, False
    Lmap, res = _match_spatial(sec1, M1, c1, sec2, M2, c2)
    return Lmap, res, True


def linear_equivalent_sections(body: Body, X1: Subspace, X2: Subspace, tol: float = 1e-6):
    """EquivalenceWitness(L, residual) with L(B cap X1) = B cap X2 in frame
    coordinates, or None when the best mismatch exceeds tol.

    Sections are normalized to maximal-inscribed-ellipsoid position (affine
    covariant), leaving a compact rotation/reflection search on boundary
    radial signatures.
    """
    Lmap, res, _ = _section_match(body, X1, X2)
    if res > tol or abs(np.linalg.det(Lmap)) < DET_MIN:
        return None
    return EquivalenceWitness(Lmap, res)


# ------------------------------------------------------------ tangency check


def _unit_covectors(k, m):
    if k == 2:
        a = np.linspace(0.0, np.pi, m, endpoint=False)
        return np.column_stack([np.cos(a), np.sin(a)])
    return sphere_directions(3, m)


def verify_R_tangency(body: Body, X: Subspace, R: RTensor, m: int = 64, tol: float = 1e-7):
    """Tangency report for R on the section K = B cap X.

    hypothesis_ok: for each of m unit covectors lam, the field R_lam is
    tangent to the section boundary at the points of ker lam cap bd K;
    conclusion_ok: tangent at all m x m (lam, boundary point) pairs.  With
    nu present and the ambient one dimension up, the checked vector is
    R_lam(p) + lam(p) nu against the full body boundary.
    """
    k = X.dim
    if R.k != k:
        raise ValueError("tensor dimension does not match the plane")
    nu = None
    if R.nu is not None:
        if X.ambient != k + 1:
            raise ValueError("nu requires ambient dimension k + 1")
        nu = R.nu
    sec = SectionBody(body, X)

    def defect(lam, p):
        v = R.matrix(lam) @ p
        if nu is not None:
            vamb = X.frame @ v + float(lam @ p) * nu
            ellp = body.support_functional(X.frame @ p)
            return abs(float(ellp @ vamb))
        ellp = sec.support_functional(p)
        return abs(float(ellp @ v))

    covs = _unit_covectors(k, m)
    worst = (0.0, None)
    hyp_worst = 0.0
    for lam in covs:
        if k == 2:
            d0 = np.array([-lam[1], lam[0]])
            kernel_pts = [d0 / sec.gauge(d0), -d0 / sec.gauge(-d0)]
        else:
            _, _, Vt = np.linalg.svd(lam[None, :])
            a = np.linspace(0.0, 2.0 * np.pi, 16, endpoint=False)
            ring = np.column_stack([np.cos(a), np.sin(a)]) @ Vt[1:]
            kernel_pts = list(ring / sec.gauge_many(ring)[:, None])
        for p in kernel_pts:
            d = defect(lam, p)
            hyp_worst = max(hyp_worst, d)
            if d > worst[0]:
                worst = (d, (lam.copy(), np.asarray(p).copy()))

    fan = sphere_directions(k, m)
    pts = fan / sec.gauge_many(fan)[:, None]
    ells = np.array([sec.support_functional(p) for p in pts])
    if nu is not None:
        amb_ells = np.array([body.support_functional(X.frame @ p) for p in pts])
    conc_worst = 0.0
    for lam in covs:
        V = pts @ R.matrix(lam).T
        if nu is not None:
            Vamb = V @ X.frame.T + (pts @ lam)[:, None] * nu[None, :]
            d = np.abs(np.einsum("jc,jc->j", amb_ells, Vamb))
        else:
            d = np.abs(np.einsum("jc,jc->j", ells, V))
        j = int(np.argmax(d))
        if d[j] > conc_worst:
            conc_worst = float(d[j])
            if conc_worst > worst[0]:
                worst = (conc_worst, (lam.copy(), pts[j].copy()))
    return TangencyReport(
        hypothesis_ok=hyp_worst <= tol,
        conclusion_ok=conc_worst <= tol,
        worst_violation=float(max(hyp_worst, conc_worst)),
        witness=worst[1],
    )


# ---------------------------------------------------------------- classifier


def banach_classify(
    body: Body,
    region: GrassmannChart,
    k: int = None,
    tol: float = 1e-6,
    opts: ClassifyOptions = None,
):
    """Verify pairwise linear equivalence of sections over the region, then
    delegate the verdict to the contracting-direction classifier.

    Pairs checked: the chart base against every plane of a 3-per-axis grid,
    plus 32 random pairs from the region.  Any pair beyond tol raises
    HypothesisFailed carrying the worst pair; on success the report gains
    the equivalence diagnostics (including whether the 3D heuristic matcher
    was involved).
    """
    k = region.base.dim if k is None else k
    if k != region.base.dim or k not in (2, 3):
        raise ValueError("banach_classify runs over regions of 2- or 3-planes")
    opts = opts or ClassifyOptions()
    rng = np.random.default_rng(opts.seed)
    pairs = [(region.base, region.plane(M)) for M in region.grid(3)]
    for _ in range(32):
        pairs.append(
            (region.plane(region.sample(rng)[0]), region.plane(region.sample(rng)[0]))
        )

    cache = {}
    worst_res = 0.0
    worst_fail = None
    heuristic = False
    for Xa, Xb in pairs:
        _, res, heur = _section_match(body, Xa, Xb, cache=cache)
        heuristic = heuristic or heur
        worst_res = max(worst_res, res)
        if res > tol and (worst_fail is None or res > worst_fail[1]):
            worst_fail = ((Xa, Xb), res)
    if worst_fail is not None:
        raise HypothesisFailed(worst_fail[0], worst_fail[1])

    report = classify(body, region, opts=opts)
    report.diagnostics["banach_pairs"] = len(pairs)
    report.diagnostics["banach_worst_residual"] = worst_res
    report.diagnostics["equivalence_heuristic"] = heuristic
    return report
