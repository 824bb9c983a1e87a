"""Reconstruction of polynomial first integrals from the condition ``{F, H} = 0``.

The candidate integral is written in a band chart ``(phi, w)`` as

    F = sum_{j+k <= m} a_jk(phi, w) p_phi^j p_w^k,

with each coefficient expanded in ``cos(l phi)`` or ``sin(l phi)``,
``l <= M``, times Chebyshev polynomials ``T_n`` on the window in ``w``.
Because ``H`` contains ``cos(phi)`` only to first order, ``{F, H}`` is again
a trigonometric polynomial of order ``M + 1`` in ``phi``; its Fourier
coefficients are formed exactly and its ``w``-dependence is collocated at
Chebyshev extrema.

The problem splits into four sectors: the parity of the momentum degree and
the parity under ``(phi, p_phi) -> (-phi, -p_phi)``.  In each sector the
operator is block tridiagonal in the harmonic index, which is used to
compute a banded triangular factor; the smallest singular values follow by
inverse subspace iteration on that factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.linalg import solve_triangular

from .charts import ChartedSystem
from .dynamics import in_chart
from .errors import WindowExit, WindowOutsideChart

THRESHOLD = 1e-8


def _monomials(max_degree, parity):
    return [(j, d - j) for d in range(max_degree + 1) if d % 2 == parity for j in range(d + 1)]


class _Sector:
    """Index bookkeeping for one symmetry sector."""

    def __init__(self, degree, fourier, radial, dpar, refl):
        self.dpar, self.refl = dpar, refl
        self.M, self.N = fourier, radial
        self.ins = _monomials(degree, dpar)
        self.outs = _monomials(degree + 1, 1 - dpar)
        self.in_cos = [(j + refl) % 2 == 0 for j, _ in self.ins]
        self.out_cos = [(j + refl) % 2 == 0 for j, _ in self.outs]
        self.out_index = {mono: i for i, mono in enumerate(self.outs)}
        self.in_valid = [[i for i, c in enumerate(self.in_cos) if c or l > 0] for l in range(self.M + 1)]
        self.out_valid = [[i for i, c in enumerate(self.out_cos) if c or l > 0] for l in range(self.M + 2)]
        self.col_sizes = [len(v) * self.N for v in self.in_valid]
        self.row_sizes = [len(v) * self.N for v in self.out_valid]
        self._col_pos = [{i: k for k, i in enumerate(v)} for v in self.in_valid]
        self._row_pos = [{i: k for k, i in enumerate(v)} for v in self.out_valid]
        self.size = sum(self.col_sizes)
        self.col_starts = np.concatenate([[0], np.cumsum(self.col_sizes)])

    def col_slice(self, l, i):
        start = self._col_pos[l][i] * self.N
        return slice(start, start + self.N)

    def row_slice(self, l, o):
        pos = self._row_pos[l].get(o)
        if pos is None:
            return None
        return slice(pos * self.N, (pos + 1) * self.N)

    def unpack(self, vec):
        """Sector vector to a dense array ``[l, monomial, n]`` (invalid slots zero)."""
        out = np.zeros((self.M + 1, len(self.ins), self.N))
        for l in range(self.M + 1):
            block = vec[self.col_starts[l]: self.col_starts[l + 1]]
            for i in self.in_valid[l]:
                out[l, i] = block[self.col_slice(l, i)]
        return out

    def pack(self, arr):
        vec = np.zeros(self.size)
        for l in range(self.M + 1):
            block = vec[self.col_starts[l]: self.col_starts[l + 1]]
            for i in self.in_valid[l]:
                block[self.col_slice(l, i)] = arr[l, i]
        return vec


@dataclass(frozen=True)
class QuarticAnsatz:
    """Finite basis for a polynomial-in-momenta integral.

    The basis size is (number of momentum monomials of degree ``<= degree``)
    times ``2 fourier + 1`` times ``radial``.
    """

    degree: int = 4
    fourier: int = 6
    radial: int = 48
    window: tuple = (-2.0, 2.0)
    chart: str = "band"
    coefficients: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if not 0 <= self.degree <= 4:
            raise ValueError("degree must be between 0 and 4")

    @property
    def sectors(self):
        return [_Sector(self.degree, self.fourier, self.radial, dpar, refl)
                for dpar in (0, 1) if dpar <= self.degree for refl in (0, 1)]

    @property
    def size(self):
        return sum(s.size for s in self.sectors)

    def with_coefficients(self, coefficients):
        return replace(self, coefficients=np.asarray(coefficients, dtype=float))

    def nodes(self):
        x = np.cos(np.pi * np.arange(self.radial) / (self.radial - 1))
        lo, hi = self.window
        return x, lo + (hi - lo) * (x + 1.0) / 2.0

    def _x(self, w):
        lo, hi = self.window
        return (2.0 * np.asarray(w, dtype=float) - lo - hi) / (hi - lo)

    def evaluate(self, phi, w, pphi, pw, coefficients=None):
        """``F`` at states given as arrays in the ansatz chart."""
        coef = self.coefficients if coefficients is None else coefficients
        phi, w, pphi, pw = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (phi, w, pphi, pw))
        L = np.arange(self.fourier + 1)
        cos = np.cos(np.multiply.outer(phi, L))
        sin = np.sin(np.multiply.outer(phi, L))
        T = C.chebvander(self._x(w), self.radial - 1)
        total = np.zeros_like(phi)
        offset = 0
        for sec in self.sectors:
            arr = sec.unpack(coef[offset: offset + sec.size])
            offset += sec.size
            for i, (j, k) in enumerate(sec.ins):
                trig = cos if sec.in_cos[i] else sin
                a = np.einsum("sl,sn,ln->s", trig, T, arr[:, i, :])
                total += a * pphi**j * pw**k
        return total

    def to_dict(self):
        out = {"degree": self.degree, "fourier": self.fourier, "radial": self.radial,
               "window": list(self.window), "chart": self.chart}
        if self.coefficients is not None:
            out["coefficients"] = self.coefficients.tolist()
        return out

    @classmethod
    def from_dict(cls, data):
        coef = data.get("coefficients")
        return cls(data["degree"], data["fourier"], data["radial"], tuple(data["window"]), data["chart"],
                   None if coef is None else np.asarray(coef, dtype=float))


# ---------------------------------------------------------------------------
# operator assembly


@dataclass
class SectorOperator:
    """Block-tridiagonal operator of one sector: ``blocks[(row_l, col_l)]``."""

    sector: _Sector
    blocks: dict

    def dense(self):
        s = self.sector
        rows = np.concatenate([[0], np.cumsum(s.row_sizes)])
        A = np.zeros((rows[-1], s.size))
        for (lr, lc), blk in self.blocks.items():
            A[rows[lr]: rows[lr + 1], s.col_starts[lc]: s.col_starts[lc + 1]] = blk
        return A

    def matvec(self, x):
        s = self.sector
        out = [np.zeros(n) for n in s.row_sizes]
        for (lr, lc), blk in self.blocks.items():
            out[lr] += blk @ x[s.col_starts[lc]: s.col_starts[lc + 1]]
        return np.concatenate(out)


@dataclass
class BracketOperator:
    """The map from ansatz coefficients to the coefficients of ``{F, H}``."""

    ansatz: QuarticAnsatz
    sectors: list

    def matvec(self, coef):
        out, offset = [], 0
        for op in self.sectors:
            n = op.sector.size
            out.append(op.matvec(coef[offset: offset + n]))
            offset += n
        return np.concatenate(out)

    def dense(self):
        from scipy.linalg import block_diag

        return block_diag(*[op.dense() for op in self.sectors])


def _trig_terms(kind, cos_in, l):
    """Products of ``trig(l phi)`` as ``[(l_out, coefficient)]``; output type is implied."""
    if kind == "dphi":
        return [(l, -float(l) if cos_in else float(l))]
    if kind == "sin":
        if cos_in:
            return [(l + 1, 0.5), (abs(l - 1), -0.5 if l >= 1 else 0.5)]
        return [(l - 1, 0.5), (l + 1, -0.5)]
    if kind == "cos":
        if cos_in:
            return [(l + 1, 0.5), (abs(l - 1), 0.5)]
        return [(l + 1, 0.5), (l - 1, 0.5)]
    return [(l, 1.0)]


def bracket_operator(sys: ChartedSystem, ansatz: QuarticAnsatz) -> BracketOperator:
    """Assemble the linear map ``coefficients -> {F, H}``.

    Raises
    ------
    WindowOutsideChart
        If the collocation window is not inside the chart's domain.
    """
    chart = sys.chart(ansatz.chart)
    if chart.kind != "band":
        raise WindowOutsideChart("the integral ansatz needs a band chart")
    lo, hi = ansatz.window
    if not (chart.domain[0] < lo < hi < chart.domain[1]):
        raise WindowOutsideChart(f"window {ansatz.window} not inside {chart.domain}")
    x, w = ansatz.nodes()
    N = ansatz.radial
    T = C.chebvander(x, N - 1)
    Td = np.zeros_like(T)
    eye = np.eye(N)
    for n in range(N):
        Td[:, n] = C.chebval(x, C.chebder(eye[n])) * 2.0 / (hi - lo)
    h1, h2, W = chart.jets(w)
    ops = []
    for sec in ansatz.sectors:
        blocks = {}
        for i, (j, k) in enumerate(sec.ins):
            cos_in = sec.in_cos[i]
            terms = [((j + 1, k), "dphi", h1.v[:, None] * T),
                     ((j, k + 1), "id", h2.v[:, None] * Td)]
            if j > 0:
                terms.append(((j - 1, k), "sin", j * W.v[:, None] * T))
            if k > 0:
                terms.append(((j + 2, k - 1), "id", -0.5 * k * h1.d1[:, None] * T))
                terms.append(((j, k + 1), "id", -0.5 * k * h2.d1[:, None] * T))
                terms.append(((j, k - 1), "cos", -k * W.d1[:, None] * T))
            for l in range(ansatz.fourier + 1):
                if not cos_in and l == 0:
                    continue
                cs = sec.col_slice(l, i)
                for mono, kind, radial in terms:
                    o = sec.out_index[mono]
                    for lo_, coef in _trig_terms(kind, cos_in, l):
                        if coef == 0.0:
                            continue
                        rs = sec.row_slice(lo_, o)
                        if rs is None:
                            continue
                        blk = blocks.get((lo_, l))
                        if blk is None:
                            blk = blocks[(lo_, l)] = np.zeros((sec.row_sizes[lo_], sec.col_sizes[l]))
                        blk[rs, cs] += coef * radial
        ops.append(SectorOperator(sec, blocks))
    return BracketOperator(ansatz, ops)


# ---------------------------------------------------------------------------
# banded factor and smallest singular values


class BandedR:
    """Upper block-banded triangular factor with ``R[c, c..c+2]`` blocks."""

    def __init__(self, sizes, rows):
        self.sizes = sizes
        self.rows = rows  # rows[c] = list of blocks for columns c, c+1, c+2 (as available)
        self.starts = np.concatenate([[0], np.cumsum(sizes)])
        self.n = int(self.starts[-1])
        diag = np.concatenate([np.abs(np.diag(r[0])) for r in rows if r[0].size])
        self.floor = max(diag.max(), 1.0) * 1e-15 if diag.size else 1.0
        self._diag = []
        for r in rows:
            D = r[0].copy()
            d = np.diag(D).copy()
            small = np.abs(d) < self.floor
            d[small] = self.floor
            np.fill_diagonal(D, d)
            self._diag.append(D)

    def _split(self, x):
        return [x[self.starts[c]: self.starts[c + 1]] for c in range(len(self.sizes))]

    def matvec(self, x):
        xs = self._split(x)
        out = []
        for c, row in enumerate(self.rows):
            acc = np.zeros((self.sizes[c],) + x.shape[1:])
            for k, blk in enumerate(row):
                acc += blk @ xs[c + k]
            out.append(acc)
        return np.concatenate(out)

    def rmatvec(self, y):
        ys = self._split(y)
        out = [np.zeros((s,) + y.shape[1:]) for s in self.sizes]
        for c, row in enumerate(self.rows):
            for k, blk in enumerate(row):
                out[c + k] += blk.T @ ys[c]
        return np.concatenate(out)

    def solve(self, b):
        bs = self._split(b)
        xs = [None] * len(self.sizes)
        for c in range(len(self.sizes) - 1, -1, -1):
            rhs = bs[c].copy()
            for k in range(1, len(self.rows[c])):
                rhs -= self.rows[c][k] @ xs[c + k]
            xs[c] = solve_triangular(self._diag[c], rhs) if self.sizes[c] else rhs
        return np.concatenate(xs)

    def solve_t(self, b):
        bs = self._split(b)
        ys = [None] * len(self.sizes)
        for c in range(len(self.sizes)):
            rhs = bs[c].copy()
            for k in (1, 2):
                if c - k >= 0 and len(self.rows[c - k]) > k:
                    rhs -= self.rows[c - k][k].T @ ys[c - k]
            ys[c] = solve_triangular(self._diag[c], rhs, trans="T") if self.sizes[c] else rhs
        return np.concatenate(ys)


def banded_factor(op: SectorOperator) -> BandedR:
    """Triangular factor ``R`` with ``R^T R = A^T A`` by panel-wise QR."""
    sec = op.sector
    nc = len(sec.col_sizes)
    nr = len(sec.row_sizes)

    def row_block(lr, cols):
        parts = []
        for lc in cols:
            blk = op.blocks.get((lr, lc))
            parts.append(blk if blk is not None else np.zeros((sec.row_sizes[lr], sec.col_sizes[lc])))
        return np.hstack(parts)

    rows = []
    cols0 = [c for c in (0, 1) if c < nc]
    leftover = row_block(0, cols0)
    left_cols = cols0
    for c in range(nc):
        cols = [k for k in (c, c + 1, c + 2) if k < nc]
        width = sum(sec.col_sizes[k] for k in cols)
        pad = np.zeros((leftover.shape[0], width))
        pad[:, : leftover.shape[1]] = leftover
        parts = [pad]
        if c + 1 < nr:
            parts.append(row_block(c + 1, cols))
        panel = np.vstack(parts)
        R = np.linalg.qr(panel, mode="r") if panel.shape[0] else np.zeros((0, width))
        n_c = sec.col_sizes[c]
        if R.shape[0] < n_c:
            R = np.vstack([R, np.zeros((n_c - R.shape[0], width))])
        head = R[:n_c]
        edges = np.concatenate([[0], np.cumsum([sec.col_sizes[k] for k in cols])])
        rows.append([head[:, edges[i]: edges[i + 1]] for i in range(len(cols))])
        leftover = R[n_c:, n_c:]
        left_cols = cols[1:]
    del left_cols
    return BandedR(list(sec.col_sizes), rows)


def smallest_singular(R: BandedR, k=16, max_iter=60, rtol=1e-4, seed=0):
    """Smallest singular values and right vectors of ``R`` by inverse subspace iteration."""
    rng = np.random.default_rng(seed)
    k = min(k, R.n)
    V, _ = np.linalg.qr(rng.standard_normal((R.n, k)))
    prev = None
    for _ in range(max_iter):
        Z = R.solve(R.solve_t(V))
        V, _ = np.linalg.qr(Z)
        B = R.matvec(V)
        _, s, wt = np.linalg.svd(B, full_matrices=False)
        s = s[::-1]
        wt = wt[::-1]
        if prev is not None:
            # converge on the lower half of the subspace
            m = max(1, k // 2)
            if np.all(np.abs(s[:m] - prev[:m]) <= rtol * np.maximum(s[:m], 1e-300) + 1e-300):
                break
        prev = s
    return s, V @ wt.T


def largest_singular(R: BandedR, iters=60, seed=1):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(R.n)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(iters):
        w = R.rmatvec(R.matvec(v))
        new = np.sqrt(np.linalg.norm(w))
        v = w / np.linalg.norm(w)
        if abs(new - sigma) <= 1e-10 * new:
            sigma = new
            break
        sigma = new
    return float(sigma)


# ---------------------------------------------------------------------------
# trivial integrals and the nullspace report


def project(ansatz: QuarticAnsatz, terms: dict) -> np.ndarray:
    """Coefficients of ``sum terms[(j, k)](phi, w) p_phi^j p_w^k`` in the ansatz basis.

    Each coefficient function is sampled on a uniform ``phi`` grid and at the
    Chebyshev nodes, so functions with harmonics ``<= fourier`` and smooth
    ``w``-dependence are represented to interpolation accuracy.
    """
    M, N = ansatz.fourier, ansatz.radial
    nphi = 2 * M + 2
    phi = 2 * np.pi * np.arange(nphi) / nphi
    x, w = ansatz.nodes()
    T = C.chebvander(x, N - 1)
    Tinv = np.linalg.inv(T)
    P, Wg = np.meshgrid(phi, w, indexing="ij")
    out = []
    for sec in ansatz.sectors:
        arr = np.zeros((M + 1, len(sec.ins), N))
        for i, mono in enumerate(sec.ins):
            fn = terms.get(mono)
            if fn is None:
                continue
            vals = np.broadcast_to(fn(P, Wg), P.shape)
            fhat = np.fft.rfft(vals, axis=0) / nphi
            for l in range(M + 1):
                if sec.in_cos[i]:
                    c = fhat[l].real * (1.0 if l == 0 else 2.0)
                else:
                    if l == 0:
                        continue
                    c = -fhat[l].imag * 2.0
                arr[l, i] = Tinv @ c
        out.append(sec.pack(arr))
    return np.concatenate(out)


def _poly_mul(a, b):
    out = {}
    for (j1, k1), f1 in a.items():
        for (j2, k2), f2 in b.items():
            key = (j1 + j2, k1 + k2)
            prev = out.get(key)

            def prod(P, W, f1=f1, f2=f2, prev=prev):
                v = f1(P, W) * f2(P, W)
                return v if prev is None else prev(P, W) + v

            out[key] = prod
    return out


def hamiltonian_terms(sys: ChartedSystem, chart: str):
    ch = sys.chart(chart)

    def h1(P, W):
        return 0.5 * ch.jets(W)[0].v

    def h2(P, W):
        return 0.5 * ch.jets(W)[1].v

    def pot(P, W):
        return ch.jets(W)[2].v * np.cos(P)

    return {(2, 0): h1, (0, 2): h2, (0, 0): pot}


def trivial_integrals(sys: ChartedSystem, ansatz: QuarticAnsatz):
    """Coefficient vectors of ``1, H, H^2, ...`` up to the ansatz degree."""
    one = {(0, 0): lambda P, W: np.ones_like(P)}
    H = hamiltonian_terms(sys, ansatz.chart)
    vecs, power = [], one
    for _ in range(ansatz.degree // 2 + 1):
        vecs.append(project(ansatz, power))
        power = _poly_mul(power, H)
    return np.array(vecs).T


@dataclass
class NullspaceReport:
    """Smallest singular values and the numerical nullspace of the bracket operator.

    ``singular_values`` are relative to ``sigma_max`` and sorted ascending;
    ``basis`` has the corresponding unit coefficient vectors as columns.
    """

    singular_values: np.ndarray
    sigma_max: float
    threshold: float
    dimension: int
    basis: np.ndarray
    trivial_rank: int
    deflated_dimension: int
    gap_ratio: float
    cosines: np.ndarray
    nontrivial: np.ndarray
    sectors: list

    def as_dict(self):
        return {
            "singular_values": self.singular_values.tolist(),
            "sigma_max": self.sigma_max,
            "threshold": self.threshold,
            "dimension": self.dimension,
            "trivial_rank": self.trivial_rank,
            "deflated_dimension": self.deflated_dimension,
            "gap_ratio": self.gap_ratio,
            "cosines": self.cosines.tolist(),
            "sectors": self.sectors,
        }


def find_integrals(op: BracketOperator, trivials=None, threshold: float = THRESHOLD, k: int = 16,
                   seed: int = 0) -> NullspaceReport:
    """Numerical nullspace of ``op`` with the trivial integrals deflated.

    The nullspace dimension counts singular values below
    ``threshold * sigma_max``.  The trivial rank is the number of principal
    angles between ``span(trivials)`` and the nullspace with cosine above
    0.99; the remaining nullspace directions, least aligned with the
    trivials first, are returned in ``nontrivial``.
    """
    factors = [banded_factor(sop) for sop in op.sectors]
    sigma_max = max(largest_singular(R) for R in factors if R.n)
    n_total = sum(sop.sector.size for sop in op.sectors)
    vals, vecs, sector_info = [], [], []
    offset = 0
    for sop, R in zip(op.sectors, factors):
        sec = sop.sector
        if R.n:
            s, V = smallest_singular(R, k=k, seed=seed)
            full = np.zeros((n_total, V.shape[1]))
            full[offset: offset + sec.size] = V
            vals.append(s / sigma_max)
            vecs.append(full)
            sector_info.append({"degree_parity": sec.dpar, "reflection": sec.refl,
                                "size": sec.size, "smallest": (s[:4] / sigma_max).tolist(),
                                "dimension": int(np.sum(s / sigma_max < threshold))})
        offset += sec.size
    vals = np.concatenate(vals)
    vecs = np.hstack(vecs)
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    dim = int(np.sum(vals < threshold))
    if dim < len(vals):
        gap = float(vals[dim] / vals[dim - 1]) if dim and vals[dim - 1] > 0 else np.inf
    else:
        gap = float("nan")
    basis = vecs[:, :dim]
    cosines = np.zeros(0)
    trivial_rank = 0
    nontrivial = basis
    if trivials is not None and dim:
        Qt, _ = np.linalg.qr(np.asarray(trivials))
        U, cosines, _ = np.linalg.svd(basis.T @ Qt, full_matrices=True)
        cosines = np.clip(cosines, 0.0, 1.0)
        trivial_rank = int(np.sum(cosines > 0.99))
        # directions of the nullspace ordered from most to least aligned
        nontrivial = (basis @ U)[:, trivial_rank:]
    return NullspaceReport(vals, sigma_max, threshold, dim, basis, trivial_rank, dim - trivial_rank,
                           gap, cosines, nontrivial, sector_info)


def reconstruct(sys: ChartedSystem, ansatz: QuarticAnsatz | None = None, threshold: float = THRESHOLD,
                seed: int = 0):
    """Assemble, factor and deflate in one call; returns ``(ansatz, report)``."""
    if ansatz is None:
        ansatz = QuarticAnsatz(window=sys.finder_window, chart=sys.finder_chart)
    op = bracket_operator(sys, ansatz)
    report = find_integrals(op, trivial_integrals(sys, ansatz), threshold, seed=seed)
    return ansatz, report


# ---------------------------------------------------------------------------
# certification along trajectories


def _band_states(sys, traj, chart):
    return in_chart(sys, traj, chart)


def certify(sys: ChartedSystem, ansatz: QuarticAnsatz, traj, n_random: int = 2000, seed: int = 0):
    """Max relative variation of ``F`` along ``traj``.

    ``scale = max(|F(0)|, std of F over random states in the window)``, the
    random momenta having the trajectory's momentum spread.

    Raises
    ------
    WindowExit
        If the trajectory leaves the collocation window; carries the time.
    """
    zb = _band_states(sys, traj, ansatz.chart)
    lo, hi = ansatz.window
    outside = (zb[:, 1] < lo) | (zb[:, 1] > hi)
    if np.any(outside):
        t = float(traj.t[np.argmax(outside)])
        raise WindowExit(f"trajectory leaves window {ansatz.window} at t={t:.6g}", time=t)
    F = ansatz.evaluate(zb[:, 0], zb[:, 1], zb[:, 2], zb[:, 3])
    rng = np.random.default_rng(seed)
    sp = np.std(zb[:, 2:], axis=0) + np.abs(np.mean(zb[:, 2:], axis=0))
    sample = ansatz.evaluate(rng.uniform(-np.pi, np.pi, n_random), rng.uniform(lo, hi, n_random),
                             rng.normal(0.0, sp[0], n_random), rng.normal(0.0, sp[1], n_random))
    scale = max(abs(F[0]), float(np.std(sample)))
    return float(np.max(np.abs(F - F[0])) / scale)


def integral_values(sys: ChartedSystem, ansatz: QuarticAnsatz, traj):
    """``F`` along a trajectory (no window check)."""
    zb = _band_states(sys, traj, ansatz.chart)
    return ansatz.evaluate(zb[:, 0], zb[:, 1], zb[:, 2], zb[:, 3])
