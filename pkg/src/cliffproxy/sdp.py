"""Dense path-following interior-point solver for the diamond-norm SDP.

For a Hermitian difference-of-channels Choi matrix J (output factor first),
half the diamond norm is the optimum of

    maximize  <J, W>
    s.t.      W + S = I_out (x) rho,   Tr(rho) = 1,   W, S, rho >= 0,

whose dual is  min t  s.t.  Y >= J, Y >= 0, Tr_out(Y) <= t*I.  The solver
runs a feasible-start primal-dual Nesterov-Todd path-following iteration
directly over the complex Hermitian cones.  Eliminating the primal step
against the scaled complementarity equations leaves one symmetric positive
definite system per iteration in the dual variables (Y, t), assembled in an
orthonormal basis of Hermitian matrices.

Problem sizes here are small (Choi dimension 4^n with n <= 3), so all
linear algebra is dense.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["DiamondResult", "SdpConvergenceError", "solve_diamond_sdp"]


class SdpConvergenceError(RuntimeError):
    """Raised when the solver cannot reach the required duality gap."""

    def __init__(self, message: str, gap: float):
        super().__init__(message)
        self.gap = gap


@dataclass(frozen=True)
class DiamondResult:
    value: float
    duality_gap: float
    iterations: int


def _ip(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.real(np.vdot(a, b)))


def _herm(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def _eigh_fun(a: np.ndarray, fun) -> np.ndarray:
    w, v = np.linalg.eigh(_herm(a))
    return _herm((v * fun(w)) @ v.conj().T)


def _sqrt_psd(a: np.ndarray) -> np.ndarray:
    return _eigh_fun(a, lambda w: np.sqrt(np.clip(w, 0.0, None)))


def _inv_psd(a: np.ndarray) -> np.ndarray:
    return _eigh_fun(a, lambda w: 1.0 / w)


def _nt_scaling(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Hermitian T with T Z T = X (the Nesterov-Todd scaling point)."""
    lx = _sqrt_psd(x)
    inner = _herm(lx @ z @ lx)
    inner_isqrt = _eigh_fun(inner, lambda w: 1.0 / np.sqrt(np.clip(w, 1e-300, None)))
    return _herm(lx @ inner_isqrt @ lx)


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest alpha with x + alpha*dx still positive definite."""
    w, v = np.linalg.eigh(_herm(x))
    w = np.clip(w, 1e-300, None)
    scale = (v / np.sqrt(w)) @ v.conj().T
    m = _herm(scale @ dx @ scale)
    lam_min = float(np.linalg.eigvalsh(m)[0])
    if lam_min >= 0.0:
        return np.inf
    return -1.0 / lam_min


class _HermBasis:
    """Orthonormal real basis bookkeeping for D x D Hermitian matrices."""

    def __init__(self, dim: int):
        self.dim = dim
        iu = np.triu_indices(dim, 1)
        self.rows = iu[0]
        self.cols = iu[1]
        self.num_off = len(iu[0])
        self.size = dim * dim

    def vec(self, m: np.ndarray) -> np.ndarray:
        re = np.real(m[self.rows, self.cols])
        im = np.imag(m[self.rows, self.cols])
        return np.concatenate(
            [np.real(np.diagonal(m)), math.sqrt(2.0) * re, math.sqrt(2.0) * im]
        )

    def unvec(self, v: np.ndarray) -> np.ndarray:
        d = self.dim
        m = np.zeros((d, d), dtype=complex)
        np.fill_diagonal(m, v[:d])
        off = (v[d : d + self.num_off] + 1j * v[d + self.num_off :]) / math.sqrt(2.0)
        m[self.rows, self.cols] = off
        m[self.cols, self.rows] = np.conj(off)
        return m

    def tat_matrix(self, t: np.ndarray, chunk: int = 16) -> np.ndarray:
        """Matrix of the congruence map A -> T A T in this basis."""
        d = self.dim
        g = np.empty((self.size, self.size), dtype=float)
        tc = np.conj(t)

        def fill(cols: np.ndarray, mats: np.ndarray) -> None:
            # mats: (len(cols), d, d) images T B T
            diag = np.real(mats[:, np.arange(d), np.arange(d)])
            off = mats[:, self.rows, self.cols]
            block = np.concatenate(
                [diag, math.sqrt(2.0) * np.real(off), math.sqrt(2.0) * np.imag(off)],
                axis=1,
            )
            g[:, cols] = block.T

        # diagonal basis elements: T e_kk T = t_k t_k^dag
        outer_diag = np.einsum("ik,jk->kij", t, tc)
        fill(np.arange(d), outer_diag)
        # off-diagonal elements in chunks over the first index
        for start in range(0, self.num_off, chunk * d):
            stop = min(start + chunk * d, self.num_off)
            ks = self.rows[start:stop]
            ls = self.cols[start:stop]
            p1 = np.einsum("ia,ja->aij", t[:, ks], tc[:, ls])
            p2 = np.einsum("ia,ja->aij", t[:, ls], tc[:, ks])
            fill(d + np.arange(start, stop), (p1 + p2) / math.sqrt(2.0))
            fill(
                d + self.num_off + np.arange(start, stop),
                1j * (p1 - p2) / math.sqrt(2.0),
            )
        return g


def _partial_trace_matrix(basis_big: _HermBasis, d_out: int, d_in: int) -> np.ndarray:
    """Basis matrix of Tr_out: Herm(d_out*d_in) -> Herm(d_in)."""
    basis_small = _HermBasis(d_in)
    pt = np.zeros((basis_small.size, basis_big.size), dtype=float)
    dim = basis_big.dim

    def small_plus_index(a: int, b: int) -> int:
        # position of the (a, b) pair, a < b, in triu ordering
        return int(np.flatnonzero((basis_small.rows == a) & (basis_small.cols == b))[0])

    for i in range(dim):
        alpha, a = divmod(i, d_in)
        pt[a, i] = 1.0
    off = {}
    for idx in range(basis_big.num_off):
        i = basis_big.rows[idx]
        j = basis_big.cols[idx]
        alpha, a = divmod(i, d_in)
        beta, b = divmod(j, d_in)
        if alpha != beta:
            continue
        if a < b:
            pos = small_plus_index(a, b)
            sign = 1.0
        else:
            pos = small_plus_index(b, a)
            sign = -1.0
        pt[d_in + pos, basis_big.dim + idx] = 1.0
        pt[d_in + basis_small.num_off + pos, basis_big.dim + basis_big.num_off + idx] = sign
    return pt


def _tr_out(m: np.ndarray, d_out: int, d_in: int) -> np.ndarray:
    return np.einsum("aiaj->ij", m.reshape(d_out, d_in, d_out, d_in))


def solve_diamond_sdp(
    delta_choi: np.ndarray,
    d_in: int,
    gap_tol: float = 1e-9,
    gap_required: float = 1e-8,
    max_iter: int = 200,
    step_fraction: float = 0.98,
) -> DiamondResult:
    """Half diamond norm of the Hermitian-preserving map with Choi ``delta_choi``.

    ``delta_choi`` is (d_out*d_in) x (d_out*d_in) with the output factor
    first.  Returns the midpoint of the final primal/dual objectives along
    with the duality gap achieved; raises :class:`SdpConvergenceError` if
    the gap cannot be pushed below ``gap_required``.
    """
    j = _herm(np.asarray(delta_choi, dtype=complex))
    big = j.shape[0]
    if j.shape != (big, big) or big % d_in != 0:
        raise ValueError("Choi matrix shape inconsistent with d_in")
    d_out = big // d_in

    basis = _HermBasis(big)
    basis_rho = _HermBasis(d_in)
    pt = _partial_trace_matrix(basis, d_out, d_in)
    eye_out = np.eye(d_out)

    # feasible interior start
    w = np.eye(big, dtype=complex) / (2.0 * d_in)
    s = w.copy()
    rho = np.eye(d_in, dtype=complex) / d_in
    beta = float(np.linalg.norm(j, 2)) + 1.0
    y = -beta * np.eye(big, dtype=complex)
    t = -(beta * d_out + 1.0)

    def slacks(yv, tv):
        zw = -j - yv
        zs = -yv
        zrho = _tr_out(yv, d_out, d_in) - tv * np.eye(d_in)
        return zw, zs, zrho

    zw, zs, zrho = slacks(y, t)
    total_dim = 2 * big + d_in
    best_gap = np.inf
    best_value = 0.0
    stall = 0
    iterations = 0

    for it in range(1, max_iter + 1):
        iterations = it
        gap = _ip(w, zw) + _ip(s, zs) + _ip(rho, zrho)
        primal = _ip(j, w)
        dual = -t
        value = 0.5 * (primal + dual)
        if not (np.isfinite(gap) and np.isfinite(value)):
            break
        if abs(gap) <= gap_tol:
            return DiamondResult(value, abs(gap), it - 1)
        if abs(gap) < best_gap * 0.9999:
            best_gap = abs(gap)
            best_value = value
            stall = 0
        else:
            stall += 1
            if stall >= 10:
                break
        mu = gap / total_dim
        if mu <= 0:
            break

        tw = _nt_scaling(w, zw)
        ts = _nt_scaling(s, zs)
        trho = _nt_scaling(rho, zrho)
        zw_inv = _inv_psd(zw)
        zs_inv = _inv_psd(zs)
        zrho_inv = _inv_psd(zrho)

        gw = basis.tat_matrix(tw)
        gs = basis.tat_matrix(ts)
        grho = basis_rho.tat_matrix(trho)
        trho2 = _herm(trho @ trho)
        c_mat = np.kron(eye_out, trho2)
        c_vec = basis.vec(c_mat)

        m_size = basis.size + 1
        m = np.empty((m_size, m_size), dtype=float)
        m[: basis.size, : basis.size] = gw + gs + pt.T @ grho @ pt
        m[: basis.size, -1] = -c_vec
        m[-1, : basis.size] = -c_vec
        m[-1, -1] = float(np.real(np.trace(trho2)))

        def newton(rw, rs, rrho):
            b_mat = np.kron(eye_out, rrho) - rw - rs
            rhs = np.concatenate([basis.vec(b_mat), [-float(np.real(np.trace(rrho)))]])
            sol = np.linalg.solve(m, rhs)
            dy = basis.unvec(sol[:-1])
            dt = float(sol[-1])
            dzw = -dy
            dzs = -dy
            dzrho = _tr_out(dy, d_out, d_in) - dt * np.eye(d_in)
            dw = _herm(rw + tw @ dy @ tw)
            ds = _herm(rs + ts @ dy @ ts)
            drho = _herm(rrho - trho @ _tr_out(dy, d_out, d_in) @ trho + dt * trho2)
            return dw, ds, drho, dy, dt, dzw, dzs, dzrho

        def step_sizes(dw, ds, drho, dzw, dzs, dzrho):
            ap = min(_max_step(w, dw), _max_step(s, ds), _max_step(rho, drho), 1.0 / step_fraction)
            ad = min(_max_step(zw, dzw), _max_step(zs, dzs), _max_step(zrho, dzrho), 1.0 / step_fraction)
            return min(1.0, step_fraction * ap), min(1.0, step_fraction * ad)

        # predictor
        aff = newton(-w, -s, -rho)
        ap, ad = step_sizes(aff[0], aff[1], aff[2], aff[5], aff[6], aff[7])
        mu_aff = (
            _ip(w + ap * aff[0], zw + ad * aff[5])
            + _ip(s + ap * aff[1], zs + ad * aff[6])
            + _ip(rho + ap * aff[2], zrho + ad * aff[7])
        ) / total_dim
        sigma = min(1.0, max((max(mu_aff, 0.0) / mu) ** 3, 1e-10))

        # corrector with a second-order term
        def corr(x, dx_aff, z_inv, dz_aff):
            second = dx_aff @ dz_aff @ z_inv
            return _herm(sigma * mu * z_inv - x - 0.5 * (second + second.conj().T))

        dw, ds, drho, dy, dt, dzw, dzs, dzrho = newton(
            corr(w, aff[0], zw_inv, aff[5]),
            corr(s, aff[1], zs_inv, aff[6]),
            corr(rho, aff[2], zrho_inv, aff[7]),
        )
        if not all(
            np.all(np.isfinite(m)) for m in (dw, ds, drho, dy)
        ) or not np.isfinite(dt):
            break
        ap, ad = step_sizes(dw, ds, drho, dzw, dzs, dzrho)

        w = _herm(w + ap * dw)
        s = _herm(s + ap * ds)
        rho = _herm(rho + ap * drho)
        y = _herm(y + ad * dy)
        t = t + ad * dt
        zw, zs, zrho = slacks(y, t)

    gap = _ip(w, zw) + _ip(s, zs) + _ip(rho, zrho)
    value = 0.5 * (_ip(j, w) - t)
    if np.isfinite(gap) and np.isfinite(value) and abs(gap) < best_gap:
        best_gap = abs(gap)
        best_value = value
    if best_gap > gap_required:
        raise SdpConvergenceError(
            f"diamond SDP stalled at duality gap {best_gap:.3e} (required {gap_required:.1e})",
            best_gap,
        )
    return DiamondResult(best_value, best_gap, iterations)
