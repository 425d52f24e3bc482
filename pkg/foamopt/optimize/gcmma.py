"""Globally convergent method of moving asymptotes.

Solves ``min f0(x)  s.t.  f_i(x) <= 0, lo <= x <= hi`` through a sequence of
convex separable subproblems. The subproblem uses the standard nonlinear
programming form with ``a0 = 1``, ``a_i = 0``, ``c_i`` large and ``d_i = 1``,
so the elastic variables ``y_i`` only become nonzero if the subproblem is
infeasible.
"""
import logging
from collections import OrderedDict
from typing import Callable, Mapping, Optional, Tuple

import numpy as np
from scipy.linalg import solve as dense_solve

# evaluate(x) -> (f0, f): objective and constraint values only
Evaluate = Callable[[np.ndarray], Tuple[float, np.ndarray]]


def subsolve(
    low: np.ndarray,
    upp: np.ndarray,
    alfa: np.ndarray,
    beta: np.ndarray,
    p0: np.ndarray,
    q0: np.ndarray,
    P: np.ndarray,
    Q: np.ndarray,
    a0: float,
    a: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    d: np.ndarray,
    epsimin: float = 1e-7,
):
    """Primal-dual Newton solve of the MMA subproblem.

    Minimize ``sum p0_j/(upp_j - x_j) + q0_j/(x_j - low_j) + a0 z + sum c_i y_i + d_i y_i^2 / 2``
    subject to ``sum P_ij/(upp_j - x_j) + Q_ij/(x_j - low_j) - a_i z - y_i <= b_i``,
    ``alfa <= x <= beta``, ``y >= 0``, ``z >= 0``.

    Returns:
        ``(x, y, z, lam)``
    """
    n, m = len(low), len(b)
    epsi = 1.0
    x = 0.5 * (alfa + beta)
    y = np.ones(m)
    z = 1.0
    lam = np.ones(m)
    xsi = np.maximum(1.0 / (x - alfa), 1.0)
    eta = np.maximum(1.0 / (beta - x), 1.0)
    mu = np.maximum(1.0, 0.5 * c)
    zet = 1.0
    s = np.ones(m)

    def residual(x, y, z, lam, xsi, eta, mu, zet, s, epsi):
        ux1, xl1 = upp - x, x - low
        plam = p0 + P.T @ lam
        qlam = q0 + Q.T @ lam
        gvec = P @ (1.0 / ux1) + Q @ (1.0 / xl1)
        return np.concatenate(
            [
                plam / ux1**2 - qlam / xl1**2 - xsi + eta,
                c + d * y - mu - lam,
                [a0 - zet - a @ lam],
                gvec - a * z - y + s - b,
                xsi * (x - alfa) - epsi,
                eta * (beta - x) - epsi,
                mu * y - epsi,
                [zet * z - epsi],
                lam * s - epsi,
            ]
        )

    while epsi > epsimin:
        res = residual(x, y, z, lam, xsi, eta, mu, zet, s, epsi)
        resnorm, resmax = np.linalg.norm(res), np.max(np.abs(res))
        it = 0
        while resmax > 0.9 * epsi and it < 200:
            it += 1
            ux1, xl1 = upp - x, x - low
            ux2, xl2 = ux1 * ux1, xl1 * xl1
            plam = p0 + P.T @ lam
            qlam = q0 + Q.T @ lam
            gvec = P @ (1.0 / ux1) + Q @ (1.0 / xl1)
            GG = P / ux2[None, :] - Q / xl2[None, :]
            delx = plam / ux2 - qlam / xl2 - epsi / (x - alfa) + epsi / (beta - x)
            dely = c + d * y - lam - epsi / y
            delz = a0 - a @ lam - epsi / z
            dellam = gvec - a * z - y - b + epsi / lam
            diagx = 2.0 * (plam / (ux2 * ux1) + qlam / (xl2 * xl1)) + xsi / (x - alfa) + eta / (beta - x)
            diagy = d + mu / y
            diaglamyi = s / lam + 1.0 / diagy
            if m < n:
                blam = dellam + dely / diagy - GG @ (delx / diagx)
                AA = np.zeros((m + 1, m + 1))
                AA[:m, :m] = np.diag(diaglamyi) + (GG / diagx[None, :]) @ GG.T
                AA[:m, m] = a
                AA[m, :m] = a
                AA[m, m] = -zet / z
                sol = dense_solve(AA, np.concatenate([blam, [delz]]))
                dlam, dz = sol[:m], sol[m]
                dx = -delx / diagx - (GG.T @ dlam) / diagx
            else:
                dellamyi = dellam + dely / diagy
                AA = np.zeros((n + 1, n + 1))
                AA[:n, :n] = np.diag(diagx) + (GG.T / diaglamyi[None, :]) @ GG
                axz = -GG.T @ (a / diaglamyi)
                AA[:n, n] = axz
                AA[n, :n] = axz
                AA[n, n] = zet / z + a @ (a / diaglamyi)
                bx = delx + GG.T @ (dellamyi / diaglamyi)
                bz = delz - a @ (dellamyi / diaglamyi)
                sol = dense_solve(AA, -np.concatenate([bx, [bz]]))
                dx, dz = sol[:n], sol[n]
                dlam = GG @ dx / diaglamyi - dz * (a / diaglamyi) + dellamyi / diaglamyi

            dy = -dely / diagy + dlam / diagy
            dxsi = -xsi + epsi / (x - alfa) - (xsi * dx) / (x - alfa)
            deta = -eta + epsi / (beta - x) + (eta * dx) / (beta - x)
            dmu = -mu + epsi / y - (mu * dy) / y
            dzet = -zet + epsi / z - zet * dz / z
            ds = -s + epsi / lam - (s * dlam) / lam

            # largest step keeping every slack and multiplier positive
            xx = np.concatenate([y, [z], lam, xsi, eta, mu, [zet], s])
            dxx = np.concatenate([dy, [dz], dlam, dxsi, deta, dmu, [dzet], ds])
            steg = 1.0 / max(
                np.max(-1.01 * dxx / xx),
                np.max(-1.01 * dx / (x - alfa)),
                np.max(1.01 * dx / (beta - x)),
                1.0,
            )

            old = (x, y, z, lam, xsi, eta, mu, zet, s)
            step = (dx, dy, dz, dlam, dxsi, deta, dmu, dzet, ds)
            newnorm = 2.0 * resnorm
            itto = 0
            while newnorm > resnorm and itto < 50:
                itto += 1
                x, y, z, lam, xsi, eta, mu, zet, s = (o + steg * t for o, t in zip(old, step))
                res = residual(x, y, z, lam, xsi, eta, mu, zet, s, epsi)
                newnorm = np.linalg.norm(res)
                steg = 0.5 * steg
            resnorm, resmax = newnorm, np.max(np.abs(res))
        epsi *= 0.1
    return x, y, z, lam


class GCMMA:
    """Moving asymptote optimizer with conservative inner iterations.

    Args:
        move: move limit as a fraction of ``hi - lo``
        asyinit: initial asymptote distance as a fraction of ``hi - lo``
        asyincr: asymptote widening factor for monotone variables
        asydecr: asymptote narrowing factor for oscillating variables
        asymin, asymax: asymptote distance bounds as fractions of ``hi - lo``
        c: penalty on the elastic constraint variables
        a0: weight of the ``z`` variable
        d: quadratic weight of the elastic variables
        max_inner: conservative inner iterations per step, 0 gives plain MMA
        albefa: distance of the subproblem bounds from the asymptotes
        epsimin: final barrier parameter of the subproblem solve
        raa0eps, raaeps: lower bounds of the conservativeness parameters
    """

    def __init__(
        self,
        move: float = 0.1,
        asyinit: float = 0.5,
        asyincr: float = 1.2,
        asydecr: float = 0.7,
        asymin: float = 0.01,
        asymax: float = 10.0,
        c: float = 1000.0,
        a0: float = 1.0,
        d: float = 1.0,
        max_inner: int = 5,
        albefa: float = 0.1,
        epsimin: float = 1e-7,
        raa0eps: float = 1e-6,
        raaeps: float = 1e-6,
    ):
        if not 0.0 < move <= 1.0:
            raise ValueError(f"move limit must be in (0, 1], got {move}")
        if not 0.0 < asydecr < 1.0 < asyincr:
            raise ValueError(f"need 0 < asydecr < 1 < asyincr, got {asydecr}, {asyincr}")
        if asyinit <= 0 or c <= 0 or a0 <= 0 or d < 0:
            raise ValueError("asyinit, c and a0 must be positive and d non-negative")
        if max_inner < 0:
            raise ValueError(f"max_inner must be non-negative, got {max_inner}")
        self.move = move
        self.asyinit = asyinit
        self.asyincr = asyincr
        self.asydecr = asydecr
        self.asymin = asymin
        self.asymax = asymax
        self.c = c
        self.a0 = a0
        self.d = d
        self.max_inner = int(max_inner)
        self.albefa = albefa
        self.epsimin = epsimin
        self.raa0eps = raa0eps
        self.raaeps = raaeps

        self.iteration = 0
        self.xold1 = None
        self.xold2 = None
        self.low = None
        self.upp = None

    def _asymptotes(self, x, lo, hi):
        span = np.maximum(hi - lo, 1e-5)
        if self.iteration <= 2 or self.low is None:
            self.low = x - self.asyinit * span
            self.upp = x + self.asyinit * span
            return
        trend = (x - self.xold1) * (self.xold1 - self.xold2)
        factor = np.ones_like(x)
        factor[trend > 0] = self.asyincr
        factor[trend < 0] = self.asydecr
        low = x - factor * (self.xold1 - self.low)
        upp = x + factor * (self.upp - self.xold1)
        self.low = np.clip(low, x - self.asymax * span, x - self.asymin * span)
        self.upp = np.clip(upp, x + self.asymin * span, x + self.asymax * span)

    def _approximate(self, x, lo, hi, f0, df0, f, df, raa0, raa):
        """Solve the conservative subproblem; returns the candidate and the approximations at it."""
        span = np.maximum(hi - lo, 1e-5)
        low, upp = self.low, self.upp
        alfa = np.maximum.reduce([low + self.albefa * (x - low), x - self.move * span, lo])
        beta = np.minimum.reduce([upp - self.albefa * (upp - x), x + self.move * span, hi])
        ux1, xl1 = upp - x, x - low
        ux2, xl2 = ux1 * ux1, xl1 * xl1

        p0 = np.maximum(df0, 0.0) + 0.001 * np.abs(df0) + raa0 / span
        q0 = np.maximum(-df0, 0.0) + 0.001 * np.abs(df0) + raa0 / span
        p0, q0 = p0 * ux2, q0 * xl2
        r0 = f0 - p0 @ (1.0 / ux1) - q0 @ (1.0 / xl1)

        P = np.maximum(df, 0.0) + 0.001 * np.abs(df) + raa[:, None] / span[None, :]
        Q = np.maximum(-df, 0.0) + 0.001 * np.abs(df) + raa[:, None] / span[None, :]
        P, Q = P * ux2[None, :], Q * xl2[None, :]
        r = f - P @ (1.0 / ux1) - Q @ (1.0 / xl1)

        m = len(f)
        xnew, y, _, lam = subsolve(
            low,
            upp,
            alfa,
            beta,
            p0,
            q0,
            P,
            Q,
            self.a0,
            np.zeros(m),
            -r,
            np.full(m, self.c),
            np.full(m, self.d),
            self.epsimin,
        )
        ux1, xl1 = upp - xnew, xnew - low
        f0app = r0 + p0 @ (1.0 / ux1) + q0 @ (1.0 / xl1)
        fapp = r + P @ (1.0 / ux1) + Q @ (1.0 / xl1)
        return xnew, f0app, fapp, y

    def _tighten(self, xnew, x, lo, hi, f0new, fnew, f0app, fapp, raa0, raa):
        span = np.maximum(hi - lo, 1e-5)
        low, upp = self.low, self.upp
        dx = xnew - x
        cof = max(float(np.sum((dx / (upp - xnew)) * (dx / (xnew - low)) * (upp - low) / span)), 1e-12)
        if f0new > f0app + 0.5 * self.epsimin:
            raa0 = min(1.1 * (raa0 + (f0new - f0app) / cof), 10.0 * raa0)
        grow = fnew > fapp + 0.5 * self.epsimin
        raa = raa.copy()
        raa[grow] = np.minimum(1.1 * (raa[grow] + (fnew[grow] - fapp[grow]) / cof), 10.0 * raa[grow])
        return raa0, raa

    def step(
        self,
        x: np.ndarray,
        lo: np.ndarray,
        hi: np.ndarray,
        f0: float,
        df0: np.ndarray,
        f: np.ndarray,
        df: np.ndarray,
        evaluate: Optional[Evaluate] = None,
    ) -> np.ndarray:
        """One outer iteration from ``x``; the result always lies within ``[lo, hi]``.

        Args:
            x, lo, hi: ``(n,)`` design, lower and upper bounds
            f0, df0: objective value and ``(n,)`` gradient
            f, df: ``(m,)`` constraint values and ``(m, n)`` gradients; ``m`` may be 0
            evaluate: objective and constraint values at a trial point, used by
                the conservative inner iterations. Without it the step is plain MMA.
        """
        x = np.asarray(x, dtype=np.float64)
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        df0 = np.asarray(df0, dtype=np.float64)
        f = np.atleast_1d(np.asarray(f, dtype=np.float64))
        df = np.asarray(df, dtype=np.float64).reshape(len(f), len(x))
        if np.any(lo > hi):
            raise ValueError("inconsistent bounds: lo > hi")
        if not (np.all(np.isfinite(df0)) and np.all(np.isfinite(df))):
            raise ValueError("GCMMA needs finite gradients")
        dummy = len(f) == 0
        if dummy:
            # an always satisfied constraint keeps the subproblem in its usual form
            f, df = np.array([-1.0]), np.zeros((1, len(x)))

        self.iteration += 1
        x = np.clip(x, lo, hi)
        if self.xold1 is None:
            self.xold1 = x.copy()
            self.xold2 = x.copy()
        self._asymptotes(x, lo, hi)
        span = np.maximum(hi - lo, 1e-5)
        n = len(x)
        raa0 = max(self.raa0eps, (0.1 / n) * float(np.abs(df0) @ span))
        raa = np.maximum(self.raaeps, (0.1 / n) * (np.abs(df) @ span))

        xnew, f0app, fapp, y = self._approximate(x, lo, hi, f0, df0, f, df, raa0, raa)
        if evaluate is not None:
            for inner in range(self.max_inner):
                f0new, fnew = evaluate(xnew)
                fnew = np.array([-1.0]) if dummy else np.atleast_1d(np.asarray(fnew, dtype=np.float64))
                if f0app + self.epsimin >= f0new and np.all(fapp + self.epsimin >= fnew):
                    break
                logging.debug(f"GCMMA inner iteration {inner + 1}: approximation not conservative")
                raa0, raa = self._tighten(xnew, x, lo, hi, f0new, fnew, f0app, fapp, raa0, raa)
                xnew, f0app, fapp, y = self._approximate(x, lo, hi, f0, df0, f, df, raa0, raa)
        if np.any(y > 1e-6):
            logging.warning(f"GCMMA subproblem infeasible, constraint relaxed by {float(np.max(y)):.3g}")

        self.xold2 = self.xold1
        self.xold1 = x.copy()
        return np.clip(xnew, lo, hi)

    def state_dict(self) -> "OrderedDict[str, object]":
        def tolist(v):
            return None if v is None else np.asarray(v).tolist()

        return OrderedDict(
            [
                ("iteration", self.iteration),
                ("xold1", tolist(self.xold1)),
                ("xold2", tolist(self.xold2)),
                ("low", tolist(self.low)),
                ("upp", tolist(self.upp)),
            ]
        )

    def load_state_dict(self, state_dict: Mapping) -> None:
        def toarray(v):
            return None if v is None else np.asarray(v, dtype=np.float64)

        self.iteration = int(state_dict["iteration"])
        self.xold1 = toarray(state_dict["xold1"])
        self.xold2 = toarray(state_dict["xold2"])
        self.low = toarray(state_dict["low"])
        self.upp = toarray(state_dict["upp"])


def gcmma_step(optimizer: GCMMA, x, lo, hi, f0, df0, f, df, evaluate: Optional[Evaluate] = None) -> np.ndarray:
    return optimizer.step(x, lo, hi, f0, df0, f, df, evaluate)
