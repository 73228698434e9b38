"""
BDF-Integrator variabler Ordnung und Schrittweite für F(t, y, ẏ) = 0

Koeffizienten nichtäquidistanter Gitter über Fornberg-Gewichte,
Ordnung 1 bis 5, Newton-Krylov als innerer Löser.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, NamedTuple, Optional, Sequence

import numpy as np

from .newton import (NewtonParams, NewtonResult, error_weights, finite_difference_jvp,
                     newton_solve, weighted_rms_norm)
from ..utils.config import config
from ..utils.errors import ConvergenceError, GeometryError, IntegrationError

logger = logging.getLogger(__name__)

MAX_ORDER = 5
MAX_HISTORY = MAX_ORDER + 1
MAX_CONSECUTIVE_REJECTS = 3

DaeFunction = Callable[[float, np.ndarray, np.ndarray], np.ndarray]


def fornberg_weights(x: Sequence[float], xi: float, maxder: int) -> np.ndarray:
    """
    Interpolationsgewichte für Ableitungen 0..maxder an der Stelle xi

    c[j, d] ist das Gewicht von f(x[j]) in der d-ten Ableitung des
    Interpolationspolynoms durch alle Knoten x.
    """
    x = np.asarray(x, dtype=float)
    n = len(x) - 1
    if maxder > n:
        raise ValueError(f"Ableitung {maxder} braucht mindestens {maxder + 1} Knoten")
    c = np.zeros((n + 1, maxder + 1))
    c[0, 0] = 1.0
    tmp1 = 1.0
    tmp4 = x[0] - xi

    for i in range(1, n + 1):
        mn = min(i, maxder)
        tmp2 = 1.0
        tmp5 = tmp4
        tmp4 = x[i] - xi
        for j in range(i):
            tmp3 = x[i] - x[j]
            tmp2 *= tmp3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = tmp1 * (k * c[i - 1, k - 1] - tmp5 * c[i - 1, k]) / tmp2
                c[i, 0] = -tmp1 * tmp5 * c[i - 1, 0] / tmp2
            for k in range(mn, 0, -1):
                c[j, k] = (tmp4 * c[j, k] - k * c[j, k - 1]) / tmp3
            c[j, 0] = tmp4 * c[j, 0] / tmp3
        tmp1 = tmp2

    return c


class BdfHistory:
    """
    Vergangene Zustände (t_k, y_k), neuester zuerst, höchstens sechs
    """

    def __init__(self, max_points: int = MAX_HISTORY):
        self.max_points = max_points
        self.ts: List[float] = []
        self.ys: List[np.ndarray] = []

    def __len__(self) -> int:
        return len(self.ts)

    def push(self, t: float, y: np.ndarray):
        if self.ts and t <= self.ts[0]:
            raise IntegrationError(f"Zeitpunkte nicht aufsteigend ({t} <= {self.ts[0]})")
        self.ts.insert(0, float(t))
        self.ys.insert(0, np.array(y, dtype=float, copy=True))
        del self.ts[self.max_points:]
        del self.ys[self.max_points:]

    def reset(self, t: float, y: np.ndarray):
        self.ts.clear()
        self.ys.clear()
        self.push(t, y)

    @property
    def latest(self) -> np.ndarray:
        return self.ys[0]

    def coefficients(self, t_new: float, order: int) -> np.ndarray:
        """
        BDF-Koeffizienten c mit ẏ(t_new) = c[0] y_new + Σ c[i] y_{n−i}

        Raises:
            IntegrationError: weniger als order gespeicherte Zustände
        """
        if order < 1 or order > len(self):
            raise IntegrationError(f"Ordnung {order} braucht {order} gespeicherte Zustände "
                                   f"(vorhanden: {len(self)})")
        nodes = [t_new] + self.ts[:order]
        return fornberg_weights(nodes, t_new, 1)[:, 1]

    def extrapolate(self, t_new: float, n_points: int) -> np.ndarray:
        """Polynom durch die neuesten n_points Zustände an t_new"""
        n_points = min(n_points, len(self))
        c = fornberg_weights(self.ts[:n_points], t_new, 0)[:, 0]
        return np.tensordot(c, np.array(self.ys[:n_points]), axes=1)


def bdf_derivative(history: BdfHistory, y_n: np.ndarray, t_n: float, order: int) -> np.ndarray:
    """
    ẏ_n aus der BDF-Formel der Ordnung order

    Raises:
        IntegrationError: zu kurze Historie
    """
    c = history.coefficients(t_n, order)
    return c[0] * np.asarray(y_n, dtype=float) + np.tensordot(
        c[1:], np.array(history.ys[:order]), axes=1)


@dataclass(frozen=True)
class ControllerParams:
    safety: float = 0.9
    min_factor: float = 0.25
    max_factor: float = 2.0
    h_min: float = 1e-8
    h_max: float = 0.2
    max_order: int = MAX_ORDER


class StepDecision(NamedTuple):
    accept: bool
    order: int
    h: float


def _factor(err: float, order: int, params: ControllerParams) -> float:
    if err <= 0.0:
        return params.max_factor
    return params.safety * err ** (-1.0 / (order + 1))


def step_controller(err: float, order: int, h: float,
                    params: ControllerParams = ControllerParams(),
                    err_lower: Optional[float] = None,
                    err_higher: Optional[float] = None,
                    steps_at_order: int = 0) -> StepDecision:
    """
    Schrittweiten- und Ordnungssteuerung

    Annahme bei gewichtetem Fehler ≤ 1. Neue Schrittweite
    h·safety·err^(−1/(q+1)), begrenzt auf [h/4, 2h] und h_max. Ein
    Ordnungswechsel wird erst nach q+2 Schritten der aktuellen Ordnung
    erwogen; gewählt wird die Ordnung mit dem größten Schrittfaktor.
    """
    accept = err <= 1.0
    candidates = {order: _factor(err, order, params)}
    if steps_at_order >= order + 2:
        if err_lower is not None and order > 1:
            candidates[order - 1] = _factor(err_lower, order - 1, params)
        if accept and err_higher is not None and order < params.max_order:
            candidates[order + 1] = _factor(err_higher, order + 1, params)

    new_order = max(sorted(candidates), key=lambda k: (candidates[k], -abs(k - order)))
    factor = candidates[new_order]
    if not accept:
        factor = min(factor, params.safety)
    factor = min(max(factor, params.min_factor), params.max_factor)
    return StepDecision(accept, new_order, min(h * factor, params.h_max))


@dataclass(frozen=True)
class BdfOptions:
    """Toleranzen und Steuerparameter des Integrators"""

    rtol: float = 1e-6
    h_init: float = 0.01
    controller: ControllerParams = field(default_factory=ControllerParams)
    newton: NewtonParams = field(default_factory=NewtonParams)
    fixed_order: Optional[int] = None
    fixed_step: bool = False

    @classmethod
    def from_config(cls) -> 'BdfOptions':
        controller = ControllerParams(
            safety=float(config.get('solver.safety', 0.9)),
            h_min=float(config.get('solver.h_min', 1e-8)),
            h_max=float(config.get('solver.h_max', 0.2)),
            max_order=min(int(config.get('solver.max_order', MAX_ORDER)), MAX_ORDER),
        )
        return cls(rtol=float(config.get('solver.rtol', 1e-4)),
                   h_init=float(config.get('solver.h_init', 0.01)),
                   controller=controller,
                   newton=NewtonParams.from_config())


@dataclass
class Linearization:
    """Näherung der Jacobi-Matrix für einen Schritt: eingefrorenes Residuum und Vorkonditionierer"""

    residual: Optional[DaeFunction] = None
    preconditioner: object = None


@dataclass
class StepRecord:
    t: float
    h: float
    order: int
    newton_iterations: int
    residual_norm: float
    error: float
    accepted: bool


class BdfIntegrator:
    """
    Variabler BDF-Integrator für implizite DAEs

    Args:
        fun: F(t, y, ẏ)
        t0, y0, yp0: konsistenter Anfangszustand
        differential: Maske der differentiellen Komponenten
        atol: absolute Toleranzen je Komponente
        options: BdfOptions
        linearize: (t, y, ẏ, shift) → Linearization, einmal je Schrittversuch
    """

    def __init__(self, fun: DaeFunction, t0: float, y0: np.ndarray, yp0: np.ndarray,
                 differential: np.ndarray, atol, options: Optional[BdfOptions] = None,
                 linearize: Optional[Callable[..., Linearization]] = None):
        self.fun = fun
        self.options = options or BdfOptions()
        self.linearize = linearize
        self.history = BdfHistory()
        self.steps: List[StepRecord] = []
        self.n_accepted = 0
        self.n_rejected = 0
        self.reset(t0, y0, yp0, differential, atol)
        self.h = self.options.h_init

    # Zustand

    def reset(self, t0: float, y0: np.ndarray, yp0: np.ndarray,
              differential: Optional[np.ndarray] = None, atol=None):
        """Neustart: Historie gelöscht, Ordnung 1"""
        self.t = float(t0)
        self.y = np.array(y0, dtype=float, copy=True)
        self.yp = np.array(yp0, dtype=float, copy=True)
        if differential is not None:
            self.differential = np.asarray(differential, dtype=bool).copy()
        if atol is not None:
            self.atol = np.broadcast_to(np.asarray(atol, dtype=float), self.y.shape).copy()
        if self.differential.shape != self.y.shape or self.atol.shape != self.y.shape:
            raise IntegrationError("Maske/Toleranzen passen nicht zur Zustandsgröße")
        self.history.reset(self.t, self.y)
        self.order = 1
        self.steps_at_order = 0
        self.consecutive_rejects = 0

    def seed_history(self, ts: Sequence[float], ys: Sequence[np.ndarray], yp: np.ndarray):
        """Setzt eine Historie (ältester Zustand zuerst); der letzte Eintrag wird aktuell"""
        self.history.ts.clear()
        self.history.ys.clear()
        for t, y in zip(ts, ys):
            self.history.push(t, y)
        self.t = float(ts[-1])
        self.y = np.array(ys[-1], dtype=float, copy=True)
        self.yp = np.array(yp, dtype=float, copy=True)

    def weights(self, y: np.ndarray) -> np.ndarray:
        return error_weights(y, self.options.rtol, self.atol)

    # Anfangswerte

    def make_consistent(self, algebraic_rates: bool = True) -> NewtonResult:
        """
        Konsistenzlösung bei festen differentiellen Komponenten

        Unbekannt sind die algebraischen Komponenten von y und die
        differentiellen von ẏ. Mit algebraic_rates wird zusätzlich ẏ der
        algebraischen Komponenten aus einer zweiten Konsistenzlösung bei
        t + δ, δ = h_init/100, bestimmt; sonst sagt der erste Prädiktor
        sie konstant voraus.

        Raises:
            ConvergenceError: keine konsistenten Anfangswerte gefunden
        """
        t0 = self.t
        y, yp, result = self._consistent(t0, self.y, self.yp)
        alg = ~self.differential
        if algebraic_rates and np.any(alg):
            delta = 0.01 * self.options.h_init
            y_next, _, _ = self._consistent(t0 + delta, y + delta * yp, yp)
            yp = yp.copy()
            yp[alg] = (y_next[alg] - y[alg]) / delta
        self.t, self.y, self.yp = t0, y, yp
        self.history.reset(self.t, self.y)
        logger.info(f"Konsistente Anfangswerte bei t={self.t:.4f} s "
                    f"({result.iterations} Newton-Iterationen)")
        return result

    def _consistent(self, t: float, y0: np.ndarray, yp0: np.ndarray):
        diff = self.differential
        alg = ~diff
        y_fixed = np.array(y0, dtype=float, copy=True)
        yp_fixed = np.array(yp0, dtype=float, copy=True)

        def unpack(z):
            y = y_fixed.copy()
            yp = yp_fixed.copy()
            y[alg] = z[alg]
            yp[diff] = z[diff]
            return y, yp

        def residual(z):
            y, yp = unpack(z)
            return self.fun(t, y, yp)

        z0 = np.where(diff, yp_fixed, y_fixed)
        preconditioner = None
        jvp = None
        if self.linearize is not None:
            lin = self.linearize(t, y_fixed, yp_fixed, 1.0)
            preconditioner = lin.preconditioner
            if lin.residual is not None:
                frozen = lin.residual
                jvp = finite_difference_jvp(lambda z: frozen(t, *unpack(z)))

        weights = self.weights(z0)
        result = newton_solve(residual, z0, replace(self.options.newton,
                                                    maxiter=4 * self.options.newton.maxiter),
                              weights=weights, preconditioner=preconditioner, jvp=jvp)
        y, yp = unpack(result.y)
        return y, yp, result

    # Schritt

    def _predict(self, t_new: float, order: int) -> np.ndarray:
        if len(self.history) == 1:
            return self.y + (t_new - self.t) * self.yp
        return self.history.extrapolate(t_new, order + 1)

    def _error_factor(self, t_new: float, order: int) -> float:
        """Fehlerkonstante h/(t_new − t_{n−q}) des Prädiktor-Korrektor-Vergleichs"""
        n_points = min(order + 1, len(self.history))
        if len(self.history) == 1:
            return 0.5
        return (t_new - self.history.ts[0]) / (t_new - self.history.ts[n_points - 1])

    def _derivative_error(self, k: int) -> Optional[float]:
        """E_k = h^{k+1}‖y^{(k+1)}‖/(k+1) aus den neuesten k+2 Zuständen"""
        if k < 1 or len(self.history) < k + 2:
            return None
        ts = self.history.ts[:k + 2]
        c = fornberg_weights(ts, ts[0], k + 1)[:, k + 1]
        derivative = np.tensordot(c, np.array(self.history.ys[:k + 2]), axes=1)
        h = ts[0] - ts[1]
        return h ** (k + 1) * weighted_rms_norm(derivative, self.weights(self.y)) / (k + 1)

    def _attempt(self, h: float, order: int):
        t_new = self.t + h
        y_pred = self._predict(t_new, order)
        c = self.history.coefficients(t_new, order)
        rest = np.tensordot(c[1:], np.array(self.history.ys[:order]), axes=1)
        shift = c[0]

        def residual(y):
            return self.fun(t_new, y, shift * y + rest)

        preconditioner = None
        jvp = None
        if self.linearize is not None:
            lin = self.linearize(t_new, y_pred, shift * y_pred + rest, shift)
            preconditioner = lin.preconditioner
            if lin.residual is not None:
                frozen = lin.residual
                jvp = finite_difference_jvp(lambda y: frozen(t_new, y, shift * y + rest))

        weights = self.weights(y_pred)
        result = newton_solve(residual, y_pred, self.options.newton, weights=weights,
                              preconditioner=preconditioner, jvp=jvp)
        err = self._error_factor(t_new, order) * weighted_rms_norm(result.y - y_pred, weights)
        return t_new, result, shift * result.y + rest, err

    def step(self, t_stop: Optional[float] = None) -> StepRecord:
        """
        Führt einen angenommenen Schritt aus

        Abgelehnte Versuche lassen die Historie unverändert; nach
        Newton- oder Geometriefehlern wird h geviertelt.

        Raises:
            IntegrationError: h < h_min
        """
        ctrl = self.options.controller
        while True:
            h = min(self.h, ctrl.h_max)
            if t_stop is not None and self.t + h > t_stop:
                h = t_stop - self.t
            if h < ctrl.h_min:
                raise IntegrationError(f"Schrittweite {h:.3e} s unter h_min={ctrl.h_min:.1e} s "
                                       f"bei t={self.t:.6f} s")

            order = self.order
            if self.options.fixed_order is not None:
                order = self.options.fixed_order
            order = max(1, min(order, len(self.history)))

            try:
                t_new, result, yp_new, err = self._attempt(h, order)
            except (ConvergenceError, GeometryError) as e:
                self._reject(h, order, 0, np.inf, np.inf)
                logger.warning(f"Schritt bei t={self.t:.6f} s, h={h:.3e} s verworfen: {e}")
                if self.options.fixed_step:
                    raise IntegrationError(f"Schritt mit fester Schrittweite fehlgeschlagen: {e}") from e
                self.h = h * ctrl.min_factor
                continue

            if self.options.fixed_step:
                decision = StepDecision(True, order, h)
            else:
                decision = step_controller(err, order, h, ctrl,
                                           steps_at_order=self.steps_at_order)

            if not decision.accept:
                self._reject(h, order, result.iterations, result.residual_norm, err)
                logger.debug(f"Schritt abgelehnt: t={self.t:.6f} s, h={h:.3e} s, "
                             f"q={order}, Fehler {err:.3f}")
                self.h = decision.h
                continue

            return self._accept(t_new, h, order, result, yp_new, err)

    def _reject(self, h, order, iterations, residual_norm, err):
        self.n_rejected += 1
        self.consecutive_rejects += 1
        self.steps.append(StepRecord(self.t, h, order, iterations, float(residual_norm),
                                     float(err), False))
        if self.consecutive_rejects >= MAX_CONSECUTIVE_REJECTS and self.order > 1:
            logger.info(f"{self.consecutive_rejects} Ablehnungen in Folge, Ordnung auf 1")
            self.order = 1
            self.steps_at_order = 0

    def _accept(self, t_new, h, order, result: NewtonResult, yp_new, err) -> StepRecord:
        self.history.push(t_new, result.y)
        self.t, self.y, self.yp = t_new, result.y, yp_new
        self.n_accepted += 1
        self.consecutive_rejects = 0
        self.steps_at_order = self.steps_at_order + 1 if order == self.order else 1
        self.order = order

        record = StepRecord(t_new, h, order, result.iterations, result.residual_norm,
                            float(err), True)
        self.steps.append(record)

        if not self.options.fixed_step:
            ctrl = self.options.controller
            decision = step_controller(err, order, h, ctrl,
                                       err_lower=self._derivative_error(order - 1),
                                       err_higher=self._derivative_error(order + 1),
                                       steps_at_order=self.steps_at_order)
            new_order = decision.order
            if self.options.fixed_order is not None:
                new_order = self.options.fixed_order
            if new_order != self.order:
                logger.debug(f"Ordnungswechsel {self.order} → {new_order} bei t={t_new:.6f} s")
                self.order = new_order
                self.steps_at_order = 0
            self.h = decision.h
        return record

    def integrate(self, t_end: float, callback: Optional[Callable[[StepRecord], None]] = None):
        """Integriert bis t_end; callback nach jedem angenommenen Schritt"""
        while self.t < t_end - 1e-12 * max(1.0, abs(t_end)):
            record = self.step(t_stop=t_end)
            if callback is not None:
                callback(record)
        return self.y


def backward_euler_step(fun: DaeFunction, t: float, y: np.ndarray, h: float,
                        params: Optional[NewtonParams] = None) -> np.ndarray:
    """Einzelner impliziter Euler-Schritt, Hilfsfunktion für Startwerte und Tests"""
    params = params or NewtonParams(tol=1e-12, maxiter=20, gmres_rtol=1e-12)

    def residual(y_new):
        return fun(t + h, y_new, (y_new - y) / h)

    return newton_solve(residual, y, params).y


def order_of_accuracy(errors: Sequence[float], hs: Sequence[float]) -> float:
    """Mittlere Konvergenzrate log(e1/e2)/log(h1/h2) einer Halbierungsstudie"""
    rates = [math.log(errors[i] / errors[i + 1]) / math.log(hs[i] / hs[i + 1])
             for i in range(len(errors) - 1)]
    return float(np.mean(rates))
