"""Constraint-guaranteeing M-step: log barrier plus primal-dual Newton.

The M-step objective is separable in the four parameters,

    objective(theta) = sum over parameters p of  a log p + b log(1-p),

with the (a, b) pairs taken from SufficientStats. The behavioral conditions
combine into the single inequality c(theta) >= 0 with

    c(theta) = (1-s-g)l0 - (1-g)r.

Instead of maximizing the objective directly (which can land outside the
feasible set), each M-step maximizes objective + mu*log(c) for a decreasing
sequence of barrier weights mu, warm-starting each stage at the previous
solution. A dual value lam tied to the constraint by lam*c = mu turns each
stage into a square root-finding problem: the residual

    F(theta, lam) = [grad objective + lam * grad c,  lam*c - mu]

is driven to zero by damped Newton steps on the exact 5x5 Jacobian. The
damping keeps every iterate strictly feasible (fraction-to-boundary rule on
c and lam, box interiority on theta) and falls back to step halving, then
jittered restarts, when a step fails to reduce the residual. The final
stage's residual at the mu floor is the solution certificate.

The box (0,1)^4 needs no extra barrier terms: the objective's log terms
already blow up at the walls wherever the matching expected counts are
positive. Datasets whose counts vanish (all answers identical, or no
learner answering twice) push a parameter onto the wall, so they are
rejected as degenerate up front.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .baum_welch import DegenerateStatsError
from .core import ParamSet, validate_params
from .data import Dataset
from .estep import SufficientStats, sufficient_stats
from .fitting import ALGORITHM_CONSTRAINED, FitOptions, FitReport

__all__ = [
    "BarrierSchedule",
    "BarrierState",
    "InfeasibleStateError",
    "NewtonConvergenceError",
    "DEFAULT_FEASIBLE_MARGIN",
    "constraint_value",
    "constraint_gradient",
    "objective_value",
    "objective_gradient",
    "objective_hessian_diag",
    "kkt_residual",
    "kkt_jacobian",
    "solve_barrier_subproblem",
    "barrier_continuation",
    "project_feasible",
    "interior_point_m_step",
    "fit_constrained",
]

# Hard interiority box for theta coordinates during Newton iterations.
_THETA_MIN = 1e-12
_THETA_MAX = 1.0 - 1e-12

# Warm starts are pushed at least this far inside the feasible set.
DEFAULT_FEASIBLE_MARGIN = 1e-3

_MAX_RESTARTS = 5
_MAX_STEP_HALVINGS = 45
_JITTER_SCALE = 1e-3
_JITTER_STREAM = 0x1B7  # fixed entropy tag so restarts are deterministic


class InfeasibleStateError(ValueError):
    """A barrier iterate left the strictly feasible region c(theta) > 0."""


class NewtonConvergenceError(RuntimeError):
    """The barrier subproblem failed to reach the residual tolerance."""

    def __init__(self, message: str, *, mu: float, residual_norm: float, restarts: int):
        super().__init__(
            f"{message} (mu={mu:g}, residual max-norm={residual_norm:g}, "
            f"restarts={restarts})"
        )
        self.mu = mu
        self.residual_norm = residual_norm
        self.restarts = restarts


@dataclass(frozen=True)
class BarrierSchedule:
    """Continuation plan for the barrier weight and Newton stop rules.

    The floor stays strictly positive: with an active constraint the Newton
    system degenerates at exactly mu = 0, so the certificate is the KKT
    residual at the floor instead.
    """

    mu_initial: float = 1.0
    decay: float = 0.2
    mu_floor: float = 1e-10
    newton_tolerance: float = 1e-9
    max_newton_steps: int = 200
    fraction_to_boundary: float = 0.995

    def __post_init__(self) -> None:
        if not self.mu_initial > 0:
            raise ValueError("mu_initial must be positive")
        if not 0 < self.decay < 1:
            raise ValueError("decay must be in (0, 1)")
        if not 0 < self.mu_floor < self.mu_initial:
            raise ValueError("mu_floor must satisfy 0 < mu_floor < mu_initial")
        if not self.newton_tolerance > 0:
            raise ValueError("newton_tolerance must be positive")
        if self.max_newton_steps < 1:
            raise ValueError("max_newton_steps must be at least 1")
        if not 0 < self.fraction_to_boundary < 1:
            raise ValueError("fraction_to_boundary must be in (0, 1)")

    def mu_sequence(self) -> list[float]:
        """Strictly decreasing barrier weights, ending exactly at the floor."""

        mus = []
        mu = self.mu_initial
        while mu > self.mu_floor:
            mus.append(mu)
            mu *= self.decay
        mus.append(self.mu_floor)
        return mus

    def to_dict(self) -> dict[str, object]:
        return {
            "mu_initial": self.mu_initial,
            "decay": self.decay,
            "mu_floor": self.mu_floor,
            "newton_tolerance": self.newton_tolerance,
            "max_newton_steps": self.max_newton_steps,
            "fraction_to_boundary": self.fraction_to_boundary,
        }

    @classmethod
    def from_dict(cls, mapping: dict[str, object]) -> "BarrierSchedule":
        known = {
            "mu_initial",
            "decay",
            "mu_floor",
            "newton_tolerance",
            "max_newton_steps",
            "fraction_to_boundary",
        }
        unknown = set(mapping) - known
        if unknown:
            raise ValueError(f"unknown schedule keys: {', '.join(sorted(unknown))}")
        return cls(**{k: mapping[k] for k in known if k in mapping})  # type: ignore[arg-type]


DEFAULT_SCHEDULE = BarrierSchedule()


@dataclass(frozen=True)
class BarrierState:
    """Primal-dual iterate: parameters, constraint multiplier, barrier weight."""

    theta: ParamSet
    dual: float
    mu: float

    def __post_init__(self) -> None:
        if constraint_value(self.theta) <= 0.0:
            raise InfeasibleStateError(
                f"constraint margin must be strictly positive, got "
                f"{constraint_value(self.theta)!r}"
            )
        if self.dual < 0.0:
            raise ValueError("dual value must be non-negative")
        if self.mu < 0.0:
            raise ValueError("mu must be non-negative")


def _vec(theta: ParamSet) -> np.ndarray:
    return np.array(theta.astuple())


def _to_theta(v: np.ndarray) -> ParamSet:
    return ParamSet(l0=float(v[0]), g=float(v[1]), s=float(v[2]), r=float(v[3]))


def _cval(v: np.ndarray) -> float:
    l0, g, s, r = v
    return (1.0 - s - g) * l0 - (1.0 - g) * r


def _cgrad(v: np.ndarray) -> np.ndarray:
    l0, g, s, r = v
    return np.array([1.0 - s - g, r - l0, -l0, g - 1.0])


def constraint_value(theta: ParamSet) -> float:
    """Signed feasibility margin c(theta) = (1-s-g)l0 - (1-g)r."""

    return _cval(_vec(theta))


def constraint_gradient(theta: ParamSet) -> np.ndarray:
    """Gradient of the margin: (1-s-g, r-l0, -l0, g-1)."""

    return _cgrad(_vec(theta))


def objective_value(stats: SufficientStats, theta: ParamSet) -> float:
    """M-step objective (expected complete-data log-likelihood) at theta."""

    pairs = stats.pairs()
    v = _vec(theta)
    return float(np.sum(pairs[:, 0] * np.log(v) + pairs[:, 1] * np.log1p(-v)))


def objective_gradient(stats: SufficientStats, theta: ParamSet) -> np.ndarray:
    """Per-parameter derivative a/p - b/(1-p)."""

    return _qgrad(stats.pairs(), _vec(theta))


def objective_hessian_diag(stats: SufficientStats, theta: ParamSet) -> np.ndarray:
    """Diagonal second derivatives -a/p^2 - b/(1-p)^2; cross terms are zero."""

    return _qhess(stats.pairs(), _vec(theta))


def _qgrad(pairs: np.ndarray, v: np.ndarray) -> np.ndarray:
    return pairs[:, 0] / v - pairs[:, 1] / (1.0 - v)


def _qhess(pairs: np.ndarray, v: np.ndarray) -> np.ndarray:
    return -pairs[:, 0] / v**2 - pairs[:, 1] / (1.0 - v) ** 2


def _residual(pairs: np.ndarray, v: np.ndarray, lam: float, mu: float) -> np.ndarray:
    out = np.empty(5)
    out[:4] = _qgrad(pairs, v) + lam * _cgrad(v)
    out[4] = lam * _cval(v) - mu
    return out


def _jacobian(pairs: np.ndarray, v: np.ndarray, lam: float) -> np.ndarray:
    cg = _cgrad(v)
    J = np.zeros((5, 5))
    J[np.arange(4), np.arange(4)] = _qhess(pairs, v)
    J[0, 1] = J[0, 2] = J[1, 0] = J[2, 0] = -lam
    J[1, 3] = J[3, 1] = lam
    J[:4, 4] = cg
    J[4, :4] = lam * cg
    J[4, 4] = _cval(v)
    return J


def kkt_residual(state: BarrierState, stats: SufficientStats) -> np.ndarray:
    """Five-component optimality residual at a barrier iterate."""

    return _residual(stats.pairs(), _vec(state.theta), state.dual, state.mu)


def kkt_jacobian(state: BarrierState, stats: SufficientStats) -> np.ndarray:
    """Exact Jacobian of the residual with respect to (theta, dual)."""

    return _jacobian(stats.pairs(), _vec(state.theta), state.dual)


class _NewtonStall(Exception):
    """Internal: a Newton step could not make progress."""


def _newton_stage(
    pairs: np.ndarray, v: np.ndarray, lam: float, mu: float, schedule: BarrierSchedule
) -> tuple[np.ndarray, float]:
    """Drive the residual below tolerance at fixed mu; raise _NewtonStall else."""

    tau = schedule.fraction_to_boundary
    F = _residual(pairs, v, lam, mu)
    norm = float(np.max(np.abs(F)))
    for _ in range(schedule.max_newton_steps):
        if norm < schedule.newton_tolerance:
            return v, lam
        J = _jacobian(pairs, v, lam)
        try:
            delta = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            raise _NewtonStall("singular Newton system") from None
        # Fraction-to-boundary: never step more than tau of the way to the
        # dual wall or the coordinate box.
        nu = 1.0
        if delta[4] < 0.0:
            nu = min(nu, tau * lam / -delta[4])
        for i in range(4):
            if delta[i] > 0.0:
                nu = min(nu, tau * (_THETA_MAX - v[i]) / delta[i])
            elif delta[i] < 0.0:
                nu = min(nu, tau * (v[i] - _THETA_MIN) / -delta[i])
        c_here = _cval(v)
        accepted = False
        for _ in range(_MAX_STEP_HALVINGS):
            cand_v = v + nu * delta[:4]
            cand_lam = lam + nu * delta[4]
            if _cval(cand_v) >= (1.0 - tau) * c_here:
                F_cand = _residual(pairs, cand_v, cand_lam, mu)
                cand_norm = float(np.max(np.abs(F_cand)))
                if cand_norm < norm:
                    v, lam, F, norm = cand_v, cand_lam, F_cand, cand_norm
                    accepted = True
                    break
            nu *= 0.5
        if not accepted:
            raise _NewtonStall("residual stopped decreasing")
    raise _NewtonStall("step limit reached")


def _jittered_start(
    v: np.ndarray, mu: float, attempt: int
) -> tuple[np.ndarray, float]:
    """Deterministic perturbed restart point, kept feasible."""

    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence((_JITTER_STREAM, attempt)))
    )
    scale = _JITTER_SCALE
    for _ in range(60):
        cand = np.clip(v + rng.uniform(-scale, scale, 4), 1e-9, 1.0 - 1e-9)
        cand = _project_vec(cand, min(1e-8, max(_cval(v), 1e-12)))
        if _cval(cand) > 0.0:
            return cand, mu / _cval(cand)
        scale *= 0.5
    return v, mu / _cval(v)


def solve_barrier_subproblem(
    stats: SufficientStats, start: BarrierState, schedule: BarrierSchedule | None = None
) -> BarrierState:
    """Solve one fixed-mu stage to the Newton tolerance.

    Retries from jittered feasible points when the iteration stalls or the
    linear system is singular, then reports failure with diagnostics.
    """

    schedule = schedule or DEFAULT_SCHEDULE
    pairs = stats.pairs()
    v = _vec(start.theta)
    lam = start.dual if start.dual > 0.0 else start.mu / _cval(v)
    mu = start.mu
    last_norm = float(np.max(np.abs(_residual(pairs, v, lam, mu))))
    for attempt in range(_MAX_RESTARTS + 1):
        if attempt:
            v_try, lam_try = _jittered_start(_vec(start.theta), mu, attempt)
        else:
            v_try, lam_try = v, lam
        try:
            v_out, lam_out = _newton_stage(pairs, v_try, lam_try, mu, schedule)
        except _NewtonStall as stall:
            last_norm = float(np.max(np.abs(_residual(pairs, v_try, lam_try, mu))))
            last_reason = str(stall)
            continue
        return BarrierState(theta=_to_theta(v_out), dual=float(lam_out), mu=mu)
    raise NewtonConvergenceError(
        f"barrier stage failed: {last_reason}",
        mu=mu,
        residual_norm=last_norm,
        restarts=_MAX_RESTARTS,
    )


def barrier_continuation(
    stats: SufficientStats, theta_start: ParamSet, schedule: BarrierSchedule | None = None
) -> BarrierState:
    """Follow the decreasing-mu path from a strictly feasible start."""

    schedule = schedule or DEFAULT_SCHEDULE
    margin = constraint_value(theta_start)
    if margin <= 0.0:
        raise InfeasibleStateError(
            f"continuation needs a strictly feasible start, margin={margin!r}"
        )
    mus = schedule.mu_sequence()
    state = BarrierState(theta=theta_start, dual=mus[0] / margin, mu=mus[0])
    for mu in mus:
        if state.mu != mu:
            state = BarrierState(theta=state.theta, dual=state.dual, mu=mu)
        state = solve_barrier_subproblem(stats, state, schedule)
    return state


def _project_vec(v: np.ndarray, target: float) -> np.ndarray:
    """Raise the margin to at least ~target by shrinking s, g, then r."""

    l0, g, s, r = (float(x) for x in v)
    if (1.0 - s - g) * l0 - (1.0 - g) * r >= target:
        return v
    target_eff = min(target, l0 / 4.0)
    headroom = 1.0 - s - g
    if headroom * l0 < 2.0 * target_eff:
        needed = 2.0 * target_eff / l0
        shrink = (1.0 - needed) / (s + g)
        s *= shrink
        g *= shrink
        headroom = 1.0 - s - g
    if headroom * l0 - (1.0 - g) * r < target_eff:
        r = (headroom * l0 - target_eff) / (1.0 - g)
    return np.array([l0, g, s, r])


def project_feasible(
    theta: ParamSet, target: float = DEFAULT_FEASIBLE_MARGIN
) -> tuple[ParamSet, dict[str, object] | None]:
    """Return a parameter vector with margin at least ~target.

    The transit rate r enters the margin linearly with a negative
    coefficient, so it is scaled down first; when even r -> 0 cannot reach
    the target (s + g too close to 1, which random inits hit often), s and
    g are shrunk proportionally beforehand. Returns the adjusted vector and
    a change record, or (theta, None) when theta already clears the target.
    """

    v = _vec(theta)
    before = _cval(v)
    projected = _project_vec(v, target)
    if projected is v:
        return theta, None
    adjusted = _to_theta(projected)
    info: dict[str, object] = {
        "margin_before": before,
        "margin_after": constraint_value(adjusted),
        "from": theta.to_dict(),
        "to": adjusted.to_dict(),
    }
    return adjusted, info


def _check_estimable(stats: SufficientStats) -> None:
    """Reject expected counts that put the maximizer on the coordinate box."""

    for name, (a, b) in zip(("guess", "slip", "transit"), stats.pairs()[1:]):
        if a + b == 0.0:
            raise DegenerateStatsError(
                f"cannot update {name!r}: expected-count denominator is zero"
            )
        if a == 0.0 or b == 0.0:
            raise DegenerateStatsError(
                f"cannot update {name!r}: one-sided expected counts put the "
                f"maximizer on the boundary"
            )


def _constrained_m_step(
    stats: SufficientStats, theta_star: ParamSet, schedule: BarrierSchedule
) -> tuple[BarrierState, dict[str, object] | None]:
    _check_estimable(stats)
    start, adjustment = project_feasible(theta_star)
    final = barrier_continuation(stats, start, schedule)
    star_margin = constraint_value(theta_star)
    if star_margin > 0.0:
        # The barrier gap at the mu floor is below 1e-10, so any real drop
        # means the solver landed on the wrong point.
        drop = objective_value(stats, final.theta) - objective_value(stats, theta_star)
        if drop < -1e-9:
            residual = float(np.max(np.abs(kkt_residual(final, stats))))
            raise NewtonConvergenceError(
                "constrained M-step decreased the EM objective",
                mu=final.mu,
                residual_norm=residual,
                restarts=0,
            )
    return final, adjustment


def interior_point_m_step(
    stats: SufficientStats, theta_star: ParamSet, schedule: BarrierSchedule | None = None
) -> ParamSet:
    """Maximize the M-step objective subject to c(theta) >= 0.

    Runs the barrier continuation from (a feasible version of) theta_star
    and returns the mu-floor solution, which satisfies the constraint
    strictly and never scores below theta_star on the objective.
    """

    final, _ = _constrained_m_step(stats, theta_star, schedule or DEFAULT_SCHEDULE)
    return final.theta


def fit_constrained(
    dataset: Dataset | Iterable[object],
    init: ParamSet,
    options: FitOptions | None = None,
    schedule: BarrierSchedule | None = None,
) -> FitReport:
    """EM loop whose M-step is the barrier solver, so every iterate and the
    final estimate satisfy the behavioral constraints.

    Infeasible or nearly-infeasible warm starts are projected inward before
    each M-step; genuine restorations (margin <= 0, typically only the
    initial guess) are recorded in the diagnostics.
    """

    opts = options or FitOptions()
    sched = schedule or DEFAULT_SCHEDULE
    theta = init
    stats = sufficient_stats(theta, dataset)
    trace = [stats.log_likelihood]
    restorations: list[dict[str, object]] = []
    warm_start_adjustments = 0
    iterations = 0
    converged = False
    final_state: BarrierState | None = None
    solved_stats: SufficientStats | None = None
    for _ in range(opts.max_iterations):
        final_state, adjustment = _constrained_m_step(stats, theta, sched)
        solved_stats = stats
        theta_new = final_state.theta
        iterations += 1
        if adjustment is not None:
            warm_start_adjustments += 1
            if adjustment["margin_before"] <= 0.0:
                restorations.append({"iteration": iterations, **adjustment})
        delta = max(
            abs(new - old) for new, old in zip(theta_new.astuple(), theta.astuple())
        )
        theta = theta_new
        stats = sufficient_stats(theta, dataset)
        trace.append(stats.log_likelihood)
        if abs(trace[-1] - trace[-2]) < opts.loglik_tolerance or delta < opts.param_tolerance:
            converged = True
            break
    diagnostics: dict[str, object] = {
        "restorations": restorations,
        "warm_start_adjustments": warm_start_adjustments,
        "mu_floor": sched.mu_floor,
    }
    if final_state is not None and solved_stats is not None:
        diagnostics["final_kkt_residual"] = float(
            np.max(np.abs(kkt_residual(final_state, solved_stats)))
        )
        diagnostics["final_dual"] = final_state.dual
    return FitReport(
        algorithm=ALGORITHM_CONSTRAINED,
        theta_hat=theta,
        initial_theta=init,
        loglik_trace=tuple(trace),
        iterations=iterations,
        converged=converged,
        constraints=validate_params(theta),
        diagnostics=diagnostics,
    )
