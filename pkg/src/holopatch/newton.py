"""Newton-type iteration for maps with a bounded right inverse of the derivative.

If ``Phi'(x) u = g`` is solvable with ``||u|| <= C ||g||`` throughout the
ball ``B(p, r)`` and ``Phi'`` varies by at most ``1/(2C)`` there, then every
target within ``r/(2C)`` of ``Phi(p)`` is hit from inside the ball.  The
solver below runs ``x <- x + solve(x, g - Phi(x))``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

log = logging.getLogger(__name__)


class NewtonDivergence(RuntimeError):
    pass


class BoundViolation(RuntimeError):
    pass


def _sup(x) -> float:
    a = np.asarray(x)
    return float(np.abs(a).max()) if a.size else 0.0


@dataclass
class OperatorProblem:
    """Map, right-inverse solver and ball data.

    ``derivative_solve(x, rhs)`` returns ``u`` with ``Phi'(x) u = rhs``;
    ``bound`` is the constant C in ``||u|| <= C ||rhs||``.
    """

    evaluate: Callable
    derivative_solve: Callable
    center: object
    radius: float
    bound: float
    norm: Callable = _sup
    residual_norm: Callable = _sup
    add: Callable = staticmethod(lambda x, u: x + u)
    sub: Callable = staticmethod(lambda a, b: a - b)
    linear: bool = False

    @property
    def lipschitz_half_bound(self) -> float:
        return 1.0 / (2.0 * self.bound)

    @property
    def guaranteed_radius(self) -> float:
        # an affine map is solved in one step of size <= C ||r||
        return self.radius / self.bound if self.linear else self.radius / (2.0 * self.bound)


@dataclass
class NewtonResult:
    x: object
    iterations: int
    residuals: list = field(default_factory=list)
    guaranteed: bool = True
    in_ball: bool = True
    max_step_distance: float = 0.0


def solve_surjective(prob: OperatorProblem, target, tol: float = 1e-10, max_iters: int = 50,
                     mode: str = "newton", bound_slack: float = 1e-9) -> NewtonResult:
    """Solve ``Phi(x) = target`` starting from the ball centre.

    ``mode='newton'`` re-solves at the current iterate; ``mode='frozen'``
    always uses the right inverse at the centre.
    """
    if mode not in ("newton", "frozen"):
        raise ValueError(f"unknown mode {mode!r}")
    x = prob.center
    r = prob.sub(target, prob.evaluate(x))
    res = prob.residual_norm(r)
    guaranteed = res < prob.guaranteed_radius
    if not guaranteed:
        log.warning("target is %.3g from Phi(p), outside the guaranteed radius %.3g", res,
                    prob.guaranteed_radius)
    residuals = [res]
    slow = 0
    worst = 0.0
    it = 0
    while res > tol:
        if it >= max_iters:
            raise NewtonDivergence(f"no convergence in {max_iters} iterations (residual {res:.3g})")
        base = x if mode == "newton" else prob.center
        u = prob.derivative_solve(base, r)
        un = prob.norm(u)
        if un > prob.bound * res * (1 + bound_slack) + 1e-300:
            raise BoundViolation(f"right inverse returned ||u|| = {un:.3g} > C ||g|| = "
                                 f"{prob.bound * res:.3g}")
        x = prob.add(x, u)
        it += 1
        worst = max(worst, prob.norm(prob.sub(x, prob.center)))
        r = prob.sub(target, prob.evaluate(x))
        new = prob.residual_norm(r)
        slow = slow + 1 if new > 0.5 * res else 0
        residuals.append(new)
        res = new
        if slow >= 5 and res > tol:
            raise NewtonDivergence(f"residual failed to halve in 5 consecutive iterations "
                                   f"(residual {res:.3g})")
    return NewtonResult(x, it, residuals, guaranteed, worst < prob.radius, worst)
