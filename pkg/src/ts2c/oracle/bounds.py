"""Machine checks of the intervention-based RL inequalities on finite MDPs.

Every check computes both sides with exact quantities (linear solves, no
sampling) and reports the slack oriented so that ``slack >= 0`` means the
inequality holds.
"""

from dataclasses import dataclass, field

import numpy as np

from ts2c.errors import DomainError, ParameterError
from ts2c.oracle import tabular as tab

HOLD_TOL = 1e-8
BOUND_IDS = ("lemma31", "thm32", "thm33", "thm34", "cor35", "thmA4")


@dataclass
class BoundReport:
    bound_id: str
    lhs: float
    rhs: float
    slack: float
    beta: float
    aux: dict = field(default_factory=dict)
    holds: bool = False
    vacuous: bool = False

    def __post_init__(self):
        self.holds = bool(self.slack >= -HOLD_TOL)

    @property
    def status(self) -> str:
        if self.vacuous:
            return "vacuous"
        return "pass" if self.holds else "fail"

    def to_record(self) -> dict:
        return {
            "bound_id": self.bound_id,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "beta": self.beta,
            "holds": self.holds,
            "status": self.status,
            "aux": self.aux,
        }


def _report(bound_id, lhs, rhs, beta, aux, scale):
    rhs = rhs * scale
    return BoundReport(bound_id, float(lhs), float(rhs), float(rhs - lhs), float(beta), aux)


def _expect(d, x):
    return float(d @ x)


def verify_bound(bound_id, mdp, pit, pis, params=None) -> BoundReport:
    """Check one inequality on (mdp, teacher, student).

    params:
        eps: intervention threshold (thm33: action map; thm32/thm34/thmA4/cor35: value map).
        eta: cost weight for cor35.
        T: optional InterventionMap overriding the value map for thm32/thmA4.
        rhs_scale: multiplies the right-hand side; test hook for mutation checks.

    The entropy bound is reported vacuous when H < eps, and also when the
    student gives zero probability to a teacher action (the map is undefined).
    """
    params = dict(params or {})
    if bound_id not in BOUND_IDS:
        raise ParameterError(f"unknown bound_id {bound_id!r}; expected one of {BOUND_IDS}")
    scale = float(params.get("rhs_scale", 1.0))
    g = mdp.gamma
    delta = tab.discrepancy(pit, pis)

    if bound_id == "lemma31":
        d_t = tab.occupancy(mdp, pit)
        d_s = tab.occupancy(mdp, pis)
        lhs = np.abs(d_t - d_s).sum()
        rhs = g / (1 - g) * _expect(d_t, delta)
        return _report(bound_id, lhs, rhs, 0.0, {}, scale)

    eps = float(params["eps"])

    if bound_id == "thm33":
        try:
            T = tab.action_intervention(mdp, pit, pis, eps)
        except DomainError as exc:
            # the log-likelihood map is undefined, so the bound says nothing here
            nan = float("nan")
            aux = {"eps": eps, "undefined": str(exc), "states": exc.states}
            return BoundReport("thm33", nan, nan, nan, nan, aux, vacuous=True)
        return _check_thm33(mdp, pit, pis, T, eps, scale)

    if bound_id == "cor35":
        eta = float(params["eta"])
        r_hat = mdp.reward - eta * mdp.cost
        T = params.get("T") or tab.value_intervention(mdp, pit, pis, eps, reward=r_hat)
        pib = tab.mix_policy(pit, pis, T)
        beta = tab.weighted_intervention_rate(mdp, pit, pis, T)
        C_b, C_t = tab.discounted_cost(mdp, pib), tab.discounted_cost(mdp, pit)
        J_b, J_t = tab.policy_return(mdp, pib), tab.policy_return(mdp, pit)
        rhs = C_t + (1 - beta) * eps / (eta * (1 - g)) + (J_b - J_t) / eta
        mass = _expect(tab.occupancy(mdp, pib), 1 - T.flags)
        aux = {
            "eta": eta,
            "eps": eps,
            "C_b": C_b,
            "C_t": C_t,
            "J_b": J_b,
            "J_t": J_t,
            "non_intervention_mass": mass,
            "slack_unweighted": C_t + eps / (eta * (1 - g)) + (J_b - J_t) / eta - C_b,
            "slack_mass_form": C_t + mass * eps / (eta * (1 - g)) + (J_b - J_t) / eta - C_b,
            "n_intervened": int(T.flags.sum()),
        }
        return _report(bound_id, C_b, rhs, beta, aux, scale)

    T = params.get("T")
    if T is None:
        T = tab.value_intervention(mdp, pit, pis, eps)
    pib = tab.mix_policy(pit, pis, T)
    d_b = tab.occupancy(mdp, pib)
    beta = tab.weighted_intervention_rate(mdp, pit, pis, T)
    aux = {"eps": eps, "n_intervened": int(T.flags.sum())}

    if bound_id == "thm32":
        d_s = tab.occupancy(mdp, pis)
        lhs = np.abs(d_b - d_s).sum()
        rhs = beta * g / (1 - g) * _expect(d_b, delta)
        return _report(bound_id, lhs, rhs, beta, aux, scale)

    J_b, J_t = tab.policy_return(mdp, pib), tab.policy_return(mdp, pit)

    if bound_id == "thm34":
        # J_b >= J_t - (1-beta) eps/(1-gamma), written as deficit <= allowance
        mass = _expect(d_b, 1 - T.flags)
        aux.update(
            J_b=J_b,
            J_t=J_t,
            non_intervention_mass=mass,
            slack_unweighted=eps / (1 - g) - (J_t - J_b),
            slack_mass_form=mass * eps / (1 - g) - (J_t - J_b),
        )
        return _report(bound_id, J_t - J_b, (1 - beta) * eps / (1 - g), beta, aux, scale)

    # thmA4
    pistar = tab.optimal_policy(mdp)
    J_star = tab.policy_return(mdp, pistar)
    J_s = tab.policy_return(mdp, pis)
    rhs = beta * mdp.r_max / (1 - g) ** 2 * _expect(d_b, delta) + abs(J_star - J_b)
    aux.update(J_star=J_star, J_s=J_s, J_b=J_b, r_max=mdp.r_max)
    return _report(bound_id, abs(J_star - J_s), rhs, beta, aux, scale)


def _check_thm33(mdp, pit, pis, T, eps, scale):
    g = mdp.gamma
    pib = tab.mix_policy(pit, pis, T)
    d_b = tab.occupancy(mdp, pib)
    beta = tab.weighted_intervention_rate(mdp, pit, pis, T)
    H = _expect(d_b, tab.entropy(pit))
    J_b, J_t = tab.policy_return(mdp, pib), tab.policy_return(mdp, pit)
    aux = {"eps": eps, "H": H, "J_b": J_b, "J_t": J_t, "n_intervened": int(T.flags.sum())}
    if H - eps < 0:
        nan = float("nan")
        rep = BoundReport("thm33", abs(J_b - J_t), nan, nan, beta, aux, vacuous=True)
        return rep
    width = np.sqrt(2.0) * (1 - beta) * mdp.r_max / (1 - g) ** 2 * np.sqrt(H - eps) * scale
    aux["slack_upper"] = float(J_t + width - J_b)
    aux["slack_lower"] = float(J_b - (J_t - width))
    # |J_b - J_t| <= width covers both the upper and the lower inequality
    return BoundReport("thm33", abs(J_b - J_t), width, width - abs(J_b - J_t), beta, aux)
