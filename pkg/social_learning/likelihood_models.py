"""
Hypothesis sets, per-agent Bernoulli likelihoods and their KL divergences
"""
import logging
from dataclasses import dataclass, replace
from typing import Any, Dict, Iterable, List, Mapping, Optional

import numpy as np
from scipy.special import rel_entr

from social_learning.errors import ModelSamplingError

logger = logging.getLogger("likelihood_models")

EPS_MIN = 0.05
REFERENCE_P = 0.3
REFERENCE_Q = 0.7
INFLUENTIAL_SIGMA2 = 0.5
LESS_INFLUENTIAL_SIGMA2 = 0.2
BASE_SIGMA2 = 0.05
MAX_REJECTIONS = 1000
MAX_REGENERATIONS = 100


@dataclass(frozen=True)
class HypothesisSet:
    count: int
    reference_index: int = 0
    true_index: int = 0

    def __post_init__(self):
        if self.count < 2:
            raise ValueError(f"need at least 2 hypotheses, got {self.count}")
        for name in ("reference_index", "true_index"):
            index = getattr(self, name)
            if not 0 <= index < self.count:
                raise ValueError(f"{name}={index} outside [0, {self.count})")

    def non_reference(self) -> np.ndarray:
        """Hypothesis indices in column order of the log-ratio matrices"""
        return np.array([h for h in range(self.count) if h != self.reference_index])

    def column_of(self, hypothesis: int) -> int:
        """Column holding hypothesis in an N x (H-1) log-ratio matrix"""
        if hypothesis == self.reference_index:
            raise ValueError("the reference hypothesis has no log-ratio column")
        return hypothesis if hypothesis < self.reference_index else hypothesis - 1


@dataclass(frozen=True)
class BernoulliLikelihood:
    """p[k, h] is the probability that agent k observes 0 under hypothesis h"""
    p: np.ndarray
    hypotheses: HypothesisSet

    def __post_init__(self):
        p = np.array(self.p, dtype=float, copy=True)
        if p.ndim != 2 or p.shape[1] != self.hypotheses.count:
            raise ValueError(f"p must be N x {self.hypotheses.count}, got {p.shape}")
        if np.any(p < EPS_MIN - 1e-12) or np.any(p > 1.0 - EPS_MIN + 1e-12):
            raise ValueError(f"likelihood parameters must lie in [{EPS_MIN}, {1 - EPS_MIN}]")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def n_agents(self) -> int:
        return self.p.shape[0]

    @property
    def n_hypotheses(self) -> int:
        return self.hypotheses.count

    def with_true_state(self, true_index: int) -> "BernoulliLikelihood":
        return replace(self, hypotheses=replace(self.hypotheses, true_index=true_index))

    def likelihood(self, obs: np.ndarray) -> np.ndarray:
        """N x H matrix of L_k(obs_k | h)"""
        obs = np.asarray(obs).reshape(-1, 1)
        return np.where(obs == 0, self.p, 1.0 - self.p)


def sigma2_levels(n: int, influential: Iterable[int], sigma2: Optional[Mapping[int, float]] = None,
                  influential_sigma2: float = INFLUENTIAL_SIGMA2,
                  base_sigma2: float = BASE_SIGMA2) -> np.ndarray:
    """Per-agent perturbation variance: explicit map first, then influential/base levels"""
    influential = set(influential)
    levels = np.array([influential_sigma2 if k in influential else base_sigma2 for k in range(n)])
    for k, value in (sigma2 or {}).items():
        levels[int(k)] = value
    return levels


def generate_models(n: int, H: int, influential: Iterable[int] = (),
                    sigma2: Optional[Mapping[int, float]] = None, seed: Optional[int] = None,
                    true_index: int = 0, reference_index: int = 0,
                    influential_sigma2: float = INFLUENTIAL_SIGMA2, base_sigma2: float = BASE_SIGMA2,
                    max_rejections: int = MAX_REJECTIONS) -> BernoulliLikelihood:
    """
    Draw Bernoulli likelihoods by Gaussian perturbation of the reference pair (0.3, 0.7).

    Draw order: agents in index order, hypotheses in index order; the reference
    hypothesis consumes no draws. Each attempt takes two standard normals
    (eps_p, eps_q) from numpy.random.default_rng(seed) and forms
    (0.3 + s eps_p, 0.7 + s eps_q) normalized to sum 1, with s the agent's
    sigma^2. Attempts with a nonpositive component or p outside
    [0.05, 0.95] are rejected.

    Args:
        n: Number of agents
        H: Number of hypotheses
        influential: Agents using influential_sigma2
        sigma2: Explicit per-agent sigma^2, overriding the influential/base levels
        seed: Seed for numpy.random.default_rng
        true_index: Index of the true hypothesis
        reference_index: Index of the reference hypothesis
        influential_sigma2: sigma^2 for influential agents
        base_sigma2: sigma^2 for the remaining agents
        max_rejections: Rejection budget per (agent, hypothesis)

    Returns:
        The generated BernoulliLikelihood
    """
    hypotheses = HypothesisSet(H, reference_index=reference_index, true_index=true_index)
    levels = sigma2_levels(n, influential, sigma2, influential_sigma2, base_sigma2)
    if np.any(levels <= 0):
        raise ValueError("sigma2 must be positive for every agent")

    rng = np.random.default_rng(seed)
    p = np.full((n, H), REFERENCE_P)
    for k in range(n):
        for h in range(H):
            if h == reference_index:
                continue
            for _ in range(max_rejections):
                eps_p, eps_q = rng.standard_normal(2)
                raw_p = REFERENCE_P + levels[k] * eps_p
                raw_q = REFERENCE_Q + levels[k] * eps_q
                if raw_p <= 0 or raw_q <= 0:
                    continue
                candidate = raw_p / (raw_p + raw_q)
                if EPS_MIN <= candidate <= 1.0 - EPS_MIN:
                    p[k, h] = candidate
                    break
            else:
                raise ModelSamplingError(f"agent {k}, hypothesis {h}: {max_rejections} rejections")

    return BernoulliLikelihood(p, hypotheses)


def bernoulli_kl(p: np.ndarray, p_other: np.ndarray) -> np.ndarray:
    return rel_entr(p, p_other) + rel_entr(1.0 - p, 1.0 - p_other)


def kl_divergence(models: BernoulliLikelihood, k: int, theta_a: int, theta_b: int) -> float:
    """D_KL(L_k(theta_a) || L_k(theta_b)) between two Bernoulli likelihoods of agent k"""
    return float(bernoulli_kl(models.p[k, theta_a], models.p[k, theta_b]))


def kl_matrix(models: BernoulliLikelihood, theta_star: int) -> np.ndarray:
    """N x H table of D_KL(L_k(theta_star) || L_k(h))"""
    return bernoulli_kl(models.p[:, [theta_star]], models.p)


def sample_observation(models: BernoulliLikelihood, k: int, theta_true: int,
                       rng: np.random.Generator) -> int:
    """0 with probability p_k(theta_true), otherwise 1"""
    return int(rng.random() >= models.p[k, theta_true])


def sample_observations(models: BernoulliLikelihood, theta_true: int,
                        rng: np.random.Generator) -> np.ndarray:
    """One observation per agent, drawn from one uniform per agent in agent order"""
    return (rng.random(models.n_agents) >= models.p[:, theta_true]).astype(int)


def llr_matrix(models: BernoulliLikelihood, obs: np.ndarray, reference: Optional[int] = None) -> np.ndarray:
    """N x (H-1) log-likelihood ratios ln L_k(obs|theta_0) - ln L_k(obs|theta_j)"""
    reference = models.hypotheses.reference_index if reference is None else reference
    log_lik = np.log(models.likelihood(obs))
    others = [h for h in range(models.n_hypotheses) if h != reference]
    return log_lik[:, [reference]] - log_lik[:, others]


def llr_row(models: BernoulliLikelihood, k: int, obs: int, reference: Optional[int] = None) -> np.ndarray:
    """Length H-1 log-likelihood ratio vector of agent k for one observation"""
    row_models = BernoulliLikelihood(models.p[[k]], models.hypotheses)
    return llr_matrix(row_models, np.array([obs]), reference)[0]


def llr_bound(models: BernoulliLikelihood) -> float:
    """Largest absolute log-likelihood ratio the models can produce"""
    log_p = np.log(models.p)
    log_q = np.log(1.0 - models.p)
    return float(max(np.ptp(log_p, axis=1).max(), np.ptp(log_q, axis=1).max()))


def expected_llr_matrix(models: BernoulliLikelihood, theta_star: Optional[int] = None,
                        reference: Optional[int] = None) -> np.ndarray:
    """
    Closed-form expected log-likelihood ratio matrix under the true hypothesis

    Args:
        models: Likelihood models
        theta_star: True hypothesis (defaults to the models' true index)
        reference: Reference hypothesis (defaults to the models' reference index)

    Returns:
        N x (H-1) matrix with entries D_KL(theta_star||theta_j) - D_KL(theta_star||theta_0)
    """
    theta_star = models.hypotheses.true_index if theta_star is None else theta_star
    reference = models.hypotheses.reference_index if reference is None else reference
    kl = kl_matrix(models, theta_star)
    others = [h for h in range(models.n_hypotheses) if h != reference]
    return kl[:, others] - kl[:, [reference]]


def indistinguishable_hypotheses(models: BernoulliLikelihood, theta_star: Optional[int] = None) -> List[int]:
    """Wrong hypotheses that no agent can tell apart from theta_star"""
    theta_star = models.hypotheses.true_index if theta_star is None else theta_star
    kl = kl_matrix(models, theta_star)
    return [h for h in range(models.n_hypotheses) if h != theta_star and not np.any(kl[:, h] > 0)]


def check_identifiability(models: BernoulliLikelihood, theta_star: Optional[int] = None) -> None:
    """Raise unless every wrong hypothesis is distinguishable by at least one agent"""
    missing = indistinguishable_hypotheses(models, theta_star)
    if missing:
        raise ModelSamplingError(f"hypotheses {missing} are indistinguishable from the true state")


def generate_identifiable_models(n: int, H: int, influential: Iterable[int] = (), seed: Optional[int] = None,
                                 max_attempts: int = MAX_REGENERATIONS, **kwargs) -> BernoulliLikelihood:
    """
    generate_models, redrawn until every wrong hypothesis is distinguishable

    The first attempt uses seed itself; later attempts use seeds spawned from it.

    Raises:
        ModelSamplingError: After max_attempts identifiability violations
    """
    spawner = np.random.SeedSequence(seed)
    attempt_seed = seed
    for attempt in range(max_attempts):
        models = generate_models(n, H, influential, seed=attempt_seed, **kwargs)
        missing = indistinguishable_hypotheses(models)
        if not missing:
            return models
        logger.warning(f"Attempt {attempt + 1}: hypotheses {missing} indistinguishable, regenerating models")
        attempt_seed = int(spawner.spawn(1)[0].generate_state(1)[0])
    raise ModelSamplingError(f"no identifiable models after {max_attempts} attempts")


def models_to_json(models: BernoulliLikelihood) -> Dict[str, Any]:
    return {
        "H": models.n_hypotheses,
        "theta_star": models.hypotheses.true_index,
        "theta_ref": models.hypotheses.reference_index,
        "p": models.p.tolist(),
    }


def models_from_json(payload: Dict[str, Any]) -> BernoulliLikelihood:
    hypotheses = HypothesisSet(int(payload["H"]), reference_index=int(payload["theta_ref"]),
                               true_index=int(payload["theta_star"]))
    return BernoulliLikelihood(np.asarray(payload["p"], dtype=float), hypotheses)
