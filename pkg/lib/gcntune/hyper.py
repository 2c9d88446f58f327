"""Hyperparameter spaces, the sampling distribution P(lambda | eps), its
entropy, and reparameterized sampling.

Every hyperparameter lives in two spaces. Training and sampling happen in the
unconstrained space ``u`` (all of R); the model, DropEdge and the loss see
the constrained value ``lam``:

- dropout_rate, edge_drop_rate: ``lam = 0.9 * sigmoid(u)``
- weight_decay: ``lam = exp(u)``, clamped into [1e-6, 1e-2]

The distribution is uniform over a box ``[mu - sigma, mu + sigma]`` in u
space, which makes weight decay log-uniform and the rates uniform in logit
space.
"""

import logging
from typing import List, Sequence, Tuple

import numpy as np

from gcntune import utils

LOGGER = logging.getLogger(__name__)

DROPOUT_RATE = 'dropout_rate'
EDGE_DROP_RATE = 'edge_drop_rate'
WEIGHT_DECAY = 'weight_decay'

KINDS = (DROPOUT_RATE, EDGE_DROP_RATE, WEIGHT_DECAY)

RATE_SCALE = 0.9
DECAY_BOUNDS = (1e-6, 1e-2)

# Range of u used to draw initial centers and point configurations.
RATE_U_BOUNDS = (-4.0, 4.0)

SIGMA_MIN = 0.01
SIGMA_MAX = 2.0
PERTURB_FACTORS = (0.8, 1.2)


class HyperError(ValueError):
    """Raised for invalid hyperparameter spaces and distributions."""


class HyperDim:
    """One hyperparameter dimension.

    :ivar str name:
    :ivar str kind: One of KINDS.
    :ivar tuple bounds: The constrained range.
    :ivar tuple u_bounds: The unconstrained sampling range.
    :ivar float u_center: Center used to standardize u for the hypernet.
    :ivar float u_scale: Scale used to standardize u for the hypernet.
    """

    def __init__(self, name: str, kind: str):
        if kind not in KINDS:
            raise HyperError("Unknown hyperparameter kind '{}'".format(kind))

        self.name = name
        self.kind = kind

        if kind == WEIGHT_DECAY:
            self.bounds = DECAY_BOUNDS
            self.u_bounds = (float(np.log(DECAY_BOUNDS[0])),
                             float(np.log(DECAY_BOUNDS[1])))
        else:
            self.bounds = (0.0, RATE_SCALE)
            self.u_bounds = RATE_U_BOUNDS

        self.u_center = (self.u_bounds[0] + self.u_bounds[1])/2
        self.u_scale = (self.u_bounds[1] - self.u_bounds[0])/2

    def __repr__(self):
        return 'HyperDim({}, {})'.format(self.name, self.kind)


class HyperSpace:
    """An ordered list of hyperparameter dimensions. For an L layer model
    this is L-1 hidden dropout rates, then the edge drop rate, then the
    weight decay."""

    def __init__(self, dims: Sequence[HyperDim]):
        self.dims = list(dims)
        if not self.dims:
            raise HyperError("A hyperparameter space needs dimensions.")

        self.kinds = np.array([dim.kind for dim in self.dims])
        self.rate_mask = self.kinds != WEIGHT_DECAY
        self.decay_mask = self.kinds == WEIGHT_DECAY
        self.u_low = np.array([dim.u_bounds[0] for dim in self.dims])
        self.u_high = np.array([dim.u_bounds[1] for dim in self.dims])
        self.u_center = np.array([dim.u_center for dim in self.dims])
        self.u_scale = np.array([dim.u_scale for dim in self.dims])

    @classmethod
    def for_layers(cls, num_layers: int) -> 'HyperSpace':
        """The space for an L layer GCN: q = L + 1 dimensions."""

        if num_layers < 2:
            raise HyperError("GCN models need at least 2 layers, got {}."
                             .format(num_layers))

        dims = [HyperDim('dropout_{}'.format(i), DROPOUT_RATE)
                for i in range(num_layers - 1)]
        dims.append(HyperDim('edge_drop', EDGE_DROP_RATE))
        dims.append(HyperDim('weight_decay', WEIGHT_DECAY))
        return cls(dims)

    @property
    def q(self) -> int:
        return len(self.dims)

    @property
    def names(self) -> List[str]:
        return [dim.name for dim in self.dims]

    def index(self, kind: str) -> np.ndarray:
        """Indices of the dimensions of the given kind."""
        return np.flatnonzero(self.kinds == kind)

    @property
    def edge_index(self) -> int:
        return int(self.index(EDGE_DROP_RATE)[0])

    @property
    def decay_index(self) -> int:
        return int(self.index(WEIGHT_DECAY)[0])

    @property
    def dropout_indices(self) -> np.ndarray:
        return self.index(DROPOUT_RATE)

    def draw_u(self, rng: np.random.Generator) -> np.ndarray:
        """Draw u uniformly within the unconstrained sampling bounds."""
        return rng.uniform(self.u_low, self.u_high)

    def __eq__(self, other):
        return (isinstance(other, HyperSpace) and
                [(d.name, d.kind) for d in self.dims] ==
                [(d.name, d.kind) for d in other.dims])

    def __repr__(self):
        return 'HyperSpace({})'.format(', '.join(self.names))


def _sigmoid(u):
    return 1.0 / (1.0 + np.exp(-u))


def constrain(u, space: HyperSpace) -> np.ndarray:
    """Map unconstrained values into each dimension's configured range."""

    u = np.asarray(u, dtype=np.float64)
    if u.shape != (space.q,):
        raise HyperError("Expected {} hyperparameters, got shape {}."
                         .format(space.q, u.shape))

    lam = np.empty_like(u)
    lam[space.rate_mask] = RATE_SCALE * _sigmoid(u[space.rate_mask])
    lam[space.decay_mask] = np.clip(np.exp(u[space.decay_mask]),
                                    *DECAY_BOUNDS)
    return lam


def constrain_grad(u, space: HyperSpace) -> np.ndarray:
    """Elementwise derivative d lam / d u. Zero where the decay clamp
    saturates."""

    u = np.asarray(u, dtype=np.float64)
    grad = np.empty_like(u)

    sig = _sigmoid(u[space.rate_mask])
    grad[space.rate_mask] = RATE_SCALE * sig * (1.0 - sig)

    decay_u = u[space.decay_mask]
    inside = ((decay_u > np.log(DECAY_BOUNDS[0])) &
              (decay_u < np.log(DECAY_BOUNDS[1])))
    grad[space.decay_mask] = np.where(inside, np.exp(decay_u), 0.0)
    return grad


def unconstrain(lam, space: HyperSpace) -> np.ndarray:
    """The inverse of constrain (away from clamp saturation)."""

    lam = np.asarray(lam, dtype=np.float64)
    u = np.empty_like(lam)
    with np.errstate(divide='ignore'):
        rates = lam[space.rate_mask] / RATE_SCALE
        u[space.rate_mask] = np.log(rates) - np.log1p(-rates)
        u[space.decay_mask] = np.log(lam[space.decay_mask])
    return u


class HyperVector:
    """A hyperparameter vector in both spaces.

    :ivar np.ndarray u: Unconstrained values.
    :ivar np.ndarray lam: Constrained values.
    :ivar HyperSpace space:
    """

    __slots__ = ('u', 'lam', 'space')

    def __init__(self, u, space: HyperSpace, lam=None):
        self.u = np.array(u, dtype=np.float64)
        self.space = space
        self.lam = constrain(self.u, space) if lam is None else \
            np.array(lam, dtype=np.float64)

    @classmethod
    def fixed(cls, space: HyperSpace, lam) -> 'HyperVector':
        """A point hyperparameter vector with exactly the given constrained
        values. The unconstrained image is clipped to the sampling bounds so
        it's always finite."""

        lam = np.array(lam, dtype=np.float64)
        if lam.shape != (space.q,):
            raise HyperError("Expected {} hyperparameters, got shape {}."
                             .format(space.q, lam.shape))

        for dim, value in zip(space.dims, lam):
            low, high = dim.bounds
            if not low <= value <= high:
                raise HyperError("Hyperparameter {} = {} is outside {}."
                                 .format(dim.name, value, dim.bounds))

        u = np.clip(unconstrain(lam, space), space.u_low, space.u_high)
        return cls(u, space, lam=lam)

    @property
    def conditioning(self) -> np.ndarray:
        """The standardized unconstrained vector the hypernet conditions on."""
        return (self.u - self.space.u_center) / self.space.u_scale

    @property
    def edge_drop(self) -> float:
        return float(self.lam[self.space.edge_index])

    @property
    def weight_decay(self) -> float:
        return float(self.lam[self.space.decay_index])

    @property
    def dropout_rates(self) -> np.ndarray:
        return self.lam[self.space.dropout_indices]

    def as_dict(self) -> dict:
        return dict(zip(self.space.names, (float(val) for val in self.lam)))

    def __repr__(self):
        return 'HyperVector({})'.format(
            ', '.join('{}={:.4g}'.format(name, val)
                      for name, val in self.as_dict().items()))


class HyperDistribution:
    """Uniform distribution over [mu - sigma, mu + sigma] in u space.

    :ivar np.ndarray mu: Centers.
    :ivar np.ndarray sigma: Half-widths, within [sigma_min, sigma_max].
    """

    __slots__ = ('mu', 'sigma', 'sigma_min', 'sigma_max')

    def __init__(self, mu, sigma, sigma_min: float = SIGMA_MIN,
                 sigma_max: float = SIGMA_MAX):
        self.mu = np.array(mu, dtype=np.float64)
        self.sigma = np.array(sigma, dtype=np.float64)

        if self.mu.shape != self.sigma.shape or self.mu.ndim != 1:
            raise HyperError("mu and sigma must be matching vectors, got {} "
                             "and {}.".format(self.mu.shape, self.sigma.shape))
        if (self.sigma <= 0).any():
            raise HyperError("Distribution widths must be positive, got {}."
                             .format(self.sigma))
        if not 0 < sigma_min <= sigma_max:
            raise HyperError("Invalid sigma clamp window [{}, {}]."
                             .format(sigma_min, sigma_max))

        self.sigma_min = sigma_min
        self.sigma_max = sigma_max

    def clamped(self, mu=None, sigma=None) -> 'HyperDistribution':
        """A new distribution with the given values, sigma clamped into
        [sigma_min, sigma_max]."""

        mu = self.mu if mu is None else mu
        sigma = self.sigma if sigma is None else sigma
        return HyperDistribution(
            mu, np.clip(sigma, self.sigma_min, self.sigma_max),
            sigma_min=self.sigma_min, sigma_max=self.sigma_max)

    def center(self, space: HyperSpace) -> HyperVector:
        """The hyperparameter vector at the distribution center."""
        return HyperVector(self.mu, space)

    def copy(self) -> 'HyperDistribution':
        return HyperDistribution(self.mu.copy(), self.sigma.copy(),
                                 self.sigma_min, self.sigma_max)

    def describe(self, space: HyperSpace) -> str:
        """One line, human readable dump of the distribution."""

        lam = constrain(self.mu, space)
        return ', '.join(
            '{}={:.4g} (mu={:.3f}, sigma={:.3f})'.format(name, val, mu, sig)
            for name, val, mu, sig in zip(space.names, lam, self.mu,
                                          self.sigma))

    def __eq__(self, other):
        return (isinstance(other, HyperDistribution) and
                np.array_equal(self.mu, other.mu) and
                np.array_equal(self.sigma, other.sigma))

    def __repr__(self):
        return 'HyperDistribution(mu={}, sigma={})'.format(self.mu,
                                                           self.sigma)


def sample(dist: HyperDistribution, space: HyperSpace,
           seed: int) -> Tuple[HyperVector, np.ndarray]:
    """Draw lam ~ P(lam | eps) by reparameterization.

    ``u = mu + sigma * noise`` with ``noise ~ Uniform[-1, 1]^q``, so
    d u / d mu = 1 and d u / d sigma = noise.

    :returns: The sampled vector and the noise, for gradient replay.
    """

    if dist.mu.shape != (space.q,):
        raise HyperError("Distribution has {} dims, space has {}."
                         .format(len(dist.mu), space.q))

    rng = utils.make_rng(seed)
    noise = rng.uniform(-1.0, 1.0, size=space.q)
    u = dist.mu + dist.sigma * noise
    return HyperVector(u, space), noise


def entropy(dist: HyperDistribution) -> float:
    """Differential entropy of the uniform box: sum(ln(2 sigma))."""

    if (dist.sigma <= 0).any():
        raise HyperError("Distribution widths must be positive, got {}."
                         .format(dist.sigma))
    return float(np.sum(np.log(2.0 * dist.sigma)))


def entropy_grad(dist: HyperDistribution) -> np.ndarray:
    """d entropy / d sigma."""
    return 1.0 / dist.sigma


def perturb(dist: HyperDistribution, seed: int,
            factors: Sequence[float] = PERTURB_FACTORS) -> HyperDistribution:
    """Randomly perturb a distribution: shift each center by sigma times
    Uniform[-1, 1], and scale each width by a factor drawn from the factor
    set (then clamp)."""

    rng = utils.make_rng(seed)
    shift = rng.uniform(-1.0, 1.0, size=dist.mu.shape)
    scale = rng.choice(np.asarray(factors, dtype=np.float64),
                       size=dist.sigma.shape)

    return dist.clamped(mu=dist.mu + dist.sigma * shift,
                        sigma=dist.sigma * scale)


def initial_distribution(space: HyperSpace, lam, sigma: float,
                         sigma_min: float = SIGMA_MIN,
                         sigma_max: float = SIGMA_MAX) -> HyperDistribution:
    """A distribution centered on the given constrained values."""

    mu = HyperVector.fixed(space, lam).u
    return HyperDistribution(mu, np.full(space.q, sigma),
                             sigma_min=sigma_min, sigma_max=sigma_max)
