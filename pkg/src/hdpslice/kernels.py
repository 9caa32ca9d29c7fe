"""Emission kernels: atom prior, likelihood, and conjugate posterior draw.

Two instances are provided.  The spherical Gaussian kernel has atom prior
N(0, I_d / tau_phi2) and likelihood N(atom, I_d / tau_y2), with tau_phi2
and tau_y2 the prior and likelihood precisions.  The multinomial kernel
has a Dirichlet(alpha) prior over word distributions and categorical
likelihood phi[y].

Kernels are immutable; atoms are stored row-wise in a single array so the
sampler can update dishes independently on per-dish streams.
"""

import abc

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

# Floor applied inside log() when building weight matrices; a Dirichlet
# draw can round to exactly 0 and 0 * log(0) must stay 0 for vacant rows.
_LOG_FLOOR = 1e-300


def gaussian_posterior_draw(assigned, tau_phi2, tau_y2, rng):
    """Draw an atom mean from its conjugate Gaussian posterior.

    Parameters
    ----------
    assigned : (n, d) array
        Observations currently assigned to the atom; n may be 0.
    tau_phi2, tau_y2 : float
        Prior and likelihood precisions, both positive.
    rng : numpy Generator

    The posterior is N(mu, I_d / tau2) with tau2 = tau_phi2 + n * tau_y2
    and mu = (tau_y2 / tau2) * sum(assigned).  With n = 0 it reduces to
    the prior.
    """
    mu, tau2 = gaussian_posterior_params(assigned, tau_phi2, tau_y2)
    return mu + rng.standard_normal(mu.shape) / np.sqrt(tau2)


def gaussian_posterior_params(assigned, tau_phi2, tau_y2):
    """(mean, precision) of the conjugate posterior over an atom mean."""
    if tau_phi2 <= 0 or tau_y2 <= 0:
        raise DomainError("precisions must be positive")
    assigned = np.atleast_2d(np.asarray(assigned, dtype=np.float64))
    n = assigned.shape[0] if assigned.size else 0
    tau2 = tau_phi2 + n * tau_y2
    total = assigned.sum(axis=0) if n else np.zeros(assigned.shape[1])
    return (tau_y2 / tau2) * total, tau2


def multinomial_posterior_draw(assigned, alpha, rng):
    """Draw a word distribution from Dirichlet(alpha + word counts).

    `assigned` holds 1-based token ids; `alpha` is the per-word
    pseudo-count vector.  Empty assignment reduces to the prior.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    if (alpha <= 0).any():
        raise DomainError("Dirichlet pseudo-counts must be positive")
    w = alpha.size
    assigned = np.asarray(assigned, dtype=np.int64)
    if assigned.size and (assigned.min() < 1 or assigned.max() > w):
        raise DomainError(f"token id outside 1..{w}")
    counts = np.bincount(assigned, minlength=w + 1)[1:w + 1]
    return rng.dirichlet(alpha + counts)


def per_table_word_stats(tokens, table_of_customer, cap, vocab_size):
    """Per-table word counts: row t-1 holds the histogram of tokens whose
    customer sits at table t.  Tables with no customers get zero rows."""
    tokens = np.asarray(tokens, dtype=np.int64)
    tables = np.asarray(table_of_customer, dtype=np.int64)
    if tokens.shape != tables.shape:
        raise DomainError("tokens and table assignments must align")
    stats = np.zeros((int(cap), int(vocab_size)), dtype=np.int64)
    np.add.at(stats, (tables - 1, tokens - 1), 1)
    return stats


class EmissionKernel(abc.ABC):
    """Contract every kernel implements.

    A kernel bundles the atom prior, the pointwise log-likelihood, the
    conjugate posterior draw given the observations assigned to an atom,
    and observation sampling (used by the synthetic generator).  Posterior
    draws with an empty assignment must be distributed as the prior.
    """

    kind = ""            # "gaussian" | "multinomial"
    observation_kind = ""  # "vectors" | "tokens"

    @abc.abstractmethod
    def sample_atom_prior(self, rng):
        """One atom from the prior, as a row vector."""

    @abc.abstractmethod
    def sample_atom_posterior(self, assigned, rng):
        """One atom from the conjugate posterior given `assigned`."""

    @abc.abstractmethod
    def log_likelihood(self, y, atom):
        """Log density of a single observation under one atom."""

    @abc.abstractmethod
    def atom_log_prior(self, atom):
        """Log prior density of one atom."""

    @abc.abstractmethod
    def sample_observation(self, atom, rng):
        """One observation emitted by `atom`."""

    @abc.abstractmethod
    def log_likelihood_matrix(self, observations, atoms):
        """(n, K) log-likelihood of each observation under each atom row."""

    def table_log_weights(self, observations, table_of_customer, cap, atoms):
        """(cap, K) summed log-likelihood of each table's customers under
        each atom; vacant tables give zero rows (uniform after softmax)."""
        lm = self.log_likelihood_matrix(observations, atoms)
        out = np.zeros((int(cap), atoms.shape[0]))
        np.add.at(out, np.asarray(table_of_customer, dtype=np.int64) - 1, lm)
        return out


class GaussianKernel(EmissionKernel):
    """Spherical Gaussian emissions with a zero-mean Gaussian atom prior."""

    kind = "gaussian"
    observation_kind = "vectors"

    def __init__(self, dim, tau_phi2=1.0, tau_y2=1.0):
        if dim < 1:
            raise DomainError("dim must be >= 1")
        if tau_phi2 <= 0 or tau_y2 <= 0:
            raise DomainError("precisions must be positive")
        self.dim = int(dim)
        self.tau_phi2 = float(tau_phi2)
        self.tau_y2 = float(tau_y2)

    def sample_atom_prior(self, rng):
        return rng.standard_normal(self.dim) / np.sqrt(self.tau_phi2)

    def sample_atom_posterior(self, assigned, rng):
        assigned = np.asarray(assigned, dtype=np.float64).reshape(-1, self.dim)
        return gaussian_posterior_draw(assigned, self.tau_phi2, self.tau_y2, rng)

    def log_likelihood(self, y, atom):
        diff = np.asarray(y, dtype=np.float64) - atom
        return (0.5 * self.dim * np.log(self.tau_y2 / (2.0 * np.pi))
                - 0.5 * self.tau_y2 * float(diff @ diff))

    def atom_log_prior(self, atom):
        atom = np.asarray(atom, dtype=np.float64)
        return (0.5 * self.dim * np.log(self.tau_phi2 / (2.0 * np.pi))
                - 0.5 * self.tau_phi2 * float(atom @ atom))

    def sample_observation(self, atom, rng):
        return atom + rng.standard_normal(self.dim) / np.sqrt(self.tau_y2)

    def log_likelihood_matrix(self, observations, atoms):
        obs = np.asarray(observations, dtype=np.float64).reshape(-1, self.dim)
        sq = ((obs[:, None, :] - atoms[None, :, :]) ** 2).sum(axis=2)
        return 0.5 * self.dim * np.log(self.tau_y2 / (2.0 * np.pi)) - 0.5 * self.tau_y2 * sq


class MultinomialKernel(EmissionKernel):
    """Categorical emissions over a vocabulary with a Dirichlet atom prior."""

    kind = "multinomial"
    observation_kind = "tokens"

    def __init__(self, vocab_size, alpha=None):
        if vocab_size < 1:
            raise DomainError("vocab_size must be >= 1")
        self.vocab_size = int(vocab_size)
        if alpha is None:
            alpha = 1.0 / self.vocab_size
        alpha = np.asarray(alpha, dtype=np.float64)
        if alpha.ndim == 0:
            alpha = np.full(self.vocab_size, float(alpha))
        if alpha.size != self.vocab_size or (alpha <= 0).any():
            raise DomainError("alpha must be positive with one entry per word")
        self.alpha = alpha

    def sample_atom_prior(self, rng):
        return rng.dirichlet(self.alpha)

    def sample_atom_posterior(self, assigned, rng):
        return multinomial_posterior_draw(assigned, self.alpha, rng)

    def log_likelihood(self, y, atom):
        p = atom[int(y) - 1]
        return float(np.log(p)) if p > 0 else -np.inf

    def atom_log_prior(self, atom):
        atom = np.asarray(atom, dtype=np.float64)
        return float(gammaln(self.alpha.sum()) - gammaln(self.alpha).sum()
                     + ((self.alpha - 1.0) * np.log(np.maximum(atom, _LOG_FLOOR))).sum())

    def sample_observation(self, atom, rng):
        # inverse-cdf draw keeps the stream consumption at one uniform
        return int(np.searchsorted(np.cumsum(atom), rng.random() * atom.sum()) + 1)

    def log_likelihood_matrix(self, observations, atoms):
        with np.errstate(divide="ignore"):
            logphi = np.log(atoms)  # exact: zero mass stays -inf
        tokens = np.asarray(observations, dtype=np.int64)
        return logphi[:, tokens - 1].T

    def table_log_weights(self, observations, table_of_customer, cap, atoms):
        stats = per_table_word_stats(observations, table_of_customer, cap, self.vocab_size)
        return stats @ np.log(np.maximum(atoms, _LOG_FLOOR)).T


def make_kernel(kind, **params):
    """Build a kernel from configuration values."""
    if kind == "gaussian":
        return GaussianKernel(params["dim"],
                              params.get("tau_phi2", 1.0),
                              params.get("tau_y2", 1.0))
    if kind == "multinomial":
        return MultinomialKernel(params["vocab_size"], params.get("alpha"))
    raise DomainError(f"unknown kernel kind: {kind!r}")
