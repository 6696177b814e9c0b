"""Discrete POMDP model types and exact Bayesian belief updates.

Everything is dense numpy: paper-scale models (tens of states) never need
sparsity.  Instances validate on construction and are frozen afterwards, so
all operations here are pure functions that can be shared across workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

ROW_SUM_TOL = 1e-9

__all__ = [
    "ROW_SUM_TOL",
    "ZeroLikelihoodObservation",
    "Pomdp",
    "Belief",
    "InfoSource",
    "PerceptionAction",
    "belief_update_intrinsic",
    "belief_update_auxiliary",
    "observation_probability",
    "expected_immediate_reward",
    "read_pomdp_file",
    "write_pomdp_file",
]


class ZeroLikelihoodObservation(RuntimeError):
    """The received observation has probability zero under the current belief.

    The Bayes normalizer vanishes, so the posterior is undefined.  This always
    signals a model/trajectory inconsistency; callers must not paper over it
    by renormalizing.
    """


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def _check_stochastic(name: str, tensor: np.ndarray) -> None:
    if tensor.size == 0:
        raise ValueError(f"{name}: tensor is empty")
    if tensor.min() < 0.0 or tensor.max() > 1.0:
        raise ValueError(f"{name}: probabilities must lie in [0, 1]")
    deviation = np.abs(tensor.sum(axis=-1) - 1.0).max()
    if deviation > ROW_SUM_TOL:
        raise ValueError(f"{name}: rows must sum to 1 (worst deviation {deviation:.3e})")


@dataclass(frozen=True, eq=False)
class Pomdp:
    """Finite POMDP.

    transition[s, a, s']   probability of reaching s' when taking a in s
    observation[s', a, w]  probability of observing w after landing in s' via a
    reward[s, a]           immediate reward
    discount               in [0, 1); strictly below 1 so value bounds exist
    """

    transition: np.ndarray
    observation: np.ndarray
    reward: np.ndarray
    discount: float

    def __post_init__(self) -> None:
        t = _frozen_array(self.transition)
        o = _frozen_array(self.observation)
        r = _frozen_array(self.reward)
        if t.ndim != 3 or t.shape[0] != t.shape[2]:
            raise ValueError("transition must have shape (S, A, S)")
        num_states, num_actions = t.shape[0], t.shape[1]
        if o.ndim != 3 or o.shape[:2] != (num_states, num_actions):
            raise ValueError("observation must have shape (S, A, num_observations)")
        if r.shape != (num_states, num_actions):
            raise ValueError("reward must have shape (S, A)")
        if not 0.0 <= float(self.discount) < 1.0:
            raise ValueError("discount must lie in [0, 1)")
        _check_stochastic("transition", t)
        _check_stochastic("observation", o)
        object.__setattr__(self, "transition", t)
        object.__setattr__(self, "observation", o)
        object.__setattr__(self, "reward", r)
        object.__setattr__(self, "discount", float(self.discount))

    @property
    def num_states(self) -> int:
        return self.transition.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transition.shape[1]

    @property
    def num_observations(self) -> int:
        return self.observation.shape[2]


@dataclass(frozen=True, eq=False)
class Belief:
    """Probability distribution over states; the planner/selector currency."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        p = _frozen_array(self.probs)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("belief must be a nonempty vector")
        if p.min() < 0.0:
            raise ValueError("belief entries must be nonnegative")
        if abs(p.sum() - 1.0) > ROW_SUM_TOL:
            raise ValueError(f"belief must sum to 1, got {p.sum()!r}")
        object.__setattr__(self, "probs", p)

    @property
    def num_states(self) -> int:
        return self.probs.size

    @staticmethod
    def uniform(num_states: int) -> "Belief":
        return Belief(np.full(num_states, 1.0 / num_states))

    @staticmethod
    def point_mass(num_states: int, state: int) -> "Belief":
        probs = np.zeros(num_states)
        probs[state] = 1.0
        return Belief(probs)


@dataclass(frozen=True, eq=False)
class InfoSource:
    """One auxiliary observation channel.

    likelihood[s, a, y] is the probability the source reports symbol y when
    the agent sits in state s after action a; symbols live in the source's own
    private alphabet.  cost is the scalar price of querying the source once.
    """

    likelihood: np.ndarray
    cost: float

    def __post_init__(self) -> None:
        lik = _frozen_array(self.likelihood)
        if lik.ndim != 3:
            raise ValueError("likelihood must have shape (S, A, alphabet)")
        _check_stochastic("likelihood", lik)
        if not float(self.cost) > 0.0:
            raise ValueError("cost must be positive")
        object.__setattr__(self, "likelihood", lik)
        object.__setattr__(self, "cost", float(self.cost))

    @property
    def num_symbols(self) -> int:
        return self.likelihood.shape[2]


@dataclass(frozen=True)
class PerceptionAction:
    """Ordered set of selected information-source indices."""

    selected: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        sel = tuple(int(i) for i in self.selected)
        if any(i < 0 for i in sel):
            raise ValueError("source indices must be nonnegative")
        if len(set(sel)) != len(sel):
            raise ValueError("source indices must be unique")
        object.__setattr__(self, "selected", sel)

    @staticmethod
    def empty() -> "PerceptionAction":
        return PerceptionAction(())

    def plus(self, index: int) -> "PerceptionAction":
        return PerceptionAction(self.selected + (int(index),))

    def __len__(self) -> int:
        return len(self.selected)

    def __iter__(self) -> Iterator[int]:
        return iter(self.selected)

    def __contains__(self, index: object) -> bool:
        return index in self.selected

    def __bool__(self) -> bool:
        return bool(self.selected)


def belief_update_intrinsic(pomdp: Pomdp, belief: Belief, action: int, obs: int) -> Belief:
    """Posterior over next states after taking `action` and observing `obs`.

    b'(s') is proportional to O(s', a, obs) * sum_s T(s, a, s') b(s).
    Raises ZeroLikelihoodObservation when the observation is impossible.
    """
    predicted = belief.probs @ pomdp.transition[:, action, :]
    unnormalized = pomdp.observation[:, action, obs] * predicted
    total = unnormalized.sum()
    if total <= 0.0:
        raise ZeroLikelihoodObservation(
            f"observation {obs} has zero probability after action {action}"
        )
    return Belief(unnormalized / total)


def belief_update_auxiliary(
    b_prime: Belief,
    action: int,
    selected: PerceptionAction,
    sources: Sequence[InfoSource],
    symbols: Sequence[int],
) -> Belief:
    """Refine a belief with reports from the selected auxiliary sources.

    Sources are conditionally independent given the state, so the joint
    likelihood is the product of per-source likelihoods.  An empty selection
    returns the belief unchanged (the empty product is 1).
    """
    if len(symbols) != len(selected):
        raise ValueError("need exactly one reported symbol per selected source")
    if not selected:
        return b_prime
    weights = np.ones(b_prime.num_states)
    for index, symbol in zip(selected, symbols):
        weights *= sources[index].likelihood[:, action, symbol]
    unnormalized = weights * b_prime.probs
    total = unnormalized.sum()
    if total <= 0.0:
        raise ZeroLikelihoodObservation(
            f"auxiliary reports {tuple(symbols)} have zero joint probability"
        )
    return Belief(unnormalized / total)


def observation_probability(pomdp: Pomdp, belief: Belief, action: int, obs: int) -> float:
    """Pr(obs | belief, action); the normalizer of the intrinsic update."""
    predicted = belief.probs @ pomdp.transition[:, action, :]
    return float(pomdp.observation[:, action, obs] @ predicted)


def expected_immediate_reward(pomdp: Pomdp, belief: Belief, action: int) -> float:
    return float(belief.probs @ pomdp.reward[:, action])


# ---------------------------------------------------------------------------
# Model files.
#
# Line-oriented text, '#' starts a comment.  Layout:
#
#   pomdp v1
#   states N
#   actions A
#   observations M
#   discount G
#   transition      followed by N*A lines of N floats, row (s, a), s-major
#   observation     followed by N*A lines of M floats, row (s', a)
#   reward          followed by N lines of A floats
# ---------------------------------------------------------------------------

POMDP_FILE_HEADER = "pomdp v1"


def _format_row(values: np.ndarray) -> str:
    return " ".join(repr(float(v)) for v in values)


def write_pomdp_file(pomdp: Pomdp, path: str) -> None:
    lines = [
        POMDP_FILE_HEADER,
        f"states {pomdp.num_states}",
        f"actions {pomdp.num_actions}",
        f"observations {pomdp.num_observations}",
        f"discount {pomdp.discount!r}",
        "transition",
    ]
    for s in range(pomdp.num_states):
        for a in range(pomdp.num_actions):
            lines.append(_format_row(pomdp.transition[s, a]))
    lines.append("observation")
    for s in range(pomdp.num_states):
        for a in range(pomdp.num_actions):
            lines.append(_format_row(pomdp.observation[s, a]))
    lines.append("reward")
    for s in range(pomdp.num_states):
        lines.append(_format_row(pomdp.reward[s]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _content_lines(path: str) -> list[str]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if line:
                out.append(line)
    return out


def _scalar_line(lines: list[str], pos: int, key: str) -> float:
    if pos >= len(lines):
        raise ValueError(f"model file truncated, expected '{key}'")
    parts = lines[pos].split()
    if len(parts) != 2 or parts[0] != key:
        raise ValueError(f"expected '{key} <value>', got {lines[pos]!r}")
    return float(parts[1])


def _read_block(lines: list[str], pos: int, name: str, rows: int, cols: int) -> tuple[np.ndarray, int]:
    if pos >= len(lines) or lines[pos] != name:
        raise ValueError(f"expected section '{name}'")
    pos += 1
    block = np.empty((rows, cols))
    for r in range(rows):
        if pos + r >= len(lines):
            raise ValueError(f"section '{name}' truncated at row {r}")
        parts = lines[pos + r].split()
        if len(parts) != cols:
            raise ValueError(f"section '{name}' row {r}: expected {cols} values, got {len(parts)}")
        block[r] = [float(p) for p in parts]
    return block, pos + rows


def read_pomdp_file(path: str) -> Pomdp:
    """Parse a model file; tensors violating the row-sum invariants are rejected."""
    lines = _content_lines(path)
    if not lines or lines[0] != POMDP_FILE_HEADER:
        raise ValueError(f"not a '{POMDP_FILE_HEADER}' file: {path}")
    num_states = int(_scalar_line(lines, 1, "states"))
    num_actions = int(_scalar_line(lines, 2, "actions"))
    num_obs = int(_scalar_line(lines, 3, "observations"))
    discount = _scalar_line(lines, 4, "discount")
    if num_states < 1 or num_actions < 1 or num_obs < 1:
        raise ValueError("dimensions must be positive")
    pos = 5
    transition, pos = _read_block(lines, pos, "transition", num_states * num_actions, num_states)
    observation, pos = _read_block(lines, pos, "observation", num_states * num_actions, num_obs)
    reward, pos = _read_block(lines, pos, "reward", num_states, num_actions)
    if pos != len(lines):
        raise ValueError("trailing content after reward section")
    return Pomdp(
        transition=transition.reshape(num_states, num_actions, num_states),
        observation=observation.reshape(num_states, num_actions, num_obs),
        reward=reward,
        discount=discount,
    )
