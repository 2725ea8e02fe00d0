"""Skill-parametrized synthetic matches with consistent backend semantics.

Every ply of a synthetic match is a fresh state with ``M`` move qualities
drawn from a seeded table.  A player of skill ``s`` samples moves from
``softmax(q / T(s))`` where the temperature map ``T`` is strictly
decreasing in skill.  The same quality table gives the synthetic backends
their ground truth: strength of a move is its quality (plus optional
deterministic noise), the prior of a move at a policy level is the softmax
at that level's temperature, and the value of a state is its best quality,
so the deterioration caused by a move is exactly (best - chosen) quality.

Plateau configs give a policy level a perception window: qualities are
clipped into ``[q_lo, q_hi]`` before its softmax, which flattens that
level's likelihood over the groups whose typical move quality falls
outside the window.  Players never clip; generation is unaffected.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .rng import substream

STATE_PREFIX = "syn"


@dataclass(frozen=True)
class SynthLevel:
    """One policy-bank skill level: a label, a skill anchor, and an
    optional perception of move qualities.

    A window (q_lo, q_hi) clips qualities, flattening the level's
    likelihood where chosen moves leave the window.  A bump (q_center)
    makes the level perceive quality as closeness to its own taste,
    -(q - q_center)^2, so moves better than the level's anchor look as
    unlikely as worse ones; its likelihood curve over groups is then
    single-peaked and two-sided ambiguous."""

    label: str
    skill: float
    q_lo: float | None = None
    q_hi: float | None = None
    q_center: float | None = None


@dataclass(frozen=True)
class SynthConfig:
    groups: int
    moves_per_state: int
    plies_per_match: int
    temperature_base: float
    temperature_decay: float
    levels: tuple[SynthLevel, ...]
    player_offset_sd: float = 0.0
    strength_noise_sd: float = 0.0
    seed: int = 0

    def temperature(self, skill: float) -> float:
        return self.temperature_base * self.temperature_decay ** skill

    def level_labels(self) -> tuple[str, ...]:
        return tuple(lv.label for lv in self.levels)

    def level_by_label(self, label: str) -> SynthLevel:
        for lv in self.levels:
            if lv.label == label:
                return lv
        raise ConfigError(f"unknown policy level {label!r}")

    def validate(self) -> None:
        if self.groups < 2:
            raise ConfigError("need at least 2 rank groups")
        if self.moves_per_state < 2:
            raise ConfigError("need at least 2 moves per state")
        if self.plies_per_match < 1:
            raise ConfigError("need at least 1 ply per match")
        if self.temperature_base <= 0 or not (0 < self.temperature_decay < 1):
            raise ConfigError("temperature map must be positive and strictly decreasing")
        if self.player_offset_sd < 0 or self.strength_noise_sd < 0:
            raise ConfigError("noise standard deviations must be non-negative")
        labels = self.level_labels()
        if len(set(labels)) != len(labels):
            raise ConfigError("policy level labels must be distinct")
        skills = [lv.skill for lv in self.levels]
        if any(b <= a for a, b in zip(skills, skills[1:])):
            raise ConfigError("level skills must be strictly increasing")

    def config_hash(self) -> str:
        blob = json.dumps(
            {
                "groups": self.groups,
                "moves_per_state": self.moves_per_state,
                "plies_per_match": self.plies_per_match,
                "temperature_base": self.temperature_base,
                "temperature_decay": self.temperature_decay,
                "levels": [
                    [lv.label, lv.skill, lv.q_lo, lv.q_hi, lv.q_center]
                    for lv in self.levels
                ],
                "player_offset_sd": self.player_offset_sd,
                "strength_noise_sd": self.strength_noise_sd,
                "seed": self.seed,
            },
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class SynthPly:
    state: str
    move: int
    quality: float


@dataclass(frozen=True)
class SynthMatch:
    uid: str
    true_group: int
    player_skill: float
    plies: tuple[SynthPly, ...]


def softmax(values: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = values - values.max(axis=axis, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=axis, keepdims=True)


def log_softmax(values: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = values - values.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


def quality_block(config: SynthConfig, uid: str) -> np.ndarray:
    """The (plies, M) quality table slice for one match, derived from the
    config seed and the match uid alone."""
    gen = substream(config.seed, "qualities", uid)
    return gen.standard_normal((config.plies_per_match, config.moves_per_state))


def strength_noise_block(config: SynthConfig, uid: str) -> np.ndarray:
    gen = substream(config.seed, "strength-noise", uid)
    return gen.standard_normal((config.plies_per_match, config.moves_per_state))


def state_id(uid: str, ply: int) -> str:
    return f"{STATE_PREFIX}:{uid}:{ply}"


def parse_state_id(state: str) -> tuple[str, int]:
    prefix, _, rest = state.partition(":")
    uid, _, ply = rest.rpartition(":")
    if prefix != STATE_PREFIX or not uid or not ply.isdigit():
        raise ConfigError(f"not a synthetic state id: {state!r}")
    return uid, int(ply)


def perceived_qualities(level: SynthLevel, qualities: np.ndarray) -> np.ndarray:
    if level.q_center is not None:
        return -((qualities - level.q_center) ** 2)
    if level.q_lo is None and level.q_hi is None:
        return qualities
    return np.clip(qualities, level.q_lo, level.q_hi)


def gen_match(
    config: SynthConfig,
    group: int,
    uid: str,
    player_skill: float | None = None,
    rng: np.random.Generator | None = None,
) -> SynthMatch:
    """Generate one match: per ply, sample a move from the softmax of the
    state's qualities at the player's skill temperature."""
    if not 0 <= group < config.groups:
        raise ConfigError(f"group {group} outside [0, {config.groups})")
    skill = float(group) if player_skill is None else float(player_skill)
    if rng is None:
        rng = substream(config.seed, "moves", uid)
    qualities = quality_block(config, uid)
    probs = softmax(qualities / config.temperature(skill), axis=1)
    cdf = np.cumsum(probs, axis=1)
    draws = rng.random(config.plies_per_match)
    chosen = (draws[:, None] > cdf).sum(axis=1)
    chosen = np.minimum(chosen, config.moves_per_state - 1)
    plies = tuple(
        SynthPly(state_id(uid, p + 1), int(chosen[p]), float(qualities[p, chosen[p]]))
        for p in range(config.plies_per_match)
    )
    return SynthMatch(uid=uid, true_group=group, player_skill=skill, plies=plies)


def gen_group_pool(
    config: SynthConfig, tag: str, matches_per_group: int
) -> dict[int, list[SynthMatch]]:
    """Matches per group at the exact group-center skill (no player jitter)."""
    pool: dict[int, list[SynthMatch]] = {}
    for g in range(config.groups):
        pool[g] = [
            gen_match(config, g, f"{tag}-g{g}-m{i:05d}")
            for i in range(matches_per_group)
        ]
    return pool


def gen_player_pool(
    config: SynthConfig,
    tag: str,
    players_per_group: int,
    matches_per_player: int,
) -> dict[int, dict[str, list[SynthMatch]]]:
    """Per-player pools for the player-specific protocol.  Each player gets
    one skill offset, drawn once, applied to all of their matches."""
    pool: dict[int, dict[str, list[SynthMatch]]] = {}
    for g in range(config.groups):
        players: dict[str, list[SynthMatch]] = {}
        for p in range(players_per_group):
            player_id = f"{tag}-g{g}-pl{p:03d}"
            offset = 0.0
            if config.player_offset_sd > 0:
                gen = substream(config.seed, "offset", tag, g, p)
                offset = float(gen.normal(0.0, config.player_offset_sd))
            players[player_id] = [
                gen_match(config, g, f"{player_id}-m{i:03d}", player_skill=g + offset)
                for i in range(matches_per_player)
            ]
        pool[g] = players
    return pool


def to_datapoint(match: SynthMatch, player_id: str | None = None):
    """A synthetic match as a data point, format-identical to parsed records."""
    from .records.types import DataPoint, RankGroup

    return DataPoint(
        match_id=match.uid,
        player_id=player_id or match.uid,
        side="black",
        group=RankGroup(game="synthetic", index=match.true_group,
                        label=f"g{match.true_group}"),
        moves=tuple(
            (i + 1, ply.state, str(ply.move)) for i, ply in enumerate(match.plies)
        ),
    )


def pool_to_datapoints(pool: dict) -> dict:
    """Group pool of matches -> group pool of data points."""
    return {g: [to_datapoint(m) for m in matches] for g, matches in pool.items()}


def player_pool_to_datapoints(pool: dict) -> dict:
    return {
        g: {
            player: [to_datapoint(m, player_id=player) for m in matches]
            for player, matches in players.items()
        }
        for g, players in pool.items()
    }


def bayes_oracle_accuracy(
    config: SynthConfig, n: int, trials: int, seed_tag: str = "oracle"
) -> float:
    """Brute-force likelihood-ratio classification accuracy.

    Each trial draws a group uniformly, generates ``n`` fresh matches at
    that group's center skill, scores the chosen moves' exact
    log-likelihood under every group's softmax policy, and predicts the
    argmax group.  This upper-bounds any feature-based estimator run on
    the same generator.
    """
    temps = np.array([config.temperature(g) for g in range(config.groups)])
    picker = substream(config.seed, "oracle-group", seed_tag)
    correct = 0
    for t in range(trials):
        true_group = int(picker.integers(config.groups))
        loglik = np.zeros(config.groups)
        for i in range(n):
            uid = f"{seed_tag}-t{t:05d}-m{i:02d}"
            match = gen_match(config, true_group, uid)
            qualities = quality_block(config, uid)
            chosen = np.array([ply.move for ply in match.plies])
            # (R, plies, M) scaled qualities; exact per-group log-softmax
            scaled = qualities[None, :, :] / temps[:, None, None]
            logp = log_softmax(scaled, axis=2)
            loglik += logp[:, np.arange(len(chosen)), chosen].sum(axis=1)
        if int(np.argmax(loglik)) == true_group:
            correct += 1
    return correct / trials


def desk_config(seed: int = 20240210) -> SynthConfig:
    """The pinned desk-scale configuration used by the acceptance suite."""
    return SynthConfig(
        groups=8,
        moves_per_state=16,
        plies_per_match=80,
        temperature_base=2.2,
        temperature_decay=0.85,
        levels=(
            SynthLevel("lv0", 0.5),
            SynthLevel("lv1", 2.5),
            SynthLevel("lv2", 4.5),
            SynthLevel("lv3", 6.5),
        ),
        strength_noise_sd=2.0,
        seed=seed,
    )


def two_plateau_config(seed: int = 20240211) -> SynthConfig:
    """Two policy levels with complementary perception windows.

    The capped level cannot tell good moves apart, so its likelihood
    saturates over the strong half of the groups; the floored level is
    blind among weak moves and saturates over the weak half.  Together
    they separate all groups.
    """
    base = desk_config(seed)
    return replace(
        base,
        levels=(
            SynthLevel("taste_low", 1.5, q_center=0.52),
            SynthLevel("taste_high", 5.5, q_center=1.05),
        ),
        strength_noise_sd=0.0,
    )
