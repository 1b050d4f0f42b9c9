"""Training-data plumbing: counterfactual macro-step samples, JSONL export,
deterministic rasterization, episode reward, and group-relative advantages.

An expert solution of length N expands into one sample per (state along the
path, depth h fitting in the remainder): the sample's actions are exactly
the next h expert actions from that state.  Export is deterministic and
byte-stable so golden files stay valid.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from . import sliding, sokoban
from .core import (
    Action,
    DEFAULT_DEPTHS,
    DepthSet,
    EpisodeTranscript,
    environment_for,
    format_actions,
)


class InvalidExpert(Exception):
    """Replaying the expert action sequence does not reach the goal."""


class GroupTooSmall(Exception):
    """Group-relative advantages need at least two rollouts."""


@dataclass(frozen=True)
class SftSample:
    """One (state, depth, action-prefix) training triple."""

    state: object
    h: int
    actions: tuple[Action, ...]
    instance_id: str
    t: int


def expand_counterfactual(expert: Sequence[Action], start,
                          depths: DepthSet = DEFAULT_DEPTHS,
                          instance_id: str = "") -> list[SftSample]:
    """Expand an expert solution into macro-step samples.

    For each primitive index t along the path and each depth h in the set
    with h <= N - t, emit one sample whose actions are the expert's next h
    moves.  The expert need not be optimal, but it must reach the goal;
    otherwise InvalidExpert is raised.
    """
    env = environment_for(start)
    states = [start]
    current = start
    for action in expert:
        current = env.transition(current, action)
        states.append(current)
    if not env.is_goal(current):
        raise InvalidExpert(
            f"expert path of length {len(expert)} ends off-goal")
    n = len(expert)
    samples = []
    for t in range(n):
        for h in depths:
            if h <= n - t:
                samples.append(SftSample(
                    state=states[t], h=h,
                    actions=tuple(expert[t:t + h]),
                    instance_id=instance_id, t=t))
    return samples


def state_to_obj(state) -> dict:
    """Task-tagged JSON-ready form of a puzzle state."""
    if isinstance(state, sliding.SlidingState):
        return {"task": "sliding", "n": state.n, "tiles": list(state.tiles)}
    if isinstance(state, sokoban.SokobanState):
        return {
            "task": "sokoban",
            "width": state.width,
            "height": state.height,
            "walls": sorted(list(c) for c in state.walls),
            "boxes": sorted(list(c) for c in state.boxes),
            "goals": sorted(list(c) for c in state.goals),
            "player": list(state.player),
        }
    raise TypeError(f"no serializer for {type(state).__name__}")


def state_from_obj(obj: dict):
    task = obj.get("task")
    if task == "sliding":
        return sliding.SlidingState(n=obj["n"], tiles=tuple(obj["tiles"]))
    if task == "sokoban":
        return sokoban.SokobanState(
            width=obj["width"], height=obj["height"],
            walls=frozenset(tuple(c) for c in obj["walls"]),
            boxes=frozenset(tuple(c) for c in obj["boxes"]),
            goals=frozenset(tuple(c) for c in obj["goals"]),
            player=tuple(obj["player"]))
    raise ValueError(f"unknown task {task!r}")


def sample_to_obj(sample: SftSample,
                  image: Optional[str] = None) -> dict:
    # Field order is frozen; golden files depend on it.
    obj = {
        "task": state_to_obj(sample.state)["task"],
        "instance_id": sample.instance_id,
        "t": sample.t,
        "h": sample.h,
        "actions": format_actions(sample.actions),
        "state": state_to_obj(sample.state),
    }
    if image is not None:
        obj["image"] = image
    return obj


def export_jsonl(samples: Sequence[SftSample], path: Union[str, Path],
                 render: bool = False) -> int:
    """Write one JSON object per sample.  With ``render`` each sample also
    gets a PPM image in a sibling <stem>_images directory, recorded under
    the "image" key as a path relative to the JSONL file.  Re-exporting the
    same samples is byte-identical."""
    path = Path(path)
    image_dir = path.parent / f"{path.stem}_images"
    if render:
        image_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    for sample in samples:
        image = None
        if render:
            name = (f"{sample.instance_id or 'anon'}"
                    f"_t{sample.t:03d}_h{sample.h}.ppm")
            try:
                (image_dir / name).write_bytes(render_state(sample.state))
            except OSError as exc:
                raise OSError(f"writing image {image_dir / name}: {exc}") from exc
            image = f"{image_dir.name}/{name}"
        lines.append(json.dumps(sample_to_obj(sample, image),
                                separators=(",", ":")))
    try:
        path.write_text("".join(line + "\n" for line in lines))
    except OSError as exc:
        raise OSError(f"writing dataset {path}: {exc}") from exc
    return len(lines)


CELL = 32

# 3x5 bitmaps for digits 0-9, row-major, 1 = lit.
_FONT = {
    "0": ("111", "101", "101", "101", "111"),
    "1": ("010", "110", "010", "010", "111"),
    "2": ("111", "001", "111", "100", "111"),
    "3": ("111", "001", "111", "001", "111"),
    "4": ("101", "101", "111", "001", "001"),
    "5": ("111", "100", "111", "001", "111"),
    "6": ("111", "100", "111", "101", "111"),
    "7": ("111", "001", "001", "001", "001"),
    "8": ("111", "101", "111", "101", "111"),
    "9": ("111", "101", "111", "001", "111"),
}

# Value-indexed tile palette (blank first), fixed forever for goldens.
_TILE_PALETTE = (
    (40, 40, 48),      # 0: blank
    (213, 94, 0),      # 1
    (230, 159, 0),     # 2
    (240, 228, 66),    # 3
    (0, 158, 115),     # 4
    (86, 180, 233),    # 5
    (0, 114, 178),     # 6
    (204, 121, 167),   # 7
    (148, 103, 189),   # 8
    (196, 156, 148),   # 9
    (140, 86, 75),     # 10
    (227, 119, 194),   # 11
    (127, 127, 127),   # 12
    (188, 189, 34),    # 13
    (23, 190, 207),    # 14
    (158, 218, 229),   # 15
)

_SOKOBAN_COLORS = {
    "wall": (54, 54, 60),
    "floor": (222, 219, 210),
    "goal": (245, 200, 92),
    "box": (178, 98, 44),
    "box_on_goal": (96, 160, 70),
    "player": (66, 108, 204),
}


class _Canvas:
    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.data = bytearray(width * height * 3)

    def fill_rect(self, x0: int, y0: int, w: int, h: int,
                  color: tuple[int, int, int]) -> None:
        r, g, b = color
        for y in range(y0, y0 + h):
            base = (y * self.width + x0) * 3
            for x in range(w):
                i = base + x * 3
                self.data[i] = r
                self.data[i + 1] = g
                self.data[i + 2] = b

    def ppm(self) -> bytes:
        header = f"P6\n{self.width} {self.height}\n255\n".encode("ascii")
        return header + bytes(self.data)


def _draw_digits(canvas: _Canvas, text: str, cx: int, cy: int,
                 color: tuple[int, int, int], scale: int = 4) -> None:
    """Draw digit string centered at (cx, cy) using the 3x5 font."""
    glyph_w, glyph_h, gap = 3 * scale, 5 * scale, scale
    total_w = len(text) * glyph_w + (len(text) - 1) * gap
    x = cx - total_w // 2
    y = cy - glyph_h // 2
    for ch in text:
        rows = _FONT[ch]
        for ry, row in enumerate(rows):
            for rx, bit in enumerate(row):
                if bit == "1":
                    canvas.fill_rect(x + rx * scale, y + ry * scale,
                                     scale, scale, color)
        x += glyph_w + gap


def _luminance(color: tuple[int, int, int]) -> float:
    r, g, b = color
    return 0.299 * r + 0.587 * g + 0.114 * b


def _render_sliding(state: sliding.SlidingState) -> bytes:
    n = state.n
    canvas = _Canvas(n * CELL, n * CELL)
    for idx, tile in enumerate(state.tiles):
        r, c = divmod(idx, n)
        color = _TILE_PALETTE[tile % len(_TILE_PALETTE)]
        canvas.fill_rect(c * CELL, r * CELL, CELL, CELL, color)
        # 1px border so equal-colored neighbors stay distinguishable
        border = (30, 30, 34)
        canvas.fill_rect(c * CELL, r * CELL, CELL, 1, border)
        canvas.fill_rect(c * CELL, r * CELL, 1, CELL, border)
        if tile:
            ink = (16, 16, 16) if _luminance(color) > 128 else (240, 240, 240)
            _draw_digits(canvas, str(tile), c * CELL + CELL // 2,
                         r * CELL + CELL // 2, ink)
    return canvas.ppm()


def _render_sokoban(state: sokoban.SokobanState) -> bytes:
    canvas = _Canvas(state.width * CELL, state.height * CELL)
    colors = _SOKOBAN_COLORS
    for y in range(state.height):
        for x in range(state.width):
            cell = (x, y)
            if cell in state.walls:
                color = colors["wall"]
            elif cell in state.boxes:
                color = (colors["box_on_goal"] if cell in state.goals
                         else colors["box"])
            elif cell == state.player:
                color = colors["player"]
            elif cell in state.goals:
                color = colors["goal"]
            else:
                color = colors["floor"]
            canvas.fill_rect(x * CELL, y * CELL, CELL, CELL, color)
    return canvas.ppm()


def render_state(state) -> bytes:
    """Deterministic P6 PPM raster, 32x32 pixels per cell."""
    if isinstance(state, sliding.SlidingState):
        return _render_sliding(state)
    if isinstance(state, sokoban.SokobanState):
        return _render_sokoban(state)
    raise TypeError(f"no renderer for {type(state).__name__}")


@dataclass(frozen=True)
class RewardParams:
    """Dense-reward weight; lam is the lambda in solved + lam*tanh(mean)."""

    lam: float = 0.20

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")


@dataclass(frozen=True)
class RewardResult:
    solved: int
    mean_delta: float
    total: float


def episode_reward(transcript: EpisodeTranscript,
                   params: RewardParams = RewardParams()) -> RewardResult:
    """Sparse solve bonus plus bounded dense shaping:
    1[solved] + lam * tanh(mean per-primitive-step delta)."""
    deltas: list[int] = []
    for decision in transcript.decisions:
        if decision.deltas is None:
            raise ValueError(
                "transcript lacks per-step progress; run the episode with "
                "a distance_fn to record deltas")
        deltas.extend(decision.deltas)
    mean_delta = sum(deltas) / len(deltas) if deltas else 0.0
    solved = int(transcript.solved)
    total = solved + params.lam * math.tanh(mean_delta)
    return RewardResult(solved=solved, mean_delta=mean_delta, total=total)


STD_FLOOR = 1e-8


def group_advantage(rewards: Sequence[float]) -> list[float]:
    """Standardize rewards within a rollout group: (r - mean) / pop-std.
    All-equal groups return zeros via the std floor."""
    if len(rewards) < 2:
        raise GroupTooSmall(f"need >= 2 rewards, got {len(rewards)}")
    mean = sum(rewards) / len(rewards)
    variance = sum((r - mean) ** 2 for r in rewards) / len(rewards)
    std = math.sqrt(variance)
    if std < STD_FLOOR:
        return [0.0] * len(rewards)
    return [(r - mean) / std for r in rewards]


@dataclass(frozen=True)
class AdvantageGroup:
    rewards: tuple[float, ...]
    advantages: tuple[float, ...]

    @classmethod
    def from_rewards(cls, rewards: Sequence[float]) -> "AdvantageGroup":
        return cls(rewards=tuple(rewards),
                   advantages=tuple(group_advantage(rewards)))
