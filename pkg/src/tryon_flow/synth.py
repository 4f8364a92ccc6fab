"""Procedural try-on corpus.

Every sample is a pure function of ``(seed, cfg)``: a stick-figure person in
randomized pose wearing an original outfit, the replacement garments as
flat-lay images, and the re-dressed target, together with the agnostic mask,
pose rendering and body parsing that the conditioning pipeline consumes.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage
from skimage.draw import line as draw_line
from skimage.draw import polygon as draw_polygon

SLOTS = ("upper", "lower")
PATTERNS = ("solid", "stripes", "checker")
LENGTHS = ("short", "long")
TUCKS = ("in", "out")

# Garment palette, indexed by color_id. Chosen far apart in RGB so that
# nearest-palette classification survives small brightness shifts.
PALETTE = np.array(
    [
        [0.90, 0.10, 0.10],  # red
        [0.10, 0.75, 0.20],  # green
        [0.15, 0.25, 0.90],  # blue
        [0.95, 0.85, 0.10],  # yellow
        [0.80, 0.20, 0.80],  # magenta
        [0.10, 0.80, 0.85],  # cyan
    ],
    dtype=np.float32,
)
SKIN = np.array([0.87, 0.68, 0.55], dtype=np.float32)
INK = np.array([0.12, 0.12, 0.12], dtype=np.float32)
FLATLAY_BG = np.array([1.0, 1.0, 1.0], dtype=np.float32)

# Pose-map limb colors (one per bone); keypoints are drawn white.
_BONES = (
    ("head", "neck"),
    ("neck", "l_shoulder"),
    ("neck", "r_shoulder"),
    ("l_shoulder", "l_elbow"),
    ("l_elbow", "l_wrist"),
    ("r_shoulder", "r_elbow"),
    ("r_elbow", "r_wrist"),
    ("neck", "l_hip"),
    ("neck", "r_hip"),
    ("l_hip", "l_knee"),
    ("l_knee", "l_ankle"),
    ("r_hip", "r_knee"),
    ("r_knee", "r_ankle"),
)
_BONE_COLORS = np.array(
    [
        [1.0, 0.0, 0.0],
        [1.0, 0.33, 0.0],
        [1.0, 0.66, 0.0],
        [1.0, 1.0, 0.0],
        [0.66, 1.0, 0.0],
        [0.33, 1.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 1.0, 0.33],
        [0.0, 1.0, 0.66],
        [0.0, 1.0, 1.0],
        [0.0, 0.66, 1.0],
        [0.0, 0.33, 1.0],
        [0.0, 0.0, 1.0],
    ],
    dtype=np.float32,
)

LONG_MIN_HEIGHT = 0.45  # long garments span at least this fraction of H


@dataclass(frozen=True)
class GarmentStyle:
    slot: str
    color_id: int
    pattern: str
    length: str
    tuck: str

    def __post_init__(self):
        if self.slot not in SLOTS:
            raise ValueError(f"unknown slot {self.slot!r}")
        if not 0 <= self.color_id < len(PALETTE):
            raise ValueError(f"color_id out of range: {self.color_id}")
        if self.pattern not in PATTERNS:
            raise ValueError(f"unknown pattern {self.pattern!r}")
        if self.length not in LENGTHS:
            raise ValueError(f"unknown length {self.length!r}")
        if self.tuck not in TUCKS:
            raise ValueError(f"unknown tuck {self.tuck!r}")


@dataclass(frozen=True)
class StyleAttrs:
    """Structured dressing-style description, one record per garment."""

    garments: tuple[GarmentStyle, ...]

    def __post_init__(self):
        slots = [g.slot for g in self.garments]
        if len(set(slots)) != len(slots):
            raise ValueError(f"duplicate slots in style: {slots}")

    def by_slot(self) -> dict[str, GarmentStyle]:
        return {g.slot: g for g in self.garments}


@dataclass(frozen=True)
class SynthConfig:
    height: int = 64
    width: int = 64
    garment_size: int = 32
    n_max: int = 2
    style_null_rate: float = 0.1
    patch_size: int = 4

    def validate(self) -> None:
        step = 2 * self.patch_size
        if self.height % step or self.width % step:
            raise ValueError(
                f"H={self.height}, W={self.width} must be multiples of 2*patch_size={step}"
            )
        if self.garment_size % self.patch_size:
            raise ValueError(
                f"garment_size={self.garment_size} must be a multiple of patch_size={self.patch_size}"
            )
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if not 0.0 <= self.style_null_rate <= 1.0:
            raise ValueError("style_null_rate must be in [0, 1]")


@dataclass
class TryOnSample:
    """One paired try-on example.

    ``garments[i]``, ``garment_attrs[i]``, ``garment_masks[i]`` and
    ``garment_silhouettes[i]`` describe the same conditioned garment. The mask
    holds its visible pixels in ``target``; the silhouette is its full extent
    on the body before other garments are layered over it. ``garment_attrs`` is
    ground truth and is kept even when the style prompt (``style``) was dropped.
    """

    person: np.ndarray
    garments: list[np.ndarray]
    agnostic_mask: np.ndarray
    pose_map: np.ndarray
    parsing_mask: np.ndarray
    style: Optional[StyleAttrs]
    target: np.ndarray
    seed: int
    garment_attrs: tuple[GarmentStyle, ...] = ()
    garment_masks: list[np.ndarray] = field(default_factory=list)
    garment_silhouettes: list[np.ndarray] = field(default_factory=list)

    @property
    def n_garments(self) -> int:
        return len(self.garments)


# ---------------------------------------------------------------------------
# rasterization helpers


def _grid(h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    ys, xs = np.mgrid[0:h, 0:w]
    return ys + 0.5, xs + 0.5


def _capsule(h, w, p0, p1, r):
    """Pixels within distance r of segment p0-p1; points are (y, x) in pixels."""
    yy, xx = _grid(h, w)
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    d = p1 - p0
    denom = float(d @ d)
    if denom == 0.0:
        s = np.zeros_like(yy)
    else:
        s = np.clip(((yy - p0[0]) * d[0] + (xx - p0[1]) * d[1]) / denom, 0.0, 1.0)
    dy = yy - (p0[0] + s * d[0])
    dx = xx - (p0[1] + s * d[1])
    return dy * dy + dx * dx <= r * r


def _disc(h, w, c, r):
    yy, xx = _grid(h, w)
    return (yy - c[0]) ** 2 + (xx - c[1]) ** 2 <= r * r


def _poly(h, w, pts):
    pts = np.asarray(pts, dtype=np.float64)
    rr, cc = draw_polygon(pts[:, 0], pts[:, 1], shape=(h, w))
    m = np.zeros((h, w), dtype=bool)
    m[rr, cc] = True
    return m


def _pattern_mask(h, w, pattern):
    ys, xs = np.mgrid[0:h, 0:w]
    if pattern == "solid":
        return np.zeros((h, w), dtype=bool)
    if pattern == "stripes":
        return ys % 3 == 0
    return (xs % 4 < 2) & (ys % 4 < 2)


def _paint_garment(img, region, style: GarmentStyle):
    img[region] = PALETTE[style.color_id]
    ink = region & _pattern_mask(img.shape[0], img.shape[1], style.pattern)
    img[ink] = INK


# ---------------------------------------------------------------------------
# skeleton and body


def _skeleton(rng: np.random.Generator, H: int, W: int) -> dict[str, np.ndarray]:
    cx = (0.5 + rng.uniform(-0.08, 0.08)) * W
    dy = rng.uniform(-0.02, 0.02) * H
    sx = W / H  # horizontal offsets are fractions of H, scaled to width

    def pt(yf, xoff):
        return np.array([yf * H + dy, cx + xoff * H * sx])

    kp = {
        "head": pt(0.11, 0.0),
        "neck": pt(0.19, 0.0),
        "l_shoulder": pt(0.23, -0.12),
        "r_shoulder": pt(0.23, 0.12),
        "l_hip": pt(0.54, -0.075),
        "r_hip": pt(0.54, 0.075),
    }
    for side, sign in (("l", -1.0), ("r", 1.0)):
        a1 = np.deg2rad(rng.uniform(10.0, 60.0))
        a2 = a1 + np.deg2rad(rng.uniform(-20.0, 40.0))
        sh = kp[f"{side}_shoulder"]
        el = sh + 0.17 * H * np.array([np.cos(a1), sign * np.sin(a1) * sx])
        wr = el + 0.16 * H * np.array([np.cos(a2), sign * np.sin(a2) * sx])
        kp[f"{side}_elbow"] = el
        kp[f"{side}_wrist"] = wr

        b = np.deg2rad(rng.uniform(0.0, 12.0))
        hip = kp[f"{side}_hip"]
        kn = hip + 0.20 * H * np.array([np.cos(b), sign * np.sin(b) * sx])
        an = kn + 0.21 * H * np.array([np.cos(b), sign * np.sin(b) * sx])
        kp[f"{side}_knee"] = kn
        kp[f"{side}_ankle"] = an
    return kp


def _body_mask(kp, H, W):
    r_arm, r_leg = 0.03 * H, 0.04 * H
    m = _disc(H, W, kp["head"], 0.075 * H)
    m |= _capsule(H, W, kp["head"], kp["neck"], 0.03 * H)
    m |= _poly(H, W, [kp["l_shoulder"], kp["r_shoulder"], kp["r_hip"], kp["l_hip"]])
    for s in "lr":
        m |= _capsule(H, W, kp[f"{s}_shoulder"], kp[f"{s}_elbow"], r_arm)
        m |= _capsule(H, W, kp[f"{s}_elbow"], kp[f"{s}_wrist"], r_arm)
        m |= _capsule(H, W, kp[f"{s}_hip"], kp[f"{s}_knee"], r_leg)
        m |= _capsule(H, W, kp[f"{s}_knee"], kp[f"{s}_ankle"], r_leg)
    return m


def _upper_region(kp, H, W, style: GarmentStyle):
    pad = 0.02 * H
    ls, rs, lh, rh = kp["l_shoulder"], kp["r_shoulder"], kp["l_hip"], kp["r_hip"]
    if style.length == "long":
        hem = 0.17 * H
    elif style.tuck == "in":
        hem = -0.04 * H
    else:
        hem = 0.02 * H
    top_l = ls + np.array([-0.01 * H, -pad])
    top_r = rs + np.array([-0.01 * H, pad])
    bot_r = rh + np.array([hem, pad + 0.01 * H])
    bot_l = lh + np.array([hem, -pad - 0.01 * H])
    m = _poly(H, W, [top_l, top_r, bot_r, bot_l])
    r = 0.045 * H
    for s in "lr":
        sh, el, wr = kp[f"{s}_shoulder"], kp[f"{s}_elbow"], kp[f"{s}_wrist"]
        if style.length == "long":
            m |= _capsule(H, W, sh, el, r) | _capsule(H, W, el, wr, r)
        else:
            m |= _capsule(H, W, sh, sh + 0.55 * (el - sh), r)
    return m


def _lower_region(kp, H, W, style: GarmentStyle):
    lh, rh = kp["l_hip"], kp["r_hip"]
    waist = -0.04 * H
    pad = 0.025 * H
    m = _poly(
        H,
        W,
        [
            lh + np.array([waist, -pad]),
            rh + np.array([waist, pad]),
            rh + np.array([0.02 * H, pad]),
            lh + np.array([0.02 * H, -pad]),
        ],
    )
    r = 0.05 * H
    for s in "lr":
        hip, kn, an = kp[f"{s}_hip"], kp[f"{s}_knee"], kp[f"{s}_ankle"]
        if style.length == "long":
            m |= _capsule(H, W, hip, kn, r) | _capsule(H, W, kn, an, r)
        else:
            m |= _capsule(H, W, hip, hip + 0.5 * (kn - hip), r)
    return m


def _garment_region(kp, H, W, style):
    if style.slot == "upper":
        return _upper_region(kp, H, W, style)
    return _lower_region(kp, H, W, style)


def _dress(base: np.ndarray, kp, outfit: dict[str, GarmentStyle]):
    """Paint the outfit over ``base``; returns the image and visible regions per slot."""
    H, W = base.shape[:2]
    img = base.copy()
    regions = {slot: _garment_region(kp, H, W, st) for slot, st in outfit.items()}
    upper = outfit.get("upper")
    order = ["lower", "upper"]
    if upper is not None and upper.tuck == "in":
        order = ["upper", "lower"]
    visible = {}
    for slot in order:
        if slot in outfit:
            _paint_garment(img, regions[slot], outfit[slot])
            for prev in visible:
                visible[prev] &= ~regions[slot]
            visible[slot] = regions[slot].copy()
    return img, regions, visible


def _pose_map(kp, H, W):
    pose = np.zeros((H, W, 3), dtype=np.float32)

    def ij(p):
        return int(np.clip(np.floor(p[0]), 0, H - 1)), int(np.clip(np.floor(p[1]), 0, W - 1))

    for (a, b), color in zip(_BONES, _BONE_COLORS):
        r0, c0 = ij(kp[a])
        r1, c1 = ij(kp[b])
        rr, cc = draw_line(r0, c0, r1, c1)
        pose[rr, cc] = color
    for p in kp.values():
        r, c = ij(p)
        r = min(r, H - 2)
        c = min(c, W - 2)
        pose[r : r + 2, c : c + 2] = 1.0
    return pose


# ---------------------------------------------------------------------------
# flat-lay garments


def render_flatlay(style: GarmentStyle, size: int) -> np.ndarray:
    """Isolated garment on a white background, as a product photo would show it."""
    S = size
    img = np.tile(FLATLAY_BG, (S, S, 1)).astype(np.float32)
    c = S / 2.0
    if style.slot == "upper":
        hem = 0.92 * S if style.length == "long" else 0.68 * S
        m = _poly(S, S, [(0.12 * S, c - 0.2 * S), (0.12 * S, c + 0.2 * S), (hem, c + 0.2 * S), (hem, c - 0.2 * S)])
        reach = 0.42 * S if style.length == "long" else 0.17 * S
        for sign in (-1.0, 1.0):
            p0 = np.array([0.17 * S, c + sign * 0.17 * S])
            p1 = p0 + reach * np.array([0.8, sign * 0.6])
            m |= _capsule(S, S, p0, p1, 0.08 * S)
    else:
        bottom = 0.95 * S if style.length == "long" else 0.5 * S
        m = _poly(S, S, [(0.06 * S, c - 0.25 * S), (0.06 * S, c + 0.25 * S), (0.22 * S, c + 0.25 * S), (0.22 * S, c - 0.25 * S)])
        for sign in (-1.0, 1.0):
            x0 = c + sign * 0.14 * S
            m |= _poly(
                S,
                S,
                [(0.2 * S, x0 - 0.11 * S), (0.2 * S, x0 + 0.11 * S), (bottom, x0 + 0.11 * S), (bottom, x0 - 0.11 * S)],
            )
            m &= ~_poly(S, S, [(0.3 * S, c - 0.03 * S), (0.3 * S, c + 0.03 * S), (S, c + 0.03 * S), (S, c - 0.03 * S)])
    _paint_garment(img, m, style)
    return img


# ---------------------------------------------------------------------------
# sampling


def _random_style(rng: np.random.Generator, slot: str, avoid_color: Optional[int] = None) -> GarmentStyle:
    colors = [i for i in range(len(PALETTE)) if i != avoid_color]
    color = int(colors[rng.integers(len(colors))])
    pattern = PATTERNS[rng.integers(len(PATTERNS))]
    length = LENGTHS[rng.integers(len(LENGTHS))]
    # only short tops can be tucked; long tops and bottoms are always worn out
    if slot == "upper" and length == "short":
        tuck = TUCKS[rng.integers(len(TUCKS))]
    else:
        tuck = "out"
    return GarmentStyle(slot, color, pattern, length, tuck)


def gen_sample(seed: int, cfg: SynthConfig = SynthConfig()) -> TryOnSample:
    cfg.validate()
    H, W = cfg.height, cfg.width
    rng = np.random.default_rng([int(seed), H, W, cfg.garment_size, cfg.n_max])

    kp = _skeleton(rng, H, W)
    bg_level = rng.uniform(0.75, 0.95)
    base = np.full((H, W, 3), bg_level, dtype=np.float32)
    body = _body_mask(kp, H, W)
    base[body] = SKIN

    original = {slot: _random_style(rng, slot) for slot in SLOTS}
    n = int(rng.integers(1, min(cfg.n_max, len(SLOTS)) + 1))
    slots = [str(s) for s in rng.permutation(SLOTS)[:n]]
    new = {slot: _random_style(rng, slot, avoid_color=original[slot].color_id) for slot in slots}
    outfit = {**original, **new}
    # a long top would hide most of a short bottom; keep conditioned bottoms visible
    low = new.get("lower")
    if low is not None and low.length == "short" and outfit["upper"].length == "long":
        new["lower"] = GarmentStyle("lower", low.color_id, low.pattern, "long", low.tuck)
        outfit["lower"] = new["lower"]

    person, old_regions, _ = _dress(base, kp, original)
    target, new_regions, visible = _dress(base, kp, outfit)

    edit = np.zeros((H, W), dtype=bool)
    for slot in slots:
        edit |= old_regions[slot] | new_regions[slot]
    margin = max(1, H // 32)
    agnostic = ndimage.binary_dilation(edit, iterations=margin)
    agnostic |= np.any(person != target, axis=-1)

    parsing = body.copy()
    for r in list(old_regions.values()) + list(new_regions.values()):
        parsing |= r

    attrs = tuple(new[s] for s in slots)
    garments = [render_flatlay(a, cfg.garment_size) for a in attrs]
    masks = [visible[s].astype(np.uint8) for s in slots]
    silhouettes = [new_regions[s].astype(np.uint8) for s in slots]
    style = None if rng.random() < cfg.style_null_rate else StyleAttrs(attrs)

    return TryOnSample(
        person=person,
        garments=garments,
        agnostic_mask=agnostic.astype(np.uint8),
        pose_map=_pose_map(kp, H, W),
        parsing_mask=parsing.astype(np.uint8),
        style=style,
        target=target,
        seed=int(seed),
        garment_attrs=attrs,
        garment_masks=masks,
        garment_silhouettes=silhouettes,
    )


# ---------------------------------------------------------------------------
# style prompt tokens

NULL_TOK = 0
ABSENT_TOK = 1
_FIELDS = (
    ("slot", SLOTS),
    ("color_id", tuple(range(len(PALETTE)))),
    ("pattern", PATTERNS),
    ("length", LENGTHS),
    ("tuck", TUCKS),
)
_OFFSETS = {}
_next = 2
for _name, _values in _FIELDS:
    _OFFSETS[_name] = _next
    _next += len(_values)
STYLE_VOCAB_SIZE = _next
STYLE_TEXT_LEN = len(SLOTS) * len(_FIELDS)


def style_to_tokens(style: Optional[StyleAttrs]) -> list[int]:
    """Serialize a style to a fixed-length id sequence, one 5-token record per slot.

    A null style becomes ``[NULL_TOK] * STYLE_TEXT_LEN``; a slot without a
    garment is filled with ``ABSENT_TOK``.
    """
    if style is None:
        return [NULL_TOK] * STYLE_TEXT_LEN
    by_slot = style.by_slot()
    out: list[int] = []
    for slot in SLOTS:
        g = by_slot.get(slot)
        if g is None:
            out.extend([ABSENT_TOK] * len(_FIELDS))
            continue
        for name, values in _FIELDS:
            out.append(_OFFSETS[name] + values.index(getattr(g, name)))
    return out


def tokens_to_style(tokens: Sequence[int]) -> Optional[StyleAttrs]:
    tokens = list(tokens)
    if len(tokens) != STYLE_TEXT_LEN:
        raise ValueError(f"expected {STYLE_TEXT_LEN} tokens, got {len(tokens)}")
    if all(t == NULL_TOK for t in tokens):
        return None
    k = len(_FIELDS)
    records = []
    for i, slot in enumerate(SLOTS):
        chunk = tokens[i * k : (i + 1) * k]
        if all(t == ABSENT_TOK for t in chunk):
            continue
        kw = {}
        for (name, values), tok in zip(_FIELDS, chunk):
            idx = tok - _OFFSETS[name]
            if not 0 <= idx < len(values):
                raise ValueError(f"token {tok} is not a valid {name}")
            kw[name] = values[idx]
        if kw["slot"] != slot:
            raise ValueError(f"record {i} carries slot {kw['slot']!r}, expected {slot!r}")
        records.append(GarmentStyle(**kw))
    return StyleAttrs(tuple(records))


# ---------------------------------------------------------------------------
# binary records
#
# Layout (little-endian):
#   b"PRMO" | u16 version | u16 H | u16 W | u16 N | u16 garment_size | i64 seed
#   person      f32[3][H][W]
#   pose_map    f32[3][H][W]
#   target      f32[3][H][W]
#   agnostic    u8[H][W]
#   parsing     u8[H][W]
#   N times: garment f32[3][S][S], garment_mask u8[H][W], silhouette u8[H][W],
#            attrs u8[5]
#   u8 has_style, then (if set) u8 n_records and n_records * u8[5]
# attrs are (slot, color_id, pattern, length, tuck) as vocabulary indices.

MAGIC = b"PRMO"
VERSION = 1
_HEADER = struct.Struct("<4sHHHHHq")


def _attrs_bytes(g: GarmentStyle) -> bytes:
    return bytes(
        [SLOTS.index(g.slot), g.color_id, PATTERNS.index(g.pattern), LENGTHS.index(g.length), TUCKS.index(g.tuck)]
    )


def _attrs_from(b: bytes) -> GarmentStyle:
    return GarmentStyle(SLOTS[b[0]], int(b[1]), PATTERNS[b[2]], LENGTHS[b[3]], TUCKS[b[4]])


def _planes(img: np.ndarray) -> bytes:
    return np.ascontiguousarray(np.transpose(img, (2, 0, 1)), dtype="<f4").tobytes()


def sample_to_bytes(s: TryOnSample) -> bytes:
    H, W = s.person.shape[:2]
    S = s.garments[0].shape[0] if s.garments else 0
    parts = [_HEADER.pack(MAGIC, VERSION, H, W, len(s.garments), S, s.seed)]
    parts += [_planes(s.person), _planes(s.pose_map), _planes(s.target)]
    parts += [s.agnostic_mask.astype(np.uint8).tobytes(), s.parsing_mask.astype(np.uint8).tobytes()]
    for g, m, sil, a in zip(s.garments, s.garment_masks, s.garment_silhouettes, s.garment_attrs):
        parts += [_planes(g), m.astype(np.uint8).tobytes(), sil.astype(np.uint8).tobytes(), _attrs_bytes(a)]
    if s.style is None:
        parts.append(b"\x00")
    else:
        parts.append(bytes([1, len(s.style.garments)]))
        parts += [_attrs_bytes(g) for g in s.style.garments]
    return b"".join(parts)


def sample_from_bytes(buf: bytes) -> TryOnSample:
    magic, version, H, W, N, S, seed = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"unsupported record version {version}")
    off = _HEADER.size

    def take(n):
        nonlocal off
        chunk = buf[off : off + n]
        if len(chunk) != n:
            raise ValueError("truncated record")
        off += n
        return chunk

    def img(h, w):
        a = np.frombuffer(take(3 * h * w * 4), dtype="<f4").reshape(3, h, w)
        return np.transpose(a, (1, 2, 0)).astype(np.float32)

    def mask():
        return np.frombuffer(take(H * W), dtype=np.uint8).reshape(H, W).copy()

    person, pose, target = img(H, W), img(H, W), img(H, W)
    agnostic, parsing = mask(), mask()
    garments, masks, silhouettes, attrs = [], [], [], []
    for _ in range(N):
        garments.append(img(S, S))
        masks.append(mask())
        silhouettes.append(mask())
        attrs.append(_attrs_from(take(5)))
    style = None
    if take(1)[0]:
        n = take(1)[0]
        style = StyleAttrs(tuple(_attrs_from(take(5)) for _ in range(n)))
    return TryOnSample(
        person=person,
        garments=garments,
        agnostic_mask=agnostic,
        pose_map=pose,
        parsing_mask=parsing,
        style=style,
        target=target,
        seed=int(seed),
        garment_attrs=tuple(attrs),
        garment_masks=masks,
        garment_silhouettes=silhouettes,
    )


def write_dataset(directory: str | Path, seeds: Sequence[int], cfg: SynthConfig) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for seed in seeds:
        path = directory / f"{int(seed):08d}.prmo"
        path.write_bytes(sample_to_bytes(gen_sample(seed, cfg)))
        paths.append(path)
    return paths


def read_sample(path: str | Path) -> TryOnSample:
    return sample_from_bytes(Path(path).read_bytes())
