"""Synthetic striatal uptake phantoms with known ground truth.

Each subject image holds two mirrored "comma" ridges (caudate head at the
top, putamen tail curving down and lateral) drawn along a quadratic Bezier
spine with a Gaussian cross-section, a faint medial bridge joining the two
caudate heads, and a diffuse brain background.  Degenerate (PD) subjects
lose intensity along the posterior part of the spine, more on one side,
which turns the comma into a dot.  The defaults are tuned so that cohort
feature means fall inside the ranges reported for real scans; they are a
calibration target, not a physical model.
"""

import math
from dataclasses import asdict, dataclass, replace
from typing import List, Tuple

import numpy as np
from scipy import ndimage

from .exceptions import InvalidSpec
from .preprocess import MeanImage, normalize_unit
from .volume_io import SbrRecord, Volume

WIDTH, HEIGHT, DEPTH = 91, 109, 91
PEAK_SLICE = 42
GROUPS = ("Normal", "SWEDD", "PD")
_GROUP_STREAM = {"Normal": 0, "SWEDD": 1, "PD": 2}


@dataclass(frozen=True)
class PhantomSpec:
    """Generation parameters for one group.

    Lengths are in pixels, angles in degrees (counterclockwise on screen),
    intensities relative to an unattenuated striatal peak of 1.
    """

    group: str = "Normal"
    n_subjects: int = 50
    seed: int = 0
    # spine geometry
    spine_length: float = 8.2
    spine_length_sd: float = 0.3
    spine_angle: float = 58.0
    spine_angle_sd: float = 5.0
    spine_curvature: float = 14.0
    head_x: float = 36.0
    head_y: float = 48.0
    head_jitter: float = 0.7
    width_head: float = 3.9
    width_tail: float = 3.4
    width_sd: float = 0.35
    # intensity along the spine: head 1, tail 1 - tail_drop, mid dip
    tail_drop: float = 0.20
    tail_drop_sd: float = 0.03
    saddle: float = 0.20
    saddle_sd: float = 0.15
    # posterior loss (PD)
    posterior_attenuation: float = 0.0
    posterior_attenuation_sd: float = 0.0
    attenuation_onset: float = 0.35
    # extra loss on the right side, split between posterior loss and overall amplitude
    asymmetry: float = 0.0
    asymmetry_sd: float = 0.03
    asymmetry_amplitude_share: float = 0.5
    # per-subject anterior-posterior intensity tilt (fraction per 10 px)
    tilt_sd: float = 0.0
    # surroundings
    bridge_level: float = 0.56
    bridge_level_sd: float = 0.01
    # the bridge rises relative to the striatum as posterior uptake is lost
    bridge_loss_gain: float = 0.11
    background_level: float = 0.30
    noise_sd: float = 0.14
    smoothing_sd: float = 1.6

    def validate(self):
        if self.group not in GROUPS:
            raise InvalidSpec(f"unknown group {self.group!r}")
        if self.n_subjects < 0:
            raise InvalidSpec("n_subjects must be non-negative")
        for name in ("spine_length", "width_head", "width_tail"):
            if not getattr(self, name) > 0:
                raise InvalidSpec(f"{name} must be positive")
        if not 0 <= self.posterior_attenuation <= 1:
            raise InvalidSpec("posterior_attenuation must lie in [0, 1]")
        if not 0 <= self.asymmetry_amplitude_share <= 1:
            raise InvalidSpec("asymmetry_amplitude_share must lie in [0, 1]")
        if not 0 <= self.attenuation_onset < 1:
            raise InvalidSpec("attenuation_onset must lie in [0, 1)")
        for name in ("noise_sd", "smoothing_sd", "spine_length_sd", "spine_angle_sd",
                     "width_sd", "head_jitter", "tail_drop_sd", "saddle_sd", "tilt_sd", "asymmetry_sd", "bridge_level_sd",
                     "posterior_attenuation_sd", "background_level"):
            if getattr(self, name) < 0:
                raise InvalidSpec(f"{name} must be non-negative")
        return self


@dataclass(frozen=True)
class PhantomTruth:
    subject_id: str
    group: str
    asymmetry: float
    posterior_loss_left: float
    posterior_loss_right: float
    threshold_hint: float

    @property
    def posterior_loss(self):
        return (self.posterior_loss_left + self.posterior_loss_right) / 2


def calibrate_defaults():
    """Default per-group specs (tuned against published cohort means)."""
    normal = PhantomSpec(group="Normal")
    swedd = replace(normal, group="SWEDD")
    pd = replace(
        normal,
        group="PD",
        posterior_attenuation=0.75,
        posterior_attenuation_sd=0.20,
        attenuation_onset=0.15,
        asymmetry=0.45,
        asymmetry_amplitude_share=0.4,
        asymmetry_sd=0.35,
        # a dot has a poorly defined long axis
        spine_angle_sd=15.0,
    )
    return {"Normal": normal, "SWEDD": swedd, "PD": pd}


def _spine(head, length, angle_deg, bend_deg, n=160):
    """Quadratic Bezier from the head down-laterally to the tail."""
    phi = math.radians(angle_deg + 180.0)  # head -> tail, screen angle
    bend = math.radians(bend_deg)
    p0 = np.asarray(head, dtype=np.float64)
    p2 = p0 + length * np.array([math.cos(phi), -math.sin(phi)])
    reach = (length / 2) / math.cos(bend)
    # head tangent is flatter than the chord
    p1 = p0 + reach * np.array([math.cos(phi - bend), -math.sin(phi - bend)])
    s = np.linspace(0.0, 1.0, n)[:, None]
    pts = (1 - s) ** 2 * p0 + 2 * (1 - s) * s * p1 + s ** 2 * p2
    return s[:, 0], pts


def _ridge(xx, yy, s, pts, amp, width):
    """max over spine samples of amp(s) * exp(-d^2 / (2 w(s)^2))."""
    out = np.zeros_like(xx)
    for k in range(len(s)):
        d2 = (xx - pts[k, 0]) ** 2 + (yy - pts[k, 1]) ** 2
        np.maximum(out, amp[k] * np.exp(-d2 / (2 * width[k] ** 2)), out=out)
    return out


def _attenuation(s, strength, onset):
    ramp = np.clip((s - onset) / (1 - onset), 0.0, 1.0)
    ramp = ramp * ramp * (3 - 2 * ramp)
    return 1.0 - strength * ramp


def _draw_subject(spec, rng):
    """Noise-free activity map plus the per-subject truth parameters."""
    yy, xx = np.mgrid[0:HEIGHT, 0:WIDTH].astype(np.float64)

    length = max(4.0, rng.normal(spec.spine_length, spec.spine_length_sd))
    angle = rng.normal(spec.spine_angle, spec.spine_angle_sd)
    head = (rng.normal(spec.head_x, spec.head_jitter), rng.normal(spec.head_y, spec.head_jitter))
    wh = max(1.0, rng.normal(spec.width_head, spec.width_sd))
    wt = max(1.0, rng.normal(spec.width_tail, spec.width_sd))
    loss = float(np.clip(rng.normal(spec.posterior_attenuation, spec.posterior_attenuation_sd), 0, 1))
    asym = float(rng.normal(spec.asymmetry, spec.asymmetry_sd))
    tail_drop = float(np.clip(rng.normal(spec.tail_drop, spec.tail_drop_sd), 0, 0.9))
    saddle = float(np.clip(rng.normal(spec.saddle, spec.saddle_sd), 0, 0.5))
    bridge = rng.normal(spec.bridge_level, spec.bridge_level_sd) + spec.bridge_loss_gain * loss

    s, pts = _spine(head, length, angle, spec.spine_curvature)
    # the mid-spine dip fades as the posterior part is lost
    base = (1 - tail_drop * s) - saddle * (1 - loss) * 4 * s * (1 - s)
    width = wh + (wt - wh) * s
    share = spec.asymmetry_amplitude_share
    loss_l = float(np.clip(loss - (1 - share) * asym / 2, 0, 1))
    loss_r = float(np.clip(loss + (1 - share) * asym / 2, 0, 1))
    gain_l = 1 + share * asym / 2
    gain_r = 1 - share * asym / 2

    left = gain_l * _ridge(xx, yy, s, pts, base * _attenuation(s, loss_l, spec.attenuation_onset), width)
    mirrored = pts.copy()
    mirrored[:, 0] = WIDTH - 1 - mirrored[:, 0]
    right = gain_r * _ridge(xx, yy, s, mirrored, base * _attenuation(s, loss_r, spec.attenuation_onset), width)
    striatum = np.maximum(left, right)
    tilt = rng.normal(0.0, spec.tilt_sd) if spec.tilt_sd > 0 else 0.0
    striatum = striatum * np.clip(1 + tilt * (yy - head[1]) / 10, 0, None)

    # medial bridge between the caudate heads
    hx = min(head[0], WIDTH - 1 - head[0])
    span = np.clip((xx - hx) * (WIDTH - 1 - hx - xx), 0, None) > 0
    bridge_map = bridge * np.exp(-((yy - head[1]) ** 2) / (2 * 2.5 ** 2)) * span

    # diffuse brain background (ellipse with soft edge)
    r = np.sqrt(((xx - (WIDTH - 1) / 2) / 38) ** 2 + ((yy - (HEIGHT - 1) / 2) / 48) ** 2)
    background = spec.background_level / (1 + np.exp((r - 1) / 0.05))

    activity = np.maximum(striatum, bridge_map) + background
    truth = dict(asymmetry=asym, posterior_loss_left=loss_l,
                 posterior_loss_right=loss_r, bridge=bridge)
    return activity, truth


def _noisy(activity, spec, rng):
    noisy = activity + spec.noise_sd * np.sqrt(np.clip(activity, 0, None)) * rng.standard_normal(activity.shape)
    if spec.smoothing_sd > 0:
        noisy = ndimage.gaussian_filter(noisy, spec.smoothing_sd, mode="constant")
    return noisy


def _subject_rngs(spec):
    root = np.random.SeedSequence([spec.seed, _GROUP_STREAM[spec.group]])
    return [np.random.default_rng(ss) for ss in root.spawn(spec.n_subjects)]


def generate_cohort(spec, as_volume=False, depth=DEPTH, peak_slice=PEAK_SLICE,
                    slice_sd=4.0) -> List[Tuple[object, PhantomTruth]]:
    """Generate ``spec.n_subjects`` subjects of one group.

    Returns ``(image, truth)`` pairs; images are :class:`MeanImage` by
    default or, with ``as_volume``, :class:`Volume` objects whose striatal
    activity peaks at ``peak_slice`` with a Gaussian axial profile.
    """
    spec.validate()
    out = []
    prefix = spec.group.lower()
    for i, rng in enumerate(_subject_rngs(spec)):
        activity, t = _draw_subject(spec, rng)
        truth = PhantomTruth(
            subject_id=f"{prefix}{spec.seed:03d}_{i:04d}",
            group=spec.group,
            asymmetry=t["asymmetry"],
            posterior_loss_left=t["posterior_loss_left"],
            posterior_loss_right=t["posterior_loss_right"],
            threshold_hint=float(t["bridge"]),
        )
        if as_volume:
            out.append((_volume(activity, spec, rng, depth, peak_slice, slice_sd), truth))
        else:
            out.append((MeanImage(normalize_unit(_noisy(activity, spec, rng))), truth))
    return out


def _volume(activity, spec, rng, depth, peak_slice, slice_sd):
    """Stack slices whose striatal/bridge component fades away from ``peak_slice``."""
    yy, xx = np.mgrid[0:HEIGHT, 0:WIDTH].astype(np.float64)
    r = np.sqrt(((xx - (WIDTH - 1) / 2) / 38) ** 2 + ((yy - (HEIGHT - 1) / 2) / 48) ** 2)
    background = spec.background_level / (1 + np.exp((r - 1) / 0.05))
    focal = activity - background
    # per-slice noise is larger than in the averaged image
    slice_spec = replace(spec, noise_sd=spec.noise_sd * 2.0)
    data = np.empty((WIDTH, HEIGHT, depth))
    for k in range(depth):
        w = math.exp(-((k - peak_slice) ** 2) / (2 * slice_sd ** 2))
        sl = background + w * focal
        data[:, :, k] = _noisy(sl, slice_spec, rng).T
    return Volume(data, (2.0, 2.0, 2.0))


# (healthy level, drop at full posterior loss, noise sd) per structure
SBR_MODEL = {"caudate": (2.9, 0.9, 0.8), "putamen": (2.15, 1.5, 0.6)}


def synthetic_sbr(truths, seed=0, model=None):
    """Binding ratios that fall linearly with each side's true posterior loss.

    The putamen drops more than the caudate and is less noisy, so its SBR
    is the stronger of the two.  Values are clipped at 0.05.
    """
    model = SBR_MODEL if model is None else model
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    out = []
    for t in truths:
        vals = {}
        for name, (level, drop, sd) in model.items():
            for side, loss in (("left", t.posterior_loss_left), ("right", t.posterior_loss_right)):
                vals[f"{name}_{side}"] = max(0.05, level - drop * loss + sd * rng.standard_normal())
        out.append(SbrRecord(t.subject_id, **vals))
    return out


def cohort_to_dict(spec):
    return asdict(spec)
