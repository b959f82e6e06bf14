"""Two-dimensional biplot geometry and SVG rendering.

The plot shows a chosen pair of model dimensions: category points for
every response class, the decision line of each response (the
perpendicular bisector of its two projected category points), one axis
per predictor through the origin with markers at whole standard
deviations of that predictor, and the subject scores.

All geometry lives in model coordinates. The SVG applies one uniform
scale and a translation, declared in the file, so relative distances
survive rendering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .errors import DataError
from .model import ModelParams, category_coordinates
from .schemas import validate_document

__all__ = [
    "Window",
    "BiplotGeometry",
    "build_geometry",
    "geometry_to_document",
    "render_svg",
]

# geometry below this scale is treated as a point, not a direction
_DEGENERATE = 1e-12

# emit-time tolerance for the bisector construction
_INVARIANT_TOL = 1e-9

# cosmetic cap so near-zero axis directions cannot flood the plot
_MAX_MARKERS_PER_SIDE = 25

# decision lines clutter dense plots; beyond this many responses the
# SVG leaves them out unless explicitly forced
MAX_DECISION_RESPONSES = 6


@dataclass(frozen=True)
class Window:
    """Axis-aligned view rectangle in model coordinates."""

    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError("window must have positive extent")

    def clip_line(self, point, direction):
        """Segment of the infinite line ``point + t*direction`` inside the
        window, or None if it misses."""
        t_lo, t_hi = -math.inf, math.inf
        for q, d, lo, hi in ((point[0], direction[0], self.x0, self.x1),
                             (point[1], direction[1], self.y0, self.y1)):
            if abs(d) < _DEGENERATE:
                if q < lo or q > hi:
                    return None
                continue
            a, b = (lo - q) / d, (hi - q) / d
            if a > b:
                a, b = b, a
            t_lo, t_hi = max(t_lo, a), min(t_hi, b)
        if not (math.isfinite(t_lo) and math.isfinite(t_hi)) or t_lo >= t_hi:
            return None
        p = np.asarray(point, dtype=float)
        d = np.asarray(direction, dtype=float)
        return (p + t_lo * d, p + t_hi * d)

    def contains(self, point) -> bool:
        return (self.x0 <= point[0] <= self.x1
                and self.y0 <= point[1] <= self.y1)


@dataclass(frozen=True)
class CategoryPoint:
    label: str
    response: str
    klass: int
    x: float
    y: float


@dataclass(frozen=True)
class DecisionLine:
    response: str
    midpoint: tuple
    direction: tuple
    segment: tuple | None


@dataclass(frozen=True)
class VariableAxis:
    predictor: str
    direction: tuple
    sd: float
    markers: tuple
    label_position: tuple


@dataclass(frozen=True)
class BiplotGeometry:
    dimension_pair: tuple
    window: Window
    category_points: tuple
    decision_lines: tuple
    variable_axes: tuple
    subject_points: np.ndarray


def _auto_window(points: np.ndarray) -> Window:
    x_lo, y_lo = points.min(axis=0)
    x_hi, y_hi = points.max(axis=0)
    pad_x = 0.05 * (x_hi - x_lo) or 1.0
    pad_y = 0.05 * (y_hi - y_lo) or 1.0
    return Window(x_lo - pad_x, x_hi + pad_x, y_lo - pad_y, y_hi + pad_y)


def _decision_lines(category, response_names, window):
    lines = []
    for r, name in enumerate(response_names):
        v0 = category[2 * r]
        v1 = category[2 * r + 1]
        segment_dir = v0 - v1
        length = float(np.hypot(*segment_dir))
        if length < _DEGENERATE:
            # projected category points coincide; no bisector exists here
            continue
        midpoint = 0.5 * (v0 + v1)
        normal = np.array([-segment_dir[1], segment_dir[0]]) / length
        if abs(float(normal @ segment_dir)) > _INVARIANT_TOL * length:
            raise ValueError("internal geometry invariant violated: decision "
                             "line not orthogonal to its category segment")
        clipped = window.clip_line(midpoint, normal)
        segment = None
        if clipped is not None:
            a, b = clipped
            for end in (a, b):
                gap = abs(np.hypot(*(end - v0)) - np.hypot(*(end - v1)))
                if gap > _INVARIANT_TOL * max(1.0, length):
                    raise ValueError("internal geometry invariant violated: "
                                     "bisector endpoint not equidistant")
            segment = (tuple(map(float, a)), tuple(map(float, b)))
        lines.append(DecisionLine(
            response=name,
            midpoint=tuple(map(float, midpoint)),
            direction=tuple(map(float, normal)),
            segment=segment,
        ))
    return tuple(lines)


def _variable_axes(weights_pair, predictor_names, predictor_sd, window):
    axes = []
    for p, name in enumerate(predictor_names):
        direction = weights_pair[p]
        norm = float(np.hypot(*direction))
        sd = float(predictor_sd[p])
        if norm < _DEGENERATE:
            axes.append(VariableAxis(name, (0.0, 0.0), sd, (), (0.0, 0.0)))
            continue
        markers = []
        step = sd * direction
        if float(np.hypot(*step)) >= _DEGENERATE:
            for sign in (1, -1):
                for t in range(1, _MAX_MARKERS_PER_SIDE + 1):
                    pos = sign * t * step
                    if not window.contains(pos):
                        break
                    markers.append((sign * t, float(pos[0]), float(pos[1])))
        markers.sort()
        clipped = window.clip_line(np.zeros(2), direction)
        if clipped is None:
            label_pos = (0.0, 0.0)
        else:
            # positive side of the variable: the clip endpoint along +direction
            a, b = clipped
            label_pos = b if (b - a) @ direction > 0 else a
            label_pos = tuple(map(float, label_pos))
        axes.append(VariableAxis(name, tuple(map(float, direction)), sd,
                                 tuple(markers), label_pos))
    return tuple(axes)


def build_geometry(params: ModelParams, subject_x, predictor_names,
                   response_names, predictor_sd, pair=(1, 2),
                   window=None) -> BiplotGeometry:
    """Assemble plot geometry for one pair of dimensions.

    ``pair`` uses 1-based dimension numbers.  ``subject_x`` is the
    model-scale (centered, possibly standardized) predictor matrix;
    ``predictor_sd`` holds each predictor's model-scale standard
    deviation, which spaces the axis markers.  ``window`` is either None
    (bounding box of all points plus 5% padding) or a Window.
    """
    m = params.n_dimensions
    if m < 2:
        raise DataError("a biplot needs at least two model dimensions; "
                        "this fit has one")
    i, j = pair
    if i == j:
        raise DataError("the two plotted dimensions must differ")
    for d in (i, j):
        if not 1 <= d <= m:
            raise DataError(f"dimension {d} out of range 1..{m}")
    cols = (i - 1, j - 1)

    subject_x = np.asarray(subject_x, dtype=np.float64)
    if subject_x.ndim != 2 or subject_x.shape[1] != params.n_predictors:
        raise DataError("subject matrix width does not match the weights")
    scores = subject_x @ params.weights[:, cols]
    category = category_coordinates(params)[:, cols]

    if window is None:
        window = _auto_window(np.vstack([scores, category, np.zeros((1, 2))]))

    names = tuple(response_names)
    if len(names) != params.n_responses:
        raise DataError("response name count does not match the parameters")
    predictor_names = tuple(predictor_names)
    if len(predictor_names) != params.n_predictors:
        raise DataError("predictor name count does not match the parameters")
    predictor_sd = np.asarray(predictor_sd, dtype=np.float64)
    if predictor_sd.shape != (params.n_predictors,):
        raise DataError("predictor_sd length does not match the parameters")

    # even rows of the category matrix hold the class-0 points
    points = tuple(
        CategoryPoint(
            label=f"{names[row // 2]}{row % 2}",
            response=names[row // 2],
            klass=row % 2,
            x=float(category[row, 0]),
            y=float(category[row, 1]),
        )
        for row in range(2 * params.n_responses)
    )
    return BiplotGeometry(
        dimension_pair=(int(i), int(j)),
        window=window,
        category_points=points,
        decision_lines=_decision_lines(category, names, window),
        variable_axes=_variable_axes(params.weights[:, cols], predictor_names,
                                     predictor_sd, window),
        subject_points=scores,
    )


def geometry_to_document(geometry: BiplotGeometry) -> dict:
    doc = {
        "format": "geometry",
        "version": 1,
        "dimension_pair": list(geometry.dimension_pair),
        "window": {
            "x0": geometry.window.x0,
            "x1": geometry.window.x1,
            "y0": geometry.window.y0,
            "y1": geometry.window.y1,
        },
        "category_points": [
            {"label": c.label, "response": c.response, "klass": c.klass,
             "x": c.x, "y": c.y}
            for c in geometry.category_points
        ],
        "decision_lines": [
            {"response": line.response,
             "midpoint": list(line.midpoint),
             "direction": list(line.direction),
             "segment": None if line.segment is None
             else [list(line.segment[0]), list(line.segment[1])]}
            for line in geometry.decision_lines
        ],
        "variable_axes": [
            {"predictor": axis.predictor,
             "direction": list(axis.direction),
             "sd": axis.sd,
             "markers": [{"t": t, "x": x, "y": y}
                         for t, x, y in axis.markers],
             "label_position": list(axis.label_position)}
            for axis in geometry.variable_axes
        ],
        "subject_points": geometry.subject_points.tolist(),
    }
    validate_document(doc, "geometry")
    return doc


# ------------------------------------------------------------------- svg #

_DRAWABLE = 720.0
_MARGIN = 50.0


def _fmt(value: float) -> str:
    return repr(float(value))


class _PixelMap:
    """The declared uniform-scale affine map from model to pixel space."""

    def __init__(self, window: Window):
        dx = window.x1 - window.x0
        dy = window.y1 - window.y0
        self.scale = _DRAWABLE / max(dx, dy)
        self.x0 = window.x0
        self.y1 = window.y1
        self.width = math.ceil(dx * self.scale + 2 * _MARGIN)
        self.height = math.ceil(dy * self.scale + 2 * _MARGIN)

    def x(self, value: float) -> float:
        return _MARGIN + (value - self.x0) * self.scale

    def y(self, value: float) -> float:
        return _MARGIN + (self.y1 - value) * self.scale


def render_svg(geometry: BiplotGeometry, decision_lines=None) -> str:
    """Render the geometry as standalone SVG 1.1 text.

    ``decision_lines`` True/False forces them on or off; None draws them
    only when the model has at most MAX_DECISION_RESPONSES responses.
    The output is a pure function of the geometry: no timestamps, no
    randomness.
    """
    if decision_lines is None:
        n_responses = len({c.response for c in geometry.category_points})
        decision_lines = n_responses <= MAX_DECISION_RESPONSES
    pix = _PixelMap(geometry.window)
    w = geometry.window
    out = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{pix.width}" height="{pix.height}" '
        f'viewBox="0 0 {pix.width} {pix.height}" '
        f'data-x0="{_fmt(pix.x0)}" data-y1="{_fmt(pix.y1)}" '
        f'data-scale="{_fmt(pix.scale)}" data-margin="{_fmt(_MARGIN)}">')
    out.append(
        '  <desc>model-to-pixel map: px = margin + (x - x0) * scale, '
        'py = margin + (y1 - y) * scale</desc>')
    out.append(
        f'  <rect x="{_fmt(pix.x(w.x0))}" y="{_fmt(pix.y(w.y1))}" '
        f'width="{_fmt((w.x1 - w.x0) * pix.scale)}" '
        f'height="{_fmt((w.y1 - w.y0) * pix.scale)}" '
        f'fill="white" stroke="#444444" stroke-width="1"/>')

    out.append('  <g class="axes" stroke="#999999" stroke-width="1" '
               'fill="#999999" font-size="13" font-family="sans-serif">')
    for axis in geometry.variable_axes:
        if float(np.hypot(*axis.direction)) < _DEGENERATE:
            continue
        clipped = geometry.window.clip_line(np.zeros(2), axis.direction)
        if clipped is None:
            continue
        (ax, ay), (bx, by) = clipped
        out.append(f'    <line class="axis" x1="{_fmt(pix.x(ax))}" '
                   f'y1="{_fmt(pix.y(ay))}" x2="{_fmt(pix.x(bx))}" '
                   f'y2="{_fmt(pix.y(by))}"/>')
        for _, mx, my in axis.markers:
            out.append(f'    <circle class="marker" cx="{_fmt(pix.x(mx))}" '
                       f'cy="{_fmt(pix.y(my))}" r="2.5"/>')
        lx, ly = axis.label_position
        out.append(f'    <text class="axis-label" x="{_fmt(pix.x(lx))}" '
                   f'y="{_fmt(pix.y(ly))}" stroke="none" fill="#555555">'
                   f'{escape(axis.predictor)}</text>')
    out.append('  </g>')

    out.append('  <g class="subjects" fill="#bbbbbb">')
    for sx, sy in geometry.subject_points:
        out.append(f'    <circle class="subject" cx="{_fmt(pix.x(sx))}" '
                   f'cy="{_fmt(pix.y(sy))}" r="1.5"/>')
    out.append('  </g>')

    if decision_lines:
        out.append('  <g class="decisions" stroke="#2266aa" '
                   'stroke-width="1" stroke-dasharray="5 4">')
        for line in geometry.decision_lines:
            if line.segment is None:
                continue
            (ax, ay), (bx, by) = line.segment
            out.append(f'    <line class="decision" x1="{_fmt(pix.x(ax))}" '
                       f'y1="{_fmt(pix.y(ay))}" x2="{_fmt(pix.x(bx))}" '
                       f'y2="{_fmt(pix.y(by))}"/>')
        out.append('  </g>')

    out.append('  <g class="categories" font-size="13" '
               'font-family="sans-serif">')
    for point in geometry.category_points:
        fill = "#000000" if point.klass == 1 else "#ffffff"
        out.append(f'    <circle class="category" cx="{_fmt(pix.x(point.x))}" '
                   f'cy="{_fmt(pix.y(point.y))}" r="3.5" fill="{fill}" '
                   f'stroke="#000000" stroke-width="1"/>')
        out.append(f'    <text class="category-label" '
                   f'x="{_fmt(pix.x(point.x) + 5.0)}" '
                   f'y="{_fmt(pix.y(point.y) - 5.0)}">'
                   f'{escape(point.label)}</text>')
    out.append('  </g>')
    out.append('</svg>')
    return "\n".join(out) + "\n"
