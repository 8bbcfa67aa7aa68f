"""Phase labels from polygonal regions of the (J1, J2) plane.

Regions are data: a config lists labelled polygons (a label may own several).
A point gets the label of the polygon that contains it, provided it is at
least ``margin`` away from every edge shared with a differently labelled
region.
"""
import numpy as np

from ..errors import ValidationError

LABEL_BITS = {"I": "00", "II": "01", "III": "10", "IV": "11"}


class LabelingError(ValidationError):
    pass


def _inside(pt, poly):
    """Even-odd ray casting; boundary points count as outside."""
    x, y = pt
    inside = False
    n = len(poly)
    for i in range(n):
        (x1, y1), (x2, y2) = poly[i], poly[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if xc > x:
                inside = not inside
    return inside


def _seg_dist(p, a, b):
    p, a, b = map(np.asarray, (p, a, b))
    ab = b - a
    t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0)
    return float(np.linalg.norm(p - a - t * ab))


class PhaseRegions:
    def __init__(self, regions, domain=None):
        """``regions``: {label: [polygon, ...]} with polygons as vertex lists.
        ``domain``: [[j1_min, j1_max], [j2_min, j2_max]] sampling box."""
        if not regions:
            raise ValidationError("no regions given")
        self.polys = []
        for label, polys in regions.items():
            if label not in LABEL_BITS:
                raise ValidationError(f"unknown phase label {label!r}")
            for p in polys:
                if len(p) < 3:
                    raise ValidationError("polygons need at least 3 vertices")
                self.polys.append((label, [tuple(map(float, v)) for v in p]))
        self.domain = domain or [[-4.0, 4.0], [-4.0, 4.0]]
        # edges separating different labels; outer edges do not count
        self._inner_edges = []
        for la, pa in self.polys:
            for i in range(len(pa)):
                e = (pa[i], pa[(i + 1) % len(pa)])
                mid = 0.5 * (np.asarray(e[0]) + np.asarray(e[1]))
                d = np.asarray(e[1]) - np.asarray(e[0])
                nrm = 1e-6 * np.array([-d[1], d[0]]) / np.linalg.norm(d)
                for side in (mid + nrm, mid - nrm):
                    lb = self._label_raw(side)
                    if lb is not None and lb != la:
                        self._inner_edges.append(e)
                        break

    @classmethod
    def from_config(cls, doc):
        return cls(doc["regions"], doc.get("domain"))

    def _label_raw(self, pt):
        for label, poly in self.polys:
            if _inside(pt, poly):
                return label
        return None

    def boundary_distance(self, pt):
        if not self._inner_edges:
            return np.inf
        return min(_seg_dist(pt, a, b) for a, b in self._inner_edges)

    def label(self, pt, margin=0.0):
        """Phase label of ``pt`` or LabelingError when unlabelled/too close."""
        lb = self._label_raw(pt)
        if lb is None:
            raise LabelingError(f"point {tuple(pt)} lies outside all regions")
        if margin > 0 and self.boundary_distance(pt) < margin:
            raise LabelingError(f"point {tuple(pt)} is within {margin} of a phase boundary")
        return lb

    def sample(self, count, rng, margin=0.0, labels=None, max_tries=100000):
        """``count`` labelled points drawn uniformly from the domain,
        cycling through ``labels`` (default all four) for balance."""
        labels = list(labels or LABEL_BITS)
        out = []
        tries = 0
        while len(out) < count:
            want = labels[len(out) % len(labels)]
            pt = (rng.uniform(*self.domain[0]), rng.uniform(*self.domain[1]))
            tries += 1
            if tries > max_tries:
                raise ValidationError("could not place points in the requested regions")
            try:
                lb = self.label(pt, margin)
            except LabelingError:
                continue
            if lb == want:
                out.append((pt, lb))
        return out

    def grid(self, side):
        """side x side grid over the domain with labels (None if unlabelled)."""
        xs = np.linspace(*self.domain[0], side)
        ys = np.linspace(*self.domain[1], side)
        return [((float(x), float(y)), self._label_raw((x, y))) for y in ys for x in xs]
