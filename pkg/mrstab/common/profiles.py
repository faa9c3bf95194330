from fractions import Fraction
import math

import numpy as np


class Verdicts:
    POSITIVE = ['undistorted', 'sublinear', 'bounded']
    # Declared, versioned thresholds for finite-scale verdicts
    THRESHOLDS_VERSION = 1
    STABLE_REL_TOLERANCE = 0.05
    STABLE_WINDOW = 3
    SUBLINEAR_MAX_EXPONENT = 0.5
    SUBLINEAR_MAX_RATIO = 0.5
    # integer constants that move by at most this much over a family count as bounded
    BOUNDED_SPREAD = 1


def parse_rational(value):
    ''' Accepts Fraction, int, "1/3" or "0.25" and returns a Fraction '''
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10 ** 6)
    text = str(value).strip()
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f'Could not read {value!r} as a rational number')


def fraction_str(x):
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f'{x.numerator}/{x.denominator}'


class SampledFunction:
    """
    A nonnegative function known at finitely many integer radii, extended to all r > 0:
      - below the smallest sample it is constant,
      - between samples it takes the value at the next sample,
      - above the largest sample it keeps the last value/radius ratio.
    For an envelope sampled at consecutive integers, value/radius stays nonincreasing at integer radii.
    """
    def __init__(self, radii, values):
        if len(radii) != len(values):
            raise ValueError(f'{len(radii)} radii but {len(values)} values')
        order = np.argsort(radii)
        self.radii = [int(radii[i]) for i in order]
        self.values = [Fraction(values[i]) for i in order]
        if any(r <= 0 for r in self.radii):
            raise ValueError('Sampled functions are defined on positive radii only')

    def __len__(self):
        return len(self.radii)

    @property
    def r_min(self):
        return self.radii[0]

    @property
    def r_max(self):
        return self.radii[-1]

    def covers(self, r):
        return bool(self.radii) and self.r_min <= r <= self.r_max

    def __call__(self, r):
        if not self.radii:
            raise ValueError('Empty sampled function')
        r = Fraction(r)
        if r <= self.r_min:
            return self.values[0]
        if r > self.r_max:
            return self.values[-1] * r / self.r_max
        i = int(np.searchsorted(self.radii, math.ceil(r)))
        return self.values[i]

    def ratio(self, r):
        return self(r) / Fraction(r)

    @classmethod
    def constant(cls, value, r_max):
        return cls(list(range(1, r_max + 1)), [value] * r_max)


def sublinear_envelope(radii, values):
    ''' rho_bar(r) = r * max_{s >= r} rho_hat(s) / s over the sampled s '''
    radii = [int(r) for r in radii]
    envelope = [Fraction(0)] * len(radii)
    best_ratio = Fraction(0)
    for i in sorted(range(len(radii)), key=lambda j: radii[j], reverse=True):
        best_ratio = max(best_ratio, Fraction(values[i]) / radii[i])
        envelope[i] = best_ratio * radii[i]
    return envelope


def fit_exponent(xs, ys):
    ''' Least-squares slope of log y against log x; values below 1 are clipped to 1 '''
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    keep = xs > 0
    xs, ys = xs[keep], np.maximum(ys[keep], 1.0)
    if len(xs) < 2 or np.all(xs == xs[0]):
        return 0.0
    slope, _ = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(slope)


def is_stable(values, window=Verdicts.STABLE_WINDOW, rel_tolerance=Verdicts.STABLE_REL_TOLERANCE):
    ''' True when the last `window` values vary by less than rel_tolerance of their max '''
    tail = [float(v) for v in values[-window:]]
    if len(tail) < window:
        return False
    hi, lo = max(tail), min(tail)
    if hi == 0:
        return True
    return (hi - lo) < rel_tolerance * hi


def is_bounded(values, spread=Verdicts.BOUNDED_SPREAD):
    ''' Integer-valued constants over a family: bounded when they stay within `spread` of each other, or are stable '''
    values = [float(v) for v in values]
    if not values:
        return False
    return max(values) - min(values) <= spread or is_stable(values)
