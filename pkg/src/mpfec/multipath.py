"""Path model, earliest-available dispatch, and receive-buffer planning.

The planner functions answer the sizing questions that come up before a run:
how much code rate the loss on each path leaves us, and how large the
receiver-side buffers must be so that packets from the slower path can still
contribute to decoding.
"""

from dataclasses import dataclass
from fractions import Fraction

from .rational import as_fraction, exact_ceil, exact_floor


@dataclass(frozen=True)
class PathSpec:
    """One unidirectional path: service rate, one-way delay, loss probability.

    ``rate`` is in packets per second and may be an exact Fraction when it
    was derived from a bit rate; the planner keeps it exact, the simulator
    works with the float value.
    """
    rate: float | Fraction
    delay: float
    loss: float
    name: str = ""

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"path rate must be > 0, got {self.rate}")
        if self.delay < 0:
            raise ValueError(f"path delay must be >= 0, got {self.delay}")
        if not 0 <= self.loss < 1:
            raise ValueError(f"path loss must be in [0, 1), got {self.loss}")


class PathScheduler:
    """Assigns packets to the path that can start serializing them first.

    For equal path rates this collapses to round-robin. Ties go to the
    lowest path index, which keeps runs reproducible.
    """

    def __init__(self, paths):
        paths = list(paths)
        if not paths:
            raise ValueError("at least one path required")
        self.paths = paths
        self.next_free = [0.0] * len(paths)
        self._service = [1.0 / float(p.rate) for p in paths]

    def schedule(self, now: float) -> int:
        """Index of the path with the earliest effective start time."""
        nf = self.next_free
        best = 0
        best_t = nf[0] if nf[0] > now else now
        for i in range(1, len(nf)):
            t = nf[i] if nf[i] > now else now
            if t < best_t:
                best = i
                best_t = t
        return best

    def advance(self, i: int, now: float) -> float:
        """Commit one packet to path i; returns its serialization end time."""
        start = self.next_free[i]
        if start < now:
            start = now
        depart = start + self._service[i]
        self.next_free[i] = depart
        return depart


def code_rate_bound(paths) -> float:
    """Largest code rate that still lets decoding keep up with the losses.

    The admissible region is sum_i r_i (1-e_i)(1-e_i - R) > 0 with one R
    shared by all paths, so the supremum is the rate-weighted

        R_max = sum_i r_i (1-e_i)^2 / sum_i r_i (1-e_i).

    A single path gives the familiar 1 - e.
    """
    paths = list(paths)
    if not paths:
        raise ValueError("at least one path required")
    num = Fraction(0)
    den = Fraction(0)
    for p in paths:
        r = as_fraction(p.rate)
        good = 1 - as_fraction(p.loss)
        num += r * good * good
        den += r * good
    if den == 0:
        raise ValueError("all paths have loss 1: no rate is feasible")
    return float(num / den)


def reorder_buffer_uncoded(r1, delta_d) -> int:
    """Receive buffer (packets) to reorder an uncoded two-path stream."""
    if as_fraction(delta_d) < 0:
        raise ValueError("delta_d must be >= 0")
    return exact_ceil(as_fraction(r1) * as_fraction(delta_d)) + 1


def min_generations_block(r1, r2, code_rate, delta_d, g: int) -> int:
    """Generations a block decoder must hold to use the slower path.

    The decoder's packet buffer is g times this count.
    """
    if g < 1:
        raise ValueError("generation size must be >= 1")
    ahead = (as_fraction(r1) + as_fraction(r2)) * as_fraction(code_rate) \
        * as_fraction(delta_d)
    return exact_floor(ahead / g) + 1


def min_decoding_window_sliding(r1, r2, code_rate, delta_d, w_e: int) -> int:
    """Decoding window (packets) for coded packets from the slower path.

    When a packet arrives over the high-delay path, the newest sequence
    number seen via the low-delay path is (r1+r2)*R*delta_d ahead; the
    window additionally has to span the w_e symbols a coded packet combines.
    """
    if w_e < 1:
        raise ValueError("encoding window must be >= 1")
    ahead = (as_fraction(r1) + as_fraction(r2)) * as_fraction(code_rate) \
        * as_fraction(delta_d)
    return exact_ceil(ahead) + w_e
