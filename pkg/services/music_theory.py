"""
Pitch-class distances on the chromatic cycle and the circle of fifths.
"""
from typing import Dict, Union

from models.schemas import PitchClass

PitchLike = Union[PitchClass, int]

# Circle position of pitch class p: C=0, G=1, D=2, ... F=11
CIRCLE_OF_FIFTHS: Dict[int, int] = {pc: (7 * pc) % 12 for pc in range(12)}

C_ROOT = 0


def _index(pitch: PitchLike) -> int:
    return pitch.index if isinstance(pitch, PitchClass) else int(pitch) % 12


def _circular(a: int, b: int) -> int:
    d = abs(a - b) % 12
    return min(d, 12 - d)


def semitone_distance(a: PitchLike, b: PitchLike) -> int:
    """Circular chromatic distance, 0..6."""
    return _circular(_index(a), _index(b))


def fifths_distance(a: PitchLike, b: PitchLike) -> int:
    """Minimal number of steps between a and b on the circle of fifths, 0..6."""
    return _circular(CIRCLE_OF_FIFTHS[_index(a)], CIRCLE_OF_FIFTHS[_index(b)])
