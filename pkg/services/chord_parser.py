"""
Chord parser for cifra chord notation.

A token reads ROOT ACCIDENTAL? QUALITY* ("/" BASS)?. Quality atoms are
matched greedily left to right; whatever cannot be matched after the
maximal parse is kept in ``ParsedChord.unparsed`` (lenient mode) or
rejected (strict mode).
"""
import logging
import re
from collections import Counter
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

from models.errors import MalformedChord
from models.schemas import ParsedChord, PitchClass

logger = logging.getLogger(__name__)


_LETTER_INDEX = {'C': 0, 'D': 2, 'E': 4, 'F': 5, 'G': 7, 'A': 9, 'B': 11}
_ACCIDENTAL_SHIFT = {'': 0, '#': 1, 'b': -1}

_NOTE_RE = re.compile(r'([A-G])([#b]?)')

# Longest spellings first: "maj7" before "m", "7+" before "7", "5-" before "5".
_QUALITY_ATOMS: List[Tuple[re.Pattern, Tuple[str, ...]]] = [
    (re.compile(r'maj9'), ('has_major_seventh', 'has_ninth')),
    (re.compile(r'maj7|7M|7\+'), ('has_major_seventh',)),
    (re.compile(r'maj'), ()),
    (re.compile(r'[º°]|dim'), ('diminished',)),
    (re.compile(r'aug'), ('augmented',)),
    (re.compile(r'sus[24]?'), ('suspended',)),
    (re.compile(r'add[b#]?9'), ('has_ninth',)),
    (re.compile(r'add4'), ('has_fourth',)),
    (re.compile(r'm(?!aj)'), ('minor_third',)),
    (re.compile(r'5-|5b|b5'), ('dim_fifth',)),
    (re.compile(r'5\+|5#|#5'), ('aug_fifth',)),
    (re.compile(r'[b#]?9'), ('has_ninth',)),
    (re.compile(r'7'), ('has_seventh',)),
    (re.compile(r'6'), ('has_sixth',)),
    (re.compile(r'4'), ('has_fourth',)),
    (re.compile(r'5'), ()),
]

_GROUP_RE = re.compile(r'\(([^()]*)\)')

INDICATOR_NAMES = (
    'suspended',
    'seventh',
    'minor_seventh',
    'minor',
    'diminished',
    'augmented',
    'fourth',
    'sixth',
    'ninth',
    'major_seventh',
    'dim_fifth',
    'aug_fifth',
)


def normalize_root(text: str) -> PitchClass:
    """
    Map a note spelling to its pitch class.

    Args:
        text: A letter A-G optionally followed by '#' or 'b'

    Returns:
        PitchClass with the semitone index (C=0) and the original spelling

    Raises:
        MalformedChord: If the text is not a note name
    """
    match = _NOTE_RE.fullmatch(text or '')
    if match is None:
        raise MalformedChord(text, "not a note name A-G with optional # or b")

    letter, accidental = match.groups()
    index = (_LETTER_INDEX[letter] + _ACCIDENTAL_SHIFT[accidental]) % 12
    return PitchClass(index=index, spelled=text)


def _match_atom(text: str, pos: int) -> Optional[Tuple[int, Tuple[str, ...]]]:
    for pattern, flags in _QUALITY_ATOMS:
        match = pattern.match(text, pos)
        if match:
            return match.end(), flags
    return None


def _parse_group(content: str) -> Optional[List[str]]:
    """Flags of a parenthesised alteration list such as "9" or "b5, 9"; None if any item is unknown."""
    flags: List[str] = []
    for item in content.split(','):
        item = item.strip()
        if not item:
            return None
        atom = _match_atom(item, 0)
        if atom is None or atom[0] != len(item):
            return None
        flags.extend(atom[1])
    return flags


def _scan_qualities(text: str) -> Tuple[List[str], str]:
    """
    Consume quality atoms from the start of text.

    Returns:
        Tuple of (flags set, unparsed remainder)
    """
    flags: List[str] = []
    pos = 0
    while pos < len(text):
        group = _GROUP_RE.match(text, pos)
        if group:
            group_flags = _parse_group(group.group(1))
            if group_flags is None:
                break
            flags.extend(group_flags)
            pos = group.end()
            continue

        atom = _match_atom(text, pos)
        if atom is None:
            break
        pos, atom_flags = atom
        flags.extend(atom_flags)

    return flags, text[pos:]


@lru_cache(maxsize=65536)
def parse_chord(token: str, strict: bool = False) -> ParsedChord:
    """
    Parse one cifra chord symbol.

    Args:
        token: Chord symbol, e.g. "Gm7", "F7+", "C/E", "Bº"
        strict: Reject unrecognized trailing symbols instead of ignoring them

    Returns:
        ParsedChord with every flag derivable from the token set

    Raises:
        MalformedChord: Root letter outside A-G, conflicting qualities, or
            (strict mode) unrecognized trailing symbols
    """
    if not token or not token.strip():
        raise MalformedChord(token or '', "empty token")

    text = token.strip()
    root_match = _NOTE_RE.match(text)
    if root_match is None:
        raise MalformedChord(token, "root letter not in A-G")
    root = normalize_root(root_match.group(0))

    head, *slash_parts = text[root_match.end():].split('/')
    flags, unparsed = _scan_qualities(head)

    bass = None
    for position, part in enumerate(slash_parts):
        is_last = position == len(slash_parts) - 1
        if is_last and _NOTE_RE.fullmatch(part):
            bass = normalize_root(part)
            continue
        # "C7/9": a slash followed by extensions rather than a bass note
        part_flags, part_rest = _scan_qualities(part)
        if unparsed or part_rest or not part:
            unparsed += '/' + part
        else:
            flags.extend(part_flags)

    if unparsed and strict:
        raise MalformedChord(token, f"unrecognized trailing symbols '{unparsed}'")

    present = set(flags)
    if 'diminished' in present and 'augmented' in present:
        raise MalformedChord(token, "diminished and augmented on one symbol")
    if 'has_seventh' in present and 'has_major_seventh' in present:
        raise MalformedChord(token, "seventh and major seventh on one symbol")

    return ParsedChord(
        root=root,
        bass=bass,
        raw=token,
        unparsed=unparsed,
        **{flag: True for flag in present},
    )


def indicator_row(chord: ParsedChord) -> Tuple[bool, ...]:
    """
    Per-chord indicators in the fixed order of INDICATOR_NAMES.

    The third entry is the interaction minor third AND seventh.
    """
    return (
        chord.suspended,
        chord.has_seventh,
        chord.minor_third and chord.has_seventh,
        chord.minor_third,
        chord.diminished,
        chord.augmented,
        chord.has_fourth,
        chord.has_sixth,
        chord.has_ninth,
        chord.has_major_seventh,
        chord.dim_fifth,
        chord.aug_fifth,
    )


class ChordParser:
    """Parser service that applies the strict/lenient policy and keeps hygiene counters."""

    def __init__(self, strict: bool = False):
        """
        Initialize the parser.

        Args:
            strict: Abort on malformed tokens and unknown trailing symbols
        """
        self.strict = strict
        self.malformed_count = 0
        self.ignored_suffix_count = 0
        self.malformed_tokens: Counter = Counter()

    def parse(self, token: str, row: Optional[str] = None) -> Optional[ParsedChord]:
        """
        Parse a token under the configured policy.

        Args:
            token: Chord symbol
            row: Location used in error messages (e.g. "song s1, seq_no 4")

        Returns:
            ParsedChord, or None when the token is malformed in lenient mode

        Raises:
            MalformedChord: Strict mode only
        """
        try:
            chord = parse_chord(token, strict=self.strict)
        except MalformedChord as e:
            if self.strict:
                raise MalformedChord(token, e.reason, row=row) from e
            self.malformed_count += 1
            self.malformed_tokens[token] += 1
            logger.debug(f"⚠️ Skipping malformed chord '{token}' ({row})")
            return None

        if chord.unparsed:
            self.ignored_suffix_count += 1
        return chord

    def stats(self) -> Dict[str, int]:
        """Hygiene counters collected so far."""
        return {
            'malformed': self.malformed_count,
            'ignored_suffixes': self.ignored_suffix_count,
            'distinct_malformed': len(self.malformed_tokens),
        }

    def log_summary(self) -> None:
        if self.malformed_count:
            examples = ', '.join(token for token, _ in self.malformed_tokens.most_common(5))
            logger.warning(f"⚠️ {self.malformed_count} malformed chord tokens skipped (e.g. {examples})")
        if self.ignored_suffix_count:
            logger.warning(f"⚠️ {self.ignored_suffix_count} chord tokens had ignored trailing symbols")
