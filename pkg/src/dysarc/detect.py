"""Rule-based dysfluency labeling of decoded phoneme segments.

One pass over the segments, keeping the set of start states seen so far and
the previous segment's end state:

* start state seen before            -> repetition
* start state below the least seen   -> insertion
* start state > previous end + 1     -> deletion (the segment after the gap
  is flagged, and the skipped reference phonemes are listed)
* otherwise                          -> normal
"""

from __future__ import annotations

from dataclasses import dataclass

from .decoder import PathSegment, Transcription, transcription_report
from .errors import InputError

NORMAL = "normal"
REPETITION = "repetition"
INSERTION = "insertion"
DELETION = "deletion"

TYPES = (NORMAL, REPETITION, INSERTION, DELETION)


@dataclass(frozen=True)
class DysfluencyAnnotation:
    phoneme: str
    dysfluency_type: str
    segment: PathSegment


@dataclass(frozen=True)
class DetectionResult:
    annotations: tuple[DysfluencyAnnotation, ...]
    #: (reference index, phoneme or None when no reference was supplied)
    deleted_reference: tuple[tuple[int, object], ...]

    @property
    def deleted_phonemes(self) -> tuple:
        return tuple(p for _, p in self.deleted_reference)


def detect_dysfluency(segments, ref_phonemes=None) -> DetectionResult:
    """Label each segment; segments must be ordered by frame_begin.

    The insertion rule needs a nonempty history, so the first segment can
    only be deletion-flagged or normal; prev_end starts at -1 so a first
    segment that does not start at state 0 flags the leading skip. When
    ref_phonemes is given, the deletion rule is also applied to a virtual
    end-of-utterance segment so trailing skips are listed.
    """
    segments = list(segments)
    for a, b in zip(segments, segments[1:]):
        if b.frame_begin < a.frame_begin:
            raise InputError("segments are not ordered by frame_begin")

    ref = list(ref_phonemes) if ref_phonemes is not None else None

    def skipped(prev_end: int, start: int):
        for m in range(prev_end + 1, start):
            yield (m, ref[m] if ref is not None and m < len(ref) else None)

    annotations: list[DysfluencyAnnotation] = []
    deleted: list[tuple[int, object]] = []
    state_history: set[int] = set()
    prev_end = -1
    for seg in segments:
        start = seg.start_state
        if state_history and start in state_history:
            kind = REPETITION
        elif state_history and start < min(state_history):
            kind = INSERTION
        elif start > prev_end + 1:
            kind = DELETION
            deleted.extend(skipped(prev_end, start))
        else:
            kind = NORMAL
        annotations.append(DysfluencyAnnotation(seg.phoneme, kind, seg))
        state_history.add(start)
        prev_end = seg.end_state
    if ref is not None and len(ref) > prev_end + 1:
        deleted.extend(skipped(prev_end, len(ref)))
    return DetectionResult(tuple(annotations), tuple(deleted))


def summarize(annotations, deleted_reference=()) -> dict:
    """Count annotations per type, plus the deleted-reference list length."""
    counts = {t: 0 for t in TYPES}
    for a in annotations:
        counts[a.dysfluency_type] += 1
    counts["deleted_phonemes"] = len(tuple(deleted_reference))
    return counts


def detection_report(transcription: Transcription, detection: DetectionResult) -> dict:
    """Transcription report extended with dysfluency fields; order is fixed."""
    report = transcription_report(transcription)
    report["dysfluency"] = [
        {
            "phoneme": a.phoneme,
            "type": a.dysfluency_type,
            "frames": [a.segment.frame_begin, a.segment.frame_end],
        }
        for a in detection.annotations
    ]
    report["deleted_reference_phonemes"] = [p for _, p in detection.deleted_reference]
    report["summary"] = summarize(detection.annotations, detection.deleted_reference)
    if transcription.warnings:
        report["warnings"] = list(transcription.warnings)
    return report
