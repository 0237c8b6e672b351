"""The decoding pipeline: build the graphs, take the shortest path, and turn
it into phoneme segments with reference-state spans and timestamps."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .emission import EmissionMatrix
from .errors import NoPathError
from .fst import EPSILON, Path, compose, intersect, shortest_path
from .graphs import ReferenceFst, SeverityConfig, build_ctc_topology, build_emission_acceptor, build_reference_fst
from .lexicon import Lexicon, default_lexicon


@dataclass(frozen=True)
class PathSegment:
    """One produced phoneme: its reference transition and its frame span."""

    start_state: int
    end_state: int
    phoneme: str
    frame_begin: int
    frame_end: int  # exclusive
    time_begin_ms: float = 0.0
    time_end_ms: float = 0.0


@dataclass(frozen=True)
class Transcription:
    """Decode result: ordered segments and the verbatim phoneme sequence."""

    segments: tuple[PathSegment, ...]
    phonemes: tuple[str, ...]
    total_weight: float
    beta: float
    frame_shift_ms: float = 20.0
    warnings: tuple[str, ...] = ()


def segment_timestamps(segments, frame_shift_ms: float):
    """Fill in millisecond spans: time = frame index * frame_shift_ms."""
    if frame_shift_ms <= 0:
        raise ValueError("frame_shift_ms must be positive")
    return [
        replace(s, time_begin_ms=s.frame_begin * frame_shift_ms,
                time_end_ms=s.frame_end * frame_shift_ms)
        for s in segments
    ]


def path_to_segments(path: Path, ref_fst: ReferenceFst) -> list[PathSegment]:
    """Collapse a lattice path into segments.

    A segment opens at each arc that emits a transition record and extends
    over the following same-class frames (the CTC repeat run). Blank frames
    belong to no segment.
    """
    segments: list[PathSegment] = []
    current: tuple[tuple[int, int, str], int, int] | None = None  # (record, begin, end)
    current_class = EPSILON
    frame = 0
    for arc in path.arcs:
        consumes = arc.ilabel != EPSILON
        if arc.olabel != EPSILON:
            if current is not None:
                segments.append(PathSegment(*current[0], current[1], current[2]))
            current = (ref_fst.records[arc.olabel], frame, frame + 1)
            current_class = arc.ilabel
        elif consumes and current is not None and arc.ilabel == current_class:
            current = (current[0], current[1], frame + 1)
        elif consumes:
            if current is not None:
                segments.append(PathSegment(*current[0], current[1], current[2]))
            current = None
            current_class = EPSILON
        if consumes:
            frame += 1
    if current is not None:
        segments.append(PathSegment(*current[0], current[1], current[2]))
    return segments


def decode(
    emission: EmissionMatrix,
    ref_phonemes,
    config: SeverityConfig,
    lexicon: Lexicon | None = None,
    *,
    strict_final: bool = False,
    free_insertion_arcs: bool = False,
) -> Transcription:
    """Shortest-path decode of an emission against a reference sequence.

    Builds the CTC topology, the dysfluency-aware reference machine and the
    emission acceptor; composes the first two, intersects with the third and
    reads segments off the minimum-weight path. Deterministic for identical
    inputs; raises NoPathError when the lattice has no accepting path.
    """
    if lexicon is None:
        lexicon = default_lexicon()
    ref_fst = build_reference_fst(
        ref_phonemes, config, lexicon,
        strict_final=strict_final, free_insertion_arcs=free_insertion_arcs,
    )
    topo = build_ctc_topology(lexicon)
    graph = compose(topo, ref_fst.machine)
    lattice = intersect(graph, build_emission_acceptor(emission, lexicon))
    best = shortest_path(lattice)
    if best is None:
        raise NoPathError(
            "no accepting path (impossible emission scores, or strict-final "
            "decoding of audio shorter than the reference)"
        )
    segments = segment_timestamps(path_to_segments(best, ref_fst), emission.frame_shift_ms)
    return Transcription(
        segments=tuple(segments),
        phonemes=tuple(s.phoneme for s in segments),
        total_weight=best.total_weight,
        beta=config.beta,
        frame_shift_ms=emission.frame_shift_ms,
        warnings=ref_fst.warnings,
    )


def transcription_report(transcription: Transcription) -> dict:
    """Report dict with a fixed field order (golden tests rely on it)."""
    return {
        "beta": transcription.beta,
        "total_weight": transcription.total_weight,
        "segments": [
            {
                "phoneme": s.phoneme,
                "start_state": s.start_state,
                "end_state": s.end_state,
                "frames": [s.frame_begin, s.frame_end],
                "time_ms": [s.time_begin_ms, s.time_end_ms],
            }
            for s in transcription.segments
        ],
    }
