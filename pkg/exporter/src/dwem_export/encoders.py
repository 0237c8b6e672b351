"""Encoder backends: audio in, frame-level phoneme log posteriors out.

Model ids:

* ``builtin:specproj`` — a deterministic spectral-band projection with the
  same 20 ms / 320-sample hop as the wav2vec2/WavLM family. It carries no
  learned knowledge; it exists so the export pipeline, file formats and
  stride arithmetic can run (and be tested) without downloading weights.
* ``hf:<repo>`` — a wav2vec2-style CTC checkpoint through `transformers`
  (network/cache required). The checkpoint's head is mapped onto the
  shipped lexicon; any mismatch is a hard error, never a silent remap.
"""

from __future__ import annotations

from importlib import resources

import numpy as np

DEFAULT_MODEL = "builtin:specproj"
#: Documented pinned checkpoint for the hf backend; requires network access
#: and is not asserted to match any published system's exact head.
PINNED_HF_MODEL = "hf:speech31/wav2vec2-large-english-TIMIT-phoneme_v3"

HOP = 320     # samples per frame at 16 kHz -> 20 ms
WINDOW = 400  # samples per analysis window


class EncoderError(Exception):
    pass


def shipped_lexicon_labels() -> tuple[str, ...]:
    text = resources.files("dwem_export").joinpath("data/lexicon.txt").read_text("utf-8")
    return tuple(
        line.strip() for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    )


class SpectralProjectionEncoder:
    """Deterministic stand-in encoder: log band energies through a fixed
    random projection, log-softmaxed per frame."""

    N_BANDS = 8

    def __init__(self):
        self.labels = shipped_lexicon_labels()
        self.frame_shift_ms = HOP / 16000.0 * 1000.0
        rng = np.random.default_rng(0xD3ED)
        self._weights = rng.standard_normal((len(self.labels), self.N_BANDS + 1))
        self._window = np.hanning(WINDOW)

    def encode(self, samples: np.ndarray) -> np.ndarray:
        frames = _frame(samples, WINDOW, HOP)
        if frames.shape[0] == 0:
            return np.zeros((0, len(self.labels)))
        spectra = np.abs(np.fft.rfft(frames * self._window, axis=1))
        bands = np.stack(
            [b.sum(axis=1) for b in np.array_split(spectra, self.N_BANDS, axis=1)],
            axis=1,
        )
        rms = np.sqrt((frames ** 2).mean(axis=1))
        features = np.log(np.column_stack([bands, rms]) + 1e-8)
        logits = features @ self._weights.T
        return _log_softmax(logits)


def _frame(samples: np.ndarray, window: int, hop: int) -> np.ndarray:
    n = len(samples)
    count = 0 if n < window else 1 + (n - window) // hop
    out = np.empty((count, window))
    for i in range(count):
        out[i] = samples[i * hop:i * hop + window]
    return out


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


class HuggingFaceEncoder:
    """wav2vec2-family CTC checkpoint via transformers."""

    def __init__(self, repo: str):
        try:
            import torch
            from transformers import AutoModelForCTC, AutoProcessor
        except ImportError as exc:
            raise EncoderError(
                f"the hf backend needs torch and transformers installed ({exc})"
            ) from None
        self._torch = torch
        self.processor = AutoProcessor.from_pretrained(repo)
        self.model = AutoModelForCTC.from_pretrained(repo)
        self.model.eval()
        stride = int(np.prod(self.model.config.conv_stride))
        self.frame_shift_ms = stride / 16000.0 * 1000.0
        self.labels = self._head_labels()

    def _head_labels(self) -> tuple[str, ...]:
        vocab = self.processor.tokenizer.get_vocab()
        by_id = {idx: token for token, idx in vocab.items()}
        labels = []
        for idx in range(len(by_id)):
            token = by_id[idx]
            if idx == self.model.config.pad_token_id:
                labels.append("<blank>")
                continue
            mapped = "".join(ch for ch in token if not ch.isdigit()).upper()
            labels.append(mapped)
        expected = shipped_lexicon_labels()
        if tuple(labels) != expected:
            raise EncoderError(
                "checkpoint head does not match the shipped lexicon "
                f"({len(labels)} classes vs {len(expected)}; first mismatch at "
                f"{_first_mismatch(labels, expected)}); refusing to remap"
            )
        return tuple(labels)

    def encode(self, samples: np.ndarray) -> np.ndarray:
        torch = self._torch
        inputs = self.processor(
            samples.astype(np.float32), sampling_rate=16000, return_tensors="pt"
        )
        with torch.no_grad():
            logits = self.model(inputs.input_values).logits[0]
        return torch.log_softmax(logits, dim=-1).numpy().astype(np.float64)


def _first_mismatch(a, b) -> str:
    for i, (x, y) in enumerate(zip(a, b)):
        if x != y:
            return f"index {i}: {x!r} vs {y!r}"
    return f"length {len(a)} vs {len(b)}"


def load_encoder(model_id: str):
    if model_id == DEFAULT_MODEL or model_id == "builtin:specproj":
        return SpectralProjectionEncoder()
    if model_id.startswith("hf:"):
        return HuggingFaceEncoder(model_id[3:])
    raise EncoderError(
        f"unknown model id {model_id!r}; use 'builtin:specproj' or 'hf:<repo>'"
    )
