"""Dataset model: report normalization, vocabulary, splits, synthetic corpus.

The synthetic corpus stands in for paired-view radiology data. Each case
draws a latent subset of findings; its two image references encode that
subset (plus per-view noise parameters) in a ``synth://`` URI, and its
report is rendered deterministically from finding templates. Real data
enters through the same line-delimited JSON manifest format.
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence
from urllib.parse import parse_qs, urlparse

import numpy as np

logger = logging.getLogger(__name__)

PAD_ID, BOS_ID, EOS_ID, UNK_ID = 0, 1, 2, 3
RESERVED_TOKENS = ("<pad>", "<bos>", "<eos>", "<unk>")

_KEEP = re.compile(r"[^a-z0-9 ]")


def normalize_report(raw_text: str) -> list[str]:
    """Lowercase, strip everything outside [a-z0-9 ], split on whitespace.

    Characters are removed rather than blanked, so "x-ray" becomes "xray".
    Returns an empty list when nothing survives.
    """
    collapsed = " ".join(raw_text.lower().split())
    return _KEEP.sub("", collapsed).split()


@dataclass
class Vocabulary:
    """Bidirectional token/id map with reserved PAD, BOS, EOS, UNK ids."""

    token_to_id: dict[str, int]
    id_to_token: list[str]
    frequencies: dict[str, int]
    min_count: int

    def __len__(self) -> int:
        return len(self.id_to_token)

    def encode(self, tokens: Iterable[str]) -> list[int]:
        """Never fails: out-of-vocabulary tokens map to the UNK id."""
        return [self.token_to_id.get(t, UNK_ID) for t in tokens]

    def decode(self, ids: Iterable[int]) -> list[str]:
        """Inverse of encode on real tokens; reserved ids are dropped."""
        return [self.id_to_token[i] for i in ids if i > UNK_ID]

    def encode_target(self, tokens: Sequence[str], max_len: int) -> list[int]:
        """BOS-framed, EOS-terminated id sequence, truncated to max_len tokens."""
        return [BOS_ID] + self.encode(tokens[:max_len]) + [EOS_ID]

    def to_dict(self) -> dict:
        return {
            "tokens": self.id_to_token[len(RESERVED_TOKENS):],
            "frequencies": self.frequencies,
            "min_count": self.min_count,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "Vocabulary":
        id_to_token = list(RESERVED_TOKENS) + list(payload["tokens"])
        return cls(
            token_to_id={t: i for i, t in enumerate(id_to_token)},
            id_to_token=id_to_token,
            frequencies=dict(payload["frequencies"]),
            min_count=int(payload["min_count"]),
        )


def build_vocabulary(corpus: Iterable[Sequence[str]], min_count: int = 5) -> Vocabulary:
    """Keep tokens appearing strictly more than ``min_count`` times.

    Ids are contiguous: reserved ids 0..3, then retained tokens ordered by
    descending frequency with alphabetical tie-break.
    """
    freqs = Counter()
    n_seqs = 0
    for seq in corpus:
        n_seqs += 1
        freqs.update(seq)
    if n_seqs == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    kept = sorted(
        (t for t, c in freqs.items() if c > min_count),
        key=lambda t: (-freqs[t], t),
    )
    id_to_token = list(RESERVED_TOKENS) + kept
    return Vocabulary(
        token_to_id={t: i for i, t in enumerate(id_to_token)},
        id_to_token=id_to_token,
        frequencies={t: freqs[t] for t in kept},
        min_count=min_count,
    )


@dataclass
class DatasetSplit:
    train: list[str]
    val: list[str]
    test: list[str]
    seed: int

    def to_dict(self) -> dict:
        return {"train": self.train, "val": self.val, "test": self.test, "seed": self.seed}

    @classmethod
    def from_dict(cls, payload: dict) -> "DatasetSplit":
        return cls(
            train=list(payload["train"]),
            val=list(payload["val"]),
            test=list(payload["test"]),
            seed=int(payload["seed"]),
        )


def split_dataset(
    case_ids: Sequence[str],
    ratios: tuple[float, float, float] = (0.7, 0.1, 0.2),
    seed: int = 0,
) -> DatasetSplit:
    """Deterministic disjoint train/val/test split.

    Train and val sizes are floored; the remainder goes to test.
    """
    if len(set(case_ids)) != len(case_ids):
        raise ValueError("case ids must be unique")
    if len(case_ids) < 10:
        raise ValueError(f"need at least 10 cases to split, got {len(case_ids)}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("split ratios must sum to 1")
    order = np.random.default_rng(seed).permutation(len(case_ids))
    shuffled = [case_ids[i] for i in order]
    n = len(case_ids)
    n_train = int(n * ratios[0])
    n_val = int(n * ratios[1])
    return DatasetSplit(
        train=shuffled[:n_train],
        val=shuffled[n_train:n_train + n_val],
        test=shuffled[n_train + n_val:],
        seed=seed,
    )


@dataclass
class StudyCase:
    """One study: two view references plus the normalized report tokens."""

    case_id: str
    frontal_ref: str
    lateral_ref: str
    report: list[str]
    latent_findings: frozenset[int] | None = None

    def __post_init__(self):
        if not self.frontal_ref or not self.lateral_ref:
            raise ValueError(f"case {self.case_id}: both view references are required")
        if not self.report:
            raise ValueError(f"case {self.case_id}: report is empty after normalization")


# --- synthetic corpus -------------------------------------------------------

FINDING_NAMES = [
    "cardiomegaly", "effusion", "edema", "pneumothorax",
    "consolidation", "atelectasis", "nodule", "fracture",
    "emphysema", "infiltrate", "scarring", "hernia",
    "degenerative", "granuloma", "opacity", "congestion",
]

FINDING_SENTENCES = {
    "cardiomegaly": "the cardiac silhouette is enlarged consistent with cardiomegaly",
    "effusion": "a small pleural effusion layers on the left",
    "edema": "diffuse interstitial markings suggest pulmonary edema",
    "pneumothorax": "there is a thin apical pneumothorax without shift",
    "consolidation": "focal consolidation is present in the right lower lobe",
    "atelectasis": "linear bands of atelectasis are noted at the bases",
    "nodule": "a rounded nodular opacity projects over the midlung",
    "fracture": "an old healed rib fracture is visible laterally",
    "emphysema": "lung volumes are hyperinflated compatible with emphysema",
    "infiltrate": "patchy infiltrate obscures the left heart border",
    "scarring": "chronic scarring is seen in both apices",
    "hernia": "a moderate hiatal hernia is incidentally noted",
    "degenerative": "degenerative changes are present in the thoracic spine",
    "granuloma": "a small calcified granuloma is stable",
    "opacity": "hazy opacity persists at the right base",
    "congestion": "mild vascular congestion is evident centrally",
}

NORMAL_SENTENCE = "the lungs are clear and the heart size is normal"


def finding_names(n_findings: int) -> list[str]:
    if n_findings <= len(FINDING_NAMES):
        return FINDING_NAMES[:n_findings]
    extra = [f"variant{i}" for i in range(len(FINDING_NAMES), n_findings)]
    return FINDING_NAMES + extra


def finding_sentence(name: str) -> str:
    return FINDING_SENTENCES.get(name, f"an unusual {name} pattern is demonstrated here")


def render_report(findings: Iterable[int], n_findings: int) -> list[str]:
    """Template report for a finding subset; sentence order follows finding index."""
    names = finding_names(n_findings)
    picked = sorted(findings)
    if not picked:
        return NORMAL_SENTENCE.split()
    tokens: list[str] = []
    for idx in picked:
        tokens.extend(finding_sentence(names[idx]).split())
    return tokens


def make_synthetic_ref(case_id: str, view: str, findings: Iterable[int],
                       n_findings: int, case_seed: int) -> str:
    f = ",".join(str(i) for i in sorted(findings))
    return f"synth://{case_id}/{view}?n={n_findings}&f={f}&s={case_seed}"


@dataclass(frozen=True)
class SyntheticRef:
    case_id: str
    view: str
    n_findings: int
    findings: tuple[int, ...]
    case_seed: int


def parse_synthetic_ref(ref: str) -> SyntheticRef:
    parsed = urlparse(ref)
    if parsed.scheme != "synth":
        raise ValueError(f"not a synthetic image reference: {ref!r}")
    query = parse_qs(parsed.query, keep_blank_values=True)
    raw = query["f"][0]
    findings = tuple(int(x) for x in raw.split(",")) if raw else ()
    return SyntheticRef(
        case_id=parsed.netloc,
        view=parsed.path.lstrip("/"),
        n_findings=int(query["n"][0]),
        findings=findings,
        case_seed=int(query["s"][0]),
    )


def is_synthetic_ref(ref: str) -> bool:
    return ref.startswith("synth://")


# finding-count distribution for synthetic cases
_COUNT_CHOICES = (0, 1, 2, 3)
_COUNT_PROBS = (0.2, 0.4, 0.3, 0.1)


def generate_synthetic_corpus(n_cases: int, n_findings: int, seed: int) -> list[StudyCase]:
    """Deterministic paired-view corpus with templated reports."""
    if n_cases < 1:
        raise ValueError("n_cases must be >= 1")
    if n_findings < 2:
        raise ValueError("n_findings must be >= 2")
    rng = np.random.default_rng(seed)
    cases = []
    for i in range(n_cases):
        case_id = f"case_{i:05d}"
        case_seed = int(rng.integers(0, 2 ** 31 - 1))
        k = int(rng.choice(_COUNT_CHOICES, p=_COUNT_PROBS))
        k = min(k, n_findings)
        findings = frozenset(
            int(x) for x in rng.choice(n_findings, size=k, replace=False)
        )
        cases.append(StudyCase(
            case_id=case_id,
            frontal_ref=make_synthetic_ref(case_id, "frontal", findings, n_findings, case_seed),
            lateral_ref=make_synthetic_ref(case_id, "lateral", findings, n_findings, case_seed),
            report=render_report(findings, n_findings),
            latent_findings=findings,
        ))
    return cases


# --- manifest I/O -----------------------------------------------------------

def write_manifest(cases: Sequence[StudyCase], path: str | Path) -> None:
    """One JSON record per line: case_id, frontal_ref, lateral_ref, report."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for case in cases:
            record = {
                "case_id": case.case_id,
                "frontal_ref": case.frontal_ref,
                "lateral_ref": case.lateral_ref,
                "report": " ".join(case.report),
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def read_manifest(path: str | Path) -> tuple[list[StudyCase], int]:
    """Load cases from a manifest, dropping incomplete records.

    Returns (cases, skipped_count). A record is skipped when either view
    reference is missing or the report normalizes to nothing.
    """
    cases = []
    skipped = 0
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            tokens = normalize_report(record.get("report", ""))
            frontal = record.get("frontal_ref", "")
            lateral = record.get("lateral_ref", "")
            if not tokens or not frontal or not lateral:
                skipped += 1
                continue
            findings = None
            if is_synthetic_ref(frontal):
                findings = frozenset(parse_synthetic_ref(frontal).findings)
            cases.append(StudyCase(
                case_id=record["case_id"],
                frontal_ref=frontal,
                lateral_ref=lateral,
                report=tokens,
                latent_findings=findings,
            ))
    if skipped:
        logger.info("manifest %s: skipped %d incomplete records", path, skipped)
    return cases, skipped
